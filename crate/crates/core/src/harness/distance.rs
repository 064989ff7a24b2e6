use std::io::Write;
use std::path::Path;

use super::config::{ExperimentConfig, PipelineMode};
use super::pipeline::{run_pipeline_with, LinkCache};
use super::HarnessError;
use crate::fiber::LinkKind;

/// Longest distance meeting the BER target for one mode, with every
/// evaluated point as `(z_km, median BER)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceResult {
    pub mode: PipelineMode,
    pub z_star_km: f64,
    pub ber_target: f64,
    pub evaluations: Vec<(f64, f64)>,
}

/// Relative transmission-distance gain of reaching `to` instead of `from`.
pub fn relative_gain(from_km: f64, to_km: f64) -> f64 {
    (to_km - from_km) / from_km
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Median over repetitions of the BER at `z_km`; masked modes take the best
/// of their mask trials within each repetition.
fn median_ber(cfg: &ExperimentConfig, z_km: f64, cache: &LinkCache) -> Result<f64, HarnessError> {
    let mut at = cfg.clone();
    at.link.total_ssmf_km = z_km;
    at.validate()?;
    let masks = if cfg.mode.uses_mask() { cfg.n_mask_trials } else { 1 };
    let mut bers = Vec::with_capacity(cfg.repetitions);
    for rep in 0..cfg.repetitions {
        let mut best = f64::INFINITY;
        for m in 0..masks {
            best = best.min(run_pipeline_with(&at, rep, m, cache)?.ber);
        }
        bers.push(best);
    }
    Ok(median(&mut bers))
}

/// Bisection for the largest SSMF length in `[z_min, z_max]` whose median
/// BER stays at or below the target, assuming BER grows with distance.
/// Long-haul links only take whole spans, so their step is clamped to one
/// span.
pub fn distance_to_fec(cfg: &ExperimentConfig, mode: PipelineMode) -> Result<DistanceResult, HarnessError> {
    let search = &cfg.distance;
    let mut cfg = cfg.clone();
    cfg.mode = mode;
    let (mut lo, mut hi) = (search.z_min_km, search.z_max_km);
    if !(lo >= 0.0 && hi > lo) || search.tolerance_km <= 0.0 {
        return Err(HarnessError::Distance(format!(
            "invalid search range [{lo}, {hi}] km with tolerance {} km",
            search.tolerance_km
        )));
    }
    let quantum = match cfg.link.kind {
        LinkKind::LongHaul => cfg.link.span_km,
        LinkKind::ShortReach => 0.0,
    };
    let snap = |z: f64| if quantum > 0.0 { (z / quantum).round() * quantum } else { z };
    let (lo_s, hi_s) = (snap(lo), snap(hi));
    if quantum > 0.0 && (lo_s != lo || hi_s != hi) {
        return Err(HarnessError::Distance(format!("range ends must be multiples of the {quantum} km span")));
    }
    let cache = LinkCache::new(cfg.repetitions);
    let mut evaluations = Vec::new();
    let mut eval = |z: f64| -> Result<f64, HarnessError> {
        let b = median_ber(&cfg, z, &cache)?;
        evaluations.push((z, b));
        Ok(b)
    };
    let target = search.ber_target;
    let z_star = if eval(hi)? <= target {
        hi
    } else if eval(lo)? > target {
        return Err(HarnessError::Distance(format!(
            "{mode}: BER target {target} not met even at {lo} km"
        )));
    } else {
        let tol = search.tolerance_km.max(quantum);
        while hi - lo > tol {
            let mut mid = snap(0.5 * (lo + hi));
            if mid <= lo || mid >= hi {
                // spans are coarser than the bracket midpoint
                mid = lo + quantum;
                if mid >= hi {
                    break;
                }
            }
            if eval(mid)? <= target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    Ok(DistanceResult {
        mode,
        z_star_km: z_star,
        ber_target: target,
        evaluations,
    })
}

/// `mode,z_km,median_ber,meets_target` for every evaluation, then one
/// `z_star` row per mode.
pub fn write_distance_csv(path: &Path, results: &[DistanceResult]) -> Result<(), HarnessError> {
    let mut text = format!("# tdrc distance schema {}\nmode,kind,z_km,median_ber,meets_target\n", super::SCHEMA_VERSION);
    for r in results {
        for &(z, b) in &r.evaluations {
            text.push_str(&format!("{},eval,{z},{b},{}\n", r.mode, b <= r.ber_target));
        }
    }
    for r in results {
        text.push_str(&format!("{},z_star,{},,\n", r.mode, r.z_star_km));
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(text.as_bytes()))
        .map_err(|e| HarnessError::io(path, e))
}
