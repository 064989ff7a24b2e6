//! Time-delay reservoir: masking, Lang-Kobayashi integration and node readout.

mod geometry;
mod laser;
mod nodes;
mod response;

use serde::{Deserialize, Serialize};

pub use geometry::{make_mask, mask_and_stretch, Mask, NodeGeometry};
pub use laser::{
    build_injection, integrate, integrate_with, simulated_threshold_a, solitary_steady_photons, InjectionParams,
    LaserParams, RunControl, StepState, Trajectory,
};
pub use nodes::sample_nodes;
pub use response::ReservoirResponse;

use crate::signal::Rng;

#[derive(Debug, thiserror::Error)]
pub enum ReservoirError {
    #[error("geometry: {0}")]
    Geometry(String),
    #[error("integration diverged at step {step} (t = {t_ns} ns)")]
    Diverged { step: usize, t_ns: f64 },
    #[error("trajectory holds {found} samples, {expected} needed")]
    ShortTrajectory { expected: usize, found: usize },
    #[error("input has {found} samples per bit, geometry expects {expected}")]
    InputShape { expected: usize, found: usize },
}

/// Processing pipeline applied to the per-bit samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReservoirMode {
    /// Masked input, delayed feedback.
    Rc,
    /// Masked input, no feedback.
    Elm,
    /// Unmasked input, delayed feedback.
    NoMask,
    /// No reservoir: the samples themselves are the features.
    Bypass,
}

impl ReservoirMode {
    pub const ALL: [ReservoirMode; 4] = [Self::Bypass, Self::NoMask, Self::Elm, Self::Rc];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Rc => "rc",
            Self::Elm => "elm",
            Self::NoMask => "no_mask",
            Self::Bypass => "bypass",
        }
    }
}

impl std::str::FromStr for ReservoirMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown mode {s:?} (rc, elm, no_mask, bypass)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReservoirConfig {
    pub geometry: NodeGeometry,
    pub laser: LaserParams,
    pub injection: InjectionParams,
    #[serde(default)]
    pub control: RunControl,
    /// Sub-samples averaged per node; `None` averages every step.
    #[serde(default)]
    pub avg_factor: Option<usize>,
}

impl ReservoirConfig {
    pub fn short() -> Self {
        Self {
            geometry: NodeGeometry::short(),
            laser: LaserParams::default(),
            injection: InjectionParams::default(),
            control: RunControl::default(),
            avg_factor: None,
        }
    }

    pub fn experimental() -> Self {
        Self {
            geometry: NodeGeometry::experimental(),
            ..Self::short()
        }
    }
}

/// Per-bit node responses for `input` (rows = bits, `j` columns).
pub fn run_reservoir(
    input: &ReservoirResponse,
    mode: ReservoirMode,
    cfg: &ReservoirConfig,
    mask: &Mask,
    rng: &mut Rng,
) -> Result<ReservoirResponse, ReservoirError> {
    let geom = &cfg.geometry;
    if input.cols() != geom.j_samples {
        return Err(ReservoirError::InputShape {
            expected: geom.j_samples,
            found: input.cols(),
        });
    }
    let mut injection = cfg.injection;
    let ones;
    let mask = match mode {
        ReservoirMode::Bypass => return Ok(input.clone()),
        ReservoirMode::Rc => mask,
        ReservoirMode::Elm => {
            injection.k_f = 0.0;
            mask
        }
        ReservoirMode::NoMask => {
            ones = Mask::ones(geom.k_nodes);
            &ones
        }
    };
    let drive = mask_and_stretch(input.values(), geom, mask)?;
    let bits = input.rows();
    let mut acc = nodes::NodeAccumulator::new(geom, cfg.avg_factor, bits)?;
    integrate_with(&drive, &cfg.laser, &injection, geom, &cfg.control, rng, |s| acc.push(s.step, s.power))?;
    acc.finish(bits)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_input(bits: usize, j: usize, seed: u64) -> ReservoirResponse {
        let mut rng = Rng::new(seed);
        ReservoirResponse::from_row_major(bits, j, (0..bits * j).map(|_| rng.uniform()).collect())
    }

    fn rel_rms(a: &[f64], b: &[f64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
        let den: f64 = b.iter().map(|y| y * y).sum();
        (num / den).sqrt()
    }

    #[test]
    fn bypass_returns_input() {
        let input = random_input(10, 4, 1);
        let cfg = ReservoirConfig::short();
        let mask = make_mask(32, &mut Rng::new(2));
        let out = run_reservoir(&input, ReservoirMode::Bypass, &cfg, &mask, &mut Rng::new(3)).unwrap();
        assert_eq!(out, input);
    }

    #[test]
    fn elm_is_rc_without_feedback() {
        let input = random_input(20, 4, 1);
        let cfg = ReservoirConfig::short();
        let mask = make_mask(32, &mut Rng::new(2));
        let elm = run_reservoir(&input, ReservoirMode::Elm, &cfg, &mask, &mut Rng::new(3)).unwrap();
        let mut no_fb = cfg;
        no_fb.injection.k_f = 0.0;
        let rc = run_reservoir(&input, ReservoirMode::Rc, &no_fb, &mask, &mut Rng::new(3)).unwrap();
        assert_eq!(elm, rc);
    }

    #[test]
    fn noiseless_runs_ignore_seed() {
        let input = random_input(20, 4, 1);
        let mut cfg = ReservoirConfig::short();
        cfg.laser = cfg.laser.noiseless();
        let mask = make_mask(32, &mut Rng::new(2));
        let a = run_reservoir(&input, ReservoirMode::Rc, &cfg, &mask, &mut Rng::new(3)).unwrap();
        let b = run_reservoir(&input, ReservoirMode::Rc, &cfg, &mask, &mut Rng::new(99)).unwrap();
        assert_eq!(a, b);
        assert!(a.is_finite());
    }

    #[test]
    fn noisy_runs_repeat_for_a_seed() {
        let input = random_input(20, 4, 1);
        let cfg = ReservoirConfig::short();
        let mask = make_mask(32, &mut Rng::new(2));
        let a = run_reservoir(&input, ReservoirMode::Rc, &cfg, &mask, &mut Rng::new(3)).unwrap();
        let b = run_reservoir(&input, ReservoirMode::Rc, &cfg, &mask, &mut Rng::new(3)).unwrap();
        let c = run_reservoir(&input, ReservoirMode::Rc, &cfg, &mask, &mut Rng::new(4)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn halving_dt_converges() {
        let input = random_input(40, 4, 5);
        let mask = make_mask(32, &mut Rng::new(6));
        for (df, kf) in [(-30.0, 0.2), (-10.0, 0.1), (0.0, 0.2), (5.0, 0.05), (30.0, 0.0)] {
            let mut cfg = ReservoirConfig::short();
            cfg.laser = cfg.laser.noiseless();
            cfg.injection.delta_f_ghz = df;
            cfg.injection.k_f = kf;
            let coarse = run_reservoir(&input, ReservoirMode::Rc, &cfg, &mask, &mut Rng::new(0)).unwrap();
            cfg.geometry = cfg.geometry.refined(2);
            let fine = run_reservoir(&input, ReservoirMode::Rc, &cfg, &mask, &mut Rng::new(0)).unwrap();
            let e = rel_rms(coarse.values(), fine.values());
            assert!(e < 1e-3, "Δf = {df}, k_f = {kf}: {e}");
        }
    }

    #[test]
    fn input_shape_checked() {
        let cfg = ReservoirConfig::short();
        let mask = make_mask(32, &mut Rng::new(2));
        assert!(matches!(
            run_reservoir(&random_input(4, 8, 0), ReservoirMode::Rc, &cfg, &mask, &mut Rng::new(0)),
            Err(ReservoirError::InputShape { .. })
        ));
    }

    #[test]
    fn mode_names_round_trip() {
        for m in ReservoirMode::ALL {
            assert_eq!(m.name().parse::<ReservoirMode>().unwrap(), m);
        }
    }
}
