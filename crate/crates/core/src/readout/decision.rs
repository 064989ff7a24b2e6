use serde::{Deserialize, Serialize};

use super::ReadoutError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Threshold {
    Fixed(f64),
    Optimize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub bits: Vec<u8>,
    pub errors: usize,
    pub ber: f64,
    pub threshold: f64,
}

/// Smallest non-zero BER measurable on `n` bits.
pub fn min_resolvable_ber(n: usize) -> f64 {
    1.0 / n as f64
}

/// Comparator: 1 iff `soft > threshold`.
pub fn decide(soft: &[f64], threshold: f64) -> Vec<u8> {
    soft.iter().map(|&s| (s > threshold) as u8).collect()
}

/// Threshold minimizing errors over the midpoints between consecutive
/// distinct sorted soft values; ties go to the lowest threshold.
pub fn optimal_threshold(soft: &[f64], truth: &[u8]) -> Result<(f64, usize), ReadoutError> {
    if soft.is_empty() {
        return Err(ReadoutError::Empty);
    }
    if soft.len() != truth.len() {
        return Err(ReadoutError::LengthMismatch(truth.len(), soft.len()));
    }
    if let Some(i) = soft.iter().position(|s| !s.is_finite()) {
        return Err(ReadoutError::NonFinite(i));
    }
    let mut order: Vec<usize> = (0..soft.len()).collect();
    order.sort_by(|&a, &b| soft[a].total_cmp(&soft[b]));
    let zeros_total = truth.iter().filter(|&&t| t == 0).count();
    // errors when everything below the cut reads 0: ones below + zeros above
    let mut ones_below = 0usize;
    let mut zeros_below = 0usize;
    let mut best: Option<(f64, usize)> = None;
    for w in 0..order.len() - 1 {
        let i = order[w];
        if truth[i] == 1 {
            ones_below += 1;
        } else {
            zeros_below += 1;
        }
        let (lo, hi) = (soft[i], soft[order[w + 1]]);
        if lo == hi {
            continue;
        }
        let errors = ones_below + (zeros_total - zeros_below);
        if best.is_none_or(|(_, e)| errors < e) {
            best = Some((0.5 * (lo + hi), errors));
        }
    }
    Ok(best.unwrap_or_else(|| {
        // all values equal: every bit reads 0
        let ones = truth.len() - zeros_total;
        (soft[0], ones)
    }))
}

pub fn decide_and_ber(soft: &[f64], truth: &[u8], threshold: Threshold) -> Result<Decision, ReadoutError> {
    if soft.is_empty() {
        return Err(ReadoutError::Empty);
    }
    if soft.len() != truth.len() {
        return Err(ReadoutError::LengthMismatch(truth.len(), soft.len()));
    }
    let t = match threshold {
        Threshold::Fixed(t) => t,
        Threshold::Optimize => optimal_threshold(soft, truth)?.0,
    };
    let bits = decide(soft, t);
    let errors = bits.iter().zip(truth).filter(|(a, b)| a != b).count();
    Ok(Decision {
        ber: errors as f64 / soft.len() as f64,
        bits,
        errors,
        threshold: t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::Rng;

    #[test]
    fn exact_soft_values_decode_perfectly() {
        let truth = vec![0, 1, 1, 0, 1, 0, 0, 1];
        let soft: Vec<f64> = truth.iter().map(|&b| b as f64).collect();
        for t in [0.01, 0.5, 0.99] {
            assert_eq!(decide_and_ber(&soft, &truth, Threshold::Fixed(t)).unwrap().ber, 0.0);
        }
        let d = decide_and_ber(&soft, &truth, Threshold::Optimize).unwrap();
        assert_eq!(d.ber, 0.0);
        assert_eq!(d.threshold, 0.5);
    }

    #[test]
    fn measurement_floors() {
        // one error in the 10240-bit validation quarter, or in a 40960-bit test stream
        assert!((min_resolvable_ber(40960 / 4) - 9.8e-5).abs() < 0.05e-5);
        assert!((min_resolvable_ber(40960) - 2.4e-5).abs() < 0.05e-5);
    }

    #[test]
    fn matches_exhaustive_midpoint_scan() {
        let mut rng = Rng::new(31);
        for _ in 0..20 {
            let n = 1000;
            let truth: Vec<u8> = (0..n).map(|_| (rng.uniform() < 0.5) as u8).collect();
            let soft: Vec<f64> = truth
                .iter()
                .map(|&b| b as f64 + 0.6 * rng.normal())
                .map(|v| (v * 20.0).round() / 20.0)
                .collect();
            let mut sorted = soft.clone();
            sorted.sort_by(f64::total_cmp);
            sorted.dedup();
            let mut best = (f64::NAN, usize::MAX);
            for w in sorted.windows(2) {
                let t = 0.5 * (w[0] + w[1]);
                let e = soft
                    .iter()
                    .zip(&truth)
                    .filter(|(&s, &b)| ((s > t) as u8) != b)
                    .count();
                if e < best.1 {
                    best = (t, e);
                }
            }
            let (t, e) = optimal_threshold(&soft, &truth).unwrap();
            assert_eq!(e, best.1);
            assert_eq!(t, best.0);
        }
    }

    #[test]
    fn empty_input_rejected() {
        assert!(matches!(
            decide_and_ber(&[], &[], Threshold::Optimize),
            Err(ReadoutError::Empty)
        ));
    }
}
