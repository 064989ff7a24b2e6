//! EDFA gain with ASE, Gaussian optical filtering, attenuation and OSNR control.
//!
//! OSNR bookkeeping uses `OpticalField::ase_psd_mw_per_hz`, the
//! single-polarization noise density at the carrier. The signal part of the
//! power is taken as `mean|E|² − psd · fs`, which is exact for white noise
//! occupying the whole simulated band.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::spectrum::{bin_frequencies, Spectrum};
use super::FiberError;
use crate::signal::{db_to_linear, linear_to_db, OpticalField, Rng, PLANCK_J_S, SPEED_OF_LIGHT_M_PER_S};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplifierParams {
    pub gain_db: f64,
    /// `-inf` gives a noiseless amplifier.
    #[serde(with = "crate::signal::ext_float")]
    pub noise_figure_db: f64,
}

impl AmplifierParams {
    pub fn edfa() -> Self {
        Self {
            gain_db: 30.2,
            noise_figure_db: 5.0,
        }
    }

    pub fn noiseless(gain_db: f64) -> Self {
        Self {
            gain_db,
            noise_figure_db: f64::NEG_INFINITY,
        }
    }

    pub fn gain_linear(&self) -> f64 {
        db_to_linear(self.gain_db)
    }

    /// ASE density per polarization in mW/Hz: `(G − 1) · n_sp · hν` with
    /// `n_sp = NF / 2`.
    pub fn ase_psd_mw_per_hz(&self, carrier_hz: f64) -> f64 {
        let n_sp = db_to_linear(self.noise_figure_db) / 2.0;
        (self.gain_linear() - 1.0).max(0.0) * n_sp * PLANCK_J_S * carrier_hz * 1e3
    }
}

pub fn amplify(field: &OpticalField, amp: &AmplifierParams, rng: &mut Rng) -> OpticalField {
    let g = amp.gain_linear();
    let psd = amp.ase_psd_mw_per_hz(field.carrier_frequency_hz());
    let sigma = (psd * field.sample_rate_hz).sqrt();
    let root_g = g.sqrt();
    let samples = field
        .samples
        .iter()
        .map(|&s| {
            let mut v = s * root_g;
            if sigma > 0.0 {
                v += rng.complex_normal() * sigma;
            }
            v
        })
        .collect();
    OpticalField {
        samples,
        sample_rate_hz: field.sample_rate_hz,
        center_wavelength_nm: field.center_wavelength_nm,
        ase_psd_mw_per_hz: field.ase_psd_mw_per_hz * g + psd,
    }
}

/// Lossy element with no added noise.
pub fn attenuate(field: &OpticalField, loss_db: f64) -> OpticalField {
    let p = db_to_linear(-loss_db);
    let a = p.sqrt();
    OpticalField {
        samples: field.samples.iter().map(|s| s * a).collect(),
        sample_rate_hz: field.sample_rate_hz,
        center_wavelength_nm: field.center_wavelength_nm,
        ase_psd_mw_per_hz: field.ase_psd_mw_per_hz * p,
    }
}

/// Gaussian band-pass centered on the carrier; power gain is 1/2 at
/// `±bw_3db_hz / 2`.
pub fn optical_filter(field: &OpticalField, bw_3db_hz: f64) -> OpticalField {
    let half = bw_3db_hz / 2.0;
    let response: Vec<Complex64> = bin_frequencies(field.len(), field.sample_rate_hz)
        .into_iter()
        .map(|f| Complex64::new((-(std::f64::consts::LN_2 / 2.0) * (f / half).powi(2)).exp(), 0.0))
        .collect();
    let mut out = field.clone();
    if !out.is_empty() {
        Spectrum::new(out.len()).filter(&mut out.samples, &response);
    }
    out
}

/// 0.1 nm expressed in Hz at the given wavelength.
pub fn reference_bandwidth_hz(wavelength_nm: f64) -> f64 {
    let lambda = wavelength_nm * 1e-9;
    SPEED_OF_LIGHT_M_PER_S * 0.1e-9 / (lambda * lambda)
}

fn signal_power_mw(field: &OpticalField) -> f64 {
    field.average_power_mw() - field.ase_psd_mw_per_hz * field.sample_rate_hz
}

/// OSNR in dB over `reference_bw_hz`; `+inf` for a noise-free field.
pub fn osnr_db(field: &OpticalField, reference_bw_hz: f64) -> f64 {
    let noise = field.ase_psd_mw_per_hz * reference_bw_hz;
    if noise <= 0.0 {
        return f64::INFINITY;
    }
    linear_to_db(signal_power_mw(field) / noise)
}

/// Add white complex noise so the OSNR over `reference_bw_hz` equals
/// `target_osnr_db`.
pub fn degrade_osnr(
    field: &OpticalField,
    target_osnr_db: f64,
    reference_bw_hz: f64,
    rng: &mut Rng,
) -> Result<OpticalField, FiberError> {
    let current = osnr_db(field, reference_bw_hz);
    if target_osnr_db > current + 1e-9 {
        return Err(FiberError::UnreachableOsnr {
            target_db: target_osnr_db,
            current_db: current,
        });
    }
    let target_psd = signal_power_mw(field) / (reference_bw_hz * db_to_linear(target_osnr_db));
    let mut added = (target_psd - field.ase_psd_mw_per_hz).max(0.0);
    if added <= 1e-9 * field.ase_psd_mw_per_hz {
        added = 0.0;
    }
    let sigma = (added * field.sample_rate_hz).sqrt();
    let mut out = field.clone();
    if sigma > 0.0 {
        out.samples
            .iter_mut()
            .for_each(|s| *s += rng.complex_normal() * sigma);
    }
    out.ase_psd_mw_per_hz = field.ase_psd_mw_per_hz + added;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cw(n: usize, power_mw: f64) -> OpticalField {
        OpticalField::new(vec![Complex64::new(power_mw.sqrt(), 0.0); n], 4e11, 1550.0)
    }

    fn tone(n: usize, f_hz: f64, fs: f64) -> OpticalField {
        let samples = (0..n)
            .map(|i| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * f_hz * i as f64 / fs))
            .collect();
        OpticalField::new(samples, fs, 1550.0)
    }

    #[test]
    fn noiseless_gain_factor() {
        let amp = AmplifierParams::noiseless(30.2);
        assert!((amp.gain_linear() - 1047.13).abs() < 0.01);
        let out = amplify(&cw(128, 0.01), &amp, &mut Rng::new(0));
        assert!((out.average_power_mw() / 0.01 - 1047.128_548).abs() < 1e-3);
    }

    #[test]
    fn unity_gain_noiseless_is_identity() {
        let f = cw(64, 2.0);
        let out = amplify(&f, &AmplifierParams::noiseless(0.0), &mut Rng::new(0));
        assert_eq!(out.samples, f.samples);
    }

    #[test]
    fn ase_power_matches_psd_integral() {
        let amp = AmplifierParams::edfa();
        let zero = OpticalField::new(vec![Complex64::default(); 1 << 16], 4e11, 1550.0);
        let expect = amp.ase_psd_mw_per_hz(zero.carrier_frequency_hz()) * zero.sample_rate_hz;
        let mut rng = Rng::new(10);
        for trial in 0..10 {
            let out = amplify(&zero, &amp, &mut rng);
            let p = out.average_power_mw();
            assert!((p / expect - 1.0).abs() < 0.05, "trial {trial}: {p} vs {expect}");
        }
    }

    #[test]
    fn filter_center_and_edge() {
        let fs = 4e11;
        let n = 4000;
        let bw = 40e9;
        let dc = optical_filter(&cw(n, 1.0), bw);
        assert!((dc.average_power_mw() - 1.0).abs() < 1e-12);
        // 20 GHz = bin 200 exactly
        let edge = optical_filter(&tone(n, bw / 2.0, fs), bw);
        assert!((edge.average_power_mw() - 0.5).abs() < 1e-3);
    }

    #[test]
    fn long_haul_filter_width() {
        let link = crate::fiber::LinkConfig::long_haul(4000.0);
        assert_eq!(link.optical_filter_bw_hz(), 40e9);
    }

    #[test]
    fn osnr_at_target_adds_nothing() {
        let f = cw(1 << 14, 10.0);
        let bref = reference_bandwidth_hz(1550.0);
        let once = degrade_osnr(&f, 30.0, bref, &mut Rng::new(1)).unwrap();
        let current = osnr_db(&once, bref);
        assert!((current - 30.0).abs() < 0.05, "{current}");
        let again = degrade_osnr(&once, current, bref, &mut Rng::new(2)).unwrap();
        assert_eq!(again.samples, once.samples);
    }

    #[test]
    fn osnr_definition_at_36_6_db() {
        let f = cw(1 << 16, 10.0);
        let bref = reference_bandwidth_hz(1550.0);
        assert!((bref - 12.478e9).abs() < 1e7);
        let out = degrade_osnr(&f, 36.6, bref, &mut Rng::new(3)).unwrap();
        let psd = 10.0 / (bref * db_to_linear(36.6));
        assert!((out.ase_psd_mw_per_hz / psd - 1.0).abs() < 1e-12);
        // measured from the actual added noise
        let noise_power: f64 = out
            .samples
            .iter()
            .zip(&f.samples)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            / f.len() as f64;
        let measured = linear_to_db(10.0 / (noise_power / f.sample_rate_hz * bref));
        assert!((measured - 36.6).abs() < 0.1, "{measured}");
    }

    #[test]
    fn unreachable_osnr() {
        let f = cw(256, 1.0);
        let bref = reference_bandwidth_hz(1550.0);
        let noisy = degrade_osnr(&f, 15.0, bref, &mut Rng::new(1)).unwrap();
        assert!(matches!(
            degrade_osnr(&noisy, 20.0, bref, &mut Rng::new(1)),
            Err(FiberError::UnreachableOsnr { .. })
        ));
    }

    #[test]
    fn successive_degradations_add_variances() {
        let n = 4096;
        let f = cw(n, 10.0);
        let bref = reference_bandwidth_hz(1550.0);
        let noise_power = |g: &OpticalField| {
            g.samples
                .iter()
                .zip(&f.samples)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                / n as f64
        };
        let (mut two, mut one) = (0.0, 0.0);
        let mut rng = Rng::new(77);
        for _ in 0..20 {
            let x = degrade_osnr(&f, 30.0, bref, &mut rng).unwrap();
            let y = degrade_osnr(&x, 22.0, bref, &mut rng).unwrap();
            two += noise_power(&y);
            one += noise_power(&degrade_osnr(&f, 22.0, bref, &mut rng).unwrap());
        }
        assert!((two / one - 1.0).abs() < 0.05, "{two} vs {one}");
    }
}
