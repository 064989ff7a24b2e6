//! Symmetric split-step Fourier solution of the scalar NLSE
//!
//! ```text
//! i ∂E/∂z + i (α/2) E − (β₂/2) ∂²E/∂t² + γ |E|² E = 0
//! ```
//!
//! with `z` in km, `t` in ps and `|E|²` in mW. Loss and dispersion are applied
//! in the frequency domain, the Kerr phase in the time domain.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::spectrum::{bin_frequencies, Spectrum};
use super::FiberError;
use crate::signal::OpticalField;

pub const MAX_STEP_KM: f64 = 0.1;
pub const MAX_NONLINEAR_PHASE_PER_STEP: f64 = 5e-3;
const MIN_STEP_KM: f64 = 1e-9;
const FINITE_CHECK_EVERY: usize = 64;

/// Kerr coefficient.
///
/// `PerWattKm` is the usual γ in W⁻¹km⁻¹ applied to `|E|²` in mW after a
/// 1e-3 conversion. `Raw` multiplies `|E|²` (as stored, in mW) per km with no
/// conversion, for feeding coefficients in non-standard unit systems.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kerr {
    PerWattKm(f64),
    Raw(f64),
}

impl Kerr {
    /// Coefficient applied to `|E|²` in mW, per km.
    pub fn per_mw_km(self) -> f64 {
        match self {
            Kerr::PerWattKm(g) => g * 1e-3,
            Kerr::Raw(g) => g,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberParams {
    pub length_km: f64,
    pub loss_db_per_km: f64,
    pub beta2_ps2_per_km: f64,
    pub kerr: Kerr,
}

impl FiberParams {
    /// Standard single-mode fiber, anomalous dispersion (β₂ < 0 in the
    /// `i∂E/∂z − (β₂/2)∂²E/∂t² + …` convention used here; the magnitude is the
    /// published 21.7 ps²/km). The Kerr default is the conventional
    /// 1.3 W⁻¹km⁻¹; the published 3e-29 figure is available through
    /// [`Kerr::Raw`].
    pub fn ssmf(length_km: f64) -> Self {
        Self {
            length_km,
            loss_db_per_km: 0.2,
            beta2_ps2_per_km: -21.7,
            kerr: Kerr::PerWattKm(1.3),
        }
    }

    /// Dispersion-compensating fiber (γ scaled from the SSMF value by the
    /// published DCF/SSMF ratio 2.6/3).
    pub fn dcf(length_km: f64) -> Self {
        Self {
            length_km,
            loss_db_per_km: 0.6,
            beta2_ps2_per_km: 128.0,
            kerr: Kerr::PerWattKm(1.3 * 2.6 / 3.0),
        }
    }

    pub fn alpha_per_km(&self) -> f64 {
        self.loss_db_per_km * std::f64::consts::LN_10 / 10.0
    }

    pub fn power_loss_factor(&self) -> f64 {
        (-self.alpha_per_km() * self.length_km).exp()
    }
}

/// Number of equal steps the fixed step policy uses for `fiber` at the given
/// peak power.
pub fn step_count(fiber: &FiberParams, peak_power_mw: f64) -> Result<usize, FiberError> {
    if fiber.length_km <= 0.0 {
        return Ok(0);
    }
    let g = fiber.kerr.per_mw_km().abs();
    let mut h = MAX_STEP_KM;
    if g * peak_power_mw > 0.0 {
        h = h.min(MAX_NONLINEAR_PHASE_PER_STEP / (g * peak_power_mw));
    }
    if h < MIN_STEP_KM {
        return Err(FiberError::StepUnderflow {
            step_km: h,
            peak_mw: peak_power_mw,
        });
    }
    Ok((fiber.length_km / h).ceil() as usize)
}

pub fn propagate(field: &OpticalField, fiber: &FiberParams) -> Result<OpticalField, FiberError> {
    propagate_with_steps(field, fiber, None)
}

/// Split-step propagation; `steps` overrides the step policy.
pub fn propagate_with_steps(
    field: &OpticalField,
    fiber: &FiberParams,
    steps: Option<usize>,
) -> Result<OpticalField, FiberError> {
    field.check_finite()?;
    if fiber.length_km < 0.0 || fiber.loss_db_per_km < 0.0 {
        return Err(FiberError::InvalidConfig(format!(
            "fiber length {} km and loss {} dB/km must be non-negative",
            fiber.length_km, fiber.loss_db_per_km
        )));
    }
    let mut out = field.clone();
    out.ase_psd_mw_per_hz *= fiber.power_loss_factor();
    if fiber.length_km == 0.0 || field.is_empty() {
        return Ok(out);
    }
    let peak = field.samples.iter().map(|s| s.norm_sqr()).fold(0.0, f64::max);
    let n_steps = match steps {
        Some(s) => s.max(1),
        None => step_count(fiber, peak)?,
    };
    let h = fiber.length_km / n_steps as f64;
    let gamma = fiber.kerr.per_mw_km();
    let alpha = fiber.alpha_per_km();

    let n = field.len();
    // ω in rad/ps
    let omega: Vec<f64> = bin_frequencies(n, field.sample_rate_hz)
        .into_iter()
        .map(|f| 2.0 * std::f64::consts::PI * f * 1e-12)
        .collect();
    let linear = |dz: f64| -> Vec<Complex64> {
        omega
            .iter()
            .map(|w| Complex64::new(-alpha / 2.0 * dz, fiber.beta2_ps2_per_km / 2.0 * w * w * dz).exp())
            .collect()
    };
    let half = linear(h / 2.0);
    let full = linear(h);

    let mut spec = Spectrum::new(n);
    let buf = &mut out.samples;
    spec.forward(buf);
    buf.iter_mut().zip(&half).for_each(|(v, d)| *v *= d);
    for step in 0..n_steps {
        spec.inverse(buf);
        if gamma != 0.0 {
            for v in buf.iter_mut() {
                let phi = gamma * v.norm_sqr() * h;
                *v *= Complex64::from_polar(1.0, phi);
            }
        }
        if step % FINITE_CHECK_EVERY == 0 && buf.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(FiberError::NonFinite {
                step,
                z_km: (step + 1) as f64 * h,
            });
        }
        spec.forward(buf);
        let op = if step + 1 == n_steps { &half } else { &full };
        buf.iter_mut().zip(op).for_each(|(v, d)| *v *= d);
    }
    spec.inverse(buf);
    if buf.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(FiberError::NonFinite {
            step: n_steps,
            z_km: fiber.length_km,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(n: usize, dt_ps: f64, t0_ps: f64, peak_mw: f64) -> OpticalField {
        let samples = (0..n)
            .map(|i| {
                let t = (i as f64 - n as f64 / 2.0) * dt_ps;
                Complex64::new(peak_mw.sqrt() * (-t * t / (2.0 * t0_ps * t0_ps)).exp(), 0.0)
            })
            .collect();
        OpticalField::new(samples, 1e12 / dt_ps, 1550.0)
    }

    fn rms_width_ps(f: &OpticalField) -> f64 {
        let dt = 1e12 / f.sample_rate_hz;
        let p: Vec<f64> = f.samples.iter().map(|s| s.norm_sqr()).collect();
        let total: f64 = p.iter().sum();
        let mean: f64 = p.iter().enumerate().map(|(i, v)| i as f64 * v).sum::<f64>() / total;
        let var: f64 = p
            .iter()
            .enumerate()
            .map(|(i, v)| (i as f64 - mean).powi(2) * v)
            .sum::<f64>()
            / total;
        var.sqrt() * dt
    }

    fn rel_rms(a: &[Complex64], b: &[Complex64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
        let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
        (num / den).sqrt()
    }

    #[test]
    fn pure_attenuation() {
        let f = gaussian(256, 1.0, 20.0, 5.0);
        let fiber = FiberParams {
            length_km: 12.5,
            loss_db_per_km: 0.2,
            beta2_ps2_per_km: 0.0,
            kerr: Kerr::PerWattKm(0.0),
        };
        let out = propagate(&f, &fiber).unwrap();
        let scale = 10f64.powf(-0.2 * 12.5 / 20.0);
        for (a, b) in out.samples.iter().zip(&f.samples) {
            assert!((a - b * scale).norm() < 1e-12);
        }
    }

    #[test]
    fn forty_five_km_is_nine_db() {
        let f = gaussian(512, 1.0, 30.0, 10.0);
        let out = propagate(&f, &FiberParams::ssmf(45.0)).unwrap();
        let db = 10.0 * (f.energy() / out.energy()).log10();
        assert!((db - 9.0).abs() < 1e-9, "{db}");
    }

    #[test]
    fn gaussian_dispersion_matches_analytic_width() {
        let t0 = 10.0;
        let f = gaussian(8192, 0.25, t0, 1.0);
        let fiber = FiberParams {
            length_km: 50.0,
            loss_db_per_km: 0.0,
            beta2_ps2_per_km: 21.7,
            kerr: Kerr::PerWattKm(0.0),
        };
        let out = propagate(&f, &fiber).unwrap();
        let ratio = rms_width_ps(&out) / rms_width_ps(&f);
        let analytic = (1.0 + (21.7 * 50.0 / (t0 * t0)).powi(2)).sqrt();
        assert!((ratio / analytic - 1.0).abs() < 5e-3, "{ratio} vs {analytic}");
    }

    #[test]
    fn kerr_conserves_energy_lossless() {
        let f = gaussian(1024, 1.0, 15.0, 200.0);
        let fiber = FiberParams {
            length_km: 20.0,
            loss_db_per_km: 0.0,
            beta2_ps2_per_km: 21.7,
            kerr: Kerr::PerWattKm(1.3),
        };
        let out = propagate(&f, &fiber).unwrap();
        assert!((out.energy() / f.energy() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn linear_superposition() {
        let a = gaussian(1024, 1.0, 15.0, 3.0);
        let mut b = gaussian(1024, 1.0, 6.0, 1.0);
        b.samples.rotate_left(200);
        let sum = OpticalField::new(
            a.samples.iter().zip(&b.samples).map(|(x, y)| x + y).collect(),
            a.sample_rate_hz,
            1550.0,
        );
        let mut fiber = FiberParams::ssmf(30.0);
        fiber.kerr = Kerr::PerWattKm(0.0);
        let pa = propagate(&a, &fiber).unwrap();
        let pb = propagate(&b, &fiber).unwrap();
        let ps = propagate(&sum, &fiber).unwrap();
        let expect: Vec<Complex64> = pa.samples.iter().zip(&pb.samples).map(|(x, y)| x + y).collect();
        assert!(rel_rms(&ps.samples, &expect) < 1e-9);
    }

    #[test]
    fn step_halving_converges() {
        let f = gaussian(2048, 2.5, 20.0, 20.0);
        let fiber = FiberParams::ssmf(45.0);
        let n = step_count(&fiber, 20.0).unwrap();
        let coarse = propagate_with_steps(&f, &fiber, Some(n)).unwrap();
        let fine = propagate_with_steps(&f, &fiber, Some(2 * n)).unwrap();
        let e = rel_rms(&coarse.samples, &fine.samples);
        assert!(e < 1e-4, "{e}");
    }

    #[test]
    fn nonfinite_input_rejected() {
        let mut f = gaussian(64, 1.0, 5.0, 1.0);
        f.samples[3] = Complex64::new(f64::NAN, 0.0);
        assert!(propagate(&f, &FiberParams::ssmf(1.0)).is_err());
    }

    #[test]
    fn step_underflow_reported() {
        let fiber = FiberParams::ssmf(1.0);
        assert!(matches!(
            step_count(&fiber, 1e12),
            Err(FiberError::StepUnderflow { .. })
        ));
    }
}
