//! PIN photodetection and the receiver's electrical low-pass filter.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::spectrum::{bin_frequencies, filter_real};
use crate::signal::{ElectricalWaveform, OpticalField, Rng, ELEMENTARY_CHARGE_C};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterKind {
    Bessel,
    Butterworth,
}

/// All-pole analog low-pass mapped to discrete time by the bilinear
/// transform, pre-warped so the −3 dB point lands exactly on `cutoff_hz`.
///
/// The filter is applied in the frequency domain (circular steady state),
/// and its DC group delay is removed so bit timing is preserved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElectricalFilter {
    pub kind: FilterKind,
    pub order: usize,
    pub cutoff_hz: f64,
}

impl ElectricalFilter {
    /// Normalized analog prototype with |H(j1)|² = 1/2.
    fn prototype(&self) -> impl Fn(Complex64) -> Complex64 {
        let order = self.order;
        let kind = self.kind;
        let poly = bessel_polynomial(order);
        let w3 = if kind == FilterKind::Bessel { bessel_3db(&poly) } else { 1.0 };
        let poles: Vec<Complex64> = (0..order)
            .map(|k| {
                let n = order as f64;
                Complex64::from_polar(1.0, std::f64::consts::PI * (2.0 * k as f64 + n + 1.0) / (2.0 * n))
            })
            .collect();
        move |s: Complex64| match kind {
            FilterKind::Bessel => poly[0] / eval_poly(&poly, s * w3),
            FilterKind::Butterworth => poles
                .iter()
                .fold(Complex64::new(1.0, 0.0), |acc, p| acc / (s - p)),
        }
    }

    fn digital(&self, fs: f64) -> impl Fn(f64) -> Complex64 {
        let proto = self.prototype();
        let pi = std::f64::consts::PI;
        let warp = (pi * self.cutoff_hz / fs).tan();
        move |f_hz: f64| {
            let x = (pi * f_hz / fs).tan() / warp;
            if !x.is_finite() {
                return Complex64::default();
            }
            proto(Complex64::new(0.0, x))
        }
    }

    /// Digital frequency response at `f_hz` for sample rate `fs`, without
    /// delay compensation.
    pub fn raw_response(&self, f_hz: f64, fs: f64) -> Complex64 {
        self.digital(fs)(f_hz)
    }

    /// DC group delay in seconds.
    pub fn group_delay_s(&self, fs: f64) -> f64 {
        let df = self.cutoff_hz * 1e-6;
        -self.raw_response(df, fs).arg() / (2.0 * std::f64::consts::PI * df)
    }

    /// Delay-compensated response on the FFT bin grid.
    pub fn response(&self, n: usize, fs: f64) -> Vec<Complex64> {
        let tau = self.group_delay_s(fs);
        let h = self.digital(fs);
        bin_frequencies(n, fs)
            .into_iter()
            .map(|f| {
                h(f)
                    * Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * f * tau)
            })
            .collect()
    }

    pub fn apply(&self, w: &ElectricalWaveform) -> ElectricalWaveform {
        if w.is_empty() {
            return w.clone();
        }
        let response = self.response(w.len(), w.sample_rate_hz);
        ElectricalWaveform {
            samples: filter_real(&w.samples, &response),
            sample_rate_hz: w.sample_rate_hz,
            normalized: false,
        }
    }
}

/// Reverse Bessel polynomial coefficients, lowest order first.
fn bessel_polynomial(order: usize) -> Vec<f64> {
    let mut prev = vec![1.0];
    let mut cur = vec![1.0, 1.0];
    if order == 0 {
        return prev;
    }
    for n in 2..=order {
        let mut next = vec![0.0; n + 1];
        for (i, c) in cur.iter().enumerate() {
            next[i] += (2 * n - 1) as f64 * c;
        }
        for (i, c) in prev.iter().enumerate() {
            next[i + 2] += c;
        }
        prev = cur;
        cur = next;
    }
    cur
}

fn eval_poly(coeffs: &[f64], s: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::default(), |acc, &c| acc * s + c)
}

/// Frequency where the unit-delay Bessel prototype is 3 dB down.
fn bessel_3db(poly: &[f64]) -> f64 {
    let mag2 = |w: f64| (poly[0] / eval_poly(poly, Complex64::new(0.0, w))).norm_sqr();
    let (mut lo, mut hi) = (1e-3, 100.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mag2(mid) > 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorParams {
    pub responsivity_a_per_w: f64,
    /// Input-referred thermal noise current density.
    pub thermal_noise_pa_per_sqrt_hz: f64,
    pub dark_current_na: f64,
    pub shot_noise: bool,
    pub filter_kind: FilterKind,
    pub filter_order: usize,
    pub cutoff_fraction_of_rate: f64,
    pub bit_rate_bps: u64,
}

impl DetectorParams {
    pub fn new(bit_rate_bps: u64) -> Self {
        Self {
            responsivity_a_per_w: 0.9,
            thermal_noise_pa_per_sqrt_hz: 10.0,
            dark_current_na: 5.0,
            shot_noise: true,
            filter_kind: FilterKind::Bessel,
            filter_order: 4,
            cutoff_fraction_of_rate: 0.8,
            bit_rate_bps,
        }
    }

    pub fn noiseless(mut self) -> Self {
        self.thermal_noise_pa_per_sqrt_hz = 0.0;
        self.dark_current_na = 0.0;
        self.shot_noise = false;
        self
    }

    pub fn filter(&self) -> ElectricalFilter {
        ElectricalFilter {
            kind: self.filter_kind,
            order: self.filter_order,
            cutoff_hz: self.cutoff_fraction_of_rate * self.bit_rate_bps as f64,
        }
    }
}

/// Photocurrent in mA: `R · |E|²` plus thermal, shot and dark-current noise,
/// then the electrical low-pass filter.
pub fn photodetect(field: &OpticalField, det: &DetectorParams, rng: &mut Rng) -> ElectricalWaveform {
    let fs = field.sample_rate_hz;
    let half_band = fs / 2.0;
    let dark_ma = det.dark_current_na * 1e-6;
    let thermal_sigma_ma = det.thermal_noise_pa_per_sqrt_hz * 1e-12 * half_band.sqrt() * 1e3;
    let samples = field
        .samples
        .iter()
        .map(|s| {
            let i = det.responsivity_a_per_w * s.norm_sqr() + dark_ma;
            let mut noise = 0.0;
            if thermal_sigma_ma > 0.0 {
                noise += thermal_sigma_ma * rng.normal();
            }
            if det.shot_noise {
                // 2q·I·B with I in A, converted back to mA
                let var_a2 = 2.0 * ELEMENTARY_CHARGE_C * (i * 1e-3).max(0.0) * half_band;
                noise += var_a2.sqrt() * 1e3 * rng.normal();
            }
            i + noise
        })
        .collect();
    det.filter().apply(&ElectricalWaveform::new(samples, fs))
}
