use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::spectrum::{bin_frequencies, filter_real};
use crate::signal::{db_to_linear, BitStream, OpticalField, Rng};

/// CW laser + Mach-Zehnder modulator driven by an NRZ PAM2 pattern.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransmitterParams {
    pub launch_power_mw: f64,
    pub wavelength_nm: f64,
    /// Laser linewidth; 0 disables phase noise.
    pub linewidth_mhz: f64,
    /// One-sided RIN level; `-inf` disables intensity noise.
    #[serde(with = "crate::signal::ext_float")]
    pub rin_db_per_hz: f64,
    pub mzm_extinction_db: f64,
    pub bit_rate_bps: u64,
    pub samples_per_bit: usize,
    /// 3-dB bandwidth of an optional Gaussian drive/modulator response, as a
    /// fraction of the bit rate. `None` keeps ideal NRZ edges.
    #[serde(default)]
    pub drive_bandwidth_fraction: Option<f64>,
}

impl TransmitterParams {
    pub fn new(bit_rate_bps: u64) -> Self {
        Self {
            launch_power_mw: 10.0,
            wavelength_nm: 1550.0,
            linewidth_mhz: 0.1,
            rin_db_per_hz: -145.0,
            mzm_extinction_db: 30.0,
            bit_rate_bps,
            samples_per_bit: 16,
            drive_bandwidth_fraction: None,
        }
    }

    pub fn noiseless(mut self) -> Self {
        self.linewidth_mhz = 0.0;
        self.rin_db_per_hz = f64::NEG_INFINITY;
        self
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.bit_rate_bps as f64 * self.samples_per_bit as f64
    }
}

/// Zero-level field drive offset so that `sin²(π/2 · u0)` equals the
/// extinction ratio.
fn mzm_floor(extinction_db: f64) -> f64 {
    2.0 / std::f64::consts::PI * db_to_linear(-extinction_db).sqrt().asin()
}

pub fn modulate(bits: &BitStream, tx: &TransmitterParams, rng: &mut Rng) -> OpticalField {
    let spb = tx.samples_per_bit;
    let fs = tx.sample_rate_hz();
    let n = bits.len() * spb;
    if n == 0 {
        return OpticalField::new(Vec::new(), fs, tx.wavelength_nm);
    }
    let nrz: Vec<f64> = bits
        .bits
        .iter()
        .flat_map(|&b| std::iter::repeat_n(b as f64, spb))
        .collect();
    let drive = if let Some(frac) = tx.drive_bandwidth_fraction.filter(|f| f.is_finite() && *f > 0.0) {
        let f3 = frac * tx.bit_rate_bps as f64;
        let response: Vec<Complex64> = bin_frequencies(n, fs)
            .into_iter()
            .map(|f| Complex64::new((-(std::f64::consts::LN_2 / 2.0) * (f / f3).powi(2)).exp(), 0.0))
            .collect();
        filter_real(&nrz, &response)
    } else {
        nrz
    };

    let u0 = mzm_floor(tx.mzm_extinction_db);
    let mut samples: Vec<Complex64> = drive
        .iter()
        .map(|&d| {
            let u = u0 + (1.0 - u0) * d.clamp(0.0, 1.0);
            Complex64::new((std::f64::consts::FRAC_PI_2 * u).sin(), 0.0)
        })
        .collect();

    let mean: f64 = samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / n as f64;
    let scale = (tx.launch_power_mw / mean).sqrt();

    let rin = db_to_linear(tx.rin_db_per_hz);
    let rin_sigma = (rin * fs / 2.0).sqrt();
    let phase_sigma = (2.0 * std::f64::consts::PI * tx.linewidth_mhz * 1e6 / fs).sqrt();
    let mut noise = rng.derive("tx-noise");
    let mut phase = 0.0;
    for s in samples.iter_mut() {
        let mut amp = scale;
        if rin_sigma > 0.0 {
            amp *= (1.0 + rin_sigma * noise.normal()).max(0.0).sqrt();
        }
        if phase_sigma > 0.0 {
            phase += phase_sigma * noise.normal();
        }
        *s *= Complex64::from_polar(amp, phase);
    }
    OpticalField::new(samples, fs, tx.wavelength_nm)
}
