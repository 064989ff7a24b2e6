//! Sampled signal types shared by every pipeline stage.

pub mod ext_float;
mod io;
mod resample;
mod rng;

pub use io::{
    read_electrical, read_optical, read_record, write_electrical, write_optical, write_record,
    Record, RecordKind, FORMAT_VERSION, MAGIC,
};
pub use resample::{interpolate_at, resample};
pub use rng::{sub_seed, Rng};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SignalError {
    #[error("sample rate must be positive and finite, got {0}")]
    InvalidRate(f64),
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("waveform header is corrupt: {0}")]
    CorruptHeader(String),
    #[error("waveform payload truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("unsupported waveform format version {found} (this build reads {supported})")]
    VersionMismatch { found: u16, supported: u16 },
    #[error("record holds {found:?} data, expected {expected:?}")]
    WrongKind {
        expected: RecordKind,
        found: RecordKind,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Ordered binary symbols at a fixed bit rate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitStream {
    pub bits: Vec<u8>,
    pub rate_bps: u64,
}

impl BitStream {
    pub fn new(bits: Vec<u8>, rate_bps: u64) -> Self {
        debug_assert!(bits.iter().all(|&b| b <= 1));
        Self { bits, rate_bps }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bit_period_s(&self) -> f64 {
        1.0 / self.rate_bps as f64
    }

    pub fn ones_fraction(&self) -> f64 {
        if self.bits.is_empty() {
            return 0.0;
        }
        self.bits.iter().map(|&b| b as usize).sum::<usize>() as f64 / self.bits.len() as f64
    }
}

/// `n` i.i.d. uniform bits drawn from `rng`.
pub fn generate_bits(n: usize, rate_bps: u64, rng: &mut Rng) -> BitStream {
    let bits = (0..n).map(|_| (rng.next_u64_raw() >> 63) as u8).collect();
    BitStream { bits, rate_bps }
}

/// Complex optical envelope in √mW; `|E|²` is instantaneous power in mW.
///
/// `ase_psd_mw_per_hz` tracks the single-polarization noise spectral density
/// at the carrier accumulated so far, so OSNR can be computed and degraded
/// without spectral estimation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpticalField {
    pub samples: Vec<Complex64>,
    pub sample_rate_hz: f64,
    pub center_wavelength_nm: f64,
    #[serde(default)]
    pub ase_psd_mw_per_hz: f64,
}

impl OpticalField {
    pub fn new(samples: Vec<Complex64>, sample_rate_hz: f64, center_wavelength_nm: f64) -> Self {
        Self {
            samples,
            sample_rate_hz,
            center_wavelength_nm,
            ase_psd_mw_per_hz: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dt_s(&self) -> f64 {
        1.0 / self.sample_rate_hz
    }

    pub fn average_power_mw(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }

    /// Total energy in mW·s.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() * self.dt_s()
    }

    pub fn carrier_frequency_hz(&self) -> f64 {
        SPEED_OF_LIGHT_M_PER_S / (self.center_wavelength_nm * 1e-9)
    }

    pub fn check_finite(&self) -> Result<(), SignalError> {
        match self
            .samples
            .iter()
            .position(|s| !(s.re.is_finite() && s.im.is_finite()))
        {
            Some(i) => Err(SignalError::NonFinite(i)),
            None => Ok(()),
        }
    }
}

/// Real-valued sampled signal: photocurrent in mA, or a normalized drive in
/// `[0, 1]` when `normalized` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElectricalWaveform {
    pub samples: Vec<f64>,
    pub sample_rate_hz: f64,
    #[serde(default)]
    pub normalized: bool,
}

impl ElectricalWaveform {
    pub fn new(samples: Vec<f64>, sample_rate_hz: f64) -> Self {
        Self {
            samples,
            sample_rate_hz,
            normalized: false,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }

    pub fn mean(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    pub fn check_finite(&self) -> Result<(), SignalError> {
        match self.samples.iter().position(|s| !s.is_finite()) {
            Some(i) => Err(SignalError::NonFinite(i)),
            None => Ok(()),
        }
    }
}

pub const SPEED_OF_LIGHT_M_PER_S: f64 = 299_792_458.0;
pub const PLANCK_J_S: f64 = 6.626_070_15e-34;
pub const ELEMENTARY_CHARGE_C: f64 = 1.602_176_634e-19;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generate_bits_is_reproducible() {
        let a = generate_bits(40960, 25_000_000_000, &mut Rng::new(1));
        let b = generate_bits(40960, 25_000_000_000, &mut Rng::new(1));
        assert_eq!(a.len(), 40960);
        assert_eq!(a, b);
        let c = generate_bits(40960, 25_000_000_000, &mut Rng::new(2));
        assert_ne!(a, c);
    }

    #[test]
    fn empty_stream() {
        let s = generate_bits(0, 1, &mut Rng::new(9));
        assert!(s.is_empty());
        assert_eq!(s.ones_fraction(), 0.0);
    }

    #[test]
    fn ones_fraction_within_binomial_bound() {
        // 3 sigma for n = 40960: 3 * sqrt(0.25 / 40960) = 0.00741 < 0.008
        let sigma3 = 3.0 * (0.25f64 / 40960.0).sqrt();
        assert!(sigma3 < 0.008);
        for seed in 0..20 {
            let s = generate_bits(40960, 1, &mut Rng::new(seed));
            assert!((s.ones_fraction() - 0.5).abs() < 0.008, "seed {seed}");
        }
    }

    #[test]
    fn optical_power_is_mean_norm_sqr() {
        let f = OpticalField::new(
            vec![Complex64::new(1.0, 1.0), Complex64::new(0.0, 2.0)],
            1.0,
            1550.0,
        );
        assert!((f.average_power_mw() - 3.0).abs() < 1e-15);
    }
}
