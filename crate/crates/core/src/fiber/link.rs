use serde::{Deserialize, Serialize};

use super::amplifier::{amplify, attenuate, degrade_osnr, optical_filter, reference_bandwidth_hz, AmplifierParams};
use super::detector::{photodetect, DetectorParams};
use super::propagation::{propagate, FiberParams};
use super::transmitter::{modulate, TransmitterParams};
use super::FiberError;
use crate::signal::{BitStream, ElectricalWaveform, Rng};

/// Bit periods excluded at each end when picking normalization extrema.
const NORMALIZE_GUARD_BITS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkKind {
    ShortReach,
    LongHaul,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkConfig {
    pub kind: LinkKind,
    pub total_ssmf_km: f64,
    /// SSMF length per module (long-haul only).
    pub span_km: f64,
    /// SSMF parameters; `length_km` is ignored and taken from the link.
    pub ssmf: FiberParams,
    /// DCF parameters; `length_km` is ignored and matched per span.
    pub dcf: FiberParams,
    pub amplifier: AmplifierParams,
    /// Optical filter 3-dB bandwidth in units of the bit rate.
    pub optical_filter_bw_factor: f64,
    pub transmitter: TransmitterParams,
    pub detector: DetectorParams,
    #[serde(default)]
    pub received_power_attenuation_db: Option<f64>,
    #[serde(default)]
    pub added_osnr_db: Option<f64>,
}

impl LinkConfig {
    /// Unamplified 25 Gb/s link.
    pub fn short_reach(z_km: f64) -> Self {
        let rate = 25_000_000_000;
        Self {
            kind: LinkKind::ShortReach,
            total_ssmf_km: z_km,
            span_km: z_km,
            ssmf: FiberParams::ssmf(z_km),
            dcf: FiberParams::dcf(0.0),
            amplifier: AmplifierParams::edfa(),
            optical_filter_bw_factor: 4.0,
            transmitter: TransmitterParams::new(rate),
            detector: DetectorParams::new(rate),
            received_power_attenuation_db: None,
            added_osnr_db: None,
        }
    }

    /// 10 Gb/s link of 100 km SSMF modules, each with matched DCF, EDFA and
    /// optical filter.
    pub fn long_haul(z_km: f64) -> Self {
        let rate = 10_000_000_000;
        Self {
            kind: LinkKind::LongHaul,
            total_ssmf_km: z_km,
            span_km: 100.0,
            ssmf: FiberParams::ssmf(100.0),
            dcf: FiberParams::dcf(0.0),
            amplifier: AmplifierParams::edfa(),
            optical_filter_bw_factor: 4.0,
            transmitter: TransmitterParams::new(rate),
            detector: DetectorParams::new(rate),
            received_power_attenuation_db: None,
            added_osnr_db: None,
        }
    }

    pub fn bit_rate_bps(&self) -> u64 {
        self.transmitter.bit_rate_bps
    }

    pub fn samples_per_bit(&self) -> usize {
        self.transmitter.samples_per_bit
    }

    pub fn optical_filter_bw_hz(&self) -> f64 {
        self.optical_filter_bw_factor * self.bit_rate_bps() as f64
    }

    pub fn modules(&self) -> usize {
        (self.total_ssmf_km / self.span_km).round() as usize
    }

    pub fn noiseless(mut self) -> Self {
        self.transmitter = self.transmitter.noiseless();
        self.detector = self.detector.noiseless();
        self.amplifier.noise_figure_db = f64::NEG_INFINITY;
        self
    }

    pub fn validate(&self) -> Result<(), FiberError> {
        let bad = |m: String| Err(FiberError::InvalidConfig(m));
        if self.total_ssmf_km < 0.0 {
            return bad(format!("negative SSMF length {}", self.total_ssmf_km));
        }
        let spb = self.samples_per_bit();
        if spb < 8 || spb % 2 != 0 {
            return bad(format!("samples_per_bit must be even and >= 8, got {spb}"));
        }
        if self.transmitter.launch_power_mw <= 0.0 {
            return bad("launch power must be positive".into());
        }
        if self.detector.bit_rate_bps != self.bit_rate_bps() {
            return bad("detector and transmitter bit rates differ".into());
        }
        let fc = self.detector.cutoff_fraction_of_rate;
        if !(fc > 0.0 && fc <= 1.0) {
            return bad(format!("electrical cutoff fraction {fc} outside (0, 1]"));
        }
        if self.kind == LinkKind::LongHaul {
            if self.span_km <= 0.0 {
                return bad("span length must be positive".into());
            }
            let m = self.total_ssmf_km / self.span_km;
            if (m - m.round()).abs() > 1e-9 {
                return bad(format!(
                    "total SSMF {} km is not a multiple of the {} km span",
                    self.total_ssmf_km, self.span_km
                ));
            }
        }
        Ok(())
    }
}

/// DCF length that cancels the accumulated dispersion of one span.
pub fn dcf_length_km(cfg: &LinkConfig) -> f64 {
    -cfg.ssmf.beta2_ps2_per_km * cfg.span_km / cfg.dcf.beta2_ps2_per_km
}

/// Accumulated `β₂·L` (ps²) at the end of each module.
pub fn dispersion_map(cfg: &LinkConfig) -> Vec<f64> {
    let per_module = cfg.ssmf.beta2_ps2_per_km * cfg.span_km + cfg.dcf.beta2_ps2_per_km * dcf_length_km(cfg);
    (1..=cfg.modules()).map(|m| per_module * m as f64).collect()
}

/// Full transmission chain, returning the received photocurrent min-max
/// normalized to `[0, 1]`.
pub fn run_link(bits: &BitStream, cfg: &LinkConfig, rng: &mut Rng) -> Result<ElectricalWaveform, FiberError> {
    let raw = run_link_raw(bits, cfg, rng)?;
    let guard = NORMALIZE_GUARD_BITS * cfg.samples_per_bit();
    Ok(normalize(&raw, guard))
}

/// Same chain without normalization (photocurrent in mA).
pub fn run_link_raw(bits: &BitStream, cfg: &LinkConfig, rng: &mut Rng) -> Result<ElectricalWaveform, FiberError> {
    cfg.validate()?;
    let master = rng.derive("link");
    let mut field = modulate(bits, &cfg.transmitter, &mut master.derive("tx"));
    match cfg.kind {
        LinkKind::ShortReach => {
            let fiber = FiberParams {
                length_km: cfg.total_ssmf_km,
                ..cfg.ssmf
            };
            field = propagate(&field, &fiber)?;
        }
        LinkKind::LongHaul => {
            let ssmf = FiberParams {
                length_km: cfg.span_km,
                ..cfg.ssmf
            };
            let dcf = FiberParams {
                length_km: dcf_length_km(cfg),
                ..cfg.dcf
            };
            for m in 0..cfg.modules() {
                field = propagate(&field, &ssmf)?;
                field = propagate(&field, &dcf)?;
                field = amplify(&field, &cfg.amplifier, &mut master.derive(&format!("edfa-{m}")));
                field = optical_filter(&field, cfg.optical_filter_bw_hz());
            }
        }
    }
    if let Some(att) = cfg.received_power_attenuation_db {
        field = attenuate(&field, att);
    }
    if let Some(osnr) = cfg.added_osnr_db {
        let bref = reference_bandwidth_hz(field.center_wavelength_nm);
        field = degrade_osnr(&field, osnr, bref, &mut master.derive("osnr"))?;
    }
    Ok(photodetect(&field, &cfg.detector, &mut master.derive("rx")))
}

fn normalize(w: &ElectricalWaveform, guard: usize) -> ElectricalWaveform {
    let interior = if w.len() > 2 * guard {
        &w.samples[guard..w.len() - guard]
    } else {
        &w.samples[..]
    };
    let lo = interior.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = interior.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let samples = w
        .samples
        .iter()
        .map(|&v| {
            if span > 0.0 {
                ((v - lo) / span).clamp(0.0, 1.0)
            } else {
                0.0
            }
        })
        .collect();
    ElectricalWaveform {
        samples,
        sample_rate_hz: w.sample_rate_hz,
        normalized: true,
    }
}
