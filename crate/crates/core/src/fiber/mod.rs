//! Transmitter, fiber propagation, amplification and photodetection.

mod amplifier;
mod detector;
mod link;
mod propagation;
mod spectrum;
mod transmitter;

pub use amplifier::{
    amplify, attenuate, degrade_osnr, optical_filter, osnr_db, reference_bandwidth_hz,
    AmplifierParams,
};
pub use detector::{photodetect, DetectorParams, ElectricalFilter, FilterKind};
pub use link::{dcf_length_km, dispersion_map, run_link, LinkConfig, LinkKind};
pub use propagation::{propagate, propagate_with_steps, step_count, FiberParams, Kerr, MAX_STEP_KM, MAX_NONLINEAR_PHASE_PER_STEP};
pub use transmitter::{modulate, TransmitterParams};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FiberError {
    #[error("split-step size underflow: {step_km:e} km needed for peak power {peak_mw} mW")]
    StepUnderflow { step_km: f64, peak_mw: f64 },
    #[error("non-finite field after split step {step} (z = {z_km:.3} km)")]
    NonFinite { step: usize, z_km: f64 },
    #[error("target OSNR {target_db:.2} dB is above the current {current_db:.2} dB")]
    UnreachableOsnr { target_db: f64, current_db: f64 },
    #[error("invalid link configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Signal(#[from] crate::signal::SignalError),
}
