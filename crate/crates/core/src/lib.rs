//! Fiber-optic link simulation and bit recovery with a time-delay photonic
//! reservoir computer.
//!
//! The crate is organised as a pipeline:
//!
//! * [`signal`] holds the shared sampled-signal types, the seeded RNG,
//!   band-limited resampling and the binary waveform file format.
//! * [`fiber`] turns a [`signal::BitStream`] into a photocurrent after
//!   modulation, split-step propagation, amplification, filtering and
//!   detection.
//! * [`reservoir`] masks and time-stretches the received samples, injects
//!   them into a semiconductor laser with delayed feedback and reads out the
//!   virtual nodes.
//! * [`readout`] builds multi-bit feature windows, trains a ridge classifier
//!   and measures the bit-error rate.
//! * [`harness`] wires everything together for single runs, sweeps,
//!   benchmarks and distance searches, and writes CSV results.

pub mod fiber;
pub mod harness;
pub mod readout;
pub mod reservoir;
pub mod signal;

pub use num_complex::Complex64;
