use crate::reservoir::ReservoirResponse;
use crate::signal::{interpolate_at, ElectricalWaveform, SignalError};

/// `j` samples per bit, uniformly spaced over the bit period starting at
/// `phase` (fraction of a bit). Grid-aligned positions are read directly,
/// others through band-limited interpolation. Time wraps circularly.
pub fn sample_bits(
    w: &ElectricalWaveform,
    bit_rate_bps: f64,
    n_bits: usize,
    j: usize,
    phase: f64,
) -> Result<ReservoirResponse, SignalError> {
    let spb = w.sample_rate_hz / bit_rate_bps;
    let n = w.len();
    let mut values = Vec::with_capacity(n_bits * j);
    let mut off_grid = Vec::new();
    for i in 0..n_bits {
        for q in 0..j {
            let pos = (i as f64 + phase + q as f64 / j as f64) * spb;
            let idx = pos.round();
            if (pos - idx).abs() < 1e-9 {
                values.push(w.samples[(idx as usize) % n]);
            } else {
                off_grid.push((values.len(), pos / w.sample_rate_hz));
                values.push(0.0);
            }
        }
    }
    if !off_grid.is_empty() {
        let times: Vec<f64> = off_grid.iter().map(|&(_, t)| t).collect();
        let interp = interpolate_at(w, &times)?;
        for ((slot, _), v) in off_grid.iter().zip(interp) {
            values[*slot] = if w.normalized { v.clamp(0.0, 1.0) } else { v };
        }
    }
    Ok(ReservoirResponse::from_row_major(n_bits, j, values))
}
