use serde::{Deserialize, Serialize};

use super::ReservoirError;
use crate::signal::{ElectricalWaveform, Rng};

/// Virtual-node layout of one delay loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeGeometry {
    /// Node spacing θ.
    pub theta_ps: f64,
    /// Loop delay τ; one bit is stretched to one τ.
    pub tau_ns: f64,
    /// Nodes per loop that are driven and read out.
    pub k_nodes: usize,
    /// Input samples per bit.
    pub j_samples: usize,
    /// Integration step; must divide θ. θ/40 keeps node values within 1e-3
    /// of the dt → 0 limit across ±30 GHz detuning and k_f ≤ 0.2.
    pub dt_ps: f64,
}

impl NodeGeometry {
    /// 66 ns loop, 1320 nodes, 66 of them trained, one sample per node.
    pub fn experimental() -> Self {
        Self {
            theta_ps: 50.0,
            tau_ns: 66.0,
            k_nodes: 66,
            j_samples: 66,
            dt_ps: 1.25,
        }
    }

    /// 1.6 ns loop with 32 nodes fed by 4 samples per bit.
    pub fn short() -> Self {
        Self {
            theta_ps: 50.0,
            tau_ns: 1.6,
            k_nodes: 32,
            j_samples: 4,
            dt_ps: 1.25,
        }
    }

    /// N = τ/θ.
    pub fn n_total(&self) -> usize {
        (self.tau_ns * 1e3 / self.theta_ps).round() as usize
    }

    pub fn steps_per_node(&self) -> usize {
        (self.theta_ps / self.dt_ps).round() as usize
    }

    pub fn steps_per_tau(&self) -> usize {
        self.n_total() * self.steps_per_node()
    }

    pub fn dt_ns(&self) -> f64 {
        self.dt_ps * 1e-3
    }

    /// Same layout with the integration step divided by `factor`.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            dt_ps: self.dt_ps / factor as f64,
            ..*self
        }
    }

    /// Time-stretch factor τ·R.
    pub fn speed_penalty(&self, bit_rate_bps: f64) -> f64 {
        self.tau_ns * 1e-9 * bit_rate_bps
    }

    pub fn validate(&self) -> Result<(), ReservoirError> {
        let bad = |m: String| Err(ReservoirError::Geometry(m));
        if !(self.theta_ps > 0.0 && self.dt_ps > 0.0 && self.tau_ns > 0.0) {
            return bad("θ, τ and dt must be positive".into());
        }
        let spn = self.theta_ps / self.dt_ps;
        if (spn - spn.round()).abs() > 1e-9 * spn || spn.round() < 1.0 {
            return bad(format!("dt = {} ps does not divide θ = {} ps", self.dt_ps, self.theta_ps));
        }
        let nodes = self.tau_ns * 1e3 / self.theta_ps;
        if (nodes - nodes.round()).abs() > 1e-9 * nodes {
            return bad(format!("τ = {} ns is not a whole number of θ", self.tau_ns));
        }
        if self.k_nodes == 0 || self.j_samples == 0 {
            return bad("k and j must be at least 1".into());
        }
        if self.k_nodes > self.n_total() {
            return bad(format!("k = {} exceeds N = {}", self.k_nodes, self.n_total()));
        }
        if self.k_nodes % self.j_samples != 0 {
            return bad(format!("mod(k, j) = mod({}, {}) is not 0", self.k_nodes, self.j_samples));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mask {
    pub values: Vec<f64>,
    pub seed: u64,
}

impl Mask {
    pub fn ones(k: usize) -> Self {
        Self {
            values: vec![1.0; k],
            seed: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `k` i.i.d. uniform values in `[0, 1)`.
pub fn make_mask(k: usize, rng: &mut Rng) -> Mask {
    Mask {
        values: (0..k).map(|_| rng.uniform()).collect(),
        seed: rng.seed(),
    }
}

/// Stretch each bit to one τ and mask it.
///
/// `bit_samples` holds `j` values per bit, bit after bit. Node `p < k` of a
/// bit carries sample `p / (k/j)` times `mask[p]`; nodes `k..N` are zero. The
/// result is a zero-order-hold signal at the node rate 1/θ.
pub fn mask_and_stretch(bit_samples: &[f64], geom: &NodeGeometry, mask: &Mask) -> Result<ElectricalWaveform, ReservoirError> {
    geom.validate()?;
    let (k, j, n) = (geom.k_nodes, geom.j_samples, geom.n_total());
    if mask.len() != k {
        return Err(ReservoirError::Geometry(format!("mask has {} values, k = {k}", mask.len())));
    }
    if bit_samples.len() % j != 0 {
        return Err(ReservoirError::Geometry(format!(
            "{} input samples is not a whole number of {j}-sample bits",
            bit_samples.len()
        )));
    }
    let reps = k / j;
    let bits = bit_samples.len() / j;
    let mut out = vec![0.0; bits * n];
    for (b, chunk) in bit_samples.chunks(j).enumerate() {
        let row = &mut out[b * n..b * n + k];
        for (p, v) in row.iter_mut().enumerate() {
            *v = mask.values[p] * chunk[p / reps];
        }
    }
    Ok(ElectricalWaveform {
        samples: out,
        sample_rate_hz: 1e12 / geom.theta_ps,
        normalized: bit_samples.iter().all(|v| (0.0..=1.0).contains(v)),
    })
}
