//! Multi-bit feature windows, ridge-regression readout and BER evaluation.

mod decision;
mod ridge;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::reservoir::ReservoirResponse;
use crate::signal::BitStream;

pub use decision::{decide, decide_and_ber, min_resolvable_ber, optimal_threshold, Decision, Threshold};
pub use ridge::{fit_ridge, predict, train, CvSummary, ReadoutModel, RidgeFit, TrainOptions};

#[derive(Debug, thiserror::Error)]
pub enum ReadoutError {
    #[error("window of {needed} bits does not fit a stream of {available}")]
    WindowTooLarge { needed: usize, available: usize },
    #[error("training portion has {ones} ones and {zeros} zeros; both classes need at least 2")]
    DegenerateClasses { ones: usize, zeros: usize },
    #[error("feature matrix has {found} columns, model expects {expected}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("{0} targets for {1} rows")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    Empty,
    #[error("feature matrix has no non-zero constant column to carry the intercept")]
    NoBiasColumn,
    #[error("ridge system is not positive definite")]
    Singular,
    #[error("non-finite feature at row {0}")]
    NonFinite(usize),
}

/// `m_p` previous and `m_c` following bits around the predicted one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub m_p: usize,
    pub m_c: usize,
}

impl WindowSpec {
    pub fn new(m_p: usize, m_c: usize) -> Self {
        Self { m_p, m_c }
    }

    /// Centered window of `n` bits (`n` odd); an even `n` puts the extra bit
    /// in the past.
    pub fn centered(n: usize) -> Self {
        let n = n.max(1);
        let m_c = (n - 1) / 2;
        Self { m_p: n - 1 - m_c, m_c }
    }

    pub fn bits(&self) -> usize {
        self.m_p + 1 + self.m_c
    }

    pub fn latency_bits(&self) -> usize {
        self.m_c
    }

    pub fn feature_count(&self, k: usize) -> usize {
        self.bits() * k
    }
}

/// Row `r` corresponds to bit `r + m_p` of the source stream. The last
/// column is the constant 1.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub window: WindowSpec,
    pub data: DMatrix<f64>,
}

impl FeatureMatrix {
    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    /// Source-stream index of row `r`.
    pub fn bit_index(&self, r: usize) -> usize {
        r + self.window.m_p
    }
}

/// Concatenate the node vectors of bits `i − m_p ..= i + m_c` for every `i`
/// with full context, then append the bias column.
pub fn assemble_features(resp: &ReservoirResponse, win: WindowSpec) -> Result<FeatureMatrix, ReadoutError> {
    let n = win.bits();
    if resp.rows() < n {
        return Err(ReadoutError::WindowTooLarge {
            needed: n,
            available: resp.rows(),
        });
    }
    let k = resp.cols();
    let rows = resp.rows() - n + 1;
    let cols = n * k + 1;
    let vals = resp.values();
    let mut data = DMatrix::<f64>::zeros(rows, cols);
    for (c, mut col) in data.column_iter_mut().enumerate() {
        if c == cols - 1 {
            col.fill(1.0);
            continue;
        }
        let (offset, node) = (c / k, c % k);
        for (r, v) in col.iter_mut().enumerate() {
            *v = vals[(r + offset) * k + node];
        }
    }
    Ok(FeatureMatrix { window: win, data })
}

/// Targets aligned with the rows of [`assemble_features`].
pub fn aligned_targets(bits: &BitStream, win: WindowSpec) -> Vec<u8> {
    let n = bits.len();
    if n < win.bits() {
        return Vec::new();
    }
    bits.bits[win.m_p..n - win.m_c].to_vec()
}
