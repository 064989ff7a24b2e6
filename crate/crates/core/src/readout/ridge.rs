//! Ridge regression on standardized features.
//!
//! The normal matrix of the training rows is built from a Gram matrix of
//! features pre-shifted by the full-data column means, so Monte-Carlo splits
//! only pay for the validation quarter (`G_train = G_all − G_val`). The shift
//! keeps the centering subtraction well conditioned; the solve itself is a
//! Cholesky factorization of `ZᵀZ + λI`, which is symmetric positive definite
//! for any `λ > 0`.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::decision::{decide, optimal_threshold};
use super::{FeatureMatrix, ReadoutError, WindowSpec};
use crate::signal::Rng;

/// Columns whose training variance falls below this fraction of their
/// full-data variance are treated as constant and get zero weight.
const CONSTANT_COLUMN_RATIO: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub lambda: f64,
    pub cv_reps: usize,
    pub train_frac: f64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            lambda: 0.01,
            cv_reps: 10,
            train_frac: 0.75,
        }
    }
}

/// Weights in raw feature space (bias absorbed into the constant column) plus
/// the standardization they were solved under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeFit {
    pub weights: Vec<f64>,
    /// Standardized-space coefficients; zero for constant columns.
    pub std_weights: Vec<f64>,
    pub intercept: f64,
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvSummary {
    pub validation_ber: Vec<f64>,
    pub train_ber: Vec<f64>,
    pub best_rep: usize,
    pub mean_validation_ber: f64,
    pub std_validation_ber: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutModel {
    pub window: WindowSpec,
    pub lambda: f64,
    /// Length `n·k + 1`; the last entry multiplies the constant column.
    pub weights: Vec<f64>,
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    pub threshold: f64,
    pub seed: u64,
    pub cv: CvSummary,
}

impl ReadoutModel {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub fn predict(&self, features: &FeatureMatrix) -> Result<Vec<f64>, ReadoutError> {
        predict(&self.weights, features)
    }

    pub fn validation_ber(&self) -> f64 {
        self.cv.validation_ber[self.cv.best_rep]
    }

    pub fn train_ber(&self) -> f64 {
        self.cv.train_ber[self.cv.best_rep]
    }
}

/// Sufficient statistics of a row subset, in shifted coordinates.
struct Moments {
    n: usize,
    gram: DMatrix<f64>,
    sum: DVector<f64>,
    xty: DVector<f64>,
    sum_y: f64,
}

impl Moments {
    fn of(x: &DMatrix<f64>, y: &DVector<f64>) -> Self {
        Self {
            n: x.nrows(),
            gram: x.tr_mul(x),
            sum: x.row_sum().transpose(),
            xty: x.tr_mul(y),
            sum_y: y.sum(),
        }
    }

    fn minus(&self, other: &Moments) -> Moments {
        Moments {
            n: self.n - other.n,
            gram: &self.gram - &other.gram,
            sum: &self.sum - &other.sum,
            xty: &self.xty - &other.xty,
            sum_y: self.sum_y - other.sum_y,
        }
    }
}

struct Shifted {
    x: DMatrix<f64>,
    y: DVector<f64>,
    shift: Vec<f64>,
    var_all: Vec<f64>,
}

fn shifted(features: &FeatureMatrix, targets: &[u8]) -> Result<Shifted, ReadoutError> {
    let (rows, cols) = features.data.shape();
    if rows == 0 {
        return Err(ReadoutError::Empty);
    }
    if targets.len() != rows {
        return Err(ReadoutError::LengthMismatch(targets.len(), rows));
    }
    if let Some(i) = features.data.iter().position(|v| !v.is_finite()) {
        return Err(ReadoutError::NonFinite(i % rows));
    }
    let mut x = features.data.clone();
    let mut shift = vec![0.0; cols];
    let mut var_all = vec![0.0; cols];
    for (c, mut col) in x.column_iter_mut().enumerate() {
        let m = col.mean();
        col.add_scalar_mut(-m);
        shift[c] = m;
        let var = col.norm_squared() / rows as f64;
        // rounding residue of a constant column
        var_all[c] = if var <= 1e-24 * m * m { 0.0 } else { var };
    }
    let y = DVector::from_iterator(rows, targets.iter().map(|&t| t as f64));
    Ok(Shifted { x, y, shift, var_all })
}

fn solve(m: &Moments, shift: &[f64], var_all: &[f64], lambda: f64) -> Result<RidgeFit, ReadoutError> {
    let p = m.sum.len();
    let n = m.n as f64;
    let mu: Vec<f64> = m.sum.iter().map(|s| s / n).collect();
    let y_mean = m.sum_y / n;
    let mut scale = vec![1.0; p];
    let mut active = Vec::with_capacity(p);
    for c in 0..p {
        let var = (m.gram[(c, c)] / n - mu[c] * mu[c]).max(0.0);
        if var_all[c] > 0.0 && var > CONSTANT_COLUMN_RATIO * var_all[c] {
            scale[c] = var.sqrt();
            active.push(c);
        }
    }
    let q = active.len();
    let mut a = DMatrix::<f64>::zeros(q, q);
    let mut b = DVector::<f64>::zeros(q);
    for (i, &ci) in active.iter().enumerate() {
        for (j, &cj) in active.iter().enumerate().take(i + 1) {
            let cov = m.gram[(ci, cj)] - n * mu[ci] * mu[cj];
            let v = cov / (scale[ci] * scale[cj]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
        a[(i, i)] += lambda;
        b[i] = (m.xty[ci] - n * mu[ci] * y_mean) / scale[ci];
    }
    let w = if q == 0 {
        DVector::zeros(0)
    } else {
        a.cholesky().ok_or(ReadoutError::Singular)?.solve(&b)
    };

    let mut std_weights = vec![0.0; p];
    let mut weights = vec![0.0; p];
    let mean: Vec<f64> = (0..p).map(|c| mu[c] + shift[c]).collect();
    let mut offset = y_mean;
    for (i, &c) in active.iter().enumerate() {
        std_weights[c] = w[i];
        weights[c] = w[i] / scale[c];
        offset -= weights[c] * mean[c];
    }
    let bias_col = (0..p)
        .rev()
        .find(|&c| var_all[c] == 0.0 && shift[c] != 0.0)
        .ok_or(ReadoutError::NoBiasColumn)?;
    weights[bias_col] += offset / shift[bias_col];
    Ok(RidgeFit {
        weights,
        std_weights,
        intercept: y_mean,
        mean,
        scale,
    })
}

/// Ridge fit on the given rows (all rows when `rows` is `None`).
///
/// Minimizes `Σ (y − b₀ − Σ wⱼ zⱼ)² + λ Σ wⱼ²` with `z` the features
/// standardized over those rows; the intercept `b₀` is not penalized.
pub fn fit_ridge(
    features: &FeatureMatrix,
    targets: &[u8],
    rows: Option<&[usize]>,
    lambda: f64,
) -> Result<RidgeFit, ReadoutError> {
    let s = shifted(features, targets)?;
    let m = match rows {
        None => Moments::of(&s.x, &s.y),
        Some(r) => Moments::of(&s.x.select_rows(r), &s.y.select_rows(r)),
    };
    solve(&m, &s.shift, &s.var_all, lambda)
}

pub fn predict(weights: &[f64], features: &FeatureMatrix) -> Result<Vec<f64>, ReadoutError> {
    if weights.len() != features.cols() {
        return Err(ReadoutError::ShapeMismatch {
            expected: weights.len(),
            found: features.cols(),
        });
    }
    let w = DVector::from_column_slice(weights);
    Ok((&features.data * w).iter().cloned().collect())
}

fn class_counts(targets: &[u8], rows: &[usize]) -> (usize, usize) {
    let ones = rows.iter().filter(|&&r| targets[r] == 1).count();
    (ones, rows.len() - ones)
}

fn ber_on(soft: &[f64], targets: &[u8], rows: &[usize], threshold: f64) -> f64 {
    let s: Vec<f64> = rows.iter().map(|&r| soft[r]).collect();
    let errors = decide(&s, threshold)
        .iter()
        .zip(rows)
        .filter(|(b, &r)| **b != targets[r])
        .count();
    errors as f64 / rows.len().max(1) as f64
}

/// Monte-Carlo cross-validation: each repetition draws a random
/// `train_frac` split, fits ridge weights on the training part, fits the
/// comparator threshold on the training predictions and scores the held-out
/// part. The repetition with the lowest validation BER is kept (first on
/// ties).
pub fn train(
    features: &FeatureMatrix,
    targets: &[u8],
    opts: &TrainOptions,
    rng: &Rng,
) -> Result<ReadoutModel, ReadoutError> {
    let s = shifted(features, targets)?;
    let rows = s.x.nrows();
    let n_train = ((rows as f64) * opts.train_frac).round() as usize;
    let n_train = n_train.clamp(1, rows);
    let full = Moments::of(&s.x, &s.y);
    let reps = opts.cv_reps.max(1);

    let mut best: Option<(f64, RidgeFit, f64)> = None;
    let mut val_bers = Vec::with_capacity(reps);
    let mut train_bers = Vec::with_capacity(reps);
    let mut best_rep = 0;
    for rep in 0..reps {
        let mut order: Vec<usize> = (0..rows).collect();
        order.shuffle(&mut rng.derive(&format!("cv-{rep}")));
        let (train_rows, val_rows) = order.split_at(n_train);
        let (ones, zeros) = class_counts(targets, train_rows);
        if ones < 2 || zeros < 2 {
            return Err(ReadoutError::DegenerateClasses { ones, zeros });
        }
        let moments = if val_rows.is_empty() {
            full.minus(&Moments::of(&DMatrix::zeros(0, s.x.ncols()), &DVector::zeros(0)))
        } else {
            full.minus(&Moments::of(&s.x.select_rows(val_rows), &s.y.select_rows(val_rows)))
        };
        let fit = solve(&moments, &s.shift, &s.var_all, opts.lambda)?;
        let soft = predict(&fit.weights, features)?;
        let train_soft: Vec<f64> = train_rows.iter().map(|&r| soft[r]).collect();
        let train_truth: Vec<u8> = train_rows.iter().map(|&r| targets[r]).collect();
        let (threshold, train_errors) = optimal_threshold(&train_soft, &train_truth)?;
        let train_ber = train_errors as f64 / train_rows.len() as f64;
        let val_ber = if val_rows.is_empty() {
            train_ber
        } else {
            ber_on(&soft, targets, val_rows, threshold)
        };
        val_bers.push(val_ber);
        train_bers.push(train_ber);
        if best.as_ref().is_none_or(|(b, _, _)| val_ber < *b) {
            best = Some((val_ber, fit, threshold));
            best_rep = rep;
        }
    }
    let (_, fit, threshold) = best.expect("at least one repetition");
    let mean = val_bers.iter().sum::<f64>() / reps as f64;
    let var = val_bers.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / reps as f64;
    Ok(ReadoutModel {
        window: features.window,
        lambda: opts.lambda,
        weights: fit.weights,
        mean: fit.mean,
        scale: fit.scale,
        threshold,
        seed: rng.seed(),
        cv: CvSummary {
            validation_ber: val_bers,
            train_ber: train_bers,
            best_rep,
            mean_validation_ber: mean,
            std_validation_ber: var.sqrt(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_problem(rows: usize, p: usize, seed: u64) -> (FeatureMatrix, Vec<u8>) {
        let mut rng = Rng::new(seed);
        let mut data = DMatrix::<f64>::zeros(rows, p + 1);
        for r in 0..rows {
            for c in 0..p {
                data[(r, c)] = rng.normal() * (1.0 + c as f64) + c as f64;
            }
            data[(r, p)] = 1.0;
        }
        let targets = (0..rows)
            .map(|r| (data[(r, 0)] + 0.3 * data[(r, 1)] + 0.5 * rng.normal() > 0.5) as u8)
            .collect();
        (
            FeatureMatrix {
                window: WindowSpec::new(0, 0),
                data,
            },
            targets,
        )
    }

    fn train_sse(f: &FeatureMatrix, y: &[u8], lambda: f64) -> f64 {
        let fit = fit_ridge(f, y, None, lambda).unwrap();
        predict(&fit.weights, f)
            .unwrap()
            .iter()
            .zip(y)
            .map(|(s, &t)| (s - t as f64).powi(2))
            .sum()
    }

    #[test]
    fn realizable_targets_give_zero_validation_ber() {
        let mut rng = Rng::new(2);
        let rows = 400;
        let mut data = DMatrix::<f64>::zeros(rows, 3);
        let mut y = Vec::new();
        for r in 0..rows {
            let b = (rng.uniform() < 0.5) as u8;
            data[(r, 0)] = b as f64 * 2.0 - 0.3;
            data[(r, 1)] = rng.normal();
            data[(r, 2)] = 1.0;
            y.push(b);
        }
        let f = FeatureMatrix {
            window: WindowSpec::new(0, 0),
            data,
        };
        let model = train(&f, &y, &TrainOptions::default(), &Rng::new(9)).unwrap();
        assert!(model.cv.validation_ber.iter().all(|&b| b == 0.0));
        assert_eq!(model.weights.len(), 3);
    }

    #[test]
    fn training_error_non_decreasing_in_lambda() {
        let (f, y) = random_problem(300, 20, 4);
        let errs: Vec<f64> = [0.0, 0.01, 0.1, 1.0].iter().map(|&l| train_sse(&f, &y, l)).collect();
        for w in errs.windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "{errs:?}");
        }
    }

    #[test]
    fn affine_feature_transform_keeps_decisions() {
        let (f, y) = random_problem(500, 12, 5);
        let mut g = f.clone();
        let last = g.cols() - 1;
        for c in 0..last {
            g.data.column_mut(c).iter_mut().for_each(|v| *v = 3.5 * *v - 7.0);
        }
        let opts = TrainOptions::default();
        let a = train(&f, &y, &opts, &Rng::new(1)).unwrap();
        let b = train(&g, &y, &opts, &Rng::new(1)).unwrap();
        let da = decide(&a.predict(&f).unwrap(), a.threshold);
        let db = decide(&b.predict(&g).unwrap(), b.threshold);
        assert_eq!(da, db);
    }

    #[test]
    fn single_class_training_rejected() {
        let (f, _) = random_problem(50, 3, 6);
        let y = vec![1u8; 50];
        assert!(matches!(
            train(&f, &y, &TrainOptions::default(), &Rng::new(0)),
            Err(ReadoutError::DegenerateClasses { .. })
        ));
    }

    #[test]
    fn deterministic_and_json_round_trip() {
        let (f, y) = random_problem(200, 5, 7);
        let a = train(&f, &y, &TrainOptions::default(), &Rng::new(3)).unwrap();
        let b = train(&f, &y, &TrainOptions::default(), &Rng::new(3)).unwrap();
        assert_eq!(a, b);
        let back = ReadoutModel::from_json(&a.to_json()).unwrap();
        assert_eq!(a, back);
        assert_eq!(a.cv.validation_ber.len(), 10);
    }

    #[test]
    fn predict_checks_shape_and_trivial_weights() {
        let (f, _) = random_problem(10, 3, 8);
        assert!(predict(&[0.0; 3], &f).is_err());
        assert!(predict(&[0.0; 4], &f).unwrap().iter().all(|&v| v == 0.0));
        let bias_only = predict(&[0.0, 0.0, 0.0, 0.5], &f).unwrap();
        assert!(bias_only.iter().all(|&v| v == 0.5));
    }
}
