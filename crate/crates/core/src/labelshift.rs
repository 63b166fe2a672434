//! Label-shift weights by black-box shift estimation.
//!
//! Given a classifier's joint confusion matrix on held-out source data and
//! the distribution of its predictions on the target, the importance weights
//! `alpha(y) = T(y) / S(y)` solve `C alpha = T_pred`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dist::Pmf;
use crate::error::{Error, Result};

/// Condition numbers above this switch the solve to least squares.
pub const MAX_CONDITION: f64 = 1e8;

/// `c[i][j] = P(pred = i, true = j)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub c: Vec<Vec<f64>>,
}

impl ConfusionMatrix {
    pub fn new(c: Vec<Vec<f64>>) -> Result<Self> {
        let n = c.len();
        if n == 0 || c.iter().any(|r| r.len() != n) {
            return Err(Error::ShapeMismatch("confusion matrix must be square and nonempty".into()));
        }
        if c.iter().flatten().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidDistribution("confusion entries must be nonnegative".into()));
        }
        let total: f64 = c.iter().flatten().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(format!("confusion entries sum to {total}")));
        }
        Ok(ConfusionMatrix { c })
    }

    pub fn n_classes(&self) -> usize {
        self.c.len()
    }

    /// Column sums: the source label marginal seen by the matrix.
    pub fn label_marginal(&self) -> Vec<f64> {
        let n = self.n_classes();
        (0..n).map(|j| self.c.iter().map(|r| r[j]).sum()).collect()
    }

    /// Row sums: the source prediction marginal.
    pub fn prediction_marginal(&self) -> Vec<f64> {
        self.c.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn accuracy(&self) -> f64 {
        (0..self.n_classes()).map(|i| self.c[i][i]).sum()
    }
}

/// Normalized joint counts of `(prediction, label)` pairs.
pub fn confusion_matrix(preds: &[usize], labels: &[usize], n_classes: usize) -> Result<ConfusionMatrix> {
    if preds.is_empty() {
        return Err(Error::EmptyInput("no predictions".into()));
    }
    if preds.len() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} predictions for {} labels",
            preds.len(),
            labels.len()
        )));
    }
    let mut c = vec![vec![0.0; n_classes]; n_classes];
    for (&p, &y) in preds.iter().zip(labels) {
        if p >= n_classes || y >= n_classes {
            return Err(Error::OutOfRange(format!("class index outside 0..{n_classes}")));
        }
        c[p][y] += 1.0;
    }
    let n = preds.len() as f64;
    c.iter_mut().flatten().for_each(|v| *v /= n);
    Ok(ConfusionMatrix { c })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    pub alpha: Vec<f64>,
}

impl WeightVector {
    pub fn ones(n: usize) -> Self {
        WeightVector { alpha: vec![1.0; n] }
    }

    /// `T(y) / S(y)`; classes absent from the source get weight 0.
    pub fn ratio(source: &Pmf, target: &Pmf) -> Result<Self> {
        if source.len() != target.len() {
            return Err(Error::ShapeMismatch("label marginals differ in size".into()));
        }
        let alpha = source
            .probs()
            .iter()
            .zip(target.probs())
            .map(|(s, t)| if *s > 0.0 { t / s } else { 0.0 })
            .collect();
        Ok(WeightVector { alpha })
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn linf_distance(&self, other: &WeightVector) -> f64 {
        self.alpha
            .iter()
            .zip(&other.alpha)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    /// Well-conditioned direct solve.
    Exact,
    /// Ill-conditioned; minimum-norm least-squares solution.
    LeastSquares,
    /// Singular and inconsistent, or nothing left after clipping; `alpha = 1`.
    Fallback,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BbslEstimate {
    pub weights: WeightVector,
    pub status: SolveStatus,
    /// Whether any negative component was clipped to zero.
    pub clipped: bool,
    pub condition_number: f64,
}

/// Solves `C alpha = t_pred`, clips negatives, and renormalizes so that
/// `sum_y alpha(y) S(y) = 1` with `S` the column sums of `C`.
pub fn bbsl_weights(c: &ConfusionMatrix, t_pred: &Pmf) -> Result<BbslEstimate> {
    let n = c.n_classes();
    if t_pred.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "{n}x{n} confusion matrix with {} target predictions",
            t_pred.len()
        )));
    }
    let m = DMatrix::from_fn(n, n, |i, j| c.c[i][j]);
    let b = DVector::from_column_slice(t_pred.probs());
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    let fallback = |cond| BbslEstimate {
        weights: WeightVector::ones(n),
        status: SolveStatus::Fallback,
        clipped: false,
        condition_number: cond,
    };

    let (raw, status) = if cond <= MAX_CONDITION {
        match m.clone().lu().solve(&b) {
            Some(x) => (x, SolveStatus::Exact),
            None => return Ok(fallback(cond)),
        }
    } else {
        let eps = smax * n as f64 * f64::EPSILON;
        let x = match svd.solve(&b, eps) {
            Ok(x) => x,
            Err(_) => return Ok(fallback(cond)),
        };
        let residual = (&m * &x - &b).norm();
        if !cond.is_finite() && residual > 1e-9 {
            return Ok(fallback(cond));
        }
        (x, SolveStatus::LeastSquares)
    };

    let clipped = raw.iter().any(|v| *v < 0.0);
    let mut alpha: Vec<f64> = raw.iter().map(|v| v.max(0.0)).collect();
    if clipped || status != SolveStatus::Exact {
        let s = c.label_marginal();
        let mass: f64 = alpha.iter().zip(&s).map(|(a, s)| a * s).sum();
        if mass.is_nan() || mass <= 0.0 {
            return Ok(fallback(cond));
        }
        alpha.iter_mut().for_each(|a| *a /= mass);
    }
    if alpha.iter().any(|a| !a.is_finite()) {
        return Ok(fallback(cond));
    }
    Ok(BbslEstimate {
        weights: WeightVector { alpha },
        status,
        clipped,
        condition_number: cond,
    })
}

/// `mean_i alpha(y_i) loss_i`.
pub fn reweighted_risk(labels: &[usize], losses: &[f64], w: &WeightVector) -> Result<f64> {
    if labels.is_empty() {
        return Err(Error::EmptyInput("no samples".into()));
    }
    if labels.len() != losses.len() {
        return Err(Error::ShapeMismatch("labels and losses differ in length".into()));
    }
    let mut acc = 0.0;
    for (&y, &l) in labels.iter().zip(losses) {
        let a = w
            .alpha
            .get(y)
            .ok_or_else(|| Error::OutOfRange(format!("label {y} has no weight")))?;
        acc += a * l;
    }
    Ok(acc / labels.len() as f64)
}
