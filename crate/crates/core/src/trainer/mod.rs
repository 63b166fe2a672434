//! Three-principle adaptation on small networks.
//!
//! Training alternates two steps. The parameter step runs SGD epochs on the
//! composite objective with fixed pseudo-labels. The pseudo-label step then
//! relabels the target, recomputes the target prediction marginal and
//! re-estimates label-shift weights from a held-out source confusion matrix.
//! No pseudo-labels exist before the first pseudo-label step, so the
//! conditional term stays inactive during the first epoch and `alpha`
//! starts at 1.
//!
//! The principles gate the objective:
//!
//! * **I** corrects the label marginal by weighting the source loss with
//!   the estimated `alpha`; off means `alpha = 1`.
//! * **II** matches class-conditional feature centroids; off means `lam1 = 0`.
//! * **III** matches the feature marginal adversarially; off means `lam0 = 0`
//!   and the discriminator is frozen.
//!
//! Term III is the constraint `JS(S(z) || T(z)) <= kappa` under Lagrangian
//! relaxation, with the schedule setting the multiplier `lam0`. How `kappa`
//! enters is a [`ConstraintMode`]: either it is only reported, or the
//! multiplier drops to zero on steps where the discriminator's estimate from
//! the previous batch already sits at or below `kappa`. The discriminator
//! keeps training either way.

mod loss;
mod model;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use loss::{
    composite_loss, grad_check, loss_gradients, train_step, CentroidState, GradCheck, Gradients, LossBreakdown,
    LossWeights, Term, FD_FLOOR, FD_STEP,
};
pub use model::{sigmoid, softmax, softplus, Forward, ModelParams};

use crate::bounds::condshift_lower;
use crate::dist::{Atom, JointPmf, Pmf};
use crate::error::{Error, Result};
use crate::labelshift::{bbsl_weights, confusion_matrix, BbslEstimate, SolveStatus, WeightVector};
use crate::synth::{sample_seeded, stream_rng, Domain, Purpose, SampleBatch, ShiftScenario};

/// Subset of the three principles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Principles {
    pub i: bool,
    pub ii: bool,
    pub iii: bool,
}

impl Principles {
    pub const ALL: Principles = Principles {
        i: true,
        ii: true,
        iii: true,
    };

    pub fn is_empty(&self) -> bool {
        !(self.i || self.ii || self.iii)
    }
}

impl fmt::Display for Principles {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<&str> = [(self.i, "I"), (self.ii, "II"), (self.iii, "III")]
            .iter()
            .filter(|(on, _)| *on)
            .map(|(_, n)| *n)
            .collect();
        f.write_str(&parts.join("+"))
    }
}

impl FromStr for Principles {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = Principles {
            i: false,
            ii: false,
            iii: false,
        };
        for part in s.split(['+', ',']).map(str::trim).filter(|t| !t.is_empty()) {
            match part.to_ascii_uppercase().as_str() {
                "I" | "1" => p.i = true,
                "II" | "2" => p.ii = true,
                "III" | "3" => p.iii = true,
                other => return Err(Error::InvalidConfig(format!("unknown principle `{other}`"))),
            }
        }
        if p.is_empty() {
            return Err(Error::InvalidConfig("at least one principle is required".into()));
        }
        Ok(p)
    }
}

impl Serialize for Principles {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Principles {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// How the marginal-matching level `kappa` acts on the multiplier `lam0`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintMode {
    /// `lam0` always follows the schedule; `kappa` is only reported.
    #[default]
    Relaxed,
    /// `lam0` follows the schedule while the estimated feature JS exceeds
    /// `kappa` and is zero otherwise.
    Slack,
}

impl fmt::Display for ConstraintMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConstraintMode::Relaxed => "relaxed",
            ConstraintMode::Slack => "slack",
        })
    }
}

impl FromStr for ConstraintMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "relaxed" => Ok(ConstraintMode::Relaxed),
            "slack" => Ok(ConstraintMode::Slack),
            other => Err(Error::InvalidConfig(format!("unknown constraint mode `{other}`"))),
        }
    }
}

/// Principle subsets in the order ablation tables list them.
pub fn ablation_subsets() -> Vec<Principles> {
    ["III", "I+III", "I+II", "II+III", "I+II+III"]
        .iter()
        .map(|s| s.parse().expect("valid subset"))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Schedule constant in `lam0 = 2 / (1 + exp(k m)) - 1`.
    pub k: f64,
    /// `lam1 = big_k * lam0`.
    pub big_k: f64,
    /// Target level for the feature-marginal JS estimate.
    pub kappa: f64,
    pub constraint: ConstraintMode,
    pub centroid_momentum: f64,
    pub seed: u64,
    pub principles: Principles,
    pub hidden: usize,
    pub features: usize,
    pub n_source: usize,
    pub n_target: usize,
    /// Fraction of source samples held out for the confusion matrix.
    pub holdout_frac: f64,
    /// Multiplier on the `1/sqrt(fan_in)` init scale.
    pub init_scale: f64,
    /// Quantile bins for the discretized-feature diagnostics; 0 disables them.
    pub diag_bins: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            batch_size: 64,
            learning_rate: 0.05,
            k: -10.0,
            big_k: 2.0,
            kappa: 0.05,
            constraint: ConstraintMode::Relaxed,
            centroid_momentum: 0.7,
            seed: 0,
            principles: Principles::ALL,
            hidden: 16,
            features: 16,
            n_source: 2000,
            n_target: 2000,
            holdout_frac: 0.2,
            init_scale: 1.0,
            diag_bins: 16,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.epochs == 0 || self.batch_size == 0 {
            return bad("epochs and batch_size must be positive".into());
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad(format!("learning_rate = {} must be positive", self.learning_rate));
        }
        if self.big_k.is_nan() || self.big_k <= 1.0 {
            return bad(format!("big_k = {} must exceed 1", self.big_k));
        }
        if !(0.0..1.0).contains(&self.centroid_momentum) {
            return bad(format!("centroid_momentum = {} must lie in [0, 1)", self.centroid_momentum));
        }
        if !(self.holdout_frac > 0.0 && self.holdout_frac < 1.0) {
            return bad(format!("holdout_frac = {} must lie in (0, 1)", self.holdout_frac));
        }
        if self.hidden == 0 || self.features == 0 {
            return bad("layer widths must be positive".into());
        }
        if self.principles.is_empty() {
            return bad("at least one principle is required".into());
        }
        let n_hold = self.holdout_size();
        if n_hold == 0 || n_hold >= self.n_source || self.n_target == 0 {
            return bad("sample sizes leave an empty split".into());
        }
        Ok(())
    }

    fn holdout_size(&self) -> usize {
        (self.holdout_frac * self.n_source as f64).round() as usize
    }

    /// `2 / (1 + exp(k m)) - 1` at training progress `m` in `[0, 1]`.
    pub fn schedule(&self, progress: f64) -> f64 {
        2.0 / (1.0 + (self.k * progress).exp()) - 1.0
    }
}

/// Random init for the configured widths.
pub fn init_models(cfg: &TrainConfig, n_classes: usize) -> ModelParams {
    ModelParams::random(cfg.hidden, cfg.features, n_classes, cfg.init_scale, cfg.seed)
}

/// Output of the pseudo-label step.
#[derive(Clone, Debug, PartialEq)]
pub struct PseudoLabels {
    pub labels: Vec<usize>,
    pub t_pred: Pmf,
    pub alpha: BbslEstimate,
}

/// Predicts target labels, their marginal and the label-shift weights from
/// the held-out source confusion matrix.
pub fn pseudo_label_step(m: &ModelParams, target: &[[f64; 2]], holdout: &SampleBatch) -> Result<PseudoLabels> {
    if target.is_empty() {
        return Err(Error::EmptyInput("no target samples".into()));
    }
    let c = m.n_classes;
    let labels: Vec<usize> = target.iter().map(|x| m.predict(x)).collect();
    let mut freq = vec![0.0; c];
    for &y in &labels {
        freq[y] += 1.0;
    }
    let n = labels.len() as f64;
    freq.iter_mut().for_each(|v| *v /= n);
    let t_pred = Pmf::from_probs(freq)?;
    let preds: Vec<usize> = holdout.xs.iter().map(|x| m.predict(x)).collect();
    let cm = confusion_matrix(&preds, &holdout.ys, c)?;
    let alpha = bbsl_weights(&cm, &t_pred)?;
    Ok(PseudoLabels { labels, t_pred, alpha })
}

/// Feature-space quantities on a one-dimensional discretization of the
/// learned features.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureDiagnostics {
    /// `JS(S(z) || T(z))` in nats.
    pub feature_js: f64,
    /// `JS(T(y) || S(y))` in nats.
    pub label_js: f64,
    /// Lower bound on the label-conditional shift.
    pub condshift_lo: f64,
    /// The label-conditional shift itself.
    pub condshift: f64,
}

/// Projects pooled features onto their first principal direction, cuts the
/// projection at `bins` pooled quantiles and evaluates the conditional-shift
/// lower bound on the resulting empirical joints (true labels on both sides).
pub fn feature_diagnostics(
    m: &ModelParams,
    source: &SampleBatch,
    target: &SampleBatch,
    bins: usize,
) -> Result<FeatureDiagnostics> {
    let f = m.features;
    let zs: Vec<Vec<f64>> = source.xs.iter().map(|x| m.features_of(x)).collect();
    let zt: Vec<Vec<f64>> = target.xs.iter().map(|x| m.features_of(x)).collect();
    let pooled: Vec<&Vec<f64>> = zs.iter().chain(&zt).collect();
    let n = pooled.len() as f64;
    let mean: Vec<f64> = (0..f).map(|j| pooled.iter().map(|z| z[j]).sum::<f64>() / n).collect();
    let cov = DMatrix::from_fn(f, f, |a, b| {
        pooled.iter().map(|z| (z[a] - mean[a]) * (z[b] - mean[b])).sum::<f64>() / n
    });
    let eig = SymmetricEigen::new(cov);
    let top = eig.eigenvalues.imax();
    let dir: Vec<f64> = eig.eigenvectors.column(top).iter().copied().collect();
    let project = |z: &Vec<f64>| z.iter().zip(&mean).zip(&dir).map(|((a, m), d)| (a - m) * d).sum::<f64>();
    let ps: Vec<f64> = zs.iter().map(project).collect();
    let pt: Vec<f64> = zt.iter().map(project).collect();

    let mut sorted: Vec<f64> = ps.iter().chain(&pt).copied().collect();
    sorted.sort_by(f64::total_cmp);
    let cuts: Vec<f64> = (1..bins)
        .map(|k| sorted[(k * sorted.len() / bins).min(sorted.len() - 1)])
        .collect();
    let bin_of = |v: f64| cuts.partition_point(|c| *c < v);

    let c = m.n_classes;
    let joint = |proj: &[f64], ys: &[usize]| -> Result<JointPmf> {
        let mut w = vec![0.0; bins * c];
        for (&v, &y) in proj.iter().zip(ys) {
            w[bin_of(v) * c + y] += 1.0;
        }
        let xs = (0..bins).map(|b| Atom::new(format!("bin{b}"))).collect();
        let ys = (0..c).map(|y| Atom::new(y.to_string())).collect();
        JointPmf::from_weights(xs, ys, &w)
    };
    let r = condshift_lower(&joint(&ps, &source.ys)?, &joint(&pt, &target.ys)?)?;
    Ok(FeatureDiagnostics {
        feature_js: r.details["js_features"],
        label_js: r.details["js_labels"],
        condshift_lo: r.bound_lo,
        condshift: r.lhs,
    })
}

/// One row of the training trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub epoch: usize,
    pub lambda0: f64,
    pub lambda1: f64,
    /// Source cross-entropy, weighted by `alpha` when principle I is on.
    pub loss_i: f64,
    pub loss_ii: f64,
    /// Discriminator estimate of the feature-marginal JS.
    pub loss_iii: f64,
    pub target_accuracy: f64,
    pub alpha_hat: Vec<f64>,
    pub t_pred: Vec<f64>,
    pub bbsl_status: SolveStatus,
    pub within_kappa: bool,
    /// Fraction of the epoch's steps on which the marginal constraint was
    /// active.
    pub constraint_active: f64,
    pub diagnostics: Option<FeatureDiagnostics>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    pub principles: Principles,
    pub seed: u64,
    /// State before the first parameter step (`epoch = 0`).
    pub initial: TraceRow,
    /// One row per epoch.
    pub rows: Vec<TraceRow>,
}

impl TrainTrace {
    pub fn final_accuracy(&self) -> f64 {
        self.rows.last().map_or(self.initial.target_accuracy, |r| r.target_accuracy)
    }
}

fn accuracy(m: &ModelParams, batch: &SampleBatch) -> f64 {
    let hits = batch.xs.iter().zip(&batch.ys).filter(|(x, y)| m.predict(x) == **y).count();
    hits as f64 / batch.len() as f64
}

fn gather(b: &SampleBatch, idx: &[usize], labels: Option<&[usize]>) -> SampleBatch {
    SampleBatch {
        xs: idx.iter().map(|&i| b.xs[i]).collect(),
        ys: idx.iter().map(|&i| labels.map_or(b.ys[i], |l| l[i])).collect(),
        domain: b.domain,
    }
}

/// Runs the alternating loop on fresh samples of `sc`.
pub fn run_training(sc: &ShiftScenario, cfg: &TrainConfig) -> Result<TrainTrace> {
    cfg.validate()?;
    sc.validate()?;
    let c = sc.n_classes;
    let all_source = sample_seeded(sc, Domain::Source, cfg.n_source, cfg.seed, 0)?;
    let n_train = cfg.n_source - cfg.holdout_size();
    let train = all_source.prefix(n_train);
    let holdout = SampleBatch {
        xs: all_source.xs[n_train..].to_vec(),
        ys: all_source.ys[n_train..].to_vec(),
        domain: Domain::Source,
    };
    let target = sample_seeded(sc, Domain::Target, cfg.n_target, cfg.seed, 0)?;

    let mut m = init_models(cfg, c);
    let mut st = CentroidState::new(c, cfg.features);
    let s_hat = train.label_frequencies(c);
    let ones = vec![1.0; c];
    let p = cfg.principles;

    let diag = |m: &ModelParams| -> Result<Option<FeatureDiagnostics>> {
        if cfg.diag_bins == 0 {
            return Ok(None);
        }
        feature_diagnostics(m, &train, &target, cfg.diag_bins).map(Some)
    };

    let mut pseudo: Vec<usize> = target.xs.iter().map(|x| m.predict(x)).collect();
    let mut t_pred = s_hat.clone();
    let mut alpha_hat = WeightVector::ones(c);
    let mut status = SolveStatus::Exact;
    let mut have_pseudo = false;
    let mut js_prev = 0.0;

    let initial = {
        let w = LossWeights {
            alpha: &ones,
            s_hat: &s_hat,
            t_pred: &t_pred,
            lam0: 0.0,
            lam1: 0.0,
            momentum: cfg.centroid_momentum,
        };
        let tb = gather(&target, &(0..target.len()).collect::<Vec<_>>(), Some(&pseudo));
        let (_, b) = composite_loss(&m, &train, &tb, &st, &w)?;
        TraceRow {
            epoch: 0,
            lambda0: 0.0,
            lambda1: 0.0,
            loss_i: b.i,
            loss_ii: if p.ii { b.ii } else { 0.0 },
            loss_iii: if p.iii { b.js_estimate() } else { 0.0 },
            target_accuracy: accuracy(&m, &target),
            alpha_hat: alpha_hat.alpha.clone(),
            t_pred: t_pred.clone(),
            bbsl_status: status,
            within_kappa: b.js_estimate() <= cfg.kappa,
            constraint_active: 0.0,
            diagnostics: diag(&m)?,
        }
    };

    let steps_per_epoch = n_train.div_ceil(cfg.batch_size);
    let total_steps = (cfg.epochs * steps_per_epoch) as f64;
    let mut rows = Vec::with_capacity(cfg.epochs);
    let mut step = 0usize;
    for epoch in 1..=cfg.epochs {
        let mut rng = stream_rng(cfg.seed, Purpose::Shuffle, Domain::Source, epoch as u64);
        let mut perm_s: Vec<usize> = (0..n_train).collect();
        let mut perm_t: Vec<usize> = (0..target.len()).collect();
        perm_s.shuffle(&mut rng);
        perm_t.shuffle(&mut rng);

        let alpha = if p.i { alpha_hat.alpha.clone() } else { ones.clone() };
        let mut acc = LossBreakdown::default();
        let (mut lam0, mut lam1) = (0.0, 0.0);
        let mut active = 0usize;
        for b in 0..steps_per_epoch {
            let lo = b * cfg.batch_size;
            let hi = (lo + cfg.batch_size).min(n_train);
            let sb = gather(&train, &perm_s[lo..hi], None);
            let tidx: Vec<usize> = (lo..hi).map(|j| perm_t[j % perm_t.len()]).collect();
            let tb = gather(&target, &tidx, Some(&pseudo));

            let sched = cfg.schedule(step as f64 / total_steps);
            let binding = cfg.constraint == ConstraintMode::Relaxed || js_prev > cfg.kappa;
            lam0 = if p.iii { sched } else { 0.0 };
            active += usize::from(p.iii && binding);
            lam1 = if p.ii && have_pseudo { cfg.big_k * sched } else { 0.0 };
            let w = LossWeights {
                alpha: &alpha,
                s_hat: &s_hat,
                t_pred: &t_pred,
                lam0: if binding { lam0 } else { 0.0 },
                lam1,
                momentum: cfg.centroid_momentum,
            };
            let (next, next_st, br) = train_step(&m, &sb, &tb, &st, &w, cfg.learning_rate, p.iii)?;
            if !next.is_finite() {
                return Err(Error::NonFiniteGradient { term: "composite" });
            }
            m = next;
            st = next_st;
            acc.i += br.i;
            acc.ii += br.ii;
            acc.bce += br.bce;
            js_prev = br.js_estimate();
            step += 1;
        }
        let k = steps_per_epoch as f64;
        let mean = LossBreakdown {
            i: acc.i / k,
            ii: acc.ii / k,
            bce: acc.bce / k,
            total: 0.0,
        };

        let pl = pseudo_label_step(&m, &target.xs, &holdout)?;
        pseudo = pl.labels;
        have_pseudo = true;
        t_pred = pl.t_pred.probs().to_vec();
        alpha_hat = pl.alpha.weights;
        status = pl.alpha.status;

        rows.push(TraceRow {
            epoch,
            lambda0: lam0,
            lambda1: lam1,
            loss_i: mean.i,
            loss_ii: if p.ii { mean.ii } else { 0.0 },
            loss_iii: if p.iii { mean.js_estimate() } else { 0.0 },
            target_accuracy: accuracy(&m, &target),
            alpha_hat: alpha_hat.alpha.clone(),
            t_pred: t_pred.clone(),
            bbsl_status: status,
            within_kappa: mean.js_estimate() <= cfg.kappa,
            constraint_active: active as f64 / k,
            diagnostics: diag(&m)?,
        });
    }
    Ok(TrainTrace {
        principles: p,
        seed: cfg.seed,
        initial,
        rows,
    })
}

/// Final target accuracies of one principle subset across seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub principles: Principles,
    pub accuracies: Vec<f64>,
}

impl AblationRow {
    pub fn mean(&self) -> f64 {
        self.accuracies.iter().sum::<f64>() / self.accuracies.len().max(1) as f64
    }

    /// Sample standard deviation.
    pub fn std(&self) -> f64 {
        let n = self.accuracies.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean();
        (self.accuracies.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / (n - 1) as f64).sqrt()
    }
}

/// Trains every subset under every seed, in parallel. Runs sharing a seed
/// see the same samples, init and shuffles.
pub fn run_ablation(sc: &ShiftScenario, base: &TrainConfig, subsets: &[Principles], seeds: &[u64]) -> Result<Vec<AblationRow>> {
    let jobs: Vec<(usize, u64)> = (0..subsets.len())
        .flat_map(|s| seeds.iter().map(move |&seed| (s, seed)))
        .collect();
    let accs = jobs
        .par_iter()
        .map(|&(s, seed)| {
            let cfg = TrainConfig {
                principles: subsets[s],
                seed,
                diag_bins: 0,
                ..base.clone()
            };
            run_training(sc, &cfg).map(|t| t.final_accuracy())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(subsets
        .iter()
        .enumerate()
        .map(|(s, &p)| AblationRow {
            principles: p,
            accuracies: accs[s * seeds.len()..(s + 1) * seeds.len()].to_vec(),
        })
        .collect())
}
