//! The composite objective and its analytic gradient.
//!
//! * Term I: label-weighted cross-entropy on the source batch.
//! * Term II: `sum_y (S(y) + T_p(y)) |mu_s(y) - mu_t(y)|^2` over moving-average
//!   class centroids of the features, target classes taken from pseudo-labels.
//! * Term III: the discriminator's binary cross-entropy. The discriminator
//!   descends it while `g` ascends it, so it enters the composite with a
//!   minus sign: `I + lam1 II - lam0 BCE`.

use serde::{Deserialize, Serialize};

use super::model::{sigmoid, softmax, softplus, Forward, ModelParams};
use crate::error::{Error, Result};
use crate::synth::SampleBatch;

/// Moving-average class centroids in feature space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CentroidState {
    pub source: Vec<Vec<f64>>,
    pub target: Vec<Vec<f64>>,
    /// Number of batches that contributed to each centroid; zero means the
    /// centroid is uninitialized.
    pub seen_source: Vec<u64>,
    pub seen_target: Vec<u64>,
}

impl CentroidState {
    pub fn new(n_classes: usize, features: usize) -> Self {
        CentroidState {
            source: vec![vec![0.0; features]; n_classes],
            target: vec![vec![0.0; features]; n_classes],
            seen_source: vec![0; n_classes],
            seen_target: vec![0; n_classes],
        }
    }
}

/// Everything besides the model and batches that the objective depends on.
#[derive(Clone, Copy, Debug)]
pub struct LossWeights<'a> {
    /// Per-class weight of the source cross-entropy.
    pub alpha: &'a [f64],
    /// Source label marginal.
    pub s_hat: &'a [f64],
    /// Target pseudo-label marginal.
    pub t_pred: &'a [f64],
    pub lam0: f64,
    pub lam1: f64,
    /// `rho` in `mu <- rho mu + (1 - rho) batch_mean`.
    pub momentum: f64,
}

/// Values of the individual terms and of the composite.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub i: f64,
    pub ii: f64,
    pub bce: f64,
    pub total: f64,
}

impl LossBreakdown {
    /// The discriminator-based estimate `ln 2 - BCE / 2` of the feature
    /// marginal JS divergence in nats.
    pub fn js_estimate(&self) -> f64 {
        std::f64::consts::LN_2 - 0.5 * self.bce
    }
}

/// Gradients of every term with respect to every parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub i: Vec<f64>,
    pub ii: Vec<f64>,
    pub bce: Vec<f64>,
    pub composite: Vec<f64>,
}

/// Centroids a step would produce, with the coefficient linking each batch
/// feature to its class centroid.
struct Centroids {
    source: Vec<Option<Vec<f64>>>,
    target: Vec<Option<Vec<f64>>>,
    coef_source: Vec<f64>,
    coef_target: Vec<f64>,
    in_batch: Vec<bool>,
}

fn batch_centroids(prev: &[Vec<f64>], seen: &[u64], zs: &[Vec<f64>], ys: &[usize], rho: f64) -> (Vec<Option<Vec<f64>>>, Vec<f64>, Vec<bool>) {
    let c = prev.len();
    let f = prev.first().map_or(0, Vec::len);
    let mut sum = vec![vec![0.0; f]; c];
    let mut count = vec![0usize; c];
    for (z, &y) in zs.iter().zip(ys) {
        count[y] += 1;
        for (a, b) in sum[y].iter_mut().zip(z) {
            *a += b;
        }
    }
    let mut out = Vec::with_capacity(c);
    let mut coef = vec![0.0; c];
    for y in 0..c {
        if count[y] > 0 {
            let n = count[y] as f64;
            let keep = if seen[y] > 0 { rho } else { 0.0 };
            coef[y] = (1.0 - keep) / n;
            out.push(Some(
                prev[y]
                    .iter()
                    .zip(&sum[y])
                    .map(|(p, s)| keep * p + (1.0 - keep) * s / n)
                    .collect(),
            ));
        } else if seen[y] > 0 {
            out.push(Some(prev[y].clone()));
        } else {
            out.push(None);
        }
    }
    (out, coef, count.iter().map(|&n| n > 0).collect())
}

fn centroids(st: &CentroidState, zs: &[Vec<f64>], ys: &[usize], zt: &[Vec<f64>], yt: &[usize], rho: f64) -> Centroids {
    let (source, coef_source, in_s) = batch_centroids(&st.source, &st.seen_source, zs, ys, rho);
    let (target, coef_target, in_t) = batch_centroids(&st.target, &st.seen_target, zt, yt, rho);
    let in_batch = in_s.iter().zip(&in_t).map(|(a, b)| *a || *b).collect();
    Centroids {
        source,
        target,
        coef_source,
        coef_target,
        in_batch,
    }
}

fn check_inputs(m: &ModelParams, src: &SampleBatch, tgt: &SampleBatch, st: &CentroidState, w: &LossWeights) -> Result<()> {
    let c = m.n_classes;
    if src.is_empty() || tgt.is_empty() {
        return Err(Error::EmptyInput("source and target batches must be nonempty".into()));
    }
    if w.alpha.len() != c || w.s_hat.len() != c || w.t_pred.len() != c || st.source.len() != c {
        return Err(Error::ShapeMismatch(format!("class-indexed inputs must have {c} entries")));
    }
    if src.ys.iter().chain(&tgt.ys).any(|&y| y >= c) {
        return Err(Error::OutOfRange(format!("label outside 0..{c}")));
    }
    if !(0.0..1.0).contains(&w.momentum) {
        return Err(Error::InvalidConfig(format!("momentum {} must lie in [0, 1)", w.momentum)));
    }
    Ok(())
}

/// Loss terms, their gradients and the centroids the step would commit.
pub(crate) struct Evaluation {
    pub breakdown: LossBreakdown,
    pub grads: Option<Gradients>,
    pub next_source: Vec<Option<Vec<f64>>>,
    pub next_target: Vec<Option<Vec<f64>>>,
}

pub(crate) fn evaluate(
    m: &ModelParams,
    src: &SampleBatch,
    tgt: &SampleBatch,
    st: &CentroidState,
    w: &LossWeights,
    with_grad: bool,
) -> Result<Evaluation> {
    check_inputs(m, src, tgt, st, w)?;
    let fs: Vec<Forward> = src.xs.iter().map(|x| m.forward(x)).collect();
    let ft: Vec<Forward> = tgt.xs.iter().map(|x| m.forward(x)).collect();
    let zs: Vec<Vec<f64>> = fs.iter().map(|f| f.z.clone()).collect();
    let zt: Vec<Vec<f64>> = ft.iter().map(|f| f.z.clone()).collect();
    let (ns, nt) = (src.len() as f64, tgt.len() as f64);
    let nf = m.features;
    let np = m.theta.len();

    let mut gi = vec![0.0; np];
    let mut gii = vec![0.0; np];
    let mut gb = vec![0.0; np];
    // per-sample feature gradients of each term
    let mut dz_i = vec![vec![0.0; nf]; src.len()];
    let mut dz_ii_s = vec![vec![0.0; nf]; src.len()];
    let mut dz_ii_t = vec![vec![0.0; nf]; tgt.len()];
    let mut dz_b_s = vec![vec![0.0; nf]; src.len()];
    let mut dz_b_t = vec![vec![0.0; nf]; tgt.len()];
    let (v0, c0, u0, e0) = (m.v().start, m.c().start, m.u().start, m.e());

    // Term I
    let mut loss_i = 0.0;
    for (n, (z, &y)) in zs.iter().zip(&src.ys).enumerate() {
        let logits = m.logits(z);
        let p = softmax(&logits);
        let a = w.alpha[y] / ns;
        loss_i -= a * p[y].max(f64::MIN_POSITIVE).ln();
        if with_grad {
            for k in 0..m.n_classes {
                let delta = a * (p[k] - f64::from(u8::from(k == y)));
                gi[c0 + k] += delta;
                for j in 0..nf {
                    gi[v0 + k * nf + j] += delta * z[j];
                    dz_i[n][j] += delta * m.theta[v0 + k * nf + j];
                }
            }
        }
    }

    // Term II
    let cents = centroids(st, &zs, &src.ys, &zt, &tgt.ys, w.momentum);
    let mut loss_ii = 0.0;
    for y in 0..m.n_classes {
        let (Some(ms), Some(mt)) = (&cents.source[y], &cents.target[y]) else {
            continue;
        };
        if !cents.in_batch[y] {
            continue;
        }
        let wy = w.s_hat[y] + w.t_pred[y];
        let diff: Vec<f64> = ms.iter().zip(mt).map(|(a, b)| a - b).collect();
        loss_ii += wy * diff.iter().map(|d| d * d).sum::<f64>();
        if with_grad {
            for (n, &ly) in src.ys.iter().enumerate() {
                if ly == y {
                    for j in 0..nf {
                        dz_ii_s[n][j] += 2.0 * wy * diff[j] * cents.coef_source[y];
                    }
                }
            }
            for (n, &ly) in tgt.ys.iter().enumerate() {
                if ly == y {
                    for j in 0..nf {
                        dz_ii_t[n][j] -= 2.0 * wy * diff[j] * cents.coef_target[y];
                    }
                }
            }
        }
    }

    // Term III: BCE with source labelled 1
    let mut bce = 0.0;
    for (n, z) in zs.iter().enumerate() {
        let a = m.disc_logit(z);
        bce += softplus(-a) / ns;
        if with_grad {
            let da = (sigmoid(a) - 1.0) / ns;
            gb[e0] += da;
            for j in 0..nf {
                gb[u0 + j] += da * z[j];
                dz_b_s[n][j] += da * m.theta[u0 + j];
            }
        }
    }
    for (n, z) in zt.iter().enumerate() {
        let a = m.disc_logit(z);
        bce += softplus(a) / nt;
        if with_grad {
            let da = sigmoid(a) / nt;
            gb[e0] += da;
            for j in 0..nf {
                gb[u0 + j] += da * z[j];
                dz_b_t[n][j] += da * m.theta[u0 + j];
            }
        }
    }

    let total = loss_i + w.lam1 * loss_ii - w.lam0 * bce;
    let grads = if with_grad {
        for (n, (x, f)) in src.xs.iter().zip(&fs).enumerate() {
            m.backprop_g(x, f, &dz_i[n], &mut gi);
            m.backprop_g(x, f, &dz_ii_s[n], &mut gii);
            m.backprop_g(x, f, &dz_b_s[n], &mut gb);
        }
        for (n, (x, f)) in tgt.xs.iter().zip(&ft).enumerate() {
            m.backprop_g(x, f, &dz_ii_t[n], &mut gii);
            m.backprop_g(x, f, &dz_b_t[n], &mut gb);
        }
        let composite = (0..np).map(|k| gi[k] + w.lam1 * gii[k] - w.lam0 * gb[k]).collect();
        Some(Gradients {
            i: gi,
            ii: gii,
            bce: gb,
            composite,
        })
    } else {
        None
    };
    Ok(Evaluation {
        breakdown: LossBreakdown {
            i: loss_i,
            ii: loss_ii,
            bce,
            total,
        },
        grads,
        next_source: cents.source,
        next_target: cents.target,
    })
}

/// Composite loss and its per-term breakdown. The target batch carries
/// pseudo-labels in `ys`.
pub fn composite_loss(
    m: &ModelParams,
    src: &SampleBatch,
    tgt: &SampleBatch,
    st: &CentroidState,
    w: &LossWeights,
) -> Result<(f64, LossBreakdown)> {
    let e = evaluate(m, src, tgt, st, w, false)?;
    Ok((e.breakdown.total, e.breakdown))
}

/// Analytic gradients of every term.
pub fn loss_gradients(
    m: &ModelParams,
    src: &SampleBatch,
    tgt: &SampleBatch,
    st: &CentroidState,
    w: &LossWeights,
) -> Result<(LossBreakdown, Gradients)> {
    let e = evaluate(m, src, tgt, st, w, true)?;
    Ok((e.breakdown, e.grads.expect("requested")))
}

/// One SGD step. `g` and `h` descend the composite; `d` descends the BCE,
/// which is ascent on the composite's adversarial term. Centroids move by
/// the momentum rule using the pre-step features.
pub fn train_step(
    m: &ModelParams,
    src: &SampleBatch,
    tgt: &SampleBatch,
    st: &CentroidState,
    w: &LossWeights,
    lr: f64,
    train_disc: bool,
) -> Result<(ModelParams, CentroidState, LossBreakdown)> {
    let e = evaluate(m, src, tgt, st, w, true)?;
    let g = e.grads.expect("requested");
    for (name, v) in [("I", &g.i), ("II", &g.ii), ("III", &g.bce)] {
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteGradient { term: name });
        }
    }
    let mut next = m.clone();
    for k in m.g_range().chain(m.h_range()) {
        next.theta[k] -= lr * g.composite[k];
    }
    if train_disc {
        for k in m.d_range() {
            next.theta[k] -= lr * g.bce[k];
        }
    }
    let mut cs = st.clone();
    for y in 0..m.n_classes {
        let in_src = src.ys.contains(&y);
        let in_tgt = tgt.ys.contains(&y);
        if in_src {
            cs.source[y] = e.next_source[y].clone().expect("class present");
            cs.seen_source[y] += 1;
        }
        if in_tgt {
            cs.target[y] = e.next_target[y].clone().expect("class present");
            cs.seen_target[y] += 1;
        }
    }
    Ok((next, cs, e.breakdown))
}

/// Which loss a finite-difference audit targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Term {
    I,
    II,
    III,
    Composite,
}

/// Maximum relative errors between analytic and central-difference
/// gradients.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradCheck {
    pub i: f64,
    pub ii: f64,
    pub iii: f64,
    pub composite: f64,
}

impl GradCheck {
    pub fn max(&self) -> f64 {
        self.i.max(self.ii).max(self.iii).max(self.composite)
    }

    pub fn get(&self, t: Term) -> f64 {
        match t {
            Term::I => self.i,
            Term::II => self.ii,
            Term::III => self.iii,
            Term::Composite => self.composite,
        }
    }
}

/// Finite-difference step.
pub const FD_STEP: f64 = 1e-5;

/// Gradient magnitudes below this are compared absolutely.
pub const FD_FLOOR: f64 = 1e-6;

/// Central differences over every parameter for each term separately.
pub fn grad_check(m: &ModelParams, src: &SampleBatch, tgt: &SampleBatch, st: &CentroidState, w: &LossWeights) -> Result<GradCheck> {
    let (_, g) = loss_gradients(m, src, tgt, st, w)?;
    let mut worst = [0.0f64; 4];
    let mut probe = m.clone();
    for k in 0..m.theta.len() {
        let orig = probe.theta[k];
        probe.theta[k] = orig + FD_STEP;
        let up = evaluate(&probe, src, tgt, st, w, false)?.breakdown;
        probe.theta[k] = orig - FD_STEP;
        let dn = evaluate(&probe, src, tgt, st, w, false)?.breakdown;
        probe.theta[k] = orig;
        let num = [
            (up.i - dn.i) / (2.0 * FD_STEP),
            (up.ii - dn.ii) / (2.0 * FD_STEP),
            (up.bce - dn.bce) / (2.0 * FD_STEP),
            (up.total - dn.total) / (2.0 * FD_STEP),
        ];
        let ana = [g.i[k], g.ii[k], g.bce[k], g.composite[k]];
        for t in 0..4 {
            let denom = ana[t].abs().max(num[t].abs()).max(FD_FLOOR);
            worst[t] = worst[t].max((ana[t] - num[t]).abs() / denom);
        }
    }
    Ok(GradCheck {
        i: worst[0],
        ii: worst[1],
        iii: worst[2],
        composite: worst[3],
    })
}
