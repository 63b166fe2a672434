//! Target-risk bounds and the verifiers that compare them to exact values.
//!
//! Every verifier returns a [`BoundReport`]. All divergences and entropies
//! inside the bound arithmetic are in nats.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dist::{entropy_stats, expected_risk, CondAxis, Conditional, JointPmf, LogBase, LossTable, Pmf};
use crate::divergence::{js, js_nats};
use crate::error::{Error, Result};
use crate::labelshift::{reweighted_risk, WeightVector};
use crate::synth::{sample_seeded, Domain, ShiftScenario};

/// Verdict tolerance on both sides of a band.
pub const VERDICT_TOL: f64 = 1e-9;

/// Tolerance for hypothesis checks such as matched conditionals.
pub const HYPOTHESIS_TOL: f64 = 1e-9;

/// A computed bound next to the quantity it bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    pub lhs: f64,
    #[serde(with = "crate::serde_ext::neg_inf_as_null")]
    pub bound_lo: f64,
    #[serde(with = "crate::serde_ext::pos_inf_as_null")]
    pub bound_hi: f64,
    #[serde(with = "crate::serde_ext::pos_inf_as_null")]
    pub slack_lo: f64,
    #[serde(with = "crate::serde_ext::pos_inf_as_null")]
    pub slack_hi: f64,
    pub holds: bool,
    pub inputs_digest: String,
    /// Named intermediate quantities.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, f64>,
    /// Auxiliary inequalities checked alongside the main verdict.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub checks: BTreeMap<String, bool>,
}

impl BoundReport {
    pub fn new(name: impl Into<String>, lhs: f64, bound_lo: f64, bound_hi: f64, inputs_digest: impl Into<String>) -> Self {
        let mut r = BoundReport {
            name: name.into(),
            lhs,
            bound_lo,
            bound_hi,
            slack_lo: 0.0,
            slack_hi: 0.0,
            holds: false,
            inputs_digest: inputs_digest.into(),
            details: BTreeMap::new(),
            checks: BTreeMap::new(),
        };
        r.reevaluate();
        r
    }

    /// Replaces the bounded quantity and recomputes slacks and verdict.
    pub fn with_lhs(mut self, lhs: f64) -> Self {
        self.lhs = lhs;
        self.reevaluate();
        self
    }

    pub fn with_detail(mut self, key: &str, value: f64) -> Self {
        self.details.insert(key.to_string(), value);
        self
    }

    pub fn with_check(mut self, key: &str, ok: bool) -> Self {
        self.checks.insert(key.to_string(), ok);
        self
    }

    /// `true` when the verdict and every auxiliary check hold.
    pub fn all_hold(&self) -> bool {
        self.holds && self.checks.values().all(|&c| c)
    }

    fn reevaluate(&mut self) {
        self.slack_lo = self.lhs - self.bound_lo;
        self.slack_hi = self.bound_hi - self.lhs;
        self.holds = self.bound_lo - VERDICT_TOL <= self.lhs && self.lhs <= self.bound_hi + VERDICT_TOL;
    }
}

impl fmt::Display for BoundReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} <= {} <= {} [{}]",
            self.name,
            self.bound_lo,
            self.lhs,
            self.bound_hi,
            if self.holds { "holds" } else { "VIOLATED" }
        )
    }
}

/// Tail assumption on the loss.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase")]
pub enum TailParams {
    /// Loss confined to an interval of length `g`.
    Bounded { g: f64 },
    /// `log E exp(l (L - E L)) <= l^2 sigma^2 / 2`.
    Subgaussian { sigma: f64 },
    /// `log E exp(l (L - E L)) <= l^2 sigma / (2 (1 - a|l|))`.
    Subgamma { sigma: f64, a: f64 },
}

impl TailParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| Error::InvalidTail(format!("{what} = {v} must be finite and nonnegative"));
        match *self {
            TailParams::Bounded { g } if !(g.is_finite() && g >= 0.0) => Err(bad("g", g)),
            TailParams::Subgaussian { sigma } if !(sigma.is_finite() && sigma >= 0.0) => Err(bad("sigma", sigma)),
            TailParams::Subgamma { sigma, .. } if !(sigma.is_finite() && sigma >= 0.0) => Err(bad("sigma", sigma)),
            TailParams::Subgamma { a, .. } if !(a.is_finite() && a >= 0.0) => Err(bad("a", a)),
            _ => Ok(()),
        }
    }

    /// The tail parameters a loss table of range `g` satisfies.
    pub fn for_range(self, g: f64) -> TailParams {
        match self {
            TailParams::Bounded { .. } => TailParams::Bounded { g },
            other => other,
        }
    }

    /// Excess term added to the source risk, as a function of
    /// `r = sqrt(JS)` in nats (or any upper estimate of it).
    pub fn excess_from_root(&self, r: f64) -> f64 {
        match *self {
            TailParams::Bounded { g } => g / std::f64::consts::SQRT_2 * r,
            TailParams::Subgaussian { sigma } => sigma * std::f64::consts::SQRT_2 * r,
            TailParams::Subgamma { sigma, a } => (sigma + 1.0) * std::f64::consts::SQRT_2 * r + 2.0 * a * r * r,
        }
    }

    fn label(&self) -> &'static str {
        match self {
            TailParams::Bounded { .. } => "bounded",
            TailParams::Subgaussian { .. } => "subgaussian",
            TailParams::Subgamma { .. } => "subgamma",
        }
    }

    fn check_loss(&self, l: &LossTable) -> Result<()> {
        self.validate()?;
        if let TailParams::Bounded { g } = *self {
            if l.range_g() > g + 1e-12 {
                return Err(Error::InvalidTail(format!(
                    "loss range {} exceeds declared g = {g}",
                    l.range_g()
                )));
            }
        }
        Ok(())
    }
}

/// `R_S + excess(JS)` for the given tail; `js_nats` in nats.
pub fn theorem1_bound(r_s: f64, js_nats: f64, tail: &TailParams) -> f64 {
    r_s + tail.excess_from_root(js_nats.max(0.0).sqrt())
}

fn same_grid(s: &JointPmf, t: &JointPmf) -> Result<()> {
    if s.x_support() != t.x_support() || s.y_support() != t.y_support() {
        return Err(Error::ShapeMismatch("source and target must share X and Y supports".into()));
    }
    Ok(())
}

fn risks(s: &JointPmf, t: &JointPmf, l: &LossTable) -> Result<(f64, f64)> {
    same_grid(s, t)?;
    Ok((expected_risk(s, l)?, expected_risk(t, l)?))
}

/// Upper bound on the target risk through the joint JS divergence.
pub fn theorem1_upper(s: &JointPmf, t: &JointPmf, l: &LossTable, tail: &TailParams) -> Result<BoundReport> {
    tail.check_loss(l)?;
    let (r_s, r_t) = risks(s, t, l)?;
    let j = js(s, t, LogBase::E)?;
    let hi = theorem1_bound(r_s, j, tail);
    Ok(BoundReport::new(
        format!("theorem1_{}", tail.label()),
        r_t,
        f64::NEG_INFINITY,
        hi,
        format!("R_S={r_s:.6} JS={j:.6e}"),
    )
    .with_detail("r_s", r_s)
    .with_detail("js_nats", j))
}

/// `[R_S - sqrt(JS), R_S + sqrt(JS / 2)]` from a source risk and JS in nats.
pub fn theorem2_band_from(r_s: f64, js_nats: f64) -> BoundReport {
    let root = js_nats.max(0.0).sqrt();
    let hi = theorem1_bound(r_s, js_nats, &TailParams::Bounded { g: 1.0 });
    BoundReport::new("theorem2", r_s, r_s - root, hi, format!("R_S={r_s:.6} JS={js_nats:.6e}"))
}

/// Two-sided band on the target risk of a zero-one loss.
pub fn theorem2_band(s: &JointPmf, t: &JointPmf, l: &LossTable) -> Result<BoundReport> {
    if !l.is_zero_one() {
        return Err(Error::NotZeroOne("Theorem 2"));
    }
    let (r_s, r_t) = risks(s, t, l)?;
    let j = js(s, t, LogBase::E)?;
    Ok(theorem2_band_from(r_s, j)
        .with_lhs(r_t)
        .with_detail("r_s", r_s)
        .with_detail("js_nats", j))
}

/// Axis of the marginal/conditional split.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitAxis {
    /// Feature marginal plus label conditionals `Y|X`.
    X,
    /// Label marginal plus feature conditionals `X|Y`.
    Y,
}

/// Marginal JS and the two expected conditional JS terms of a split.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Decomposition {
    pub marginal: f64,
    /// `E_{T} JS(S(.|c) || T(.|c))` over the conditioning variable.
    pub cond_t: f64,
    /// `E_{S} JS(S(.|c) || T(.|c))`.
    pub cond_s: f64,
}

impl Decomposition {
    pub fn conditional(&self) -> f64 {
        self.cond_t + self.cond_s
    }

    pub fn total(&self) -> f64 {
        self.marginal + self.conditional()
    }
}

/// Conditional JS at every conditioning atom where both sides carry mass.
/// Atoms charged by only one side have no comparable conditional and are
/// skipped.
fn paired_conditionals(s: &JointPmf, t: &JointPmf, axis: CondAxis) -> Result<Vec<(f64, f64, f64)>> {
    let fs = s.conditionals(axis)?;
    let ft = t.conditionals(axis)?;
    let mut out = Vec::with_capacity(fs.len());
    let mut it = ft.iter().peekable();
    for cs in &fs {
        while it.peek().is_some_and(|c: &&Conditional| c.index < cs.index) {
            it.next();
        }
        if let Some(ct) = it.peek() {
            if ct.index == cs.index {
                let j = js_nats(cs.pmf.probs(), ct.pmf.probs());
                out.push((cs.weight, ct.weight, j));
            }
        }
    }
    Ok(out)
}

/// Splits the joint JS along `axis`, all terms in nats.
pub fn decompose(s: &JointPmf, t: &JointPmf, axis: SplitAxis) -> Result<Decomposition> {
    same_grid(s, t)?;
    let (marginal, cond_axis) = match axis {
        SplitAxis::X => (js_nats(s.marginal_x().probs(), t.marginal_x().probs()), CondAxis::YGivenX),
        SplitAxis::Y => (js_nats(s.marginal_y().probs(), t.marginal_y().probs()), CondAxis::XGivenY),
    };
    let pairs = paired_conditionals(s, t, cond_axis)?;
    let cond_t = pairs.iter().map(|(_, wt, j)| wt * j).sum();
    let cond_s = pairs.iter().map(|(ws, _, j)| ws * j).sum();
    Ok(Decomposition {
        marginal,
        cond_t,
        cond_s,
    })
}

/// Upper bound through a marginal term plus an expected conditional term.
///
/// The report also checks that the split dominates the joint JS
/// (`"decomposition"`).
pub fn corollary1_bounds(
    s: &JointPmf,
    t: &JointPmf,
    l: &LossTable,
    axis: SplitAxis,
    tail: &TailParams,
) -> Result<BoundReport> {
    tail.check_loss(l)?;
    let (r_s, r_t) = risks(s, t, l)?;
    let d = decompose(s, t, axis)?;
    let joint = js(s, t, LogBase::E)?;
    let root = d.marginal.sqrt() + d.conditional().sqrt();
    let hi = r_s + tail.excess_from_root(root);
    let name = match axis {
        SplitAxis::X => "corollary1_x",
        SplitAxis::Y => "corollary1_y",
    };
    Ok(BoundReport::new(
        format!("{name}_{}", tail.label()),
        r_t,
        f64::NEG_INFINITY,
        hi,
        format!(
            "R_S={r_s:.6} JS_marg={:.6e} JS_cond={:.6e} JS_joint={joint:.6e}",
            d.marginal,
            d.conditional()
        ),
    )
    .with_detail("r_s", r_s)
    .with_detail("js_marginal", d.marginal)
    .with_detail("js_cond_t", d.cond_t)
    .with_detail("js_cond_s", d.cond_s)
    .with_detail("js_joint", joint)
    .with_check("decomposition", joint <= d.total() + VERDICT_TOL))
}

/// Upper bound on the target conditional entropy `H(Y_t|X_t)`.
pub fn theorem3_upper(s: &JointPmf, t: &JointPmf) -> Result<BoundReport> {
    same_grid(s, t)?;
    let (sx, tx) = (s.marginal_x(), t.marginal_x());
    for (i, (a, b)) in sx.probs().iter().zip(tx.probs()).enumerate() {
        if (*a > 0.0) != (*b > 0.0) {
            return Err(Error::MissingConditional(s.x_support()[i].id.clone()));
        }
    }
    let pairs = paired_conditionals(s, t, CondAxis::YGivenX)?;
    let delta2 = pairs.iter().map(|p| p.2).fold(0.0, f64::max);
    let delta1 = js_nats(sx.probs(), tx.probs());
    let eps = entropy_stats(s, LogBase::E).h_y_given_x;
    let lhs = entropy_stats(t, LogBase::E).h_y_given_x;
    let ln_y = (s.ny() as f64).ln();
    let hi = eps + (delta2 / 2.0).sqrt() + 0.5 * delta1.sqrt() * ln_y;

    let bits = LogBase::Two;
    let hi_bits = bits.from_nats(eps)
        + (bits.from_nats(delta2) / 2.0).sqrt()
        + 0.5 * bits.from_nats(delta1).sqrt() * (s.ny() as f64).log2();
    Ok(BoundReport::new(
        "theorem3",
        lhs,
        f64::NEG_INFINITY,
        hi,
        format!("eps={eps:.6} delta1={delta1:.6e} delta2={delta2:.6e}"),
    )
    .with_detail("epsilon", eps)
    .with_detail("delta1", delta1)
    .with_detail("delta2", delta2)
    .with_detail("lhs_bits", bits.from_nats(lhs))
    .with_detail("bound_hi_bits", hi_bits))
}

/// Band on the target risk when source and target share a fraction `alpha`
/// of their classes and the shared conditionals differ by `delta`.
///
/// No target risk is known here, so `lhs` is `r_s`; attach a measured target
/// risk with [`BoundReport::with_lhs`].
pub fn openset_band(r_s: f64, alpha: f64, delta: f64) -> Result<BoundReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::OutOfRange(format!("alpha = {alpha} must lie in (0, 1)")));
    }
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(Error::OutOfRange(format!("delta = {delta} must be nonnegative")));
    }
    let w = (1.0 - alpha).sqrt() + 2.0 * delta.sqrt();
    Ok(BoundReport::new(
        "openset",
        r_s,
        r_s - w,
        r_s + w / std::f64::consts::SQRT_2,
        format!("R_S={r_s:.6} alpha={alpha} delta={delta:.6e}"),
    ))
}

/// Uniform label marginals over `{0..n}` and `{n-k..2n-k}` with
/// `k = floor(alpha n)` shared classes, and their JS in nats.
pub fn openset_label_marginals(n: usize, alpha: f64) -> Result<(Pmf, Pmf, f64)> {
    if n == 0 || !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::OutOfRange(format!("need n >= 1 and alpha in (0, 1], got n={n} alpha={alpha}")));
    }
    let k = (alpha * n as f64 + 1e-9).floor() as usize;
    let universe = 2 * n - k;
    let mut s = vec![0.0; universe];
    let mut t = vec![0.0; universe];
    s[..n].fill(1.0 / n as f64);
    t[n - k..].fill(1.0 / n as f64);
    let (s, t) = (Pmf::from_probs(s)?, Pmf::from_probs(t)?);
    let j = js_nats(s.probs(), t.probs());
    Ok((s, t, j))
}

fn label_conditionals_matched(s: &JointPmf, t: &JointPmf) -> Result<Vec<f64>> {
    let (sy, ty) = (s.marginal_y(), t.marginal_y());
    let (ss, tt) = (s.transpose(), t.transpose());
    let mut out = Vec::with_capacity(s.ny());
    for y in 0..s.ny() {
        let (ws, wt) = (sy.probs()[y], ty.probs()[y]);
        if ws <= 0.0 || wt <= 0.0 {
            return Err(Error::HypothesisViolated {
                bound: "Theorem 4",
                detail: format!("class `{}` has no conditional in one domain", s.y_support()[y].id),
            });
        }
        let p: Vec<f64> = ss.row(y).iter().map(|m| m / ws).collect();
        let q: Vec<f64> = tt.row(y).iter().map(|m| m / wt).collect();
        out.push(js_nats(&p, &q));
    }
    Ok(out)
}

/// Band on the target risk of a binary zero-one classifier when the
/// class-conditional feature distributions coincide.
pub fn theorem4_band(s: &JointPmf, t: &JointPmf, l: &LossTable) -> Result<BoundReport> {
    same_grid(s, t)?;
    if s.ny() != 2 {
        return Err(Error::ShapeMismatch(format!("binary labels required, got {}", s.ny())));
    }
    if !l.is_zero_one() {
        return Err(Error::NotZeroOne("Theorem 4"));
    }
    let cond = label_conditionals_matched(s, t)?;
    if let Some((y, j)) = cond.iter().enumerate().find(|(_, j)| **j > HYPOTHESIS_TOL) {
        return Err(Error::HypothesisViolated {
            bound: "Theorem 4",
            detail: format!("JS(S(z|y={y}) || T(z|y={y})) = {j:.3e}"),
        });
    }
    let (r_s, r_t) = risks(s, t, l)?;
    let jy = js_nats(s.marginal_y().probs(), t.marginal_y().probs());
    let w = (2.0 * jy).sqrt();
    Ok(BoundReport::new("theorem4", r_t, r_s - w, r_s + w, format!("R_S={r_s:.6} JS_y={jy:.6e}"))
        .with_detail("r_s", r_s)
        .with_detail("js_labels", jy))
}

/// Lower bound on the feature-marginal JS from label-space quantities.
///
/// `lhs` is the bound itself until a feature JS is attached with
/// [`BoundReport::with_lhs`].
pub fn theorem5_lower(s_y: &Pmf, t_y: &Pmf, s_pred: &Pmf, t_pred: &Pmf) -> Result<BoundReport> {
    let sup = s_y.support();
    if t_y.support() != sup || s_pred.support() != sup || t_pred.support() != sup {
        return Err(Error::ShapeMismatch("label pmfs must share one support".into()));
    }
    let p = js_nats(t_y.probs(), t_pred.probs());
    let e1 = js_nats(s_y.probs(), s_pred.probs());
    let e2 = js_nats(s_y.probs(), t_y.probs());
    let gap = (p.sqrt() - e1.sqrt() - e2.sqrt()).max(0.0);
    let lo = gap * gap;
    Ok(BoundReport::new("theorem5", lo, lo, f64::INFINITY, format!("P={p:.6e} eps1={e1:.6e} eps2={e2:.6e}"))
        .with_detail("p", p)
        .with_detail("eps1", e1)
        .with_detail("eps2", e2))
}

/// Full discrete pipeline: labels from the joints, predictions by pushing
/// each feature marginal through the stochastic classifier `h[z][y]`, and
/// `lhs = JS(S(z) || T(z))`.
pub fn theorem5_pipeline(s: &JointPmf, t: &JointPmf, h: &[Vec<f64>]) -> Result<BoundReport> {
    same_grid(s, t)?;
    if h.len() != s.nx() || h.iter().any(|r| r.len() != s.ny()) {
        return Err(Error::ShapeMismatch("classifier must be |Z| x |Y|".into()));
    }
    let predict = |zm: &Pmf| -> Result<Pmf> {
        let mut out = vec![0.0; s.ny()];
        for (w, row) in zm.probs().iter().zip(h) {
            let total: f64 = row.iter().sum();
            for (o, v) in out.iter_mut().zip(row) {
                *o += w * v / total;
            }
        }
        Pmf::new(s.y_support().to_vec(), out)
    };
    let (sz, sy) = s.marginals();
    let (tz, ty) = t.marginals();
    let r = theorem5_lower(&sy, &ty, &predict(&sz)?, &predict(&tz)?)?;
    Ok(r.with_lhs(js_nats(sz.probs(), tz.probs())))
}

/// Lower bound on the label-conditional shift `E_T JS + E_S JS` of
/// `Y|Z` in terms of the label and feature marginal divergences.
pub fn condshift_lower(s: &JointPmf, t: &JointPmf) -> Result<BoundReport> {
    same_grid(s, t)?;
    let d = decompose(s, t, SplitAxis::X)?;
    let jy = js_nats(t.marginal_y().probs(), s.marginal_y().probs());
    let gap = (jy.sqrt() - d.marginal.sqrt()).max(0.0);
    let lo = 2.0 * gap * gap;
    Ok(BoundReport::new(
        "condshift",
        d.conditional(),
        lo,
        f64::INFINITY,
        format!("JS_y={jy:.6e} JS_z={:.6e}", d.marginal),
    )
    .with_detail("js_labels", jy)
    .with_detail("js_features", d.marginal))
}

/// Empirical gaps `|R_S^alpha - R_T|` at one sample size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    /// One gap per repeat, in repeat order.
    pub gaps: Vec<f64>,
    pub mean: f64,
    pub median: f64,
    /// `mean * sqrt(n)`.
    pub scaled_mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    /// Exact target risk of the rule under evaluation.
    pub r_target: f64,
    pub alpha: Vec<f64>,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn row(&self, n: usize) -> Option<&ConvergenceRow> {
        self.rows.iter().find(|r| r.n == n)
    }

    /// Fraction of repeats whose gap at `large` is strictly below the gap
    /// at `small` on the same draw.
    pub fn fraction_improved(&self, small: usize, large: usize) -> Option<f64> {
        let (a, b) = (self.row(small)?, self.row(large)?);
        let wins = a.gaps.iter().zip(&b.gaps).filter(|(s, l)| l < s).count();
        Some(wins as f64 / a.gaps.len().max(1) as f64)
    }

    /// `max / min` of `gap * sqrt(n)` across the grid; stays moderate when
    /// the gap decays at the square-root rate.
    pub fn scaled_spread(&self) -> f64 {
        let v = self.rows.iter().map(|r| r.scaled_mean);
        let hi = v.clone().fold(f64::NEG_INFINITY, f64::max);
        let lo = v.fold(f64::INFINITY, f64::min);
        hi / lo
    }
}

/// Measures how the label-reweighted source risk of the scenario's source
/// Bayes rule approaches its exact target risk. Each repeat draws one
/// source sample of the largest size and evaluates nested prefixes, so
/// gaps at different sizes are paired. `alpha` defaults to the true ratio
/// `T(y) / S(y)`.
pub fn reweighted_convergence_check(
    sc: &ShiftScenario,
    n_grid: &[usize],
    repeats: usize,
    seed: u64,
    alpha: Option<&WeightVector>,
) -> Result<ConvergenceTable> {
    sc.validate()?;
    if n_grid.is_empty() || repeats == 0 || n_grid.contains(&0) {
        return Err(Error::EmptyInput("need positive sample sizes and repeats".into()));
    }
    let matched = sc.target_feature_weights.is_none()
        && sc.source_class_means == sc.target_class_means
        && sc.source_class_covs == sc.target_class_covs;
    if !matched {
        return Err(Error::HypothesisViolated {
            bound: "reweighted convergence",
            detail: "class conditionals differ between domains".into(),
        });
    }
    let rule = sc.linear_rule(Domain::Source)?;
    let errs = sc.class_errors(&rule, Domain::Target)?;
    let r_target: f64 = errs.iter().zip(&sc.target_label_marginal).map(|(e, t)| e * t).sum();
    let alpha = match alpha {
        Some(w) => w.clone(),
        None => WeightVector::ratio(&sc.label_marginal(Domain::Source)?, &sc.label_marginal(Domain::Target)?)?,
    };
    let n_max = *n_grid.iter().max().expect("nonempty");
    let mut gaps = vec![Vec::with_capacity(repeats); n_grid.len()];
    for r in 0..repeats {
        let batch = sample_seeded(sc, Domain::Source, n_max, seed, r as u64)?;
        let losses: Vec<f64> = batch
            .xs
            .iter()
            .zip(&batch.ys)
            .map(|(x, &y)| f64::from(u8::from(rule.predict(x) != y)))
            .collect();
        for (k, &n) in n_grid.iter().enumerate() {
            let risk = reweighted_risk(&batch.ys[..n], &losses[..n], &alpha)?;
            gaps[k].push((risk - r_target).abs());
        }
    }
    let rows = n_grid
        .iter()
        .zip(gaps)
        .map(|(&n, g)| {
            let mean = g.iter().sum::<f64>() / g.len() as f64;
            let mut sorted = g.clone();
            sorted.sort_by(f64::total_cmp);
            let mid = sorted.len() / 2;
            let median = if sorted.len() % 2 == 0 {
                (sorted[mid - 1] + sorted[mid]) / 2.0
            } else {
                sorted[mid]
            };
            ConvergenceRow {
                n,
                gaps: g,
                mean,
                median,
                scaled_mean: mean * (n as f64).sqrt(),
            }
        })
        .collect();
    Ok(ConvergenceTable {
        r_target,
        alpha: alpha.alpha,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair() -> (JointPmf, JointPmf) {
        let s = JointPmf::from_rows(vec![vec![0.3, 0.1], vec![0.2, 0.4]]).unwrap();
        let t = JointPmf::from_rows(vec![vec![0.1, 0.2], vec![0.4, 0.3]]).unwrap();
        (s, t)
    }

    #[test]
    fn equal_domains_have_zero_slack() {
        let (s, _) = pair();
        let l = LossTable::zero_one(&[0, 1], 2).unwrap();
        let r = theorem1_upper(&s, &s, &l, &TailParams::Bounded { g: 1.0 }).unwrap();
        assert!(r.holds);
        assert_eq!(r.slack_hi, 0.0);
        let b = theorem2_band(&s, &s, &l).unwrap();
        assert_eq!((b.bound_lo, b.bound_hi), (b.lhs, b.lhs));
    }

    #[test]
    fn worked_band() {
        let b = theorem2_band_from(0.2, 2e-4);
        assert!((b.bound_lo - 0.186).abs() < 5e-4, "{}", b.bound_lo);
        assert!((b.bound_hi - 0.21).abs() < 5e-4, "{}", b.bound_hi);
    }

    #[test]
    fn two_sided_band_rejects_real_valued_loss() {
        let (s, t) = pair();
        let l = LossTable::new(vec![vec![0.5, 0.0], vec![1.0, 0.0]]).unwrap();
        let err = theorem2_band(&s, &t, &l).unwrap_err();
        assert_eq!(err.to_string(), "Theorem 2 requires zero-one loss");
    }

    #[test]
    fn bounded_tail_must_cover_loss_range() {
        let (s, t) = pair();
        let l = LossTable::new(vec![vec![0.0, 3.0], vec![1.0, 0.0]]).unwrap();
        assert!(matches!(
            theorem1_upper(&s, &t, &l, &TailParams::Bounded { g: 1.0 }),
            Err(Error::InvalidTail(_))
        ));
        assert!(TailParams::Subgamma { sigma: 1.0, a: -1.0 }.validate().is_err());
    }

    #[test]
    fn bound_monotone_in_js() {
        let tail = TailParams::Bounded { g: 2.0 };
        let mut prev = f64::NEG_INFINITY;
        for k in 0..50 {
            let b = theorem1_bound(0.1, k as f64 * 0.01, &tail);
            assert!(b >= prev);
            prev = b;
        }
    }

    #[test]
    fn split_dominates_joint_and_loosens_bound() {
        let (s, t) = pair();
        let l = LossTable::zero_one(&[0, 1], 2).unwrap();
        let tail = TailParams::Bounded { g: 1.0 };
        let base = theorem1_upper(&s, &t, &l, &tail).unwrap();
        for axis in [SplitAxis::X, SplitAxis::Y] {
            let r = corollary1_bounds(&s, &t, &l, axis, &tail).unwrap();
            assert!(r.checks["decomposition"]);
            assert!(r.bound_hi >= base.bound_hi - 1e-12);
        }
    }

    #[test]
    fn identical_conditionals_leave_marginal_only() {
        let px = Pmf::from_probs(vec![0.2, 0.8]).unwrap();
        let qx = Pmf::from_probs(vec![0.6, 0.4]).unwrap();
        let py = Pmf::from_probs(vec![0.3, 0.7]).unwrap();
        let s = JointPmf::independent(&px, &py).unwrap();
        let t = JointPmf::independent(&qx, &py).unwrap();
        let d = decompose(&s, &t, SplitAxis::X).unwrap();
        assert!(d.conditional().abs() < 1e-15);
        assert!((d.marginal - js_nats(px.probs(), qx.probs())).abs() < 1e-15);
    }

    #[test]
    fn entropy_bound_equal_domains() {
        let (s, _) = pair();
        let r = theorem3_upper(&s, &s).unwrap();
        assert!((r.bound_hi - r.lhs).abs() < 1e-15);
        assert!(r.holds);
    }

    #[test]
    fn entropy_bound_needs_both_conditionals() {
        let s = JointPmf::from_rows(vec![vec![0.5, 0.5], vec![0.0, 0.0]]).unwrap();
        let t = JointPmf::from_rows(vec![vec![0.25, 0.25], vec![0.25, 0.25]]).unwrap();
        assert!(matches!(theorem3_upper(&s, &t), Err(Error::MissingConditional(_))));
    }

    #[test]
    fn openset_band_examples() {
        let b = openset_band(0.3, 0.5, 0.0).unwrap();
        assert!((b.bound_lo - (0.3 - 0.5f64.sqrt())).abs() < 1e-15);
        assert!((b.bound_hi - (0.3 + 0.5f64.sqrt() / 2f64.sqrt())).abs() < 1e-15);
        let near = openset_band(0.3, 1.0 - 1e-14, 0.0).unwrap();
        assert!((near.bound_hi - near.bound_lo).abs() < 1e-6);
        assert!(openset_band(0.3, 1.0, 0.0).is_err());
        assert!(openset_band(0.3, 0.0, 0.0).is_err());
    }

    #[test]
    fn openset_label_js_within_one_minus_alpha() {
        let (s, t, j) = openset_label_marginals(10, 0.5).unwrap();
        assert_eq!(s.len(), 15);
        let shared = s.probs().iter().zip(t.probs()).filter(|(a, b)| **a > 0.0 && **b > 0.0).count();
        assert_eq!(shared, 5);
        assert!(j <= 0.5 + 1e-12);
    }

    #[test]
    fn matched_conditionals_band() {
        let cond = [vec![0.7, 0.2, 0.1], vec![0.1, 0.3, 0.6]];
        let build = |py: [f64; 2]| {
            let rows = (0..3).map(|z| vec![py[0] * cond[0][z], py[1] * cond[1][z]]).collect();
            JointPmf::from_rows(rows).unwrap()
        };
        let s = build([0.5, 0.5]);
        let t = build([0.9, 0.1]);
        let l = LossTable::zero_one(&[0, 1, 1], 2).unwrap();
        let r = theorem4_band(&s, &t, &l).unwrap();
        assert!(r.holds, "{r}");
        let same = theorem4_band(&s, &s, &l).unwrap();
        assert_eq!(same.bound_lo, same.bound_hi);
    }

    #[test]
    fn matched_conditionals_required() {
        let (s, t) = pair();
        let l = LossTable::zero_one(&[0, 1], 2).unwrap();
        let err = theorem4_band(&s, &t, &l).unwrap_err();
        assert!(err.to_string().starts_with("Theorem 4 hypothesis violated"));
    }

    #[test]
    fn label_space_lower_bound_cases() {
        let a = Pmf::from_probs(vec![1.0, 0.0]).unwrap();
        let b = Pmf::from_probs(vec![0.0, 1.0]).unwrap();
        let r = theorem5_lower(&a, &a, &a, &b).unwrap();
        assert!((r.bound_lo - std::f64::consts::LN_2).abs() < 1e-15);
        let c = Pmf::from_probs(vec![0.5, 0.5]).unwrap();
        let r = theorem5_lower(&a, &c, &b, &a).unwrap();
        assert_eq!(r.bound_lo, 0.0);
    }

    #[test]
    fn equal_feature_marginals_force_conditional_shift() {
        // Z marginal (0.5, 0.5) on both sides, labels (0.5, 0.5) vs (0.9, 0.1).
        let s = JointPmf::from_rows(vec![vec![0.25, 0.25], vec![0.25, 0.25]]).unwrap();
        let t = JointPmf::from_rows(vec![vec![0.45, 0.05], vec![0.45, 0.05]]).unwrap();
        let r = condshift_lower(&s, &t).unwrap();
        let jy = r.details["js_labels"];
        assert!(r.details["js_features"] < 1e-15);
        assert!(r.lhs >= 2.0 * jy - 1e-12);
        assert!(r.holds);
        let zero = condshift_lower(&s, &s).unwrap();
        assert_eq!((zero.lhs, zero.bound_lo), (0.0, 0.0));
    }
}
