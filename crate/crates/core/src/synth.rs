//! Two-dimensional Gaussian shift scenarios.
//!
//! A [`ShiftScenario`] fixes class-conditional Gaussians and label marginals
//! for a source and a target domain. It can be sampled into a
//! [`SampleBatch`] for training or discretized onto a grid into an exact
//! [`JointPmf`] for the bound verifiers.

use std::fmt;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution as _;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::dist::{Atom, JointPmf, Pmf};
use crate::error::{Error, Result};

pub type Vec2 = [f64; 2];
pub type Mat2 = [[f64; 2]; 2];

/// Half-width of the discretization box in standard deviations.
pub const BOX_SIGMAS: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    /// Feature marginal moves, `T(y|x) = S(y|x)`.
    Cofeature,
    /// Label marginal moves, `T(x|y) = S(x|y)`.
    LabelShift,
    /// Class conditionals rotate (and labels may move too).
    ConditionalShift,
    /// Source and target share only part of their classes.
    OpenSet,
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScenarioKind::Cofeature => "cofeature",
            ScenarioKind::LabelShift => "label-shift",
            ScenarioKind::ConditionalShift => "conditional-shift",
            ScenarioKind::OpenSet => "open-set",
        })
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cofeature" => Ok(ScenarioKind::Cofeature),
            "label-shift" | "label" => Ok(ScenarioKind::LabelShift),
            "conditional-shift" | "conditional" => Ok(ScenarioKind::ConditionalShift),
            "open-set" | "openset" => Ok(ScenarioKind::OpenSet),
            other => Err(Error::InvalidScenario(format!("unknown scenario kind `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Source,
    Target,
}

impl Domain {
    fn stream_bit(self) -> u64 {
        match self {
            Domain::Source => 0,
            Domain::Target => 1,
        }
    }
}

impl FromStr for Domain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "source" | "s" => Ok(Domain::Source),
            "target" | "t" => Ok(Domain::Target),
            other => Err(Error::InvalidScenario(format!("unknown domain `{other}`"))),
        }
    }
}

/// What a random stream is used for. Each purpose gets its own ChaCha
/// stream so that, say, changing a sample size never perturbs an init.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Purpose {
    Labels,
    Features,
    Init,
    Shuffle,
}

/// A generator dedicated to `(seed, purpose, domain, split)`.
pub fn stream_rng(seed: u64, purpose: Purpose, domain: Domain, split: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = purpose as u64;
    rng.set_stream((split << 8) | (p << 1) | domain.stream_bit());
    rng
}

/// Parameters accepted by [`make_scenario`]; every field has a default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioParams {
    /// Classes per domain.
    pub n_classes: usize,
    /// Class means; defaults to points on a circle of radius `radius`.
    pub means: Option<Vec<Vec2>>,
    pub radius: f64,
    /// Isotropic standard deviation of every class.
    pub sigma: f64,
    pub source_labels: Option<Vec<f64>>,
    pub target_labels: Option<Vec<f64>>,
    /// Rotation of the target class conditionals, in degrees.
    pub rotation_deg: f64,
    /// Translation of the target class means after rotation.
    pub translation: Vec2,
    /// Mixture weights of the target feature distribution (cofeature kind).
    pub target_feature_weights: Option<Vec<f64>>,
    /// Fraction of shared classes (open-set kind).
    pub alpha: Option<f64>,
    pub seed: u64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams {
            n_classes: 2,
            means: None,
            radius: 2.0,
            sigma: 1.0,
            source_labels: None,
            target_labels: None,
            rotation_deg: 30.0,
            translation: [0.0, 0.0],
            target_feature_weights: None,
            alpha: None,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftScenario {
    pub kind: ScenarioKind,
    pub n_classes: usize,
    pub source_class_means: Vec<Vec2>,
    pub source_class_covs: Vec<Mat2>,
    pub target_class_means: Vec<Vec2>,
    pub target_class_covs: Vec<Mat2>,
    pub source_label_marginal: Vec<f64>,
    pub target_label_marginal: Vec<f64>,
    /// Mixture weights over source class conditionals that define the target
    /// feature marginal; only for the cofeature kind.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_feature_weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overlap_alpha: Option<f64>,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub xs: Vec<Vec2>,
    pub ys: Vec<usize>,
    pub domain: Domain,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    /// Empirical label frequencies.
    pub fn label_frequencies(&self, n_classes: usize) -> Vec<f64> {
        let mut f = vec![0.0; n_classes];
        for &y in &self.ys {
            f[y] += 1.0;
        }
        let n = self.len().max(1) as f64;
        f.iter_mut().for_each(|v| *v /= n);
        f
    }

    /// The first `n` samples.
    pub fn prefix(&self, n: usize) -> SampleBatch {
        let n = n.min(self.len());
        SampleBatch {
            xs: self.xs[..n].to_vec(),
            ys: self.ys[..n].to_vec(),
            domain: self.domain,
        }
    }
}

fn rotation(deg: f64) -> Mat2 {
    let (s, c) = deg.to_radians().sin_cos();
    [[c, -s], [s, c]]
}

fn mat_vec(m: &Mat2, v: &Vec2) -> Vec2 {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn transpose(a: &Mat2) -> Mat2 {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

fn circle_means(n: usize, radius: f64) -> Vec<Vec2> {
    (0..n)
        .map(|k| {
            let t = std::f64::consts::TAU * k as f64 / n as f64;
            [radius * t.cos(), radius * t.sin()]
        })
        .collect()
}

fn check_marginal(w: &[f64], n: usize, what: &str) -> Result<()> {
    if w.len() != n {
        return Err(Error::InvalidScenario(format!("{what} has {} entries for {n} classes", w.len())));
    }
    if w.iter().any(|v| !v.is_finite() || *v < 0.0) || (w.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidScenario(format!("{what} is not a probability vector")));
    }
    Ok(())
}

fn normalized(w: &[f64], what: &str) -> Result<Vec<f64>> {
    let total: f64 = w.iter().sum();
    if w.iter().any(|v| !v.is_finite() || *v < 0.0) || total <= 0.0 {
        return Err(Error::InvalidScenario(format!("{what} must be nonnegative with positive sum")));
    }
    Ok(w.iter().map(|v| v / total).collect())
}

fn default_target_labels(n: usize) -> Vec<f64> {
    if n == 2 {
        return vec![0.8, 0.2];
    }
    let w: Vec<f64> = (0..n).map(|k| 0.5f64.powi(k as i32)).collect();
    let total: f64 = w.iter().sum();
    w.iter().map(|v| v / total).collect()
}

/// Builds a scenario of the given kind.
pub fn make_scenario(kind: ScenarioKind, p: &ScenarioParams) -> Result<ShiftScenario> {
    if p.n_classes < 2 {
        return Err(Error::InvalidScenario("need at least 2 classes".into()));
    }
    if !(p.sigma.is_finite() && p.sigma > 0.0) {
        return Err(Error::InvalidScenario(format!("sigma = {} must be positive", p.sigma)));
    }
    let n = p.n_classes;
    let (universe, shared) = match kind {
        ScenarioKind::OpenSet => {
            let a = p
                .alpha
                .ok_or_else(|| Error::InvalidScenario("open-set scenario needs alpha".into()))?;
            if !(a > 0.0 && a <= 1.0) {
                return Err(Error::InvalidScenario(format!("alpha = {a} must lie in (0, 1]")));
            }
            let k = (a * n as f64 + 1e-9).floor() as usize;
            (2 * n - k, k)
        }
        _ => (n, n),
    };
    let means = match &p.means {
        Some(m) if m.len() == universe => m.clone(),
        Some(m) => {
            return Err(Error::InvalidScenario(format!(
                "{} means given for {universe} classes",
                m.len()
            )))
        }
        None => circle_means(universe, p.radius),
    };
    let v = p.sigma * p.sigma;
    let covs = vec![[[v, 0.0], [0.0, v]]; universe];

    let uniform_on = |range: std::ops::Range<usize>| {
        let mut w = vec![0.0; universe];
        let len = range.len() as f64;
        for i in range {
            w[i] = 1.0 / len;
        }
        w
    };
    let (source_labels, target_labels) = match kind {
        ScenarioKind::OpenSet => (uniform_on(0..n), uniform_on(n - shared..universe)),
        _ => {
            let s = match &p.source_labels {
                Some(w) => normalized(w, "source labels")?,
                None => vec![1.0 / n as f64; n],
            };
            let t = match (&p.target_labels, kind) {
                (Some(w), _) => normalized(w, "target labels")?,
                (None, ScenarioKind::LabelShift) => default_target_labels(n),
                (None, _) => s.clone(),
            };
            (s, t)
        }
    };

    let (target_means, target_covs, feature_weights) = match kind {
        ScenarioKind::ConditionalShift => {
            let r = rotation(p.rotation_deg);
            let tm = means
                .iter()
                .map(|m| {
                    let q = mat_vec(&r, m);
                    [q[0] + p.translation[0], q[1] + p.translation[1]]
                })
                .collect();
            let tc = covs.iter().map(|c| mat_mul(&mat_mul(&r, c), &transpose(&r))).collect();
            (tm, tc, None)
        }
        ScenarioKind::Cofeature => {
            let w = match &p.target_feature_weights {
                Some(w) => normalized(w, "target feature weights")?,
                None => default_target_labels(n),
            };
            if w.len() != n {
                return Err(Error::InvalidScenario("one feature weight per class required".into()));
            }
            (means.clone(), covs.clone(), Some(w))
        }
        _ => (means.clone(), covs.clone(), None),
    };

    let sc = ShiftScenario {
        kind,
        n_classes: universe,
        source_class_means: means,
        source_class_covs: covs,
        target_class_means: target_means,
        target_class_covs: target_covs,
        source_label_marginal: source_labels,
        target_label_marginal: target_labels,
        target_feature_weights: feature_weights,
        overlap_alpha: if kind == ScenarioKind::OpenSet { p.alpha } else { None },
        seed: p.seed,
    };
    sc.validate()?;
    Ok(sc)
}

/// Density and sampling helpers for one 2-D Gaussian.
#[derive(Clone, Copy, Debug)]
struct Gauss {
    mean: Vec2,
    chol: Mat2,
    inv: Mat2,
    norm: f64,
}

impl Gauss {
    fn new(mean: Vec2, cov: Mat2) -> Result<Self> {
        let (a, b, c) = (cov[0][0], cov[0][1], cov[1][1]);
        let det = a * c - b * b;
        if !(a > 0.0 && det > 0.0) || (cov[1][0] - b).abs() > 1e-12 {
            return Err(Error::InvalidScenario("covariance must be symmetric positive definite".into()));
        }
        let l11 = a.sqrt();
        let l21 = b / l11;
        let l22 = (c - l21 * l21).sqrt();
        Ok(Gauss {
            mean,
            chol: [[l11, 0.0], [l21, l22]],
            inv: [[c / det, -b / det], [-b / det, a / det]],
            norm: 1.0 / (std::f64::consts::TAU * det.sqrt()),
        })
    }

    fn pdf(&self, x: &Vec2) -> f64 {
        let d = [x[0] - self.mean[0], x[1] - self.mean[1]];
        let q = d[0] * (self.inv[0][0] * d[0] + self.inv[0][1] * d[1]) + d[1] * (self.inv[1][0] * d[0] + self.inv[1][1] * d[1]);
        self.norm * (-0.5 * q).exp()
    }

    fn draw<R: rand::Rng>(&self, rng: &mut R) -> Vec2 {
        let z0: f64 = rng.sample(StandardNormal);
        let z1: f64 = rng.sample(StandardNormal);
        [
            self.mean[0] + self.chol[0][0] * z0,
            self.mean[1] + self.chol[1][0] * z0 + self.chol[1][1] * z1,
        ]
    }
}

impl ShiftScenario {
    pub fn validate(&self) -> Result<()> {
        let n = self.n_classes;
        if n < 2 {
            return Err(Error::InvalidScenario("need at least 2 classes".into()));
        }
        for (what, len) in [
            ("source_class_means", self.source_class_means.len()),
            ("source_class_covs", self.source_class_covs.len()),
            ("target_class_means", self.target_class_means.len()),
            ("target_class_covs", self.target_class_covs.len()),
        ] {
            if len != n {
                return Err(Error::InvalidScenario(format!("{what} has {len} entries for {n} classes")));
            }
        }
        check_marginal(&self.source_label_marginal, n, "source_label_marginal")?;
        check_marginal(&self.target_label_marginal, n, "target_label_marginal")?;
        if let Some(w) = &self.target_feature_weights {
            check_marginal(w, n, "target_feature_weights")?;
        }
        if let Some(a) = self.overlap_alpha {
            if !(a > 0.0 && a <= 1.0) {
                return Err(Error::InvalidScenario(format!("overlap_alpha = {a} must lie in (0, 1]")));
            }
        }
        self.gaussians(Domain::Source)?;
        self.gaussians(Domain::Target)?;
        Ok(())
    }

    pub fn label_marginal(&self, domain: Domain) -> Result<Pmf> {
        Pmf::from_probs(match domain {
            Domain::Source => self.source_label_marginal.clone(),
            Domain::Target => self.target_label_marginal.clone(),
        })
    }

    /// Class indices charged by both label marginals.
    pub fn shared_classes(&self) -> Vec<usize> {
        (0..self.n_classes)
            .filter(|&y| self.source_label_marginal[y] > 0.0 && self.target_label_marginal[y] > 0.0)
            .collect()
    }

    fn gaussians(&self, domain: Domain) -> Result<Vec<Gauss>> {
        let (m, c) = match domain {
            Domain::Source => (&self.source_class_means, &self.source_class_covs),
            Domain::Target => (&self.target_class_means, &self.target_class_covs),
        };
        m.iter().zip(c).map(|(m, c)| Gauss::new(*m, *c)).collect()
    }

    /// Whether target labels are drawn from the source posterior.
    fn posterior_labels(&self, domain: Domain) -> Option<&[f64]> {
        match (domain, &self.target_feature_weights) {
            (Domain::Target, Some(w)) if self.kind == ScenarioKind::Cofeature => Some(w),
            _ => None,
        }
    }

    /// Source posterior `S(y|x)`.
    fn source_posterior(&self, src: &[Gauss], x: &Vec2) -> Vec<f64> {
        let mut p: Vec<f64> = src
            .iter()
            .zip(&self.source_label_marginal)
            .map(|(g, w)| w * g.pdf(x))
            .collect();
        let total: f64 = p.iter().sum();
        if total > 0.0 {
            p.iter_mut().for_each(|v| *v /= total);
        } else {
            p.clone_from(&self.source_label_marginal);
        }
        p
    }

    /// Optimal linear rule for a two-class scenario with shared isotropic
    /// covariance and the given class prior.
    pub fn linear_rule(&self, domain: Domain) -> Result<LinearRule> {
        if self.n_classes != 2 {
            return Err(Error::InvalidScenario("linear rule needs exactly 2 classes".into()));
        }
        let g = self.gaussians(domain)?;
        let prior = match domain {
            Domain::Source => &self.source_label_marginal,
            Domain::Target => &self.target_label_marginal,
        };
        let (m0, m1) = (g[0].mean, g[1].mean);
        let inv = g[0].inv;
        let d = [m1[0] - m0[0], m1[1] - m0[1]];
        let w = mat_vec(&inv, &d);
        let mid = [(m0[0] + m1[0]) / 2.0, (m0[1] + m1[1]) / 2.0];
        let mut b = -(w[0] * mid[0] + w[1] * mid[1]);
        if prior[0] > 0.0 && prior[1] > 0.0 {
            b += (prior[1] / prior[0]).ln();
        }
        Ok(LinearRule { w, b })
    }

    /// Exact class-wise error of a linear rule under this scenario.
    pub fn class_errors(&self, rule: &LinearRule, domain: Domain) -> Result<Vec<f64>> {
        let (m, c) = match domain {
            Domain::Source => (&self.source_class_means, &self.source_class_covs),
            Domain::Target => (&self.target_class_means, &self.target_class_covs),
        };
        if self.n_classes != 2 {
            return Err(Error::InvalidScenario("class errors need exactly 2 classes".into()));
        }
        let std_normal = Normal::standard();
        Ok((0..2)
            .map(|y| {
                let mu = rule.w[0] * m[y][0] + rule.w[1] * m[y][1] + rule.b;
                let var = rule.w[0] * (c[y][0][0] * rule.w[0] + c[y][0][1] * rule.w[1])
                    + rule.w[1] * (c[y][1][0] * rule.w[0] + c[y][1][1] * rule.w[1]);
                let p_pos = 1.0 - std_normal.cdf(-mu / var.sqrt());
                if y == 1 {
                    1.0 - p_pos
                } else {
                    p_pos
                }
            })
            .collect())
    }
}

/// `x -> 1{w.x + b > 0}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearRule {
    pub w: Vec2,
    pub b: f64,
}

impl LinearRule {
    pub fn predict(&self, x: &Vec2) -> usize {
        usize::from(self.w[0] * x[0] + self.w[1] * x[1] + self.b > 0.0)
    }
}

/// Draws `n` pairs: `y` from the domain label marginal, then `x` from its
/// class conditional. Deterministic in `(sc.seed, domain, n)`.
pub fn sample(sc: &ShiftScenario, domain: Domain, n: usize) -> Result<SampleBatch> {
    sample_seeded(sc, domain, n, sc.seed, 0)
}

/// Like [`sample`] with an explicit seed and split index; distinct splits
/// give independent draws.
pub fn sample_seeded(sc: &ShiftScenario, domain: Domain, n: usize, seed: u64, split: u64) -> Result<SampleBatch> {
    if n == 0 {
        return Err(Error::EmptyInput("sample size must be positive".into()));
    }
    let mut label_rng = stream_rng(seed, Purpose::Labels, domain, split);
    let mut feat_rng = stream_rng(seed, Purpose::Features, domain, split);
    let src = sc.gaussians(Domain::Source)?;
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    if let Some(w) = sc.posterior_labels(domain) {
        let comp = WeightedIndex::new(w).map_err(|e| Error::InvalidScenario(e.to_string()))?;
        for _ in 0..n {
            let k = comp.sample(&mut label_rng);
            let x = src[k].draw(&mut feat_rng);
            let post = sc.source_posterior(&src, &x);
            let y = WeightedIndex::new(&post)
                .map_err(|e| Error::InvalidScenario(e.to_string()))?
                .sample(&mut label_rng);
            xs.push(x);
            ys.push(y);
        }
    } else {
        let g = sc.gaussians(domain)?;
        let marginal = match domain {
            Domain::Source => &sc.source_label_marginal,
            Domain::Target => &sc.target_label_marginal,
        };
        let labels = WeightedIndex::new(marginal).map_err(|e| Error::InvalidScenario(e.to_string()))?;
        for _ in 0..n {
            let y = labels.sample(&mut label_rng);
            xs.push(g[y].draw(&mut feat_rng));
            ys.push(y);
        }
    }
    Ok(SampleBatch { xs, ys, domain })
}

/// Axis-aligned box covering every class mean of both domains by
/// `BOX_SIGMAS` standard deviations.
pub fn bounding_box(sc: &ShiftScenario) -> ([f64; 2], [f64; 2]) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    let pairs = sc
        .source_class_means
        .iter()
        .zip(&sc.source_class_covs)
        .chain(sc.target_class_means.iter().zip(&sc.target_class_covs));
    for (m, c) in pairs {
        for a in 0..2 {
            let r = BOX_SIGMAS * c[a][a].sqrt();
            lo[a] = lo[a].min(m[a] - r);
            hi[a] = hi[a].max(m[a] + r);
        }
    }
    (lo, hi)
}

/// Grid atoms in row-major order (`x` index outer).
fn grid_atoms(lo: [f64; 2], hi: [f64; 2], g: usize) -> (Vec<Atom>, f64) {
    let h = [(hi[0] - lo[0]) / g as f64, (hi[1] - lo[1]) / g as f64];
    let mut atoms = Vec::with_capacity(g * g);
    for i in 0..g {
        for j in 0..g {
            let c = vec![lo[0] + (i as f64 + 0.5) * h[0], lo[1] + (j as f64 + 0.5) * h[1]];
            atoms.push(Atom::with_coord(format!("{i},{j}"), c));
        }
    }
    (atoms, h[0] * h[1])
}

/// Midpoint-rule discretization of one domain onto a `g x g` grid. Source
/// and target of one scenario share the grid, so their joints are directly
/// comparable.
pub fn discretize(sc: &ShiftScenario, domain: Domain, g: usize) -> Result<JointPmf> {
    if g < 2 {
        return Err(Error::OutOfRange(format!("grid size {g} must be at least 2")));
    }
    let (lo, hi) = bounding_box(sc);
    if !(hi[0] - lo[0] > 0.0 && hi[1] - lo[1] > 0.0) || !lo.iter().chain(&hi).all(|v| v.is_finite()) {
        return Err(Error::InvalidScenario("degenerate bounding box".into()));
    }
    let (atoms, area) = grid_atoms(lo, hi, g);
    let ny = sc.n_classes;
    let mut mass = Vec::with_capacity(atoms.len() * ny);
    let src = sc.gaussians(Domain::Source)?;
    match sc.posterior_labels(domain) {
        Some(w) => {
            for a in &atoms {
                let x = [a.coord[0], a.coord[1]];
                let tx: f64 = w.iter().zip(&src).map(|(w, g)| w * g.pdf(&x)).sum::<f64>() * area;
                let post = sc.source_posterior(&src, &x);
                mass.extend(post.iter().map(|p| tx * p));
            }
        }
        None => {
            let gs = sc.gaussians(domain)?;
            let prior = match domain {
                Domain::Source => &sc.source_label_marginal,
                Domain::Target => &sc.target_label_marginal,
            };
            for a in &atoms {
                let x = [a.coord[0], a.coord[1]];
                mass.extend(gs.iter().zip(prior).map(|(g, p)| p * g.pdf(&x) * area));
            }
        }
    }
    let ys = (0..ny).map(|y| Atom::new(y.to_string())).collect();
    JointPmf::from_weights(atoms, ys, &mass)
}
