//! Finite-support probability objects.
//!
//! [`Pmf`] and [`JointPmf`] hold exact probability tables. Zero-mass atoms are
//! allowed and kept in the support so that distributions with disjoint
//! supports can be compared atom by atom. [`LossTable`] holds per-cell loss
//! values of a fixed hypothesis, which is all the risk functionals need.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on total mass for every validated distribution.
pub const MASS_TOL: f64 = 1e-12;

/// Logarithm base used when reporting entropies and divergences.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum LogBase {
    #[serde(rename = "e")]
    E,
    #[default]
    #[serde(rename = "2")]
    Two,
}

impl LogBase {
    /// Converts a value measured in nats into this base.
    pub fn from_nats(self, nats: f64) -> f64 {
        match self {
            LogBase::E => nats,
            LogBase::Two => nats / std::f64::consts::LN_2,
        }
    }

    pub fn ln_base(self) -> f64 {
        match self {
            LogBase::E => 1.0,
            LogBase::Two => std::f64::consts::LN_2,
        }
    }
}

impl fmt::Display for LogBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LogBase::E => f.write_str("e"),
            LogBase::Two => f.write_str("2"),
        }
    }
}

impl FromStr for LogBase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "e" | "E" | "nats" => Ok(LogBase::E),
            "2" | "bits" => Ok(LogBase::Two),
            other => Err(Error::OutOfRange(format!("unknown log base `{other}`"))),
        }
    }
}

/// A support point: an identifier plus optional real coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub id: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub coord: Vec<f64>,
}

impl Atom {
    pub fn new(id: impl Into<String>) -> Self {
        Atom {
            id: id.into(),
            coord: Vec::new(),
        }
    }

    /// A 1-D atom whose identifier is its coordinate.
    pub fn at(x: f64) -> Self {
        Atom {
            id: format!("{x}"),
            coord: vec![x],
        }
    }

    pub fn with_coord(id: impl Into<String>, coord: Vec<f64>) -> Self {
        Atom {
            id: id.into(),
            coord,
        }
    }

    pub fn coord_1d(&self) -> Option<f64> {
        match self.coord.as_slice() {
            [x] => Some(*x),
            _ => None,
        }
    }
}

fn indexed_atoms(n: usize) -> Vec<Atom> {
    (0..n).map(|i| Atom::new(i.to_string())).collect()
}

fn check_unique(atoms: &[Atom], what: &str) -> Result<()> {
    let mut seen = HashMap::with_capacity(atoms.len());
    for a in atoms {
        if seen.insert(a.id.as_str(), ()).is_some() {
            return Err(Error::InvalidDistribution(format!(
                "duplicate {what} atom `{}`",
                a.id
            )));
        }
    }
    Ok(())
}

fn check_masses(masses: &[f64]) -> Result<()> {
    let mut total = 0.0;
    for &m in masses {
        if !m.is_finite() || m < 0.0 {
            return Err(Error::InvalidDistribution(format!(
                "mass {m} is negative or non-finite"
            )));
        }
        total += m;
    }
    if (total - 1.0).abs() > MASS_TOL {
        return Err(Error::InvalidDistribution(format!(
            "total mass {total} differs from 1"
        )));
    }
    Ok(())
}

fn normalize(weights: &[f64]) -> Result<Vec<f64>> {
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidDistribution(
            "weights must be finite and nonnegative".into(),
        ));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidDistribution("weights sum to zero".into()));
    }
    Ok(weights.iter().map(|w| w / total).collect())
}

/// Entropy of a probability vector in nats, with `0 log 0 = 0`.
pub fn entropy_nats(probs: &[f64]) -> f64 {
    -probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>()
}

/// Probability mass function over an ordered finite support.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PmfRepr")]
pub struct Pmf {
    support: Vec<Atom>,
    probs: Vec<f64>,
}

#[derive(Deserialize)]
struct PmfRepr {
    support: Vec<Atom>,
    probs: Vec<f64>,
}

impl TryFrom<PmfRepr> for Pmf {
    type Error = Error;

    fn try_from(r: PmfRepr) -> Result<Self> {
        Pmf::new(r.support, r.probs)
    }
}

impl Pmf {
    pub fn new(support: Vec<Atom>, probs: Vec<f64>) -> Result<Self> {
        if support.len() != probs.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} atoms but {} probabilities",
                support.len(),
                probs.len()
            )));
        }
        if support.is_empty() {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        check_unique(&support, "support")?;
        check_masses(&probs)?;
        Ok(Pmf { support, probs })
    }

    /// Builds a pmf on atoms `0..n` from exact probabilities.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        Pmf::new(indexed_atoms(probs.len()), probs)
    }

    /// Normalizes nonnegative weights into a pmf on the given support.
    pub fn from_weights(support: Vec<Atom>, weights: &[f64]) -> Result<Self> {
        let probs = normalize(weights)?;
        Pmf::new(support, probs)
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Pmf::from_probs(vec![1.0 / n as f64; n])
    }

    /// A pmf on the real line; atom identifiers are the coordinates.
    pub fn on_line(coords: &[f64], probs: Vec<f64>) -> Result<Self> {
        Pmf::new(coords.iter().map(|&x| Atom::at(x)).collect(), probs)
    }

    pub fn point_mass(n: usize, at: usize) -> Result<Self> {
        if at >= n {
            return Err(Error::OutOfRange(format!("atom {at} outside support of size {n}")));
        }
        let mut probs = vec![0.0; n];
        probs[at] = 1.0;
        Pmf::from_probs(probs)
    }

    pub fn support(&self) -> &[Atom] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn prob(&self, id: &str) -> f64 {
        self.support
            .iter()
            .position(|a| a.id == id)
            .map_or(0.0, |i| self.probs[i])
    }

    /// Image of the pmf under `map`; masses of colliding images are summed.
    pub fn pushforward<F: FnMut(&Atom) -> Atom>(&self, mut map: F) -> Pmf {
        let mut support: Vec<Atom> = Vec::new();
        let mut probs: Vec<f64> = Vec::new();
        let mut pos: HashMap<String, usize> = HashMap::new();
        for (a, &m) in self.support.iter().zip(&self.probs) {
            let img = map(a);
            match pos.get(&img.id) {
                Some(&i) => probs[i] += m,
                None => {
                    pos.insert(img.id.clone(), support.len());
                    support.push(img);
                    probs.push(m);
                }
            }
        }
        Pmf { support, probs }
    }

    pub fn entropy(&self, base: LogBase) -> f64 {
        base.from_nats(entropy_nats(&self.probs))
    }
}

/// Union of two supports keyed by id. Returns the union and, for each input,
/// the position of its atoms inside the union.
fn union_support(a: &[Atom], b: &[Atom]) -> Result<(Vec<Atom>, Vec<usize>, Vec<usize>)> {
    if a == b {
        let idx: Vec<usize> = (0..a.len()).collect();
        return Ok((a.to_vec(), idx.clone(), idx));
    }
    let mut union: Vec<Atom> = a.to_vec();
    let mut pos: HashMap<&str, usize> = a.iter().enumerate().map(|(i, x)| (x.id.as_str(), i)).collect();
    let ia: Vec<usize> = (0..a.len()).collect();
    let mut ib = Vec::with_capacity(b.len());
    for atom in b {
        match pos.get(atom.id.as_str()) {
            Some(&i) => {
                if union[i].coord != atom.coord {
                    return Err(Error::IncompatibleAtoms {
                        id: atom.id.clone(),
                    });
                }
                ib.push(i);
            }
            None => {
                pos.insert(atom.id.as_str(), union.len());
                ib.push(union.len());
                union.push(atom.clone());
            }
        }
    }
    Ok((union, ia, ib))
}

fn scatter(values: &[f64], index: &[usize], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (&v, &i) in values.iter().zip(index) {
        out[i] = v;
    }
    out
}

/// Shared interface of [`Pmf`] and [`JointPmf`] used by the divergences.
pub trait Distribution: Sized {
    /// Probability vectors of both distributions on the union of their
    /// supports, zero-filled where an atom is missing.
    fn align(&self, other: &Self) -> Result<(Vec<f64>, Vec<f64>)>;

    /// The even mixture `(self + other) / 2` on the union support.
    fn mixture(&self, other: &Self) -> Result<Self>;
}

impl Distribution for Pmf {
    fn align(&self, other: &Self) -> Result<(Vec<f64>, Vec<f64>)> {
        let (union, ia, ib) = union_support(&self.support, &other.support)?;
        let n = union.len();
        Ok((scatter(&self.probs, &ia, n), scatter(&other.probs, &ib, n)))
    }

    fn mixture(&self, other: &Self) -> Result<Self> {
        let (union, ia, ib) = union_support(&self.support, &other.support)?;
        let n = union.len();
        let p = scatter(&self.probs, &ia, n);
        let q = scatter(&other.probs, &ib, n);
        let m = p.iter().zip(&q).map(|(a, b)| 0.5 * (a + b)).collect();
        Pmf::new(union, m)
    }
}

/// Which variable a conditional family conditions on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CondAxis {
    /// `P(y | x)`, one member per X atom.
    YGivenX,
    /// `P(x | y)`, one member per Y atom.
    XGivenY,
}

/// One member of a conditional family.
#[derive(Clone, Debug, PartialEq)]
pub struct Conditional {
    /// Position of the conditioning atom in its support.
    pub index: usize,
    pub atom: Atom,
    /// Marginal mass of the conditioning atom.
    pub weight: f64,
    pub pmf: Pmf,
}

/// Joint pmf over `X x Y`, stored row-major (one row per X atom).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "JointRepr", into = "JointRepr")]
pub struct JointPmf {
    x_support: Vec<Atom>,
    y_support: Vec<Atom>,
    mass: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct JointRepr {
    x_support: Vec<Atom>,
    y_support: Vec<Atom>,
    mass: Vec<Vec<f64>>,
}

impl TryFrom<JointRepr> for JointPmf {
    type Error = Error;

    fn try_from(r: JointRepr) -> Result<Self> {
        JointPmf::new(r.x_support, r.y_support, r.mass)
    }
}

impl From<JointPmf> for JointRepr {
    fn from(j: JointPmf) -> Self {
        let ny = j.y_support.len();
        let mass = j.mass.chunks(ny).map(<[f64]>::to_vec).collect();
        JointRepr {
            x_support: j.x_support,
            y_support: j.y_support,
            mass,
        }
    }
}

impl JointPmf {
    pub fn new(x_support: Vec<Atom>, y_support: Vec<Atom>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() != x_support.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} rows for {} X atoms",
                rows.len(),
                x_support.len()
            )));
        }
        let ny = y_support.len();
        if rows.iter().any(|r| r.len() != ny) {
            return Err(Error::ShapeMismatch(format!("every row must have {ny} entries")));
        }
        JointPmf::from_flat(x_support, y_support, rows.concat())
    }

    pub fn from_flat(x_support: Vec<Atom>, y_support: Vec<Atom>, mass: Vec<f64>) -> Result<Self> {
        if x_support.is_empty() {
            return Err(Error::InvalidDistribution("empty X support".into()));
        }
        if y_support.len() < 2 {
            return Err(Error::InvalidDistribution("Y support needs at least 2 atoms".into()));
        }
        if mass.len() != x_support.len() * y_support.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} cells for a {}x{} grid",
                mass.len(),
                x_support.len(),
                y_support.len()
            )));
        }
        check_unique(&x_support, "X")?;
        check_unique(&y_support, "Y")?;
        check_masses(&mass)?;
        Ok(JointPmf {
            x_support,
            y_support,
            mass,
        })
    }

    /// Builds a joint on indexed atoms from exact row-major probabilities.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let nx = rows.len();
        let ny = rows.first().map_or(0, Vec::len);
        JointPmf::new(indexed_atoms(nx), indexed_atoms(ny), rows)
    }

    /// Normalizes a nonnegative row-major weight grid.
    pub fn from_weights(x_support: Vec<Atom>, y_support: Vec<Atom>, weights: &[f64]) -> Result<Self> {
        let mass = normalize(weights)?;
        JointPmf::from_flat(x_support, y_support, mass)
    }

    /// `mass(x, y) = p_x(x) * p_y(y)`.
    pub fn independent(px: &Pmf, py: &Pmf) -> Result<Self> {
        let mass = px
            .probs()
            .iter()
            .flat_map(|a| py.probs().iter().map(move |b| a * b))
            .collect();
        JointPmf::from_flat(px.support().to_vec(), py.support().to_vec(), mass)
    }

    /// Rebuilds `mass(x, y) = marginal_y(y) * P(x | y)` from class-conditional
    /// pmfs sharing one X support.
    pub fn from_class_conditionals(label_marginal: &Pmf, conditionals: &[Pmf]) -> Result<Self> {
        if conditionals.len() != label_marginal.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} conditionals for {} labels",
                conditionals.len(),
                label_marginal.len()
            )));
        }
        let xs = conditionals[0].support().to_vec();
        if conditionals.iter().any(|c| c.support() != xs.as_slice()) {
            return Err(Error::ShapeMismatch("conditionals must share a support".into()));
        }
        let ny = label_marginal.len();
        let mut mass = vec![0.0; xs.len() * ny];
        for (j, (c, &w)) in conditionals.iter().zip(label_marginal.probs()).enumerate() {
            for (i, &p) in c.probs().iter().enumerate() {
                mass[i * ny + j] = w * p;
            }
        }
        JointPmf::from_flat(xs, label_marginal.support().to_vec(), mass)
    }

    pub fn x_support(&self) -> &[Atom] {
        &self.x_support
    }

    pub fn y_support(&self) -> &[Atom] {
        &self.y_support
    }

    pub fn nx(&self) -> usize {
        self.x_support.len()
    }

    pub fn ny(&self) -> usize {
        self.y_support.len()
    }

    /// Row-major cell masses.
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.mass[i * self.ny() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let ny = self.ny();
        &self.mass[i * ny..(i + 1) * ny]
    }

    pub fn marginal_x(&self) -> Pmf {
        let probs = self.mass.chunks(self.ny()).map(|r| r.iter().sum()).collect();
        Pmf {
            support: self.x_support.clone(),
            probs,
        }
    }

    pub fn marginal_y(&self) -> Pmf {
        let mut probs = vec![0.0; self.ny()];
        for row in self.mass.chunks(self.ny()) {
            for (acc, m) in probs.iter_mut().zip(row) {
                *acc += m;
            }
        }
        Pmf {
            support: self.y_support.clone(),
            probs,
        }
    }

    /// Row and column sums.
    pub fn marginals(&self) -> (Pmf, Pmf) {
        (self.marginal_x(), self.marginal_y())
    }

    /// Swaps the roles of X and Y.
    pub fn transpose(&self) -> JointPmf {
        let (nx, ny) = (self.nx(), self.ny());
        let mut mass = vec![0.0; nx * ny];
        for i in 0..nx {
            for j in 0..ny {
                mass[j * nx + i] = self.mass[i * ny + j];
            }
        }
        JointPmf {
            x_support: self.y_support.clone(),
            y_support: self.x_support.clone(),
            mass,
        }
    }

    /// Conditional family along `axis`. Atoms with zero marginal mass have no
    /// conditional and are left out.
    pub fn conditionals(&self, axis: CondAxis) -> Result<Vec<Conditional>> {
        let j = match axis {
            CondAxis::YGivenX => std::borrow::Cow::Borrowed(self),
            CondAxis::XGivenY => std::borrow::Cow::Owned(self.transpose()),
        };
        let ny = j.ny();
        let mut family = Vec::new();
        for (i, row) in j.mass.chunks(ny).enumerate() {
            let w: f64 = row.iter().sum();
            if w <= 0.0 {
                continue;
            }
            family.push(Conditional {
                index: i,
                atom: j.x_support[i].clone(),
                weight: w,
                pmf: Pmf {
                    support: j.y_support.clone(),
                    probs: row.iter().map(|m| m / w).collect(),
                },
            });
        }
        if family.is_empty() {
            return Err(Error::EmptyConditionalFamily);
        }
        Ok(family)
    }

    /// Pushes every cell through `map` and sums colliding images.
    pub fn pushforward<F: FnMut(&Atom, &Atom) -> Atom>(&self, mut map: F) -> Pmf {
        let mut support: Vec<Atom> = Vec::new();
        let mut probs: Vec<f64> = Vec::new();
        let mut pos: HashMap<String, usize> = HashMap::new();
        let ny = self.ny();
        for (k, &m) in self.mass.iter().enumerate() {
            let img = map(&self.x_support[k / ny], &self.y_support[k % ny]);
            match pos.get(&img.id) {
                Some(&i) => probs[i] += m,
                None => {
                    pos.insert(img.id.clone(), support.len());
                    support.push(img);
                    probs.push(m);
                }
            }
        }
        Pmf { support, probs }
    }
}

impl Distribution for JointPmf {
    fn align(&self, other: &Self) -> Result<(Vec<f64>, Vec<f64>)> {
        if self.x_support == other.x_support && self.y_support == other.y_support {
            return Ok((self.mass.clone(), other.mass.clone()));
        }
        let (ux, ax, bx) = union_support(&self.x_support, &other.x_support)?;
        let (uy, ay, by) = union_support(&self.y_support, &other.y_support)?;
        let place = |j: &JointPmf, ix: &[usize], iy: &[usize]| {
            let mut out = vec![0.0; ux.len() * uy.len()];
            for (a, &xi) in ix.iter().enumerate() {
                for (b, &yi) in iy.iter().enumerate() {
                    out[xi * uy.len() + yi] = j.get(a, b);
                }
            }
            out
        };
        Ok((place(self, &ax, &ay), place(other, &bx, &by)))
    }

    fn mixture(&self, other: &Self) -> Result<Self> {
        let (p, q) = self.align(other)?;
        let (ux, _, _) = union_support(&self.x_support, &other.x_support)?;
        let (uy, _, _) = union_support(&self.y_support, &other.y_support)?;
        let mass = p.iter().zip(&q).map(|(a, b)| 0.5 * (a + b)).collect();
        JointPmf::from_flat(ux, uy, mass)
    }
}

/// Free-function form of [`Distribution::mixture`].
pub fn mixture<D: Distribution>(p: &D, q: &D) -> Result<D> {
    p.mixture(q)
}

/// Loss of a fixed hypothesis at every `(x, y)` cell.
#[derive(Clone, Debug, PartialEq)]
pub struct LossTable {
    values: Vec<f64>,
    nx: usize,
    ny: usize,
    range_g: f64,
}

impl LossTable {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let nx = rows.len();
        let ny = rows.first().map_or(0, Vec::len);
        if nx == 0 || ny == 0 || rows.iter().any(|r| r.len() != ny) {
            return Err(Error::ShapeMismatch("loss table must be a nonempty rectangle".into()));
        }
        LossTable::from_flat(nx, ny, rows.concat())
    }

    pub fn from_flat(nx: usize, ny: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != nx * ny || values.is_empty() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {nx}x{ny} table",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDistribution("loss values must be finite".into()));
        }
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(LossTable {
            values,
            nx,
            ny,
            range_g: max - min,
        })
    }

    /// Zero-one loss of a deterministic classifier: `1` where `predict[x] != y`.
    pub fn zero_one(predict: &[usize], ny: usize) -> Result<Self> {
        let values = predict
            .iter()
            .flat_map(|&p| (0..ny).map(move |y| if p == y { 0.0 } else { 1.0 }))
            .collect();
        LossTable::from_flat(predict.len(), ny, values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.ny + j]
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    /// `max(values) - min(values)`.
    pub fn range_g(&self) -> f64 {
        self.range_g
    }

    pub fn is_zero_one(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0 || v == 1.0)
    }
}

/// `sum mass(x,y) * loss(x,y)`.
pub fn expected_risk(j: &JointPmf, l: &LossTable) -> Result<f64> {
    if j.nx() != l.nx || j.ny() != l.ny {
        return Err(Error::ShapeMismatch(format!(
            "joint is {}x{}, loss table is {}x{}",
            j.nx(),
            j.ny(),
            l.nx,
            l.ny
        )));
    }
    Ok(j.mass.iter().zip(&l.values).map(|(m, v)| m * v).sum())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropyStats {
    /// `H(Y)`
    pub h_y: f64,
    /// `H(Y|X) = E_x H(Y | X = x)`
    pub h_y_given_x: f64,
}

pub fn entropy_stats(j: &JointPmf, base: LogBase) -> EntropyStats {
    let h_y = entropy_nats(j.marginal_y().probs());
    let ny = j.ny();
    let mut h_cond = 0.0;
    for row in j.mass.chunks(ny) {
        let w: f64 = row.iter().sum();
        if w > 0.0 {
            let cond: Vec<f64> = row.iter().map(|m| m / w).collect();
            h_cond += w * entropy_nats(&cond);
        }
    }
    EntropyStats {
        h_y: base.from_nats(h_y),
        h_y_given_x: base.from_nats(h_cond),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_joint() -> JointPmf {
        JointPmf::from_rows(vec![vec![0.4, 0.1], vec![0.2, 0.3]]).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn marginals_of_uniform_and_sample() {
        let u = JointPmf::from_rows(vec![vec![0.25; 2]; 2]).unwrap();
        let (x, y) = u.marginals();
        assert!(close(x.probs(), &[0.5, 0.5], 1e-15));
        assert!(close(y.probs(), &[0.5, 0.5], 1e-15));

        let (x, y) = sample_joint().marginals();
        assert!(close(x.probs(), &[0.5, 0.5], 1e-15));
        assert!(close(y.probs(), &[0.6, 0.4], 1e-15));
    }

    #[test]
    fn point_mass_marginals() {
        let j = JointPmf::from_rows(vec![vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let (x, y) = j.marginals();
        assert_eq!(x.probs(), &[1.0, 0.0]);
        assert_eq!(y.probs(), &[1.0, 0.0]);
    }

    #[test]
    fn conditional_y_given_x() {
        let fam = sample_joint().conditionals(CondAxis::YGivenX).unwrap();
        assert!(close(fam[0].pmf.probs(), &[0.8, 0.2], 1e-15));
        assert!(close(fam[1].pmf.probs(), &[0.4, 0.6], 1e-15));
    }

    #[test]
    fn independent_joint_conditionals_equal_marginals() {
        let px = Pmf::from_probs(vec![0.2, 0.5, 0.3]).unwrap();
        let py = Pmf::from_probs(vec![0.7, 0.3]).unwrap();
        let j = JointPmf::independent(&px, &py).unwrap();
        for c in j.conditionals(CondAxis::YGivenX).unwrap() {
            assert!(close(c.pmf.probs(), py.probs(), 1e-15));
        }
        for c in j.conditionals(CondAxis::XGivenY).unwrap() {
            assert!(close(c.pmf.probs(), px.probs(), 1e-15));
        }
    }

    #[test]
    fn zero_row_is_skipped_and_reconstruction_is_exact() {
        let j = JointPmf::from_rows(vec![vec![0.3, 0.2], vec![0.0, 0.0], vec![0.1, 0.4]]).unwrap();
        let fam = j.conditionals(CondAxis::YGivenX).unwrap();
        assert_eq!(fam.iter().map(|c| c.index).collect::<Vec<_>>(), vec![0, 2]);
        for c in &fam {
            for (k, p) in c.pmf.probs().iter().enumerate() {
                assert!((c.weight * p - j.get(c.index, k)).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn serde_round_trip_and_validation() {
        let j = sample_joint();
        let s = serde_json::to_string(&j).unwrap();
        assert!(s.contains("\"mass\":[[0.4,0.1],[0.2,0.3]]"));
        let back: JointPmf = serde_json::from_str(&s).unwrap();
        assert_eq!(back, j);

        let bad = r#"{"x_support":[{"id":"a"}],"y_support":[{"id":"0"},{"id":"1"}],"mass":[[0.5,0.6]]}"#;
        assert!(serde_json::from_str::<JointPmf>(bad).is_err());
    }

    #[test]
    fn invalid_pmfs_rejected() {
        assert!(Pmf::from_probs(vec![0.5, 0.6]).is_err());
        assert!(Pmf::from_probs(vec![1.5, -0.5]).is_err());
        let dup = vec![Atom::new("a"), Atom::new("a")];
        assert!(Pmf::new(dup, vec![0.5, 0.5]).is_err());
        assert!(JointPmf::from_rows(vec![vec![1.0]]).is_err());
    }

    #[test]
    fn expected_risk_examples() {
        let u = JointPmf::from_rows(vec![vec![0.25; 2]; 2]).unwrap();
        let zero = LossTable::new(vec![vec![0.0; 2]; 2]).unwrap();
        assert_eq!(expected_risk(&u, &zero).unwrap(), 0.0);
        let mismatch = LossTable::zero_one(&[0, 1], 2).unwrap();
        assert!((expected_risk(&u, &mismatch).unwrap() - 0.5).abs() < 1e-15);
        let wrong = LossTable::new(vec![vec![0.0; 3]; 2]).unwrap();
        assert!(matches!(expected_risk(&u, &wrong), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn loss_table_range() {
        let l = LossTable::new(vec![vec![0.5, -1.0], vec![2.0, 0.0]]).unwrap();
        assert_eq!(l.range_g(), 3.0);
        assert!(!l.is_zero_one());
        assert!(LossTable::zero_one(&[1, 0, 2], 3).unwrap().is_zero_one());
    }

    #[test]
    fn entropy_examples() {
        let u = JointPmf::from_rows(vec![vec![0.25; 2]; 2]).unwrap();
        let e = entropy_stats(&u, LogBase::Two);
        assert!((e.h_y - 1.0).abs() < 1e-15);
        assert!((e.h_y_given_x - 1.0).abs() < 1e-15);

        // deterministic labeling function
        let det = JointPmf::from_rows(vec![vec![0.3, 0.0], vec![0.0, 0.5], vec![0.2, 0.0]]).unwrap();
        assert_eq!(entropy_stats(&det, LogBase::E).h_y_given_x, 0.0);
    }

    #[test]
    fn mixture_examples() {
        let p = Pmf::from_probs(vec![1.0, 0.0]).unwrap();
        let q = Pmf::from_probs(vec![0.0, 1.0]).unwrap();
        assert_eq!(p.mixture(&q).unwrap().probs(), &[0.5, 0.5]);
        assert_eq!(p.mixture(&p).unwrap(), p);

        let s = Pmf::on_line(&[1.0, 2.0, 3.0], vec![1.0 / 3.0; 3]).unwrap();
        let t = Pmf::on_line(&[1.0, 2.0, 3.0], vec![0.25, 0.5, 0.25]).unwrap();
        let m = mixture(&s, &t).unwrap();
        assert!(close(m.probs(), &[7.0 / 24.0, 5.0 / 12.0, 7.0 / 24.0], 1e-15));
    }

    #[test]
    fn mixture_unions_supports_and_rejects_conflicting_coords() {
        let p = Pmf::on_line(&[0.0, 1.0], vec![0.5, 0.5]).unwrap();
        let q = Pmf::on_line(&[1.0, 2.0], vec![0.5, 0.5]).unwrap();
        let m = p.mixture(&q).unwrap();
        assert_eq!(m.len(), 3);
        assert!(close(m.probs(), &[0.25, 0.5, 0.25], 1e-15));

        let clash = Pmf::new(vec![Atom::with_coord("0", vec![9.0]), Atom::at(5.0)], vec![0.5, 0.5]).unwrap();
        assert!(matches!(p.mixture(&clash), Err(Error::IncompatibleAtoms { .. })));
    }
}
