//! Exact f-divergences and the threshold-class H-divergence.
//!
//! Every divergence is computed in nats on the union of the two supports and
//! converted to the requested base at the end. `0 log 0 = 0` throughout.
//! KL and Rényi-2 return `+inf` when `q` fails to dominate `p`; this is a
//! value, not an error.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dist::{Distribution, LogBase, Pmf};
use crate::error::{Error, Result};

const LN_2: f64 = std::f64::consts::LN_2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DivergenceKind {
    #[serde(rename = "KL")]
    Kl,
    #[serde(rename = "JS")]
    Js,
    #[serde(rename = "TV")]
    Tv,
    #[serde(rename = "Renyi2")]
    Renyi2,
}

impl fmt::Display for DivergenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DivergenceKind::Kl => "KL",
            DivergenceKind::Js => "JS",
            DivergenceKind::Tv => "TV",
            DivergenceKind::Renyi2 => "Renyi2",
        })
    }
}

impl FromStr for DivergenceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "kl" => Ok(DivergenceKind::Kl),
            "js" => Ok(DivergenceKind::Js),
            "tv" => Ok(DivergenceKind::Tv),
            "renyi2" | "renyi-2" => Ok(DivergenceKind::Renyi2),
            other => Err(Error::OutOfRange(format!("unknown divergence `{other}`"))),
        }
    }
}

/// A divergence together with the kind and base it was reported in.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergenceValue {
    pub kind: DivergenceKind,
    pub base: LogBase,
    #[serde(with = "crate::serde_ext::pos_inf_as_null")]
    pub value: f64,
}

impl DivergenceValue {
    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }
}

/// `KL(p || q)` in nats on aligned vectors.
pub fn kl_nats(p: &[f64], q: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return f64::INFINITY;
            }
            acc += a * (a / b).ln();
        }
    }
    acc.max(0.0)
}

/// `JS(p || q)` in nats on aligned vectors.
///
/// Mass sitting on atoms the other side does not charge contributes exactly
/// `ln 2 / 2` per unit, so disjoint supports give exactly `ln 2`.
pub fn js_nats(p: &[f64], q: &[f64]) -> f64 {
    let mut shared = 0.0;
    let mut p_shared = 0.0;
    let mut q_shared = 0.0;
    let mut p_seen = 0.0;
    let mut q_seen = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        p_seen += a;
        q_seen += b;
        if a > 0.0 && b > 0.0 {
            let m = a + b;
            shared += a * (2.0 * a / m).ln() + b * (2.0 * b / m).ln();
            p_shared += a;
            q_shared += b;
        }
    }
    let p_only = (p_seen.min(1.0) - p_shared).max(0.0);
    let q_only = (q_seen.min(1.0) - q_shared).max(0.0);
    let p_only = if p_shared == 0.0 { 1.0 } else { p_only };
    let q_only = if q_shared == 0.0 { 1.0 } else { q_only };
    (0.5 * shared + 0.5 * LN_2 * (p_only + q_only)).clamp(0.0, LN_2)
}

/// `sum |p - q|`, in `[0, 2]`.
pub fn tv_sum(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum()
}

/// `ln sum p^2 / q` on aligned vectors.
pub fn renyi2_nats(p: &[f64], q: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return f64::INFINITY;
            }
            acc += a * a / b;
        }
    }
    acc.ln().max(0.0)
}

fn nats_of<D: Distribution>(kind: DivergenceKind, p: &D, q: &D) -> Result<f64> {
    let (a, b) = p.align(q)?;
    Ok(match kind {
        DivergenceKind::Kl => kl_nats(&a, &b),
        DivergenceKind::Js => js_nats(&a, &b),
        DivergenceKind::Tv => tv_sum(&a, &b),
        DivergenceKind::Renyi2 => renyi2_nats(&a, &b),
    })
}

/// Computes `kind(p || q)` in `base`. TV carries no logarithm and is
/// reported unscaled whatever the base.
pub fn divergence<D: Distribution>(
    kind: DivergenceKind,
    p: &D,
    q: &D,
    base: LogBase,
) -> Result<DivergenceValue> {
    let nats = nats_of(kind, p, q)?;
    let value = match kind {
        DivergenceKind::Tv => nats,
        _ => base.from_nats(nats),
    };
    Ok(DivergenceValue { kind, base, value })
}

pub fn kl<D: Distribution>(p: &D, q: &D, base: LogBase) -> Result<f64> {
    Ok(base.from_nats(nats_of(DivergenceKind::Kl, p, q)?))
}

pub fn js<D: Distribution>(p: &D, q: &D, base: LogBase) -> Result<f64> {
    Ok(base.from_nats(nats_of(DivergenceKind::Js, p, q)?))
}

pub fn tv<D: Distribution>(p: &D, q: &D) -> Result<f64> {
    nats_of(DivergenceKind::Tv, p, q)
}

/// Half of [`tv`]: the largest difference in probability of any event.
pub fn tv_half<D: Distribution>(p: &D, q: &D) -> Result<f64> {
    Ok(0.5 * tv(p, q)?)
}

pub fn renyi2<D: Distribution>(p: &D, q: &D, base: LogBase) -> Result<f64> {
    Ok(base.from_nats(nats_of(DivergenceKind::Renyi2, p, q)?))
}

/// `sqrt(JS)`, a metric on distributions.
pub fn js_distance<D: Distribution>(p: &D, q: &D, base: LogBase) -> Result<f64> {
    Ok(js(p, q, base)?.sqrt())
}

/// Image of `p` under `map`.
pub fn pushforward<F: FnMut(&crate::dist::Atom) -> crate::dist::Atom>(p: &Pmf, map: F) -> Pmf {
    p.pushforward(map)
}

fn coords(p: &Pmf, name: &str) -> Result<Vec<f64>> {
    p.support()
        .iter()
        .map(|a| {
            a.coord_1d()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::MissingCoordinates(format!("atom `{}` of {name}", a.id)))
        })
        .collect()
}

/// H-divergence for the class of threshold classifiers `h_t(x) = 1{x < t}`
/// and their complements.
///
/// The balanced error of `h_t` at telling `p` (label 1) from `q` (label 0) is
/// `(P_p(x >= t) + P_q(x < t)) / 2`; the minimum over thresholds and both
/// labelings is attained on the midpoints between consecutive distinct
/// coordinates or beyond the range. Returns `1 - 2 min err`.
pub fn h_divergence_1d(p: &Pmf, q: &Pmf) -> Result<f64> {
    let xp = coords(p, "p")?;
    let xq = coords(q, "q")?;
    let mut events: Vec<(f64, f64, f64)> = xp
        .iter()
        .zip(p.probs())
        .map(|(&x, &m)| (x, m, 0.0))
        .chain(xq.iter().zip(q.probs()).map(|(&x, &m)| (x, 0.0, m)))
        .collect();
    events.sort_by(|a, b| a.0.total_cmp(&b.0));

    // cumulative masses strictly below each candidate threshold
    let (mut fp, mut fq) = (0.0, 0.0);
    let mut min_err: f64 = 0.5;
    let mut i = 0;
    while i < events.len() {
        let x = events[i].0;
        while i < events.len() && events[i].0 == x {
            fp += events[i].1;
            fq += events[i].2;
            i += 1;
        }
        let err = 0.5 * ((1.0 - fp) + fq);
        let err_c = 0.5 * (fp + (1.0 - fq));
        min_err = min_err.min(err).min(err_c);
    }
    Ok((1.0 - 2.0 * min_err).clamp(0.0, 1.0))
}
