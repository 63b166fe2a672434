//! The two textbook pairs on which JS and the threshold H-divergence disagree.
//!
//! * Interleaved uniforms on `{2k xi}` and `{(2k+1) xi}` inside `[0, 1]`:
//!   disjoint supports give JS = 1 bit while thresholds barely separate them.
//! * `Unif{1,2,3}` against `(1/4, 1/2, 1/4)`: JS is smaller than the
//!   H-divergence.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dist::{Distribution, LogBase, Pmf};
use crate::divergence::{h_divergence_1d, js, kl};
use crate::error::{Error, Result};

/// A pinned value and how far the computed one may stray from it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Expected {
    pub value: f64,
    pub tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub case_id: String,
    pub computed: BTreeMap<String, f64>,
    pub expected: BTreeMap<String, Expected>,
    /// Qualitative claims such as strict inequalities.
    pub claims: BTreeMap<String, bool>,
    pub verdict: bool,
}

impl CaseReport {
    fn new(case_id: &str) -> Self {
        CaseReport {
            case_id: case_id.to_string(),
            computed: BTreeMap::new(),
            expected: BTreeMap::new(),
            claims: BTreeMap::new(),
            verdict: false,
        }
    }

    fn value(mut self, key: &str, v: f64) -> Self {
        self.computed.insert(key.into(), v);
        self
    }

    fn pin(mut self, key: &str, value: f64, tol: f64) -> Self {
        self.expected.insert(key.into(), Expected { value, tol });
        self
    }

    fn claim(mut self, key: &str, ok: bool) -> Self {
        self.claims.insert(key.into(), ok);
        self
    }

    fn finish(mut self) -> Self {
        let pinned_ok = self.expected.iter().all(|(k, e)| {
            self.computed
                .get(k)
                .is_some_and(|v| (v - e.value).abs() <= e.tol)
        });
        self.verdict = pinned_ok && self.claims.values().all(|&c| c);
        self
    }

    /// Keys whose computed value misses its pin, followed by failed claims.
    pub fn failures(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .expected
            .iter()
            .filter(|(k, e)| !self.computed.get(*k).is_some_and(|v| (v - e.value).abs() <= e.tol))
            .map(|(k, _)| k.clone())
            .collect();
        out.extend(self.claims.iter().filter(|(_, ok)| !**ok).map(|(k, _)| k.clone()));
        out
    }
}

/// The interleaved lattice pair `(T, S)` for spacing `xi`.
pub fn interleaved_uniforms(xi: f64) -> Result<(Pmf, Pmf)> {
    if !(xi > 0.0 && xi < 1.0) {
        return Err(Error::OutOfRange(format!("xi = {xi} must lie in (0, 1)")));
    }
    let lattice = |offset: u64| -> Result<Pmf> {
        let coords: Vec<f64> = (0u64..)
            .map(|k| (2 * k + offset) as f64 * xi)
            .take_while(|&x| x <= 1.0 + 1e-12)
            .collect();
        let n = coords.len();
        Pmf::on_line(&coords, vec![1.0 / n as f64; n])
    };
    Ok((lattice(0)?, lattice(1)?))
}

pub fn counterexample1(xi: f64) -> Result<CaseReport> {
    let (t, s) = interleaved_uniforms(xi)?;
    let (pt, ps) = t.align(&s)?;
    let disjoint = pt.iter().zip(&ps).all(|(a, b)| *a == 0.0 || *b == 0.0);
    let j = js(&t, &s, LogBase::Two)?;
    let d_h = h_divergence_1d(&t, &s)?;
    Ok(CaseReport::new("counterexample1")
        .value("xi", xi)
        .value("atoms_target", t.len() as f64)
        .value("atoms_source", s.len() as f64)
        .value("js_bits", j)
        .value("d_h", d_h)
        .pin("js_bits", 1.0, 0.0)
        .claim("disjoint_supports", disjoint)
        .claim("d_h < js", d_h < j)
        .finish())
}

/// `S = Unif{1,2,3}` and `T = (1/4, 1/2, 1/4)` on the same points.
pub fn three_point_pair() -> (Pmf, Pmf) {
    let xs = [1.0, 2.0, 3.0];
    let s = Pmf::on_line(&xs, vec![1.0 / 3.0; 3]).expect("valid pmf");
    let t = Pmf::on_line(&xs, vec![0.25, 0.5, 0.25]).expect("valid pmf");
    (s, t)
}

pub fn counterexample2() -> Result<CaseReport> {
    let (s, t) = three_point_pair();
    let m = s.mixture(&t)?;
    let kl_s = kl(&s, &m, LogBase::Two)?;
    let kl_t = kl(&t, &m, LogBase::Two)?;
    let j = js(&t, &s, LogBase::Two)?;
    let d_h = h_divergence_1d(&t, &s)?;
    Ok(CaseReport::new("counterexample2")
        .value("d_h", d_h)
        .value("js_bits", j)
        .value("kl_s_m_bits", kl_s)
        .value("kl_t_m_bits", kl_t)
        .value("m1", m.probs()[0])
        .value("m2", m.probs()[1])
        .value("m3", m.probs()[2])
        .pin("d_h", 1.0 / 12.0, 1e-12)
        .pin("js_bits", 0.0207, 5e-4)
        .pin("kl_s_m_bits", 0.02110, 5e-5)
        .pin("kl_t_m_bits", 0.02032, 5e-5)
        .pin("m1", 7.0 / 24.0, 1e-15)
        .pin("m2", 5.0 / 12.0, 1e-15)
        .pin("m3", 7.0 / 24.0, 1e-15)
        .claim("js < d_h", j < d_h)
        .finish())
}
