//! Randomized instance generators and the property suites built on them.
//!
//! Instances are drawn naturally rather than engineered: cells are Exp(1)
//! with a 15% chance of being zeroed (every row keeps one positive cell),
//! targets are either independent of the source or a log-normal
//! perturbation of it, and losses come from a random deterministic
//! classifier. Trial `i` of a suite always draws from the same ChaCha stream,
//! so results do not depend on thread scheduling.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    condshift_lower, corollary1_bounds, openset_band, theorem1_upper, theorem2_band, theorem3_upper,
    theorem4_band, theorem5_pipeline, BoundReport, SplitAxis, TailParams, VERDICT_TOL,
};
use crate::dist::{expected_risk, Atom, JointPmf, LogBase, LossTable, Pmf};
use crate::divergence::{js, js_distance, kl, pushforward, tv, tv_half};
use crate::error::{Error, Result};

/// Probability that a generated cell is forced to zero.
pub const ZERO_CELL_PROB: f64 = 0.15;

/// Exp(1) weights with random zeros; at least one entry stays positive.
pub fn sparse_weights<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..n)
        .map(|_| {
            let v: f64 = rng.sample(Exp1);
            if rng.random::<f64>() < ZERO_CELL_PROB {
                0.0
            } else {
                v
            }
        })
        .collect();
    if w.iter().all(|v| *v == 0.0) {
        let k = rng.random_range(0..n);
        w[k] = rng.sample::<f64, _>(Exp1).max(f64::MIN_POSITIVE);
    }
    w
}

/// Strictly positive Exp(1) weights.
pub fn dense_weights<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(Exp1).max(1e-300)).collect()
}

pub fn random_pmf<R: Rng>(rng: &mut R, n: usize) -> Pmf {
    Pmf::from_weights(indexed(n), &sparse_weights(rng, n)).expect("positive weights")
}

fn indexed(n: usize) -> Vec<Atom> {
    (0..n).map(|i| Atom::new(i.to_string())).collect()
}

/// A joint whose every X row carries mass.
pub fn random_joint<R: Rng>(rng: &mut R, nx: usize, ny: usize) -> JointPmf {
    let w: Vec<f64> = (0..nx).flat_map(|_| sparse_weights(rng, ny)).collect();
    JointPmf::from_weights(indexed(nx), indexed(ny), &w).expect("positive weights")
}

/// A source/target pair on `|X| <= 8`, `|Y| <= 4`. Half the time the target
/// is drawn independently, otherwise it multiplies every source cell by
/// `exp(eta Z)` with `eta ~ U(0, 1.5)`.
pub fn random_pair<R: Rng>(rng: &mut R) -> (JointPmf, JointPmf) {
    let nx = rng.random_range(2..=8);
    let ny = rng.random_range(2..=4);
    let s = random_joint(rng, nx, ny);
    let t = if rng.random::<bool>() {
        random_joint(rng, nx, ny)
    } else {
        let eta = rng.random_range(0.0..1.5);
        let mut w: Vec<f64> = s
            .mass()
            .iter()
            .map(|m| m * (eta * rng.sample::<f64, _>(StandardNormal)).exp())
            .collect();
        for row in w.chunks_mut(ny) {
            if row.iter().all(|v| *v == 0.0) {
                row[rng.random_range(0..ny)] = 1e-3;
            }
        }
        JointPmf::from_weights(indexed(nx), indexed(ny), &w).expect("positive weights")
    };
    (s, t)
}

/// Zero-one loss of a uniformly random deterministic classifier.
pub fn random_classifier<R: Rng>(rng: &mut R, nx: usize, ny: usize) -> LossTable {
    let predict: Vec<usize> = (0..nx).map(|_| rng.random_range(0..ny)).collect();
    LossTable::zero_one(&predict, ny).expect("nonempty")
}

/// Source and target over `Z x {0,1}` with identical class conditionals.
pub fn matched_conditional_pair<R: Rng>(rng: &mut R, nz: usize, s_y: [f64; 2], t_y: [f64; 2]) -> (JointPmf, JointPmf) {
    let cond = [dense_weights(rng, nz), dense_weights(rng, nz)];
    let build = |py: [f64; 2]| {
        let c: Vec<Pmf> = cond
            .iter()
            .map(|w| Pmf::from_weights(indexed(nz), w).expect("positive weights"))
            .collect();
        JointPmf::from_class_conditionals(&Pmf::from_probs(py.to_vec()).expect("valid"), &c).expect("shapes agree")
    };
    (build(s_y), build(t_y))
}

/// Open-set fixture: `n` classes per domain, `floor(alpha n)` shared, class
/// conditionals identical across domains. Every class `y` owns two feature
/// cells with conditional `(1 - e_y, e_y)`; the classifier is right on the
/// first cell and wrong on the second, so its class error is `e_y`.
pub fn openset_fixture(n: usize, alpha: f64, class_error: &[f64]) -> Result<(JointPmf, JointPmf, LossTable)> {
    let (s_y, t_y, _) = crate::bounds::openset_label_marginals(n, alpha)?;
    let m = s_y.len();
    if class_error.len() != m || class_error.iter().any(|e| !(0.0..=1.0).contains(e)) {
        return Err(Error::OutOfRange(format!("need {m} class errors in [0, 1]")));
    }
    let conds: Vec<Pmf> = (0..m)
        .map(|y| {
            let mut w = vec![0.0; 2 * m];
            w[2 * y] = 1.0 - class_error[y];
            w[2 * y + 1] = class_error[y];
            Pmf::from_probs(w)
        })
        .collect::<Result<_>>()?;
    let s = JointPmf::from_class_conditionals(&s_y, &conds)?;
    let t = JointPmf::from_class_conditionals(&t_y, &conds)?;
    let predict: Vec<usize> = (0..2 * m).map(|z| if z % 2 == 0 { z / 2 } else { (z / 2 + 1) % m }).collect();
    Ok((s, t, LossTable::zero_one(&predict, m)?))
}

/// Every randomized suite.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Theorem1,
    Theorem1Subgaussian,
    Theorem1Subgamma,
    Theorem2,
    Theorem3,
    Corollary1X,
    Corollary1Y,
    Theorem4,
    Theorem5,
    Condshift,
    Openset,
    Pinsker,
    Sandwich,
    Triangle,
    DataProcessingKl,
    DataProcessingJs,
}

impl Suite {
    pub const BOUNDS: [Suite; 11] = [
        Suite::Theorem1,
        Suite::Theorem1Subgaussian,
        Suite::Theorem1Subgamma,
        Suite::Theorem2,
        Suite::Theorem3,
        Suite::Corollary1X,
        Suite::Corollary1Y,
        Suite::Theorem4,
        Suite::Theorem5,
        Suite::Condshift,
        Suite::Openset,
    ];

    pub const DIVERGENCES: [Suite; 5] = [
        Suite::Pinsker,
        Suite::Sandwich,
        Suite::Triangle,
        Suite::DataProcessingKl,
        Suite::DataProcessingJs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Theorem1 => "theorem1",
            Suite::Theorem1Subgaussian => "theorem1_subgaussian",
            Suite::Theorem1Subgamma => "theorem1_subgamma",
            Suite::Theorem2 => "theorem2",
            Suite::Theorem3 => "theorem3",
            Suite::Corollary1X => "corollary1_x",
            Suite::Corollary1Y => "corollary1_y",
            Suite::Theorem4 => "theorem4",
            Suite::Theorem5 => "theorem5",
            Suite::Condshift => "condshift",
            Suite::Openset => "openset",
            Suite::Pinsker => "pinsker",
            Suite::Sandwich => "sandwich",
            Suite::Triangle => "triangle",
            Suite::DataProcessingKl => "data_processing_kl",
            Suite::DataProcessingJs => "data_processing_js",
        }
    }

    fn id(self) -> u64 {
        Suite::BOUNDS
            .iter()
            .chain(&Suite::DIVERGENCES)
            .position(|s| *s == self)
            .expect("listed") as u64
    }

    /// Builds and evaluates trial `i`.
    pub fn instance(self, seed: u64, i: u64) -> Result<BoundReport> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream((self.id() << 40) | i);
        match self {
            Suite::Theorem1 | Suite::Theorem1Subgaussian | Suite::Theorem1Subgamma => {
                let (s, t) = random_pair(&mut rng);
                let l = random_classifier(&mut rng, s.nx(), s.ny());
                let g = l.range_g();
                let tail = match self {
                    Suite::Theorem1 => TailParams::Bounded { g },
                    Suite::Theorem1Subgaussian => TailParams::Subgaussian { sigma: g / 2.0 },
                    _ => TailParams::Subgamma { sigma: g * g / 4.0, a: 0.0 },
                };
                theorem1_upper(&s, &t, &l, &tail)
            }
            Suite::Theorem2 => {
                let (s, t) = random_pair(&mut rng);
                let l = random_classifier(&mut rng, s.nx(), s.ny());
                theorem2_band(&s, &t, &l)
            }
            Suite::Theorem3 => {
                let (s, t) = random_pair(&mut rng);
                theorem3_upper(&s, &t)
            }
            Suite::Corollary1X | Suite::Corollary1Y => {
                let (s, t) = random_pair(&mut rng);
                let l = random_classifier(&mut rng, s.nx(), s.ny());
                let tail = TailParams::Bounded { g: l.range_g() };
                let axis = if self == Suite::Corollary1X { SplitAxis::X } else { SplitAxis::Y };
                let base = theorem1_upper(&s, &t, &l, &tail)?;
                let r = corollary1_bounds(&s, &t, &l, axis, &tail)?;
                let looser = r.bound_hi >= base.bound_hi - VERDICT_TOL;
                Ok(r.with_check("not_tighter_than_joint", looser))
            }
            Suite::Theorem4 => {
                let nz = rng.random_range(2..=8);
                let a: f64 = rng.random_range(0.05..0.95);
                let b: f64 = rng.random_range(0.05..0.95);
                let (s, t) = matched_conditional_pair(&mut rng, nz, [a, 1.0 - a], [b, 1.0 - b]);
                let l = random_classifier(&mut rng, nz, 2);
                theorem4_band(&s, &t, &l)
            }
            Suite::Theorem5 => {
                let (s, t) = random_pair(&mut rng);
                let h: Vec<Vec<f64>> = (0..s.nx()).map(|_| dense_weights(&mut rng, s.ny())).collect();
                theorem5_pipeline(&s, &t, &h)
            }
            Suite::Condshift => {
                let (s, t) = random_pair(&mut rng);
                condshift_lower(&s, &t)
            }
            Suite::Openset => {
                let n = 10;
                let errs: Vec<f64> = (0..15).map(|_| rng.random::<f64>()).collect();
                let (s, t, l) = openset_fixture(n, 0.5, &errs)?;
                let r_s = expected_risk(&s, &l)?;
                let r_t = expected_risk(&t, &l)?;
                Ok(openset_band(r_s, 0.5, 0.0)?.with_lhs(r_t))
            }
            Suite::Pinsker => {
                let n = rng.random_range(2..=10);
                let p = random_pmf(&mut rng, n);
                let q = Pmf::from_weights(indexed(n), &dense_weights(&mut rng, n))?;
                let k = kl(&p, &q, LogBase::E)?;
                Ok(BoundReport::new("pinsker", tv(&p, &q)?, f64::NEG_INFINITY, (2.0 * k).sqrt(), format!("KL={k:.6e}")))
            }
            Suite::Sandwich => {
                let n = rng.random_range(2..=10);
                let (p, q) = (random_pmf(&mut rng, n), random_pmf(&mut rng, n));
                let h = tv_half(&p, &q)?;
                let j = js(&p, &q, LogBase::E)?;
                Ok(BoundReport::new("sandwich", j, 0.5 * h * h, h, format!("TV/2={h:.6e}")))
            }
            Suite::Triangle => {
                let n = rng.random_range(2..=10);
                let (p, q, r) = (random_pmf(&mut rng, n), random_pmf(&mut rng, n), random_pmf(&mut rng, n));
                let pq = js_distance(&p, &q, LogBase::E)?;
                let qr = js_distance(&q, &r, LogBase::E)?;
                let pr = js_distance(&p, &r, LogBase::E)?;
                Ok(BoundReport::new("triangle", pr, f64::NEG_INFINITY, pq + qr, format!("d_pq={pq:.6e} d_qr={qr:.6e}")))
            }
            Suite::DataProcessingKl | Suite::DataProcessingJs => {
                let n = rng.random_range(2..=10);
                let p = random_pmf(&mut rng, n);
                let q = if self == Suite::DataProcessingKl {
                    Pmf::from_weights(indexed(n), &dense_weights(&mut rng, n))?
                } else {
                    random_pmf(&mut rng, n)
                };
                let k = rng.random_range(1..=n);
                let map: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
                let f = |a: &Atom| Atom::new(map[a.id.parse::<usize>().expect("indexed atom")].to_string());
                let (pp, pq) = (pushforward(&p, f), pushforward(&q, f));
                let (before, after) = if self == Suite::DataProcessingKl {
                    (kl(&p, &q, LogBase::E)?, kl(&pp, &pq, LogBase::E)?)
                } else {
                    (js(&p, &q, LogBase::E)?, js(&pp, &pq, LogBase::E)?)
                };
                Ok(BoundReport::new(self.name(), after, f64::NEG_INFINITY, before, format!("images={k}")))
            }
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::BOUNDS
            .iter()
            .chain(&Suite::DIVERGENCES)
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::OutOfRange(format!("unknown suite `{s}`")))
    }
}

/// Every report of one suite run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteOutcome {
    pub suite: Suite,
    pub seed: u64,
    pub reports: Vec<BoundReport>,
}

impl SuiteOutcome {
    pub fn trials(&self) -> usize {
        self.reports.len()
    }

    pub fn violations(&self) -> usize {
        self.reports.iter().filter(|r| !r.all_hold()).count()
    }

    /// Smallest slack on either side, negative when violated.
    pub fn worst_slack(&self) -> f64 {
        self.reports
            .iter()
            .map(|r| r.slack_lo.min(r.slack_hi))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Runs `trials` instances of `suite` in parallel.
pub fn run_suite(suite: Suite, trials: usize, seed: u64) -> Result<SuiteOutcome> {
    let reports = (0..trials as u64)
        .into_par_iter()
        .map(|i| suite.instance(seed, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(SuiteOutcome { suite, seed, reports })
}
