//! Exact Jensen-Shannon tools for domain adaptation on finite supports.
//!
//! The crate is organised bottom-up:
//!
//! * [`dist`] holds exact probability tables and risk/entropy functionals.
//! * [`divergence`] computes KL, JS, TV, Rényi-2 and the threshold H-divergence.
//! * [`bounds`] evaluates every target-risk bound and reports whether it holds.
//! * [`cases`] rebuilds the two textbook counterexamples.
//! * [`labelshift`] estimates label-shift weights from a confusion matrix.
//! * [`synth`] generates Gaussian shift scenarios, samples and grids.
//! * [`trainer`] runs the three-principle adaptation loop on small networks.
//! * [`suites`] draws the randomized instances the property checks run on.

pub mod bounds;
pub mod cases;
pub mod dist;
pub mod divergence;
pub mod error;
pub mod labelshift;
pub mod serde_ext;
pub mod suites;
pub mod synth;
pub mod trainer;

pub use dist::{
    entropy_stats, expected_risk, mixture, Atom, CondAxis, Conditional, Distribution, EntropyStats, JointPmf,
    LogBase, LossTable, Pmf,
};
pub use divergence::{divergence, h_divergence_1d, js, js_distance, kl, pushforward, tv, DivergenceKind, DivergenceValue};
pub use error::{Error, Result};
