//! Fixtures shared by the criterion benches.

use jsda_core::synth::{discretize, make_scenario, sample_seeded, Domain, SampleBatch, ScenarioKind, ScenarioParams};
use jsda_core::suites::random_pmf;
use jsda_core::{JointPmf, Pmf};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Two random pmfs on `n` atoms, some cells empty.
pub fn pmf_pair(n: usize, seed: u64) -> (Pmf, Pmf) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (random_pmf(&mut rng, n), random_pmf(&mut rng, n))
}

/// Source and target of the default conditional-shift scenario on a
/// `g x g` grid.
pub fn grid_pair(g: usize) -> (JointPmf, JointPmf) {
    let sc = make_scenario(ScenarioKind::ConditionalShift, &ScenarioParams::default()).expect("default scenario");
    (
        discretize(&sc, Domain::Source, g).expect("grid"),
        discretize(&sc, Domain::Target, g).expect("grid"),
    )
}

/// A source and a target batch of size `n` from the default conditional
/// shift scenario.
pub fn batches(n: usize) -> (SampleBatch, SampleBatch) {
    let sc = make_scenario(ScenarioKind::ConditionalShift, &ScenarioParams::default()).expect("default scenario");
    (
        sample_seeded(&sc, Domain::Source, n, 0, 0).expect("sample"),
        sample_seeded(&sc, Domain::Target, n, 0, 0).expect("sample"),
    )
}
