use jsda_core::labelshift::{bbsl_weights, confusion_matrix, reweighted_risk, ConfusionMatrix, SolveStatus, WeightVector};
use jsda_core::synth::{make_scenario, ScenarioKind, ScenarioParams};
use jsda_core::bounds::reweighted_convergence_check;
use jsda_core::Pmf;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn confusion_matrix_matches_brute_force_counts() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let k = 3;
    let labels: Vec<usize> = (0..500).map(|_| rng.random_range(0..k)).collect();
    let preds: Vec<usize> = (0..500).map(|_| rng.random_range(0..k)).collect();
    let cm = confusion_matrix(&preds, &labels, k).unwrap();
    for i in 0..k {
        for j in 0..k {
            let n = preds.iter().zip(&labels).filter(|(p, y)| **p == i && **y == j).count();
            assert!((cm.c[i][j] - n as f64 / 500.0).abs() < 1e-15);
        }
    }
}

#[test]
fn exact_predictions_recover_the_weights() {
    let cm = ConfusionMatrix::new(vec![
        vec![0.35, 0.05, 0.02],
        vec![0.04, 0.25, 0.03],
        vec![0.01, 0.05, 0.20],
    ])
    .unwrap();
    let s = cm.label_marginal();
    let mut alpha = vec![1.3, 0.5, 1.0];
    let mass: f64 = alpha.iter().zip(&s).map(|(a, s)| a * s).sum();
    alpha.iter_mut().for_each(|a| *a /= mass);
    let t: Vec<f64> = (0..3).map(|i| (0..3).map(|j| cm.c[i][j] * alpha[j]).sum()).collect();
    let e = bbsl_weights(&cm, &Pmf::from_probs(t).unwrap()).unwrap();
    assert_eq!(e.status, SolveStatus::Exact);
    assert!(!e.clipped);
    assert!(e.weights.linf_distance(&WeightVector { alpha }) < 1e-12);
}

#[test]
fn reweighting_with_true_ratio_is_unbiased_for_a_fixed_sample() {
    let w = WeightVector::ratio(&Pmf::from_probs(vec![0.5, 0.5]).unwrap(), &Pmf::from_probs(vec![0.9, 0.1]).unwrap()).unwrap();
    let labels = [0, 1, 0, 1];
    let losses = [1.0, 0.0, 1.0, 0.0];
    assert!((reweighted_risk(&labels, &losses, &w).unwrap() - 0.9).abs() < 1e-12);
}

#[test]
fn unit_weights_without_shift_still_converge() {
    let p = ScenarioParams {
        target_labels: Some(vec![0.5, 0.5]),
        source_labels: Some(vec![0.5, 0.5]),
        ..Default::default()
    };
    let sc = make_scenario(ScenarioKind::LabelShift, &p).unwrap();
    let ones = WeightVector::ones(2);
    let t = reweighted_convergence_check(&sc, &[100, 10_000], 40, 1, Some(&ones)).unwrap();
    assert!(t.rows[1].mean < t.rows[0].mean);
}

#[test]
fn gap_shrinks_like_one_over_root_n() {
    let sc = make_scenario(ScenarioKind::LabelShift, &ScenarioParams::default()).unwrap();
    let t = reweighted_convergence_check(&sc, &[400, 1600], 200, 3, None).unwrap();
    let ratio = t.rows[0].median / t.rows[1].median;
    assert!((2.0 / 1.5..=2.0 * 1.5).contains(&ratio), "median ratio {ratio}");
}
