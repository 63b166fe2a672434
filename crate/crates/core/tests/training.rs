use std::f64::consts::LN_2;

use jsda_core::labelshift::WeightVector;
use jsda_core::synth::{make_scenario, sample_seeded, Domain, SampleBatch, ScenarioKind, ScenarioParams};
use jsda_core::trainer::{
    composite_loss, pseudo_label_step, run_training, train_step, CentroidState, LossWeights, ModelParams, TrainConfig,
};

fn weights<'a>(alpha: &'a [f64], s_hat: &'a [f64], lam0: f64, lam1: f64) -> LossWeights<'a> {
    LossWeights {
        alpha,
        s_hat,
        t_pred: s_hat,
        lam0,
        lam1,
        momentum: 0.7,
    }
}

fn separated() -> (SampleBatch, SampleBatch) {
    let p = ScenarioParams {
        radius: 6.0,
        sigma: 0.5,
        ..Default::default()
    };
    let sc = make_scenario(ScenarioKind::LabelShift, &p).unwrap();
    (
        sample_seeded(&sc, Domain::Source, 200, 1, 0).unwrap(),
        sample_seeded(&sc, Domain::Target, 200, 1, 0).unwrap(),
    )
}

#[test]
fn identical_domains_with_blind_discriminator() {
    let (src, _) = separated();
    let mut m = ModelParams::random(6, 4, 2, 1.0, 2);
    for k in m.d_range() {
        m.theta[k] = 0.0;
    }
    let st = CentroidState::new(2, 4);
    let (_, b) = composite_loss(&m, &src, &src, &st, &weights(&[1.0, 1.0], &[0.5, 0.5], 1.0, 2.0)).unwrap();
    assert!(b.ii.abs() < 1e-12);
    assert!((b.bce - 2.0 * LN_2).abs() < 1e-12, "{}", b.bce);
}

#[test]
fn zero_multipliers_leave_weighted_cross_entropy() {
    let (src, tgt) = separated();
    let m = ModelParams::random(6, 4, 2, 1.0, 3);
    let st = CentroidState::new(2, 4);
    let (total, b) = composite_loss(&m, &src, &tgt, &st, &weights(&[1.2, 0.8], &[0.5, 0.5], 0.0, 0.0)).unwrap();
    assert!((total - b.i).abs() < 1e-12);
}

#[test]
fn zero_learning_rate_is_a_no_op() {
    let (src, tgt) = separated();
    let m = ModelParams::random(6, 4, 2, 1.0, 4);
    let st = CentroidState::new(2, 4);
    let (next, _, _) = train_step(&m, &src, &tgt, &st, &weights(&[1.0, 1.0], &[0.5, 0.5], 0.5, 1.0), 0.0, true).unwrap();
    assert_eq!(next.theta, m.theta);
}

#[test]
fn one_step_lowers_the_classification_loss() {
    let (src, tgt) = separated();
    let m = ModelParams::random(6, 4, 2, 1.0, 5);
    let st = CentroidState::new(2, 4);
    let w = weights(&[1.0, 1.0], &[0.5, 0.5], 0.0, 0.0);
    let (before, _) = composite_loss(&m, &src, &tgt, &st, &w).unwrap();
    let (next, st2, _) = train_step(&m, &src, &tgt, &st, &w, 0.05, true).unwrap();
    let (after, _) = composite_loss(&next, &src, &tgt, &st2, &w).unwrap();
    assert!(after < before, "{before} -> {after}");
}

#[test]
fn separated_clusters_are_pseudo_labelled_perfectly() {
    let (src, tgt) = separated();
    let mut m = ModelParams::random(6, 4, 2, 1.0, 6);
    let mut st = CentroidState::new(2, 4);
    let w = weights(&[1.0, 1.0], &[0.5, 0.5], 0.0, 0.0);
    for _ in 0..300 {
        let (n, s, _) = train_step(&m, &src, &tgt, &st, &w, 0.2, false).unwrap();
        m = n;
        st = s;
    }
    let pl = pseudo_label_step(&m, &tgt.xs, &src).unwrap();
    assert_eq!(pl.labels, tgt.ys);
    let truth = WeightVector::ratio(&src_freq(&src), &src_freq(&tgt)).unwrap();
    assert!(pl.alpha.weights.linf_distance(&truth) < 1e-12);
}

fn src_freq(b: &SampleBatch) -> jsda_core::Pmf {
    jsda_core::Pmf::from_probs(b.label_frequencies(2)).unwrap()
}

#[test]
fn matched_conditionals_give_close_weight_estimates() {
    let sc = make_scenario(ScenarioKind::LabelShift, &ScenarioParams::default()).unwrap();
    let cfg = TrainConfig {
        principles: "I".parse().unwrap(),
        epochs: 10,
        ..Default::default()
    };
    let trace = run_training(&sc, &cfg).unwrap();
    let truth = WeightVector::ratio(&sc.label_marginal(Domain::Source).unwrap(), &sc.label_marginal(Domain::Target).unwrap()).unwrap();
    let est = WeightVector {
        alpha: trace.rows.last().unwrap().alpha_hat.clone(),
    };
    assert!(est.linf_distance(&truth) < 0.1, "{:?} vs {:?}", est.alpha, truth.alpha);
}

#[test]
fn trace_has_one_row_per_epoch() {
    let sc = make_scenario(ScenarioKind::ConditionalShift, &ScenarioParams::default()).unwrap();
    let cfg = TrainConfig {
        epochs: 3,
        n_source: 300,
        n_target: 300,
        ..Default::default()
    };
    let trace = run_training(&sc, &cfg).unwrap();
    assert_eq!(trace.rows.len(), 3);
    assert_eq!(trace.initial.epoch, 0);
    for (i, r) in trace.rows.iter().enumerate() {
        assert_eq!(r.epoch, i + 1);
        assert!((0.0..=1.0).contains(&r.target_accuracy));
        assert!(r.loss_i.is_finite() && r.loss_ii.is_finite() && r.loss_iii.is_finite());
        assert_eq!(r.alpha_hat.len(), 2);
    }
    assert!(trace.rows[0].lambda0 < trace.rows[2].lambda0);
}
