use std::f64::consts::LN_2;

use jsda_core::bounds::{condshift_lower, openset_band, theorem1_bound, theorem2_band_from, TailParams};
use jsda_core::dist::entropy_nats;
use jsda_core::divergence::{js_nats, kl_nats, tv_sum};
use jsda_core::labelshift::{bbsl_weights, ConfusionMatrix, SolveStatus};
use jsda_core::{
    entropy_stats, expected_risk, js, kl, mixture, CondAxis, Distribution, JointPmf, LogBase, LossTable, Pmf,
};
use proptest::prelude::*;

fn weights(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![1 => Just(0.0), 4 => 0.001f64..1.0], n)
        .prop_filter("some mass", |w| w.iter().sum::<f64>() > 0.0)
}

fn pmf_pair() -> impl Strategy<Value = (Pmf, Pmf)> {
    (2usize..8).prop_flat_map(|n| (weights(n), weights(n))).prop_map(|(a, b)| {
        let n = a.len();
        let ids = |i: usize| jsda_core::Atom::new(i.to_string());
        (
            Pmf::from_weights((0..n).map(ids).collect(), &a).unwrap(),
            Pmf::from_weights((0..n).map(ids).collect(), &b).unwrap(),
        )
    })
}

fn joint() -> impl Strategy<Value = JointPmf> {
    (1usize..6, 2usize..5).prop_flat_map(|(nx, ny)| {
        weights(nx * ny).prop_map(move |w| {
            let atoms = |n: usize| (0..n).map(|i| jsda_core::Atom::new(i.to_string())).collect();
            JointPmf::from_weights(atoms(nx), atoms(ny), &w).unwrap()
        })
    })
}

fn joint_pair() -> impl Strategy<Value = (JointPmf, JointPmf)> {
    (1usize..6, 2usize..5).prop_flat_map(|(nx, ny)| {
        (weights(nx * ny), weights(nx * ny)).prop_map(move |(a, b)| {
            let atoms = |n: usize| (0..n).map(|i| jsda_core::Atom::new(i.to_string())).collect::<Vec<_>>();
            (
                JointPmf::from_weights(atoms(nx), atoms(ny), &a).unwrap(),
                JointPmf::from_weights(atoms(nx), atoms(ny), &b).unwrap(),
            )
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn marginal_times_conditional_rebuilds_joint(j in joint()) {
        let px = j.marginal_x();
        for c in j.conditionals(CondAxis::YGivenX).unwrap() {
            prop_assert!((c.weight - px.probs()[c.index]).abs() < 1e-12);
            for (k, p) in c.pmf.probs().iter().enumerate() {
                prop_assert!((c.weight * p - j.get(c.index, k)).abs() < 1e-12);
            }
        }
        let (mx, my) = j.marginals();
        prop_assert!((mx.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!((my.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn entropy_chain_rule(j in joint()) {
        let h_xy = entropy_nats(j.mass());
        let h_x = entropy_nats(j.marginal_x().probs());
        let e = entropy_stats(&j, LogBase::E);
        prop_assert!((h_xy - h_x - e.h_y_given_x).abs() < 1e-10);
        prop_assert!(e.h_y_given_x <= e.h_y + 1e-12);
        prop_assert!(e.h_y_given_x >= -1e-15);
        let bits = entropy_stats(&j, LogBase::Two);
        prop_assert!((bits.h_y * LN_2 - e.h_y).abs() < 1e-12);
    }

    #[test]
    fn risk_is_linear_in_the_joint_and_within_loss_range((s, t) in joint_pair(), seed in any::<u64>()) {
        let (nx, ny) = (s.nx(), s.ny());
        let vals: Vec<f64> = (0..nx * ny).map(|k| ((seed >> (k % 60)) & 7) as f64 / 7.0).collect();
        let l = LossTable::from_flat(nx, ny, vals.clone()).unwrap();
        let m = mixture(&s, &t).unwrap();
        let (rs, rt, rm) = (expected_risk(&s, &l).unwrap(), expected_risk(&t, &l).unwrap(), expected_risk(&m, &l).unwrap());
        prop_assert!((rm - 0.5 * (rs + rt)).abs() < 1e-12);
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(rs >= lo - 1e-12 && rs <= hi + 1e-12);
    }

    #[test]
    fn js_is_symmetric_bounded_and_zero_on_the_diagonal((p, q) in pmf_pair()) {
        let a = js(&p, &q, LogBase::E).unwrap();
        let b = js(&q, &p, LogBase::E).unwrap();
        prop_assert!((a - b).abs() < 1e-14);
        prop_assert!((0.0..=LN_2 + 1e-15).contains(&a));
        prop_assert!(js(&p, &p, LogBase::E).unwrap().abs() < 1e-15);
        let bits = js(&p, &q, LogBase::Two).unwrap();
        prop_assert!(bits <= 1.0 + 1e-15);
    }

    #[test]
    fn js_matches_its_definition_through_the_mixture((p, q) in pmf_pair()) {
        let m = p.mixture(&q).unwrap();
        let want = 0.5 * (kl(&p, &m, LogBase::E).unwrap() + kl(&q, &m, LogBase::E).unwrap());
        prop_assert!((js(&p, &q, LogBase::E).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn kl_is_nonnegative_and_infinite_off_support((p, q) in pmf_pair()) {
        let v = kl_nats(p.probs(), q.probs());
        prop_assert!(v >= -1e-15);
        let escapes = p.probs().iter().zip(q.probs()).any(|(a, b)| *a > 0.0 && *b == 0.0);
        prop_assert_eq!(v.is_infinite(), escapes);
    }

    #[test]
    fn sandwich_and_pinsker_hold((p, q) in pmf_pair()) {
        let (a, b) = (p.probs(), q.probs());
        let half_l1 = 0.5 * tv_sum(a, b);
        let j = js_nats(a, b);
        prop_assert!(0.5 * half_l1 * half_l1 <= j + 1e-12);
        prop_assert!(j <= half_l1 * LN_2 + 1e-12);
        let k = kl_nats(a, b);
        prop_assert!(2.0 * half_l1 * half_l1 <= k + 1e-12);
    }

    #[test]
    fn clipped_weights_stay_normalized(c in weights(4), t in weights(2)) {
        let total: f64 = c.iter().sum();
        let cm = ConfusionMatrix::new(vec![
            vec![c[0] / total, c[1] / total],
            vec![c[2] / total, c[3] / total],
        ]).unwrap();
        let tp = Pmf::from_probs({
            let s: f64 = t.iter().sum();
            t.iter().map(|v| v / s).collect()
        }).unwrap();
        let e = bbsl_weights(&cm, &tp).unwrap();
        prop_assert!(e.weights.alpha.iter().all(|a| *a >= 0.0 && a.is_finite()));
        if e.clipped || e.status == SolveStatus::LeastSquares {
            let s = cm.label_marginal();
            let mass: f64 = e.weights.alpha.iter().zip(&s).map(|(a, s)| a * s).sum();
            prop_assert!((mass - 1.0).abs() < 1e-9);
        }
        if e.status == SolveStatus::Fallback {
            prop_assert_eq!(&e.weights.alpha, &vec![1.0, 1.0]);
        }
    }

    #[test]
    fn tail_bounds_grow_with_js(r in 0.0f64..1.0, a in 0.0f64..0.5, b in 0.0f64..0.5, g in 0.1f64..4.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        for tail in [
            TailParams::Bounded { g },
            TailParams::Subgaussian { sigma: g / 2.0 },
            TailParams::Subgamma { sigma: g, a: 0.3 },
        ] {
            prop_assert!(theorem1_bound(r, lo, &tail) <= theorem1_bound(r, hi, &tail) + 1e-15);
            prop_assert!(theorem1_bound(r, lo, &tail) >= r);
        }
    }

    #[test]
    fn bands_contain_the_source_risk(r in 0.0f64..1.0, j in 0.0f64..LN_2, alpha in 0.0f64..=1.0, d in 0.0f64..0.5) {
        let b = theorem2_band_from(r, j);
        prop_assert!(b.bound_lo <= r && r <= b.bound_hi);
        let o = openset_band(r, alpha, d).unwrap();
        prop_assert!(o.bound_lo <= r && r <= o.bound_hi);
    }

    #[test]
    fn conditional_shift_lower_bound_holds((s, t) in joint_pair()) {
        let r = condshift_lower(&s, &t).unwrap();
        prop_assert!(r.bound_lo >= 0.0);
        prop_assert!(r.holds, "{}", r);
    }
}
