use std::sync::{Arc, LazyLock};

use levykernel::difference::{
    check_half_ball, check_key, check_m_estimate, diff_pd, diff_values, nu_tilde, seed_stable, DiffLemma,
    ReflectionFrame, LEMMA_TIMES,
};
use levykernel::dirichlet::{BallSpec, Domain, DomainSpec, KilledProcess, PathConfig};
use levykernel::renewal::RenewalFunction;
use levykernel::symbols::{catalog, ModelSpec, SymbolEvaluator};
use proptest::prelude::*;

fn ball_process(d: usize, radius: f64, n: usize, seed: u64) -> KilledProcess {
    let ev = Arc::new(SymbolEvaluator::new(ModelSpec::stable(1.0, d)).unwrap());
    let cfg = PathConfig::default().with_paths(n).with_seed(seed);
    KilledProcess::new(ev, Domain::new(DomainSpec::centered_ball(d, radius)).unwrap(), cfg, 1.0).unwrap()
}

#[test]
fn difference_vanishes_on_the_wall() {
    let proc_ = ball_process(2, 1.0, 2000, 1);
    let bundle = proc_.bundle(&[0.3, 0.1]).unwrap();
    let vals = diff_values(&proc_, &bundle, 0.5, &[0.0, 0.4]).unwrap();
    assert!(vals.iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn difference_is_odd_under_reflection() {
    let proc_ = ball_process(1, 1.0, 5000, 2);
    let bundle = proc_.simulator().bundle(&[0.4], 0.3).unwrap();
    let a = diff_values(&proc_, &bundle, 0.3, &[0.2]).unwrap();
    let b = diff_values(&proc_, &bundle.reflected(), 0.3, &[0.2]).unwrap();
    assert!(a.iter().zip(&b).all(|(u, w)| (u + w).abs() < 1e-12));
    let est = diff_pd(&proc_, 0.3, &[0.4], &[0.2]).unwrap();
    assert!((est.mean - a.iter().sum::<f64>() / a.len() as f64).abs() < 1e-12);
}

#[test]
fn key_sandwich_on_the_interval() {
    let proc_ = ball_process(1, 1.0, 20_000, 3);
    let rep = check_key(&proc_, &[0.05, 0.3, 1.0], &[vec![0.1], vec![0.7]], &[vec![0.2], vec![0.9]], 3.0).unwrap();
    assert!(rep.all_hold, "{:?}", rep.nodes);
    assert!(check_key(&proc_, &[0.3], &[vec![-0.1]], &[vec![0.2]], 3.0).is_err());
}

#[test]
fn half_ball_ratios_are_finite() {
    let proc_ = ball_process(2, 1.0, 10_000, 4);
    let ev = proc_.symbols().clone();
    let v = RenewalFunction::build(&ev).unwrap();
    let reps = check_half_ball(&proc_, &v, &[DiffLemma::NearPole, DiffLemma::FarPole], &[1.0], &[0.05, 0.3]).unwrap();
    assert_eq!(reps.len(), 2);
    for r in &reps {
        assert!(r.sup_ratio.is_finite() && r.sup_ratio > 0.0, "{:?}", r.lemma);
        assert!(seed_stable(r, r, 0.0));
    }
    assert!(check_half_ball(&proc_, &v, &[DiffLemma::Domain], &[1.0], &[0.3]).is_err());
}

#[test]
fn general_domain_estimate() {
    let proc_ = ball_process(2, 1.0, 5000, 5);
    let v = RenewalFunction::build(proc_.symbols()).unwrap();
    let lens = Domain::new(DomainSpec::symmetrized(vec![BallSpec { center: vec![0.4, 0.3], radius: 0.7 }])).unwrap();
    let on_lens = proc_.with_domain(lens).unwrap();
    let rep = check_m_estimate(&on_lens, &v, &LEMMA_TIMES, &[vec![0.3, 0.3], vec![-0.5, 0.4]]).unwrap();
    assert!(rep.sup_ratio.is_finite());
    assert!(rep.nodes.iter().all(|n| n.r > 0.0 && n.r <= 1.0));
    // not symmetric about the first axis
    let shifted = Domain::new(DomainSpec::Ball { center: vec![0.2, 0.0], radius: 1.0 }).unwrap();
    assert!(check_m_estimate(&proc_.with_domain(shifted).unwrap(), &v, &[0.3], &[vec![0.1, 0.0]]).is_err());
}

static MODELS: LazyLock<Vec<SymbolEvaluator>> =
    LazyLock::new(|| catalog(2).into_iter().map(|s| SymbolEvaluator::new(s).unwrap()).collect());

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn jump_kernel_difference_is_a_fraction_of_the_kernel(
        i in 0usize..4, x1 in 0.001f64..2.0, y1 in 0.001f64..2.0, x2 in -2.0f64..2.0, y2 in -2.0f64..2.0,
    ) {
        let ev = &MODELS[i];
        let (x, y) = ([x1, x2], [y1, y2]);
        let frame = ReflectionFrame::new(2);
        prop_assume!(frame.is_positive(&x) && frame.is_positive(&y));
        let r = ((x1 - y1).powi(2) + (x2 - y2).powi(2)).sqrt();
        prop_assume!(r > 1e-6);
        let nt = nu_tilde(ev, &x, &y);
        prop_assert!(nt >= 0.0);
        prop_assert!(nt <= ev.nu(r));
    }
}
