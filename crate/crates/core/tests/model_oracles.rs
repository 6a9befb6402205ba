mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use serde::Deserialize;
use sphp::model::{basis_cumulative, compensator, compensator_between, impact_phi, intensity};
use sphp::seeds;
use sphp::{BasisSet, ModelKind, ModelParams};

#[derive(Deserialize)]
struct Triple {
    x: f64,
    center: f64,
    sigma: f64,
    value: f64,
}

#[test]
fn basis_cumulative_matches_high_precision_values() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/basis_cumulative.json")).unwrap();
    let rows: Vec<Triple> = serde_json::from_str(&text).unwrap();
    assert_eq!(rows.len(), 100);
    for r in rows {
        let basis = BasisSet::new(vec![r.center], r.sigma).unwrap();
        let got = basis_cumulative(r.x, &basis, 1).unwrap();
        let err = (got - r.value).abs();
        assert!(err <= 1e-8 * r.value.abs() || err < 1e-300, "x={} c={} σ={}: {got} vs {}", r.x, r.center, r.sigma, r.value);
    }
}

#[test]
fn basis_index_is_one_based() {
    let basis = BasisSet::new(vec![1.0, 2.0], 0.5).unwrap();
    assert!(basis_cumulative(1.0, &basis, 0).is_err());
    assert!(basis_cumulative(1.0, &basis, 3).is_err());
    assert_eq!(basis_cumulative(3.0, &basis, 2).unwrap(), basis.cumulative(1, 3.0));
}

fn sum_params(a: &ModelParams, b: &ModelParams) -> ModelParams {
    let add = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p + q).collect::<Vec<_>>();
    let mut s = a.clone();
    s.mu_ti = add(&a.mu_ti, &b.mu_ti);
    s.mu_tv = add(&a.mu_tv, &b.mu_tv);
    s.a = add(&a.a, &b.a);
    for (k, v) in s.mu_subject.iter_mut() {
        *v += b.mu_subject[k];
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn intensity_and_compensator_are_linear_in_parameters(seed in any::<u64>(), k in 0usize..4) {
        let mut rng = seeds::rng(seed, "superposition", 0);
        let kind = KINDS[k];
        let data = random_dataset(&mut rng, 2, 10, 12.0);
        let basis = random_basis(&mut rng);
        let p1 = random_params(&mut rng, kind, &basis, data.len());
        let p2 = random_params(&mut rng, kind, &basis, data.len());
        let ps = sum_params(&p1, &p2);
        for e in data.entries() {
            let (s, st, tr) = (&e.sequence, &e.static_features, &e.track);
            let t = rng.random_range(0.0..s.horizon());
            let l = |p: &ModelParams| intensity(t, s, st, tr, p, &basis).unwrap();
            prop_assert!(close(l(&ps), l(&p1) + l(&p2), 1e-12));
            let c = |p: &ModelParams| compensator(s, st, tr, p, &basis, s.horizon()).unwrap();
            prop_assert!(close(c(&ps), c(&p1) + c(&p2), 1e-12));
        }
    }

    #[test]
    fn kinds_agree_when_extra_blocks_vanish(seed in any::<u64>()) {
        let mut rng = seeds::rng(seed, "kinds", 0);
        let data = random_dataset(&mut rng, 2, 10, 12.0);
        let basis = random_basis(&mut rng);
        let mut tv = random_params(&mut rng, ModelKind::TvSphp, &basis, 0);
        tv.mu_tv.iter_mut().for_each(|v| *v = 0.0);
        let ti = ModelParams { kind: ModelKind::TiSphp, ..tv.clone() };
        let mut pois = ModelParams { kind: ModelKind::Poisson, ..tv.clone() };
        pois.mu_tv = vec![0.0; 8];
        let mut no_impact = ti.clone();
        no_impact.a.iter_mut().for_each(|v| *v = 0.0);
        for e in data.entries() {
            let (s, st, tr) = (&e.sequence, &e.static_features, &e.track);
            let t = rng.random_range(0.0..s.horizon());
            let l = |p: &ModelParams| intensity(t, s, st, tr, p, &basis).unwrap();
            prop_assert_eq!(l(&tv), l(&ti));
            // Poisson ignores `a` entirely, so it matches the kernel-free model
            prop_assert!(close(l(&pois), l(&no_impact), 1e-14));
        }
    }

    #[test]
    fn compensator_is_additive_over_intervals(seed in any::<u64>(), k in 0usize..4) {
        let mut rng = seeds::rng(seed, "additivity", 0);
        let data = random_dataset(&mut rng, 1, 12, 15.0);
        let model = random_model(&mut rng, KINDS[k], data.len());
        let e = &data.entries()[0];
        let (s, st, tr) = (&e.sequence, &e.static_features, &e.track);
        let mut cut = [rng.random_range(0.0..15.0), rng.random_range(0.0..15.0)];
        cut.sort_by(f64::total_cmp);
        let k = |a, b| compensator_between(s, st, tr, &model.params, &model.basis, a, b).unwrap();
        let whole = k(0.0, 15.0);
        prop_assert!(close(whole, k(0.0, cut[0]) + k(cut[0], cut[1]) + k(cut[1], 15.0), 1e-10));
        prop_assert!(k(cut[0], cut[1]) >= 0.0);
    }

    #[test]
    fn compensator_derivative_is_the_intensity(seed in any::<u64>(), k in 0usize..4) {
        let mut rng = seeds::rng(seed, "derivative", 0);
        let data = random_dataset(&mut rng, 1, 12, 15.0);
        let model = random_model(&mut rng, KINDS[k], data.len());
        let e = &data.entries()[0];
        let (s, st, tr) = (&e.sequence, &e.static_features, &e.track);
        let t = rng.random_range(0.5..14.5);
        let h = 1e-5;
        // skip points where λ jumps inside the stencil
        let jumps = tr.knots().iter().copied()
            .chain(s.events().iter().flat_map(|&x| [x, x + model.basis.support()]));
        let smooth = jumps.into_iter().all(|j| (j - t).abs() > 2.0 * h);
        prop_assume!(smooth);
        let k = |b| compensator(s, st, tr, &model.params, &model.basis, b).unwrap();
        let fd = (k(t + h) - k(t - h)) / (2.0 * h);
        let lam = intensity(t, s, st, tr, &model.params, &model.basis).unwrap();
        prop_assert!((fd - lam).abs() <= 1e-6 * lam.max(1.0), "fd {} vs λ {}", fd, lam);
    }

    #[test]
    fn impact_vanishes_beyond_support(seed in any::<u64>()) {
        let mut rng = seeds::rng(seed, "support", 0);
        let model = random_model(&mut rng, ModelKind::TiSphp, 0);
        let sup = model.basis.support();
        prop_assert_eq!(impact_phi(sup + rng.random_range(1e-9..100.0), &model.basis, &model.params.a).unwrap(), 0.0);
        prop_assert!(impact_phi(rng.random_range(0.0..sup), &model.basis, &model.params.a).unwrap() >= 0.0);
    }
}

#[test]
fn branching_ratio_sums_truncated_masses() {
    let basis = BasisSet::with_support(vec![0.0, 2.0], 1.0, 72.0).unwrap();
    let mut p = ModelParams::zeros(ModelKind::TiSphp, 2);
    p.a = vec![1.0, 0.5];
    // √(π/2) + ½·√(2π)·Φ(2), at 40 digits
    assert!(close(p.branching_ratio(&basis), 2.478_115_212_634_554_5, 1e-14));
    p.kind = ModelKind::Poisson;
    assert_eq!(p.branching_ratio(&basis), 0.0);
}
