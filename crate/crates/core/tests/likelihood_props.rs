mod common;

use common::*;
use proptest::prelude::*;
use sphp::likelihood::{grad_nll, nll, objective, Design, ParamLayout, TvIntegral, LOG_FLOOR};
use sphp::seeds;
use sphp::{Dataset, EventSequence, FeatureTrack, HawkesModel, ModelKind, ModelParams, SequenceEntry};

fn mix(a: &ModelParams, b: &ModelParams, w: f64) -> ModelParams {
    let lerp = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| (1.0 - w) * p + w * q).collect::<Vec<_>>();
    let mut m = a.clone();
    m.mu_ti = lerp(&a.mu_ti, &b.mu_ti);
    m.mu_tv = lerp(&a.mu_tv, &b.mu_tv);
    m.a = lerp(&a.a, &b.a);
    for (k, v) in m.mu_subject.iter_mut() {
        *v = (1.0 - w) * *v + w * b.mu_subject[k];
    }
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn nll_is_convex_along_segments(seed in any::<u64>(), k in 0usize..4, w in 0.0f64..1.0) {
        let mut rng = seeds::rng(seed, "convexity", 0);
        let data = random_dataset(&mut rng, 3, 8, 10.0);
        let basis = random_basis(&mut rng);
        let kind = KINDS[k];
        let (p, q) = (random_params(&mut rng, kind, &basis, data.len()), random_params(&mut rng, kind, &basis, data.len()));
        let f = |x: ModelParams| nll(&data, &HawkesModel::new(x, basis.clone()).unwrap()).unwrap();
        let (fp, fq, fm) = (f(p.clone()), f(q.clone()), f(mix(&p, &q, w)));
        prop_assert!(fm <= (1.0 - w) * fp + w * fq + 1e-9 * (fp.abs() + fq.abs()));
    }

    #[test]
    fn design_route_matches_direct_route(seed in any::<u64>(), k in 0usize..4) {
        let mut rng = seeds::rng(seed, "design", 0);
        let data = random_dataset(&mut rng, 3, 8, 10.0);
        let model = random_model(&mut rng, KINDS[k], data.len());
        let layout = ParamLayout::for_params(&model.params);
        let design = Design::build(&data, &model.basis, model.kind(), &layout).unwrap();
        let theta = layout.flatten(&model.params);
        let direct = nll(&data, &model).unwrap();
        prop_assert!(close(design.nll(&theta).unwrap().value, direct, 1e-11));
        let g = design.grad(&theta, TvIntegral::Exact).unwrap();
        prop_assert_eq!(g, grad_nll(&data, &model).unwrap());
    }

    #[test]
    fn ignored_blocks_have_zero_gradient(seed in any::<u64>(), k in 0usize..4) {
        let mut rng = seeds::rng(seed, "inactive", 0);
        let data = random_dataset(&mut rng, 3, 8, 10.0);
        let kind = KINDS[k];
        let model = random_model(&mut rng, kind, data.len());
        let layout = ParamLayout::for_params(&model.params);
        let g = grad_nll(&data, &model).unwrap();
        for (gi, on) in g.iter().zip(layout.active(kind)) {
            if !on {
                prop_assert_eq!(*gi, 0.0);
            }
        }
    }

    #[test]
    fn objective_adds_the_active_l1_norm(seed in any::<u64>(), k in 0usize..4, gamma in 0.0f64..2.0) {
        let mut rng = seeds::rng(seed, "objective", 0);
        let data = random_dataset(&mut rng, 2, 6, 10.0);
        let model = random_model(&mut rng, KINDS[k], data.len());
        let want = nll(&data, &model).unwrap() + gamma * model.params.masked().l1_norm();
        prop_assert!(close(objective(&data, &model, gamma).unwrap(), want, 1e-13));
    }
}

#[test]
fn conditioning_scores_only_observed_events() {
    let mut rng = seeds::rng(5, "conditioning", 0);
    let model = random_model(&mut rng, ModelKind::TiSphp, 0);
    let track = FeatureTrack::constant(NIGHT, 10.0).unwrap();
    let events = vec![1.0, 2.5, 4.0, 7.0];
    let full = EventSequence::new("s", events.clone(), 10.0).unwrap();
    let cond = EventSequence::new("s", events, 10.0).unwrap().observed_from(3.0).unwrap();
    let ds = |s| Dataset::new(vec![SequenceEntry::new(s, statics(), track.clone()).unwrap()]).unwrap();
    let (nf, nc) = (nll(&ds(full.clone()), &model).unwrap(), nll(&ds(cond), &model).unwrap());
    // The difference is the contribution of [0, 3): its compensator minus the logs of the two early events.
    let lam = |t: f64| sphp::model::intensity(t, &full, &statics(), &track, &model.params, &model.basis).unwrap();
    let k = sphp::model::compensator_between(&full, &statics(), &track, &model.params, &model.basis, 0.0, 3.0).unwrap();
    let head = k - lam(1.0).max(LOG_FLOOR).ln() - lam(2.5).max(LOG_FLOOR).ln();
    assert!(close(nf - nc, head, 1e-12));
}

#[test]
fn empty_sequences_contribute_their_compensator() {
    let mut p = ModelParams::zeros(ModelKind::Poisson, 1);
    p.mu_ti[0] = 0.7;
    let model = HawkesModel::new(p, sphp::BasisSet::new(vec![1.0], 0.5).unwrap()).unwrap();
    let seq = EventSequence::new("s", vec![], 12.0).unwrap();
    let data = Dataset::new(vec![SequenceEntry::new(seq, statics(), FeatureTrack::constant(NIGHT, 12.0).unwrap()).unwrap()]).unwrap();
    assert!(close(nll(&data, &model).unwrap(), 0.7 * 12.0, 1e-15));
}

#[test]
fn nll_adds_over_sequences() {
    let mut rng = seeds::rng(8, "additivity", 0);
    for k in KINDS {
        let data = random_dataset(&mut rng, 3, 8, 10.0);
        let model = random_model(&mut rng, k, data.len());
        let parts: f64 = (0..data.len()).map(|i| nll(&data.subset(&[i]).unwrap(), &model).unwrap()).sum();
        assert!(close(nll(&data, &model).unwrap(), parts, 1e-13));
    }
}

#[test]
fn event_sampled_gradient_is_exact_for_constant_features() {
    let mut rng = seeds::rng(9, "constant-features", 0);
    let model = random_model(&mut rng, ModelKind::TvSphp, 0);
    let f = [0.3, 0.9, 0.1, 0.5, 0.0, 1.0, 0.0, 0.0];
    let entries = (0..3)
        .map(|i| {
            let seq = EventSequence::new(format!("s{i}"), vec![0.4 + 0.5 * i as f64, 2.2, 5.9], 8.0).unwrap();
            SequenceEntry::new(seq, statics(), FeatureTrack::constant(f, 8.0).unwrap()).unwrap()
        })
        .collect();
    let data = Dataset::new(entries).unwrap();
    let exact = sphp::likelihood::grad_nll_with(&data, &model, TvIntegral::Exact).unwrap();
    let sampled = sphp::likelihood::grad_nll_with(&data, &model, TvIntegral::EventSampledWithTail).unwrap();
    for (a, b) in exact.iter().zip(&sampled) {
        assert!((a - b).abs() <= 4.0 * f64::EPSILON * a.abs().max(1.0), "{a} vs {b}");
    }
}
