#![allow(dead_code)]

use rand::Rng;
use sphp::simulator::{random_static, random_track, FeatureGeneratorConfig};
use sphp::{BasisSet, Dataset, EventSequence, HawkesModel, ModelKind, ModelParams, SequenceEntry, StaticFeatures, TrackVector};

pub const KINDS: [ModelKind; 4] = [ModelKind::Poisson, ModelKind::TiSphp, ModelKind::TvSphp, ModelKind::Multitask];
pub const NIGHT: TrackVector = [0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0];

pub fn statics() -> StaticFeatures {
    StaticFeatures::from_choices([0; 8]).unwrap()
}

pub fn random_basis(rng: &mut impl Rng) -> BasisSet {
    let m = rng.random_range(1..=4);
    let mut centers: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..3.0)).collect();
    centers.sort_by(f64::total_cmp);
    BasisSet::with_support(centers, rng.random_range(0.3..1.5), rng.random_range(2.0..6.0)).unwrap()
}

pub fn random_params(rng: &mut impl Rng, kind: ModelKind, basis: &BasisSet, subjects: usize) -> ModelParams {
    let mut p = ModelParams::zeros(kind, basis.len());
    p.mu_ti.iter_mut().for_each(|v| *v = rng.random_range(0.0..0.5));
    p.mu_tv.iter_mut().for_each(|v| *v = rng.random_range(0.0..0.5));
    p.a.iter_mut().for_each(|v| *v = rng.random_range(0.0..1.0));
    if kind.uses_subject_baseline() {
        for i in 0..subjects {
            p.mu_subject.insert(format!("s{i}"), rng.random_range(0.05..1.0));
        }
    }
    p
}

/// Random sequences with random static features and feature tracks.
pub fn random_dataset(rng: &mut impl Rng, max_seqs: usize, max_events: usize, horizon: f64) -> Dataset {
    let features = FeatureGeneratorConfig { knot_spacing: 1.5, start_hour: rng.random_range(0.0..24.0), walk_step: 0.3 };
    let n = rng.random_range(1..=max_seqs);
    let entries = (0..n)
        .map(|i| {
            let k = rng.random_range(0..=max_events);
            let mut ev: Vec<f64> = (0..k).map(|_| rng.random_range(0.01..horizon)).collect();
            ev.sort_by(f64::total_cmp);
            ev.dedup();
            let mut seq = EventSequence::new(format!("s{i}"), ev, horizon).unwrap();
            if rng.random_bool(0.3) {
                seq = seq.observed_from(horizon / 4.0).unwrap();
            }
            let st = random_static(rng);
            let track = random_track(&features, horizon, rng).unwrap();
            SequenceEntry::new(seq, st, track).unwrap()
        })
        .collect();
    Dataset::new(entries).unwrap()
}

pub fn random_model(rng: &mut impl Rng, kind: ModelKind, subjects: usize) -> HawkesModel {
    let basis = random_basis(rng);
    let p = random_params(rng, kind, &basis, subjects);
    HawkesModel::new(p, basis).unwrap()
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}
