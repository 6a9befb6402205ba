//! Ogata thinning, simulation-based prediction of expected counts, and
//! synthetic dataset generation.
//!
//! Thinning needs a dominating rate on each stretch of time it proposes into.
//! The bound is the largest right-limit intensity over a grid with step Δ
//! (plus feature knots and basis peaks inside the segment), inflated by a
//! safety factor. A proposal whose intensity exceeds the bound doubles the
//! factor and is redrawn; after too many escalations the simulation fails.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::likelihood::{Dataset, SequenceEntry};
use crate::model::{
    dot, endogenous_rate, phi_unchecked, BasisSet, EventSequence, FeatureTrack, HawkesModel, StaticFeatures,
    time_of_day_slot, TrackVector, REAL_TRACK_DIM, STATIC_BLOCKS,
};
use crate::parallel::map_indexed;
use crate::seeds;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ThinningConfig {
    /// Grid step Δ for the discretized supremum, hours.
    pub delta: f64,
    pub safety_factor: f64,
    /// Bound segment length; defaults to 6σ of the basis.
    pub lookahead: Option<f64>,
    pub max_escalations: usize,
    /// Whether accepted events join the history that drives λ.
    pub append_simulated: bool,
    /// Abort a single thinning run after this many accepted events.
    pub max_events: usize,
}

impl Default for ThinningConfig {
    fn default() -> Self {
        Self { delta: 10.0 / 60.0, safety_factor: 1.1, lookahead: None, max_escalations: 10, append_simulated: true, max_events: 200_000 }
    }
}

impl ThinningConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.safety_factor >= 1.0) {
            return Err(Error::contract("thinning needs Δ > 0 and a safety factor ≥ 1"));
        }
        if self.lookahead.is_some_and(|l| !(l > 0.0)) {
            return Err(Error::contract("lookahead must be > 0"));
        }
        if self.max_events == 0 {
            return Err(Error::contract("max_events must be ≥ 1"));
        }
        Ok(())
    }
}

/// Everything needed to evaluate λ while simulating: a piecewise-constant
/// exogenous rate and a growing event history.
#[derive(Debug, Clone)]
pub struct IntensityState<'a> {
    basis: &'a BasisSet,
    a: Vec<f64>,
    exo_knots: Vec<f64>,
    exo_rates: Vec<f64>,
    history: Vec<f64>,
}

impl<'a> IntensityState<'a> {
    /// Exogenous rate follows `track`.
    pub fn from_track(
        model: &'a HawkesModel,
        subject: &str,
        static_features: &StaticFeatures,
        track: &FeatureTrack,
        history: Vec<f64>,
    ) -> Result<Self> {
        let rates = track
            .values()
            .iter()
            .map(|f| crate::model::exogenous_rate(&model.params, subject, static_features, f))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::assemble(model, track.knots().to_vec(), rates, history))
    }

    /// Exogenous rate held at its value for the frozen feature vector.
    pub fn frozen(
        model: &'a HawkesModel,
        subject: &str,
        static_features: &StaticFeatures,
        frozen: &TrackVector,
        history: Vec<f64>,
    ) -> Result<Self> {
        let rate = crate::model::exogenous_rate(&model.params, subject, static_features, frozen)?;
        Ok(Self::assemble(model, vec![0.0], vec![rate], history))
    }

    fn assemble(model: &'a HawkesModel, knots: Vec<f64>, rates: Vec<f64>, history: Vec<f64>) -> Self {
        let a = if model.kind().is_self_exciting() { model.params.a.clone() } else { vec![0.0; model.basis.len()] };
        Self { basis: &model.basis, a, exo_knots: knots, exo_rates: rates, history }
    }

    fn exogenous(&self, t: f64) -> f64 {
        let k = self.exo_knots.partition_point(|&x| x <= t).saturating_sub(1);
        self.exo_rates[k]
    }

    /// λ(t), counting only history strictly before `t`.
    pub fn rate(&self, t: f64) -> f64 {
        self.exogenous(t) + endogenous_rate(t, &self.history, self.basis, &self.a)
    }

    /// λ(t⁺), counting history at `t` as well.
    fn right_rate(&self, t: f64) -> f64 {
        let lo = self.history.partition_point(|&e| e < t - self.basis.support());
        let hi = self.history.partition_point(|&e| e <= t);
        let endo: f64 = self.history[lo..hi].iter().map(|&e| phi_unchecked(t - e, self.basis, &self.a)).sum();
        self.exogenous(t) + endo
    }

    pub fn history(&self) -> &[f64] {
        &self.history
    }
}

/// `safety_factor · max λ(s⁺)` over `{t + iΔ} ∪ {segment_end}`, with feature
/// knots and basis peaks inside the segment added to the grid.
pub fn sup_intensity(state: &IntensityState<'_>, t: f64, segment_end: f64, delta: f64, safety_factor: f64) -> f64 {
    debug_assert!(delta > 0.0 && t < segment_end);
    let mut best = state.right_rate(segment_end);
    let mut i = 0u64;
    loop {
        let s = t + i as f64 * delta;
        if s >= segment_end {
            break;
        }
        best = best.max(state.right_rate(s));
        i += 1;
    }
    let first = state.exo_knots.partition_point(|&k| k <= t);
    for &k in state.exo_knots[first..].iter().take_while(|&&k| k <= segment_end) {
        best = best.max(state.right_rate(k));
    }
    let basis = state.basis;
    let lo = state.history.partition_point(|&e| e < t - basis.support());
    for &e in &state.history[lo..] {
        for (m, &c) in basis.centers().iter().enumerate() {
            let peak = e + c;
            if state.a[m] > 0.0 && peak > t && peak < segment_end {
                best = best.max(state.right_rate(peak));
            }
        }
    }
    safety_factor * best
}

/// Runs thinning on `[start, end)`, returning the accepted times. Accepted
/// times also join the state history when `config.append_simulated` is set.
pub fn thin(
    state: &mut IntensityState<'_>,
    start: f64,
    end: f64,
    config: &ThinningConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    config.validate()?;
    let lookahead = config.lookahead.unwrap_or(6.0 * state.basis.sigma());
    let mut accepted = Vec::new();
    let mut t = start;
    'segments: while t < end {
        let segment_end = (t + lookahead).min(end);
        let mut factor = config.safety_factor;
        let mut escalations = 0;
        let mut bound = sup_intensity(state, t, segment_end, config.delta, factor);
        loop {
            if !(bound > 0.0) {
                t = segment_end;
                continue 'segments;
            }
            let candidate = t + Exp::new(bound).expect("positive rate").sample(rng);
            let u: f64 = rng.random();
            if candidate >= segment_end {
                t = segment_end;
                continue 'segments;
            }
            let lambda = state.rate(candidate);
            if lambda > bound {
                escalations += 1;
                if escalations > config.max_escalations {
                    return Err(Error::BoundFailure { time: candidate, escalations });
                }
                factor *= 2.0;
                bound = sup_intensity(state, t, segment_end, config.delta, factor);
                continue;
            }
            t = candidate;
            if u * bound < lambda {
                if accepted.len() == config.max_events {
                    return Err(Error::EventLimit { time: t, events: accepted.len() });
                }
                accepted.push(t);
                if config.append_simulated {
                    state.history.push(t);
                    // The history changed, so the old bound no longer dominates.
                    bound = sup_intensity(state, t, segment_end, config.delta, factor);
                }
            }
            // After a rejection the previous bound still covers [t, segment_end].
        }
    }
    Ok(accepted)
}

/// Simulates one sequence on `[0, horizon)` with features following `track`.
pub fn simulate_sequence(
    model: &HawkesModel,
    subject: &str,
    static_features: &StaticFeatures,
    track: &FeatureTrack,
    horizon: f64,
    seed: u64,
    config: &ThinningConfig,
) -> Result<EventSequence> {
    if !(horizon > 0.0) {
        return Err(Error::contract(format!("horizon must be > 0, got {horizon}")));
    }
    if track.end() < horizon {
        return Err(Error::contract("feature track does not cover the simulation horizon"));
    }
    model.params.validate(&model.basis)?;
    let mut state = IntensityState::from_track(model, subject, static_features, track, Vec::new())?;
    let mut rng = seeds::rng(seed, "simulate", 0);
    let cfg = ThinningConfig { append_simulated: true, ..*config };
    let events = thin(&mut state, 0.0, horizon, &cfg, &mut rng)?;
    EventSequence::new(subject, events, horizon)
}

/// What a prediction conditions on.
#[derive(Debug, Clone, PartialEq)]
pub struct Conditioning {
    pub subject_id: String,
    /// Observed event times before `t0`.
    pub history: Vec<f64>,
    pub t0: f64,
    pub static_features: StaticFeatures,
    /// Time-varying features frozen at their `t0` value for the whole window.
    pub frozen: TrackVector,
}

impl Conditioning {
    /// Conditions on a test sequence at its observation start.
    pub fn at_observation_start(entry: &SequenceEntry) -> Result<Self> {
        Self::at(entry, entry.sequence.observation_start())
    }

    pub fn at(entry: &SequenceEntry, t0: f64) -> Result<Self> {
        Ok(Self {
            subject_id: entry.sequence.subject_id().to_owned(),
            history: entry.sequence.history_before(t0).to_vec(),
            t0,
            static_features: entry.static_features.clone(),
            frozen: *entry.track.value_at(t0)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionResult {
    pub window: (f64, f64),
    pub expected_count: f64,
    pub per_trial_counts: Vec<usize>,
    /// Sample standard deviation of the per-trial counts.
    pub trial_sd: f64,
    pub frozen_features: TrackVector,
}

/// Monte-Carlo estimate of the expected number of events in `[t0, t0 + window)`.
pub fn predict_expected_count(
    model: &HawkesModel,
    cond: &Conditioning,
    window: f64,
    trials: usize,
    config: &ThinningConfig,
    seed: u64,
) -> Result<PredictionResult> {
    if !(window > 0.0) || trials == 0 {
        return Err(Error::contract("prediction needs a positive window and at least one trial"));
    }
    if cond.history.iter().any(|&e| e >= cond.t0) || cond.history.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::contract("history must be sorted and strictly before t0"));
    }
    model.params.validate(&model.basis)?;
    let base = IntensityState::frozen(model, &cond.subject_id, &cond.static_features, &cond.frozen, cond.history.clone())?;
    let end = cond.t0 + window;
    let counts = map_indexed(trials, |j| -> Result<usize> {
        let mut state = base.clone();
        let mut rng = seeds::rng(seed, "predict-trial", j as u64);
        Ok(thin(&mut state, cond.t0, end, config, &mut rng)?.len())
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let mean = counts.iter().sum::<usize>() as f64 / trials as f64;
    let trial_sd = if trials > 1 {
        (counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / (trials - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(PredictionResult {
        window: (cond.t0, end),
        expected_count: mean,
        per_trial_counts: counts,
        trial_sd,
        frozen_features: cond.frozen,
    })
}

/// Settings for synthetic feature tracks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureGeneratorConfig {
    /// Hours between knots of the real-valued features.
    pub knot_spacing: f64,
    /// Clock hour at t = 0; time-of-day follows a 24 h clock from here.
    pub start_hour: f64,
    /// Standard deviation of each random-walk step before normalization.
    pub walk_step: f64,
}

impl Default for FeatureGeneratorConfig {
    fn default() -> Self {
        Self { knot_spacing: 0.5, start_hour: 0.0, walk_step: 0.1 }
    }
}

pub fn random_static(rng: &mut impl Rng) -> StaticFeatures {
    let mut choices = [0usize; 8];
    for (c, (_, len)) in choices.iter_mut().zip(STATIC_BLOCKS) {
        *c = rng.random_range(0..len);
    }
    StaticFeatures::from_choices(choices).expect("choices are in range")
}

/// Random-walk real features (min-max normalized per sequence) and a
/// clock-aligned time-of-day block.
pub fn random_track(cfg: &FeatureGeneratorConfig, horizon: f64, rng: &mut impl Rng) -> Result<FeatureTrack> {
    if !(cfg.knot_spacing > 0.0 && horizon > 0.0 && cfg.walk_step >= 0.0) {
        return Err(Error::contract("feature generator needs positive spacing and horizon"));
    }
    let mut knots: Vec<f64> = (0..).map(|i| i as f64 * cfg.knot_spacing).take_while(|&t| t < horizon).collect();
    let first_boundary = (6.0 - cfg.start_hour.rem_euclid(6.0)) % 6.0;
    knots.extend((0..).map(|i| first_boundary + 6.0 * i as f64).take_while(|&t| t < horizon));
    knots.sort_by(f64::total_cmp);
    knots.dedup_by(|a, b| (*a - *b).abs() < 1e-9);

    let step = Normal::new(0.0, cfg.walk_step).expect("finite walk step");
    let mut raw = vec![[0.0; REAL_TRACK_DIM]; knots.len()];
    let mut pos = [0.0; REAL_TRACK_DIM];
    for r in raw.iter_mut() {
        for p in pos.iter_mut() {
            *p += step.sample(rng);
        }
        *r = pos;
    }
    let mut values = Vec::with_capacity(knots.len());
    let (mut lo, mut hi) = ([f64::INFINITY; REAL_TRACK_DIM], [f64::NEG_INFINITY; REAL_TRACK_DIM]);
    for r in &raw {
        for d in 0..REAL_TRACK_DIM {
            lo[d] = lo[d].min(r[d]);
            hi[d] = hi[d].max(r[d]);
        }
    }
    for (r, &t) in raw.iter().zip(&knots) {
        let mut v = [0.0; 8];
        for d in 0..REAL_TRACK_DIM {
            let range = hi[d] - lo[d];
            v[d] = if range > 0.0 { ((r[d] - lo[d]) / range).clamp(0.0, 1.0) } else { 0.5 };
        }
        v[REAL_TRACK_DIM + time_of_day_slot(cfg.start_hour + t + 1e-9)] = 1.0;
        values.push(v);
    }
    FeatureTrack::new(knots, values, horizon)
}

/// Subject id given to the `i`-th synthetic sequence.
pub fn synthetic_subject(i: usize) -> String {
    format!("syn-{i:04}")
}

/// Draws features for `n` sequences and simulates each from `truth`.
pub fn generate_synthetic_dataset(
    truth: &HawkesModel,
    features: &FeatureGeneratorConfig,
    n: usize,
    horizon: f64,
    seed: u64,
    thinning: &ThinningConfig,
) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::contract("need at least one synthetic sequence"));
    }
    let entries = map_indexed(n, |i| -> Result<SequenceEntry> {
        let mut rng = seeds::rng(seed, "synth-features", i as u64);
        let static_features = random_static(&mut rng);
        let track = random_track(features, horizon, &mut rng)?;
        let subject = synthetic_subject(i);
        let seq = simulate_sequence(
            truth,
            &subject,
            &static_features,
            &track,
            horizon,
            seeds::derive(seed, "synth-events", i as u64),
            thinning,
        )?;
        SequenceEntry::new(seq, static_features, track)
    });
    Dataset::new(entries.into_iter().collect::<Result<Vec<_>>>()?)
}

/// Mean rate μ·f0 + μ_TV·f used when the features are held fixed.
pub fn frozen_exogenous(model: &HawkesModel, static_features: &StaticFeatures, f: &TrackVector) -> f64 {
    let p = &model.params;
    let mut r = dot(&p.mu_ti, static_features.as_slice());
    if p.kind.uses_varying() {
        r += dot(&p.mu_tv, f);
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelKind, ModelParams};

    const NIGHT: TrackVector = [0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0];

    fn constant_poisson(rate: f64) -> HawkesModel {
        let mut p = ModelParams::zeros(ModelKind::Poisson, 1);
        p.mu_ti[0] = rate;
        HawkesModel::new(p, BasisSet::new(vec![1.0], 0.5).unwrap()).unwrap()
    }

    fn statics() -> StaticFeatures {
        StaticFeatures::from_choices([0; 8]).unwrap()
    }

    #[test]
    fn constant_bound_uses_safety_factor() {
        let m = constant_poisson(0.4);
        let s = IntensityState::frozen(&m, "x", &statics(), &NIGHT, vec![]).unwrap();
        let b = sup_intensity(&s, 0.0, 1.0, 1.0 / 6.0, 1.1);
        assert!((b - 0.44).abs() < 1e-12);
    }

    #[test]
    fn decreasing_intensity_bound_is_first_grid_point() {
        let mut p = ModelParams::zeros(ModelKind::TiSphp, 1);
        p.mu_ti[0] = 0.1;
        p.a[0] = 1.0;
        let m = HawkesModel::new(p, BasisSet::new(vec![0.0], 1.0).unwrap()).unwrap();
        let s = IntensityState::frozen(&m, "x", &statics(), &NIGHT, vec![0.0]).unwrap();
        let b = sup_intensity(&s, 0.5, 3.0, 0.25, 1.0);
        assert!((b - s.rate(0.5)).abs() < 1e-12);
    }

    #[test]
    fn zero_model_simulates_nothing() {
        let m = constant_poisson(0.0);
        let tr = FeatureTrack::constant(NIGHT, 50.0).unwrap();
        let seq = simulate_sequence(&m, "x", &statics(), &tr, 50.0, 3, &ThinningConfig::default()).unwrap();
        assert!(seq.is_empty());
        let cond = Conditioning { subject_id: "x".into(), history: vec![], t0: 5.0, static_features: statics(), frozen: NIGHT };
        let pr = predict_expected_count(&m, &cond, 1.0, 20, &ThinningConfig::default(), 1).unwrap();
        assert_eq!(pr.expected_count, 0.0);
    }

    #[test]
    fn prediction_is_deterministic_and_consistent() {
        let m = constant_poisson(3.0);
        let cond = Conditioning { subject_id: "x".into(), history: vec![1.0], t0: 2.0, static_features: statics(), frozen: NIGHT };
        let a = predict_expected_count(&m, &cond, 1.0, 50, &ThinningConfig::default(), 9).unwrap();
        let b = predict_expected_count(&m, &cond, 1.0, 50, &ThinningConfig::default(), 9).unwrap();
        assert_eq!(a, b);
        let mean = a.per_trial_counts.iter().sum::<usize>() as f64 / 50.0;
        assert_eq!(a.expected_count, mean);
        assert_eq!(a.window, (2.0, 3.0));
    }

    #[test]
    fn prediction_rejects_future_history() {
        let m = constant_poisson(1.0);
        let cond = Conditioning { subject_id: "x".into(), history: vec![3.0], t0: 2.0, static_features: statics(), frozen: NIGHT };
        assert!(predict_expected_count(&m, &cond, 1.0, 5, &ThinningConfig::default(), 0).is_err());
    }

    #[test]
    fn undershooting_bound_escalates_then_fails() {
        // Two overlapping bumps peak together at s = 1.25, between the grid
        // points and the individual bump peaks (1.0 and 1.5).
        let mut p = ModelParams::zeros(ModelKind::TiSphp, 1);
        p.a[0] = 1.0;
        let m = HawkesModel::new(p, BasisSet::new(vec![1.0], 1.0).unwrap()).unwrap();
        let state = IntensityState::frozen(&m, "x", &statics(), &NIGHT, vec![0.0, 0.5]).unwrap();
        let tight = ThinningConfig {
            delta: 5.0,
            safety_factor: 1.0,
            lookahead: Some(10.0),
            max_escalations: 0,
            append_simulated: false,
            max_events: 1000,
        };
        let mut rng = seeds::rng(0, "escalation", 0);
        let failures = (0..200)
            .filter(|_| matches!(thin(&mut state.clone(), 0.6, 3.0, &tight, &mut rng), Err(Error::BoundFailure { .. })))
            .count();
        assert!(failures > 0);
        let escalating = ThinningConfig { max_escalations: 10, ..tight };
        for _ in 0..200 {
            thin(&mut state.clone(), 0.6, 3.0, &escalating, &mut rng).unwrap();
        }
    }

    #[test]
    fn explosive_model_hits_event_limit() {
        let mut p = ModelParams::zeros(ModelKind::TiSphp, 1);
        p.mu_ti[0] = 1.0;
        p.a[0] = 3.0;
        let m = HawkesModel::new(p, BasisSet::with_support(vec![0.5], 0.5, 3.0).unwrap()).unwrap();
        assert!(m.params.branching_ratio(&m.basis) > 1.0);
        let tr = FeatureTrack::constant(NIGHT, 200.0).unwrap();
        let cfg = ThinningConfig { max_events: 500, ..ThinningConfig::default() };
        let err = simulate_sequence(&m, "x", &statics(), &tr, 200.0, 1, &cfg).unwrap_err();
        assert!(matches!(err, Error::EventLimit { events: 500, .. }));
    }

    #[test]
    fn synthetic_dataset_shape() {
        let m = constant_poisson(0.0);
        let d = generate_synthetic_dataset(&m, &FeatureGeneratorConfig::default(), 1, 24.0, 1, &ThinningConfig::default()).unwrap();
        assert_eq!(d.len(), 1);
        assert!(d.entries()[0].sequence.is_empty());
        let tr = &d.entries()[0].track;
        assert_eq!(tr.value_at(13.0).unwrap()[REAL_TRACK_DIM + 2], 1.0);
        assert_eq!(tr.value_at(5.9).unwrap()[REAL_TRACK_DIM], 1.0);
    }

    #[test]
    fn time_of_day_boundaries() {
        assert_eq!(time_of_day_slot(0.0), 0);
        assert_eq!(time_of_day_slot(5.99), 0);
        assert_eq!(time_of_day_slot(6.0), 1);
        assert_eq!(time_of_day_slot(13.0), 2);
        assert_eq!(time_of_day_slot(23.5), 3);
        assert_eq!(time_of_day_slot(24.0), 0);
    }
}
