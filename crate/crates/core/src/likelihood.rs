//! Negative log-likelihood, its analytic gradient and the L1-regularized objective.
//!
//! For a fixed dataset, basis and model kind the intensity at every scored
//! event is linear in the flattened parameter vector θ, and so is the
//! compensator. [`Design`] precomputes those linear maps once, which is what
//! makes the learner's inner loop cheap. [`nll`] itself is evaluated through
//! the model's `intensity`/`compensator` functions and serves as the
//! independent reference for the design route.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingestion::NormalizationStats;
use crate::model::{
    compensator_between, intensity, BasisSet, EventSequence, FeatureTrack, HawkesModel, ModelKind,
    ModelParams, StaticFeatures, STATIC_DIM, TRACK_DIM,
};
use crate::parallel::map_indexed;

/// Lower bound applied to λ(t_i) inside the logarithm.
pub const LOG_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceEntry {
    pub sequence: EventSequence,
    pub static_features: StaticFeatures,
    pub track: FeatureTrack,
}

impl SequenceEntry {
    pub fn new(sequence: EventSequence, static_features: StaticFeatures, track: FeatureTrack) -> Result<Self> {
        if track.end() < sequence.horizon() {
            return Err(Error::contract(format!(
                "track for `{}` ends at {} before the horizon {}",
                sequence.subject_id(),
                track.end(),
                sequence.horizon()
            )));
        }
        Ok(Self { sequence, static_features, track })
    }
}

/// A nonempty collection of sequences sharing the feature layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    entries: Vec<SequenceEntry>,
    normalization: Option<NormalizationStats>,
}

impl Dataset {
    pub fn new(entries: Vec<SequenceEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::contract("a dataset needs at least one sequence"));
        }
        Ok(Self { entries, normalization: None })
    }

    pub fn with_normalization(mut self, stats: Option<NormalizationStats>) -> Self {
        self.normalization = stats;
        self
    }

    pub fn entries(&self) -> &[SequenceEntry] {
        &self.entries
    }

    pub fn normalization(&self) -> Option<&NormalizationStats> {
        self.normalization.as_ref()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of events scored by the likelihood.
    pub fn observed_event_count(&self) -> usize {
        self.entries.iter().map(|e| e.sequence.observed_events().len()).sum()
    }

    /// Sorted, deduplicated subject ids.
    pub fn subjects(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.entries.iter().map(|e| e.sequence.subject_id().to_owned()).collect();
        ids.sort();
        ids.dedup();
        ids
    }

    /// Subset by entry index, keeping the normalization metadata.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let entries = indices.iter().map(|&i| self.entries[i].clone()).collect();
        Ok(Self::new(entries)?.with_normalization(self.normalization.clone()))
    }
}

/// Positions of the parameter blocks in the flattened vector
/// `[μ_TI (31); μ_TV (8); a (M); μ_subject (S)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamLayout {
    pub basis_len: usize,
    pub subjects: Vec<String>,
}

impl ParamLayout {
    pub const MU_TI: std::ops::Range<usize> = 0..STATIC_DIM;
    pub const MU_TV: std::ops::Range<usize> = STATIC_DIM..STATIC_DIM + TRACK_DIM;

    pub fn new(basis_len: usize, subjects: Vec<String>) -> Self {
        Self { basis_len, subjects }
    }

    /// Layout for a model: subject baselines are laid out in sorted-id order.
    pub fn for_params(params: &ModelParams) -> Self {
        Self::new(params.a.len(), params.mu_subject.keys().cloned().collect())
    }

    pub fn impact(&self) -> std::ops::Range<usize> {
        let start = STATIC_DIM + TRACK_DIM;
        start..start + self.basis_len
    }

    pub fn subject_range(&self) -> std::ops::Range<usize> {
        let start = self.impact().end;
        start..start + self.subjects.len()
    }

    pub fn len(&self) -> usize {
        self.subject_range().end
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn subject_index(&self, id: &str) -> Result<usize> {
        self.subjects
            .binary_search_by(|s| s.as_str().cmp(id))
            .map(|i| self.subject_range().start + i)
            .map_err(|_| Error::UnknownSubject(id.to_owned()))
    }

    /// Which components a kind estimates.
    pub fn active(&self, kind: ModelKind) -> Vec<bool> {
        let mut on = vec![false; self.len()];
        let mut set = |r: std::ops::Range<usize>| on[r].iter_mut().for_each(|v| *v = true);
        if kind.uses_static() {
            set(Self::MU_TI);
        }
        if kind.uses_varying() {
            set(Self::MU_TV);
        }
        if kind.is_self_exciting() {
            set(self.impact());
        }
        if kind.uses_subject_baseline() {
            set(self.subject_range());
        }
        on
    }

    pub fn flatten(&self, params: &ModelParams) -> Vec<f64> {
        let mut theta = Vec::with_capacity(self.len());
        theta.extend_from_slice(&params.mu_ti);
        theta.extend_from_slice(&params.mu_tv);
        theta.extend_from_slice(&params.a);
        theta.extend(self.subjects.iter().map(|s| params.mu_subject.get(s).copied().unwrap_or(0.0)));
        theta
    }

    pub fn unflatten(&self, kind: ModelKind, theta: &[f64]) -> ModelParams {
        let mu_subject = if kind.uses_subject_baseline() {
            self.subjects.iter().cloned().zip(theta[self.subject_range()].iter().copied()).collect()
        } else {
            Default::default()
        };
        ModelParams {
            kind,
            mu_ti: theta[Self::MU_TI].to_vec(),
            mu_tv: theta[Self::MU_TV].to_vec(),
            a: theta[self.impact()].to_vec(),
            mu_subject,
        }
    }
}

/// How the gradient treats ∫ f_d(s) ds in the μ_TV block.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TvIntegral {
    /// Exact piecewise-constant integral, consistent with [`nll`].
    #[default]
    Exact,
    /// Σ_i (t_i − t_{i−1}) f_d(t_i) plus the tail (T − t_I) f_d(T).
    EventSampledWithTail,
    /// Σ_i (t_i − t_{i−1}) f_d(t_i) only, ignoring the tail after the last event.
    EventSampled,
}

/// NLL value together with the number of events that hit [`LOG_FLOOR`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub floor_hits: usize,
}

/// Linear maps θ ↦ λ(t_i) (one row per scored event) and θ ↦ ∫λ, per sequence.
#[derive(Debug, Clone)]
pub struct Design {
    width: usize,
    /// `rows[seq]` is a row-major `(events × width)` block.
    rows: Vec<Vec<f64>>,
    compensator: Vec<Vec<f64>>,
    /// Event-sampled approximation of ∫ f_d, split into the body and the tail after the last event.
    sampled_tv: Vec<([f64; TRACK_DIM], [f64; TRACK_DIM])>,
}

impl Design {
    pub fn build(data: &Dataset, basis: &BasisSet, kind: ModelKind, layout: &ParamLayout) -> Result<Self> {
        if layout.basis_len != basis.len() {
            return Err(Error::contract("layout and basis disagree on the number of bumps"));
        }
        let built: Vec<Result<_>> =
            map_indexed(data.len(), |n| build_sequence(&data.entries[n], basis, kind, layout));
        let mut design = Design {
            width: layout.len(),
            rows: Vec::with_capacity(data.len()),
            compensator: Vec::with_capacity(data.len()),
            sampled_tv: Vec::with_capacity(data.len()),
        };
        for b in built {
            let (rows, comp, sampled) = b?;
            design.rows.push(rows);
            design.compensator.push(comp);
            design.sampled_tv.push(sampled);
        }
        Ok(design)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn event_count(&self) -> usize {
        self.rows.iter().map(|r| r.len() / self.width).sum()
    }

    fn sequence_nll(&self, n: usize, theta: &[f64]) -> Result<(f64, usize)> {
        let mut value = dot(&self.compensator[n], theta);
        let mut hits = 0;
        for row in self.rows[n].chunks_exact(self.width) {
            let lambda = dot(row, theta);
            if lambda < 0.0 {
                return Err(Error::NegativeIntensity { time: f64::NAN, value: lambda });
            }
            if lambda < LOG_FLOOR {
                hits += 1;
            }
            value -= lambda.max(LOG_FLOOR).ln();
        }
        Ok((value, hits))
    }

    pub fn nll(&self, theta: &[f64]) -> Result<Evaluation> {
        let parts = map_indexed(self.rows.len(), |n| self.sequence_nll(n, theta));
        let mut out = Evaluation { value: 0.0, floor_hits: 0 };
        for p in parts {
            let (v, h) = p?;
            out.value += v;
            out.floor_hits += h;
        }
        Ok(out)
    }

    fn sequence_grad(&self, n: usize, theta: &[f64], mode: TvIntegral) -> Result<Vec<f64>> {
        let mut g = self.compensator[n].clone();
        match mode {
            TvIntegral::Exact => {}
            TvIntegral::EventSampledWithTail | TvIntegral::EventSampled => {
                let (body, tail) = &self.sampled_tv[n];
                let with_tail = mode == TvIntegral::EventSampledWithTail;
                // Both parts are zero for kinds without time-varying features.
                for (d, gd) in g[ParamLayout::MU_TV].iter_mut().enumerate() {
                    *gd = body[d] + if with_tail { tail[d] } else { 0.0 };
                }
            }
        }
        for row in self.rows[n].chunks_exact(self.width) {
            let lambda = dot(row, theta);
            if lambda < 0.0 {
                return Err(Error::NegativeIntensity { time: f64::NAN, value: lambda });
            }
            if lambda < LOG_FLOOR {
                continue;
            }
            let inv = 1.0 / lambda;
            for (gk, xk) in g.iter_mut().zip(row) {
                *gk -= xk * inv;
            }
        }
        Ok(g)
    }

    pub fn grad(&self, theta: &[f64], mode: TvIntegral) -> Result<Vec<f64>> {
        let parts = map_indexed(self.rows.len(), |n| self.sequence_grad(n, theta, mode));
        let mut g = vec![0.0; self.width];
        for p in parts {
            for (acc, v) in g.iter_mut().zip(p?) {
                *acc += v;
            }
        }
        Ok(g)
    }
}

type SequenceDesign = (Vec<f64>, Vec<f64>, ([f64; TRACK_DIM], [f64; TRACK_DIM]));

fn build_sequence(entry: &SequenceEntry, basis: &BasisSet, kind: ModelKind, layout: &ParamLayout) -> Result<SequenceDesign> {
    let seq = &entry.sequence;
    let width = layout.len();
    let from = seq.observation_start();
    let horizon = seq.horizon();
    let impact = layout.impact();
    let subject = if kind.uses_subject_baseline() { Some(layout.subject_index(seq.subject_id())?) } else { None };

    let observed = seq.observed_events();
    let mut rows = vec![0.0; observed.len() * width];
    let events = seq.events();
    let first_observed = events.len() - observed.len();
    for (r, (i, &t)) in events.iter().enumerate().skip(first_observed).enumerate() {
        let row = &mut rows[r * width..(r + 1) * width];
        if kind.uses_static() {
            row[ParamLayout::MU_TI].copy_from_slice(entry.static_features.as_slice());
        }
        if kind.uses_varying() {
            row[ParamLayout::MU_TV].copy_from_slice(entry.track.value_at(t)?);
        }
        if kind.is_self_exciting() {
            let lo = events[..i].partition_point(|&e| e < t - basis.support());
            for &e in &events[lo..i] {
                for m in 0..basis.len() {
                    row[impact.start + m] += basis.kernel(m, t - e);
                }
            }
        }
        if let Some(s) = subject {
            row[s] = 1.0;
        }
    }

    let width_t = horizon - from;
    let mut comp = vec![0.0; width];
    if kind.uses_static() {
        for (c, f) in comp[ParamLayout::MU_TI].iter_mut().zip(entry.static_features.as_slice()) {
            *c = f * width_t;
        }
    }
    let mut body = [0.0; TRACK_DIM];
    let mut tail = [0.0; TRACK_DIM];
    if kind.uses_varying() {
        comp[ParamLayout::MU_TV].copy_from_slice(&entry.track.integral(from, horizon)?);
        let mut prev = from;
        for &t in observed {
            for (b, f) in body.iter_mut().zip(entry.track.value_at(t)?) {
                *b += (t - prev) * f;
            }
            prev = t;
        }
        for (tl, f) in tail.iter_mut().zip(entry.track.value_at(horizon)?) {
            *tl = (horizon - prev) * f;
        }
    }
    if kind.is_self_exciting() {
        let lo = events.partition_point(|&e| e < from - basis.support());
        for &e in &events[lo..] {
            for m in 0..basis.len() {
                comp[impact.start + m] += basis.truncated_cumulative(m, horizon - e)
                    - basis.truncated_cumulative(m, (from - e).max(0.0));
            }
        }
    }
    if let Some(s) = subject {
        comp[s] = width_t;
    }
    Ok((rows, comp, (body, tail)))
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sequence_nll_direct(entry: &SequenceEntry, model: &HawkesModel) -> Result<f64> {
    let seq = &entry.sequence;
    let p = &model.params;
    let mut value = compensator_between(
        seq,
        &entry.static_features,
        &entry.track,
        p,
        &model.basis,
        seq.observation_start(),
        seq.horizon(),
    )?;
    for &t in seq.observed_events() {
        let lambda = intensity(t, seq, &entry.static_features, &entry.track, p, &model.basis)?;
        if lambda < 0.0 {
            return Err(Error::NegativeIntensity { time: t, value: lambda });
        }
        value -= lambda.max(LOG_FLOOR).ln();
    }
    Ok(value)
}

/// Σ_n { ∫ λ^n − Σ_i log λ^n(t_i) }, scoring only events at or after each
/// sequence's observation start.
pub fn nll(data: &Dataset, model: &HawkesModel) -> Result<f64> {
    model.params.validate(&model.basis)?;
    let parts = map_indexed(data.len(), |n| sequence_nll_direct(&data.entries[n], model));
    parts.into_iter().sum()
}

/// Analytic gradient of [`nll`] in [`ParamLayout::for_params`] order.
///
/// Components of blocks the kind ignores are zero.
pub fn grad_nll(data: &Dataset, model: &HawkesModel) -> Result<Vec<f64>> {
    grad_nll_with(data, model, TvIntegral::Exact)
}

pub fn grad_nll_with(data: &Dataset, model: &HawkesModel, mode: TvIntegral) -> Result<Vec<f64>> {
    model.params.validate(&model.basis)?;
    let layout = ParamLayout::for_params(&model.params);
    let design = Design::build(data, &model.basis, model.kind(), &layout)?;
    design.grad(&layout.flatten(&model.params), mode)
}

/// nll + γ‖θ‖₁ over the blocks the kind estimates.
pub fn objective(data: &Dataset, model: &HawkesModel, gamma: f64) -> Result<f64> {
    if !(gamma >= 0.0) {
        return Err(Error::contract(format!("γ must be ≥ 0, got {gamma}")));
    }
    Ok(nll(data, model)? + gamma * model.params.l1_norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TrackVector;

    const NIGHT: TrackVector = [0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0];

    /// A homogeneous-rate model: only μ_TI for the first option of the first block.
    fn constant_model(rate: f64) -> HawkesModel {
        let basis = BasisSet::new(vec![1.0], 1.0).unwrap();
        let mut p = ModelParams::zeros(ModelKind::Poisson, 1);
        p.mu_ti[0] = rate;
        HawkesModel::new(p, basis).unwrap()
    }

    fn entry(events: Vec<f64>, horizon: f64) -> SequenceEntry {
        SequenceEntry::new(
            EventSequence::new("s", events, horizon).unwrap(),
            StaticFeatures::from_choices([0; 8]).unwrap(),
            FeatureTrack::constant(NIGHT, horizon).unwrap(),
        )
        .unwrap()
    }

    fn ten_events() -> Dataset {
        Dataset::new(vec![entry((0..10).map(|i| i as f64 + 0.5).collect(), 10.0)]).unwrap()
    }

    #[test]
    fn nll_examples() {
        let d = ten_events();
        assert!((nll(&d, &constant_model(1.0)).unwrap() - 10.0).abs() < 1e-12);
        let expect = 20.0 - 10.0 * 2f64.ln();
        assert!((nll(&d, &constant_model(2.0)).unwrap() - expect).abs() < 1e-12);
        assert!((expect - 13.0685).abs() < 1e-4);
        let empty = Dataset::new(vec![entry(vec![], 7.0)]).unwrap();
        assert!((nll(&empty, &constant_model(0.3)).unwrap() - 2.1).abs() < 1e-12);
    }

    #[test]
    fn gradient_examples() {
        let d = ten_events();
        let g = grad_nll(&d, &constant_model(1.0)).unwrap();
        assert!(g[0].abs() < 1e-12);
        let g = grad_nll(&d, &constant_model(2.0)).unwrap();
        assert!((g[0] - 5.0).abs() < 1e-12);
        // Masked blocks carry no gradient for the Poisson kind.
        let layout = ParamLayout::for_params(&constant_model(1.0).params);
        assert!(g[layout.impact()].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn objective_examples() {
        let d = ten_events();
        let m = constant_model(2.0);
        assert_eq!(objective(&d, &m, 0.0).unwrap(), nll(&d, &m).unwrap());
        let mut m3 = constant_model(1.0);
        m3.params.mu_ti[1] = 2.0; // inactive choice in block 1, still penalized
        let n = nll(&d, &m3).unwrap();
        assert!((n - 10.0).abs() < 1e-12);
        assert!((objective(&d, &m3, 0.2).unwrap() - 10.6).abs() < 1e-12);
        assert!(objective(&d, &m3, -1.0).is_err());
    }

    #[test]
    fn floor_keeps_nll_finite() {
        let d = ten_events();
        let m = constant_model(0.0);
        let v = nll(&d, &m).unwrap();
        assert!((v - 10.0 * -LOG_FLOOR.ln()).abs() < 1e-9);
        let layout = ParamLayout::for_params(&m.params);
        let design = Design::build(&d, &m.basis, m.kind(), &layout).unwrap();
        let e = design.nll(&layout.flatten(&m.params)).unwrap();
        assert_eq!(e.floor_hits, 10);
    }

    #[test]
    fn conditioning_history_excites_but_is_not_scored() {
        let basis = BasisSet::new(vec![0.5], 0.5).unwrap();
        let mut p = ModelParams::zeros(ModelKind::TiSphp, 1);
        p.mu_ti[0] = 1.0;
        p.a[0] = 0.7;
        let model = HawkesModel::new(p, basis).unwrap();
        let full = entry(vec![1.0, 2.2, 3.0], 4.0);
        let cond = SequenceEntry {
            sequence: full.sequence.clone().observed_from(2.0).unwrap(),
            ..full.clone()
        };
        let d = Dataset::new(vec![cond.clone()]).unwrap();
        let value = nll(&d, &model).unwrap();
        let s = &cond.sequence;
        let c = compensator_between(s, &cond.static_features, &cond.track, &model.params, &model.basis, 2.0, 4.0).unwrap();
        let l1 = model.intensity(2.2, s, &cond.static_features, &cond.track).unwrap();
        let l2 = model.intensity(3.0, s, &cond.static_features, &cond.track).unwrap();
        assert!(l1 > 1.0, "history at t=1 must excite t=2.2");
        assert!((value - (c - l1.ln() - l2.ln())).abs() < 1e-12);
    }
}
