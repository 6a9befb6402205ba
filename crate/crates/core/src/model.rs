//! Domain types and pure evaluation of the semi-parametric Hawkes intensity.
//!
//! The intensity of subject `n` at time `t` (hours) is
//!
//! ```text
//! λ(t) = μ_TI·f0 + μ_TV·f(t) + Σ_{t_i < t} φ(t − t_i),   φ(s) = Σ_m a_m κ_m(s)
//! ```
//!
//! with unnormalized Gaussian bumps `κ_m(s) = exp(−(s − c_m)² / 2σ²)`. Each
//! [`ModelKind`] masks part of this expression; masks are applied at evaluation
//! time so the parameter blocks a kind ignores never influence a result.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use libm::{erf, erfc};

use crate::error::{Error, Result};

/// Length of the static (time-invariant) feature vector.
pub const STATIC_DIM: usize = 31;
/// Length of the time-varying feature vector.
pub const TRACK_DIM: usize = 8;
/// Leading real-valued components of the time-varying vector
/// (latitude, longitude, speed, distance to home).
pub const REAL_TRACK_DIM: usize = 4;
/// Default impact support in hours; older events contribute nothing.
pub const DEFAULT_SUPPORT_HOURS: f64 = 72.0;

/// Names and sizes of the one-hot blocks making up the static vector, in order.
pub const STATIC_BLOCKS: [(&str, usize); 8] = [
    ("exhaled_co", 4),
    ("years_smoked", 3),
    ("age", 3),
    ("sex", 2),
    ("race", 6),
    ("ethnicity", 3),
    ("education", 5),
    ("marital", 5),
];

/// One subject-period of event times on `[0, horizon)`.
///
/// Events before `observed_from` are conditioning history only: they excite
/// the intensity but are not scored by the likelihood.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SequenceRepr")]
pub struct EventSequence {
    subject_id: String,
    events: Vec<f64>,
    horizon: f64,
    #[serde(default)]
    observed_from: f64,
}

#[derive(Deserialize)]
struct SequenceRepr {
    subject_id: String,
    events: Vec<f64>,
    horizon: f64,
    #[serde(default)]
    observed_from: f64,
}

impl TryFrom<SequenceRepr> for EventSequence {
    type Error = Error;

    fn try_from(r: SequenceRepr) -> Result<Self> {
        EventSequence::new(r.subject_id, r.events, r.horizon)?.observed_from(r.observed_from)
    }
}

impl EventSequence {
    pub fn new(subject_id: impl Into<String>, events: Vec<f64>, horizon: f64) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::contract(format!("horizon must be > 0, got {horizon}")));
        }
        for (i, &t) in events.iter().enumerate() {
            if !(t.is_finite() && t >= 0.0 && t < horizon) {
                return Err(Error::contract(format!(
                    "event {i} at {t} lies outside [0, {horizon})"
                )));
            }
            if i > 0 && events[i - 1] >= t {
                return Err(Error::contract(format!(
                    "events must be strictly increasing (index {i})"
                )));
            }
        }
        Ok(Self { subject_id: subject_id.into(), events, horizon, observed_from: 0.0 })
    }

    /// Marks events before `from` as conditioning history.
    pub fn observed_from(mut self, from: f64) -> Result<Self> {
        if !(from.is_finite() && from >= 0.0 && from < self.horizon) {
            return Err(Error::contract(format!(
                "observation start {from} outside [0, {})",
                self.horizon
            )));
        }
        self.observed_from = from;
        Ok(self)
    }

    pub fn subject_id(&self) -> &str {
        &self.subject_id
    }

    pub fn events(&self) -> &[f64] {
        &self.events
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn observation_start(&self) -> f64 {
        self.observed_from
    }

    /// Events scored by the likelihood, i.e. those at or after the observation start.
    pub fn observed_events(&self) -> &[f64] {
        let first = self.events.partition_point(|&t| t < self.observed_from);
        &self.events[first..]
    }

    /// Events strictly before `t`.
    pub fn history_before(&self, t: f64) -> &[f64] {
        &self.events[..self.events.partition_point(|&e| e < t)]
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

/// Binary participant characteristics, one one-hot block per [`STATIC_BLOCKS`] entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct StaticFeatures(Vec<f64>);

impl StaticFeatures {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() != STATIC_DIM {
            return Err(Error::contract(format!(
                "static features need {STATIC_DIM} entries, got {}",
                values.len()
            )));
        }
        let mut offset = 0;
        for (name, len) in STATIC_BLOCKS {
            let block = &values[offset..offset + len];
            if block.iter().any(|&v| v != 0.0 && v != 1.0) {
                return Err(Error::contract(format!("block {name} is not binary")));
            }
            if block.iter().filter(|&&v| v == 1.0).count() != 1 {
                return Err(Error::contract(format!("block {name} must have exactly one 1")));
            }
            offset += len;
        }
        Ok(Self(values))
    }

    /// Builds the vector from the selected option index (0-based) of each block.
    pub fn from_choices(choices: [usize; 8]) -> Result<Self> {
        let mut values = vec![0.0; STATIC_DIM];
        let mut offset = 0;
        for ((name, len), choice) in STATIC_BLOCKS.iter().zip(choices) {
            if choice >= *len {
                return Err(Error::contract(format!(
                    "block {name} has {len} options, got index {choice}"
                )));
            }
            values[offset + choice] = 1.0;
            offset += len;
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for StaticFeatures {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        StaticFeatures::new(v)
    }
}

impl From<StaticFeatures> for Vec<f64> {
    fn from(s: StaticFeatures) -> Self {
        s.0
    }
}

pub type TrackVector = [f64; TRACK_DIM];

/// Time-of-day slot (0 night, 1 morning, 2 afternoon, 3 evening) for a clock hour.
pub fn time_of_day_slot(clock_hour: f64) -> usize {
    (clock_hour.rem_euclid(24.0) / 6.0).floor().min(3.0) as usize
}

/// Checks the layout of one time-varying feature vector: four reals in
/// `[0, 1]` followed by a one-hot time-of-day block.
pub fn validate_track_vector(v: &TrackVector) -> Result<()> {
    if v[..REAL_TRACK_DIM].iter().any(|x| !(0.0..=1.0).contains(x)) {
        return Err(Error::contract(format!("real track features outside [0,1]: {v:?}")));
    }
    let tod = &v[REAL_TRACK_DIM..];
    if tod.iter().any(|&x| x != 0.0 && x != 1.0) || tod.iter().sum::<f64>() != 1.0 {
        return Err(Error::contract(format!("time-of-day block is not one-hot: {v:?}")));
    }
    Ok(())
}

/// Piecewise-constant time-varying features. `values[k]` holds on
/// `[knots[k], knots[k+1])`; the last value holds through `end`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TrackRepr")]
pub struct FeatureTrack {
    knots: Vec<f64>,
    values: Vec<TrackVector>,
    end: f64,
}

#[derive(Deserialize)]
struct TrackRepr {
    knots: Vec<f64>,
    values: Vec<TrackVector>,
    end: f64,
}

impl TryFrom<TrackRepr> for FeatureTrack {
    type Error = Error;

    fn try_from(r: TrackRepr) -> Result<Self> {
        FeatureTrack::new(r.knots, r.values, r.end)
    }
}

impl FeatureTrack {
    pub fn new(knots: Vec<f64>, values: Vec<TrackVector>, end: f64) -> Result<Self> {
        if knots.is_empty() || knots.len() != values.len() {
            return Err(Error::contract("track needs one value per knot and at least one knot"));
        }
        if knots[0] != 0.0 {
            return Err(Error::contract("first knot must be at 0"));
        }
        if knots.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::contract("track knots must be strictly increasing"));
        }
        let last = knots[knots.len() - 1];
        if !(end.is_finite() && end >= last) {
            return Err(Error::contract(format!("track end {end} precedes last knot {last}")));
        }
        values.iter().try_for_each(validate_track_vector)?;
        Ok(Self { knots, values, end })
    }

    /// A single vector held on `[0, end]`.
    pub fn constant(value: TrackVector, end: f64) -> Result<Self> {
        Self::new(vec![0.0], vec![value], end)
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[TrackVector] {
        &self.values
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    fn piece(&self, t: f64) -> usize {
        self.knots.partition_point(|&k| k <= t).saturating_sub(1)
    }

    pub fn value_at(&self, t: f64) -> Result<&TrackVector> {
        if !(t >= 0.0 && t <= self.end) {
            return Err(Error::contract(format!(
                "feature track covers [0, {}], queried at {t}",
                self.end
            )));
        }
        Ok(&self.values[self.piece(t)])
    }

    /// Exact integral of every component over `[from, to]`.
    pub fn integral(&self, from: f64, to: f64) -> Result<TrackVector> {
        if !(0.0 <= from && from <= to && to <= self.end) {
            return Err(Error::contract(format!(
                "cannot integrate track over [{from}, {to}] (covers [0, {}])",
                self.end
            )));
        }
        let mut out = [0.0; TRACK_DIM];
        let mut k = self.piece(from);
        let mut left = from;
        while left < to {
            let right = self.knots.get(k + 1).copied().unwrap_or(f64::INFINITY).min(to);
            let width = right - left;
            for (o, v) in out.iter_mut().zip(&self.values[k]) {
                *o += v * width;
            }
            left = right;
            k += 1;
        }
        Ok(out)
    }

    /// Restricts the track to `[0, end]`.
    pub fn truncated(&self, end: f64) -> Result<Self> {
        let keep = self.knots.partition_point(|&k| k <= end).max(1);
        Self::new(self.knots[..keep].to_vec(), self.values[..keep].to_vec(), end)
    }
}

/// Gaussian bumps spanning the impact function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BasisRepr")]
pub struct BasisSet {
    centers: Vec<f64>,
    sigma: f64,
    support: f64,
}

#[derive(Deserialize)]
struct BasisRepr {
    centers: Vec<f64>,
    sigma: f64,
    #[serde(default = "default_support")]
    support: f64,
}

fn default_support() -> f64 {
    DEFAULT_SUPPORT_HOURS
}

impl TryFrom<BasisRepr> for BasisSet {
    type Error = Error;

    fn try_from(r: BasisRepr) -> Result<Self> {
        BasisSet::with_support(r.centers, r.sigma, r.support)
    }
}

impl BasisSet {
    pub fn new(centers: Vec<f64>, sigma: f64) -> Result<Self> {
        Self::with_support(centers, sigma, DEFAULT_SUPPORT_HOURS)
    }

    pub fn with_support(centers: Vec<f64>, sigma: f64, support: f64) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::contract("basis needs at least one center"));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::contract(format!("basis bandwidth must be > 0, got {sigma}")));
        }
        if !(support.is_finite() && support > 0.0) {
            return Err(Error::contract(format!("impact support must be > 0, got {support}")));
        }
        if centers.iter().any(|c| !(c.is_finite() && *c >= 0.0))
            || centers.windows(2).any(|w| w[0] > w[1])
        {
            return Err(Error::contract("basis centers must be ascending and nonnegative"));
        }
        Ok(Self { centers, sigma, support })
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn support(&self) -> f64 {
        self.support
    }

    /// κ_m(dt), without truncation.
    #[inline]
    pub fn kernel(&self, m: usize, dt: f64) -> f64 {
        let z = (dt - self.centers[m]) / self.sigma;
        (-0.5 * z * z).exp()
    }

    /// K_m(x) = ∫_0^x κ_m(s) ds in closed form (0-based `m`).
    pub fn cumulative(&self, m: usize, x: f64) -> f64 {
        let scale = self.sigma * std::f64::consts::SQRT_2;
        let c = self.centers[m];
        self.sigma * (std::f64::consts::PI / 2.0).sqrt() * erf_diff(-c / scale, (x - c) / scale)
    }

    /// K_m with the integration range clipped to the impact support.
    #[inline]
    pub fn truncated_cumulative(&self, m: usize, x: f64) -> f64 {
        self.cumulative(m, x.clamp(0.0, self.support))
    }
}

/// erf(b) − erf(a) for a ≤ b, avoiding cancellation in the tails.
fn erf_diff(a: f64, b: f64) -> f64 {
    if a >= 0.0 {
        erfc(a) - erfc(b)
    } else if b <= 0.0 {
        erfc(-b) - erfc(-a)
    } else {
        erf(b) - erf(a)
    }
}

/// φ(dt) = Σ_m a_m κ_m(dt); zero beyond the impact support.
pub fn impact_phi(dt: f64, basis: &BasisSet, a: &[f64]) -> Result<f64> {
    if a.len() != basis.len() {
        return Err(Error::contract(format!(
            "impact coefficients have length {}, basis has {}",
            a.len(),
            basis.len()
        )));
    }
    if !(dt >= 0.0) {
        return Err(Error::contract(format!("impact lag must be ≥ 0, got {dt}")));
    }
    Ok(phi_unchecked(dt, basis, a))
}

#[inline]
pub(crate) fn phi_unchecked(dt: f64, basis: &BasisSet, a: &[f64]) -> f64 {
    if dt > basis.support {
        return 0.0;
    }
    a.iter().enumerate().map(|(m, am)| am * basis.kernel(m, dt)).sum()
}

/// K_m(x) for the 1-based basis index `m`, as in the closed-form Gaussian integral.
pub fn basis_cumulative(x: f64, basis: &BasisSet, m: usize) -> Result<f64> {
    if m == 0 || m > basis.len() {
        return Err(Error::contract(format!("basis index {m} outside 1..={}", basis.len())));
    }
    if !(x >= 0.0) {
        return Err(Error::contract(format!("cumulative upper limit must be ≥ 0, got {x}")));
    }
    Ok(basis.cumulative(m - 1, x))
}

/// The four model variants compared in the benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// Features only, no self-excitation.
    Poisson,
    /// Static features plus self-excitation.
    TiSphp,
    /// Static and time-varying features plus self-excitation.
    TvSphp,
    /// Per-subject constant baseline plus a shared impact function.
    Multitask,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] =
        [ModelKind::Poisson, ModelKind::Multitask, ModelKind::TiSphp, ModelKind::TvSphp];

    pub fn uses_static(self) -> bool {
        !matches!(self, ModelKind::Multitask)
    }

    pub fn uses_varying(self) -> bool {
        matches!(self, ModelKind::Poisson | ModelKind::TvSphp)
    }

    pub fn is_self_exciting(self) -> bool {
        !matches!(self, ModelKind::Poisson)
    }

    pub fn uses_subject_baseline(self) -> bool {
        matches!(self, ModelKind::Multitask)
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Poisson => "poisson",
            ModelKind::TiSphp => "ti-sphp",
            ModelKind::TvSphp => "tv-sphp",
            ModelKind::Multitask => "multitask",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "poisson" => Ok(ModelKind::Poisson),
            "ti-sphp" => Ok(ModelKind::TiSphp),
            "tv-sphp" => Ok(ModelKind::TvSphp),
            "multitask" => Ok(ModelKind::Multitask),
            other => Err(Error::Parse(format!("unknown model kind `{other}`"))),
        }
    }
}

/// Nonnegative parameters `θ = [μ_TI; μ_TV; a]`, plus per-subject baselines
/// for [`ModelKind::Multitask`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub kind: ModelKind,
    pub mu_ti: Vec<f64>,
    pub mu_tv: Vec<f64>,
    pub a: Vec<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub mu_subject: BTreeMap<String, f64>,
}

impl ModelParams {
    pub fn zeros(kind: ModelKind, basis_len: usize) -> Self {
        Self {
            kind,
            mu_ti: vec![0.0; STATIC_DIM],
            mu_tv: vec![0.0; TRACK_DIM],
            a: vec![0.0; basis_len],
            mu_subject: BTreeMap::new(),
        }
    }

    pub fn validate(&self, basis: &BasisSet) -> Result<()> {
        if self.mu_ti.len() != STATIC_DIM || self.mu_tv.len() != TRACK_DIM {
            return Err(Error::contract(format!(
                "parameter blocks have lengths ({}, {}), expected ({STATIC_DIM}, {TRACK_DIM})",
                self.mu_ti.len(),
                self.mu_tv.len()
            )));
        }
        if self.a.len() != basis.len() {
            return Err(Error::contract(format!(
                "impact coefficients have length {}, basis has {}",
                self.a.len(),
                basis.len()
            )));
        }
        let all = self.mu_ti.iter().chain(&self.mu_tv).chain(&self.a).chain(self.mu_subject.values());
        for v in all {
            if !(v.is_finite() && *v >= 0.0) {
                return Err(Error::contract(format!("parameters must be finite and ≥ 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Copy with every block the kind ignores set to zero.
    pub fn masked(&self) -> Self {
        let mut p = self.clone();
        if !p.kind.uses_static() {
            p.mu_ti.iter_mut().for_each(|v| *v = 0.0);
        }
        if !p.kind.uses_varying() {
            p.mu_tv.iter_mut().for_each(|v| *v = 0.0);
        }
        if !p.kind.is_self_exciting() {
            p.a.iter_mut().for_each(|v| *v = 0.0);
        }
        if !p.kind.uses_subject_baseline() {
            p.mu_subject.clear();
        }
        p
    }

    /// ‖θ‖₁ over the blocks active for this kind.
    pub fn l1_norm(&self) -> f64 {
        let m = self.masked();
        m.mu_ti.iter().chain(&m.mu_tv).chain(&m.a).chain(m.mu_subject.values()).map(|v| v.abs()).sum()
    }

    /// Branching ratio ∫φ over the impact support.
    pub fn branching_ratio(&self, basis: &BasisSet) -> f64 {
        if !self.kind.is_self_exciting() {
            return 0.0;
        }
        self.a
            .iter()
            .enumerate()
            .map(|(m, am)| am * basis.truncated_cumulative(m, basis.support()))
            .sum()
    }

    pub(crate) fn subject_baseline(&self, subject: &str) -> Result<f64> {
        self.mu_subject
            .get(subject)
            .copied()
            .ok_or_else(|| Error::UnknownSubject(subject.to_owned()))
    }
}

/// History-independent part of the intensity.
pub fn exogenous_rate(
    params: &ModelParams,
    subject: &str,
    static_features: &StaticFeatures,
    f: &TrackVector,
) -> Result<f64> {
    if params.kind.uses_subject_baseline() {
        return params.subject_baseline(subject);
    }
    let mut rate = dot(&params.mu_ti, static_features.as_slice());
    if params.kind.uses_varying() {
        rate += dot(&params.mu_tv, f);
    }
    Ok(rate)
}

/// Σ_{t_i < t} φ(t − t_i) over a sorted history, honoring the impact support.
pub fn endogenous_rate(t: f64, history: &[f64], basis: &BasisSet, a: &[f64]) -> f64 {
    let lo = history.partition_point(|&e| e < t - basis.support);
    let hi = history.partition_point(|&e| e < t);
    history[lo..hi].iter().map(|&e| phi_unchecked(t - e, basis, a)).sum()
}

/// λ(t) for one sequence.
pub fn intensity(
    t: f64,
    seq: &EventSequence,
    static_features: &StaticFeatures,
    track: &FeatureTrack,
    params: &ModelParams,
    basis: &BasisSet,
) -> Result<f64> {
    if !(t >= 0.0 && t <= seq.horizon) {
        return Err(Error::contract(format!("t = {t} outside [0, {}]", seq.horizon)));
    }
    if params.a.len() != basis.len() {
        return Err(Error::contract("impact coefficients do not match the basis"));
    }
    let f = track.value_at(t)?;
    let mut rate = exogenous_rate(params, &seq.subject_id, static_features, f)?;
    if params.kind.is_self_exciting() {
        rate += endogenous_rate(t, &seq.events, basis, &params.a);
    }
    Ok(rate)
}

/// ∫_0^upto λ(s) ds in closed form.
pub fn compensator(
    seq: &EventSequence,
    static_features: &StaticFeatures,
    track: &FeatureTrack,
    params: &ModelParams,
    basis: &BasisSet,
    upto: f64,
) -> Result<f64> {
    if !(upto > 0.0 && upto <= seq.horizon) {
        return Err(Error::contract(format!("upto = {upto} outside (0, {}]", seq.horizon)));
    }
    compensator_between(seq, static_features, track, params, basis, 0.0, upto)
}

/// ∫_from^to λ(s) ds in closed form.
pub fn compensator_between(
    seq: &EventSequence,
    static_features: &StaticFeatures,
    track: &FeatureTrack,
    params: &ModelParams,
    basis: &BasisSet,
    from: f64,
    to: f64,
) -> Result<f64> {
    if !(0.0 <= from && from <= to && to <= seq.horizon) {
        return Err(Error::contract(format!(
            "cannot integrate over [{from}, {to}] on horizon {}",
            seq.horizon
        )));
    }
    if params.a.len() != basis.len() {
        return Err(Error::contract("impact coefficients do not match the basis"));
    }
    let width = to - from;
    let mut total = if params.kind.uses_subject_baseline() {
        params.subject_baseline(&seq.subject_id)? * width
    } else {
        let mut exo = dot(&params.mu_ti, static_features.as_slice()) * width;
        if params.kind.uses_varying() {
            exo += dot(&params.mu_tv, &track.integral(from, to)?);
        }
        exo
    };
    if params.kind.is_self_exciting() {
        total += endogenous_integral(seq.history_before(to), from, to, basis, &params.a);
    }
    Ok(total)
}

/// ∫_from^to Σ_i φ(s − t_i) ds for events `history`, all assumed < `to`.
pub(crate) fn endogenous_integral(history: &[f64], from: f64, to: f64, basis: &BasisSet, a: &[f64]) -> f64 {
    let lo = history.partition_point(|&e| e < from - basis.support);
    history[lo..]
        .iter()
        .map(|&e| {
            a.iter()
                .enumerate()
                .map(|(m, am)| {
                    am * (basis.truncated_cumulative(m, to - e)
                        - basis.truncated_cumulative(m, (from - e).max(0.0)))
                })
                .sum::<f64>()
        })
        .sum()
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Parameters bundled with the basis they refer to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HawkesModel {
    pub params: ModelParams,
    pub basis: BasisSet,
}

impl HawkesModel {
    pub fn new(params: ModelParams, basis: BasisSet) -> Result<Self> {
        params.validate(&basis)?;
        Ok(Self { params, basis })
    }

    pub fn kind(&self) -> ModelKind {
        self.params.kind
    }

    pub fn intensity(
        &self,
        t: f64,
        seq: &EventSequence,
        static_features: &StaticFeatures,
        track: &FeatureTrack,
    ) -> Result<f64> {
        intensity(t, seq, static_features, track, &self.params, &self.basis)
    }

    pub fn compensator(
        &self,
        seq: &EventSequence,
        static_features: &StaticFeatures,
        track: &FeatureTrack,
        upto: f64,
    ) -> Result<f64> {
        compensator(seq, static_features, track, &self.params, &self.basis, upto)
    }
}
