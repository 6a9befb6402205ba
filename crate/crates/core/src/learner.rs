//! ADMM fitting of the L1-regularized likelihood, basis selection and γ cross-validation.
//!
//! Each iteration takes one projected gradient step on the augmented
//! Lagrangian, soft-thresholds the consensus variable and updates the scaled
//! dual:
//!
//! ```text
//! θ ← (θ − δ(∇L(θ) + ρ(θ − z + y)))₊
//! z ← S_{γ/ρ}(θ + y)
//! y ← y + θ − z
//! ```

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingestion::NormalizationStats;
use crate::likelihood::{nll, Dataset, Design, ParamLayout, TvIntegral};
use crate::model::{BasisSet, HawkesModel, ModelKind, ModelParams};
use crate::parallel::map_indexed;
use crate::seeds;

/// Normalization applied to the likelihood term while fitting.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossScale {
    /// Divide the likelihood and its gradient by the number of scored events.
    #[default]
    PerEvent,
    /// Use the summed likelihood as is.
    Total,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub kind: ModelKind,
    pub iterations: usize,
    pub learning_rate: f64,
    pub gamma: f64,
    pub rho: f64,
    pub seed: u64,
    pub loss_scale: LossScale,
    pub tv_integral: TvIntegral,
    /// Hold the impact coefficients at zero regardless of the kind.
    pub mask_impact: bool,
    /// Stop once ‖θ − z‖₂ drops below this value. Off by default.
    pub early_stop: Option<f64>,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            kind: ModelKind::TvSphp,
            iterations: 30,
            learning_rate: 0.01,
            gamma: 0.2,
            rho: 1.0,
            seed: 0,
            loss_scale: LossScale::PerEvent,
            tv_integral: TvIntegral::Exact,
            mask_impact: false,
            early_stop: None,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(Error::contract(format!("{field}: {msg}")));
        if self.iterations == 0 {
            return bad("iterations", "must be ≥ 1".into());
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate", format!("must be > 0, got {}", self.learning_rate));
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return bad("gamma", format!("must be ≥ 0, got {}", self.gamma));
        }
        if !(self.rho.is_finite() && self.rho > 0.0) {
            return bad("rho", format!("must be > 0, got {}", self.rho));
        }
        Ok(())
    }
}

/// Fitted parameters plus per-iteration diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub params: ModelParams,
    pub basis: BasisSet,
    /// Regularized objective (with the configured loss scale) at each θ⁽ʲ⁾.
    pub objective_trace: Vec<f64>,
    /// ‖θ⁽ʲ⁾ − z⁽ʲ⁾‖₂ at each iteration.
    pub primal_residual_trace: Vec<f64>,
    /// Scored events whose intensity fell below the log floor, summed over iterations.
    pub floor_activation_count: usize,
    pub config: FitConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalization: Option<NormalizationStats>,
}

impl FitReport {
    pub fn model(&self) -> HawkesModel {
        HawkesModel { params: self.params.clone(), basis: self.basis.clone() }
    }
}

/// Elementwise sign(v)·max(|v| − τ, 0).
pub fn soft_threshold(v: &[f64], tau: f64) -> Vec<f64> {
    assert!(tau >= 0.0, "threshold must be ≥ 0");
    v.iter().map(|&x| shrink(x, tau)).collect()
}

#[inline]
fn shrink(x: f64, tau: f64) -> f64 {
    x.signum() * (x.abs() - tau).max(0.0)
}

fn layout_for(data: &Dataset, basis: &BasisSet, kind: ModelKind) -> ParamLayout {
    let subjects = if kind.uses_subject_baseline() { data.subjects() } else { Vec::new() };
    ParamLayout::new(basis.len(), subjects)
}

/// Runs the ADMM iterations for exactly `config.iterations` steps (or until
/// the optional early stop fires) and returns θ⁽ᴶ⁾.
pub fn admm_fit(data: &Dataset, basis: &BasisSet, config: &FitConfig) -> Result<FitReport> {
    config.validate()?;
    let kind = config.kind;
    let layout = layout_for(data, basis, kind);
    let mut active = layout.active(kind);
    if config.mask_impact {
        active[layout.impact()].iter_mut().for_each(|v| *v = false);
    }
    let design = Design::build(data, basis, kind, &layout)?;
    let scale = match config.loss_scale {
        LossScale::PerEvent => 1.0 / design.event_count().max(1) as f64,
        LossScale::Total => 1.0,
    };

    // Every component draws from the stream so masking never shifts the others.
    let mut rng = seeds::rng(config.seed, "admm-init", 0);
    let mut theta: Vec<f64> = active
        .iter()
        .map(|&on| {
            let draw = rng.random::<f64>();
            if on { draw } else { 0.0 }
        })
        .collect();
    let mut z = theta.clone();
    let mut y = vec![0.0; theta.len()];

    let (delta, rho, gamma) = (config.learning_rate, config.rho, config.gamma);
    let tau = gamma / rho;
    let mut objective_trace = Vec::with_capacity(config.iterations);
    let mut residual_trace = Vec::with_capacity(config.iterations);
    let mut floor_hits = 0;

    for iteration in 1..=config.iterations {
        let grad = design.grad(&theta, config.tv_integral)?;
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::FitDivergence { iteration, what: "gradient" });
        }
        for k in 0..theta.len() {
            if !active[k] {
                continue;
            }
            let step = grad[k] * scale + rho * (theta[k] - z[k] + y[k]);
            theta[k] = (theta[k] - delta * step).max(0.0);
        }
        for k in 0..theta.len() {
            if active[k] {
                z[k] = shrink(theta[k] + y[k], tau);
                y[k] += theta[k] - z[k];
            }
        }

        let eval = design.nll(&theta)?;
        floor_hits += eval.floor_hits;
        let penalty: f64 = theta.iter().zip(&active).filter(|(_, &on)| on).map(|(v, _)| v.abs()).sum();
        let value = eval.value * scale + gamma * penalty;
        if !value.is_finite() {
            return Err(Error::FitDivergence { iteration, what: "objective" });
        }
        let residual = theta.iter().zip(&z).map(|(t, z)| (t - z).powi(2)).sum::<f64>().sqrt();
        objective_trace.push(value);
        residual_trace.push(residual);
        log::debug!("admm {kind} iteration {iteration}: objective {value:.6e}, residual {residual:.3e}");
        if config.early_stop.is_some_and(|tol| residual < tol) {
            break;
        }
    }

    Ok(FitReport {
        params: layout.unflatten(kind, &theta),
        basis: basis.clone(),
        objective_trace,
        primal_residual_trace: residual_trace,
        floor_activation_count: floor_hits,
        config: config.clone(),
        normalization: data.normalization().cloned(),
    })
}

/// Basis selection settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BasisSelection {
    pub support: f64,
    pub max_basis: usize,
}

impl Default for BasisSelection {
    fn default() -> Self {
        Self { support: crate::model::DEFAULT_SUPPORT_HOURS, max_basis: 64 }
    }
}

/// Silverman's rule of thumb, `0.9·min(sd, IQR/1.34)·n^(−1/5)`, with the
/// sample standard deviation and linearly interpolated quartiles.
pub fn silverman_bandwidth(sample: &[f64]) -> Result<f64> {
    let n = sample.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!("need at least 2 inter-event gaps, have {n}")));
    }
    let mean = sample.iter().sum::<f64>() / n as f64;
    let var = sample.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let robust = iqr / 1.34;
    let spread = if robust > 0.0 { sd.min(robust) } else { sd };
    let h = 0.9 * spread * (n as f64).powf(-0.2);
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InsufficientData("inter-event gaps have no spread".into()));
    }
    Ok(h)
}

fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Uniform centers on `[0, support]` with spacing `h` and σ = h/2.
pub fn basis_from_bandwidth(support: f64, h: f64, max_basis: usize) -> Result<BasisSet> {
    if !(support > 0.0 && h > 0.0) || max_basis == 0 {
        return Err(Error::contract("support, bandwidth and max_basis must be positive"));
    }
    let mut m = (support / h).ceil() as usize + 1;
    let mut spacing = h;
    if m > max_basis {
        m = max_basis;
        spacing = if m > 1 { support / (m - 1) as f64 } else { support };
    }
    let centers = (0..m).map(|i| (i as f64 * spacing).min(support)).collect();
    BasisSet::with_support(centers, spacing / 2.0, support)
}

/// Picks the basis from the spread of observed inter-event gaps.
pub fn select_basis(data: &Dataset, selection: &BasisSelection) -> Result<BasisSet> {
    if !(selection.support > 0.0) {
        return Err(Error::contract("support must be > 0"));
    }
    let gaps: Vec<f64> = data
        .entries()
        .iter()
        .flat_map(|e| e.sequence.events().windows(2).map(|w| (w[1] - w[0]).clamp(0.0, selection.support)))
        .collect();
    let h = silverman_bandwidth(&gaps)?;
    basis_from_bandwidth(selection.support, h, selection.max_basis)
}

/// Outcome of a γ grid search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    pub gamma: f64,
    /// `(γ, mean held-out log-likelihood)` per grid value; empty for a singleton grid.
    pub scores: Vec<(f64, f64)>,
}

pub const DEFAULT_GAMMA_GRID: [f64; 6] = [0.02, 0.05, 0.1, 0.2, 0.5, 1.0];

/// Sequence-level K-fold selection of γ by mean held-out log-likelihood.
/// Ties go to the larger γ.
pub fn cross_validate_gamma(
    data: &Dataset,
    basis: &BasisSet,
    grid: &[f64],
    folds: usize,
    config: &FitConfig,
) -> Result<CrossValidation> {
    if grid.is_empty() {
        return Err(Error::contract("γ grid is empty"));
    }
    if folds < 2 || data.len() < folds {
        return Err(Error::contract(format!(
            "{folds}-fold cross-validation needs ≥ 2 folds and ≥ {folds} sequences (have {})",
            data.len()
        )));
    }
    if grid.len() == 1 {
        return Ok(CrossValidation { gamma: grid[0], scores: Vec::new() });
    }
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut seeds::rng(config.seed, "cv-folds", 0));
    let assignment: Vec<Vec<usize>> =
        (0..folds).map(|k| order.iter().skip(k).step_by(folds).copied().collect()).collect();

    let mut scores = Vec::with_capacity(grid.len());
    for &gamma in grid {
        let cfg = FitConfig { gamma, ..config.clone() };
        let per_fold = map_indexed(folds, |k| -> Result<f64> {
            let held: &[usize] = &assignment[k];
            let train: Vec<usize> = (0..data.len()).filter(|i| !held.contains(i)).collect();
            let report = admm_fit(&data.subset(&train)?, basis, &cfg)?;
            Ok(-nll(&data.subset(held)?, &report.model())?)
        });
        let total: f64 = per_fold.into_iter().collect::<Result<Vec<_>>>()?.iter().sum();
        scores.push((gamma, total / folds as f64));
    }
    let mut best = scores[0];
    for &(g, s) in &scores[1..] {
        if s > best.1 || (s == best.1 && g > best.0) {
            best = (g, s);
        }
    }
    Ok(CrossValidation { gamma: best.0, scores })
}
