//! Prediction metrics and the model-comparison benchmark.

use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learner::{admm_fit, FitConfig, FitReport};
use crate::likelihood::{nll, Dataset};
use crate::model::{BasisSet, HawkesModel, ModelKind};
use crate::parallel::map_indexed;
use crate::seeds;
use crate::simulator::{predict_expected_count, Conditioning, ThinningConfig};

pub const REPORT_FORMAT: &str = "sphp-benchmark";
pub const REPORT_VERSION: u32 = 1;
pub const DEFAULT_WINDOWS_MIN: [f64; 6] = [10.0, 20.0, 30.0, 40.0, 50.0, 60.0];

fn same_len(a: usize, b: usize) -> Result<()> {
    if a != b || a == 0 {
        return Err(Error::contract(format!("need equal nonzero lengths, got {a} and {b}")));
    }
    Ok(())
}

/// Mean absolute error between predicted and observed counts.
pub fn mae(predicted: &[f64], actual: &[f64]) -> Result<f64> {
    same_len(predicted.len(), actual.len())?;
    Ok(predicted.iter().zip(actual).map(|(p, a)| (p - a).abs()).sum::<f64>() / predicted.len() as f64)
}

/// Share of windows where "N̂ ≥ threshold" agrees with "at least one event".
pub fn binary_accuracy(predicted: &[f64], actual: &[f64], threshold: f64) -> Result<f64> {
    same_len(predicted.len(), actual.len())?;
    let hits = predicted.iter().zip(actual).filter(|(p, a)| (**p >= threshold) == (**a >= 1.0)).count();
    Ok(hits as f64 / predicted.len() as f64)
}

/// Log-likelihood of the observed part of each test sequence; earlier
/// events only condition the intensity.
pub fn test_loglik(test: &Dataset, model: &HawkesModel) -> Result<f64> {
    Ok(-nll(test, model)?)
}

/// Where prediction windows start inside each test sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum Anchoring {
    /// One window per sequence, at the start of the observed part.
    TestStart,
    /// Windows every `step_hours` from the observed start while they fit
    /// before the horizon; metrics average over all of them.
    Sliding { step_hours: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkConfig {
    pub kinds: Vec<ModelKind>,
    pub windows_min: Vec<f64>,
    pub trials: usize,
    pub repeats: usize,
    pub threshold: f64,
    pub anchoring: Anchoring,
    /// Shared fit settings; `kind` is replaced per model kind.
    pub fit: FitConfig,
    pub thinning: ThinningConfig,
    pub seed: u64,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            kinds: ModelKind::ALL.to_vec(),
            windows_min: DEFAULT_WINDOWS_MIN.to_vec(),
            trials: 20,
            repeats: 5,
            threshold: 0.5,
            anchoring: Anchoring::TestStart,
            fit: FitConfig::default(),
            thinning: ThinningConfig::default(),
            seed: 0,
        }
    }
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.kinds.is_empty() || self.windows_min.is_empty() {
            return Err(Error::contract("benchmark needs at least one kind and one window"));
        }
        if self.windows_min.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::contract("windows_min: every window must be positive"));
        }
        if self.trials == 0 || self.repeats == 0 {
            return Err(Error::contract("trials and repeats must be ≥ 1"));
        }
        if let Anchoring::Sliding { step_hours } = self.anchoring {
            if !(step_hours > 0.0) {
                return Err(Error::contract("anchoring.step_hours must be positive"));
            }
        }
        self.fit.validate()
    }
}

/// One (kind, window) entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkCell {
    pub kind: ModelKind,
    pub window_min: f64,
    /// MAE averaged over repeats.
    pub mae: f64,
    /// Standard deviation of the MAE across repeats.
    pub mae_sd: f64,
    /// Mean over predictions of the per-trial count standard deviation.
    pub trial_sd: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KindSummary {
    pub kind: ModelKind,
    pub test_loglik: f64,
    pub final_objective: f64,
}

/// Per prediction, averaged over repeats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub kind: ModelKind,
    pub window_min: f64,
    pub sequence: usize,
    pub subject_id: String,
    pub anchor: f64,
    pub predicted: f64,
    pub actual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub format: String,
    pub version: u32,
    pub config: BenchmarkConfig,
    pub basis: BasisSet,
    pub cells: Vec<BenchmarkCell>,
    pub kinds: Vec<KindSummary>,
    #[serde(default)]
    pub residuals: Vec<Residual>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<serde_json::Value>,
}

impl BenchmarkReport {
    pub fn cell(&self, kind: ModelKind, window_min: f64) -> Option<&BenchmarkCell> {
        self.cells.iter().find(|c| c.kind == kind && c.window_min == window_min)
    }

    pub fn summary(&self, kind: ModelKind) -> Option<&KindSummary> {
        self.kinds.iter().find(|k| k.kind == kind)
    }
}

fn anchors(test: &Dataset, anchoring: Anchoring, window_h: f64) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    for (i, e) in test.entries().iter().enumerate() {
        let s = &e.sequence;
        let start = s.observation_start();
        match anchoring {
            Anchoring::TestStart => out.push((i, start)),
            Anchoring::Sliding { step_hours } => {
                let mut t = start;
                while t + window_h <= s.horizon() + 1e-9 {
                    out.push((i, t));
                    t += step_hours;
                }
            }
        }
    }
    out
}

fn mean_sd(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let sd = if x.len() > 1 { (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() } else { 0.0 };
    (mean, sd)
}

fn evaluate_window(
    model: &HawkesModel,
    kind_index: usize,
    window_index: usize,
    window_min: f64,
    test: &Dataset,
    cfg: &BenchmarkConfig,
) -> Result<(BenchmarkCell, Vec<Residual>)> {
    let window_h = window_min / 60.0;
    let points = anchors(test, cfg.anchoring, window_h);
    if points.is_empty() {
        return Err(Error::InsufficientData(format!("no {window_min}-minute window fits in the test sequences")));
    }
    let actual: Vec<f64> = points
        .iter()
        .map(|&(i, t0)| {
            let ev = test.entries()[i].sequence.events();
            (ev.partition_point(|&e| e < t0 + window_h) - ev.partition_point(|&e| e < t0)) as f64
        })
        .collect();
    let conds = points
        .iter()
        .map(|&(i, t0)| Conditioning::at(&test.entries()[i], t0))
        .collect::<Result<Vec<_>>>()?;

    let cell_seed = seeds::derive(seeds::derive(cfg.seed, "bench-kind", kind_index as u64), "bench-window", window_index as u64);
    let mut maes = Vec::with_capacity(cfg.repeats);
    let mut accs = Vec::with_capacity(cfg.repeats);
    let mut sum_pred = vec![0.0; points.len()];
    let mut sum_trial_sd = 0.0;
    for r in 0..cfg.repeats {
        let repeat_seed = seeds::derive(cell_seed, "bench-repeat", r as u64);
        let preds = map_indexed(conds.len(), |k| {
            predict_expected_count(
                model,
                &conds[k],
                window_h,
                cfg.trials,
                &cfg.thinning,
                seeds::derive(repeat_seed, "bench-prediction", k as u64),
            )
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        let est: Vec<f64> = preds.iter().map(|p| p.expected_count).collect();
        maes.push(mae(&est, &actual)?);
        accs.push(binary_accuracy(&est, &actual, cfg.threshold)?);
        for (s, p) in sum_pred.iter_mut().zip(&preds) {
            *s += p.expected_count;
        }
        sum_trial_sd += preds.iter().map(|p| p.trial_sd).sum::<f64>() / preds.len() as f64;
    }
    let (mae_mean, mae_sd) = mean_sd(&maes);
    let kind = model.kind();
    let residuals = points
        .iter()
        .zip(&actual)
        .zip(&sum_pred)
        .map(|((&(i, t0), &a), &s)| Residual {
            kind,
            window_min,
            sequence: i,
            subject_id: test.entries()[i].sequence.subject_id().to_owned(),
            anchor: t0,
            predicted: s / cfg.repeats as f64,
            actual: a,
        })
        .collect();
    let cell = BenchmarkCell {
        kind,
        window_min,
        mae: mae_mean,
        mae_sd,
        trial_sd: sum_trial_sd / cfg.repeats as f64,
        accuracy: mean_sd(&accs).0,
    };
    Ok((cell, residuals))
}

/// Fits every configured kind on `train`, then scores log-likelihood and
/// windowed count predictions on `test`. Cells are ordered by kind, then window.
pub fn run_benchmark(train: &Dataset, test: &Dataset, basis: &BasisSet, cfg: &BenchmarkConfig) -> Result<BenchmarkReport> {
    cfg.validate()?;
    let fits = map_indexed(cfg.kinds.len(), |k| -> Result<FitReport> {
        let fit = FitConfig { kind: cfg.kinds[k], ..cfg.fit.clone() };
        admm_fit(train, basis, &fit)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let mut kinds = Vec::with_capacity(fits.len());
    for f in &fits {
        kinds.push(KindSummary {
            kind: f.params.kind,
            test_loglik: test_loglik(test, &f.model())?,
            final_objective: f.objective_trace.last().copied().unwrap_or(f64::NAN),
        });
    }

    let nw = cfg.windows_min.len();
    let evaluated = map_indexed(fits.len() * nw, |idx| {
        let (k, w) = (idx / nw, idx % nw);
        evaluate_window(&fits[k].model(), k, w, cfg.windows_min[w], test, cfg)
    });
    let mut cells = Vec::with_capacity(evaluated.len());
    let mut residuals = Vec::new();
    for e in evaluated {
        let (cell, res) = e?;
        cells.push(cell);
        residuals.extend(res);
    }
    Ok(BenchmarkReport {
        format: REPORT_FORMAT.into(),
        version: REPORT_VERSION,
        config: cfg.clone(),
        basis: basis.clone(),
        cells,
        kinds,
        residuals,
        manifest: None,
    })
}

/// Two aligned tables: MAE per window plus test log-likelihood, then the SD of MAE.
pub fn render_table(report: &BenchmarkReport) -> String {
    let windows = &report.config.windows_min;
    let mut out = String::new();
    let header = |out: &mut String, title: &str, extra: &str| {
        let _ = write!(out, "{title:<12}");
        for w in windows {
            let _ = write!(out, "{:>10}", format!("{w} min"));
        }
        let _ = writeln!(out, "{extra}");
    };
    header(&mut out, "MAE", &format!("{:>14}", "test loglik"));
    for s in &report.kinds {
        let _ = write!(out, "{:<12}", s.kind.name());
        for w in windows {
            let v = report.cell(s.kind, *w).map_or(f64::NAN, |c| c.mae);
            let _ = write!(out, "{v:>10.3}");
        }
        let _ = writeln!(out, "{:>14.1}", s.test_loglik);
    }
    out.push('\n');
    header(&mut out, "SD(MAE)", "");
    for s in &report.kinds {
        let _ = write!(out, "{:<12}", s.kind.name());
        for w in windows {
            let v = report.cell(s.kind, *w).map_or(f64::NAN, |c| c.mae_sd);
            let _ = write!(out, "{v:>10.3}");
        }
        out.push('\n');
    }
    out.push('\n');
    header(&mut out, "accuracy", "");
    for s in &report.kinds {
        let _ = write!(out, "{:<12}", s.kind.name());
        for w in windows {
            let v = report.cell(s.kind, *w).map_or(f64::NAN, |c| c.accuracy);
            let _ = write!(out, "{:>10}", format!("{:.1}%", 100.0 * v));
        }
        out.push('\n');
    }
    out
}

pub fn write_residuals_csv<W: Write>(w: W, report: &BenchmarkReport) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["kind", "window_min", "sequence", "subject_id", "anchor_h", "predicted", "actual"])?;
    for r in &report.residuals {
        wtr.write_record([
            r.kind.name().to_string(),
            r.window_min.to_string(),
            r.sequence.to_string(),
            r.subject_id.clone(),
            r.anchor.to_string(),
            r.predicted.to_string(),
            r.actual.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mae_examples() {
        assert_eq!(mae(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mae(&[0.5, 1.5], &[1.0, 1.0]).unwrap(), 0.5);
        assert!(mae(&[1.0], &[1.0, 2.0]).is_err());
        assert!(mae(&[], &[]).is_err());
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(binary_accuracy(&[0.0; 4], &[0.0; 4], 0.5).unwrap(), 1.0);
        let actual = [0.0, 1.0, 2.0, 0.0];
        assert_eq!(binary_accuracy(&[0.0; 4], &actual, 0.0).unwrap(), 0.5);
        assert_eq!(binary_accuracy(&[0.4, 0.6, 3.0, 0.5], &actual, 0.5).unwrap(), 0.75);
        assert!(binary_accuracy(&[1.0], &[], 0.5).is_err());
    }

    #[test]
    fn sliding_anchors_fit_inside_horizon() {
        use crate::likelihood::SequenceEntry;
        use crate::model::{EventSequence, FeatureTrack, StaticFeatures};
        let mut f = [0.0; 8];
        f[4] = 1.0;
        let seq = EventSequence::new("s", vec![], 10.0).unwrap().observed_from(7.0).unwrap();
        let e = SequenceEntry::new(seq, StaticFeatures::from_choices([0; 8]).unwrap(), FeatureTrack::constant(f, 10.0).unwrap())
            .unwrap();
        let d = Dataset::new(vec![e]).unwrap();
        let a: Vec<f64> = anchors(&d, Anchoring::Sliding { step_hours: 1.0 }, 1.0).into_iter().map(|p| p.1).collect();
        assert_eq!(a, vec![7.0, 8.0, 9.0]);
        assert_eq!(anchors(&d, Anchoring::TestStart, 1.0), vec![(0, 7.0)]);
    }
}
