//! Reliability screening of self-reported button presses.
//!
//! Each observed day is modelled as one Bernoulli trial per observed minute
//! with success probability `cigarettes_per_day / 1440`; the observed press
//! count is compared with that expectation by a two-sided test.

use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, Discrete};

use crate::error::{Error, Result};

pub const SCREENING_ALPHA: f64 = 0.01;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScreeningTest {
    /// Exact two-sided binomial test (probabilities no larger than the observed one).
    #[default]
    ExactBinomial,
    /// Pearson chi-square (1 df) on the count against its binomial expectation.
    ChiSquare,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningVerdict {
    pub keep: bool,
    pub per_day_p: Vec<f64>,
    pub whole_period_p: f64,
    pub flagged_days: usize,
}

fn p_value(count: u64, hours: f64, expected_cpd: f64, test: ScreeningTest) -> Result<f64> {
    let trials = ((hours * 60.0).round() as u64).max(count).max(1);
    let p = (expected_cpd / 1440.0).min(1.0);
    match test {
        ScreeningTest::ExactBinomial => {
            let dist = Binomial::new(p, trials).map_err(|e| Error::contract(e.to_string()))?;
            let observed = dist.pmf(count);
            let cutoff = observed * (1.0 + 1e-7);
            let total: f64 = (0..=trials).map(|k| dist.pmf(k)).filter(|&q| q <= cutoff).sum();
            Ok(total.min(1.0))
        }
        ScreeningTest::ChiSquare => {
            let mean = trials as f64 * p;
            let var = mean * (1.0 - p);
            if var <= 0.0 {
                return Ok(if (count as f64 - mean).abs() < 0.5 { 1.0 } else { 0.0 });
            }
            let stat = (count as f64 - mean).powi(2) / var;
            let chi = ChiSquared::new(1.0).expect("1 degree of freedom");
            Ok(1.0 - chi.cdf(stat))
        }
    }
}

/// Flags days whose press count is implausible given the self-reported rate.
/// A participant is excluded when two or more days are flagged, or when the
/// whole collection period is.
pub fn screen_participant(
    daily_press_counts: &[u64],
    observed_hours: &[f64],
    expected_cpd: f64,
    test: ScreeningTest,
) -> Result<ScreeningVerdict> {
    if !(expected_cpd > 0.0 && expected_cpd.is_finite()) {
        return Err(Error::contract(format!("expected cigarettes per day must be > 0, got {expected_cpd}")));
    }
    if daily_press_counts.is_empty() || daily_press_counts.len() != observed_hours.len() {
        return Err(Error::contract("need one observed duration per day and at least one day"));
    }
    if observed_hours.iter().any(|h| !(*h > 0.0 && *h <= 24.0)) {
        return Err(Error::contract("observed hours per day must lie in (0, 24]"));
    }
    let per_day_p = daily_press_counts
        .iter()
        .zip(observed_hours)
        .map(|(&c, &h)| p_value(c, h, expected_cpd, test))
        .collect::<Result<Vec<_>>>()?;
    let whole_period_p =
        p_value(daily_press_counts.iter().sum(), observed_hours.iter().sum(), expected_cpd, test)?;
    let flagged_days = per_day_p.iter().filter(|&&p| p < SCREENING_ALPHA).count();
    Ok(ScreeningVerdict {
        keep: flagged_days < 2 && whole_period_p >= SCREENING_ALPHA,
        per_day_p,
        whole_period_p,
        flagged_days,
    })
}
