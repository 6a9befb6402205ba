use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::likelihood::{Dataset, SequenceEntry};
use crate::model::EventSequence;

/// Sequence length and the training prefix within it, in hours.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitLayout {
    pub sequence_hours: f64,
    pub train_hours: f64,
}

impl Default for SplitLayout {
    fn default() -> Self {
        Self { sequence_hours: 96.0, train_hours: 72.0 }
    }
}

impl SplitLayout {
    pub fn validate(&self) -> Result<()> {
        if !(self.sequence_hours > 0.0 && self.train_hours > 0.0 && self.train_hours < self.sequence_hours) {
            return Err(Error::contract("split layout needs 0 < train_hours < sequence_hours"));
        }
        Ok(())
    }
}

/// Start offsets of consecutive non-overlapping windows that fit in
/// `coverage_hours`; a trailing remainder is dropped.
pub fn sequence_windows(coverage_hours: f64, layout: &SplitLayout) -> Result<Vec<f64>> {
    layout.validate()?;
    if !(coverage_hours >= 0.0) {
        return Err(Error::contract(format!("coverage must be nonnegative, got {coverage_hours}")));
    }
    let n = (coverage_hours / layout.sequence_hours + 1e-12).floor() as usize;
    Ok((0..n).map(|k| k as f64 * layout.sequence_hours).collect())
}

/// Training keeps `[0, cut)` of each sequence; testing keeps the whole
/// sequence with observation starting at `cut`, so the prefix conditions.
pub fn split_train_test(data: &Dataset, cut: f64) -> Result<(Dataset, Dataset)> {
    let mut train = Vec::with_capacity(data.len());
    let mut test = Vec::with_capacity(data.len());
    for e in data.entries() {
        let s = &e.sequence;
        if !(cut > s.observation_start() && cut < s.horizon()) {
            return Err(Error::contract(format!("cut {cut} outside ({}, {})", s.observation_start(), s.horizon())));
        }
        let head = EventSequence::new(s.subject_id(), s.history_before(cut).to_vec(), cut)?
            .observed_from(s.observation_start())?;
        train.push(SequenceEntry::new(head, e.static_features.clone(), e.track.truncated(cut)?)?);
        test.push(SequenceEntry::new(s.clone().observed_from(cut)?, e.static_features.clone(), e.track.clone())?);
    }
    let norm = data.normalization().cloned();
    Ok((Dataset::new(train)?.with_normalization(norm.clone()), Dataset::new(test)?.with_normalization(norm)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FeatureTrack, StaticFeatures};

    #[test]
    fn window_counts() {
        let l = SplitLayout::default();
        assert_eq!(sequence_windows(8.5 * 24.0, &l).unwrap(), vec![0.0, 96.0]);
        assert!(sequence_windows(3.9 * 24.0, &l).unwrap().is_empty());
        assert_eq!(sequence_windows(96.0, &l).unwrap(), vec![0.0]);
    }

    #[test]
    fn split_keeps_history_for_testing() {
        let seq = EventSequence::new("a", vec![1.0, 50.0, 80.0, 95.0], 96.0).unwrap();
        let mut f = [0.0; 8];
        f[4] = 1.0;
        let entry = SequenceEntry::new(
            seq,
            StaticFeatures::from_choices([0; 8]).unwrap(),
            FeatureTrack::constant(f, 96.0).unwrap(),
        )
        .unwrap();
        let (train, test) = split_train_test(&Dataset::new(vec![entry]).unwrap(), 72.0).unwrap();
        let tr = &train.entries()[0].sequence;
        assert_eq!(tr.events(), &[1.0, 50.0]);
        assert_eq!(tr.horizon(), 72.0);
        assert_eq!(train.entries()[0].track.end(), 72.0);
        let te = &test.entries()[0].sequence;
        assert_eq!(te.events(), &[1.0, 50.0, 80.0, 95.0]);
        assert_eq!(te.observed_events(), &[80.0, 95.0]);
        assert!(split_train_test(&test, 72.0).is_err());
    }
}
