use std::collections::BTreeMap;

use chrono::{DateTime, Duration, FixedOffset, NaiveDate, NaiveTime};
use log::info;
use serde::{Deserialize, Serialize};

use super::presses::dedup_presses;
use super::profile::{encode_static, ParticipantProfile};
use super::raw::{RawTrackerRecord, RowDiagnostic};
use super::screening::{screen_participant, ScreeningTest};
use super::split::{sequence_windows, SplitLayout};
use super::track::{build_feature_track, learn_normalization, raw_feature_vector, DistanceSource, Normalization, NormalizationStats};
use crate::error::{Error, Result};
use crate::likelihood::{Dataset, SequenceEntry};
use crate::model::{EventSequence, REAL_TRACK_DIM};
use crate::parallel::map_indexed;

const SAMPLE_SECONDS: f64 = 30.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    pub dedup_gap_seconds: f64,
    pub screening_test: ScreeningTest,
    pub apply_screening: bool,
    /// Days with less wear time than this are left out of screening.
    pub min_screening_hours: f64,
    pub layout: SplitLayout,
    pub distance: DistanceSource,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            dedup_gap_seconds: 60.0,
            screening_test: ScreeningTest::ExactBinomial,
            apply_screening: true,
            min_screening_hours: 1.0,
            layout: SplitLayout::default(),
            distance: DistanceSource::Haversine,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ParticipantInput {
    pub profile: ParticipantProfile,
    /// Sorted records, as returned by `read_tracker_csv`.
    pub records: Vec<RawTrackerRecord>,
    pub diagnostics: Vec<RowDiagnostic>,
}

/// Per-participant audit trail of the preprocessing decisions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningRecord {
    pub participant: String,
    pub days: Vec<NaiveDate>,
    pub press_counts: Vec<u64>,
    pub observed_hours: Vec<f64>,
    pub per_day_p: Vec<f64>,
    pub whole_period_p: Option<f64>,
    pub kept: bool,
    pub reason: Option<String>,
    pub raw_presses: usize,
    pub retained_presses: usize,
    pub sequences: usize,
    pub skipped_rows: usize,
}

/// Identifies one processed sequence: participant, index within the
/// participant, and the absolute start of its window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceKey {
    pub participant: String,
    pub sequence_index: usize,
    pub origin: DateTime<FixedOffset>,
}

#[derive(Debug, Clone)]
pub struct PreprocessOutput {
    /// Training prefixes `[0, train_hours)`.
    pub train: Dataset,
    /// Full sequences with observation starting at `train_hours`.
    pub test: Dataset,
    /// `pairing[i]` names the i-th entry of both `train` and `test`.
    pub pairing: Vec<SequenceKey>,
    pub screening: Vec<ScreeningRecord>,
    pub normalization: NormalizationStats,
}

struct Stage1 {
    record: ScreeningRecord,
    /// Window origins and press times (hours from origin) for kept participants.
    windows: Vec<(DateTime<FixedOffset>, Vec<f64>)>,
    train_raw: Vec<[f64; REAL_TRACK_DIM]>,
}

fn hours(from: &DateTime<FixedOffset>, to: &DateTime<FixedOffset>) -> f64 {
    (*to - *from).num_milliseconds() as f64 / 3.6e6
}

/// Press counts and wear time per local calendar day.
fn daily_summary(records: &[RawTrackerRecord]) -> BTreeMap<NaiveDate, (u64, f64)> {
    let mut spans: BTreeMap<NaiveDate, (u64, DateTime<FixedOffset>, DateTime<FixedOffset>)> = BTreeMap::new();
    for r in records {
        let day = r.timestamp.date_naive();
        let e = spans.entry(day).or_insert((0, r.timestamp, r.timestamp));
        e.0 += u64::from(r.button);
        e.2 = r.timestamp;
    }
    spans
        .into_iter()
        .map(|(d, (c, a, b))| (d, (c, ((hours(&a, &b) + SAMPLE_SECONDS / 3600.0).min(24.0)))))
        .collect()
}

fn first_midnight(t: &DateTime<FixedOffset>) -> DateTime<FixedOffset> {
    let offset = *t.offset();
    let midnight = t.date_naive().and_time(NaiveTime::MIN).and_local_timezone(offset).single().expect("fixed offset");
    if midnight == *t { midnight } else { midnight + Duration::days(1) }
}

fn stage1(input: &ParticipantInput, cfg: &PreprocessConfig) -> Result<Stage1> {
    let id = input.profile.id.clone();
    let recs = &input.records;
    let presses: Vec<&RawTrackerRecord> = recs.iter().filter(|r| r.button).collect();
    let mut record = ScreeningRecord {
        participant: id.clone(),
        days: vec![],
        press_counts: vec![],
        observed_hours: vec![],
        per_day_p: vec![],
        whole_period_p: None,
        kept: false,
        reason: None,
        raw_presses: presses.len(),
        retained_presses: 0,
        sequences: 0,
        skipped_rows: input.diagnostics.len(),
    };
    let skip = |mut record: ScreeningRecord, why: String| {
        info!("participant {}: skipped ({why})", record.participant);
        record.reason = Some(why);
        Ok(Stage1 { record, windows: vec![], train_raw: vec![] })
    };
    if recs.is_empty() {
        return skip(record, "no usable records".into());
    }
    for (day, (count, h)) in daily_summary(recs) {
        if h >= cfg.min_screening_hours {
            record.days.push(day);
            record.press_counts.push(count);
            record.observed_hours.push(h);
        }
    }
    if cfg.apply_screening {
        if record.days.is_empty() {
            return skip(record, "no day with enough wear time to screen".into());
        }
        let verdict = screen_participant(
            &record.press_counts,
            &record.observed_hours,
            input.profile.cigarettes_per_day,
            cfg.screening_test,
        )?;
        record.per_day_p = verdict.per_day_p;
        record.whole_period_p = Some(verdict.whole_period_p);
        if !verdict.keep {
            let why = format!(
                "unreliable presses: {} flagged day(s), whole-period p = {:.3e}",
                verdict.flagged_days, verdict.whole_period_p
            );
            return skip(record, why);
        }
    }

    let t0 = recs[0].timestamp;
    let press_seconds: Vec<f64> = presses.iter().map(|r| hours(&t0, &r.timestamp) * 3600.0).collect();
    let retained = dedup_presses(&press_seconds, cfg.dedup_gap_seconds)?;
    record.retained_presses = retained.len();

    let start = first_midnight(&t0);
    let coverage = hours(&start, &recs[recs.len() - 1].timestamp);
    let starts = sequence_windows(coverage.max(0.0), &cfg.layout)?;
    if starts.is_empty() {
        let days = coverage.max(0.0) / 24.0;
        return skip(record, format!("{days:.2} full days of coverage, need {}", cfg.layout.sequence_hours / 24.0));
    }
    let offset_h = hours(&t0, &start);
    let home = input.profile.home_location;
    let mut windows = Vec::with_capacity(starts.len());
    let mut train_raw = Vec::new();
    for s in starts {
        let origin = start + Duration::milliseconds((s * 3.6e6).round() as i64);
        let events: Vec<f64> = retained
            .iter()
            .map(|sec| sec / 3600.0 - offset_h - s)
            .filter(|&t| (0.0..cfg.layout.sequence_hours).contains(&t))
            .collect();
        train_raw.extend(
            recs.iter()
                .filter(|r| (0.0..cfg.layout.train_hours).contains(&hours(&origin, &r.timestamp)))
                .map(|r| raw_feature_vector(r, &home, cfg.distance)),
        );
        windows.push((origin, events));
    }
    record.kept = true;
    record.sequences = windows.len();
    Ok(Stage1 { record, windows, train_raw })
}

/// Runs the full pipeline over all participants. Output order is by
/// participant id, then sequence index, independent of thread count.
pub fn preprocess(inputs: &[ParticipantInput], cfg: &PreprocessConfig) -> Result<PreprocessOutput> {
    cfg.layout.validate()?;
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    order.sort_by(|&a, &b| inputs[a].profile.id.cmp(&inputs[b].profile.id));
    if order.windows(2).any(|w| inputs[w[0]].profile.id == inputs[w[1]].profile.id) {
        return Err(Error::contract("participant ids must be unique"));
    }
    let stages = map_indexed(order.len(), |i| stage1(&inputs[order[i]], cfg)).into_iter().collect::<Result<Vec<_>>>()?;

    let normalization = learn_normalization(stages.iter().flat_map(|s| s.train_raw.iter()))
        .map_err(|_| Error::InsufficientData("no participant has a complete sequence".into()))?;

    let built = map_indexed(order.len(), |i| -> Result<Vec<(SequenceKey, SequenceEntry)>> {
        let input = &inputs[order[i]];
        let static_features = encode_static(&input.profile)?;
        stages[i]
            .windows
            .iter()
            .enumerate()
            .map(|(k, (origin, events))| {
                let (track, _) = build_feature_track(
                    &input.records,
                    &input.profile.home_location,
                    *origin,
                    cfg.layout.sequence_hours,
                    Normalization::Apply(&normalization),
                    cfg.distance,
                )?;
                let seq = EventSequence::new(&input.profile.id, events.clone(), cfg.layout.sequence_hours)?;
                let key = SequenceKey { participant: input.profile.id.clone(), sequence_index: k, origin: *origin };
                Ok((key, SequenceEntry::new(seq, static_features.clone(), track)?))
            })
            .collect()
    });
    let mut pairing = Vec::new();
    let mut full = Vec::new();
    for b in built {
        for (key, entry) in b? {
            pairing.push(key);
            full.push(entry);
        }
    }
    let full = Dataset::new(full)?.with_normalization(Some(normalization.clone()));
    let (train, test) = super::split::split_train_test(&full, cfg.layout.train_hours)?;
    Ok(PreprocessOutput {
        train,
        test,
        pairing,
        screening: stages.into_iter().map(|s| s.record).collect(),
        normalization,
    })
}
