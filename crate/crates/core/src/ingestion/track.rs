use chrono::{DateTime, FixedOffset, Timelike};
use log::warn;
use serde::{Deserialize, Serialize};

use super::profile::HomeLocation;
use super::raw::RawTrackerRecord;
use crate::error::{Error, Result};
use crate::model::{time_of_day_slot, FeatureTrack, TrackVector, REAL_TRACK_DIM};

/// Mean Earth radius in meters.
const EARTH_RADIUS_M: f64 = 6_371_008.8;

/// Per-feature min and max of [latitude, longitude, speed, distance-to-home].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub min: [f64; REAL_TRACK_DIM],
    pub max: [f64; REAL_TRACK_DIM],
}

impl NormalizationStats {
    /// Maps a raw vector into `[0, 1]`, clipping values outside the learned range.
    /// Zero-range features map to 0.5.
    pub fn apply(&self, raw: &[f64; REAL_TRACK_DIM]) -> [f64; REAL_TRACK_DIM] {
        let mut out = [0.5; REAL_TRACK_DIM];
        for d in 0..REAL_TRACK_DIM {
            let range = self.max[d] - self.min[d];
            if range > 0.0 {
                out[d] = ((raw[d] - self.min[d]) / range).clamp(0.0, 1.0);
            }
        }
        out
    }

    fn warn_degenerate(&self) {
        const NAMES: [&str; REAL_TRACK_DIM] = ["latitude", "longitude", "speed", "distance"];
        for d in 0..REAL_TRACK_DIM {
            if !(self.max[d] > self.min[d]) {
                warn!("{} has zero range; using constant 0.5", NAMES[d]);
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Normalization<'a> {
    Learn,
    Apply(&'a NormalizationStats),
}

/// How the distance feature is obtained.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistanceSource {
    /// Great-circle distance from the participant's home.
    #[default]
    Haversine,
    /// The tracker's own `distance_m` column.
    Raw,
}

pub fn haversine_m(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dp = p2 - p1;
    let dl = (lon2 - lon1).to_radians();
    let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

/// Unnormalized [latitude, longitude, speed, distance] for one record.
pub fn raw_feature_vector(rec: &RawTrackerRecord, home: &HomeLocation, source: DistanceSource) -> [f64; REAL_TRACK_DIM] {
    let distance = match source {
        DistanceSource::Haversine => haversine_m(home.lat, home.lon, rec.latitude, rec.longitude),
        DistanceSource::Raw => rec.distance_m,
    };
    [rec.latitude, rec.longitude, rec.speed_kmh, distance]
}

/// Min and max over raw feature vectors.
pub fn learn_normalization<'a>(raw: impl IntoIterator<Item = &'a [f64; REAL_TRACK_DIM]>) -> Result<NormalizationStats> {
    let mut stats = NormalizationStats { min: [f64::INFINITY; REAL_TRACK_DIM], max: [f64::NEG_INFINITY; REAL_TRACK_DIM] };
    let mut any = false;
    for v in raw {
        any = true;
        for d in 0..REAL_TRACK_DIM {
            stats.min[d] = stats.min[d].min(v[d]);
            stats.max[d] = stats.max[d].max(v[d]);
        }
    }
    if !any {
        return Err(Error::contract("cannot learn normalization from zero records"));
    }
    Ok(stats)
}

fn hours_between(origin: &DateTime<FixedOffset>, t: &DateTime<FixedOffset>) -> f64 {
    (*t - *origin).num_milliseconds() as f64 / 3.6e6
}

/// Builds the piecewise-constant track on `[0, end_hours]` measured from `origin`.
///
/// Each record contributes a knot at its own time; its real features hold
/// until the next record. The feature state at time 0 comes from the last
/// record at or before `origin` (or the first record, if none precedes it).
/// Extra knots are inserted at local 6-hour time-of-day boundaries, using the
/// UTC offset of the record in force. Returns the track and the statistics
/// that were applied.
pub fn build_feature_track(
    records: &[RawTrackerRecord],
    home: &HomeLocation,
    origin: DateTime<FixedOffset>,
    end_hours: f64,
    norm: Normalization<'_>,
    source: DistanceSource,
) -> Result<(FeatureTrack, NormalizationStats)> {
    if records.is_empty() {
        return Err(Error::contract("cannot build a feature track from zero records"));
    }
    if records.windows(2).any(|w| w[0].timestamp > w[1].timestamp) {
        return Err(Error::contract("records must be sorted by timestamp"));
    }
    if !(end_hours > 0.0 && end_hours.is_finite()) {
        return Err(Error::contract(format!("track end must be positive, got {end_hours}")));
    }
    let first = records.partition_point(|r| r.timestamp <= origin).saturating_sub(1);
    let last = records.partition_point(|r| hours_between(&origin, &r.timestamp) < end_hours);
    let used = &records[first..last.max(first + 1)];
    let raw: Vec<[f64; REAL_TRACK_DIM]> = used.iter().map(|r| raw_feature_vector(r, home, source)).collect();
    let stats = match norm {
        Normalization::Learn => learn_normalization(&raw)?,
        Normalization::Apply(s) => s.clone(),
    };
    stats.warn_degenerate();

    // (time, index into `used`) for every record-driven knot.
    let mut record_knots: Vec<(f64, usize)> = Vec::with_capacity(used.len());
    for (i, r) in used.iter().enumerate() {
        let t = hours_between(&origin, &r.timestamp).max(0.0);
        match record_knots.last_mut() {
            Some(last) if last.0 == t => last.1 = i,
            _ => record_knots.push((t, i)),
        }
    }
    record_knots[0].0 = 0.0;

    const MS_PER_HOUR: f64 = 3.6e6;
    const SLOT_MS: i64 = 6 * 3_600_000;
    let end_ms = (end_hours * MS_PER_HOUR).round() as i64;
    let mut knots = Vec::new();
    let mut values: Vec<TrackVector> = Vec::new();
    for (k, &(start, idx)) in record_knots.iter().enumerate() {
        let stop_ms = record_knots.get(k + 1).map_or(end_ms, |n| (n.0 * MS_PER_HOUR).round() as i64);
        let real = stats.apply(&raw[idx]);
        let offset = *used[idx].timestamp.offset();
        let mut t_ms = (start * MS_PER_HOUR).round() as i64;
        while t_ms < stop_ms {
            let local = (origin + chrono::Duration::milliseconds(t_ms)).with_timezone(&offset);
            let ms_of_day = local.num_seconds_from_midnight() as i64 * 1000 + local.timestamp_subsec_millis() as i64;
            let mut v = [0.0; 8];
            v[..REAL_TRACK_DIM].copy_from_slice(&real);
            v[REAL_TRACK_DIM + time_of_day_slot(ms_of_day as f64 / MS_PER_HOUR)] = 1.0;
            knots.push(if t_ms == 0 { 0.0 } else { t_ms as f64 / MS_PER_HOUR });
            values.push(v);
            t_ms += SLOT_MS - ms_of_day % SLOT_MS;
        }
    }
    Ok((FeatureTrack::new(knots, values, end_hours)?, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(ts: &str, lat: f64, lon: f64, speed: f64) -> RawTrackerRecord {
        RawTrackerRecord {
            timestamp: DateTime::parse_from_rfc3339(ts).unwrap(),
            latitude: lat,
            longitude: lon,
            speed_kmh: speed,
            distance_m: 0.0,
            performance: 3,
            button: false,
        }
    }

    #[test]
    fn one_degree_latitude() {
        // Independent geodesic (WGS84, Karney) from 40°N to 41°N: 111,044.26 m; the sphere gives 111,195 m.
        let d = haversine_m(40.0, -75.0, 41.0, -75.0);
        assert!((d - 111_195.0).abs() < 1.0, "{d}");
        assert!((d / 111_044.26 - 1.0).abs() < 0.005);
    }

    #[test]
    fn home_record_has_zero_distance() {
        let home = HomeLocation { lat: 40.0, lon: -75.0 };
        let v = raw_feature_vector(&rec("2020-03-02T13:00:00-05:00", 40.0, -75.0, 0.0), &home, DistanceSource::Haversine);
        assert_eq!(v[3], 0.0);
    }

    #[test]
    fn afternoon_record_and_boundaries() {
        let home = HomeLocation { lat: 40.0, lon: -75.0 };
        let recs = vec![
            rec("2020-03-02T13:00:00-05:00", 40.0, -75.0, 0.0),
            rec("2020-03-02T20:30:00-05:00", 40.1, -75.2, 4.0),
        ];
        let origin = recs[0].timestamp;
        let (track, stats) =
            build_feature_track(&recs, &home, origin, 12.0, Normalization::Learn, DistanceSource::Haversine).unwrap();
        assert_eq!(&track.value_at(0.0).unwrap()[4..], &[0.0, 0.0, 1.0, 0.0]);
        // 18:00 local is 5 h after origin.
        assert_eq!(track.knots(), &[0.0, 5.0, 7.5, 11.0]);
        assert_eq!(&track.value_at(5.0).unwrap()[4..], &[0.0, 0.0, 0.0, 1.0]);
        assert_eq!(&track.value_at(11.5).unwrap()[4..], &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(&track.value_at(4.0).unwrap()[..4], &[0.0, 1.0, 0.0, 0.0]);
        assert_eq!(&track.value_at(8.0).unwrap()[..4], &[1.0, 0.0, 1.0, 1.0]);
        assert_eq!(stats.min[2], 0.0);
        assert_eq!(stats.max[2], 4.0);
    }

    #[test]
    fn zero_range_is_half_and_apply_clips() {
        let stats = NormalizationStats { min: [0.0, 0.0, 1.0, 0.0], max: [1.0, 1.0, 1.0, 10.0] };
        assert_eq!(stats.apply(&[2.0, -1.0, 1.0, 5.0]), [1.0, 0.0, 0.5, 0.5]);
    }

    #[test]
    fn empty_records_rejected() {
        let home = HomeLocation { lat: 0.0, lon: 0.0 };
        let origin = DateTime::parse_from_rfc3339("2020-03-02T00:00:00Z").unwrap();
        assert!(build_feature_track(&[], &home, origin, 1.0, Normalization::Learn, DistanceSource::Raw).is_err());
    }
}
