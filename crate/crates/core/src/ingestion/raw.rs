use std::io::Read;

use chrono::{DateTime, FixedOffset};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column order of the raw tracker CSV.
pub const CSV_HEADER: [&str; 7] = ["timestamp", "lat", "lon", "speed_kmh", "distance_m", "performance", "button"];

/// One 30-second tracker sample (or an extra sample logged at a button press).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawTrackerRecord {
    /// UTC instant carrying the participant's local offset.
    pub timestamp: DateTime<FixedOffset>,
    pub latitude: f64,
    pub longitude: f64,
    pub speed_kmh: f64,
    pub distance_m: f64,
    pub performance: i64,
    pub button: bool,
}

/// A row that could not be used, with its 1-based line number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowDiagnostic {
    pub line: u64,
    pub message: String,
}

fn parse_row(row: &csv::StringRecord) -> std::result::Result<RawTrackerRecord, String> {
    if row.len() != CSV_HEADER.len() {
        return Err(format!("expected {} fields, found {}", CSV_HEADER.len(), row.len()));
    }
    let num = |i: usize| -> std::result::Result<f64, String> {
        row[i].trim().parse::<f64>().map_err(|e| format!("{}: {e}", CSV_HEADER[i]))
    };
    let timestamp = DateTime::parse_from_rfc3339(row[0].trim()).map_err(|e| format!("timestamp: {e}"))?;
    let latitude = num(1)?;
    let longitude = num(2)?;
    let speed_kmh = num(3)?;
    let distance_m = num(4)?;
    let performance = row[5].trim().parse::<i64>().map_err(|e| format!("performance: {e}"))?;
    let button = match row[6].trim() {
        "1" | "true" | "TRUE" | "True" => true,
        "0" | "false" | "FALSE" | "False" | "" => false,
        other => return Err(format!("button: expected 0/1, found `{other}`")),
    };
    if !(-90.0..=90.0).contains(&latitude) {
        return Err(format!("lat {latitude} outside [-90, 90]"));
    }
    if !(-180.0..=180.0).contains(&longitude) {
        return Err(format!("lon {longitude} outside [-180, 180]"));
    }
    if !(speed_kmh >= 0.0) {
        return Err(format!("speed_kmh {speed_kmh} is negative"));
    }
    Ok(RawTrackerRecord { timestamp, latitude, longitude, speed_kmh, distance_m, performance, button })
}

/// Parses a tracker export. Malformed or out-of-order rows are skipped and
/// reported; a missing or wrong header is an error.
pub fn read_tracker_csv<R: Read>(reader: R) -> Result<(Vec<RawTrackerRecord>, Vec<RowDiagnostic>)> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(Error::Parse(format!("unexpected CSV header {:?}; expected {}", header, CSV_HEADER.join(","))));
    }
    let mut records: Vec<RawTrackerRecord> = Vec::new();
    let mut diagnostics = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        match parse_row(&row) {
            Ok(rec) => {
                if records.last().is_some_and(|prev| prev.timestamp > rec.timestamp) {
                    diagnostics.push(RowDiagnostic { line, message: "timestamp goes backwards".into() });
                } else {
                    records.push(rec);
                }
            }
            Err(message) => diagnostics.push(RowDiagnostic { line, message }),
        }
    }
    Ok((records, diagnostics))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_reports_bad_rows() {
        let csv = "timestamp,lat,lon,speed_kmh,distance_m,performance,button\n\
                   2020-03-02T08:00:00-05:00,40.0,-75.0,0.0,0.0,3,0\n\
                   2020-03-02T08:00:30-05:00,95.0,-75.0,0.0,0.0,3,0\n\
                   2020-03-02T08:01:00-05:00,40.0,-75.0,1.5,10.0,3,1\n\
                   2020-03-02T07:00:00-05:00,40.0,-75.0,1.5,10.0,3,1\n\
                   garbage,1,2\n";
        let (recs, diags) = read_tracker_csv(csv.as_bytes()).unwrap();
        assert_eq!(recs.len(), 2);
        assert!(recs[1].button);
        assert_eq!(diags.len(), 3);
        assert_eq!(diags[0].line, 3);
        assert!(diags[0].message.contains("lat"));
    }

    #[test]
    fn wrong_header_is_an_error() {
        assert!(read_tracker_csv("a,b\n1,2\n".as_bytes()).is_err());
    }
}
