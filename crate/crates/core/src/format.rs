//! On-disk formats.
//!
//! Processed datasets are JSON lines: a header object carrying the format
//! tag, version and an optional run manifest, then one object per sequence.
//! Fitted models are a single JSON document wrapping a [`FitReport`].

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::ingestion::NormalizationStats;
use crate::learner::FitReport;
use crate::likelihood::{Dataset, SequenceEntry};
use crate::model::{EventSequence, FeatureTrack, StaticFeatures};

pub const FORMAT_VERSION: u32 = 1;
pub const DATASET_FORMAT: &str = "sphp-dataset";
pub const MODEL_FORMAT: &str = "sphp-model";

#[derive(Debug, Serialize, Deserialize)]
struct DatasetHeader {
    format: String,
    version: u32,
    sequences: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    manifest: Option<Value>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SequenceLine {
    format: String,
    version: u32,
    subject_id: String,
    sequence_index: usize,
    horizon: f64,
    observed_from: f64,
    events: Vec<f64>,
    #[serde(rename = "static")]
    static_features: StaticFeatures,
    track: FeatureTrack,
    normalization: Option<NormalizationStats>,
}

fn check_tag(format: &str, version: u32, expected: &str) -> Result<()> {
    if format != expected {
        return Err(Error::Parse(format!("expected format `{expected}`, found `{format}`")));
    }
    if version != FORMAT_VERSION {
        return Err(Error::Parse(format!("unsupported {expected} version {version} (this build reads {FORMAT_VERSION})")));
    }
    Ok(())
}

/// Writes `data` as JSON lines. `sequence_index` counts sequences per subject in order.
pub fn write_dataset<W: Write>(mut w: W, data: &Dataset, manifest: Option<&Value>) -> Result<()> {
    let header = DatasetHeader {
        format: DATASET_FORMAT.into(),
        version: FORMAT_VERSION,
        sequences: data.len(),
        manifest: manifest.cloned(),
    };
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    let mut per_subject: BTreeMap<&str, usize> = BTreeMap::new();
    for e in data.entries() {
        let s = &e.sequence;
        let idx = per_subject.entry(s.subject_id()).or_default();
        let line = SequenceLine {
            format: DATASET_FORMAT.into(),
            version: FORMAT_VERSION,
            subject_id: s.subject_id().into(),
            sequence_index: *idx,
            horizon: s.horizon(),
            observed_from: s.observation_start(),
            events: s.events().to_vec(),
            static_features: e.static_features.clone(),
            track: e.track.clone(),
            normalization: data.normalization().cloned(),
        };
        *idx += 1;
        serde_json::to_writer(&mut w, &line)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a dataset written by [`write_dataset`], returning the embedded manifest.
pub fn read_dataset<R: BufRead>(r: R) -> Result<(Dataset, Option<Value>)> {
    let mut lines = r.lines().enumerate().filter(|(_, l)| l.as_ref().map_or(true, |l| !l.trim().is_empty()));
    let (_, first) = lines.next().ok_or_else(|| Error::Parse("empty dataset file".into()))?;
    let header: DatasetHeader = serde_json::from_str(&first?)?;
    check_tag(&header.format, header.version, DATASET_FORMAT)?;
    let mut entries = Vec::with_capacity(header.sequences);
    let mut normalization = None;
    for (no, line) in lines {
        let line = line?;
        let rec: SequenceLine =
            serde_json::from_str(&line).map_err(|e| Error::Parse(format!("line {}: {e}", no + 1)))?;
        check_tag(&rec.format, rec.version, DATASET_FORMAT)?;
        let seq = EventSequence::new(rec.subject_id, rec.events, rec.horizon)?.observed_from(rec.observed_from)?;
        entries.push(SequenceEntry::new(seq, rec.static_features, rec.track)?);
        if normalization.is_none() {
            normalization = rec.normalization;
        }
    }
    if entries.len() != header.sequences {
        return Err(Error::Parse(format!("header announces {} sequences, found {}", header.sequences, entries.len())));
    }
    Ok((Dataset::new(entries)?.with_normalization(normalization), header.manifest))
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    manifest: Option<Value>,
    report: FitReport,
}

pub fn write_model<W: Write>(mut w: W, report: &FitReport, manifest: Option<&Value>) -> Result<()> {
    let file = ModelFile {
        format: MODEL_FORMAT.into(),
        version: FORMAT_VERSION,
        manifest: manifest.cloned(),
        report: report.clone(),
    };
    serde_json::to_writer_pretty(&mut w, &file)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Reads a model file; the parameters are validated against the stored basis.
pub fn read_model<R: std::io::Read>(r: R) -> Result<(FitReport, Option<Value>)> {
    let file: ModelFile = serde_json::from_reader(r)?;
    check_tag(&file.format, file.version, MODEL_FORMAT)?;
    file.report.params.validate(&file.report.basis)?;
    Ok((file.report, file.manifest))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BasisSet, ModelKind};
    use crate::simulator::{generate_synthetic_dataset, FeatureGeneratorConfig, ThinningConfig};
    use crate::{HawkesModel, ModelParams};
    use proptest::prelude::*;

    fn dataset(seed: u64, n: usize) -> Dataset {
        let basis = BasisSet::new(vec![0.0, 1.0], 0.5).unwrap();
        let mut p = ModelParams::zeros(ModelKind::TvSphp, 2);
        p.mu_ti[0] = 0.3;
        p.mu_tv[0] = 0.2;
        p.a = vec![0.2, 0.1];
        let truth = HawkesModel::new(p, basis).unwrap();
        let d = generate_synthetic_dataset(&truth, &FeatureGeneratorConfig::default(), n, 10.0, seed, &ThinningConfig::default())
            .unwrap();
        d.with_normalization(Some(NormalizationStats { min: [0.0, 1.0, 2.0, 3.0], max: [1.0, 2.0, 3.5, 1e4] }))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn dataset_round_trip(seed in any::<u64>(), n in 1usize..4, cut in 0.0f64..9.0) {
            let d = dataset(seed, n);
            let entries = d.entries().iter().map(|e| {
                let s = e.sequence.clone().observed_from(cut).unwrap();
                SequenceEntry::new(s, e.static_features.clone(), e.track.clone()).unwrap()
            }).collect();
            let d = Dataset::new(entries).unwrap().with_normalization(d.normalization().cloned());
            let manifest = serde_json::json!({"seed": seed});
            let mut buf = Vec::new();
            write_dataset(&mut buf, &d, Some(&manifest)).unwrap();
            let (back, m) = read_dataset(buf.as_slice()).unwrap();
            prop_assert_eq!(&back, &d);
            prop_assert_eq!(m.as_ref(), Some(&manifest));
            let mut again = Vec::new();
            write_dataset(&mut again, &back, m.as_ref()).unwrap();
            prop_assert_eq!(buf, again);
        }
    }

    #[test]
    fn rejects_wrong_tag() {
        let bad = format!("{{\"format\":\"other\",\"version\":1,\"sequences\":0}}\n");
        assert!(matches!(read_dataset(bad.as_bytes()), Err(Error::Parse(_))));
        let bad = format!("{{\"format\":\"{DATASET_FORMAT}\",\"version\":9,\"sequences\":0}}\n");
        assert!(read_dataset(bad.as_bytes()).is_err());
    }
}
