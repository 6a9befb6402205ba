use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sphp::evaluation::{binary_accuracy, mae, render_table, run_benchmark, write_residuals_csv};
use sphp::format::{read_dataset, read_model, write_dataset, write_model, FORMAT_VERSION};
use sphp::ingestion::{
    load_profiles, preprocess as run_preprocess, read_tracker_csv, split_train_test, ParticipantInput, RowDiagnostic,
    ScreeningRecord, SequenceKey,
};
use sphp::learner::{admm_fit, cross_validate_gamma, select_basis, FitConfig};
use sphp::simulator::{
    generate_synthetic_dataset, predict_expected_count, random_static, random_track, simulate_sequence,
    synthetic_subject, Conditioning,
};
use sphp::{seeds, Dataset, HawkesModel, SequenceEntry};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::manifest::{sidecar, Manifest};

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| CliError::io(path, e))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::io(path, e))?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))
}

fn load_dataset(path: &Path) -> CliResult<Dataset> {
    let (data, _) = read_dataset(open(path)?).map_err(|e| CliError::io(path, e))?;
    Ok(data)
}

fn save_dataset(path: &Path, data: &Dataset, manifest: &Value) -> CliResult<()> {
    let mut w = create(path)?;
    write_dataset(&mut w, data, Some(manifest)).map_err(|e| CliError::io(path, e))
}

fn load_model(path: &Path) -> CliResult<HawkesModel> {
    let (report, _) = read_model(open(path)?).map_err(|e| CliError::io(path, e))?;
    Ok(report.model())
}

#[derive(Serialize)]
struct ScreeningReport<'a> {
    format: &'static str,
    version: u32,
    manifest: Value,
    participants: usize,
    kept: usize,
    sequences: usize,
    screening: &'a [ScreeningRecord],
    pairing: &'a [SequenceKey],
    row_diagnostics: Vec<(String, Vec<RowDiagnostic>)>,
}

pub fn preprocess(cfg: &RunConfig, raw_dir: &Path, profiles: &Path, out: &Path) -> CliResult<()> {
    let mut csvs: Vec<PathBuf> = std::fs::read_dir(raw_dir)
        .map_err(|e| CliError::io(raw_dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    csvs.sort();
    if csvs.is_empty() {
        return Err(CliError::Io(format!("{}: no .csv files", raw_dir.display())));
    }
    let profile_map = load_profiles(open(profiles)?).map_err(|e| CliError::io(profiles, e))?;
    let mut inputs = Vec::with_capacity(csvs.len());
    let mut diagnostics = Vec::new();
    for path in &csvs {
        let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let profile = profile_map
            .get(&id)
            .cloned()
            .ok_or_else(|| CliError::Io(format!("{}: no profile for participant `{id}`", profiles.display())))?;
        let (records, diags) = read_tracker_csv(open(path)?).map_err(|e| CliError::io(path, e))?;
        for d in &diags {
            warn!("{}:{}: {}", path.display(), d.line, d.message);
        }
        if !diags.is_empty() {
            diagnostics.push((id.clone(), diags.clone()));
        }
        inputs.push(ParticipantInput { profile, records, diagnostics: diags });
    }

    let mut hashed = csvs.clone();
    hashed.push(profiles.to_path_buf());
    let arguments = json!({"raw_dir": raw_dir, "profiles": profiles, "out": out});
    let manifest = Manifest::new("preprocess", arguments, cfg, &hashed)?;
    let mv = manifest.to_value();

    let output = run_preprocess(&inputs, &cfg.preprocess)?;
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    save_dataset(&out.join("train.jsonl"), &output.train, &mv)?;
    save_dataset(&out.join("test.jsonl"), &output.test, &mv)?;
    let kept = output.screening.iter().filter(|s| s.kept).count();
    write_json(
        &out.join("screening.json"),
        &ScreeningReport {
            format: "sphp-screening",
            version: FORMAT_VERSION,
            manifest: mv,
            participants: output.screening.len(),
            kept,
            sequences: output.pairing.len(),
            screening: &output.screening,
            pairing: &output.pairing,
            row_diagnostics: diagnostics,
        },
    )?;
    manifest.write(&out.join("manifest.json"))?;
    for s in &output.screening {
        match &s.reason {
            None => println!("{}: kept, {} sequence(s)", s.participant, s.sequences),
            Some(r) => println!("{}: excluded ({r})", s.participant),
        }
    }
    println!("{kept}/{} participants kept, {} sequences", output.screening.len(), output.pairing.len());
    Ok(())
}

pub fn fit(cfg: &RunConfig, data_path: &Path, out: &Path) -> CliResult<()> {
    let data = load_dataset(data_path)?;
    let manifest = Manifest::new("fit", json!({"data": data_path, "out": out}), cfg, &[data_path.to_path_buf()])?;
    let basis = select_basis(&data, &cfg.basis)?;
    info!("basis: {} bumps, σ = {:.4} h", basis.len(), basis.sigma());
    let mut fit_cfg: FitConfig = cfg.fit.clone();
    if cfg.cross_validation.enabled {
        let cv = cross_validate_gamma(&data, &basis, &cfg.cross_validation.grid, cfg.cross_validation.folds, &fit_cfg)?;
        info!("cross-validated γ = {}", cv.gamma);
        fit_cfg.gamma = cv.gamma;
    }
    let report = admm_fit(&data, &basis, &fit_cfg)?;
    let mut w = create(out)?;
    write_model(&mut w, &report, Some(&manifest.to_value())).map_err(|e| CliError::io(out, e))?;
    manifest.write(&sidecar(out))?;
    println!(
        "{}: objective {:.6} after {} iterations, branching ratio {:.3}",
        report.params.kind,
        report.objective_trace.last().copied().unwrap_or(f64::NAN),
        report.objective_trace.len(),
        report.params.branching_ratio(&report.basis)
    );
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Prediction {
    pub sequence: usize,
    pub subject_id: String,
    pub t0: f64,
    pub expected_count: f64,
    pub actual: usize,
    pub trial_sd: f64,
}

pub fn predict(cfg: &RunConfig, model_path: &Path, data_path: &Path, out: &Path) -> CliResult<()> {
    let model = load_truth(model_path)?;
    warn_if_explosive(&model);
    let data = load_dataset(data_path)?;
    let manifest = Manifest::new(
        "predict",
        json!({"model": model_path, "data": data_path, "out": out}),
        cfg,
        &[model_path.to_path_buf(), data_path.to_path_buf()],
    )?;
    let window = cfg.predict.window_min / 60.0;
    let mut predictions = Vec::with_capacity(data.len());
    for (i, entry) in data.entries().iter().enumerate() {
        let cond = Conditioning::at_observation_start(entry)?;
        let seed = seeds::derive(cfg.seed, "predict", i as u64);
        let r = predict_expected_count(&model, &cond, window, cfg.predict.trials, &cfg.thinning, seed)?;
        let ev = entry.sequence.events();
        let actual = ev.partition_point(|&e| e < cond.t0 + window) - ev.partition_point(|&e| e < cond.t0);
        predictions.push(Prediction {
            sequence: i,
            subject_id: entry.sequence.subject_id().to_owned(),
            t0: cond.t0,
            expected_count: r.expected_count,
            actual,
            trial_sd: r.trial_sd,
        });
    }
    let est: Vec<f64> = predictions.iter().map(|p| p.expected_count).collect();
    let act: Vec<f64> = predictions.iter().map(|p| p.actual as f64).collect();
    let m = mae(&est, &act)?;
    let acc = binary_accuracy(&est, &act, cfg.predict.threshold)?;
    write_json(
        out,
        &json!({
            "format": "sphp-predictions",
            "version": FORMAT_VERSION,
            "manifest": manifest.to_value(),
            "kind": model.kind(),
            "window_min": cfg.predict.window_min,
            "trials": cfg.predict.trials,
            "mae": m,
            "binary_accuracy": acc,
            "predictions": predictions,
        }),
    )?;
    manifest.write(&sidecar(out))?;
    println!("{} predictions, MAE {m:.4}, accuracy {:.1}%", predictions.len(), 100.0 * acc);
    Ok(())
}

pub fn simulate(
    cfg: &RunConfig,
    model_path: &Path,
    data_path: Option<&Path>,
    horizon: f64,
    n: usize,
    out: &Path,
) -> CliResult<()> {
    if !(horizon > 0.0) || n == 0 {
        return Err(CliError::Config("horizon must be > 0 and n ≥ 1".into()));
    }
    let model = load_truth(model_path)?;
    warn_if_explosive(&model);
    let mut inputs = vec![model_path.to_path_buf()];
    inputs.extend(data_path.map(Path::to_path_buf));
    let manifest = Manifest::new(
        "simulate",
        json!({"model": model_path, "data": data_path, "horizon": horizon, "n": n, "out": out}),
        cfg,
        &inputs,
    )?;
    let templates: Vec<(String, sphp::StaticFeatures, sphp::FeatureTrack)> = match data_path {
        Some(p) => load_dataset(p)?
            .entries()
            .iter()
            .map(|e| Ok((e.sequence.subject_id().to_owned(), e.static_features.clone(), e.track.clone())))
            .collect::<CliResult<_>>()?,
        None => (0..n)
            .map(|i| {
                let mut rng = seeds::rng(cfg.seed, "simulate-features", i as u64);
                let s = random_static(&mut rng);
                let t = random_track(&cfg.synth.features, horizon, &mut rng)?;
                Ok((synthetic_subject(i), s, t))
            })
            .collect::<CliResult<_>>()?,
    };
    let mut entries = Vec::with_capacity(templates.len());
    for (i, (subject, s, track)) in templates.into_iter().enumerate() {
        let seed = seeds::derive(cfg.seed, "simulate-sequence", i as u64);
        let seq = simulate_sequence(&model, &subject, &s, &track, horizon, seed, &cfg.thinning)?;
        entries.push(SequenceEntry::new(seq, s, track)?);
    }
    let data = Dataset::new(entries)?;
    save_dataset(out, &data, &manifest.to_value())?;
    manifest.write(&sidecar(out))?;
    println!("simulated {} sequences with {} events", data.len(), data.observed_event_count());
    Ok(())
}

fn warn_if_explosive(model: &HawkesModel) {
    let br = model.params.branching_ratio(&model.basis);
    if br >= 1.0 {
        log::warn!("impact function integrates to {br:.3} ≥ 1; simulations may stop at the event limit");
    }
}

/// Accepts a bare `{params, basis}` document or a model file.
fn load_truth(path: &Path) -> CliResult<HawkesModel> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| CliError::io(path, e))?;
    if value.get("format").is_some() {
        return load_model(path);
    }
    let m: HawkesModel = serde_json::from_value(value).map_err(|e| CliError::io(path, e))?;
    Ok(HawkesModel::new(m.params, m.basis)?)
}

pub fn synth(cfg: &RunConfig, truth_path: &Path, out: &Path) -> CliResult<()> {
    let truth = load_truth(truth_path)?;
    let manifest = Manifest::new("synth", json!({"truth": truth_path, "out": out}), cfg, &[truth_path.to_path_buf()])?;
    let mv = manifest.to_value();
    let s = &cfg.synth;
    let data = generate_synthetic_dataset(&truth, &s.features, s.sequences, s.horizon, cfg.seed, &cfg.thinning)?;
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    save_dataset(&out.join("dataset.jsonl"), &data, &mv)?;
    if s.train_hours > 0.0 && s.train_hours < s.horizon {
        let (train, test) = split_train_test(&data, s.train_hours)?;
        save_dataset(&out.join("train.jsonl"), &train, &mv)?;
        save_dataset(&out.join("test.jsonl"), &test, &mv)?;
    }
    write_json(&out.join("truth.json"), &truth)?;
    manifest.write(&out.join("manifest.json"))?;
    println!("{} sequences, {} events", data.len(), data.observed_event_count());
    Ok(())
}

pub fn benchmark(cfg: &RunConfig, train_path: &Path, test_path: &Path, out: &Path) -> CliResult<()> {
    let train = load_dataset(train_path)?;
    let test = load_dataset(test_path)?;
    let manifest = Manifest::new(
        "benchmark",
        json!({"train": train_path, "test": test_path, "out": out}),
        cfg,
        &[train_path.to_path_buf(), test_path.to_path_buf()],
    )?;
    let basis = select_basis(&train, &cfg.basis)?;
    let mut report = run_benchmark(&train, &test, &basis, &cfg.benchmark_config())?;
    report.manifest = Some(manifest.to_value());
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    write_json(&out.join("report.json"), &report)?;
    let table = render_table(&report);
    std::fs::write(out.join("report.txt"), &table).map_err(|e| CliError::io(&out.join("report.txt"), e))?;
    let res = out.join("residuals.csv");
    write_residuals_csv(create(&res)?, &report).map_err(|e| CliError::io(&res, e))?;
    manifest.write(&out.join("manifest.json"))?;
    print!("{table}");
    Ok(())
}
