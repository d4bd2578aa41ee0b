use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;

use super::manifest::RunManifest;
use crate::baselines::naive_drift;
use crate::error::{Error, Result};
use crate::evaluate::{score_country, summarize, write_scores, write_summary, CountryScores, MetricReport};
use crate::ingest::{
    harmonize, parse_raw, read_panel, write_diagnostics, write_panel, HarmonizedPanel, IngestOptions,
    IngestOutput,
};
use crate::model::{Checkpoint, ModelConfig, ModelParams, TeacherForcing};
use crate::numerics::{grad_check, sample_coordinates, GradCheckReport, Matrix, RngStream};
use crate::project::{
    build_report, forecast_forward, load_comparators, read_regions, read_weights, write_forecasts,
    AggregateReport, ForecastRecord,
};
use crate::train::{
    ensemble_forecast, total_loss, train_ensemble, window_loss_and_grad, write_history, TrainConfig,
    TrainedMember,
};
use crate::transform::{
    augment_low_fertility, fit_scaler, full_sample_split, log_standardize, low_fertility_countries,
    origin_window, temporal_split, CountryIndex, ForecastOrigin, StandardizedPanel, TemporalSplit,
    WindowSample,
};

pub const PANEL_FILE: &str = "panel.csv";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const CONFIG_FILE: &str = "config.txt";
pub const ENSEMBLE_FILE: &str = "ensemble.json";
pub const HOLDOUT_FORECASTS_FILE: &str = "forecasts_holdout.csv";
pub const SCORES_FILE: &str = "scores.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const FORECASTS_FILE: &str = "forecasts.csv";
pub const NEURAL_TAG: &str = "neural";
pub const DRIFT_TAG: &str = "drift";

pub fn member_file(i: usize) -> String {
    format!("member_{i:02}.ckpt")
}

pub fn history_file(i: usize) -> String {
    format!("history_{i:02}.csv")
}

/// Whether the ensemble saw a temporal holdout or the whole sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TrainMode {
    Holdout,
    Full,
}

impl TrainMode {
    pub fn as_str(self) -> &'static str {
        match self {
            TrainMode::Holdout => "holdout",
            TrainMode::Full => "full",
        }
    }
}

/// Standardized panel and window partitions ready for training.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub mode: TrainMode,
    pub panel: StandardizedPanel,
    pub split: TemporalSplit,
    pub augmented_windows: usize,
}

/// Scaler fitted before the cutoff, chronological split, and noisy copies
/// of recent low-fertility windows added to the training partition.
pub fn prepare_data(panel: &HarmonizedPanel, cfg: &TrainConfig, mode: TrainMode) -> Result<PreparedData> {
    cfg.validate()?;
    let index = CountryIndex::from_panel(panel);
    let cutoff = match mode {
        TrainMode::Holdout => Some(cfg.train_cutoff_year),
        TrainMode::Full => None,
    };
    let scaler = fit_scaler(panel, cutoff)?;
    let std = log_standardize(panel, scaler, &index)?;
    let mut split = match mode {
        TrainMode::Holdout => temporal_split(&std, cfg.l_enc, cfg.l_pred, cfg.split_spec())?,
        TrainMode::Full => full_sample_split(&std, cfg.l_enc, cfg.l_pred, cfg.validation_years)?,
    };
    let qualifying = low_fertility_countries(panel, &index, cutoff, cfg.augment_threshold);
    let before = split.train.len();
    split.train = augment_low_fertility(
        &split.train,
        &qualifying,
        cfg.augment(),
        &RngStream::new(cfg.seed).derive("augment"),
    );
    let augmented_windows = split.train.len() - before;
    info!(
        "{} training windows ({augmented_windows} augmented, {} low-fertility countries), {} validation, {} test origins",
        split.train.len(),
        qualifying.len(),
        split.validation.len(),
        split.test.len()
    );
    Ok(PreparedData {
        mode,
        panel: std,
        split,
        augmented_windows,
    })
}

pub fn train_prepared(prepared: &PreparedData, cfg: &TrainConfig) -> Result<Vec<TrainedMember>> {
    train_ensemble(
        cfg,
        prepared.panel.index.len(),
        &prepared.split.train,
        &prepared.split.validation,
    )
}

/// One origin per country at `cutoff − 1`, for countries observed past it.
pub fn holdout_origins(panel: &StandardizedPanel, cutoff: i32, l_enc: usize) -> Vec<ForecastOrigin> {
    panel
        .series
        .iter()
        .filter(|s| s.last_year() >= cutoff)
        .filter_map(|s| origin_window(s, cutoff - 1, l_enc))
        .collect()
}

/// Ensemble and drift forecasts for the held-out years, natural units.
pub fn holdout_forecasts(
    members: &[ModelParams],
    harmonized: &HarmonizedPanel,
    panel: &StandardizedPanel,
    origins: &[ForecastOrigin],
    l_pred: usize,
) -> Result<Vec<ForecastRecord>> {
    let per_origin = origins
        .par_iter()
        .map(|o| {
            let code = panel
                .index
                .code(o.country_id)
                .ok_or_else(|| Error::InvalidInput(format!("unknown country id {}", o.country_id)))?;
            let grid = ensemble_forecast(members, &o.encoder_input, o.country_id)?;
            let mut recs: Vec<ForecastRecord> = grid
                .rows
                .iter()
                .enumerate()
                .map(|(h, r)| ForecastRecord {
                    country_code: code.to_string(),
                    model: NEURAL_TAG.to_string(),
                    year: o.origin_year + 1 + h as i32,
                    quantiles: r.map(|v| panel.scaler.invert(v)),
                })
                .collect();
            let history = harmonized
                .get(code)
                .and_then(|s| s.truncated_before(o.origin_year + 1))
                .map(|s| s.values)
                .unwrap_or_default();
            match naive_drift(&history, l_pred) {
                Ok(d) => recs.extend(
                    d.iter()
                        .enumerate()
                        .map(|(h, v)| ForecastRecord::point(code, DRIFT_TAG, o.origin_year + 1 + h as i32, *v)),
                ),
                Err(e) => warn!("{code}: no drift forecast: {e}"),
            }
            Ok(recs)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_origin.into_iter().flatten().collect())
}

/// Scores every (model, country) in `records` on the years where the panel
/// has values at or after `cutoff`. Rows are ordered by country then model.
pub fn score_records(
    panel: &HarmonizedPanel,
    records: &[ForecastRecord],
    cutoff: i32,
) -> Result<Vec<CountryScores>> {
    let mut groups: BTreeMap<(&str, &str), Vec<&ForecastRecord>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.year >= cutoff) {
        groups.entry((&r.country_code, &r.model)).or_default().push(r);
    }
    let mut scores = Vec::new();
    for ((country, model), mut recs) in groups {
        let Some(series) = panel.get(country) else {
            warn!("{country}: forecast for a country missing from the panel");
            continue;
        };
        recs.sort_by_key(|r| r.year);
        let (actual, rows): (Vec<f64>, Vec<_>) = recs
            .iter()
            .filter_map(|r| series.value_at(r.year).map(|y| (y, r.quantiles)))
            .unzip();
        if actual.is_empty() {
            continue;
        }
        let training = series.truncated_before(cutoff).map(|s| s.values).unwrap_or_default();
        scores.push(score_country(country, model, &actual, &rows, &training)?);
    }
    Ok(scores)
}

fn write_config(dir: &Path, cfg: &TrainConfig) -> Result<()> {
    cfg.save(&dir.join(CONFIG_FILE))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// `ingest`: raw reports → harmonized panel and diagnostics.
pub fn run_ingest(raw: &Path, out: &Path, cfg: &TrainConfig) -> Result<IngestOutput> {
    ensure_dir(out)?;
    let mut manifest = RunManifest::start("ingest", &cfg.to_text(), &[raw.to_path_buf()], cfg.seed)?;
    let reports = parse_raw(raw)?;
    let result = harmonize(
        &reports,
        IngestOptions {
            smoothing: cfg.smoothing,
        },
    )?;
    write_panel(&out.join(PANEL_FILE), &result.panel)?;
    write_diagnostics(&out.join(DIAGNOSTICS_FILE), &result.diagnostics)?;
    manifest.record(out, PANEL_FILE)?;
    manifest.record(out, DIAGNOSTICS_FILE)?;
    manifest.finish(out)?;
    info!(
        "{} countries, {} cells ({:.1}% interpolated), {} flagged",
        result.panel.len(),
        result.panel.metadata.total_cells,
        100.0 * result.panel.interpolated_share(),
        result.panel.metadata.flagged_series
    );
    Ok(result)
}

#[derive(Debug, Clone, Serialize)]
struct EnsembleEntry {
    index: usize,
    seed: u64,
    lr: f64,
    hidden_dim: usize,
    best_epoch: usize,
    best_loss: f64,
    epochs_run: usize,
    stopped_early: bool,
    checkpoint: String,
}

#[derive(Debug, Clone, Serialize)]
struct EnsembleIndex {
    mode: TrainMode,
    train_cutoff_year: Option<i32>,
    run_id: String,
    members: Vec<EnsembleEntry>,
}

/// `train`: panel → member checkpoints, histories and an ensemble index.
pub fn run_train(panel_path: &Path, out: &Path, cfg: &TrainConfig, mode: TrainMode) -> Result<Vec<TrainedMember>> {
    ensure_dir(out)?;
    let mut manifest = RunManifest::start(
        &format!("train-{}", mode.as_str()),
        &cfg.to_text(),
        &[panel_path.to_path_buf()],
        cfg.seed,
    )?;
    let panel = read_panel(panel_path)?;
    let prepared = prepare_data(&panel, cfg, mode)?;
    let members = train_prepared(&prepared, cfg)?;

    write_config(out, cfg)?;
    manifest.record(out, CONFIG_FILE)?;
    let cutoff = (mode == TrainMode::Holdout).then_some(cfg.train_cutoff_year);
    let mut entries = Vec::new();
    for m in &members {
        let i = m.spec.index;
        let meta: BTreeMap<String, String> = [
            ("member", i.to_string()),
            ("seed", m.spec.seed.to_string()),
            ("lr", format!("{:?}", m.spec.lr)),
            ("mode", mode.as_str().to_string()),
            ("train_cutoff_year", cutoff.map_or("none".into(), |c| c.to_string())),
            ("run_id", manifest.run_id.clone()),
            ("config_hash", manifest.config_hash.clone()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        let ckpt = Checkpoint {
            params: m.outcome.params.clone(),
            scaler: prepared.panel.scaler,
            countries: prepared.panel.index.clone(),
            meta,
        };
        ckpt.save(&out.join(member_file(i)))?;
        write_history(&out.join(history_file(i)), &m.outcome.history)?;
        manifest.record(out, &member_file(i))?;
        manifest.record(out, &history_file(i))?;
        entries.push(EnsembleEntry {
            index: i,
            seed: m.spec.seed,
            lr: m.spec.lr,
            hidden_dim: m.spec.hidden_dim,
            best_epoch: m.outcome.best_epoch,
            best_loss: m.outcome.best_loss,
            epochs_run: m.outcome.history.len(),
            stopped_early: m.outcome.stopped_early,
            checkpoint: member_file(i),
        });
    }
    let index = EnsembleIndex {
        mode,
        train_cutoff_year: cutoff,
        run_id: manifest.run_id.clone(),
        members: entries,
    };
    let json = serde_json::to_string_pretty(&index)
        .map_err(|e| Error::InvalidInput(format!("ensemble index: {e}")))?;
    let idx_path = out.join(ENSEMBLE_FILE);
    std::fs::write(&idx_path, json + "\n").map_err(|e| Error::io(&idx_path, e))?;
    manifest.record(out, ENSEMBLE_FILE)?;
    manifest.finish(out)?;
    Ok(members)
}

/// Checkpoints and training config loaded back from a `train` output directory.
#[derive(Debug, Clone)]
pub struct LoadedEnsemble {
    pub config: TrainConfig,
    pub mode: TrainMode,
    pub checkpoints: Vec<Checkpoint>,
}

impl LoadedEnsemble {
    pub fn params(&self) -> Vec<ModelParams> {
        self.checkpoints.iter().map(|c| c.params.clone()).collect()
    }
}

pub fn load_ensemble(dir: &Path) -> Result<LoadedEnsemble> {
    let config = TrainConfig::load(&dir.join(CONFIG_FILE))?;
    let mut checkpoints = Vec::new();
    for i in 0..config.members {
        let p = dir.join(member_file(i));
        if !p.exists() {
            return Err(Error::Checkpoint(format!("missing ensemble member {}", p.display())));
        }
        checkpoints.push(Checkpoint::load(&p)?);
    }
    let first = checkpoints
        .first()
        .ok_or_else(|| Error::Checkpoint("ensemble has no members".into()))?;
    if checkpoints
        .iter()
        .any(|c| c.scaler != first.scaler || c.countries != first.countries)
    {
        return Err(Error::Checkpoint("members disagree on scaler or country table".into()));
    }
    let mode = match first.meta.get("mode").map(String::as_str) {
        Some("full") => TrainMode::Full,
        Some("holdout") => TrainMode::Holdout,
        other => return Err(Error::Checkpoint(format!("unknown training mode {other:?}"))),
    };
    Ok(LoadedEnsemble {
        config,
        mode,
        checkpoints,
    })
}

fn standardize_for(ensemble: &LoadedEnsemble, panel: &HarmonizedPanel) -> Result<StandardizedPanel> {
    let first = &ensemble.checkpoints[0];
    let std = log_standardize(panel, first.scaler, &first.countries)?;
    let missing = panel.len() - std.series.len();
    if missing > 0 {
        warn!("{missing} panel countries have no embedding and are skipped");
    }
    Ok(std)
}

/// `evaluate`: held-out forecasts, per-country scores and the summary.
pub fn run_evaluate(
    panel_path: &Path,
    model_dir: &Path,
    out: &Path,
    comparators: &[PathBuf],
) -> Result<MetricReport> {
    ensure_dir(out)?;
    let ensemble = load_ensemble(model_dir)?;
    if ensemble.mode != TrainMode::Holdout {
        return Err(Error::Config("evaluate needs an ensemble trained with a holdout".into()));
    }
    let cfg = &ensemble.config;
    let mut inputs = vec![panel_path.to_path_buf()];
    inputs.extend((0..cfg.members).map(|i| model_dir.join(member_file(i))));
    inputs.extend(comparators.iter().cloned());
    let mut manifest = RunManifest::start("evaluate", &cfg.to_text(), &inputs, cfg.seed)?;

    let panel = read_panel(panel_path)?;
    let std = standardize_for(&ensemble, &panel)?;
    let origins = holdout_origins(&std, cfg.train_cutoff_year, cfg.l_enc);
    if origins.is_empty() {
        return Err(Error::InvalidInput(format!(
            "no country has data at or after {} with a full encoder window before it",
            cfg.train_cutoff_year
        )));
    }
    let mut records = holdout_forecasts(&ensemble.params(), &panel, &std, &origins, cfg.l_pred)?;
    write_forecasts(&out.join(HOLDOUT_FORECASTS_FILE), &records)?;
    records.extend(load_comparators(comparators)?);
    let scores = score_records(&panel, &records, cfg.train_cutoff_year)?;
    let report = summarize(&scores)?;
    write_scores(&out.join(SCORES_FILE), &scores)?;
    write_summary(&out.join(SUMMARY_FILE), &report)?;
    for f in [HOLDOUT_FORECASTS_FILE, SCORES_FILE, SUMMARY_FILE] {
        manifest.record(out, f)?;
    }
    manifest.finish(out)?;
    Ok(report)
}

/// Drift projections from each country's last observation to `end_year`.
pub fn drift_forward(panel: &HarmonizedPanel, end_year: i32) -> Vec<ForecastRecord> {
    let mut out = Vec::new();
    for s in panel.series.values() {
        let last = s.last_year();
        if end_year <= last {
            continue;
        }
        match naive_drift(&s.values, (end_year - last) as usize) {
            Ok(d) => out.extend(
                d.iter()
                    .enumerate()
                    .map(|(h, v)| ForecastRecord::point(&s.country_code, DRIFT_TAG, last + 1 + h as i32, *v)),
            ),
            Err(e) => warn!("{}: no drift projection: {e}", s.country_code),
        }
    }
    out
}

/// `forecast`: forward projections of the ensemble and the drift baseline.
pub fn run_forecast(panel_path: &Path, model_dir: &Path, out: &Path, end_year: i32) -> Result<Vec<ForecastRecord>> {
    ensure_dir(out)?;
    let ensemble = load_ensemble(model_dir)?;
    if ensemble.mode != TrainMode::Full {
        warn!("projecting with an ensemble trained on a holdout split");
    }
    let cfg = &ensemble.config;
    let mut inputs = vec![panel_path.to_path_buf()];
    inputs.extend((0..cfg.members).map(|i| model_dir.join(member_file(i))));
    let mut manifest = RunManifest::start(
        &format!("forecast-{end_year}"),
        &cfg.to_text(),
        &inputs,
        cfg.seed,
    )?;
    let panel = read_panel(panel_path)?;
    let std = standardize_for(&ensemble, &panel)?;
    let mut records = forecast_forward(&ensemble.params(), &std, end_year, NEURAL_TAG)?;
    records.extend(drift_forward(&panel, end_year));
    write_forecasts(&out.join(FORECASTS_FILE), &records)?;
    manifest.record(out, FORECASTS_FILE)?;
    manifest.finish(out)?;
    Ok(records)
}

/// `report`: aggregates over forecast and comparator files.
pub fn run_report(
    forecast_files: &[PathBuf],
    weights: Option<&Path>,
    regions: Option<&Path>,
    out: &Path,
    endpoint_year: i32,
    seed: u64,
) -> Result<AggregateReport> {
    ensure_dir(out)?;
    let mut inputs = forecast_files.to_vec();
    inputs.extend(weights.map(Path::to_path_buf));
    inputs.extend(regions.map(Path::to_path_buf));
    let mut manifest = RunManifest::start(&format!("report-{endpoint_year}"), "", &inputs, seed)?;
    let records = load_comparators(forecast_files)?;
    let w = weights.map(read_weights).transpose()?;
    let r = regions.map(read_regions).transpose()?;
    let report = build_report(&records, w.as_ref(), r.as_ref(), endpoint_year);
    report.write(out)?;
    for f in ["aggregate.csv", "regional.csv", "report.json"] {
        manifest.record(out, f)?;
    }
    manifest.finish(out)?;
    Ok(report)
}

/// Tiny architecture used by `gradcheck`.
pub fn gradcheck_config() -> ModelConfig {
    ModelConfig {
        n_countries: 3,
        d_emb: 2,
        hidden_dim: 8,
        n_layers: 2,
        l_enc: 6,
        l_pred: 3,
    }
}

/// Finite-difference check of the full multi-quantile loss gradient on the
/// tiny architecture, with teacher forcing at 0.5 so both feedback paths
/// are exercised.
pub fn run_gradcheck(seed: u64, coordinates: usize, tolerance: f64) -> Result<GradCheckReport> {
    let cfg = gradcheck_config();
    let root = RngStream::new(seed);
    let params = ModelParams::init(cfg, &root)?;
    let mut data = root.derive("gradcheck-data");
    let window = WindowSample {
        country_id: data.below(3) as usize,
        origin_year: 2000,
        encoder_input: Matrix::from_fn(cfg.l_enc, 4, |_, _| data.normal()),
        target: (0..cfg.l_pred).map(|_| data.normal()).collect(),
        augmented: false,
    };
    let tf_rng = root.derive("gradcheck-teacher");
    let (_, grads) = window_loss_and_grad(&params, &window, 0.5, &mut tf_rng.clone())?;
    let flat = params.flatten();
    let coords = sample_coordinates(flat.len(), coordinates, &mut root.derive("gradcheck-coords"));
    let mut probe = params.clone();
    let mut failure = None;
    let report = grad_check(
        |x| {
            probe.assign_flat(x).expect("same length");
            let mut r = tf_rng.clone();
            let tf = TeacherForcing {
                targets: Some(&window.target),
                prob: 0.5,
                rng: Some(&mut r),
            };
            match crate::model::forward_with_tape(&probe, &window.encoder_input, window.country_id, tf) {
                Ok((g, _)) => total_loss(&window.target, &g),
                Err(e) => {
                    failure = Some(e);
                    f64::NAN
                }
            }
        },
        &flat,
        &grads.flatten(),
        &coords,
        1e-6,
        tolerance,
    );
    match failure {
        Some(e) => Err(e),
        None => Ok(report),
    }
}
