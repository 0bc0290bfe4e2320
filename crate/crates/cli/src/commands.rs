//! Command implementations. Each returns a typed outcome; `main` prints it.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use voe_core::dataset::{generate_dataset, load_dataset, Dataset, DatasetManifest, Split, MANIFEST_FILE};
use voe_core::experiment::{evaluate_run, summarize, train_models, EvalReport, ModelKind, Reality, RunConfig, RunRecord};
use voe_core::reasoning::{OfModel, OfprModel};
use voe_core::scenario::{EventCategory, TrialPair};
use voe_trials::log::{read_log, replay, LOG_FILE};
use voe_trials::service::ServiceOptions;
use voe_trials::{compute_report, ReportFilters, ServiceError, StudyConfig, StudyError, StudyReport, TrialService};

use crate::config::ExperimentConfig;
use crate::error::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Write-temp-then-rename so readers never see partial files.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let fail = |e: std::io::Error| CliError::Failed(format!("{}: {e}", path.display()));
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(fail)?;
    }
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    let mut f = fs::File::create(&tmp).map_err(fail)?;
    f.write_all(bytes).map_err(fail)?;
    f.sync_all().map_err(fail)?;
    fs::rename(&tmp, path).map_err(fail)
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("artifacts serialize");
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

fn read_json<T: DeserializeOwned>(path: &Path, what: &str) -> Result<T, CliError> {
    let bytes = fs::read(path).map_err(|_| CliError::missing(what, path))?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::Failed(format!("{}: {e}", path.display())))
}

// ---- gen ----

#[derive(Clone, Debug, PartialEq)]
pub struct GenOutcome {
    pub dir: PathBuf,
    pub manifest: DatasetManifest,
    /// File name to SHA-256, manifest included.
    pub checksums: BTreeMap<String, String>,
}

impl GenOutcome {
    pub fn render(&self) -> String {
        let m = &self.manifest;
        let mut s = format!("dataset {} (seed {})\n", self.dir.display(), m.seed);
        for (c, n) in &m.counts {
            let sizes = &m.split_sizes[c];
            let get = |sp: Split| sizes.get(&sp).copied().unwrap_or(0);
            let pct = |k: usize| 100.0 * k as f64 / *n as f64;
            let (tr, va, te) = (get(Split::Train), get(Split::Val), get(Split::Test));
            s += &format!(
                "  {} {:<12} {n:>5} trials  train/val/test {tr}/{va}/{te} ({:.0}/{:.0}/{:.0}%)\n",
                c.letter(),
                c.name(),
                pct(tr),
                pct(va),
                pct(te)
            );
        }
        for (name, sum) in &self.checksums {
            s += &format!("  sha256 {sum}  {name}\n");
        }
        s
    }
}

pub fn checksums(dir: &Path, manifest: &DatasetManifest) -> Result<BTreeMap<String, String>, CliError> {
    manifest
        .files
        .values()
        .map(String::as_str)
        .chain([MANIFEST_FILE])
        .map(|name| {
            let path = dir.join(name);
            let bytes = fs::read(&path).map_err(|_| CliError::missing("dataset file", &path))?;
            Ok((name.to_string(), sha256_hex(&bytes)))
        })
        .collect()
}

pub fn cmd_gen(cfg: &ExperimentConfig) -> Result<GenOutcome, CliError> {
    let dir = cfg.dataset_dir();
    let manifest = generate_dataset(&cfg.dataset_config(), &dir).map_err(|e| CliError::Failed(e.to_string()))?;
    let checksums = checksums(&dir, &manifest)?;
    Ok(GenOutcome { dir, manifest, checksums })
}

// ---- train ----

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub kind: ModelKind,
    pub category: EventCategory,
    pub seed: u64,
    pub reality: Reality,
    pub run: RunConfig,
    /// SHA-256 of the dataset manifest the model was trained from.
    pub dataset: String,
    pub train_trials: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile<M> {
    pub meta: ModelMeta,
    pub model: M,
}

fn reality_name(r: Reality) -> &'static str {
    match r {
        Reality::Normal => "normal",
        Reality::Flipped => "flipped",
    }
}

/// `<out>/models/<reality>/<letter>/<kind>-seed<seed>.json`
pub fn model_path(cfg: &ExperimentConfig, category: EventCategory, kind: ModelKind, seed: u64) -> PathBuf {
    cfg.out
        .join("models")
        .join(reality_name(cfg.reality))
        .join(category.letter().to_string())
        .join(format!("{}-seed{seed}.json", kind.name()))
}

pub fn report_path(cfg: &ExperimentConfig, ext: &str) -> PathBuf {
    cfg.out.join("reports").join(format!("eval_{}.{ext}", reality_name(cfg.reality)))
}

struct LoadedDataset {
    dataset: Dataset,
    fingerprint: String,
}

fn load(cfg: &ExperimentConfig) -> Result<LoadedDataset, CliError> {
    let dir = cfg.dataset_dir();
    let manifest_path = dir.join(MANIFEST_FILE);
    let manifest_bytes = fs::read(&manifest_path).map_err(|_| CliError::missing("dataset", &manifest_path))?;
    let categories = cfg.task.categories();
    let dataset = load_dataset(&dir, Some(&categories)).map_err(|e| CliError::Failed(e.to_string()))?;
    for c in &categories {
        if !dataset.manifest.files.contains_key(c) {
            return Err(CliError::missing(format!("category {} in dataset", c.letter()), &dir));
        }
    }
    Ok(LoadedDataset { dataset, fingerprint: sha256_hex(&manifest_bytes) })
}

fn sorted(mut ts: Vec<&TrialPair>) -> Vec<&TrialPair> {
    ts.sort_by(|a, b| a.trial_id.cmp(&b.trial_id));
    ts
}

fn jobs(cfg: &ExperimentConfig) -> Vec<(EventCategory, u64)> {
    cfg.task.categories().into_iter().flat_map(|c| cfg.seeds.iter().map(move |&s| (c, s))).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    pub files: Vec<PathBuf>,
}

impl TrainOutcome {
    pub fn render(&self) -> String {
        let mut s = format!("wrote {} model file(s)\n", self.files.len());
        for f in &self.files {
            s += &format!("  {}\n", f.display());
        }
        s
    }
}

pub fn cmd_train(cfg: &ExperimentConfig) -> Result<TrainOutcome, CliError> {
    let data = load(cfg)?;
    let run = cfg.run_config();
    let files: Vec<Vec<PathBuf>> = jobs(cfg)
        .into_par_iter()
        .map(|(category, seed)| {
            let train = sorted(data.dataset.select(category, Split::Train));
            let models = train_models(&train, &run, seed).map_err(|e| CliError::Failed(format!("{category}: {e}")))?;
            let meta = |kind| ModelMeta {
                kind,
                category,
                seed,
                reality: cfg.reality,
                run,
                dataset: data.fingerprint.clone(),
                train_trials: train.len(),
            };
            let ofpr_path = model_path(cfg, category, ModelKind::Ofpr, seed);
            write_json(&ofpr_path, &ModelFile { meta: meta(ModelKind::Ofpr), model: models.ofpr })?;
            let of_path = model_path(cfg, category, ModelKind::Of, seed);
            write_json(&of_path, &ModelFile { meta: meta(ModelKind::Of), model: models.of })?;
            Ok(vec![ofpr_path, of_path])
        })
        .collect::<Result<_, CliError>>()?;
    Ok(TrainOutcome { files: files.into_iter().flatten().collect() })
}

// ---- eval ----

fn load_model<M: DeserializeOwned>(
    cfg: &ExperimentConfig,
    fingerprint: &str,
    category: EventCategory,
    kind: ModelKind,
    seed: u64,
) -> Result<M, CliError> {
    let path = model_path(cfg, category, kind, seed);
    let file: ModelFile<M> = read_json(&path, "model")?;
    let want = (kind, category, seed, cfg.reality, cfg.run_config(), fingerprint);
    let have = (file.meta.kind, file.meta.category, file.meta.seed, file.meta.reality, file.meta.run, file.meta.dataset.as_str());
    if want != have {
        return Err(CliError::missing("model trained with the current dataset and settings (re-run train)", path));
    }
    Ok(file.model)
}

pub fn cmd_eval(cfg: &ExperimentConfig) -> Result<EvalReport, CliError> {
    let data = load(cfg)?;
    let run = cfg.run_config();
    let mut runs: Vec<RunRecord> = jobs(cfg)
        .into_par_iter()
        .map(|(category, seed)| {
            let ofpr: OfprModel = load_model(cfg, &data.fingerprint, category, ModelKind::Ofpr, seed)?;
            let of: OfModel = load_model(cfg, &data.fingerprint, category, ModelKind::Of, seed)?;
            let test = sorted(data.dataset.select(category, Split::Test));
            let models = voe_core::experiment::TrainedModels { ofpr, of };
            let rates = evaluate_run(&models, &test, &run, seed).map_err(|e| CliError::Failed(format!("{category}: {e}")))?;
            Ok(RunRecord { category, seed, rates })
        })
        .collect::<Result<_, CliError>>()?;
    runs.sort_by_key(|r| (r.category, r.seed));
    let report = summarize(cfg.reality, &cfg.seeds, runs);
    write_json(&report_path(cfg, "json"), &report)?;
    write_atomic(&report_path(cfg, "txt"), report.render().as_bytes())?;
    Ok(report)
}

/// Train and evaluate in flipped reality.
pub fn cmd_flip(cfg: &ExperimentConfig) -> Result<EvalReport, CliError> {
    let cfg = ExperimentConfig { reality: Reality::Flipped, ..cfg.clone() };
    cmd_train(&cfg)?;
    cmd_eval(&cfg)
}

// ---- report ----

/// Reads a study's event log (the file itself or its directory) and
/// recomputes the report from a full replay.
pub fn cmd_report(path: &Path, filters: &ReportFilters) -> Result<StudyReport, CliError> {
    let file = if path.is_dir() { path.join(LOG_FILE) } else { path.to_path_buf() };
    if !file.is_file() {
        return Err(CliError::missing("response log", file));
    }
    let entries = read_log(&file).map_err(|e| CliError::Config(format!("malformed response log: {e}")))?;
    let state = replay(&entries).map_err(|e| CliError::Config(format!("malformed response log: {e}")))?;
    compute_report(&state, filters).map_err(|e| match e {
        StudyError::NoData => CliError::Failed("no completed sessions in the log".into()),
        e => CliError::Failed(e.to_string()),
    })
}

// ---- serve ----

#[derive(Clone, Debug, PartialEq)]
pub struct ServeOptions {
    pub study_dir: PathBuf,
    pub addr: SocketAddr,
    /// Test trials per category; `None` uses the whole test split.
    pub per_category: Option<usize>,
    pub study_seed: u64,
}

/// Opens (or initializes) the study in `opts.study_dir` from the dataset.
pub fn open_study(cfg: &ExperimentConfig, opts: &ServeOptions) -> Result<TrialService, CliError> {
    let data = load(&ExperimentConfig { task: crate::config::Task::All, ..cfg.clone() })?;
    let study = StudyConfig::from_dataset(&data.dataset, opts.study_seed, opts.per_category)
        .map_err(|e| CliError::Config(e.to_string()))?;
    TrialService::open(&opts.study_dir, data.dataset.trials, Some(study), ServiceOptions::default()).map_err(|e| match e {
        ServiceError::Study(StudyError::InvalidConfig(m)) => CliError::Config(m),
        ServiceError::MissingTrial(id) => CliError::missing(format!("trial {id}"), cfg.dataset_dir()),
        e => CliError::Failed(e.to_string()),
    })
}

pub fn cmd_serve(cfg: &ExperimentConfig, opts: &ServeOptions) -> Result<(), CliError> {
    let service = Arc::new(open_study(cfg, opts)?);
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Failed(e.to_string()))?;
    eprintln!("serving {} on http://{}/api/v1", opts.study_dir.display(), opts.addr);
    rt.block_on(voe_trials::http::serve(service, opts.addr)).map_err(|e| CliError::Failed(e.to_string()))
}
