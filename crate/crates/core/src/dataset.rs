//! Dataset generation, splits and on-disk layout.
//!
//! A dataset directory holds `manifest.json` plus one `trials_<X>.jsonl`
//! file per generated category, one [`TrialPair`] per line.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::catalog_schema;
use crate::physics::SimError;
use crate::rng::{derive_seed, stream};
use crate::scenario::{build_trial, sample_spec, EventCategory, ScenarioError, TrialPair};

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const MIN_TRIALS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub seed: u64,
    pub trials: BTreeMap<EventCategory, usize>,
    /// Explicit `(train, val)` counts per category; test takes the rest.
    /// `None` uses floor(75%) / floor(15%).
    #[serde(default)]
    pub split_counts: Option<(usize, usize)>,
}

impl DatasetConfig {
    pub fn uniform(seed: u64, per_category: usize, categories: &[EventCategory]) -> Self {
        Self { seed, trials: categories.iter().map(|c| (*c, per_category)).collect(), split_counts: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub seed: u64,
    pub counts: BTreeMap<EventCategory, usize>,
    pub split_sizes: BTreeMap<EventCategory, BTreeMap<Split, usize>>,
    pub splits: BTreeMap<String, Split>,
    pub files: BTreeMap<EventCategory, String>,
    pub catalog: serde_json::Value,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("at least {MIN_TRIALS} trials per category are required ({category}: {count})")]
    TooFewTrials { category: EventCategory, count: usize },
    #[error("split counts {train}+{val} exceed {total} trials")]
    BadSplit { train: usize, val: usize, total: usize },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io { path: path.to_path_buf(), source }
}

pub fn trial_id(category: EventCategory, index: usize) -> String {
    format!("{}-{index:05}", category.letter())
}

/// Order-independent per-trial seed.
pub fn trial_seed(global: u64, category: EventCategory, index: usize) -> u64 {
    derive_seed(&[global, category.index() as u64, index as u64])
}

/// Builds trial `index` of `category`; sub-types are assigned round-robin.
pub fn generate_trial(global: u64, category: EventCategory, index: usize) -> Result<TrialPair, DatasetError> {
    let subtypes = category.subtypes();
    let subtype = subtypes[index % subtypes.len()];
    let spec = sample_spec(category, subtype, trial_seed(global, category, index))?;
    Ok(build_trial(trial_id(category, index), spec)?)
}

/// Split of each trial index of a category of `n` trials.
pub fn assign_splits(global: u64, category: EventCategory, n: usize, counts: Option<(usize, usize)>) -> Vec<Split> {
    let (train, val) = counts.unwrap_or((n * 75 / 100, n * 15 / 100));
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream(&[global, category.index() as u64, 0x5911]));
    let mut out = vec![Split::Test; n];
    for (rank, &i) in order.iter().enumerate() {
        out[i] = if rank < train {
            Split::Train
        } else if rank < train + val {
            Split::Val
        } else {
            Split::Test
        };
    }
    out
}

/// In-memory generation; trials are built in parallel and returned in index order.
pub fn generate_trials(cfg: &DatasetConfig) -> Result<Vec<(TrialPair, Split)>, DatasetError> {
    let mut out = Vec::new();
    for (&category, &n) in &cfg.trials {
        if n < MIN_TRIALS {
            return Err(DatasetError::TooFewTrials { category, count: n });
        }
        if let Some((train, val)) = cfg.split_counts {
            if train + val > n {
                return Err(DatasetError::BadSplit { train, val, total: n });
            }
        }
        let splits = assign_splits(cfg.seed, category, n, cfg.split_counts);
        let trials: Vec<TrialPair> =
            (0..n).into_par_iter().map(|i| generate_trial(cfg.seed, category, i)).collect::<Result<_, _>>()?;
        out.extend(trials.into_iter().zip(splits));
    }
    Ok(out)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), DatasetError> {
    let tmp = path.with_extension("tmp");
    let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
    f.write_all(bytes).map_err(io_err(&tmp))?;
    f.sync_all().map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

pub fn generate_dataset(cfg: &DatasetConfig, dir: &Path) -> Result<DatasetManifest, DatasetError> {
    let trials = generate_trials(cfg)?;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut manifest = DatasetManifest {
        format_version: FORMAT_VERSION,
        seed: cfg.seed,
        counts: cfg.trials.clone(),
        split_sizes: BTreeMap::new(),
        splits: BTreeMap::new(),
        files: BTreeMap::new(),
        catalog: serde_json::to_value(catalog_schema()).expect("catalog serializes"),
    };
    let mut lines: BTreeMap<EventCategory, Vec<u8>> = BTreeMap::new();
    for (t, split) in &trials {
        let buf = lines.entry(t.category()).or_default();
        serde_json::to_writer(&mut *buf, t).expect("trial serializes");
        buf.push(b'\n');
        manifest.splits.insert(t.trial_id.clone(), *split);
        *manifest.split_sizes.entry(t.category()).or_default().entry(*split).or_default() += 1;
    }
    for (category, bytes) in lines {
        let name = format!("trials_{}.jsonl", category.letter());
        write_atomic(&dir.join(&name), &bytes)?;
        manifest.files.insert(category, name);
    }
    let mut text = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    text.push(b'\n');
    write_atomic(&dir.join(MANIFEST_FILE), &text)?;
    Ok(manifest)
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub trials: Vec<TrialPair>,
}

impl Dataset {
    pub fn split_of(&self, t: &TrialPair) -> Option<Split> {
        self.manifest.splits.get(&t.trial_id).copied()
    }

    pub fn select(&self, category: EventCategory, split: Split) -> Vec<&TrialPair> {
        self.trials.iter().filter(|t| t.category() == category && self.split_of(t) == Some(split)).collect()
    }
}

pub fn load_manifest(dir: &Path) -> Result<DatasetManifest, DatasetError> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read(&path).map_err(io_err(&path))?;
    serde_json::from_slice(&text).map_err(|source| DatasetError::Json { path, source })
}

pub fn load_dataset(dir: &Path, categories: Option<&[EventCategory]>) -> Result<Dataset, DatasetError> {
    let manifest = load_manifest(dir)?;
    let mut trials = Vec::new();
    for (category, name) in &manifest.files {
        if categories.is_some_and(|cs| !cs.contains(category)) {
            continue;
        }
        let path = dir.join(name);
        let f = fs::File::open(&path).map_err(io_err(&path))?;
        for line in BufReader::new(f).lines() {
            let line = line.map_err(io_err(&path))?;
            if line.trim().is_empty() {
                continue;
            }
            let t: TrialPair =
                serde_json::from_str(&line).map_err(|source| DatasetError::Json { path: path.clone(), source })?;
            trials.push(t);
        }
    }
    Ok(Dataset { manifest, trials })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::SubType;

    #[test]
    fn split_proportions() {
        let s = assign_splits(3, EventCategory::Support, 100, None);
        let count = |x: Split| s.iter().filter(|&&y| y == x).count();
        assert_eq!((count(Split::Train), count(Split::Val), count(Split::Test)), (75, 15, 10));
        let s = assign_splits(3, EventCategory::Support, 625, Some((375, 150)));
        let count = |x: Split| s.iter().filter(|&&y| y == x).count();
        assert_eq!((count(Split::Train), count(Split::Val), count(Split::Test)), (375, 150, 100));
    }

    #[test]
    fn trial_content_is_independent_of_generation_order() {
        let a = generate_trial(5, EventCategory::Barrier, 7).unwrap();
        let _ = generate_trial(5, EventCategory::Barrier, 3).unwrap();
        let b = generate_trial(5, EventCategory::Barrier, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.spec.seed, generate_trial(6, EventCategory::Barrier, 7).unwrap().spec.seed);
    }

    #[test]
    fn subtypes_round_robin() {
        let cfg = DatasetConfig::uniform(1, 10, &[EventCategory::Collision]);
        let trials = generate_trials(&cfg).unwrap();
        let d1 = trials.iter().filter(|(t, _)| t.spec.subtype == SubType::D1).count();
        let d3 = trials.iter().filter(|(t, _)| t.spec.subtype == SubType::D3).count();
        assert_eq!((d1, d3), (4, 3));
    }

    #[test]
    fn too_few_trials_rejected() {
        let cfg = DatasetConfig::uniform(1, 5, &[EventCategory::Support]);
        assert!(matches!(generate_trials(&cfg), Err(DatasetError::TooFewTrials { .. })));
    }

    #[test]
    fn write_and_reload() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = DatasetConfig::uniform(9, 12, &EventCategory::ALL);
        let m = generate_dataset(&cfg, dir.path()).unwrap();
        assert_eq!(m.splits.len(), 60);
        let d = load_dataset(dir.path(), None).unwrap();
        assert_eq!(d.trials.len(), 60);
        assert_eq!(d.manifest, m);
        let only_c = load_dataset(dir.path(), Some(&[EventCategory::Containment])).unwrap();
        assert!(only_c.trials.iter().all(|t| t.category() == EventCategory::Containment));
        let bytes = fs::read(dir.path().join("trials_A.jsonl")).unwrap();
        let again = tempfile::tempdir().unwrap();
        generate_dataset(&cfg, again.path()).unwrap();
        assert_eq!(bytes, fs::read(again.path().join("trials_A.jsonl")).unwrap());
    }

    #[test]
    fn missing_directory_names_the_path() {
        let err = load_manifest(Path::new("/nonexistent/voe")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/voe"));
    }
}
