//! Experiment configuration: an optional TOML file with command-line
//! overrides applied on top.
//!
//! ```toml
//! out = "voe-out"
//! task = "all"            # or one of "A".."E"
//! reality = "normal"      # or "flipped"
//! seeds = [0, 1, 2]
//! prior_inputs = "teacher_forcing"
//!
//! [dataset]
//! seed = 0
//! trials = 100            # per category
//! split = [375, 150]      # optional (train, val); test takes the rest
//!
//! [perception]
//! sigma_scalar = 0.1
//! p_flip = 0.0
//! p_irrelevance_error = 0.0
//! seed = 0
//!
//! [train]
//! max_depth = 12
//! min_samples_leaf = 2
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use voe_core::dataset::{DatasetConfig, MIN_TRIALS};
use voe_core::experiment::{Reality, RunConfig};
use voe_core::perception::PerceptionConfig;
use voe_core::reasoning::{PriorInputs, TrainConfig};
use voe_core::scenario::EventCategory;

use crate::error::CliError;

pub const FULL_SCALE_TRIALS: usize = 625;
pub const FULL_SCALE_SPLIT: (usize, usize) = (375, 150);
pub const DEFAULT_RUNS: u64 = 10;

/// `all` or a single category letter.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Task {
    #[default]
    All,
    One(EventCategory),
}

impl Task {
    pub fn categories(self) -> Vec<EventCategory> {
        match self {
            Task::All => EventCategory::ALL.to_vec(),
            Task::One(c) => vec![c],
        }
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut chars = s.chars();
        match (chars.next(), chars.next()) {
            _ if s.eq_ignore_ascii_case("all") => Ok(Task::All),
            (Some(c), None) => EventCategory::from_letter(c).map(Task::One).ok_or_else(|| format!("unknown task {s:?}")),
            _ => Err(format!("unknown task {s:?} (expected all or A-E)")),
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Task::All => f.write_str("all"),
            Task::One(c) => write!(f, "{}", c.letter()),
        }
    }
}

impl Serialize for Task {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Task {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSection {
    /// Defaults to `<out>/dataset`.
    pub path: Option<PathBuf>,
    pub seed: u64,
    pub trials: usize,
    pub split: Option<(usize, usize)>,
}

impl Default for DatasetSection {
    fn default() -> Self {
        Self { path: None, seed: 0, trials: 100, split: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub out: PathBuf,
    pub task: Task,
    pub reality: Reality,
    pub seeds: Vec<u64>,
    pub prior_inputs: PriorInputs,
    pub dataset: DatasetSection,
    pub perception: PerceptionConfig,
    pub train: TrainConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            out: PathBuf::from("voe-out"),
            task: Task::All,
            reality: Reality::Normal,
            seeds: (0..DEFAULT_RUNS).collect(),
            prior_inputs: PriorInputs::default(),
            dataset: DatasetSection::default(),
            perception: PerceptionConfig::default(),
            train: TrainConfig::default(),
        }
    }
}

/// Values given on the command line; `None` keeps the file's value.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub task: Option<Task>,
    pub trials: Option<usize>,
    pub out: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
    pub noise_sigma: Option<f64>,
    pub seeds: Option<Vec<u64>>,
    pub reality: Option<Reality>,
    pub full_scale: bool,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// File (or defaults) first, then flags.
    pub fn resolve(file: Option<&Path>, o: &Overrides) -> Result<Self, CliError> {
        let mut c = match file {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        if o.full_scale {
            c.dataset.trials = FULL_SCALE_TRIALS;
            c.dataset.split = Some(FULL_SCALE_SPLIT);
        }
        if let Some(v) = o.seed {
            c.dataset.seed = v;
        }
        if let Some(v) = o.task {
            c.task = v;
        }
        if let Some(v) = o.trials {
            c.dataset.trials = v;
        }
        if let Some(v) = &o.out {
            c.out = v.clone();
        }
        if let Some(v) = &o.dataset {
            c.dataset.path = Some(v.clone());
        }
        if let Some(v) = o.noise_sigma {
            c.perception.sigma_scalar = v;
        }
        if let Some(v) = &o.seeds {
            c.seeds = v.clone();
        }
        if let Some(v) = o.reality {
            c.reality = v;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.seeds.is_empty() {
            return bad("seeds must not be empty".into());
        }
        if self.dataset.trials < MIN_TRIALS {
            return bad(format!("at least {MIN_TRIALS} trials per category are required"));
        }
        if let Some((train, val)) = self.dataset.split {
            if train == 0 || train + val >= self.dataset.trials {
                return bad(format!("split {train}/{val} leaves no training or test trials out of {}", self.dataset.trials));
            }
        }
        if self.train.max_depth == 0 || self.train.min_samples_leaf == 0 {
            return bad("max_depth and min_samples_leaf must be positive".into());
        }
        self.perception.validate().map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn dataset_dir(&self) -> PathBuf {
        self.dataset.path.clone().unwrap_or_else(|| self.out.join("dataset"))
    }

    pub fn dataset_config(&self) -> DatasetConfig {
        let mut d = DatasetConfig::uniform(self.dataset.seed, self.dataset.trials, &self.task.categories());
        d.split_counts = self.dataset.split;
        d
    }

    pub fn run_config(&self) -> RunConfig {
        RunConfig { perception: self.perception, train: self.train, prior_inputs: self.prior_inputs, reality: self.reality }
    }
}
