#![allow(dead_code)]

use std::collections::HashMap;
use std::path::Path;
use std::sync::{Arc, OnceLock};

use voe_core::dataset::{generate_dataset, load_dataset, Dataset, DatasetConfig};
use voe_core::scenario::{EventCategory, TrialPair};
use voe_trials::service::{Clock, ServiceOptions};
use voe_trials::{StudyConfig, TrialService};

/// 100 trials per category split 20/30/50, so the test split holds the
/// 250 trials of a full study.
pub fn dataset() -> &'static Dataset {
    static DS: OnceLock<Dataset> = OnceLock::new();
    DS.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = DatasetConfig::uniform(11, 100, &EventCategory::ALL);
        cfg.split_counts = Some((20, 30));
        generate_dataset(&cfg, dir.path()).unwrap();
        load_dataset(dir.path(), None).unwrap()
    })
}

pub fn trial_map() -> HashMap<String, TrialPair> {
    dataset().trials.iter().map(|t| (t.trial_id.clone(), t.clone())).collect()
}

pub fn study_config(per_category: Option<usize>) -> StudyConfig {
    StudyConfig::from_dataset(dataset(), 5, per_category).unwrap()
}

pub fn fixed_clock() -> Clock {
    Arc::new(|| 1_700_000_000_000)
}

pub fn options(snapshot_every: u64) -> ServiceOptions {
    ServiceOptions { snapshot_every, clock: fixed_clock() }
}

pub fn open(dir: &Path, per_category: Option<usize>, snapshot_every: u64) -> TrialService {
    TrialService::open(dir, dataset().trials.clone(), Some(study_config(per_category)), options(snapshot_every)).unwrap()
}
