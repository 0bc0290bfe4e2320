//! Noisy feature oracle standing in for a learned perception stage.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{slot, FeatureVector, SlotKind, FEATURES, FEATURE_COUNT, IRRELEVANT};

/// Velocity-derived slots are perceived with twice the scalar noise.
pub const VELOCITY_SLOTS: [usize; 3] = [slot::OBJECT_SPEED, slot::SECOND_SPEED, slot::OBJECT_MOMENTUM];
pub const VELOCITY_NOISE_FACTOR: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerceptionConfig {
    /// Standard deviation of the relative scalar error.
    pub sigma_scalar: f64,
    pub p_flip: f64,
    pub p_irrelevance_error: f64,
    pub seed: u64,
}

impl Default for PerceptionConfig {
    fn default() -> Self {
        Self { sigma_scalar: 0.0, p_flip: 0.0, p_irrelevance_error: 0.0, seed: 0 }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum PerceptionError {
    #[error("{name} = {value} must lie in [0, 1]")]
    Probability { name: &'static str, value: f64 },
    #[error("sigma_scalar = {0} must be finite and non-negative")]
    Sigma(f64),
}

impl PerceptionConfig {
    pub fn noise_free() -> Self {
        Self::default()
    }

    pub fn with_sigma(sigma: f64) -> Self {
        Self { sigma_scalar: sigma, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), PerceptionError> {
        if !(self.sigma_scalar.is_finite() && self.sigma_scalar >= 0.0) {
            return Err(PerceptionError::Sigma(self.sigma_scalar));
        }
        for (name, value) in [("p_flip", self.p_flip), ("p_irrelevance_error", self.p_irrelevance_error)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(PerceptionError::Probability { name, value });
            }
        }
        Ok(())
    }

    pub fn is_noise_free(&self) -> bool {
        self.sigma_scalar == 0.0 && self.p_flip == 0.0 && self.p_irrelevance_error == 0.0
    }
}

fn random_value(i: usize, rng: &mut impl Rng) -> f64 {
    let d = &FEATURES[i];
    match d.kind {
        SlotKind::Categorical => rng.random_range(0..d.labels.len()) as f64,
        SlotKind::Scalar if d.range.1 > d.range.0 => rng.random_range(d.range.0..=d.range.1),
        SlotKind::Scalar => d.range.0,
    }
}

/// Corrupts a ground-truth vector. Random draws are skipped for disabled
/// corruption kinds, so the noise-free configuration is the identity.
pub fn perceive(truth: &FeatureVector, cfg: &PerceptionConfig, rng: &mut impl Rng) -> FeatureVector {
    let mut out = *truth;
    for i in 0..FEATURE_COUNT {
        let x = truth.0[i];
        let relevant = x != IRRELEVANT;
        if cfg.p_irrelevance_error > 0.0 && rng.random_bool(cfg.p_irrelevance_error) {
            out.0[i] = if relevant { IRRELEVANT } else { random_value(i, rng) };
            continue;
        }
        if !relevant {
            continue;
        }
        match FEATURES[i].kind {
            SlotKind::Scalar if cfg.sigma_scalar > 0.0 => {
                let factor = if VELOCITY_SLOTS.contains(&i) { VELOCITY_NOISE_FACTOR } else { 1.0 };
                let eps = Normal::new(0.0, cfg.sigma_scalar * factor).expect("validated sigma").sample(rng);
                out.0[i] = (x * (1.0 + eps)).max(0.0);
            }
            SlotKind::Categorical if cfg.p_flip > 0.0 && rng.random_bool(cfg.p_flip) => {
                let n = FEATURES[i].labels.len();
                let current = x as usize;
                let pick = rng.random_range(0..n - 1);
                out.0[i] = (if pick >= current { pick + 1 } else { pick }) as f64;
            }
            _ => {}
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::extract_features;
    use crate::rng::stream;
    use crate::scenario::{sample_spec, EventCategory, SubType};
    use proptest::prelude::*;

    fn truth() -> FeatureVector {
        extract_features(&sample_spec(EventCategory::Containment, SubType::C1, 4).unwrap())
    }

    #[test]
    fn noise_free_is_identity() {
        let t = truth();
        let out = perceive(&t, &PerceptionConfig::noise_free(), &mut stream(&[1]));
        assert_eq!(out.0.map(f64::to_bits), t.0.map(f64::to_bits));
    }

    #[test]
    fn relative_error_matches_half_normal_mean() {
        // E|N(0, 0.1)| = 0.1 * sqrt(2 / pi)
        let oracle = 0.1 * (2.0 / std::f64::consts::PI).sqrt();
        let mut f = FeatureVector::irrelevant();
        f.0[slot::OBJECT_HEIGHT] = 1.0;
        let cfg = PerceptionConfig::with_sigma(0.1);
        let mut rng = stream(&[2]);
        let n = 100_000;
        let total: f64 = (0..n).map(|_| (perceive(&f, &cfg, &mut rng).0[slot::OBJECT_HEIGHT] - 1.0).abs()).sum();
        let mare = total / n as f64;
        assert!((mare - 0.0798).abs() < 0.005, "{mare}");
        assert!((mare - oracle).abs() < 0.005);
    }

    #[test]
    fn irrelevant_stays_irrelevant_without_relevance_errors() {
        let t = truth();
        let cfg = PerceptionConfig { sigma_scalar: 0.3, p_flip: 0.5, ..Default::default() };
        let out = perceive(&t, &cfg, &mut stream(&[3]));
        for i in 0..FEATURE_COUNT {
            assert_eq!(t.0[i] == IRRELEVANT, out.0[i] == IRRELEVANT);
        }
    }

    #[test]
    fn bad_config_rejected() {
        assert!(PerceptionConfig { p_flip: 1.5, ..Default::default() }.validate().is_err());
        assert!(PerceptionConfig::with_sigma(-0.1).validate().is_err());
    }

    proptest! {
        #[test]
        fn protocol_preserved(
            sigma in 0.0f64..1.0,
            p_flip in 0.0f64..=1.0,
            p_irr in 0.0f64..=1.0,
            seed in any::<u64>(),
            idx in 0usize..12,
        ) {
            let st = SubType::ALL[idx];
            let t = extract_features(&sample_spec(st.category(), st, seed).unwrap());
            let cfg = PerceptionConfig { sigma_scalar: sigma, p_flip, p_irrelevance_error: p_irr, seed };
            let a = perceive(&t, &cfg, &mut stream(&[seed]));
            let b = perceive(&t, &cfg, &mut stream(&[seed]));
            prop_assert_eq!(a, b);
            for (i, d) in FEATURES.iter().enumerate() {
                let v = a.0[i];
                prop_assert!(v == IRRELEVANT || v >= 0.0);
                if d.kind == SlotKind::Categorical && v != IRRELEVANT {
                    prop_assert!(v.fract() == 0.0 && (v as usize) < d.labels.len());
                }
            }
        }
    }
}
