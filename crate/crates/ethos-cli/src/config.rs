//! Run configuration: a JSON file of optional settings, overridden field by
//! field by command-line flags.

use std::path::Path;

use anyhow::{Context, Result};
use ethos_core::experiments::{CvScheme, ExperimentSpec};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub folds: Option<usize>,
    pub rounds: Option<usize>,
    pub depth: Option<usize>,
    pub lr: Option<f64>,
    pub lambda: Option<f64>,
    pub gamma: Option<f64>,
    pub min_child_weight: Option<f64>,
    pub subsample: Option<f64>,
    /// Number of factors for on-the-fly factor models.
    pub factors: Option<usize>,
    /// Promax power for on-the-fly factor models.
    pub kappa: Option<u32>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        serde_json::from_str(&text)
            .with_context(|| format!("config {} is not valid", path.display()))
    }

    /// Layer `flags` over this config; set flags win.
    pub fn overridden_by(mut self, flags: &RunConfig) -> Self {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if flags.$field.is_some() { self.$field = flags.$field; })*
            };
        }
        take!(seed, folds, rounds, depth, lr, lambda, gamma, min_child_weight, subsample, factors, kappa);
        self
    }

    /// Apply the settings to an experiment spec. The spec's objective and
    /// feature set stay as constructed; only training and CV knobs move.
    pub fn apply_to_spec(&self, spec: &mut ExperimentSpec) {
        if let Some(seed) = self.seed {
            spec.seed = seed;
            spec.boost_params.seed = seed;
        }
        if let Some(folds) = self.folds {
            spec.cv = CvScheme::KFold { folds };
        }
        if let Some(rounds) = self.rounds {
            spec.boost_params.n_rounds = rounds;
        }
        if let Some(depth) = self.depth {
            spec.boost_params.max_depth = depth;
        }
        if let Some(lr) = self.lr {
            spec.boost_params.learning_rate = lr;
        }
        if let Some(lambda) = self.lambda {
            spec.boost_params.lambda = lambda;
        }
        if let Some(gamma) = self.gamma {
            spec.boost_params.gamma = gamma;
        }
        if let Some(w) = self.min_child_weight {
            spec.boost_params.min_child_weight = w;
        }
        if let Some(s) = self.subsample {
            spec.boost_params.subsample = s;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ethos_core::experiments::{ExperimentId, Task};
    use std::io::Write;

    #[test]
    fn flags_override_file_values() {
        let file = RunConfig {
            seed: Some(1),
            folds: Some(10),
            lr: Some(0.05),
            ..RunConfig::default()
        };
        let flags = RunConfig {
            seed: Some(7),
            ..RunConfig::default()
        };
        let merged = file.overridden_by(&flags);
        assert_eq!(merged.seed, Some(7));
        assert_eq!(merged.folds, Some(10));
        assert_eq!(merged.lr, Some(0.05));

        let mut spec = ExperimentSpec::standard(ExperimentId::Ex1, Task::Classification, 0);
        merged.apply_to_spec(&mut spec);
        assert_eq!(spec.seed, 7);
        assert_eq!(spec.boost_params.seed, 7);
        assert_eq!(spec.cv, CvScheme::KFold { folds: 10 });
        assert_eq!(spec.boost_params.learning_rate, 0.05);
        spec.validate().unwrap();
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(br#"{"seed": 3, "boost_rounds": 10}"#).unwrap();
        assert!(RunConfig::load(f.path()).is_err());

        let mut ok = tempfile::NamedTempFile::new().unwrap();
        ok.write_all(br#"{"seed": 3, "rounds": 10}"#).unwrap();
        let cfg = RunConfig::load(ok.path()).unwrap();
        assert_eq!(cfg.seed, Some(3));
        assert_eq!(cfg.rounds, Some(10));
    }
}
