use std::fs;
use std::path::Path;

use metaweight::synth::{SynthExperiment, SynthModelSpec, SynthWorldSpec};
use metaweight::{AccuracySource, Error, SizeMode, WeightingConfig};
use serde::{Deserialize, Serialize};

use crate::args::{CommonArgs, Mode, WeightingArgs};

/// `models` in a config file: bundle model names to select, or full
/// synthetic model descriptions for `simulate` and synthetic `ablate`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelsField {
    Names(Vec<String>),
    Specs(Vec<SynthModelSpec>),
}

/// Everything a config file may set. Every key is optional.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub lambda_init: Option<f64>,
    pub delta: Option<f64>,
    pub lambda_min: Option<f64>,
    pub lambda_max: Option<f64>,
    pub acc_source: Option<AccuracySource>,
    pub size_mode: Option<SizeMode>,
    pub normalize_weights: Option<bool>,
    pub mode: Option<Mode>,
    pub models: Option<ModelsField>,
    pub seed: Option<u64>,
    pub num_seeds: Option<usize>,
    pub warmup: Option<usize>,
    pub reps: Option<usize>,
    pub fractions: Option<[f64; 3]>,
    pub world: Option<SynthWorldSpec>,
}

impl RunConfig {
    pub fn load(common: &CommonArgs) -> Result<Self, Error> {
        let mut cfg = match &common.config {
            None => RunConfig::default(),
            Some(path) => Self::read(path)?,
        };
        if common.seed.is_some() {
            cfg.seed = common.seed;
        }
        Ok(cfg)
    }

    fn read(path: &Path) -> Result<Self, Error> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            file: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// Applies weighting flags on top of the file values.
    pub fn apply(&mut self, flags: &WeightingArgs) {
        self.lambda_init = flags.lambda_init.or(self.lambda_init);
        self.delta = flags.delta.or(self.delta);
        self.lambda_min = flags.lambda_min.or(self.lambda_min);
        self.lambda_max = flags.lambda_max.or(self.lambda_max);
        self.size_mode = flags.size_mode.map(Into::into).or(self.size_mode);
        self.acc_source = flags.acc_source.map(Into::into).or(self.acc_source);
        if flags.normalize_weights {
            self.normalize_weights = Some(true);
        }
        if let Some(names) = &flags.models {
            self.models = Some(ModelsField::Names(names.clone()));
        }
    }

    pub fn weighting(&self) -> Result<WeightingConfig, Error> {
        let d = WeightingConfig::default();
        let cfg = WeightingConfig {
            lambda_init: self.lambda_init.unwrap_or(d.lambda_init),
            delta: self.delta.unwrap_or(d.delta),
            lambda_min: self.lambda_min.unwrap_or(d.lambda_min),
            lambda_max: self.lambda_max.unwrap_or(d.lambda_max),
            acc_source: self.acc_source.unwrap_or(d.acc_source),
            size_mode: self.size_mode.unwrap_or(d.size_mode),
            normalize_weights: self.normalize_weights.unwrap_or(d.normalize_weights),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn model_names(&self) -> Result<Option<Vec<String>>, Error> {
        match &self.models {
            None => Ok(None),
            Some(ModelsField::Names(n)) => Ok(Some(n.clone())),
            Some(ModelsField::Specs(_)) => Err(Error::InvalidConfig(
                "`models` holds synthetic model specs; this command expects model names".into(),
            )),
        }
    }

    /// The synthetic experiment, with `seed` overriding the world's seed.
    pub fn experiment(&self) -> Result<SynthExperiment, Error> {
        let (Some(world), Some(ModelsField::Specs(models))) = (&self.world, &self.models) else {
            return Err(Error::InvalidConfig(
                "config needs `world` and `models` (synthetic model specs)".into(),
            ));
        };
        let mut world = world.clone();
        if let Some(seed) = self.seed {
            world.seed = seed;
        }
        Ok(SynthExperiment {
            world,
            models: models.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags() -> WeightingArgs {
        WeightingArgs {
            lambda_init: None,
            delta: Some(0.2),
            lambda_min: None,
            lambda_max: None,
            size_mode: None,
            acc_source: None,
            normalize_weights: false,
            models: None,
        }
    }

    #[test]
    fn defaults_are_the_reference_configuration() {
        assert_eq!(RunConfig::default().weighting().unwrap(), WeightingConfig::default());
    }

    #[test]
    fn flags_override_file() {
        let mut cfg: RunConfig = serde_json::from_str(r#"{"delta": 0.05, "lambda_max": 0.8, "models": ["a", "b"]}"#).unwrap();
        cfg.apply(&flags());
        let w = cfg.weighting().unwrap();
        assert_eq!((w.delta, w.lambda_max, w.lambda_init), (0.2, 0.8, 0.5));
        assert_eq!(cfg.model_names().unwrap(), Some(vec!["a".to_string(), "b".to_string()]));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"lamda": 1}"#).is_err());
    }
}
