//! TOML experiment configuration for `prgd run`.
//!
//! ```toml
//! loss = "scalar_factorization"
//! init = [0.0, 0.0]        # optional, defaults to the origin
//!
//! [data]
//! n = 50
//! feature_dim = 1
//! label_noise = 0.1
//! seed = 3
//!
//! [run]
//! step_size = 0.01
//! steps = 2000
//! noise_radius = 1.0
//! clip_norm = 0.5          # optional
//! seed = 1
//!
//! [privacy]                # optional
//! delta_x = 0.8            # caller-asserted sensitivity
//!
//! [output]                 # optional when --trace is given
//! trace = "run.trace"      # relative to the config file
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use prgd_core::optimizer::{LossKind, RunConfig};
use serde::Deserialize;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub loss: String,
    #[serde(default)]
    pub init: Option<Vec<f64>>,
    pub data: DataSection,
    pub run: RunSection,
    #[serde(default)]
    pub privacy: Option<PrivacySection>,
    #[serde(default)]
    pub output: Option<OutputSection>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub n: usize,
    pub feature_dim: usize,
    pub label_noise: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub step_size: f64,
    pub steps: usize,
    pub noise_radius: f64,
    #[serde(default)]
    pub clip_norm: Option<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrivacySection {
    pub delta_x: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub trace: PathBuf,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates a config; a relative `output.trace` is resolved
    /// against the config file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let mut cfg =
            Self::parse(&text).with_context(|| format!("invalid config {}", path.display()))?;
        if let Some(out) = cfg.output.as_mut() {
            if out.trace.is_relative() {
                let base = path.parent().unwrap_or_else(|| Path::new("."));
                out.trace = base.join(&out.trace);
            }
        }
        Ok(cfg)
    }

    pub fn loss_kind(&self) -> Result<LossKind> {
        self.loss.parse().map_err(|_| {
            let names: Vec<&str> = prgd_core::optimizer::builtin_losses()
                .iter()
                .map(|k| k.name())
                .collect();
            anyhow!("loss: unknown loss {:?}, expected one of {}", self.loss, names.join(", "))
        })
    }

    pub fn run_config(&self) -> RunConfig {
        RunConfig {
            step_size: self.run.step_size,
            steps: self.run.steps,
            noise_radius: self.run.noise_radius,
            clip_norm: self.run.clip_norm,
            seed: self.run.seed,
        }
    }

    pub fn parameter_dim(&self) -> Result<usize> {
        Ok(self.loss_kind()?.model(self.data.feature_dim)?.parameter_dim())
    }

    pub fn initial_point(&self) -> Result<Vec<f64>> {
        let dim = self.parameter_dim()?;
        match &self.init {
            Some(w) => Ok(w.clone()),
            None => Ok(vec![0.0; dim]),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let kind = self.loss_kind()?;
        if self.data.n == 0 {
            bail!("data.n must be at least 1");
        }
        if self.data.feature_dim == 0 {
            bail!("data.feature_dim must be at least 1");
        }
        if !(self.data.label_noise >= 0.0 && self.data.label_noise.is_finite()) {
            bail!("data.label_noise must be a finite value >= 0");
        }
        let dim = kind
            .model(self.data.feature_dim)
            .map_err(|e| anyhow!("data.feature_dim: {e}"))?
            .parameter_dim();
        self.run_config()
            .validate()
            .map_err(|e| anyhow!("run: {e}"))?;
        if let Some(w) = &self.init {
            if w.len() != dim {
                bail!("init: expected {dim} components for loss {}, got {}", self.loss, w.len());
            }
            if w.iter().any(|x| !x.is_finite()) {
                bail!("init: components must be finite");
            }
        }
        if let Some(p) = &self.privacy {
            if !(p.delta_x >= 0.0 && p.delta_x.is_finite()) {
                bail!("privacy.delta_x must be a finite value >= 0");
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
loss = "scalar_factorization"

[data]
n = 50
feature_dim = 1
label_noise = 0.1
seed = 3

[run]
step_size = 0.01
steps = 2000
noise_radius = 1.0
seed = 1
"#;

    #[test]
    fn parses_minimal_config() {
        let cfg = ExperimentConfig::parse(BASE).unwrap();
        assert_eq!(cfg.loss_kind().unwrap(), LossKind::ScalarFactorization);
        assert_eq!(cfg.initial_point().unwrap(), [0.0, 0.0]);
        assert_eq!(cfg.run_config().steps, 2000);
        assert!(cfg.output.is_none());
    }

    fn err(text: &str) -> String {
        format!("{:#}", ExperimentConfig::parse(text).unwrap_err())
    }

    #[test]
    fn reports_field_names() {
        assert!(err(&BASE.replace("scalar_factorization", "hinge")).contains("loss"));
        assert!(err(&BASE.replace("step_size = 0.01", "step_size = -1.0")).contains("step_size"));
        assert!(err(&BASE.replace("steps = 2000", "steps = 0")).contains("steps"));
        assert!(err(&BASE.replace("feature_dim = 1", "feature_dim = 2")).contains("feature_dim"));
        assert!(err(&BASE.replace("n = 50", "n = 0")).contains("data.n"));
        assert!(err(&BASE.replace("seed = 1\n", "seed = 1\nmomentum = 0.9\n")).contains("momentum"));
        assert!(err(&BASE.replace("loss = \"scalar_factorization\"", "loss = \"scalar_factorization\"\ninit = [1.0]")).contains("init"));
        assert!(err(&format!("{BASE}\n[privacy]\ndelta_x = -1.0\n")).contains("privacy.delta_x"));
    }
}
