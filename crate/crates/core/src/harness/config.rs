use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{GlnoError, Result};
use crate::nn::{DomainKind, NetworkConfig, TaskKind};

/// Flat `key = value` document; `#` starts a comment.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    entries: BTreeMap<String, (usize, String)>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| GlnoError::Parse(format!("line {}: expected key = value", n + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || k.contains(char::is_whitespace) {
                return Err(GlnoError::Parse(format!("line {}: bad key {k:?}", n + 1)));
            }
            if entries
                .insert(k.to_string(), (n + 1, v.to_string()))
                .is_some()
            {
                return Err(GlnoError::Parse(format!(
                    "line {}: duplicate key {k}",
                    n + 1
                )));
            }
        }
        Ok(Self { entries })
    }

    /// Removes and parses `key` when present.
    pub fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.entries.remove(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse::<T>()
                .map(Some)
                .map_err(|_| GlnoError::Parse(format!("line {line}: bad value {v:?} for {key}"))),
        }
    }

    pub fn take_or<T: FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        Ok(self.take(key)?.unwrap_or(default))
    }

    /// Fails on any key not consumed by `take`.
    pub fn finish(self) -> Result<()> {
        match self.entries.iter().next() {
            None => Ok(()),
            Some((k, (line, _))) => Err(GlnoError::Parse(format!("line {line}: unknown key {k}"))),
        }
    }
}

fn take_network(kv: &mut KeyValues, base: NetworkConfig) -> Result<NetworkConfig> {
    let gauss_width = match kv.take::<String>("gauss_width")? {
        None => base.gauss_width,
        Some(v) if v == "auto" => None,
        Some(v) => Some(
            v.parse()
                .map_err(|_| GlnoError::Parse(format!("bad gauss_width {v:?}")))?,
        ),
    };
    Ok(NetworkConfig {
        channels: kv.take_or("channels", base.channels)?,
        blocks: kv.take_or("blocks", base.blocks)?,
        modes: kv.take_or("modes", base.modes)?,
        modes_x: kv.take_or("modes_x", base.modes_x)?,
        poles: kv.take_or("poles", base.poles)?,
        sigmas: kv.take_or("sigmas", base.sigmas)?,
        gauss_width,
        renormalize_gauss: kv.take_or("renormalize_gauss", base.renormalize_gauss)?,
        fusion: kv.take_or("fusion", base.fusion)?,
        learn_sigma: kv.take_or("learn_sigma", base.learn_sigma)?,
        stable_poles: kv.take_or("stable_poles", base.stable_poles)?,
        spectral: kv.take_or("spectral", base.spectral)?,
        bias: kv.take_or("bias", base.bias)?,
        ..base
    })
}

/// Per-channel input and target scaling fitted on the training split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scaling {
    None,
    /// Zero mean, unit variance.
    Standard,
    /// Unit root mean square without centering, so zero stays zero.
    Scale,
}

impl FromStr for Scaling {
    type Err = GlnoError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" | "false" => Ok(Self::None),
            "standard" | "true" => Ok(Self::Standard),
            "scale" => Ok(Self::Scale),
            other => Err(GlnoError::Parse(format!("unknown normalization {other}"))),
        }
    }
}

/// Regression training objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// Per-sample relative L2, the evaluation metric itself.
    RelativeL2,
    /// Weighted mean squared error of standardized outputs. Insensitive to
    /// near-zero targets, whose relative error has unbounded gradients.
    Mse,
}

impl FromStr for LossKind {
    type Err = GlnoError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relative_l2" => Ok(Self::RelativeL2),
            "mse" => Ok(Self::Mse),
            other => Err(GlnoError::Parse(format!("unknown loss {other}"))),
        }
    }
}

/// Training run: dataset, network shape and optimizer schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Expected task name of the dataset, checked when given.
    pub task: Option<String>,
    pub dataset: PathBuf,
    pub out: Option<PathBuf>,
    /// Shape keys; domain, channel counts and task kind come from the dataset.
    pub network: NetworkConfig,
    pub epochs: usize,
    pub base_lr: f64,
    /// Epochs between learning-rate halvings.
    pub lr_halving: usize,
    pub seed: u64,
    pub eval_every: usize,
    pub batch_size: usize,
    /// Uses only the first `max_train` training samples when nonzero.
    pub max_train: usize,
    pub normalize: Scaling,
    /// Stops after the epoch that crosses this many seconds when nonzero.
    pub time_budget: f64,
    pub loss: LossKind,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            task: None,
            dataset: PathBuf::new(),
            out: None,
            network: NetworkConfig::default(),
            epochs: 1000,
            base_lr: 1e-3,
            lr_halving: 100,
            seed: 0,
            eval_every: 10,
            batch_size: 8,
            max_train: 0,
            normalize: Scaling::Standard,
            time_budget: 0.0,
            loss: LossKind::RelativeL2,
        }
    }
}

impl RunConfig {
    /// Parses a config document; relative paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut kv = KeyValues::parse(text)?;
        let d = Self::default();
        let dataset: String = kv
            .take("dataset")?
            .ok_or_else(|| GlnoError::Parse("missing key dataset".into()))?;
        let cfg = Self {
            task: kv.take("task")?,
            dataset: base_dir.join(dataset),
            out: kv.take::<String>("out")?.map(|o| base_dir.join(o)),
            network: take_network(&mut kv, d.network.clone())?,
            epochs: kv.take_or("epochs", d.epochs)?,
            base_lr: kv.take_or("base_lr", d.base_lr)?,
            lr_halving: kv.take_or("lr_halving", d.lr_halving)?,
            seed: kv.take_or("seed", d.seed)?,
            eval_every: kv.take_or("eval_every", d.eval_every)?,
            batch_size: kv.take_or("batch_size", d.batch_size)?,
            max_train: kv.take_or("max_train", d.max_train)?,
            normalize: kv.take_or("normalize", d.normalize)?,
            time_budget: kv.take_or("time_budget", d.time_budget)?,
            loss: kv.take_or("loss", d.loss)?,
        };
        kv.finish()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GlnoError::Parse(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.eval_every == 0 || self.batch_size == 0 || self.lr_halving == 0
        {
            return Err(GlnoError::InvalidArgument(
                "epochs, eval_every, batch_size and lr_halving must be positive".into(),
            ));
        }
        if !(self.base_lr > 0.0 && self.base_lr.is_finite()) {
            return Err(GlnoError::InvalidArgument(format!(
                "base_lr {} must be positive",
                self.base_lr
            )));
        }
        if !(self.time_budget >= 0.0 && self.time_budget.is_finite()) {
            return Err(GlnoError::InvalidArgument(
                "time_budget must be nonnegative".into(),
            ));
        }
        // Dimensions are placeholders until the dataset is known.
        self.network.validate()
    }

    /// `base_lr * 0.5^floor(epoch / lr_halving)`.
    pub fn learning_rate(&self, epoch: usize) -> f64 {
        self.base_lr * 0.5f64.powi((epoch / self.lr_halving) as i32)
    }
}

/// Toy network and domain for `gradcheck`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckConfig {
    pub network: NetworkConfig,
    /// Grid length `K` (1D), `nx x nt` (2D) or a mesh given as a path or
    /// `grid:<nx>x<ny>` for a flat rectangle.
    pub grid: usize,
    pub nx: usize,
    pub mesh: String,
    pub step: f64,
    pub per_param: usize,
    pub tolerance: f64,
    pub seed: u64,
}

impl GradcheckConfig {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut kv = KeyValues::parse(text)?;
        let domain = match kv.take_or("domain", "grid1d".to_string())?.as_str() {
            "grid1d" => DomainKind::Grid1d,
            "grid2d" => DomainKind::Grid2d,
            "mesh" => DomainKind::Mesh,
            other => return Err(GlnoError::Parse(format!("unknown domain {other}"))),
        };
        let task = match kv.take_or("task", "regression".to_string())?.as_str() {
            "regression" => TaskKind::Regression,
            "classification" => TaskKind::NodeClassification,
            other => return Err(GlnoError::Parse(format!("unknown task {other}"))),
        };
        let base = NetworkConfig {
            domain,
            task,
            channels: 4,
            blocks: 2,
            modes: 4,
            modes_x: 2,
            poles: 2,
            sigmas: 2,
            in_dim: kv.take_or("in_dim", 2)?,
            out_dim: kv.take_or("out_dim", 2)?,
            fusion: domain == DomainKind::Mesh,
            ..NetworkConfig::default()
        };
        let network = take_network(&mut kv, base)?;
        let mesh: String = kv.take_or("mesh", "grid:4x4".to_string())?;
        let mesh = if mesh.starts_with("grid:") {
            mesh
        } else {
            base_dir.join(mesh).display().to_string()
        };
        let cfg = Self {
            network,
            grid: kv.take_or("grid", 128)?,
            nx: kv.take_or("nx", 6)?,
            mesh,
            step: kv.take_or("step", 1e-4)?,
            per_param: kv.take_or("per_param", 6)?,
            tolerance: kv.take_or("tolerance", 1e-4)?,
            seed: kv.take_or("seed", 0)?,
        };
        kv.finish()?;
        cfg.network.validate()?;
        if !(cfg.step > 0.0 && cfg.tolerance > 0.0) || cfg.per_param == 0 {
            return Err(GlnoError::InvalidArgument(
                "step, tolerance and per_param must be positive".into(),
            ));
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GlnoError::Parse(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_defaults_and_paths() {
        let cfg = RunConfig::parse(
            "# run\ndataset = data/diff  # relative\nepochs = 3\nchannels = 8\nlearn_sigma = false\nsigmas = 1\n",
            Path::new("/tmp/x"),
        )
        .unwrap();
        assert_eq!(cfg.dataset, PathBuf::from("/tmp/x/data/diff"));
        assert_eq!(cfg.epochs, 3);
        assert_eq!(cfg.network.channels, 8);
        assert!(!cfg.network.learn_sigma);
        assert_eq!(cfg.base_lr, 1e-3);
    }

    #[test]
    fn rejects_bad_documents() {
        let p = Path::new(".");
        assert!(RunConfig::parse("epochs = 3\n", p).is_err());
        assert!(RunConfig::parse("dataset = a\nepochs = zero\n", p).is_err());
        assert!(RunConfig::parse("dataset = a\nepochs = 0\n", p).is_err());
        assert!(RunConfig::parse("dataset = a\nbogus = 1\n", p).is_err());
        assert!(RunConfig::parse("dataset = a\ndataset = b\n", p).is_err());
        assert!(RunConfig::parse("dataset a\n", p).is_err());
    }

    #[test]
    fn learning_rate_halves() {
        let cfg = RunConfig {
            lr_halving: 50,
            base_lr: 1.0,
            ..RunConfig::default()
        };
        assert_eq!(cfg.learning_rate(49), 1.0);
        assert_eq!(cfg.learning_rate(100), 0.25);
    }
}
