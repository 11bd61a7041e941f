use std::path::{Path, PathBuf};

use crate::data::{CsvOptions, LabelColumn, SyntheticKind, SyntheticSpec, Task};
use crate::error::{Error, Result};
use crate::losses::{LogisticForm, LossKind};
use crate::optimizers::Algorithm;
use crate::rng::RngStream;

/// Where a sweep's dataset comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource {
    /// `explicit_seed` is false when the data seed follows the sweep seed.
    Synthetic {
        spec: SyntheticSpec,
        loss: Option<LossKind>,
        explicit_seed: bool,
    },
    Csv { path: PathBuf, options: CsvOptions, loss: Option<LossKind> },
}

fn parse_loss(v: &str) -> std::result::Result<LossKind, String> {
    match v {
        "logistic" => Ok(LossKind::Logistic(LogisticForm::Shifted)),
        "logistic-standard" => Ok(LossKind::Logistic(LogisticForm::Standard)),
        "huber" => Ok(LossKind::huber()),
        "sigmoid" => Ok(LossKind::SquaredSigmoid),
        other => Err(format!("unknown loss `{other}` (logistic|logistic-standard|huber|sigmoid)")),
    }
}

impl DatasetSource {
    /// Parse `synthetic:kind=ridge:n=500:d=10[:noise=0.1][:seed=3][:loss=huber]`
    /// or `csv:path=FILE:label=COL[:task=classification][:categorical=a;b][:loss=..]`.
    pub fn parse(s: &str, default_seed: u64) -> std::result::Result<Self, String> {
        let mut parts = s.split(':');
        let head = parts.next().unwrap_or_default().trim();
        let mut kv = Vec::new();
        for p in parts {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| format!("expected key=value in dataset source, got `{p}`"))?;
            kv.push((k.trim(), v.trim()));
        }
        let get = |key: &str| kv.iter().find(|(k, _)| *k == key).map(|(_, v)| *v);
        let loss = get("loss").map(parse_loss).transpose()?;
        let num = |key: &str| -> std::result::Result<Option<f64>, String> {
            get(key)
                .map(|v| v.parse::<f64>().map_err(|_| format!("`{key}` is not a number: `{v}`")))
                .transpose()
        };
        let int = |key: &str| -> std::result::Result<Option<u64>, String> {
            get(key)
                .map(|v| v.parse::<u64>().map_err(|_| format!("`{key}` is not an integer: `{v}`")))
                .transpose()
        };
        match head {
            "synthetic" => {
                for (k, _) in &kv {
                    if !matches!(*k, "kind" | "n" | "d" | "noise" | "seed" | "loss") {
                        return Err(format!("unknown synthetic key `{k}`"));
                    }
                }
                let kind: SyntheticKind = get("kind")
                    .ok_or("synthetic source needs kind=")?
                    .parse()
                    .map_err(|e: Error| e.to_string())?;
                let spec = SyntheticSpec {
                    kind,
                    n: int("n")?.ok_or("synthetic source needs n=")? as usize,
                    d: int("d")?.ok_or("synthetic source needs d=")? as usize,
                    noise_level: num("noise")?.unwrap_or(0.1),
                    seed: RngStream::new(int("seed")?.unwrap_or(default_seed), 0),
                };
                Ok(DatasetSource::Synthetic {
                    spec,
                    loss,
                    explicit_seed: get("seed").is_some(),
                })
            }
            "csv" => {
                for (k, _) in &kv {
                    if !matches!(*k, "path" | "label" | "task" | "categorical" | "loss") {
                        return Err(format!("unknown csv key `{k}`"));
                    }
                }
                let path = PathBuf::from(get("path").ok_or("csv source needs path=")?);
                let label = get("label").ok_or("csv source needs label=")?;
                let task: Task = get("task")
                    .unwrap_or("classification")
                    .parse()
                    .map_err(|e: Error| e.to_string())?;
                let categorical = get("categorical")
                    .map(|v| v.split(';').map(|c| c.trim().to_string()).filter(|c| !c.is_empty()).collect())
                    .unwrap_or_default();
                Ok(DatasetSource::Csv {
                    path,
                    options: CsvOptions {
                        label: LabelColumn::Name(label.to_string()),
                        task,
                        categorical,
                    },
                    loss,
                })
            }
            other => Err(format!("dataset source must start with synthetic: or csv:, got `{other}`")),
        }
    }
}

/// A sweep over datasets x mu x epsilon x method.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub datasets: Vec<DatasetSource>,
    pub mus: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub delta: f64,
    pub methods: Vec<Algorithm>,
    pub trials: usize,
    pub seed: u64,
    pub oracle_tol: f64,
    pub oracle_max_iterations: u64,
    pub batch_size: usize,
    /// Run opgd with Gamma-Laplace noise (pure budget) instead of Gaussian.
    pub pure_opgd: bool,
    /// Iterations for the non-private `gd` control.
    pub gd_iterations: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            datasets: Vec::new(),
            mus: vec![0.0, 0.1, 0.5],
            epsilons: vec![0.1, 0.5, 1.0, 2.0],
            delta: 1e-3,
            methods: vec![Algorithm::Opgd, Algorithm::Baseline],
            trials: 100,
            seed: 0,
            oracle_tol: 1e-8,
            oracle_max_iterations: 200_000,
            batch_size: 50,
            pure_opgd: false,
            gd_iterations: 100,
        }
    }
}

pub const CONFIG_KEYS: &[&str] = &[
    "datasets",
    "mus",
    "epsilons",
    "delta",
    "methods",
    "trials",
    "seed",
    "oracle_tol",
    "oracle_max_iterations",
    "batch_size",
    "pure_opgd",
    "gd_iterations",
];

fn list<T>(v: &str, f: impl Fn(&str) -> std::result::Result<T, String>) -> std::result::Result<Vec<T>, String> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(f).collect()
}

fn real(s: &str) -> std::result::Result<f64, String> {
    s.parse::<f64>().map_err(|_| format!("`{s}` is not a number"))
}

impl ExperimentConfig {
    /// Parse `key = value` lines; `#` starts a comment, lists are comma separated.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or_default().trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Config {
                line: line_no,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            let (k, v) = (k.trim(), v.trim());
            cfg.set(k, v).map_err(|message| Error::Config { line: line_no, message })?;
        }
        cfg.validate().map_err(|message| Error::Config { line: 0, message })?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Set one key from its textual value, as in a config line.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        match key {
            "datasets" => {
                let seed = self.seed;
                self.datasets = list(value, |s| DatasetSource::parse(s, seed))?;
            }
            "mus" => self.mus = list(value, real)?,
            "epsilons" => self.epsilons = list(value, real)?,
            "delta" => self.delta = real(value)?,
            "methods" => {
                self.methods = list(value, |s| s.parse::<Algorithm>().map_err(|e| e.to_string()))?
            }
            "trials" => self.trials = value.parse().map_err(|_| format!("trials: `{value}` is not a count"))?,
            "seed" => {
                self.seed = value.parse().map_err(|_| format!("seed: `{value}` is not a u64"))?;
                for d in &mut self.datasets {
                    if let DatasetSource::Synthetic {
                        spec,
                        explicit_seed: false,
                        ..
                    } = d
                    {
                        spec.seed = RngStream::new(self.seed, 0);
                    }
                }
            }
            "oracle_tol" => self.oracle_tol = real(value)?,
            "oracle_max_iterations" => {
                self.oracle_max_iterations = value.parse().map_err(|_| format!("`{value}` is not a count"))?
            }
            "batch_size" => self.batch_size = value.parse().map_err(|_| format!("`{value}` is not a count"))?,
            "pure_opgd" => self.pure_opgd = value.parse().map_err(|_| format!("`{value}` is not true/false"))?,
            "gd_iterations" => self.gd_iterations = value.parse().map_err(|_| format!("`{value}` is not a count"))?,
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.datasets.is_empty() {
            return Err("no datasets configured".into());
        }
        if self.epsilons.is_empty() || self.epsilons.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return Err("epsilons must be a non-empty list of positive numbers".into());
        }
        if self.mus.is_empty() || self.mus.iter().any(|m| !(*m >= 0.0 && m.is_finite())) {
            return Err("mus must be a non-empty list of non-negative numbers".into());
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if self.methods.is_empty() {
            return Err("no methods configured".into());
        }
        if self.trials == 0 {
            return Err("trials must be at least 1".into());
        }
        if !(self.oracle_tol > 0.0) {
            return Err("oracle_tol must be positive".into());
        }
        if self.batch_size == 0 {
            return Err("batch_size must be at least 1".into());
        }
        Ok(())
    }
}
