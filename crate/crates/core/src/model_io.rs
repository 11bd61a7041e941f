//! Trained-model files: a one-column CSV of weights preceded by `# key: value`
//! provenance comments recording how the weights were produced.

use std::io::{BufRead, Write};

use crate::error::{invalid, Error, Result};
use crate::optimizers::{Algorithm, NoiseRecord, PrivateSolution};

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub algorithm: Algorithm,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    /// `T` for the full-gradient methods, `R` for random-round SGD.
    pub iterations: u64,
    /// `gamma-laplace`, `gaussian` (output noise) or `per-step-gaussian`.
    pub noise: String,
    pub sigma: f64,
    pub step_size: f64,
    pub sensitivity: Option<f64>,
    pub seed: u64,
    pub stream: u64,
}

impl Provenance {
    pub fn from_solution(sol: &PrivateSolution) -> Self {
        let noise = match sol.noise {
            NoiseRecord::None => "none".to_string(),
            NoiseRecord::Output(spec) => spec.kind.as_str().to_string(),
            NoiseRecord::PerStep { .. } => "per-step-gaussian".to_string(),
        };
        Self {
            algorithm: sol.algorithm,
            epsilon: sol.budget.map(|b| b.epsilon()),
            delta: sol.budget.map(|b| b.delta()),
            iterations: sol.iterations_run,
            noise,
            sigma: sol.noise.scale(),
            step_size: sol.step_size,
            sensitivity: sol.sensitivity,
            seed: sol.seed.seed,
            stream: sol.seed.stream,
        }
    }

    fn pairs(&self) -> Vec<(&'static str, String)> {
        let opt = |v: Option<f64>| v.map_or_else(|| "none".to_string(), |x| x.to_string());
        let iter_key = if self.algorithm == Algorithm::Rrpsgd { "R" } else { "T" };
        vec![
            ("algorithm", self.algorithm.to_string()),
            ("epsilon", opt(self.epsilon)),
            ("delta", opt(self.delta)),
            (iter_key, self.iterations.to_string()),
            ("noise", self.noise.clone()),
            ("sigma", self.sigma.to_string()),
            ("step_size", self.step_size.to_string()),
            ("sensitivity", opt(self.sensitivity)),
            ("seed", self.seed.to_string()),
            ("stream", self.stream.to_string()),
        ]
    }
}

pub fn write_model<W: Write>(prov: &Provenance, weights: &[f64], mut out: W) -> Result<()> {
    let io = |source| Error::Io {
        path: "<model>".into(),
        source,
    };
    for (k, v) in prov.pairs() {
        writeln!(out, "# {k}: {v}").map_err(io)?;
    }
    writeln!(out, "w").map_err(io)?;
    for w in weights {
        writeln!(out, "{w}").map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Parse a file written by [`write_model`].
pub fn read_model<R: BufRead>(input: R) -> Result<(Provenance, Vec<f64>)> {
    let mut fields = std::collections::HashMap::new();
    let mut weights = Vec::new();
    let mut header_seen = false;
    for (i, line) in input.lines().enumerate() {
        let row = i + 1;
        let line = line.map_err(|source| Error::Io {
            path: "<model>".into(),
            source,
        })?;
        let line = line.trim();
        if let Some(rest) = line.strip_prefix('#') {
            let (k, v) = rest.split_once(':').ok_or_else(|| Error::Parse {
                row,
                column: "provenance".into(),
                message: format!("expected `# key: value`, got `{line}`"),
            })?;
            fields.insert(k.trim().to_string(), v.trim().to_string());
        } else if line.is_empty() {
            continue;
        } else if !header_seen {
            if line != "w" {
                return Err(Error::Parse {
                    row,
                    column: "w".into(),
                    message: format!("expected header `w`, got `{line}`"),
                });
            }
            header_seen = true;
        } else {
            weights.push(line.parse::<f64>().map_err(|e| Error::Parse {
                row,
                column: "w".into(),
                message: e.to_string(),
            })?);
        }
    }

    let get = |k: &str| {
        fields
            .get(k)
            .map(String::as_str)
            .ok_or_else(|| Error::MissingColumn(format!("# {k}")))
    };
    let num = |k: &'static str| -> Result<f64> {
        get(k)?.parse().map_err(|_| invalid(k, "not a number"))
    };
    let opt = |k: &'static str| -> Result<Option<f64>> {
        match get(k)? {
            "none" => Ok(None),
            v => v.parse().map(Some).map_err(|_| invalid(k, "not a number")),
        }
    };
    let int = |k: &'static str| -> Result<u64> {
        get(k)?.parse().map_err(|_| invalid(k, "not an integer"))
    };
    let algorithm: Algorithm = get("algorithm")?.parse()?;
    let iterations = if algorithm == Algorithm::Rrpsgd { int("R")? } else { int("T")? };
    let prov = Provenance {
        algorithm,
        epsilon: opt("epsilon")?,
        delta: opt("delta")?,
        iterations,
        noise: get("noise")?.to_string(),
        sigma: num("sigma")?,
        step_size: num("step_size")?,
        sensitivity: opt("sensitivity")?,
        seed: int("seed")?,
        stream: int("stream")?,
    };
    Ok((prov, weights))
}
