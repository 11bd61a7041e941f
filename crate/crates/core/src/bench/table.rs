use std::fmt::Write as _;
use std::io::Read;

use super::ExperimentRecord;
use crate::error::{invalid, Error, Result};
use crate::optimizers::Algorithm;

pub const CSV_HEADER: &str = "dataset,mu,epsilon,delta,method,mean_error,std_error,mean_runtime_s,trials";

/// Caveat printed under every text table.
pub const PREPROCESSING_NOTE: &str =
    "note: CSV inputs are scaled to unit max row norm (regression targets to unit max) before training; absolute errors depend on that choice";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Text,
}

/// Render records. With `include_runtime = false` the runtime field is left
/// empty (CSV) or omitted (text), so output is byte-stable across runs.
pub fn emit_table(records: &[ExperimentRecord], format: TableFormat, include_runtime: bool) -> Result<String> {
    if records.is_empty() {
        return Err(invalid("records", "nothing to emit"));
    }
    Ok(match format {
        TableFormat::Csv => emit_csv(records, include_runtime)?,
        TableFormat::Text => emit_text(records, include_runtime),
    })
}

fn emit_csv(records: &[ExperimentRecord], include_runtime: bool) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(CSV_HEADER.split(','))?;
    for r in records {
        let runtime = if include_runtime {
            r.mean_runtime.to_string()
        } else {
            String::new()
        };
        w.write_record([
            r.dataset.clone(),
            r.mu.to_string(),
            r.epsilon.to_string(),
            r.delta.to_string(),
            r.method.to_string(),
            r.mean_error.to_string(),
            r.std_error.to_string(),
            runtime,
            r.trials.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io {
        path: "<table>".into(),
        source: e.into_error(),
    })?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Parse CSV written by [`emit_table`]. Fields absent from the CSV
/// (per-trial errors, gradient counts and norms) come back empty.
pub fn parse_records_csv<R: Read>(reader: R) -> Result<Vec<ExperimentRecord>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header.join(",") != CSV_HEADER {
        return Err(Error::Parse {
            row: 1,
            column: "header".into(),
            message: format!("expected `{CSV_HEADER}`"),
        });
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        let field = |c: usize| rec.get(c).unwrap_or_default();
        let num = |c: usize| -> Result<f64> {
            field(c).parse().map_err(|_| Error::Parse {
                row,
                column: header[c].clone(),
                message: format!("`{}` is not a number", field(c)),
            })
        };
        out.push(ExperimentRecord {
            dataset: field(0).to_string(),
            mu: num(1)?,
            epsilon: num(2)?,
            delta: num(3)?,
            method: field(4).parse::<Algorithm>()?,
            mean_error: num(5)?,
            std_error: num(6)?,
            mean_runtime: if field(7).is_empty() { f64::NAN } else { num(7)? },
            trials: field(8).parse().map_err(|_| Error::Parse {
                row,
                column: "trials".into(),
                message: format!("`{}` is not a count", field(8)),
            })?,
            mean_grad_evals: f64::NAN,
            trial_errors: Vec::new(),
            grad_norm: None,
        });
    }
    Ok(out)
}

/// Index of the smallest value; exact ties go to `preferred` when it is
/// among them, otherwise to the first. Returns `(winner, tied)`.
fn argmin(values: &[f64], preferred: Option<usize>) -> (usize, bool) {
    let best = values.iter().copied().fold(f64::INFINITY, f64::min);
    let tied: Vec<usize> = (0..values.len()).filter(|&i| values[i] == best).collect();
    let winner = match preferred {
        Some(p) if tied.contains(&p) => p,
        _ => tied.first().copied().unwrap_or(0),
    };
    (winner, tied.len() > 1)
}

fn emit_text(records: &[ExperimentRecord], include_runtime: bool) -> String {
    let mut groups: Vec<(&str, f64)> = Vec::new();
    for r in records {
        if !groups.iter().any(|g| g.0 == r.dataset && g.1 == r.mu) {
            groups.push((&r.dataset, r.mu));
        }
    }
    let mut out = String::new();
    for (dataset, mu) in groups {
        let in_group: Vec<&ExperimentRecord> =
            records.iter().filter(|r| r.dataset == dataset && r.mu == mu).collect();
        let mut methods: Vec<Algorithm> = Vec::new();
        let mut epsilons: Vec<f64> = Vec::new();
        for r in &in_group {
            if !methods.contains(&r.method) {
                methods.push(r.method);
            }
            if !epsilons.contains(&r.epsilon) {
                epsilons.push(r.epsilon);
            }
        }
        let preferred = methods.iter().position(|m| *m == Algorithm::Opgd);

        let mut header = vec!["epsilon".to_string()];
        header.extend(methods.iter().map(|m| format!("{m} error")));
        if include_runtime {
            header.extend(methods.iter().map(|m| format!("{m} cpu_s")));
        }
        header.push("ties".into());

        let mut rows: Vec<Vec<String>> = Vec::new();
        for &eps in &epsilons {
            let find = |m: Algorithm| in_group.iter().find(|r| r.method == m && r.epsilon == eps);
            let mut row = vec![eps.to_string()];
            let mut ties = Vec::new();
            let mut metric = |name: &str, get: &dyn Fn(&ExperimentRecord) -> f64, row: &mut Vec<String>| {
                let vals: Vec<f64> = methods
                    .iter()
                    .map(|m| find(*m).map_or(f64::INFINITY, |r| get(r)))
                    .collect();
                let (win, tied) = argmin(&vals, preferred);
                for (i, v) in vals.iter().enumerate() {
                    let cell = if v.is_finite() { format!("{v:.6e}") } else { "-".into() };
                    row.push(if i == win && v.is_finite() { format!("{cell}*") } else { cell });
                }
                if tied {
                    ties.push(name.to_string());
                }
            };
            metric("error", &|r| r.mean_error, &mut row);
            if include_runtime {
                metric("runtime", &|r| r.mean_runtime, &mut row);
            }
            row.push(if ties.is_empty() { "-".into() } else { ties.join("+") });
            rows.push(row);
        }

        let widths: Vec<usize> = (0..header.len())
            .map(|c| rows.iter().map(|r| r[c].len()).chain([header[c].len()]).max().unwrap_or(0))
            .collect();
        let line = |cells: &[String]| {
            cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect::<Vec<_>>()
                .join("  ")
                .trim_end()
                .to_string()
        };
        let _ = writeln!(out, "dataset: {dataset}  mu: {mu}");
        let _ = writeln!(out, "{}", line(&header));
        for r in &rows {
            let _ = writeln!(out, "{}", line(r));
        }
        for r in in_group.iter().filter(|r| r.grad_norm.is_some()) {
            let g = r.grad_norm.expect("filtered");
            let _ = writeln!(
                out,
                "  |grad F|^2 {} eps={}: mean {:.4e} p50 {:.4e} p90 {:.4e} p99 {:.4e}",
                r.method, r.epsilon, g.mean, g.p50, g.p90, g.p99
            );
        }
        out.push('\n');
    }
    let _ = writeln!(out, "{PREPROCESSING_NOTE}");
    out
}
