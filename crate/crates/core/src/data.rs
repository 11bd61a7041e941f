//! Datasets: CSV ingestion, norm-bound preprocessing and synthetic generators.

use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::linalg::{dot, norm};
use crate::mechanisms::{fill_gaussian, unit_direction};
use crate::rng::RngStream;

/// Relative slack allowed when checking `|x| <= B`.
const NORM_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Task {
    Classification,
    Regression,
}

impl std::str::FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classification" => Ok(Task::Classification),
            "regression" => Ok(Task::Regression),
            other => Err(invalid("task", format!("expected classification|regression, got `{other}`"))),
        }
    }
}

/// One labelled point.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub x: Vec<f64>,
    pub y: f64,
}

/// An immutable `n x d` design matrix (row-major) with labels and a certified
/// bound `B` on every row's Euclidean norm.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    task: Task,
    dim: usize,
    features: Vec<f64>,
    labels: Vec<f64>,
    norm_bound: f64,
    label_scale: f64,
}

impl Dataset {
    /// Validates every invariant: `n, d >= 1`, rows within `norm_bound`,
    /// classification labels in `{-1, +1}`.
    pub fn new(
        name: impl Into<String>,
        task: Task,
        dim: usize,
        features: Vec<f64>,
        labels: Vec<f64>,
        norm_bound: f64,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("d", "feature dimension must be at least 1"));
        }
        if labels.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if features.len() != labels.len() * dim {
            return Err(Error::DimensionMismatch {
                expected: labels.len() * dim,
                found: features.len(),
            });
        }
        if !(norm_bound > 0.0 && norm_bound.is_finite()) {
            return Err(invalid("norm_bound", format!("must be positive, got {norm_bound}")));
        }
        if let Some(bad) = features.iter().chain(&labels).find(|v| !v.is_finite()) {
            return Err(invalid("features", format!("non-finite value {bad}")));
        }
        for (i, row) in features.chunks_exact(dim).enumerate() {
            let n = norm(row);
            if n > norm_bound * (1.0 + NORM_SLACK) {
                return Err(Error::NormBound {
                    index: i,
                    norm: n,
                    bound: norm_bound,
                });
            }
        }
        if task == Task::Classification {
            if let Some(&y) = labels.iter().find(|&&y| y != 1.0 && y != -1.0) {
                return Err(invalid("labels", format!("classification label {y} is not +1 or -1")));
            }
        }
        Ok(Self {
            name: name.into(),
            task,
            dim,
            features,
            labels,
            norm_bound,
            label_scale: 1.0,
        })
    }

    /// Like [`Dataset::new`] with `B` set to the largest row norm.
    pub fn with_tight_bound(
        name: impl Into<String>,
        task: Task,
        dim: usize,
        features: Vec<f64>,
        labels: Vec<f64>,
    ) -> Result<Self> {
        let bound = if dim == 0 {
            1.0
        } else {
            features.chunks_exact(dim).map(norm).fold(0.0, f64::max)
        };
        // An all-zero matrix still satisfies any positive bound.
        let bound = if bound > 0.0 { bound } else { 1.0 };
        Self::new(name, task, dim, features, labels, bound)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn norm_bound(&self) -> f64 {
        self.norm_bound
    }

    /// Factor by which regression labels were divided during standardization.
    pub fn label_scale(&self) -> f64 {
        self.label_scale
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn label(&self, i: usize) -> f64 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn example(&self, i: usize) -> Example {
        Example {
            x: self.row(i).to_vec(),
            y: self.labels[i],
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.features.chunks_exact(self.dim).zip(self.labels.iter().copied())
    }

    /// Copy with row `index` replaced. The replacement must respect the bound.
    pub fn with_replaced(&self, index: usize, replacement: &Example) -> Result<Self> {
        if index >= self.len() {
            return Err(invalid("index", format!("{index} out of range for n = {}", self.len())));
        }
        if replacement.x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: replacement.x.len(),
            });
        }
        let n = norm(&replacement.x);
        if n > self.norm_bound * (1.0 + NORM_SLACK) {
            return Err(Error::NormBound {
                index,
                norm: n,
                bound: self.norm_bound,
            });
        }
        if self.task == Task::Classification && replacement.y.abs() != 1.0 {
            return Err(invalid("labels", "replacement label must be +1 or -1"));
        }
        let mut out = self.clone();
        out.features[index * self.dim..(index + 1) * self.dim].copy_from_slice(&replacement.x);
        out.labels[index] = replacement.y;
        Ok(out)
    }

    fn subset(&self, name: String, idx: &[usize]) -> Self {
        let mut features = Vec::with_capacity(idx.len() * self.dim);
        let mut labels = Vec::with_capacity(idx.len());
        for &i in idx {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Self {
            name,
            task: self.task,
            dim: self.dim,
            features,
            labels,
            norm_bound: self.norm_bound,
            label_scale: self.label_scale,
        }
    }
}

/// Which column of a CSV file holds the label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvOptions {
    pub label: LabelColumn,
    pub task: Task,
    /// Columns to one-hot encode; each level becomes a 0/1 column appended
    /// after the numeric features, levels in sorted order.
    pub categorical: Vec<String>,
}

pub fn load_csv(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_owned());
    read_csv(file, name, opts)
}

fn is_missing(field: &str) -> bool {
    matches!(field, "" | "NA" | "na" | "NaN" | "nan" | "?" | "null")
}

/// Parse a headed, comma-separated table. Missing values are an error.
pub fn read_csv<R: Read>(reader: R, name: impl Into<String>, opts: &CsvOptions) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let label_idx = match &opts.label {
        LabelColumn::Name(n) => header
            .iter()
            .position(|h| h == n)
            .ok_or_else(|| Error::MissingColumn(n.clone()))?,
        LabelColumn::Index(i) if *i < header.len() => *i,
        LabelColumn::Index(i) => return Err(Error::MissingColumn(format!("#{i}"))),
    };
    let mut cat_idx = Vec::with_capacity(opts.categorical.len());
    for c in &opts.categorical {
        let i = header
            .iter()
            .position(|h| h == c)
            .ok_or_else(|| Error::MissingColumn(c.clone()))?;
        if i == label_idx {
            return Err(invalid("categorical", format!("`{c}` is the label column")));
        }
        cat_idx.push(i);
    }
    let numeric_idx: Vec<usize> = (0..header.len())
        .filter(|i| *i != label_idx && !cat_idx.contains(i))
        .collect();

    let mut numeric: Vec<Vec<f64>> = Vec::new();
    let mut cats: Vec<Vec<String>> = Vec::new();
    let mut raw_labels: Vec<String> = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        // row numbers are 1-based and count the header as row 1
        let row = r + 2;
        if rec.len() != header.len() {
            return Err(Error::Parse {
                row,
                column: String::new(),
                message: format!("expected {} fields, found {}", header.len(), rec.len()),
            });
        }
        let mut vals = Vec::with_capacity(numeric_idx.len());
        for &c in &numeric_idx {
            let f = &rec[c];
            if is_missing(f) {
                return Err(Error::MissingValue {
                    row,
                    column: header[c].clone(),
                });
            }
            let v: f64 = f.parse().map_err(|_| Error::Parse {
                row,
                column: header[c].clone(),
                message: format!("`{f}` is not a number"),
            })?;
            vals.push(v);
        }
        let mut levels = Vec::with_capacity(cat_idx.len());
        for &c in &cat_idx {
            if is_missing(&rec[c]) {
                return Err(Error::MissingValue {
                    row,
                    column: header[c].clone(),
                });
            }
            levels.push(rec[c].to_owned());
        }
        let y = &rec[label_idx];
        if is_missing(y) {
            return Err(Error::MissingValue {
                row,
                column: header[label_idx].clone(),
            });
        }
        numeric.push(vals);
        cats.push(levels);
        raw_labels.push(y.to_owned());
    }
    if raw_labels.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let level_sets: Vec<Vec<String>> = (0..cat_idx.len())
        .map(|j| {
            cats.iter()
                .map(|row| row[j].clone())
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect()
        })
        .collect();
    let dim = numeric_idx.len() + level_sets.iter().map(Vec::len).sum::<usize>();
    let mut features = Vec::with_capacity(dim * raw_labels.len());
    for (vals, levels) in numeric.iter().zip(&cats) {
        features.extend_from_slice(vals);
        for (lv, set) in levels.iter().zip(&level_sets) {
            features.extend(set.iter().map(|s| if s == lv { 1.0 } else { 0.0 }));
        }
    }

    let labels = parse_labels(&raw_labels, opts.task, &header[label_idx])?;
    Dataset::with_tight_bound(name, opts.task, dim, features, labels)
}

fn parse_labels(raw: &[String], task: Task, column: &str) -> Result<Vec<f64>> {
    let numeric: Option<Vec<f64>> = raw.iter().map(|s| s.parse::<f64>().ok()).collect();
    match task {
        Task::Regression => {
            let vals = numeric.ok_or_else(|| {
                let (r, s) = raw
                    .iter()
                    .enumerate()
                    .find(|(_, s)| s.parse::<f64>().is_err())
                    .expect("some label failed to parse");
                Error::Parse {
                    row: r + 2,
                    column: column.to_owned(),
                    message: format!("`{s}` is not a number"),
                }
            })?;
            Ok(vals)
        }
        Task::Classification => {
            if let Some(vals) = &numeric {
                if vals.iter().all(|&v| v == 1.0 || v == -1.0) {
                    return Ok(vals.clone());
                }
            }
            // Any other two-level coding: the smaller level maps to -1.
            let mut levels: Vec<&str> = raw
                .iter()
                .map(String::as_str)
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            if numeric.is_some() {
                levels.sort_by(|a, b| a.parse::<f64>().unwrap().total_cmp(&b.parse::<f64>().unwrap()));
            }
            if levels.len() != 2 {
                return Err(invalid(
                    "labels",
                    format!("classification column `{column}` has {} levels, expected 2", levels.len()),
                ));
            }
            Ok(raw
                .iter()
                .map(|s| if s == levels[1] { 1.0 } else { -1.0 })
                .collect())
        }
    }
}

/// Write `x0..x{d-1},y` with shortest round-trip decimal formatting.
pub fn write_csv<W: Write>(data: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (0..data.dim()).map(|j| format!("x{j}")).collect();
    header.push("y".to_owned());
    w.write_record(&header)?;
    let mut buf: Vec<String> = Vec::with_capacity(data.dim() + 1);
    for (x, y) in data.rows() {
        buf.clear();
        buf.extend(x.iter().map(f64::to_string));
        buf.push(y.to_string());
        w.write_record(&buf)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: "<writer>".into(),
        source,
    })?;
    Ok(())
}

/// Scale all rows by `1 / max_i |x_i|` so the bound becomes 1. Regression
/// labels are divided by `max_i |y_i|` and the factor is kept in
/// [`Dataset::label_scale`].
pub fn standardize(data: &Dataset) -> Result<Dataset> {
    let max_norm = data.rows().map(|(x, _)| norm(x)).fold(0.0, f64::max);
    if max_norm == 0.0 {
        return Err(invalid("features", "all feature rows are zero"));
    }
    let mut out = data.clone();
    for v in &mut out.features {
        *v /= max_norm;
    }
    out.norm_bound = 1.0;
    if out.task == Task::Regression {
        let max_y = out.labels.iter().fold(0.0f64, |m, y| m.max(y.abs()));
        if max_y > 0.0 {
            for y in &mut out.labels {
                *y /= max_y;
            }
            out.label_scale = data.label_scale * max_y;
        }
    }
    Ok(out)
}

/// Random partition into `ceil(f n)` and `n - ceil(f n)` rows.
pub fn split(data: &Dataset, train_fraction: f64, stream: RngStream) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(invalid("train_fraction", format!("must lie in (0, 1), got {train_fraction}")));
    }
    let n = data.len();
    let n_train = (train_fraction * n as f64).ceil() as usize;
    if n < 2 || n_train == 0 || n_train >= n {
        return Err(invalid("train_fraction", format!("split of n = {n} leaves an empty part")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut stream.rng());
    let (a, b) = idx.split_at(n_train);
    Ok((
        data.subset(format!("{}-train", data.name), a),
        data.subset(format!("{}-test", data.name), b),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SyntheticKind {
    /// `y = <w*, x> + N(0, noise^2)`
    RidgeRegression,
    /// `y = sign(<w*, x>)`, flipped with probability `noise`
    LogisticSeparable,
    /// `y = sigmoid(sqrt(d) <w*, x>) + N(0, noise^2)`, clamped to `[0, 1]`
    SigmoidNonconvex,
}

impl SyntheticKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SyntheticKind::RidgeRegression => "ridge",
            SyntheticKind::LogisticSeparable => "logistic",
            SyntheticKind::SigmoidNonconvex => "sigmoid",
        }
    }
}

impl std::str::FromStr for SyntheticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ridge" => Ok(SyntheticKind::RidgeRegression),
            "logistic" => Ok(SyntheticKind::LogisticSeparable),
            "sigmoid" => Ok(SyntheticKind::SigmoidNonconvex),
            other => Err(invalid("kind", format!("unknown synthetic family `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub kind: SyntheticKind,
    pub n: usize,
    pub d: usize,
    pub noise_level: f64,
    pub seed: RngStream,
}

impl SyntheticSpec {
    pub fn name(&self) -> String {
        format!("synthetic-{}-n{}-d{}", self.kind.as_str(), self.n, self.d)
    }
}

/// Generate a synthetic instance. Features are uniform on the unit sphere,
/// so `B = 1`, and the planted `w*` has unit norm.
pub fn generate(spec: &SyntheticSpec) -> Result<Dataset> {
    if spec.n == 0 || spec.d == 0 {
        return Err(invalid("n, d", "must both be at least 1"));
    }
    if !(spec.noise_level >= 0.0 && spec.noise_level.is_finite()) {
        return Err(invalid("noise_level", "must be non-negative"));
    }
    if spec.kind == SyntheticKind::LogisticSeparable && spec.noise_level > 1.0 {
        return Err(invalid("noise_level", "label flip probability must be at most 1"));
    }
    let mut rng = spec.seed.rng();
    let w_star = unit_direction(spec.d, &mut rng);
    let mut features = Vec::with_capacity(spec.n * spec.d);
    let mut labels = Vec::with_capacity(spec.n);
    let mut eps = [0.0];
    for _ in 0..spec.n {
        let x = unit_direction(spec.d, &mut rng);
        let t = dot(&w_star, &x);
        let y = match spec.kind {
            SyntheticKind::RidgeRegression => {
                fill_gaussian(spec.noise_level, &mut rng, &mut eps);
                t + eps[0]
            }
            SyntheticKind::LogisticSeparable => {
                let y = if t >= 0.0 { 1.0 } else { -1.0 };
                if rng.random::<f64>() < spec.noise_level {
                    -y
                } else {
                    y
                }
            }
            SyntheticKind::SigmoidNonconvex => {
                fill_gaussian(spec.noise_level, &mut rng, &mut eps);
                let s = 1.0 / (1.0 + (-(spec.d as f64).sqrt() * t).exp());
                (s + eps[0]).clamp(0.0, 1.0)
            }
        };
        features.extend_from_slice(&x);
        labels.push(y);
    }
    let task = match spec.kind {
        SyntheticKind::LogisticSeparable => Task::Classification,
        _ => Task::Regression,
    };
    Dataset::new(spec.name(), task, spec.d, features, labels, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn opts(label: &str, task: Task) -> CsvOptions {
        CsvOptions {
            label: LabelColumn::Name(label.into()),
            task,
            categorical: vec![],
        }
    }

    #[test]
    fn parses_inline_csv() {
        let text = "a,b,y\n0.1,0.2,1\n0.3,-0.4,-1\n0.0,0.5,1\n";
        let d = read_csv(text.as_bytes(), "t", &opts("y", Task::Classification)).unwrap();
        assert_eq!((d.len(), d.dim()), (3, 2));
        assert_eq!(d.labels(), &[1.0, -1.0, 1.0]);
        assert_eq!(d.row(1), &[0.3, -0.4]);
        assert!((d.norm_bound() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn missing_label_column_is_named() {
        let text = "a,b,y\n0.1,0.2,1\n";
        let err = read_csv(text.as_bytes(), "t", &opts("target", Task::Classification)).unwrap_err();
        assert!(matches!(err, Error::MissingColumn(ref c) if c == "target"), "{err}");
        assert!(err.to_string().contains("target"));
    }

    #[test]
    fn one_hot_appends_level_columns() {
        let text = "a,color,y\n1,red,0\n2,blue,1\n3,green,0\n4,red,1\n";
        let o = CsvOptions {
            label: LabelColumn::Name("y".into()),
            task: Task::Classification,
            categorical: vec!["color".into()],
        };
        let d = read_csv(text.as_bytes(), "t", &o).unwrap();
        assert_eq!(d.dim(), 4);
        // levels sorted: blue, green, red
        assert_eq!(d.row(0), &[1.0, 0.0, 0.0, 1.0]);
        assert_eq!(d.row(1), &[2.0, 1.0, 0.0, 0.0]);
        assert_eq!(d.labels(), &[-1.0, 1.0, -1.0, 1.0]);
    }

    #[test]
    fn missing_value_and_parse_errors_carry_location() {
        let text = "a,b,y\n0.1,,1\n";
        match read_csv(text.as_bytes(), "t", &opts("y", Task::Regression)) {
            Err(Error::MissingValue { row, column }) => assert_eq!((row, column.as_str()), (2, "b")),
            other => panic!("unexpected {other:?}"),
        }
        let text = "a,b,y\n0.1,0.2,1\n0.1,abc,1\n";
        match read_csv(text.as_bytes(), "t", &opts("y", Task::Regression)) {
            Err(Error::Parse { row, column, .. }) => assert_eq!((row, column.as_str()), (3, "b")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn string_labels_map_to_signs() {
        let text = "a,y\n1,yes\n2,no\n";
        let d = read_csv(text.as_bytes(), "t", &opts("y", Task::Classification)).unwrap();
        assert_eq!(d.labels(), &[1.0, -1.0]);
        let text = "a,y\n1,a\n2,b\n3,c\n";
        assert!(read_csv(text.as_bytes(), "t", &opts("y", Task::Classification)).is_err());
    }

    #[test]
    fn standardize_examples() {
        let d = Dataset::with_tight_bound("t", Task::Regression, 2, vec![2.0, 0.0, 0.0, 4.0], vec![1.0, -3.0])
            .unwrap();
        let s = standardize(&d).unwrap();
        assert_eq!(norm(s.row(0)), 0.5);
        assert_eq!(norm(s.row(1)), 1.0);
        assert_eq!(s.norm_bound(), 1.0);
        assert_eq!(s.labels(), &[1.0 / 3.0, -1.0]);
        assert_eq!(s.label_scale(), 3.0);

        let unit = Dataset::new("u", Task::Classification, 2, vec![0.6, 0.8, 0.1, 0.0], vec![1.0, -1.0], 1.0)
            .unwrap();
        assert_eq!(standardize(&unit).unwrap().features(), unit.features());

        let zero = Dataset::new("z", Task::Regression, 1, vec![0.0, 0.0], vec![1.0, 2.0], 1.0).unwrap();
        assert!(standardize(&zero).is_err());
    }

    #[test]
    fn split_examples() {
        let spec = SyntheticSpec {
            kind: SyntheticKind::RidgeRegression,
            n: 10,
            d: 3,
            noise_level: 0.1,
            seed: RngStream::new(1, 0),
        };
        let d = generate(&spec).unwrap();
        let (a, b) = split(&d, 0.8, RngStream::new(3, 3)).unwrap();
        assert_eq!((a.len(), b.len()), (8, 2));
        let (a2, b2) = split(&d, 0.8, RngStream::new(3, 3)).unwrap();
        assert_eq!((&a, &b), (&a2, &b2));

        let mut all: Vec<Vec<u64>> = a
            .rows()
            .chain(b.rows())
            .map(|(x, y)| x.iter().chain([y].iter()).map(|v| v.to_bits()).collect())
            .collect();
        let mut orig: Vec<Vec<u64>> = d
            .rows()
            .map(|(x, y)| x.iter().chain([y].iter()).map(|v| v.to_bits()).collect())
            .collect();
        all.sort();
        orig.sort();
        assert_eq!(all, orig);

        assert!(split(&d, 0.999, RngStream::new(0, 0)).is_err());
        assert!(split(&d, 0.0, RngStream::new(0, 0)).is_err());
    }

    #[test]
    fn generated_data_invariants() {
        for kind in [
            SyntheticKind::RidgeRegression,
            SyntheticKind::LogisticSeparable,
            SyntheticKind::SigmoidNonconvex,
        ] {
            let spec = SyntheticSpec {
                kind,
                n: 200,
                d: 5,
                noise_level: 0.1,
                seed: RngStream::new(4, 2),
            };
            let d = generate(&spec).unwrap();
            let max = d.rows().map(|(x, _)| norm(x)).fold(0.0, f64::max);
            assert!((max - 1.0).abs() < 1e-12);
            let mut a = Vec::new();
            let mut b = Vec::new();
            write_csv(&d, &mut a).unwrap();
            write_csv(&generate(&spec).unwrap(), &mut b).unwrap();
            assert_eq!(a, b);
            if kind == SyntheticKind::SigmoidNonconvex {
                assert!(d.labels().iter().all(|y| (0.0..=1.0).contains(y)));
            }
        }
    }

    #[test]
    fn replacement_respects_bound() {
        let d = Dataset::new("t", Task::Regression, 2, vec![0.5, 0.5, 0.1, 0.2], vec![1.0, 2.0], 1.0).unwrap();
        let ok = Example { x: vec![0.0, 1.0], y: 0.0 };
        assert_eq!(d.with_replaced(1, &ok).unwrap().row(1), &[0.0, 1.0]);
        let bad = Example { x: vec![1.0, 1.0], y: 0.0 };
        assert!(matches!(d.with_replaced(1, &bad), Err(Error::NormBound { .. })));
        assert!(d.with_replaced(2, &ok).is_err());
    }

    proptest! {
        #[test]
        fn csv_round_trip(
            rows in prop::collection::vec((prop::collection::vec(-1e3f64..1e3, 3), -1e6f64..1e6), 1..20)
        ) {
            let features: Vec<f64> = rows.iter().flat_map(|(x, _)| x.clone()).collect();
            let labels: Vec<f64> = rows.iter().map(|(_, y)| *y).collect();
            let d = Dataset::with_tight_bound("rt", Task::Regression, 3, features, labels).unwrap();
            let mut buf = Vec::new();
            write_csv(&d, &mut buf).unwrap();
            let back = read_csv(buf.as_slice(), "rt", &CsvOptions {
                label: LabelColumn::Name("y".into()),
                task: Task::Regression,
                categorical: vec![],
            }).unwrap();
            prop_assert_eq!(back, d);
        }

        #[test]
        fn split_is_a_partition(n in 2usize..60, f in 0.05f64..0.95, seed in any::<u64>()) {
            let spec = SyntheticSpec {
                kind: SyntheticKind::RidgeRegression, n, d: 2, noise_level: 0.0, seed: RngStream::new(seed, 0),
            };
            let d = generate(&spec).unwrap();
            let k = (f * n as f64).ceil() as usize;
            prop_assume!(k < n);
            let (a, b) = split(&d, f, RngStream::new(seed, 1)).unwrap();
            prop_assert_eq!(a.len() + b.len(), n);
            let key = |x: &[f64]| x.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            let sa: std::collections::HashSet<_> = a.rows().map(|(x, _)| key(x)).collect();
            prop_assert!(b.rows().all(|(x, _)| !sa.contains(&key(x))));
        }
    }
}
