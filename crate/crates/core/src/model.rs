//! Linear multi-category scorer with per-class weight columns.
//!
//! With the feature map `ψ(x, j) = e_j ⊗ x` the parameter vector reshapes
//! into a `d0 × m` matrix whose column `j` scores class `j`, so
//! `s_j = <W[:, j], x>` costs `O(m · nnz(x))` for a sparse `x`.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::loss::{LossFamily, LossSpec};

/// Sparse feature vector with 0-based, strictly increasing indices.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct SparseVector {
    indices: Vec<usize>,
    values: Vec<f64>,
    dim: usize,
}

impl SparseVector {
    pub fn new(indices: Vec<usize>, values: Vec<f64>, dim: usize) -> Result<Self> {
        if indices.len() != values.len() {
            return Err(Error::Dimension {
                expected: indices.len(),
                actual: values.len(),
            });
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig(
                "sparse indices must be strictly increasing".into(),
            ));
        }
        if let Some(&last) = indices.last() {
            if last >= dim {
                return Err(Error::Dimension {
                    expected: dim,
                    actual: last + 1,
                });
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("sparse values must be finite".into()));
        }
        Ok(SparseVector {
            indices,
            values,
            dim,
        })
    }

    /// Dense slice as a sparse vector, keeping every entry (zeros included).
    pub fn from_dense(values: &[f64]) -> Result<Self> {
        Self::new((0..values.len()).collect(), values.to_vec(), values.len())
    }

    pub fn empty(dim: usize) -> Self {
        SparseVector {
            indices: Vec::new(),
            values: Vec::new(),
            dim,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn squared_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub(crate) fn set_dim(&mut self, dim: usize) {
        debug_assert!(self.indices.last().is_none_or(|&i| i < dim));
        self.dim = dim;
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
}

/// `scores[j] = Σ_nz weights[idx, j] · val`, written into `out`.
pub(crate) fn scores_into(weights: ArrayView2<'_, f64>, x: &SparseVector, out: &mut [f64]) {
    out.fill(0.0);
    for (idx, val) in x.iter() {
        let row = weights.row(idx);
        for (o, &w) in out.iter_mut().zip(row.iter()) {
            *o += w * val;
        }
    }
}

/// Indices of the `k` highest scores, descending, ties to the lower index.
pub fn top_k_indices(scores: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(k);
    order
}

/// A trained classifier.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    weights: Array2<f64>,
    labels: Vec<String>,
    loss: LossSpec,
    lambda: f64,
    gamma_sm: f64,
}

pub const MODEL_MAGIC: &str = "FWSVM-MODEL";
pub const MODEL_VERSION: u32 = 1;

impl Model {
    /// `weights` is `d0 × m`; `labels[j]` is the external name of class `j`.
    pub fn new(
        weights: Array2<f64>,
        labels: Vec<String>,
        loss: LossSpec,
        lambda: f64,
        gamma_sm: f64,
    ) -> Result<Self> {
        let classes = weights.ncols();
        if labels.len() != classes {
            return Err(Error::Dimension {
                expected: classes,
                actual: labels.len(),
            });
        }
        if loss.classes() != classes {
            return Err(Error::Dimension {
                expected: classes,
                actual: loss.classes(),
            });
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = labels.iter().find(|l| !seen.insert(l.as_str())) {
            return Err(Error::InvalidConfig(format!("duplicate label `{dup}`")));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!("lambda must be positive, got {lambda}")));
        }
        if !(gamma_sm >= 0.0 && gamma_sm.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "gamma_sm must be non-negative, got {gamma_sm}"
            )));
        }
        Ok(Model {
            weights,
            labels,
            loss,
            lambda,
            gamma_sm,
        })
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn classes(&self) -> usize {
        self.weights.ncols()
    }

    pub fn dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, class: usize) -> &str {
        &self.labels[class]
    }

    pub fn loss(&self) -> &LossSpec {
        &self.loss
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn gamma_sm(&self) -> f64 {
        self.gamma_sm
    }

    /// Per-class scores `s_j = <W[:, j], x>`. Inputs narrower than the model
    /// are accepted; wider ones are a dimension error.
    pub fn scores(&self, x: &SparseVector) -> Result<Vec<f64>> {
        if x.dim() > self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                actual: x.dim(),
            });
        }
        let mut out = vec![0.0; self.classes()];
        scores_into(self.weights.view(), x, &mut out);
        Ok(out)
    }

    /// Internal class indices of the `k` best scores.
    pub fn predict_topk(&self, x: &SparseVector, k: usize) -> Result<Vec<usize>> {
        if k == 0 || k > self.classes() {
            return Err(Error::InvalidConfig(format!(
                "top-k size {k} must lie in 1..={}",
                self.classes()
            )));
        }
        Ok(top_k_indices(&self.scores(x)?, k))
    }

    /// External labels of the `k` best scores.
    pub fn predict_topk_labels(&self, x: &SparseVector, k: usize) -> Result<Vec<&str>> {
        Ok(self
            .predict_topk(x, k)?
            .into_iter()
            .map(|j| self.label(j))
            .collect())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = BufWriter::new(fs::File::create(path)?);
        self.write(&mut out)?;
        out.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file = fs::File::open(path)?;
        Self::read(BufReader::new(file))
    }

    /// Text format: a `key value` header followed by one line of `m`
    /// weights per feature row. Floats use shortest round-trip formatting.
    pub fn write<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "{MODEL_MAGIC}")?;
        writeln!(out, "version {MODEL_VERSION}")?;
        writeln!(out, "classes {}", self.classes())?;
        writeln!(out, "features {}", self.dim())?;
        writeln!(out, "loss {}", self.loss.family())?;
        match self.loss.k() {
            Some(k) => writeln!(out, "k {k}")?,
            None => writeln!(out, "k -")?,
        }
        match self.loss.rho() {
            Some(rho) => writeln!(out, "rho {}", join_floats(rho))?,
            None => writeln!(out, "rho -")?,
        }
        writeln!(out, "lambda {:?}", self.lambda)?;
        writeln!(out, "gamma_sm {:?}", self.gamma_sm)?;
        writeln!(out, "labels {}", self.labels.join(" "))?;
        writeln!(out, "weights")?;
        for row in self.weights.rows() {
            let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let mut next_line = |what: &str| -> Result<String> {
            match lines.next() {
                Some(line) => Ok(line?),
                None => Err(Error::ModelFormat(format!("unexpected end of file before {what}"))),
            }
        };

        let magic = next_line("magic")?;
        if magic.trim() != MODEL_MAGIC {
            return Err(Error::ModelFormat(format!("bad magic `{}`", magic.trim())));
        }
        let version = header_value(&next_line("version")?, "version")?;
        if version != MODEL_VERSION.to_string() {
            return Err(Error::ModelVersion {
                found: version,
                expected: MODEL_VERSION,
            });
        }
        let classes: usize = parse_field(&next_line("classes")?, "classes")?;
        let features: usize = parse_field(&next_line("features")?, "features")?;
        let family: LossFamily = header_value(&next_line("loss")?, "loss")?
            .parse()
            .map_err(|e: Error| Error::ModelFormat(e.to_string()))?;
        let k_raw = header_value(&next_line("k")?, "k")?;
        let k = if k_raw == "-" {
            None
        } else {
            Some(k_raw.parse().map_err(|_| bad_value("k", &k_raw))?)
        };
        let rho_raw = header_value(&next_line("rho")?, "rho")?;
        let rho = if rho_raw == "-" {
            None
        } else {
            Some(parse_floats(&rho_raw).map_err(|_| bad_value("rho", &rho_raw))?)
        };
        let lambda: f64 = parse_field(&next_line("lambda")?, "lambda")?;
        let gamma_sm: f64 = parse_field(&next_line("gamma_sm")?, "gamma_sm")?;
        let labels: Vec<String> = header_value(&next_line("labels")?, "labels")?
            .split_whitespace()
            .map(str::to_owned)
            .collect();
        if labels.len() != classes {
            return Err(Error::ModelDimension(format!(
                "{} labels declared for {classes} classes",
                labels.len()
            )));
        }
        if next_line("weights")?.trim() != "weights" {
            return Err(Error::ModelFormat("missing `weights` marker".into()));
        }

        let loss = LossSpec::new(family, classes, k, rho)
            .map_err(|e| Error::ModelFormat(e.to_string()))?;

        let mut data = Vec::with_capacity(features * classes);
        let mut rows = 0;
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let values = parse_floats(&line)
                .map_err(|_| Error::ModelFormat(format!("bad weight row {}", rows + 1)))?;
            if values.len() != classes {
                return Err(Error::ModelDimension(format!(
                    "weight row {} has {} values, expected {classes}",
                    rows + 1,
                    values.len()
                )));
            }
            data.extend(values);
            rows += 1;
        }
        if rows != features {
            return Err(Error::ModelDimension(format!(
                "{rows} weight rows found, {features} declared"
            )));
        }
        let weights = Array2::from_shape_vec((features, classes), data)
            .map_err(|e| Error::ModelDimension(e.to_string()))?;
        Model::new(weights, labels, loss, lambda, gamma_sm)
            .map_err(|e| Error::ModelFormat(e.to_string()))
    }
}

fn join_floats(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v:?}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_floats(s: &str) -> std::result::Result<Vec<f64>, std::num::ParseFloatError> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(str::parse)
        .collect()
}

fn bad_value(key: &str, value: &str) -> Error {
    Error::ModelFormat(format!("bad value `{value}` for `{key}`"))
}

fn header_value(line: &str, key: &str) -> Result<String> {
    let line = line.trim();
    match line.split_once(' ') {
        Some((found, value)) if found == key => Ok(value.trim().to_owned()),
        _ if line == key => Ok(String::new()),
        _ => Err(Error::ModelFormat(format!("expected `{key}`, found `{line}`"))),
    }
}

fn parse_field<T: std::str::FromStr>(line: &str, key: &str) -> Result<T> {
    let value = header_value(line, key)?;
    value.parse().map_err(|_| bad_value(key, &value))
}
