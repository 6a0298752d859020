//! Datasets: svmlight / LIBSVM text input and synthetic Gaussian blobs.
//!
//! ```text
//! 2 1:0.5 3:-1.0   # comment
//! 7 2:1
//! ```
//!
//! Feature indices are 1-based in the file and 0-based in memory. Labels
//! are arbitrary tokens mapped to contiguous class ids in order of first
//! appearance.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::SparseVector;

/// Labelled examples with internal class ids in `0..classes`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    features: Vec<SparseVector>,
    labels: Vec<usize>,
    dim: usize,
    label_names: Vec<String>,
}

impl Dataset {
    /// `label_names[j]` is the external label of class `j`; every vector is
    /// widened to the common dimension `dim`.
    pub fn new(
        mut features: Vec<SparseVector>,
        labels: Vec<usize>,
        dim: usize,
        label_names: Vec<String>,
    ) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::NoExamples);
        }
        if features.len() != labels.len() {
            return Err(Error::Dimension {
                expected: features.len(),
                actual: labels.len(),
            });
        }
        let classes = label_names.len();
        if let Some(&bad) = labels.iter().find(|&&y| y >= classes) {
            return Err(Error::LabelOutOfRange { label: bad, classes });
        }
        for x in &mut features {
            if x.dim() > dim {
                return Err(Error::Dimension {
                    expected: dim,
                    actual: x.dim(),
                });
            }
            x.set_dim(dim);
        }
        Ok(Dataset {
            features,
            labels,
            dim,
            label_names,
        })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn classes(&self) -> usize {
        self.label_names.len()
    }

    pub fn features(&self) -> &[SparseVector] {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    pub fn iter(&self) -> impl Iterator<Item = (&SparseVector, usize)> {
        self.features.iter().zip(self.labels.iter().copied())
    }

    /// Re-express labels in the class order of `names` (for example a
    /// model's label map). Unknown labels are an error.
    pub fn align_labels(&self, names: &[String]) -> Result<Dataset> {
        let index: HashMap<&str, usize> = names
            .iter()
            .enumerate()
            .map(|(j, name)| (name.as_str(), j))
            .collect();
        let labels = self
            .labels
            .iter()
            .map(|&y| {
                let name = &self.label_names[y];
                index
                    .get(name.as_str())
                    .copied()
                    .ok_or_else(|| Error::UnknownLabel(name.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset {
            features: self.features.clone(),
            labels,
            dim: self.dim,
            label_names: names.to_vec(),
        })
    }

    /// Widens every vector to `dim` (for scoring against a wider model).
    pub fn with_dim(&self, dim: usize) -> Result<Dataset> {
        Dataset::new(
            self.features.clone(),
            self.labels.clone(),
            dim,
            self.label_names.clone(),
        )
    }

    /// Shuffles with `seed` and splits into `(first, rest)` where `first`
    /// holds `round(fraction · n)` examples. Both halves keep the full label
    /// map.
    pub fn split(&self, fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
        if !(0.0..=1.0).contains(&fraction) {
            return Err(Error::InvalidConfig(format!(
                "split fraction {fraction} outside [0, 1]"
            )));
        }
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let cut = (fraction * self.len() as f64).round() as usize;
        let take = |idx: &[usize]| {
            Dataset::new(
                idx.iter().map(|&i| self.features[i].clone()).collect(),
                idx.iter().map(|&i| self.labels[i]).collect(),
                self.dim,
                self.label_names.clone(),
            )
        };
        Ok((take(&order[..cut])?, take(&order[cut..])?))
    }

    /// Divides every feature by its largest absolute value and returns the
    /// per-feature divisors (1 for all-zero features).
    pub fn max_abs_scale(&mut self) -> Vec<f64> {
        let mut scale = vec![0.0f64; self.dim];
        for x in &self.features {
            for (idx, val) in x.iter() {
                scale[idx] = scale[idx].max(val.abs());
            }
        }
        for s in &mut scale {
            if *s == 0.0 {
                *s = 1.0;
            }
        }
        for x in &mut self.features {
            let idx = x.indices().to_vec();
            for (v, i) in x.values_mut().iter_mut().zip(idx) {
                *v /= scale[i];
            }
        }
        scale
    }

    pub fn load_svmlight(path: impl AsRef<Path>) -> Result<Dataset> {
        parse_svmlight(BufReader::new(fs::File::open(path)?))
    }

    /// Writes the dataset in svmlight format, one example per line.
    pub fn write_svmlight<W: Write>(&self, out: &mut W) -> Result<()> {
        for (x, y) in self.iter() {
            write!(out, "{}", self.label_names[y])?;
            for (idx, val) in x.iter() {
                write!(out, " {}:{:?}", idx + 1, val)?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Reads svmlight text. `#` starts a comment; blank lines are skipped.
pub fn parse_svmlight<R: BufRead>(input: R) -> Result<Dataset> {
    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut label_names: Vec<String> = Vec::new();
    let mut label_ids: HashMap<String, usize> = HashMap::new();
    let mut dim = 0usize;

    for (lineno, line) in input.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let label = tokens.next().unwrap_or_default();
        if label.contains(':') {
            return Err(parse_error(lineno, format!("missing label before `{label}`")));
        }
        let next_id = label_names.len();
        let y = *label_ids.entry(label.to_owned()).or_insert_with(|| {
            label_names.push(label.to_owned());
            next_id
        });

        let mut indices = Vec::new();
        let mut values = Vec::new();
        for token in tokens {
            let (idx, val) = token
                .split_once(':')
                .ok_or_else(|| parse_error(lineno, format!("malformed token `{token}`")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| parse_error(lineno, format!("malformed index in `{token}`")))?;
            if idx == 0 {
                return Err(parse_error(lineno, "feature indices are 1-based"));
            }
            let val: f64 = val
                .parse()
                .map_err(|_| parse_error(lineno, format!("malformed value in `{token}`")))?;
            if !val.is_finite() {
                return Err(parse_error(lineno, format!("non-finite value in `{token}`")));
            }
            let zero_based = idx - 1;
            if let Some(&prev) = indices.last() {
                if zero_based == prev {
                    return Err(parse_error(lineno, format!("duplicate index {idx}")));
                }
                if zero_based < prev {
                    return Err(parse_error(lineno, format!("index {idx} is not increasing")));
                }
            }
            indices.push(zero_based);
            values.push(val);
        }
        let width = indices.last().map_or(0, |&i| i + 1);
        dim = dim.max(width);
        features.push(SparseVector::new(indices, values, width)?);
        labels.push(y);
    }

    Dataset::new(features, labels, dim, label_names)
}

/// Parameters of [`synth_blobs`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlobConfig {
    pub classes: usize,
    pub dim: usize,
    pub per_class: usize,
    pub separation: f64,
    pub sigma: f64,
    pub seed: u64,
}

impl BlobConfig {
    pub const STANDARD_SEPARATION: f64 = 8.0;
    pub const STANDARD_SIGMA: f64 = 1.0;

    /// The benchmark configuration: 10 classes, 20 features, 50 points per
    /// class.
    pub fn standard(seed: u64) -> Self {
        BlobConfig {
            classes: 10,
            dim: 20,
            per_class: 50,
            separation: Self::STANDARD_SEPARATION,
            sigma: Self::STANDARD_SIGMA,
            seed,
        }
    }
}

/// Gaussian blobs: class means on the sphere of radius `separation`, points
/// at `mean + N(0, σ² I)`. Examples are ordered class by class and labelled
/// `1..=m` externally. Fully determined by the seed.
pub fn synth_blobs(config: &BlobConfig) -> Result<Dataset> {
    let BlobConfig {
        classes,
        dim,
        per_class,
        separation,
        sigma,
        seed,
    } = *config;
    if classes < 2 || dim == 0 || per_class == 0 {
        return Err(Error::InvalidConfig(
            "blobs need at least 2 classes, 1 feature and 1 point per class".into(),
        ));
    }
    if !(separation > 0.0 && separation.is_finite()) || !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidConfig(
            "separation must be positive and sigma non-negative".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let means: Vec<Vec<f64>> = (0..classes)
        .map(|_| loop {
            let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
            let norm = v.iter().map(|x: &f64| x * x).sum::<f64>().sqrt();
            if norm > 1e-12 {
                break v.into_iter().map(|x| separation * x / norm).collect();
            }
        })
        .collect();

    let mut features = Vec::with_capacity(classes * per_class);
    let mut labels = Vec::with_capacity(classes * per_class);
    for (class, mean) in means.iter().enumerate() {
        for _ in 0..per_class {
            let point: Vec<f64> = mean
                .iter()
                .map(|&mu| {
                    let z: f64 = rng.sample(StandardNormal);
                    mu + sigma * z
                })
                .collect();
            features.push(SparseVector::from_dense(&point)?);
            labels.push(class);
        }
    }
    let names = (1..=classes).map(|j| j.to_string()).collect();
    Dataset::new(features, labels, dim, names)
}
