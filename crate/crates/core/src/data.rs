//! Labeled examples with a binary sensitive attribute, a seeded synthetic
//! generator with a tunable group gap, stratified splitting, and the
//! delimiter-separated dataset file format.
//!
//! File format: header `f0,...,f{d-1},label,group`, one example per row,
//! UTF-8, LF line endings. Features are decimal literals.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One sample: features, class id, sensitive group (0 or 1).
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample {
    pub x: Vec<f64>,
    pub y: usize,
    pub k: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    num_features: usize,
    num_classes: usize,
    examples: Vec<LabeledExample>,
}

impl Dataset {
    /// Validates every example against `num_features` and `num_classes`.
    pub fn new(num_features: usize, num_classes: usize, examples: Vec<LabeledExample>) -> Result<Self> {
        if num_features == 0 || num_classes == 0 {
            return Err(Error::InvalidConfig(
                "dataset needs at least one feature and one class".into(),
            ));
        }
        for (i, e) in examples.iter().enumerate() {
            if e.x.len() != num_features {
                return Err(Error::DimMismatch {
                    context: "example features",
                    expected: num_features,
                    actual: e.x.len(),
                });
            }
            if e.x.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("features of example {i}")));
            }
            if e.y >= num_classes {
                return Err(Error::InvalidInput(format!(
                    "example {i}: label {} out of range for {num_classes} classes",
                    e.y
                )));
            }
            if e.k > 1 {
                return Err(Error::InvalidInput(format!(
                    "example {i}: group {} is not 0 or 1",
                    e.k
                )));
            }
        }
        Ok(Self {
            num_features,
            num_classes,
            examples,
        })
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn examples(&self) -> &[LabeledExample] {
        &self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.examples.iter().map(|e| e.y).collect()
    }

    pub fn groups(&self) -> Vec<u8> {
        self.examples.iter().map(|e| e.k).collect()
    }

    /// Number of examples per `(class, group)` cell.
    pub fn cell_counts(&self) -> Vec<[usize; 2]> {
        let mut counts = vec![[0; 2]; self.num_classes];
        for e in &self.examples {
            counts[e.y][e.k as usize] += 1;
        }
        counts
    }

    fn with_examples(&self, examples: Vec<LabeledExample>) -> Self {
        Self {
            num_features: self.num_features,
            num_classes: self.num_classes,
            examples,
        }
    }
}

/// Samples with group `k`, in their original order.
pub fn filter_group(data: &Dataset, k: u8) -> Dataset {
    data.with_examples(data.examples.iter().filter(|e| e.k == k).cloned().collect())
}

/// Parameters of the synthetic biased classification task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub n: usize,
    pub d: usize,
    pub num_classes: usize,
    /// 0 gives identical group-conditional distributions.
    pub bias_strength: f64,
    /// Probability that a sample belongs to group 1 (the minority by
    /// default).
    pub group_balance: f64,
    pub noise_scale: f64,
    /// Overwritten by the root-derived seed when run from an experiment
    /// config.
    #[serde(default)]
    pub seed: u64,
    /// Distance of each class mean from the origin.
    #[serde(default = "default_separation")]
    pub separation: f64,
    /// Rotation angle in radians of the group-1 class means at
    /// `bias_strength = 1`.
    #[serde(default = "default_group_shift")]
    pub group_shift: f64,
    /// Extra group-1 noise multiplier on the penalized classes (the upper
    /// half of the class ids) at `bias_strength = 1`.
    #[serde(default = "default_noise_penalty")]
    pub noise_penalty: f64,
}

fn default_separation() -> f64 {
    3.0
}

fn default_group_shift() -> f64 {
    1.0
}

fn default_noise_penalty() -> f64 {
    0.0
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n: 4000,
            d: 16,
            num_classes: 6,
            bias_strength: 0.8,
            group_balance: 0.3,
            noise_scale: 1.0,
            seed: 0,
            separation: default_separation(),
            group_shift: default_group_shift(),
            noise_penalty: default_noise_penalty(),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n == 0 {
            return bad("n must be >= 1".into());
        }
        if self.num_classes < 2 {
            return bad("num_classes must be >= 2".into());
        }
        if self.d < self.num_classes {
            return bad(format!(
                "d ({}) must be >= num_classes ({}) to place class means on a simplex",
                self.d, self.num_classes
            ));
        }
        if !(0.0..=1.0).contains(&self.bias_strength) {
            return bad(format!("bias_strength must be in [0,1], got {}", self.bias_strength));
        }
        if !(self.group_balance > 0.0 && self.group_balance < 1.0) {
            return bad(format!("group_balance must be in (0,1), got {}", self.group_balance));
        }
        if !(self.noise_scale > 0.0 && self.noise_scale.is_finite()) {
            return bad(format!("noise_scale must be > 0, got {}", self.noise_scale));
        }
        if !(self.separation > 0.0 && self.separation.is_finite()) {
            return bad(format!("separation must be > 0, got {}", self.separation));
        }
        if !(self.group_shift >= 0.0 && self.group_shift.is_finite()) {
            return bad(format!("group_shift must be >= 0, got {}", self.group_shift));
        }
        if !(self.noise_penalty >= 0.0 && self.noise_penalty.is_finite()) {
            return bad(format!("noise_penalty must be >= 0, got {}", self.noise_penalty));
        }
        Ok(())
    }
}

/// Generates a biased dataset:
///
/// * `y ~ Uniform(C)`, `k = 1` with probability `group_balance`;
/// * class means `separation · e_y` (simplex vertices in the first `C` dims);
/// * group 1 means are rotated toward the next class:
///   `separation · (cos θ · e_y + sin θ · e_{(y+1) mod C})` with
///   `θ = bias_strength · group_shift` radians;
/// * isotropic Gaussian noise with scale `noise_scale`, inflated to
///   `noise_scale · (1 + bias_strength · noise_penalty)` for group-1
///   samples of the upper half of the classes.
pub fn generate_synthetic(cfg: &SynthConfig) -> Result<Dataset> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let d = cfg.d;

    let theta = cfg.bias_strength * cfg.group_shift;
    let penalized = |c: usize| c >= cfg.num_classes / 2;

    let examples = (0..cfg.n)
        .map(|_| {
            let y = rng.random_range(0..cfg.num_classes);
            let k = u8::from(rng.random_bool(cfg.group_balance));
            let mut scale = cfg.noise_scale;
            if k == 1 && penalized(y) {
                scale *= 1.0 + cfg.bias_strength * cfg.noise_penalty;
            }
            let next = (y + 1) % cfg.num_classes;
            let (own, mix) = if k == 1 { (theta.cos(), theta.sin()) } else { (1.0, 0.0) };
            let x = (0..d)
                .map(|j| {
                    let mean = if j == y {
                        cfg.separation * own
                    } else if j == next {
                        cfg.separation * mix
                    } else {
                        0.0
                    };
                    let z: f64 = StandardNormal.sample(&mut rng);
                    mean + scale * z
                })
                .collect();
            LabeledExample { x, y, k }
        })
        .collect();
    Dataset::new(d, cfg.num_classes, examples)
}

/// Splits every `(class, group)` cell independently, sending
/// `round(cell_size · test_fraction)` examples to the test side. Both
/// sides keep the input order.
pub fn stratified_split(data: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "test_fraction must be in (0,1), got {test_fraction}"
        )));
    }
    let mut cells: Vec<[Vec<usize>; 2]> = vec![[Vec::new(), Vec::new()]; data.num_classes];
    for (i, e) in data.examples.iter().enumerate() {
        cells[e.y][e.k as usize].push(i);
    }
    let empty: Vec<String> = cells
        .iter()
        .enumerate()
        .flat_map(|(c, g)| {
            g.iter()
                .enumerate()
                .filter(|(_, v)| v.is_empty())
                .map(move |(k, _)| format!("(class {c}, group {k})"))
        })
        .collect();
    if !empty.is_empty() {
        return Err(Error::InvalidInput(format!(
            "cannot stratify, empty cells: {}",
            empty.join(", ")
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut is_test = vec![false; data.len()];
    for cell in cells.iter_mut().flat_map(|g| g.iter_mut()) {
        cell.shuffle(&mut rng);
        let take = (cell.len() as f64 * test_fraction).round() as usize;
        for &i in &cell[..take] {
            is_test[i] = true;
        }
    }
    let (test, train): (Vec<_>, Vec<_>) = data
        .examples
        .iter()
        .zip(&is_test)
        .partition(|(_, &t)| t);
    let strip = |v: Vec<(&LabeledExample, &bool)>| v.into_iter().map(|(e, _)| e.clone()).collect();
    Ok((data.with_examples(strip(train)), data.with_examples(strip(test))))
}

/// Expected shape of a dataset file. `None` fields are inferred.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TabularSchema {
    pub num_features: Option<usize>,
    pub num_classes: Option<usize>,
}

/// Reads a dataset file. Errors name the offending line.
pub fn load_tabular(path: impl AsRef<Path>, schema: TabularSchema) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let malformed = |line: usize, message: String| Error::MalformedRow {
        path: path.to_path_buf(),
        line,
        message,
    };

    let header = rdr.headers()?.clone();
    let cols: Vec<&str> = header.iter().collect();
    let d = cols.len().saturating_sub(2);
    let expected: Vec<String> = (0..d)
        .map(|j| format!("f{j}"))
        .chain(["label".to_string(), "group".to_string()])
        .collect();
    if cols.len() < 3 || cols != expected {
        return Err(malformed(
            1,
            format!("header must be f0,...,f{{d-1}},label,group; got {}", cols.join(",")),
        ));
    }
    if let Some(want) = schema.num_features {
        if want != d {
            return Err(malformed(1, format!("expected {want} feature columns, found {d}")));
        }
    }

    let mut examples = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != d + 2 {
            return Err(malformed(line, format!("expected {} fields, found {}", d + 2, record.len())));
        }
        let mut x = Vec::with_capacity(d);
        for (j, field) in record.iter().take(d).enumerate() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| malformed(line, format!("f{j}: not a number: {field:?}")))?;
            if !v.is_finite() {
                return Err(malformed(line, format!("f{j}: non-finite value {field:?}")));
            }
            x.push(v);
        }
        let y: usize = record[d]
            .trim()
            .parse()
            .map_err(|_| malformed(line, format!("label: not a class id: {:?}", &record[d])))?;
        if let Some(c) = schema.num_classes {
            if y >= c {
                return Err(malformed(line, format!("label {y} out of range for {c} classes")));
            }
        }
        let k: u8 = match record[d + 1].trim() {
            "0" => 0,
            "1" => 1,
            other => return Err(malformed(line, format!("group must be 0 or 1, got {other:?}"))),
        };
        examples.push(LabeledExample { x, y, k });
    }
    let num_classes = schema
        .num_classes
        .unwrap_or_else(|| examples.iter().map(|e| e.y + 1).max().unwrap_or(1));
    Dataset::new(d, num_classes, examples)
}

/// Writes the dataset file format. Features use the shortest decimal form
/// that parses back to the same `f64`.
pub fn write_tabular(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = to_tabular_bytes(data)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn to_tabular_bytes(data: &Dataset) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let header: Vec<String> = (0..data.num_features)
        .map(|j| format!("f{j}"))
        .chain(["label".into(), "group".into()])
        .collect();
    w.write_record(&header)?;
    for e in &data.examples {
        let row: Vec<String> = e
            .x
            .iter()
            .map(|v| v.to_string())
            .chain([e.y.to_string(), e.k.to_string()])
            .collect();
        w.write_record(&row)?;
    }
    w.into_inner()
        .map_err(|e| Error::InvalidInput(format!("flushing csv: {e}")))
}
