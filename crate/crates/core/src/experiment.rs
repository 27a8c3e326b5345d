//! Config-driven experiment pipeline behind the `fair-distill` binary.
//!
//! One JSON config holds the data source, training settings, and a root
//! seed. Every stage writes into one output directory:
//!
//! | command                 | writes                                                   |
//! |-------------------------|----------------------------------------------------------|
//! | `gen-data`              | `train.csv`, `test.csv`, `data.json`                      |
//! | `train --phase base`    | `base.ckpt`, `base.run.json`                              |
//! | `train --phase teacherK`| `teacherK.ckpt`, `teacherK.run.json` (needs `base.ckpt`)  |
//! | `train --phase student` | `student.ckpt`, `student.run.json` (needs both teachers)  |
//! | `eval`                  | `<name>.report.json`, `<name>.report.csv`, `<name>.predictions.csv`, `<name>.features.csv` |
//! | `ablate`                | `ablation.csv`, `ablation.json` (needs both teachers)     |
//!
//! After every command `manifest.json` lists each file in the directory
//! with its SHA-256. Outputs contain no timestamps, so reruns with the same
//! config are byte-identical.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{self, generate_synthetic, load_tabular, stratified_split, Dataset, SynthConfig, TabularSchema};
use crate::error::{Error, Result};
use crate::fairness::{self, export_features, predict, FairnessReport, PredictionRow};
use crate::nn::DenseNet;
use crate::training::{
    derive_seed, finetune_teacher, run_ablation_with_teachers, train_base, train_student, AblationTable,
    RunRecord, Teachers, TrainConfig,
};

pub const SCHEMA_VERSION: u32 = 1;

/// Where the examples come from. Exactly one source per config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum DataSource {
    Synthetic(SynthConfig),
    /// A dataset file, split with `test_fraction` unless `test` is given.
    Tabular {
        path: PathBuf,
        #[serde(default)]
        test: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    /// Root of every random stream in the experiment.
    pub seed: u64,
    pub data: DataSource,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default = "default_grid")]
    pub ablation_grid: Vec<f64>,
}

fn default_test_fraction() -> f64 {
    0.2
}

fn default_grid() -> Vec<f64> {
    vec![0.6, 0.8, 1.0]
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seed: 0,
            data: DataSource::Synthetic(SynthConfig::default()),
            test_fraction: default_test_fraction(),
            train: TrainConfig::default(),
            ablation_grid: default_grid(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: Self = serde_json::from_str(&text)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        // relative tabular paths are relative to the config file
        if let DataSource::Tabular { path: p, test } = &mut cfg.data {
            let base = path.parent().unwrap_or(Path::new("."));
            if p.is_relative() {
                *p = base.join(&*p);
            }
            if let Some(t) = test.as_mut().filter(|t| t.is_relative()) {
                *t = base.join(&*t);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(s) = seed {
            self.seed = s;
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidConfig(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "test_fraction must be in (0,1), got {}",
                self.test_fraction
            )));
        }
        if let DataSource::Synthetic(s) = &self.data {
            s.validate()?;
        }
        if self.ablation_grid.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::InvalidConfig("ablation weights must be finite and >= 0".into()));
        }
        self.train.validate()
    }

    /// Training settings with the seed derived from the root seed.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: derive_seed(self.seed, "train"),
            ..self.train.clone()
        }
    }

    /// SHA-256 of the canonical JSON form of this config.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex_digest(&json)
    }
}

fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Training phases of the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Base,
    Teacher0,
    Teacher1,
    Student,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Base => "base",
            Phase::Teacher0 => "teacher0",
            Phase::Teacher1 => "teacher1",
            Phase::Student => "student",
        }
    }

    fn prerequisites(self) -> &'static [&'static str] {
        match self {
            Phase::Base => &[],
            Phase::Teacher0 | Phase::Teacher1 => &["base.ckpt"],
            Phase::Student => &["teacher0.ckpt", "teacher1.ckpt"],
        }
    }
}

impl std::str::FromStr for Phase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "base" => Ok(Phase::Base),
            "teacher0" => Ok(Phase::Teacher0),
            "teacher1" => Ok(Phase::Teacher1),
            "student" => Ok(Phase::Student),
            other => Err(Error::InvalidConfig(format!("unknown phase {other:?}"))),
        }
    }
}

/// Provenance written next to the generated splits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataManifest {
    pub root_seed: u64,
    pub data_seed: u64,
    pub split_seed: u64,
    pub config_sha256: String,
    pub num_features: usize,
    pub num_classes: usize,
    pub train_size: usize,
    pub test_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub files: BTreeMap<String, String>,
}

fn ensure_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read_back(path: &Path, expected: &[u8]) -> Result<()> {
    let got = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if got != expected {
        return Err(Error::InvalidInput(format!(
            "{} does not match what was written",
            path.display()
        )));
    }
    Ok(())
}

/// Rewrites `manifest.json` with the hash of every regular file in `out`.
pub fn write_manifest(out: &Path) -> Result<PathBuf> {
    let mut files = BTreeMap::new();
    let entries = std::fs::read_dir(out).map_err(|e| Error::io(out, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(out, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name == "manifest.json" || !entry.path().is_file() {
            continue;
        }
        let bytes = std::fs::read(entry.path()).map_err(|e| Error::io(entry.path(), e))?;
        files.insert(name, hex_digest(&bytes));
    }
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        files,
    };
    let path = out.join("manifest.json");
    let mut json = serde_json::to_vec_pretty(&manifest)?;
    json.push(b'\n');
    write_file(&path, &json)?;
    Ok(path)
}

fn missing(out: &Path, names: &[&str]) -> Result<()> {
    let absent: Vec<PathBuf> = names
        .iter()
        .map(|n| out.join(n))
        .filter(|p| !p.is_file())
        .collect();
    if absent.is_empty() {
        Ok(())
    } else {
        Err(Error::MissingPrerequisite(absent))
    }
}

fn load_splits(out: &Path) -> Result<(Dataset, Dataset)> {
    missing(out, &["train.csv", "test.csv"])?;
    let train = load_tabular(out.join("train.csv"), TabularSchema::default())?;
    let schema = TabularSchema {
        num_features: Some(train.num_features()),
        num_classes: Some(train.num_classes()),
    };
    let test = load_tabular(out.join("test.csv"), schema)?;
    // class count comes from the union of both splits
    let num_classes = train.num_classes().max(test.num_classes());
    let fix = |d: Dataset| Dataset::new(d.num_features(), num_classes, d.examples().to_vec());
    Ok((fix(train)?, fix(test)?))
}

fn save_checkpoint(net: &DenseNet, path: &Path) -> Result<()> {
    let bytes = net.to_bytes();
    write_file(path, &bytes)?;
    if DenseNet::load(path)? != *net {
        return Err(Error::Checkpoint(format!("{} did not round-trip", path.display())));
    }
    Ok(())
}

fn save_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_file(path, &bytes)?;
    read_back(path, &bytes)
}

/// Writes the train/test split of the configured data source.
pub fn cmd_gen_data(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    ensure_dir(out)?;
    let data_seed = derive_seed(cfg.seed, "data");
    let split_seed = derive_seed(cfg.seed, "split");
    let (train, test) = match &cfg.data {
        DataSource::Synthetic(s) => {
            let s = SynthConfig {
                seed: data_seed,
                ..s.clone()
            };
            stratified_split(&generate_synthetic(&s)?, cfg.test_fraction, split_seed)?
        }
        DataSource::Tabular { path, test: None } => {
            stratified_split(&load_tabular(path, TabularSchema::default())?, cfg.test_fraction, split_seed)?
        }
        DataSource::Tabular { path, test: Some(t) } => {
            let train = load_tabular(path, TabularSchema::default())?;
            let test = load_tabular(
                t,
                TabularSchema {
                    num_features: Some(train.num_features()),
                    num_classes: None,
                },
            )?;
            (train, test)
        }
    };
    let mut written = Vec::new();
    for (name, d) in [("train.csv", &train), ("test.csv", &test)] {
        let path = out.join(name);
        let bytes = data::to_tabular_bytes(d)?;
        write_file(&path, &bytes)?;
        read_back(&path, &bytes)?;
        written.push(path);
    }
    let manifest = DataManifest {
        root_seed: cfg.seed,
        data_seed,
        split_seed,
        config_sha256: cfg.hash(),
        num_features: train.num_features(),
        num_classes: train.num_classes().max(test.num_classes()),
        train_size: train.len(),
        test_size: test.len(),
    };
    let path = out.join("data.json");
    save_json(&manifest, &path)?;
    written.push(path);
    written.push(write_manifest(out)?);
    Ok(written)
}

/// Trains one phase from the splits (and prerequisite checkpoints) in `out`.
pub fn cmd_train(cfg: &ExperimentConfig, phase: Phase, out: &Path) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    missing(out, phase.prerequisites())?;
    let (train, test) = load_splits(out)?;
    let tc = cfg.train_config();
    let (net, mut record): (DenseNet, RunRecord) = match phase {
        Phase::Base => train_base(&train, &tc.teacher_hidden, &tc, Some(&test))?,
        Phase::Teacher0 | Phase::Teacher1 => {
            let base = DenseNet::load(out.join("base.ckpt"))?;
            let k = u8::from(phase == Phase::Teacher1);
            finetune_teacher(&base, &train, k, &tc, Some(&test))?
        }
        Phase::Student => {
            let t0 = DenseNet::load(out.join("teacher0.ckpt"))?;
            let t1 = DenseNet::load(out.join("teacher1.ckpt"))?;
            train_student(&train, &t0, &t1, &tc, Some(&test))?
        }
    };
    let ckpt = out.join(format!("{}.ckpt", phase.name()));
    save_checkpoint(&net, &ckpt)?;
    record.checkpoints.push(format!("{}.ckpt", phase.name()));
    let run = out.join(format!("{}.run.json", phase.name()));
    save_json(&record, &run)?;
    Ok(vec![ckpt, run, write_manifest(out)?])
}

/// Evaluates `checkpoint` on `dataset`, writing outputs named after the
/// checkpoint's file stem into `out`.
pub fn cmd_eval(checkpoint: &Path, dataset: &Path, out: &Path) -> Result<Vec<PathBuf>> {
    missing(Path::new(""), &[&checkpoint.to_string_lossy(), &dataset.to_string_lossy()])?;
    ensure_dir(out)?;
    let net = DenseNet::load(checkpoint)?;
    let mut data = load_tabular(
        dataset,
        TabularSchema {
            num_features: Some(net.input_dim()),
            num_classes: None,
        },
    )?;
    if data.num_classes() > net.output_dim() {
        return Err(Error::DimMismatch {
            context: "dataset classes vs network outputs",
            expected: net.output_dim(),
            actual: data.num_classes(),
        });
    }
    data = Dataset::new(data.num_features(), net.output_dim(), data.examples().to_vec())?;

    let pred = predict(&net, &data)?;
    let rows: Vec<PredictionRow> = pred
        .iter()
        .zip(data.examples())
        .map(|(&p, e)| PredictionRow {
            pred: p,
            truth: e.y,
            group: e.k,
        })
        .collect();
    let report = FairnessReport::from_predictions(&pred, &data.labels(), &data.groups(), data.num_classes())?;
    report.validate()?;

    let stem = checkpoint
        .file_stem()
        .map_or_else(|| "model".to_string(), |s| s.to_string_lossy().into_owned());
    let paths = [
        out.join(format!("{stem}.report.json")),
        out.join(format!("{stem}.report.csv")),
        out.join(format!("{stem}.predictions.csv")),
        out.join(format!("{stem}.features.csv")),
    ];
    save_json(&report, &paths[0])?;
    let table = report.to_table().into_bytes();
    write_file(&paths[1], &table)?;
    read_back(&paths[1], &table)?;
    let log = fairness::prediction_log_bytes(&rows)?;
    write_file(&paths[2], &log)?;
    // the log must reproduce the report
    let reread = fairness::read_prediction_log(&paths[2])?;
    let again = FairnessReport::from_predictions(
        &reread.iter().map(|r| r.pred).collect::<Vec<_>>(),
        &reread.iter().map(|r| r.truth).collect::<Vec<_>>(),
        &reread.iter().map(|r| r.group).collect::<Vec<_>>(),
        data.num_classes(),
    )?;
    if again != report {
        return Err(Error::InvalidInput("prediction log does not reproduce the report".into()));
    }
    let feats = data::to_tabular_bytes(&export_features(&net, &data)?)?;
    write_file(&paths[3], &feats)?;
    read_back(&paths[3], &feats)?;

    let mut written = paths.to_vec();
    written.push(write_manifest(out)?);
    Ok(written)
}

/// Runs the single-term ablation grid with the teachers in `out`.
pub fn cmd_ablate(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    missing(out, &["teacher0.ckpt", "teacher1.ckpt"])?;
    let (train, test) = load_splits(out)?;
    let t0 = DenseNet::load(out.join("teacher0.ckpt"))?;
    let t1 = DenseNet::load(out.join("teacher1.ckpt"))?;
    let table: AblationTable = run_ablation_with_teachers(
        &train,
        &test,
        Teachers { t0: &t0, t1: &t1 },
        &cfg.train_config(),
        &cfg.ablation_grid,
    )?;
    let csv = out.join("ablation.csv");
    let text = table.to_table().into_bytes();
    write_file(&csv, &text)?;
    read_back(&csv, &text)?;
    let json = out.join("ablation.json");
    save_json(&table, &json)?;
    Ok(vec![csv, json, write_manifest(out)?])
}

/// `gen-data`, all four training phases, and `eval` of the student and
/// the three other checkpoints on the test split.
pub fn run_pipeline(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let mut written = cmd_gen_data(cfg, out)?;
    for phase in [Phase::Base, Phase::Teacher0, Phase::Teacher1, Phase::Student] {
        written.extend(cmd_train(cfg, phase, out)?);
    }
    for name in ["base", "teacher0", "teacher1", "student"] {
        written.extend(cmd_eval(&out.join(format!("{name}.ckpt")), &out.join("test.csv"), out)?);
    }
    written.sort();
    written.dedup();
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            data: DataSource::Synthetic(SynthConfig {
                n: 240,
                d: 6,
                num_classes: 3,
                ..SynthConfig::default()
            }),
            train: TrainConfig {
                epochs: 2,
                batch_size: 32,
                student_hidden: vec![6],
                teacher_hidden: vec![8],
                ..TrainConfig::default()
            },
            ablation_grid: vec![],
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn config_json_round_trip_and_validation() {
        let cfg = small();
        let json = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());

        let bad = ExperimentConfig {
            schema_version: 99,
            ..small()
        };
        assert!(bad.validate().is_err());
        let two_sources = r#"{"schema_version":1,"seed":0,"data":{"synthetic":{},"tabular":{"path":"x"}}}"#;
        assert!(serde_json::from_str::<ExperimentConfig>(two_sources).is_err());
    }

    #[test]
    fn seed_override_changes_derived_seeds() {
        let a = small();
        let b = small().with_seed(Some(5));
        assert_ne!(a.train_config().seed, b.train_config().seed);
        assert_eq!(small().with_seed(None), a);
    }

    #[test]
    fn student_without_teachers_names_missing_files() {
        let dir = tempfile::tempdir().unwrap();
        cmd_gen_data(&small(), dir.path()).unwrap();
        match cmd_train(&small(), Phase::Student, dir.path()) {
            Err(Error::MissingPrerequisite(files)) => {
                let names: Vec<_> = files.iter().map(|p| p.file_name().unwrap().to_owned()).collect();
                assert_eq!(names, ["teacher0.ckpt", "teacher1.ckpt"]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn train_without_data_names_missing_split() {
        let dir = tempfile::tempdir().unwrap();
        let err = cmd_train(&small(), Phase::Base, dir.path()).unwrap_err();
        assert!(err.to_string().contains("train.csv"));
    }

    #[test]
    fn gen_data_creates_out_dir_and_is_idempotent() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("nested/out");
        let files = cmd_gen_data(&small(), &out).unwrap();
        assert!(files.iter().all(|f| f.is_file()));
        let first: Vec<Vec<u8>> = files.iter().map(|f| std::fs::read(f).unwrap()).collect();
        cmd_gen_data(&small(), &out).unwrap();
        let second: Vec<Vec<u8>> = files.iter().map(|f| std::fs::read(f).unwrap()).collect();
        assert_eq!(first, second);
    }

    #[test]
    fn gen_data_fails_on_uncreatable_dir() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, b"x").unwrap();
        assert!(matches!(cmd_gen_data(&small(), &blocker.join("sub")), Err(Error::Io { .. })));
    }

    #[test]
    fn tabular_source_is_split() {
        let dir = tempfile::tempdir().unwrap();
        let synth = generate_synthetic(&SynthConfig {
            n: 200,
            d: 6,
            num_classes: 3,
            ..SynthConfig::default()
        })
        .unwrap();
        let src = dir.path().join("all.csv");
        data::write_tabular(&synth, &src).unwrap();
        let cfg = ExperimentConfig {
            data: DataSource::Tabular { path: src, test: None },
            ..small()
        };
        cmd_gen_data(&cfg, &dir.path().join("out")).unwrap();
        let (train, test) = load_splits(&dir.path().join("out")).unwrap();
        assert_eq!(train.len() + test.len(), 200);
    }
}
