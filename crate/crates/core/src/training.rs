//! Three-phase training: a cross-entropy base model, two teachers
//! finetuned on one group each, and a student distilled from both frozen
//! teachers under the weighted group-routed objective.
//!
//! All phases share one mini-batch SGD loop. Batches come from a seeded
//! shuffle of the full (mixed-group) training set; group routing happens
//! inside the loss. Equal `(data, config)` give bit-identical parameters.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{filter_group, Dataset};
use crate::error::{Error, Result};
use crate::fairness::{evaluate, FairnessReport};
use crate::losses::{batch_ce_loss, batch_total_loss, BatchLossBreakdown, LossWeights};
use crate::nn::{DenseNet, GradientBundle};

/// Derives a sub-seed from a root seed and a label (first 8 bytes of
/// SHA-256 over the root's little-endian bytes followed by the label).
pub fn derive_seed(root: u64, label: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(root.to_le_bytes());
    h.update(label.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("sha256 has 32 bytes"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Teacher finetuning epochs; `None` means a quarter of `epochs`.
    pub finetune_epochs: Option<usize>,
    pub batch_size: usize,
    pub lr: f64,
    pub weights: LossWeights,
    pub seed: u64,
    /// Hidden widths; input and output widths come from the data.
    pub student_hidden: Vec<usize>,
    pub teacher_hidden: Vec<usize>,
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            finetune_epochs: None,
            batch_size: 128,
            lr: 0.01,
            weights: LossWeights::default(),
            seed: 0,
            student_hidden: vec![32],
            teacher_hidden: vec![64, 64],
            shuffle: true,
        }
    }
}

impl TrainConfig {
    pub fn finetune_epochs(&self) -> usize {
        self.finetune_epochs.unwrap_or(self.epochs / 4)
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be >= 1".into()));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidConfig(format!("lr must be finite and >= 0, got {}", self.lr)));
        }
        if self.student_hidden.iter().chain(&self.teacher_hidden).any(|&w| w == 0) {
            return Err(Error::InvalidConfig("hidden widths must be >= 1".into()));
        }
        self.weights.validate()
    }

    pub fn dims(&self, hidden: &[usize], data: &Dataset) -> Vec<usize> {
        std::iter::once(data.num_features())
            .chain(hidden.iter().copied())
            .chain(std::iter::once(data.num_classes()))
            .collect()
    }
}

/// Held-out metrics after one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalSnapshot {
    pub f1_group0: f64,
    pub f1_group1: f64,
    pub eopp0: f64,
    pub eopp1: f64,
    pub eodd: f64,
}

impl From<&FairnessReport> for EvalSnapshot {
    fn from(r: &FairnessReport) -> Self {
        Self {
            f1_group0: r.accuracy.group0.f1,
            f1_group1: r.accuracy.group1.f1,
            eopp0: r.eopp0,
            eopp1: r.eopp1,
            eodd: r.eodd,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    /// Means over the epoch's batches; counts are summed.
    pub losses: BatchLossBreakdown,
    pub eval: Option<EvalSnapshot>,
}

/// Log of one training phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub phase: String,
    pub seed: u64,
    pub config: TrainConfig,
    pub layer_dims: Vec<usize>,
    pub epochs: Vec<EpochLog>,
    /// Checkpoint file names, filled in by whoever writes them.
    pub checkpoints: Vec<String>,
}

impl RunRecord {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Frozen teacher pair, evaluated without gradients.
#[derive(Clone, Copy)]
pub struct Teachers<'a> {
    pub t0: &'a DenseNet,
    pub t1: &'a DenseNet,
}

struct Fit<'a> {
    train: &'a Dataset,
    eval: Option<&'a Dataset>,
    epochs: usize,
    batch_size: usize,
    lr: f64,
    shuffle: bool,
    shuffle_seed: u64,
    /// `None` means plain cross-entropy.
    distill: Option<(Teachers<'a>, LossWeights)>,
}

impl Fit<'_> {
    fn run(&self, net: &mut DenseNet) -> Result<Vec<EpochLog>> {
        if self.train.is_empty() {
            return Err(Error::EmptyDataset("training set".into()));
        }
        if net.input_dim() != self.train.num_features() || net.output_dim() != self.train.num_classes() {
            return Err(Error::ShapeMismatch(format!(
                "network {:?} does not fit data with {} features and {} classes",
                net.layer_dims(),
                self.train.num_features(),
                self.train.num_classes()
            )));
        }
        let examples = self.train.examples();
        let mut order: Vec<usize> = (0..examples.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(self.shuffle_seed);
        let mut grads = GradientBundle::zeros_like(net);
        let mut logs = Vec::with_capacity(self.epochs);

        // Teachers are frozen, so their logits per training sample are
        // fixed for the whole run.
        let teacher_logits = match &self.distill {
            Some((teachers, _)) => {
                let run = |t: &DenseNet| {
                    examples.iter().map(|e| t.forward(&e.x)).collect::<Result<Vec<_>>>()
                };
                Some((run(teachers.t0)?, run(teachers.t1)?))
            }
            None => None,
        };

        for epoch in 0..self.epochs {
            if self.shuffle {
                order.shuffle(&mut rng);
            }
            let mut sum = BatchLossBreakdown::default();
            let mut n_batches = 0usize;
            for (b, batch) in order.chunks(self.batch_size).enumerate() {
                let traces = batch
                    .iter()
                    .map(|&i| net.forward_trace(&examples[i].x))
                    .collect::<Result<Vec<_>>>()?;
                let logits: Vec<Vec<f64>> = traces.iter().map(|t| t.logits().to_vec()).collect();
                if logits.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(Error::NonFiniteLoss {
                        epoch,
                        batch: b,
                        detail: "non-finite student logits".into(),
                    });
                }
                let labels: Vec<usize> = batch.iter().map(|&i| examples[i].y).collect();
                let groups: Vec<u8> = batch.iter().map(|&i| examples[i].k).collect();
                let loss = match (&self.distill, &teacher_logits) {
                    (Some((_, w)), Some((t0, t1))) => {
                        let t0: Vec<Vec<f64>> = batch.iter().map(|&i| t0[i].clone()).collect();
                        let t1: Vec<Vec<f64>> = batch.iter().map(|&i| t1[i].clone()).collect();
                        batch_total_loss(&logits, &t0, &t1, &labels, &groups, w)?
                    }
                    _ => batch_ce_loss(&logits, &labels, &groups)?,
                };
                if !loss.breakdown.is_finite() {
                    return Err(Error::NonFiniteLoss {
                        epoch,
                        batch: b,
                        detail: format!("{:?}", loss.breakdown),
                    });
                }
                grads.scale(0.0);
                for (trace, g) in traces.iter().zip(&loss.grads) {
                    net.backward_trace(trace, g, &mut grads)?;
                }
                net.apply_sgd(&grads, self.lr)?;
                accumulate(&mut sum, &loss.breakdown);
                n_batches += 1;
            }
            let eval = match self.eval {
                Some(data) => Some(EvalSnapshot::from(&evaluate(net, data)?)),
                None => None,
            };
            logs.push(EpochLog {
                epoch,
                losses: mean_of(sum, n_batches),
                eval,
            });
        }
        Ok(logs)
    }
}

fn accumulate(sum: &mut BatchLossBreakdown, b: &BatchLossBreakdown) {
    sum.l_ce += b.l_ce;
    sum.l_bias0 += b.l_bias0;
    sum.l_bias1 += b.l_bias1;
    sum.l_debias0 += b.l_debias0;
    sum.l_debias1 += b.l_debias1;
    sum.l_total += b.l_total;
    sum.n_group0 += b.n_group0;
    sum.n_group1 += b.n_group1;
}

fn mean_of(sum: BatchLossBreakdown, n: usize) -> BatchLossBreakdown {
    let n = n.max(1) as f64;
    BatchLossBreakdown {
        l_ce: sum.l_ce / n,
        l_bias0: sum.l_bias0 / n,
        l_bias1: sum.l_bias1 / n,
        l_debias0: sum.l_debias0 / n,
        l_debias1: sum.l_debias1 / n,
        l_total: sum.l_total / n,
        ..sum
    }
}

fn record(phase: &str, cfg: &TrainConfig, net: &DenseNet, epochs: Vec<EpochLog>) -> RunRecord {
    RunRecord {
        phase: phase.to_string(),
        seed: cfg.seed,
        config: cfg.clone(),
        layer_dims: net.layer_dims().to_vec(),
        epochs,
        checkpoints: Vec::new(),
    }
}

/// Cross-entropy training of a fresh network with the given hidden widths.
/// Init and shuffling derive from `cfg.seed` only, so the same seed gives
/// the same trajectory for equal architectures.
pub fn train_base(
    train: &Dataset,
    hidden: &[usize],
    cfg: &TrainConfig,
    eval: Option<&Dataset>,
) -> Result<(DenseNet, RunRecord)> {
    cfg.validate()?;
    let mut net = DenseNet::init(&cfg.dims(hidden, train), derive_seed(cfg.seed, "init"))?;
    let logs = Fit {
        train,
        eval,
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        lr: cfg.lr,
        shuffle: cfg.shuffle,
        shuffle_seed: derive_seed(cfg.seed, "shuffle"),
        distill: None,
    }
    .run(&mut net)?;
    let rec = record("base", cfg, &net, logs);
    Ok((net, rec))
}

/// Continues cross-entropy training of a copy of `base` on group `k` only,
/// for `cfg.finetune_epochs()` epochs.
pub fn finetune_teacher(
    base: &DenseNet,
    train: &Dataset,
    k: u8,
    cfg: &TrainConfig,
    eval: Option<&Dataset>,
) -> Result<(DenseNet, RunRecord)> {
    cfg.validate()?;
    if k > 1 {
        return Err(Error::InvalidInput(format!("group {k} is not 0 or 1")));
    }
    let subset = filter_group(train, k);
    if subset.is_empty() {
        return Err(Error::EmptyDataset(format!("no group-{k} samples to finetune on")));
    }
    let mut net = base.clone();
    let logs = Fit {
        train: &subset,
        eval,
        epochs: cfg.finetune_epochs(),
        batch_size: cfg.batch_size,
        lr: cfg.lr,
        shuffle: cfg.shuffle,
        shuffle_seed: derive_seed(cfg.seed, &format!("finetune{k}")),
        distill: None,
    }
    .run(&mut net)?;
    let rec = record(&format!("teacher{k}"), cfg, &net, logs);
    Ok((net, rec))
}

/// Distills a fresh student (`cfg.student_hidden`) from two frozen
/// teachers under `cfg.weights`. Uses the same init and shuffle streams
/// as [`train_base`], so zero distillation weights reproduce it exactly.
pub fn train_student(
    train: &Dataset,
    t0: &DenseNet,
    t1: &DenseNet,
    cfg: &TrainConfig,
    eval: Option<&Dataset>,
) -> Result<(DenseNet, RunRecord)> {
    cfg.validate()?;
    let dims = cfg.dims(&cfg.student_hidden, train);
    for (name, t) in [("teacher0", t0), ("teacher1", t1)] {
        if t.input_dim() != dims[0] || t.output_dim() != *dims.last().expect("non-empty") {
            return Err(Error::ShapeMismatch(format!(
                "{name} {:?} does not match student input/output {} -> {}",
                t.layer_dims(),
                dims[0],
                dims.last().expect("non-empty")
            )));
        }
    }
    let mut net = DenseNet::init(&dims, derive_seed(cfg.seed, "init"))?;
    let logs = Fit {
        train,
        eval,
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        lr: cfg.lr,
        shuffle: cfg.shuffle,
        shuffle_seed: derive_seed(cfg.seed, "shuffle"),
        distill: Some((Teachers { t0, t1 }, cfg.weights)),
    }
    .run(&mut net)?;
    let rec = record("student", cfg, &net, logs);
    Ok((net, rec))
}

/// Base model plus both finetuned teachers.
#[derive(Debug, Clone)]
pub struct TeacherSet {
    pub base: DenseNet,
    pub t0: DenseNet,
    pub t1: DenseNet,
    pub records: [RunRecord; 3],
}

pub fn train_teachers(train: &Dataset, cfg: &TrainConfig, eval: Option<&Dataset>) -> Result<TeacherSet> {
    let (base, r_base) = train_base(train, &cfg.teacher_hidden, cfg, eval)?;
    let (t0, r0) = finetune_teacher(&base, train, 0, cfg, eval)?;
    let (t1, r1) = finetune_teacher(&base, train, 1, cfg, eval)?;
    Ok(TeacherSet {
        base,
        t0,
        t1,
        records: [r_base, r0, r1],
    })
}

/// Single distillation term switched on in an ablation row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Term {
    Bias0,
    Bias1,
    Debias0,
    Debias1,
}

impl Term {
    pub const ALL: [Term; 4] = [Term::Bias0, Term::Bias1, Term::Debias0, Term::Debias1];

    pub fn name(self) -> &'static str {
        match self {
            Term::Bias0 => "bias0",
            Term::Bias1 => "bias1",
            Term::Debias0 => "debias0",
            Term::Debias1 => "debias1",
        }
    }

    /// Cross-entropy plus this term alone at `weight`.
    pub fn weights(self, weight: f64, tau: f64) -> LossWeights {
        let mut w = LossWeights {
            tau,
            ..LossWeights::ce_only()
        };
        match self {
            Term::Bias0 => w.alpha = weight,
            Term::Bias1 => w.beta = weight,
            Term::Debias0 => w.gamma = weight,
            Term::Debias1 => w.delta = weight,
        }
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "term")]
pub enum RowKind {
    Baseline,
    Single(Term),
    Proposed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub kind: RowKind,
    /// Weight of the active term; 0 for the baseline, `None` for the
    /// proposed row (which uses the configured weights).
    pub weight: Option<f64>,
    pub weights: LossWeights,
    pub f1_group0: f64,
    pub f1_group1: f64,
}

impl AblationRow {
    fn active(&self) -> [bool; 5] {
        let w = &self.weights;
        [w.lambda, w.alpha, w.beta, w.gamma, w.delta].map(|v| v != 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub rows: Vec<AblationRow>,
}

impl AblationTable {
    pub fn baseline(&self) -> Option<&AblationRow> {
        self.rows.iter().find(|r| r.kind == RowKind::Baseline)
    }

    pub fn proposed(&self) -> Option<&AblationRow> {
        self.rows.iter().find(|r| r.kind == RowKind::Proposed)
    }

    pub fn single(&self, term: Term, weight: f64) -> Option<&AblationRow> {
        self.rows
            .iter()
            .find(|r| r.kind == RowKind::Single(term) && r.weight == Some(weight))
    }

    /// `weight,L_CE,L_bias0,L_bias1,L_debias0,L_debias1,F(0),F(1)` with
    /// `1`/`0` term flags; the proposed row's weight reads `proposed`.
    pub fn to_table(&self) -> String {
        let mut out = String::from("weight,L_CE,L_bias0,L_bias1,L_debias0,L_debias1,F(0),F(1)\n");
        for r in &self.rows {
            let weight = match r.weight {
                Some(w) => format!("{w}"),
                None => "proposed".to_string(),
            };
            let flags: Vec<&str> = r.active().iter().map(|&a| if a { "1" } else { "0" }).collect();
            out.push_str(&format!(
                "{weight},{},{:.4},{:.4}\n",
                flags.join(","),
                r.f1_group0,
                r.f1_group1
            ));
        }
        out
    }
}

/// Trains one student per row: CE baseline, each single term at each grid
/// weight (others zero, `λ = 1`), and `cfg.weights` as the proposed row.
/// Every row shares `cfg.seed`, so rows differ only in their loss weights.
/// Rows are trained on scoped threads and collected in a fixed order.
pub fn run_ablation_with_teachers(
    train: &Dataset,
    test: &Dataset,
    teachers: Teachers<'_>,
    cfg: &TrainConfig,
    grid: &[f64],
) -> Result<AblationTable> {
    cfg.validate()?;
    let tau = cfg.weights.tau;
    let mut plan: Vec<(RowKind, Option<f64>, LossWeights)> =
        vec![(RowKind::Baseline, Some(0.0), LossWeights { tau, ..LossWeights::ce_only() })];
    for term in Term::ALL {
        for &w in grid {
            plan.push((RowKind::Single(term), Some(w), term.weights(w, tau)));
        }
    }
    plan.push((RowKind::Proposed, None, cfg.weights));
    for (_, _, w) in &plan {
        w.validate()?;
    }

    let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).min(plan.len());
    let results: Vec<Result<(f64, f64)>> = std::thread::scope(|s| {
        let chunks: Vec<Vec<usize>> = (0..threads)
            .map(|t| (t..plan.len()).step_by(threads).collect())
            .collect();
        let handles: Vec<_> = chunks
            .into_iter()
            .map(|idx| {
                let plan = &plan;
                s.spawn(move || {
                    idx.into_iter()
                        .map(|i| {
                            let cell_cfg = TrainConfig {
                                weights: plan[i].2,
                                ..cfg.clone()
                            };
                            let (net, _) = train_student(train, teachers.t0, teachers.t1, &cell_cfg, None)?;
                            let report = evaluate(&net, test)?;
                            Ok((i, (report.accuracy.group0.f1, report.accuracy.group1.f1)))
                        })
                        .collect::<Vec<Result<(usize, (f64, f64))>>>()
                })
            })
            .collect();
        let mut out: Vec<Option<Result<(f64, f64)>>> = (0..plan.len()).map(|_| None).collect();
        for h in handles {
            for r in h.join().expect("ablation worker panicked") {
                match r {
                    Ok((i, v)) => out[i] = Some(Ok(v)),
                    Err(e) => return vec![Err(e)],
                }
            }
        }
        out.into_iter().map(|o| o.expect("every row computed")).collect()
    });

    let mut rows = Vec::with_capacity(plan.len());
    for ((kind, weight, weights), res) in plan.into_iter().zip(results) {
        let (f1_group0, f1_group1) = res?;
        rows.push(AblationRow {
            kind,
            weight,
            weights,
            f1_group0,
            f1_group1,
        });
    }
    Ok(AblationTable { rows })
}

/// Trains the teachers from `train`, then runs the ablation grid.
pub fn run_ablation(train: &Dataset, test: &Dataset, cfg: &TrainConfig, grid: &[f64]) -> Result<AblationTable> {
    let set = train_teachers(train, cfg, None)?;
    run_ablation_with_teachers(
        train,
        test,
        Teachers {
            t0: &set.t0,
            t1: &set.t1,
        },
        cfg,
        grid,
    )
}
