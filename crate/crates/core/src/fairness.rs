//! Per-group, per-class confusion statistics and group fairness metrics.
//!
//! For every class `c` (one-vs-rest) and group `k`:
//!
//! ```text
//! TPR = TP/(TP+FN)   TNR = TN/(TN+FP)   FPR = FP/(FP+TN)
//! Eopp0 = Σ_c |TNR_c^1 - TNR_c^0|
//! Eopp1 = Σ_c |TPR_c^1 - TPR_c^0|
//! Eodd  = Σ_c |TPR_c^1 - TPR_c^0 + FPR_c^1 - FPR_c^0|
//! ```
//!
//! `Eodd` is evaluated exactly as written above: no ½ factor and no max
//! over the two rate gaps, so opposite-signed TPR and FPR gaps cancel.
//!
//! A rate whose denominator is zero (e.g. a class absent from a group) is
//! 0 and the cell is listed in [`FairnessReport::degenerate_cells`].

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, LabeledExample};
use crate::error::{Error, Result};
use crate::nn::DenseNet;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl CellCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }
}

/// `counts[c][k]` for class `c` and group `k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupConfusion {
    pub num_classes: usize,
    pub counts: Vec<[CellCounts; 2]>,
    pub group_sizes: [u64; 2],
}

fn validate_predictions(pred: &[usize], truth: &[usize], groups: &[u8], num_classes: usize) -> Result<()> {
    if pred.len() != truth.len() || pred.len() != groups.len() {
        return Err(Error::InvalidInput(format!(
            "length mismatch: pred {}, truth {}, groups {}",
            pred.len(),
            truth.len(),
            groups.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::EmptyDataset("predictions".into()));
    }
    for (i, ((&p, &t), &k)) in pred.iter().zip(truth).zip(groups).enumerate() {
        if p >= num_classes || t >= num_classes {
            return Err(Error::InvalidInput(format!(
                "sample {i}: class id out of range for {num_classes} classes (pred {p}, truth {t})"
            )));
        }
        if k > 1 {
            return Err(Error::InvalidInput(format!("sample {i}: group {k} is not 0 or 1")));
        }
    }
    Ok(())
}

/// One-vs-rest counts per class and group.
pub fn confusion_from_predictions(
    pred: &[usize],
    truth: &[usize],
    groups: &[u8],
    num_classes: usize,
) -> Result<GroupConfusion> {
    validate_predictions(pred, truth, groups, num_classes)?;
    // per-group (pred, truth) matrix, then one-vs-rest per class
    let mut matrix = [vec![0u64; num_classes * num_classes], vec![0u64; num_classes * num_classes]];
    let mut group_sizes = [0u64; 2];
    for ((&p, &t), &k) in pred.iter().zip(truth).zip(groups) {
        matrix[k as usize][p * num_classes + t] += 1;
        group_sizes[k as usize] += 1;
    }
    let counts = (0..num_classes)
        .map(|c| {
            let mut cells = [CellCounts::default(); 2];
            for (k, cell) in cells.iter_mut().enumerate() {
                let m = &matrix[k];
                let tp = m[c * num_classes + c];
                let predicted: u64 = m[c * num_classes..(c + 1) * num_classes].iter().sum();
                let actual: u64 = (0..num_classes).map(|p| m[p * num_classes + c]).sum();
                let fp = predicted - tp;
                let fn_ = actual - tp;
                *cell = CellCounts {
                    tp,
                    fp,
                    fn_,
                    tn: group_sizes[k] - tp - fp - fn_,
                };
            }
            cells
        })
        .collect();
    Ok(GroupConfusion {
        num_classes,
        counts,
        group_sizes,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CellRates {
    pub tpr: f64,
    pub tnr: f64,
    pub fpr: f64,
}

/// A `(class, group)` cell where some rate had a zero denominator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegenerateCell {
    pub class: usize,
    pub group: u8,
    /// Names of the rates set to 0 by convention.
    pub rates: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRates {
    /// `rates[c][k]`.
    pub rates: Vec<[CellRates; 2]>,
    pub degenerate: Vec<DegenerateCell>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den != 0).then(|| num as f64 / den as f64)
}

pub fn rates(conf: &GroupConfusion) -> GroupRates {
    let mut degenerate = Vec::new();
    let rates = conf
        .counts
        .iter()
        .enumerate()
        .map(|(c, cells)| {
            let mut out = [CellRates::default(); 2];
            for (k, (cell, r)) in cells.iter().zip(out.iter_mut()).enumerate() {
                let tpr = ratio(cell.tp, cell.tp + cell.fn_);
                let tnr = ratio(cell.tn, cell.tn + cell.fp);
                let fpr = ratio(cell.fp, cell.fp + cell.tn);
                let mut missing = Vec::new();
                if tpr.is_none() {
                    missing.push("tpr".to_string());
                }
                if tnr.is_none() {
                    missing.push("tnr".to_string());
                }
                if fpr.is_none() {
                    missing.push("fpr".to_string());
                }
                if !missing.is_empty() {
                    degenerate.push(DegenerateCell {
                        class: c,
                        group: k as u8,
                        rates: missing,
                    });
                }
                *r = CellRates {
                    tpr: tpr.unwrap_or(0.0),
                    tnr: tnr.unwrap_or(0.0),
                    fpr: fpr.unwrap_or(0.0),
                };
            }
            out
        })
        .collect();
    GroupRates { rates, degenerate }
}

fn sum_over_classes(conf: &GroupConfusion, f: impl Fn(&[CellRates; 2]) -> f64) -> f64 {
    rates(conf).rates.iter().map(f).sum()
}

pub fn eopp0(conf: &GroupConfusion) -> f64 {
    sum_over_classes(conf, |r| (r[1].tnr - r[0].tnr).abs())
}

pub fn eopp1(conf: &GroupConfusion) -> f64 {
    sum_over_classes(conf, |r| (r[1].tpr - r[0].tpr).abs())
}

pub fn eodd(conf: &GroupConfusion) -> f64 {
    sum_over_classes(conf, |r| (r[1].tpr - r[0].tpr + r[1].fpr - r[0].fpr).abs())
}

/// A precision/recall/F1 triple.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Prf1 {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Per-group macro P/R/F1 with mean and absolute-difference rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupAccuracy {
    pub group0: Prf1,
    pub group1: Prf1,
    pub avg: Prf1,
    pub diff: Prf1,
}

impl GroupAccuracy {
    pub fn group(&self, k: u8) -> Prf1 {
        if k == 0 {
            self.group0
        } else {
            self.group1
        }
    }
}

/// Macro P/R/F1 for one group, averaged over the classes present in the
/// group's truth labels. A group with no samples scores 0.
fn macro_prf1(conf: &GroupConfusion, k: usize) -> Prf1 {
    let mut sum = Prf1::default();
    let mut present = 0usize;
    for cells in &conf.counts {
        let cell = cells[k];
        if cell.tp + cell.fn_ == 0 {
            continue;
        }
        present += 1;
        let p = ratio(cell.tp, cell.tp + cell.fp).unwrap_or(0.0);
        let r = ratio(cell.tp, cell.tp + cell.fn_).unwrap_or(0.0);
        let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
        sum.precision += p;
        sum.recall += r;
        sum.f1 += f;
    }
    if present == 0 {
        return Prf1::default();
    }
    let n = present as f64;
    Prf1 {
        precision: sum.precision / n,
        recall: sum.recall / n,
        f1: sum.f1 / n,
    }
}

pub fn group_accuracy(conf: &GroupConfusion) -> GroupAccuracy {
    let g0 = macro_prf1(conf, 0);
    let g1 = macro_prf1(conf, 1);
    let zip = |f: fn(f64, f64) -> f64| Prf1 {
        precision: f(g0.precision, g1.precision),
        recall: f(g0.recall, g1.recall),
        f1: f(g0.f1, g1.f1),
    };
    GroupAccuracy {
        group0: g0,
        group1: g1,
        avg: zip(|a, b| (a + b) / 2.0),
        diff: zip(|a, b| (a - b).abs()),
    }
}

/// Per-group P/R/F1 straight from predictions.
pub fn group_prf1(pred: &[usize], truth: &[usize], groups: &[u8], num_classes: usize) -> Result<GroupAccuracy> {
    Ok(group_accuracy(&confusion_from_predictions(pred, truth, groups, num_classes)?))
}

/// Everything reported for one evaluated model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    pub num_classes: usize,
    pub group_sizes: [u64; 2],
    pub eopp0: f64,
    pub eopp1: f64,
    pub eodd: f64,
    pub accuracy: GroupAccuracy,
    pub degenerate_cells: Vec<DegenerateCell>,
    pub confusion: GroupConfusion,
}

impl FairnessReport {
    /// Checks a (possibly deserialized) report: every derived field must
    /// match its confusion counts and lie in range.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(format!("invalid report: {m}")));
        let c = &self.confusion;
        if c.num_classes != self.num_classes || c.counts.len() != self.num_classes {
            return bad("class count disagrees with confusion".into());
        }
        for (class, cells) in c.counts.iter().enumerate() {
            for (k, cell) in cells.iter().enumerate() {
                if cell.tp + cell.tn + cell.fp + cell.fn_ != c.group_sizes[k] {
                    return bad(format!("cell (class {class}, group {k}) does not sum to the group size"));
                }
            }
        }
        let n = self.num_classes as f64;
        let in_range = |v: f64, hi: f64| v.is_finite() && (0.0..=hi).contains(&v);
        if !in_range(self.eopp0, n) || !in_range(self.eopp1, n) || !in_range(self.eodd, 2.0 * n) {
            return bad("metric out of range".into());
        }
        let a = &self.accuracy;
        for p in [a.group0, a.group1, a.avg, a.diff] {
            if ![p.precision, p.recall, p.f1].iter().all(|&v| in_range(v, 1.0)) {
                return bad("precision/recall/F1 out of [0, 1]".into());
            }
        }
        if Self::from_confusion(c.clone()) != *self {
            return bad("fields do not match the confusion counts".into());
        }
        Ok(())
    }

    pub fn from_confusion(conf: GroupConfusion) -> Self {
        Self {
            num_classes: conf.num_classes,
            group_sizes: conf.group_sizes,
            eopp0: eopp0(&conf),
            eopp1: eopp1(&conf),
            eodd: eodd(&conf),
            accuracy: group_accuracy(&conf),
            degenerate_cells: rates(&conf).degenerate,
            confusion: conf,
        }
    }

    pub fn from_predictions(pred: &[usize], truth: &[usize], groups: &[u8], num_classes: usize) -> Result<Self> {
        Ok(Self::from_confusion(confusion_from_predictions(
            pred,
            truth,
            groups,
            num_classes,
        )?))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Rows `Group 0`, `Group 1`, `Avg`, `Diff` with the fairness metrics
    /// repeated on each row.
    pub fn to_table(&self) -> String {
        let mut out = String::from("Bias Group,Precision,Recall,F-score,Eopp0,Eopp1,Eodd\n");
        let a = &self.accuracy;
        for (name, row) in [("Group 0", a.group0), ("Group 1", a.group1), ("Avg", a.avg), ("Diff", a.diff)] {
            let _ = writeln!(
                out,
                "{name},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4}",
                row.precision, row.recall, row.f1, self.eopp0, self.eopp1, self.eodd
            );
        }
        out
    }
}

/// Lowest index among the maxima.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

pub fn predict(net: &DenseNet, data: &Dataset) -> Result<Vec<usize>> {
    data.examples()
        .iter()
        .map(|e| net.forward(&e.x).map(|z| argmax(&z)))
        .collect()
}

/// Predicts `data` with `net` and builds the full report.
pub fn evaluate(net: &DenseNet, data: &Dataset) -> Result<FairnessReport> {
    if net.output_dim() != data.num_classes() {
        return Err(Error::DimMismatch {
            context: "network outputs vs dataset classes",
            expected: data.num_classes(),
            actual: net.output_dim(),
        });
    }
    let pred = predict(net, data)?;
    FairnessReport::from_predictions(&pred, &data.labels(), &data.groups(), data.num_classes())
}

/// One row of a prediction log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub pred: usize,
    pub truth: usize,
    pub group: u8,
}

/// `pred,truth,group` text, LF line endings.
pub fn prediction_log_bytes(rows: &[PredictionRow]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record(["pred", "truth", "group"])?;
    }
    w.into_inner()
        .map_err(|e| Error::InvalidInput(format!("flushing csv: {e}")))
}

pub fn read_prediction_log(path: impl AsRef<Path>) -> Result<Vec<PredictionRow>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(file);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != ["pred", "truth", "group"] {
        return Err(Error::MalformedRow {
            path: path.to_path_buf(),
            line: 1,
            message: format!("header must be pred,truth,group; got {}", header.join(",")),
        });
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let row: PredictionRow = rec.deserialize(None).map_err(|e| Error::MalformedRow {
            path: path.to_path_buf(),
            line,
            message: e.to_string(),
        })?;
        if row.group > 1 {
            return Err(Error::MalformedRow {
                path: path.to_path_buf(),
                line,
                message: format!("group must be 0 or 1, got {}", row.group),
            });
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Last-hidden-layer activations of every sample, with the original class
/// and group, as a dataset (written with the ordinary dataset format).
pub fn export_features(net: &DenseNet, data: &Dataset) -> Result<Dataset> {
    if data.is_empty() {
        return Err(Error::EmptyDataset("feature export".into()));
    }
    let examples = data
        .examples()
        .iter()
        .map(|e| {
            Ok(LabeledExample {
                x: net.penultimate(&e.x)?,
                y: e.y,
                k: e.k,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let width = examples[0].x.len();
    Dataset::new(width, data.num_classes(), examples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Activation;

    #[test]
    fn perfect_predictions() {
        let truth = vec![0, 1, 2, 0, 1, 2, 2];
        let groups = vec![0, 0, 0, 1, 1, 1, 1];
        let conf = confusion_from_predictions(&truth, &truth, &groups, 3).unwrap();
        for cells in &conf.counts {
            for cell in cells {
                assert_eq!((cell.fp, cell.fn_), (0, 0));
            }
        }
        let r = rates(&conf);
        for cells in &r.rates {
            for cell in cells {
                assert_eq!((cell.tpr, cell.tnr, cell.fpr), (1.0, 1.0, 0.0));
            }
        }
        assert_eq!(eopp1(&conf), 0.0);
        let acc = group_accuracy(&conf);
        assert_eq!(acc.group0, Prf1 { precision: 1.0, recall: 1.0, f1: 1.0 });
        assert_eq!(acc.group1, acc.group0);
        assert_eq!(acc.diff, Prf1::default());
    }

    #[test]
    fn hand_counted_cells() {
        // (pred, truth, k) = (0,0,0), (1,0,0), (2,2,1)
        let conf = confusion_from_predictions(&[0, 1, 2], &[0, 0, 2], &[0, 0, 1], 3).unwrap();
        assert_eq!(conf.counts[0][0], CellCounts { tp: 1, tn: 0, fp: 0, fn_: 1 });
        assert_eq!(conf.counts[2][1], CellCounts { tp: 1, tn: 0, fp: 0, fn_: 0 });
        assert_eq!(conf.counts[1][0], CellCounts { tp: 0, tn: 1, fp: 1, fn_: 0 });
    }

    #[test]
    fn rejects_bad_predictions() {
        assert!(confusion_from_predictions(&[0, 1], &[0], &[0, 0], 2).is_err());
        assert!(confusion_from_predictions(&[0, 2], &[0, 1], &[0, 0], 2).is_err());
        assert!(confusion_from_predictions(&[0, 1], &[0, 1], &[0, 3], 2).is_err());
        assert!(confusion_from_predictions(&[], &[], &[], 2).is_err());
    }

    #[test]
    fn tpr_half() {
        let conf = GroupConfusion {
            num_classes: 1,
            counts: vec![[CellCounts { tp: 1, fn_: 1, tn: 2, fp: 0 }; 2]],
            group_sizes: [4, 4],
        };
        assert_eq!(rates(&conf).rates[0][0].tpr, 0.5);
    }

    #[test]
    fn two_class_metric_example() {
        // group 1 TPR (1.0, 0.5), group 0 TPR (0.5, 0.5), equal FPRs
        let cell = |tp, fn_, fp, tn| CellCounts { tp, fn_, fp, tn };
        let conf = GroupConfusion {
            num_classes: 2,
            counts: vec![
                [cell(1, 1, 1, 3), cell(2, 0, 1, 3)],
                [cell(1, 1, 0, 4), cell(1, 1, 0, 4)],
            ],
            group_sizes: [6, 6],
        };
        assert_eq!(eopp1(&conf), 0.5);
        assert_eq!(eodd(&conf), 0.5);
        assert_eq!(eopp0(&conf), 0.0);
    }

    #[test]
    fn identical_groups_zero_metrics() {
        let pred = [0, 1, 1, 2, 0, 1, 1, 2];
        let truth = [0, 1, 2, 2, 0, 1, 2, 2];
        let groups = [0, 0, 0, 0, 1, 1, 1, 1];
        let conf = confusion_from_predictions(&pred, &truth, &groups, 3).unwrap();
        assert_eq!((eopp0(&conf), eopp1(&conf), eodd(&conf)), (0.0, 0.0, 0.0));
    }

    #[test]
    fn degenerate_cells_flagged() {
        // class 1 never appears in group 1's truth
        let conf = confusion_from_predictions(&[0, 1, 0], &[0, 1, 0], &[0, 0, 1], 2).unwrap();
        let r = rates(&conf);
        assert!(r
            .degenerate
            .iter()
            .any(|d| d.class == 1 && d.group == 1 && d.rates == ["tpr"]));
        assert_eq!(r.rates[1][1].tpr, 0.0);
    }

    #[test]
    fn macro_f1_skips_absent_classes() {
        // group 0 truth uses classes {0,1}; class 2 predicted once (FP only)
        let pred = [0, 2, 1, 1];
        let truth = [0, 1, 1, 0];
        let groups = [0, 0, 0, 1];
        let acc = group_prf1(&pred, &truth, &groups, 3).unwrap();
        // class 0: p=1 r=1 f=1; class 1: p=1 r=0.5 f=2/3
        assert!((acc.group0.f1 - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-15);
        assert_eq!(acc.group0.recall, 0.75);
        assert_eq!(acc.group1, Prf1::default());
    }

    #[test]
    fn table_layout() {
        let truth = [0, 1, 0, 1];
        let report = FairnessReport::from_predictions(&truth, &truth, &[0, 0, 1, 1], 2).unwrap();
        let t = report.to_table();
        let lines: Vec<_> = t.lines().collect();
        assert_eq!(lines[0], "Bias Group,Precision,Recall,F-score,Eopp0,Eopp1,Eodd");
        assert_eq!(lines[1], "Group 0,1.0000,1.0000,1.0000,0.0000,0.0000,0.0000");
        assert_eq!(lines[4], "Diff,0.0000,0.0000,0.0000,0.0000,0.0000,0.0000");
    }

    #[test]
    fn argmax_ties_pick_lowest() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0, 2.0]), 1);
        assert_eq!(argmax(&[0.0, 0.0]), 0);
    }

    #[test]
    fn prediction_log_round_trip() {
        let rows = vec![
            PredictionRow { pred: 1, truth: 0, group: 1 },
            PredictionRow { pred: 2, truth: 2, group: 0 },
        ];
        let bytes = prediction_log_bytes(&rows).unwrap();
        assert_eq!(String::from_utf8(bytes.clone()).unwrap(), "pred,truth,group\n1,0,1\n2,2,0\n");
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("log.csv");
        std::fs::write(&p, bytes).unwrap();
        assert_eq!(read_prediction_log(&p).unwrap(), rows);
        std::fs::write(&p, "pred,truth,group\n1,0,2\n").unwrap();
        assert!(matches!(read_prediction_log(&p), Err(Error::MalformedRow { line: 2, .. })));
    }

    fn sample_data() -> Dataset {
        Dataset::new(
            3,
            2,
            vec![
                LabeledExample { x: vec![1.0, -1.0, 0.5], y: 0, k: 0 },
                LabeledExample { x: vec![0.2, 0.3, -0.4], y: 1, k: 1 },
            ],
        )
        .unwrap()
    }

    #[test]
    fn export_shapes_and_zero_net() {
        let net = DenseNet::init(&[3, 5, 2], 1).unwrap();
        let feats = export_features(&net, &sample_data()).unwrap();
        assert_eq!(feats.num_features(), 5);
        assert_eq!(feats.groups(), vec![0, 1]);
        assert_eq!(feats.labels(), vec![0, 1]);

        let zero = DenseNet::from_parts(
            &[3, 4, 2],
            vec![vec![0.0; 12], vec![0.0; 8]],
            vec![vec![0.0; 4], vec![0.0; 2]],
            Activation::Relu,
        )
        .unwrap();
        let feats = export_features(&zero, &sample_data()).unwrap();
        assert!(feats.examples().iter().all(|e| e.x.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn export_matches_truncated_forward() {
        let net = DenseNet::init(&[3, 6, 4, 2], 8).unwrap();
        let data = sample_data();
        let feats = export_features(&net, &data).unwrap();
        for (f, e) in feats.examples().iter().zip(data.examples()) {
            // re-evaluate the first two layers by hand
            let mut a = e.x.clone();
            for layer in &net.layers()[..2] {
                a = (0..layer.out_dim())
                    .map(|i| {
                        let s: f64 = (0..layer.in_dim())
                            .map(|j| layer.weights()[i * layer.in_dim() + j] * a[j])
                            .sum();
                        (s + layer.biases()[i]).max(0.0)
                    })
                    .collect();
            }
            for (x, y) in f.x.iter().zip(&a) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
