//! Fair knowledge distillation from two group-biased teachers.
//!
//! A base network is trained with cross-entropy, then finetuned once on
//! each sensitive group to obtain two deliberately biased teachers. A
//! smaller student learns from both frozen teachers through four KL terms
//! routed by group: each group is pulled toward its own teacher (biasing)
//! and toward the other group's teacher (debiasing), alongside ordinary
//! cross-entropy. Group fairness is measured with multi-class equalized
//! opportunity (`Eopp0`, `Eopp1`) and equalized odds (`Eodd`).
//!
//! Everything is plain `f64` code with no ML framework: [`nn`] holds the
//! dense network and its gradients, [`losses`] the objective, [`fairness`]
//! the metrics, [`data`] the synthetic and tabular datasets, [`training`]
//! the three training phases, and [`experiment`] the config-driven
//! pipeline behind the `fair-distill` binary.

pub mod data;
pub mod error;
pub mod experiment;
pub mod fairness;
pub mod losses;
pub mod nn;
pub mod training;

pub use data::{Dataset, LabeledExample, SynthConfig};
pub use error::{Error, Result};
pub use fairness::{FairnessReport, GroupConfusion};
pub use losses::{BatchLossBreakdown, LossWeights};
pub use nn::{DenseNet, GradientBundle};
pub use training::{RunRecord, TrainConfig};
