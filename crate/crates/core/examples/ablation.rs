//! Single-term ablation: each distillation term alone at several weights,
//! against the CE baseline and the full weighting.
//!
//! `cargo run --release --example ablation`

use fair_distill::data::{generate_synthetic, stratified_split, SynthConfig};
use fair_distill::losses::LossWeights;
use fair_distill::training::{run_ablation, TrainConfig};

fn main() -> fair_distill::Result<()> {
    let data = generate_synthetic(&SynthConfig::default())?;
    let (train, test) = stratified_split(&data, 0.2, 0)?;
    let cfg = TrainConfig {
        weights: LossWeights::default().mirrored(),
        ..TrainConfig::default()
    };
    let table = run_ablation(&train, &test, &cfg, &[0.6, 0.8, 1.0])?;
    print!("{}", table.to_table());
    Ok(())
}
