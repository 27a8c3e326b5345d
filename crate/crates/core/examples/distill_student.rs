//! CE baseline against a student distilled from two biased teachers, with
//! the full fairness table for each.
//!
//! `cargo run --release --example distill_student`

use fair_distill::data::{generate_synthetic, stratified_split, SynthConfig};
use fair_distill::fairness::evaluate;
use fair_distill::losses::LossWeights;
use fair_distill::training::{train_student, train_teachers, TrainConfig};

fn main() -> fair_distill::Result<()> {
    let data = generate_synthetic(&SynthConfig::default())?;
    let (train, test) = stratified_split(&data, 0.2, 0)?;
    let cfg = TrainConfig::default();
    let set = train_teachers(&train, &cfg, None)?;

    let runs = [
        ("CE baseline", LossWeights { tau: cfg.weights.tau, ..LossWeights::ce_only() }),
        ("student", LossWeights::default().mirrored()),
    ];
    for (name, weights) in runs {
        let c = TrainConfig { weights, ..cfg.clone() };
        let (net, record) = train_student(&train, &set.t0, &set.t1, &c, None)?;
        let report = evaluate(&net, &test)?;
        let last = record.epochs.last().map(|e| e.losses.l_total).unwrap_or(f64::NAN);
        println!("== {name} (final train loss {last:.4})");
        print!("{}", report.to_table());
    }
    Ok(())
}
