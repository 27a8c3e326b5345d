//! Trains a base network, finetunes one teacher per group, and shows each
//! teacher's macro F1 on both groups.
//!
//! `cargo run --release --example biased_teachers`

use fair_distill::data::{generate_synthetic, stratified_split, SynthConfig};
use fair_distill::fairness::evaluate;
use fair_distill::training::{train_teachers, TrainConfig};

fn main() -> fair_distill::Result<()> {
    let data = generate_synthetic(&SynthConfig::default())?;
    let (train, test) = stratified_split(&data, 0.2, 0)?;
    let cfg = TrainConfig::default();
    let set = train_teachers(&train, &cfg, None)?;

    println!("{:<9} {:>8} {:>8}", "model", "F1(0)", "F1(1)");
    for (name, net) in [("base", &set.base), ("teacher0", &set.t0), ("teacher1", &set.t1)] {
        let a = evaluate(net, &test)?.accuracy;
        println!("{name:<9} {:>8.4} {:>8.4}", a.group0.f1, a.group1.f1);
    }
    Ok(())
}
