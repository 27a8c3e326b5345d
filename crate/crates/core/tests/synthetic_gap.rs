//! Train-and-measure checks of the synthetic generator: a CE baseline's
//! group F1 gap tracks `bias_strength`.

use fair_distill::data::{generate_synthetic, stratified_split, SynthConfig};
use fair_distill::fairness::evaluate;
use fair_distill::training::{train_base, TrainConfig};

fn mean_gap(bias: f64) -> f64 {
    let gaps: Vec<f64> = (0..5)
        .map(|seed| {
            let data = generate_synthetic(&SynthConfig {
                bias_strength: bias,
                seed,
                ..SynthConfig::default()
            })
            .unwrap();
            let (train, test) = stratified_split(&data, 0.2, seed).unwrap();
            let cfg = TrainConfig {
                seed,
                ..TrainConfig::default()
            };
            let (net, _) = train_base(&train, &cfg.student_hidden, &cfg, None).unwrap();
            let a = evaluate(&net, &test).unwrap().accuracy;
            a.group0.f1 - a.group1.f1
        })
        .collect();
    gaps.iter().sum::<f64>() / gaps.len() as f64
}

#[test]
fn baseline_gap_grows_with_bias_strength() {
    let gaps: Vec<f64> = [0.0, 0.4, 0.8].map(mean_gap).to_vec();
    println!("mean F1(0) - F1(1) at bias 0, 0.4, 0.8: {gaps:.4?}");
    assert!(gaps[0].abs() < 0.05, "unbiased gap {}", gaps[0]);
    assert!(gaps[2] > 0.05, "biased gap {}", gaps[2]);
    assert!(gaps[0] <= gaps[1] && gaps[1] <= gaps[2], "not monotone: {gaps:?}");
}
