//! Generates the biased synthetic benchmark at a few bias strengths and
//! writes one split to disk.
//!
//! `cargo run --release --example synthetic_data -- [out_dir]`

use fair_distill::data::{generate_synthetic, load_tabular, stratified_split, write_tabular, SynthConfig, TabularSchema};

fn main() -> fair_distill::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "synthetic_out".into());
    for bias in [0.0, 0.4, 0.8] {
        let cfg = SynthConfig {
            bias_strength: bias,
            seed: 1,
            ..SynthConfig::default()
        };
        let data = generate_synthetic(&cfg)?;
        let counts = data.cell_counts();
        println!("bias {bias}: {} samples, (class, group) cell counts {counts:?}", data.len());
    }

    let data = generate_synthetic(&SynthConfig::default())?;
    let (train, test) = stratified_split(&data, 0.2, 0)?;
    std::fs::create_dir_all(&out).map_err(|e| fair_distill::Error::InvalidInput(e.to_string()))?;
    let path = std::path::Path::new(&out).join("train.csv");
    write_tabular(&train, &path)?;
    let back = load_tabular(&path, TabularSchema::default())?;
    assert_eq!(back, train);
    println!("train {} / test {} written to {}", train.len(), test.len(), path.display());
    Ok(())
}
