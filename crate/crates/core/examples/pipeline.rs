//! The config-driven pipeline the `fair-distill` binary runs: data split,
//! base, both teachers, student, evaluation, and a hashed manifest.
//!
//! `cargo run --release --example pipeline -- [config.json] [out_dir]`

use std::path::PathBuf;

use fair_distill::experiment::{run_pipeline, ExperimentConfig};

fn main() -> fair_distill::Result<()> {
    let mut args = std::env::args().skip(1);
    let cfg = match args.next() {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let out = PathBuf::from(args.next().unwrap_or_else(|| "pipeline_out".into()));
    for file in run_pipeline(&cfg, &out)? {
        println!("{}", file.display());
    }
    print!("{}", std::fs::read_to_string(out.join("student.report.csv")).unwrap_or_default());
    Ok(())
}
