//! Fairness report for a hand-written set of predictions.

use fair_distill::fairness::FairnessReport;

fn main() -> fair_distill::Result<()> {
    let truth = [0, 1, 2, 0, 1, 2, 0, 1, 2, 0, 1, 2];
    let groups = [0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1];
    // group 0 is predicted perfectly, group 1 confuses class 2 with class 1
    let pred = [0, 1, 2, 0, 1, 2, 0, 1, 1, 0, 1, 1];

    let report = FairnessReport::from_predictions(&pred, &truth, &groups, 3)?;
    print!("{}", report.to_table());
    println!();
    println!("Eopp0 {:.4}  Eopp1 {:.4}  Eodd {:.4}", report.eopp0, report.eopp1, report.eodd);
    for cell in &report.degenerate_cells {
        println!("undefined rate(s) {:?} for class {} group {}", cell.rates, cell.class, cell.group);
    }
    Ok(())
}
