//! The five loss terms on a toy batch, with the group routing spelled out.

use fair_distill::losses::{batch_total_loss, kl_distill, softened_probs, LossWeights};

fn main() -> fair_distill::Result<()> {
    let student = vec![vec![1.0, 0.2, -0.5], vec![0.1, 0.9, 0.0], vec![-0.3, 0.4, 1.2], vec![0.5, 0.5, 0.5]];
    // T0 is confident on group 0 samples, T1 on group 1 samples
    let t0 = vec![vec![3.0, 0.0, -1.0], vec![0.0, 2.5, 0.0], vec![0.2, 0.1, 0.3], vec![0.0, 0.1, 0.0]];
    let t1 = vec![vec![0.3, 0.2, 0.1], vec![0.1, 0.2, 0.0], vec![-1.0, 0.0, 3.0], vec![2.0, 0.0, 0.0]];
    let labels = [0, 1, 2, 0];
    let groups = [0, 0, 1, 1];

    for tau in [1.0, 5.0] {
        let p = softened_probs(&t0[0], tau)?;
        println!("T0 on sample 0 at tau={tau}: {p:.3?}");
    }
    println!("KL(T0 || S) on sample 0, tau=5: {:.4}", kl_distill(&t0[0], &student[0], 5.0)?);

    let w = LossWeights::default();
    let loss = batch_total_loss(&student, &t0, &t1, &labels, &groups, &w)?;
    let b = &loss.breakdown;
    println!("weights {:?}", w);
    println!("L_CE      {:.4}", b.l_ce);
    println!("L_bias0   {:.4}  (group 0 vs T0)", b.l_bias0);
    println!("L_bias1   {:.4}  (group 1 vs T1)", b.l_bias1);
    println!("L_debias0 {:.4}  (group 0 vs T1)", b.l_debias0);
    println!("L_debias1 {:.4}  (group 1 vs T0)", b.l_debias1);
    println!("L_total   {:.4}", b.l_total);
    println!("dL/dz for sample 0: {:.4?}", loss.grads[0]);
    Ok(())
}
