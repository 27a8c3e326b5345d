//! Temperature softmax, cross-entropy, and the group-routed distillation
//! terms, each with its gradient with respect to the student's logits.
//!
//! The batch objective is
//!
//! ```text
//! L = λ·CE + α·KL(T0‖S | group 0) + β·KL(T1‖S | group 1)
//!          + γ·KL(T1‖S | group 0) + δ·KL(T0‖S | group 1)
//! ```
//!
//! where every KL term is `τ² · Σ_c P_c^T log(P_c^T / P_c^S)` on
//! temperature-softened distributions, averaged over the samples of the
//! named group in the batch. A group missing from the batch contributes 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weights of the five loss terms plus the softening temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    /// Cross-entropy.
    pub lambda: f64,
    /// Group 0 pulled toward teacher 0.
    pub alpha: f64,
    /// Group 1 pulled toward teacher 1.
    pub beta: f64,
    /// Group 0 pulled toward teacher 1.
    pub gamma: f64,
    /// Group 1 pulled toward teacher 0.
    pub delta: f64,
    pub tau: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            alpha: 0.99,
            beta: 0.001,
            gamma: 0.99,
            delta: 0.01,
            tau: 5.0,
        }
    }
}

impl LossWeights {
    /// Cross-entropy only.
    pub fn ce_only() -> Self {
        Self {
            lambda: 1.0,
            alpha: 0.0,
            beta: 0.0,
            gamma: 0.0,
            delta: 0.0,
            tau: 1.0,
        }
    }

    /// Same weights with the roles of the two groups exchanged.
    pub fn mirrored(self) -> Self {
        Self {
            alpha: self.beta,
            beta: self.alpha,
            gamma: self.delta,
            delta: self.gamma,
            ..self
        }
    }

    pub fn has_distillation(&self) -> bool {
        [self.alpha, self.beta, self.gamma, self.delta]
            .iter()
            .any(|&w| w != 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "tau must be finite and > 0, got {}",
                self.tau
            )));
        }
        for (name, w) in [
            ("lambda", self.lambda),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("delta", self.delta),
        ] {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be finite and >= 0, got {w}"
                )));
            }
        }
        Ok(())
    }
}

fn check_logits(z: &[f64], what: &str) -> Result<()> {
    if z.is_empty() {
        return Err(Error::InvalidInput(format!("{what}: empty logit vector")));
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(what.to_string()));
    }
    Ok(())
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("tau must be > 0, got {tau}")))
    }
}

/// `log softmax(z / tau)` via max-shift.
fn log_softmax(z: &[f64], tau: f64) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let shifted: Vec<f64> = z.iter().map(|&v| (v - max) / tau).collect();
    let lse = shifted.iter().map(|s| s.exp()).sum::<f64>().ln();
    shifted.into_iter().map(|s| s - lse).collect()
}

fn softmax_unchecked(z: &[f64], tau: f64) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = z.iter().map(|&v| ((v - max) / tau).exp()).collect();
    let sum: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= sum);
    p
}

/// `P_c = exp(z_c/τ) / Σ_j exp(z_j/τ)`.
pub fn softened_probs(z: &[f64], tau: f64) -> Result<Vec<f64>> {
    check_logits(z, "logits")?;
    check_tau(tau)?;
    Ok(softmax_unchecked(z, tau))
}

/// `-Σ_c y_c log softmax(z)_c` for a one-hot `y`.
pub fn cross_entropy(z: &[f64], y: &[f64]) -> Result<f64> {
    check_logits(z, "logits")?;
    let class = one_hot_index(y)?;
    if y.len() != z.len() {
        return Err(Error::DimMismatch {
            context: "one-hot label",
            expected: z.len(),
            actual: y.len(),
        });
    }
    Ok(ce_unchecked(z, class))
}

/// Cross-entropy against a class index.
pub fn cross_entropy_class(z: &[f64], class: usize) -> Result<f64> {
    check_logits(z, "logits")?;
    check_class(class, z.len())?;
    Ok(ce_unchecked(z, class))
}

fn ce_unchecked(z: &[f64], class: usize) -> f64 {
    // max(0.0) keeps a result of -0.0 or -ulp out of the non-negative range.
    (-log_softmax(z, 1.0)[class]).max(0.0)
}

/// Gradient of [`cross_entropy_class`] with respect to `z`: `softmax(z) - e_y`.
pub fn cross_entropy_grad(z: &[f64], class: usize) -> Result<Vec<f64>> {
    check_logits(z, "logits")?;
    check_class(class, z.len())?;
    let mut g = softmax_unchecked(z, 1.0);
    g[class] -= 1.0;
    Ok(g)
}

fn one_hot_index(y: &[f64]) -> Result<usize> {
    let mut idx = None;
    for (i, &v) in y.iter().enumerate() {
        if v == 1.0 && idx.is_none() {
            idx = Some(i);
        } else if v != 0.0 {
            return Err(Error::InvalidInput(format!("label is not one-hot: {y:?}")));
        }
    }
    idx.ok_or_else(|| Error::InvalidInput(format!("label is not one-hot: {y:?}")))
}

fn check_class(class: usize, n: usize) -> Result<()> {
    if class < n {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "class {class} out of range for {n} logits"
        )))
    }
}

fn check_pair(zt: &[f64], zs: &[f64], tau: f64) -> Result<()> {
    check_logits(zt, "teacher logits")?;
    check_logits(zs, "student logits")?;
    check_tau(tau)?;
    if zt.len() != zs.len() {
        return Err(Error::DimMismatch {
            context: "teacher vs student logits",
            expected: zt.len(),
            actual: zs.len(),
        });
    }
    Ok(())
}

fn kl_unchecked(zt: &[f64], zs: &[f64], tau: f64) -> f64 {
    let lt = log_softmax(zt, tau);
    let ls = log_softmax(zs, tau);
    let kl: f64 = lt
        .iter()
        .zip(&ls)
        .map(|(&a, &b)| {
            let p = a.exp();
            if p == 0.0 {
                0.0
            } else {
                p * (a - b)
            }
        })
        .sum();
    (tau * tau * kl).max(0.0)
}

fn kl_grad_unchecked(zt: &[f64], zs: &[f64], tau: f64) -> Vec<f64> {
    let pt = softmax_unchecked(zt, tau);
    let ps = softmax_unchecked(zs, tau);
    ps.iter().zip(&pt).map(|(s, t)| tau * (s - t)).collect()
}

/// `τ² · KL(softmax(z_t/τ) ‖ softmax(z_s/τ))`.
pub fn kl_distill(z_teacher: &[f64], z_student: &[f64], tau: f64) -> Result<f64> {
    check_pair(z_teacher, z_student, tau)?;
    Ok(kl_unchecked(z_teacher, z_student, tau))
}

/// Gradient of [`kl_distill`] with respect to the student logits,
/// `τ · (P^S - P^T)`. Teacher logits are constants.
pub fn kl_distill_grad(z_teacher: &[f64], z_student: &[f64], tau: f64) -> Result<Vec<f64>> {
    check_pair(z_teacher, z_student, tau)?;
    Ok(kl_grad_unchecked(z_teacher, z_student, tau))
}

/// Per-term values of one batch objective.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BatchLossBreakdown {
    pub l_ce: f64,
    pub l_bias0: f64,
    pub l_bias1: f64,
    pub l_debias0: f64,
    pub l_debias1: f64,
    pub l_total: f64,
    pub n_group0: usize,
    pub n_group1: usize,
}

impl BatchLossBreakdown {
    /// Recombines the terms with `w`, in the same order as the batch objective.
    pub fn combine(&self, w: &LossWeights) -> f64 {
        w.lambda * self.l_ce
            + w.alpha * self.l_bias0
            + w.beta * self.l_bias1
            + w.gamma * self.l_debias0
            + w.delta * self.l_debias1
    }

    pub fn is_finite(&self) -> bool {
        [
            self.l_ce,
            self.l_bias0,
            self.l_bias1,
            self.l_debias0,
            self.l_debias1,
            self.l_total,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// Breakdown plus `∂L/∂z` for every student sample.
#[derive(Debug, Clone)]
pub struct BatchLoss {
    pub breakdown: BatchLossBreakdown,
    pub grads: Vec<Vec<f64>>,
}

fn check_groups(groups: &[u8]) -> Result<()> {
    match groups.iter().position(|&k| k > 1) {
        Some(i) => Err(Error::InvalidInput(format!(
            "sample {i}: group {} is not 0 or 1",
            groups[i]
        ))),
        None => Ok(()),
    }
}

fn check_len(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimMismatch {
            context,
            expected,
            actual,
        })
    }
}

/// Cross-entropy term of the batch objective and its per-sample gradients,
/// scaled by `lambda / n`.
fn ce_part(student: &[Vec<f64>], labels: &[usize], lambda: f64) -> Result<(f64, Vec<Vec<f64>>)> {
    let n = student.len();
    let scale = lambda / n as f64;
    let mut sum = 0.0;
    let mut grads = Vec::with_capacity(n);
    for (z, &y) in student.iter().zip(labels) {
        check_logits(z, "student logits")?;
        check_class(y, z.len())?;
        sum += ce_unchecked(z, y);
        let mut g = softmax_unchecked(z, 1.0);
        g[y] -= 1.0;
        g.iter_mut().for_each(|v| *v *= scale);
        grads.push(g);
    }
    Ok((sum / n as f64, grads))
}

/// Cross-entropy-only batch objective (`λ = 1`, all distillation terms
/// absent). Gradients are bitwise equal to those of [`batch_total_loss`]
/// with `λ = 1` and zero distillation weights.
pub fn batch_ce_loss(student: &[Vec<f64>], labels: &[usize], groups: &[u8]) -> Result<BatchLoss> {
    let n = student.len();
    if n == 0 {
        return Err(Error::EmptyDataset("batch".into()));
    }
    check_len("labels", n, labels.len())?;
    check_len("groups", n, groups.len())?;
    check_groups(groups)?;
    let (l_ce, grads) = ce_part(student, labels, 1.0)?;
    let n_group1 = groups.iter().filter(|&&k| k == 1).count();
    Ok(BatchLoss {
        breakdown: BatchLossBreakdown {
            l_ce,
            l_total: l_ce,
            n_group0: n - n_group1,
            n_group1,
            ..Default::default()
        },
        grads,
    })
}

/// Full weighted objective over one batch. Teacher logits are constants.
pub fn batch_total_loss(
    student: &[Vec<f64>],
    teacher0: &[Vec<f64>],
    teacher1: &[Vec<f64>],
    labels: &[usize],
    groups: &[u8],
    w: &LossWeights,
) -> Result<BatchLoss> {
    w.validate()?;
    let n = student.len();
    if n == 0 {
        return Err(Error::EmptyDataset("batch".into()));
    }
    check_len("teacher0 logits", n, teacher0.len())?;
    check_len("teacher1 logits", n, teacher1.len())?;
    check_len("labels", n, labels.len())?;
    check_len("groups", n, groups.len())?;
    check_groups(groups)?;
    for ((s, t0), t1) in student.iter().zip(teacher0).zip(teacher1) {
        check_pair(t0, s, w.tau)?;
        check_pair(t1, s, w.tau)?;
    }

    let (l_ce, mut grads) = ce_part(student, labels, w.lambda)?;

    let n1 = groups.iter().filter(|&&k| k == 1).count();
    let n0 = n - n1;

    // (weight, teacher, routed group, count)
    let terms: [(f64, &[Vec<f64>], u8, usize); 4] = [
        (w.alpha, teacher0, 0, n0),
        (w.beta, teacher1, 1, n1),
        (w.gamma, teacher1, 0, n0),
        (w.delta, teacher0, 1, n1),
    ];
    let mut values = [0.0; 4];
    for (value, &(weight, teacher, group, count)) in values.iter_mut().zip(&terms) {
        if count == 0 {
            continue;
        }
        let mut sum = 0.0;
        for i in (0..n).filter(|&i| groups[i] == group) {
            sum += kl_unchecked(&teacher[i], &student[i], w.tau);
        }
        *value = sum / count as f64;
        if weight != 0.0 {
            let scale = weight / count as f64;
            for i in (0..n).filter(|&i| groups[i] == group) {
                let g = kl_grad_unchecked(&teacher[i], &student[i], w.tau);
                for (acc, v) in grads[i].iter_mut().zip(g) {
                    *acc += scale * v;
                }
            }
        }
    }

    let mut breakdown = BatchLossBreakdown {
        l_ce,
        l_bias0: values[0],
        l_bias1: values[1],
        l_debias0: values[2],
        l_debias1: values[3],
        l_total: 0.0,
        n_group0: n0,
        n_group1: n1,
    };
    breakdown.l_total = breakdown.combine(w);
    Ok(BatchLoss { breakdown, grads })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn rand_logits(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-scale..scale)).collect()
    }

    #[test]
    fn uniform_softmax() {
        let p = softened_probs(&[0.0, 0.0, 0.0], 2.0).unwrap();
        assert!(p.iter().all(|&v| close(v, 1.0 / 3.0, 1e-15)));
    }

    #[test]
    fn exact_two_class_softmax() {
        let p = softened_probs(&[2f64.ln(), 0.0], 1.0).unwrap();
        assert!(close(p[0], 2.0 / 3.0, 1e-15) && close(p[1], 1.0 / 3.0, 1e-15));
    }

    #[test]
    fn softmax_matches_high_precision() {
        // 50-digit evaluation of exp(z_c/4) / sum exp(z_j/4), z = [1,2,3].
        let want = [
            0.254_275_212_590_465_623_13,
            0.326_495_835_799_836_671_44,
            0.419_228_951_609_697_705_43,
        ];
        let p = softened_probs(&[1.0, 2.0, 3.0], 4.0).unwrap();
        for (g, w) in p.iter().zip(want) {
            assert!(close(*g, w, 1e-12), "{g} vs {w}");
        }
    }

    #[test]
    fn softmax_rejects_bad_input() {
        assert!(softened_probs(&[1.0, f64::NAN], 1.0).is_err());
        assert!(softened_probs(&[1.0, 2.0], 0.0).is_err());
        assert!(softened_probs(&[1.0, 2.0], -1.0).is_err());
    }

    #[test]
    fn softmax_large_logits_stay_normalized() {
        let p = softened_probs(&[1000.0, -1000.0, 999.0], 1.0).unwrap();
        assert!(close(p.iter().sum(), 1.0, 1e-12));
        assert!(p.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn ce_confident_correct_is_zero() {
        let ce = cross_entropy(&[40.0, 0.0, 0.0], &[1.0, 0.0, 0.0]).unwrap();
        assert!(ce <= 1e-9);
    }

    #[test]
    fn ce_uniform_two_class() {
        let ce = cross_entropy(&[0.0, 0.0], &[1.0, 0.0]).unwrap();
        assert!(close(ce, std::f64::consts::LN_2, 1e-15));
    }

    #[test]
    fn ce_matches_high_precision() {
        let z = [0.37, -1.25, 2.5, 0.0, -0.75, 1.125, 3.0, -2.0, 0.5];
        let mut y = [0.0; 9];
        y[6] = 1.0;
        let ce = cross_entropy(&z, &y).unwrap();
        assert!(close(ce, 0.697_316_518_056_330_480_84, 1e-12), "{ce}");
        assert_eq!(ce, cross_entropy_class(&z, 6).unwrap());
    }

    #[test]
    fn ce_rejects_non_one_hot() {
        assert!(cross_entropy(&[0.0, 0.0], &[0.5, 0.5]).is_err());
        assert!(cross_entropy(&[0.0, 0.0], &[0.0, 0.0]).is_err());
        assert!(cross_entropy(&[0.0, 0.0], &[1.0, 1.0]).is_err());
        assert!(cross_entropy(&[0.0, 0.0], &[1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn kl_identical_is_zero() {
        assert_eq!(kl_distill(&[1.0, -2.0, 0.5], &[1.0, -2.0, 0.5], 3.0).unwrap(), 0.0);
    }

    #[test]
    fn kl_shift_invariant() {
        let zs = [0.3, -1.2, 2.2, 0.0];
        let zt: Vec<f64> = zs.iter().map(|v| v + 7.5).collect();
        assert!(kl_distill(&zt, &zs, 5.0).unwrap() <= 1e-12);
    }

    #[test]
    fn kl_matches_high_precision() {
        let kl = kl_distill(&[2.0, 0.0], &[0.0, 0.0], 2.0).unwrap();
        assert!(close(kl, 0.443_776_286_686_909_418_48, 1e-12), "{kl}");
        let kl = kl_distill(&[1.5, -0.5, 0.25, 2.0], &[0.1, 0.2, -0.3, 0.4], 5.0).unwrap();
        assert!(close(kl, 0.385_112_613_132_516_012_6, 1e-12), "{kl}");
    }

    #[test]
    fn kl_rejects_length_mismatch() {
        assert!(matches!(
            kl_distill(&[1.0, 2.0], &[1.0, 2.0, 3.0], 1.0),
            Err(Error::DimMismatch { .. })
        ));
        assert!(kl_distill_grad(&[1.0], &[1.0, 2.0], 1.0).is_err());
    }

    #[test]
    fn kl_grad_zero_at_minimum() {
        let g = kl_distill_grad(&[0.4, 1.0, -3.0], &[0.4, 1.0, -3.0], 4.0).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn kl_grad_matches_finite_differences_and_sums_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let n = rng.random_range(2..8);
            let tau = rng.random_range(0.5..6.0);
            let zt = rand_logits(&mut rng, n, 4.0);
            let zs = rand_logits(&mut rng, n, 4.0);
            let g = kl_distill_grad(&zt, &zs, tau).unwrap();
            assert!(g.iter().sum::<f64>().abs() < 1e-10);
            let h = 1e-5;
            for c in 0..n {
                let mut up = zs.clone();
                let mut dn = zs.clone();
                up[c] += h;
                dn[c] -= h;
                let fd = (kl_distill(&zt, &up, tau).unwrap() - kl_distill(&zt, &dn, tau).unwrap())
                    / (2.0 * h);
                let rel = (g[c] - fd).abs() / g[c].abs().max(fd.abs()).max(1e-6);
                assert!(rel < 1e-4, "{} vs {fd}", g[c]);
            }
        }
    }

    #[test]
    fn ce_grad_is_softmax_minus_onehot() {
        let g = cross_entropy_grad(&[0.0, 0.0], 1).unwrap();
        assert_eq!(g, vec![0.5, -0.5]);
    }

    struct Batch {
        s: Vec<Vec<f64>>,
        t0: Vec<Vec<f64>>,
        t1: Vec<Vec<f64>>,
        y: Vec<usize>,
        k: Vec<u8>,
    }

    fn random_batch(seed: u64, n: usize, c: usize) -> Batch {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Batch {
            s: (0..n).map(|_| rand_logits(&mut rng, c, 3.0)).collect(),
            t0: (0..n).map(|_| rand_logits(&mut rng, c, 3.0)).collect(),
            t1: (0..n).map(|_| rand_logits(&mut rng, c, 3.0)).collect(),
            y: (0..n).map(|_| rng.random_range(0..c)).collect(),
            k: (0..n).map(|_| rng.random_range(0..2)).collect(),
        }
    }

    #[test]
    fn ce_only_weights_reduce_to_ce() {
        let b = random_batch(1, 16, 5);
        let out = batch_total_loss(&b.s, &b.t0, &b.t1, &b.y, &b.k, &LossWeights::ce_only()).unwrap();
        assert_eq!(out.breakdown.l_total, out.breakdown.l_ce);
        let ce = batch_ce_loss(&b.s, &b.y, &b.k).unwrap();
        assert_eq!(ce.breakdown.l_ce, out.breakdown.l_ce);
        for (a, b) in out.grads.iter().zip(&ce.grads) {
            assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }

    #[test]
    fn single_group_batch_zeroes_other_terms() {
        let mut b = random_batch(2, 12, 4);
        b.k = vec![0; 12];
        let w = LossWeights {
            lambda: 0.0,
            alpha: 0.0,
            beta: 1.0,
            gamma: 0.0,
            delta: 1.0,
            tau: 2.0,
        };
        let out = batch_total_loss(&b.s, &b.t0, &b.t1, &b.y, &b.k, &w).unwrap();
        assert_eq!(out.breakdown.l_bias1, 0.0);
        assert_eq!(out.breakdown.l_debias1, 0.0);
        assert_eq!(out.breakdown.n_group1, 0);
        assert!(out.breakdown.l_bias0 > 0.0);
        assert!(out.grads.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn total_recombines_from_individual_terms() {
        let b = random_batch(3, 32, 6);
        let w = LossWeights::default();
        let out = batch_total_loss(&b.s, &b.t0, &b.t1, &b.y, &b.k, &w).unwrap();

        // term-wise oracle from the scalar functions
        let mean = |f: &dyn Fn(usize) -> Option<f64>| {
            let v: Vec<f64> = (0..b.s.len()).filter_map(f).collect();
            if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 }
        };
        let ce = mean(&|i| Some(cross_entropy_class(&b.s[i], b.y[i]).unwrap()));
        let kl = |t: &Vec<Vec<f64>>, k: u8| {
            mean(&|i| (b.k[i] == k).then(|| kl_distill(&t[i], &b.s[i], w.tau).unwrap()))
        };
        let bias0 = kl(&b.t0, 0);
        let bias1 = kl(&b.t1, 1);
        let debias0 = kl(&b.t1, 0);
        let debias1 = kl(&b.t0, 1);
        let total = 1.0 * ce + 0.99 * bias0 + 0.001 * bias1 + 0.99 * debias0 + 0.01 * debias1;
        assert!(close(out.breakdown.l_ce, ce, 1e-12));
        assert!(close(out.breakdown.l_bias0, bias0, 1e-12));
        assert!(close(out.breakdown.l_bias1, bias1, 1e-12));
        assert!(close(out.breakdown.l_debias0, debias0, 1e-12));
        assert!(close(out.breakdown.l_debias1, debias1, 1e-12));
        assert!(close(out.breakdown.l_total, total, 1e-12));
    }

    #[test]
    fn total_grad_matches_finite_differences() {
        let b = random_batch(4, 10, 4);
        let w = LossWeights {
            lambda: 0.7,
            alpha: 0.9,
            beta: 0.4,
            gamma: 0.3,
            delta: 1.1,
            tau: 3.0,
        };
        let out = batch_total_loss(&b.s, &b.t0, &b.t1, &b.y, &b.k, &w).unwrap();
        let h = 1e-5;
        for i in 0..b.s.len() {
            for c in 0..4 {
                let eval = |d: f64| {
                    let mut s = b.s.clone();
                    s[i][c] += d;
                    batch_total_loss(&s, &b.t0, &b.t1, &b.y, &b.k, &w).unwrap().breakdown.l_total
                };
                let fd = (eval(h) - eval(-h)) / (2.0 * h);
                let g = out.grads[i][c];
                let rel = (g - fd).abs() / g.abs().max(fd.abs()).max(1e-6);
                assert!(rel < 1e-4, "sample {i} class {c}: {g} vs {fd}");
            }
        }
    }

    #[test]
    fn batch_validation() {
        let b = random_batch(5, 4, 3);
        let w = LossWeights::default();
        assert!(batch_total_loss(&b.s, &b.t0[..3], &b.t1, &b.y, &b.k, &w).is_err());
        assert!(batch_total_loss(&b.s, &b.t0, &b.t1, &b.y[..2], &b.k, &w).is_err());
        let mut k = b.k.clone();
        k[2] = 2;
        assert!(matches!(
            batch_total_loss(&b.s, &b.t0, &b.t1, &b.y, &k, &w),
            Err(Error::InvalidInput(_))
        ));
        assert!(batch_total_loss(&[], &[], &[], &[], &[], &w).is_err());
        let bad = LossWeights { tau: 0.0, ..w };
        assert!(batch_total_loss(&b.s, &b.t0, &b.t1, &b.y, &b.k, &bad).is_err());
        let bad = LossWeights { gamma: -0.1, ..w };
        assert!(batch_total_loss(&b.s, &b.t0, &b.t1, &b.y, &b.k, &bad).is_err());
    }

    #[test]
    fn mirrored_swaps_group_roles() {
        let w = LossWeights::default().mirrored();
        assert_eq!((w.alpha, w.beta, w.gamma, w.delta), (0.001, 0.99, 0.01, 0.99));
    }
}
