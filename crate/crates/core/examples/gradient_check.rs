//! Compares analytic backprop gradients of the distillation objective with
//! central finite differences on a small random network.

use fair_distill::losses::{batch_total_loss, LossWeights};
use fair_distill::nn::DenseNet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn objective(net: &DenseNet, xs: &[Vec<f64>], t0: &[Vec<f64>], t1: &[Vec<f64>], y: &[usize], k: &[u8], w: &LossWeights) -> f64 {
    let z: Vec<Vec<f64>> = xs.iter().map(|x| net.forward(x).unwrap()).collect();
    batch_total_loss(&z, t0, t1, y, k, w).unwrap().breakdown.l_total
}

fn main() -> fair_distill::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let dims = [5, 8, 6, 4];
    let net = DenseNet::init(&dims, 1)?;
    let n = 6;
    let mut vec = |len: usize| (0..len).map(|_| rng.random_range(-2.0..2.0)).collect::<Vec<f64>>();
    let xs: Vec<_> = (0..n).map(|_| vec(5)).collect();
    let t0: Vec<_> = (0..n).map(|_| vec(4)).collect();
    let t1: Vec<_> = (0..n).map(|_| vec(4)).collect();
    let y = [0, 1, 2, 3, 1, 0];
    let k = [0, 1, 0, 1, 1, 0];
    let w = LossWeights::default();

    // analytic gradient: backprop dL/dz per sample
    let z: Vec<Vec<f64>> = xs.iter().map(|x| net.forward(x).unwrap()).collect();
    let loss = batch_total_loss(&z, &t0, &t1, &y, &k, &w)?;
    let mut analytic: Vec<f64> = vec![0.0; net.num_params()];
    for (x, g) in xs.iter().zip(&loss.grads) {
        for (a, v) in analytic.iter_mut().zip(net.backward(x, g)?.values()) {
            *a += v;
        }
    }

    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut idx = 0;
    for l in 0..net.layers().len() {
        let (nw, nb) = (net.layers()[l].weights().len(), net.layers()[l].biases().len());
        for p in 0..nw + nb {
            let eval = |delta: f64| {
                let mut m = net.clone();
                let layer = &mut m.layers_mut()[l];
                if p < nw {
                    layer.weights_mut()[p] += delta;
                } else {
                    layer.biases_mut()[p - nw] += delta;
                }
                objective(&m, &xs, &t0, &t1, &y, &k, &w)
            };
            let numeric = (eval(h) - eval(-h)) / (2.0 * h);
            let rel = (numeric - analytic[idx]).abs() / numeric.abs().max(analytic[idx].abs()).max(1e-8);
            worst = worst.max(rel);
            idx += 1;
        }
    }
    println!("loss = {:.6}", loss.breakdown.l_total);
    println!("checked {idx} parameters, worst relative error {worst:.2e}");
    Ok(())
}
