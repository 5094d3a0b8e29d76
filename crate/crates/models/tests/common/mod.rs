//! Helpers shared by the integration suites.
#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::Rng;
use sbc_core::RngStream;

/// `ln |det J|` of `f` restricted to its first `input.len()` outputs, by
/// central differences.
pub fn fd_log_det<F: Fn(&[f64]) -> Vec<f64>>(f: F, input: &[f64]) -> f64 {
    let d = input.len();
    let mut jac = DMatrix::zeros(d, d);
    for j in 0..d {
        let h = 1e-6 * input[j].abs().max(1e-2);
        let mut plus = input.to_vec();
        let mut minus = input.to_vec();
        plus[j] += h;
        minus[j] -= h;
        let (fp, fm) = (f(&plus), f(&minus));
        for i in 0..d {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    jac.determinant().abs().ln()
}

/// Random point in `(0.02, 0.98)^d`.
pub fn interior_unit_point(rng: &mut RngStream, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(0.02..0.98)).collect()
}

/// Random strictly increasing positive vector with gaps of at least 0.05.
pub fn increasing_point(rng: &mut RngStream, d: usize) -> Vec<f64> {
    let mut acc = 0.0;
    (0..d)
        .map(|_| {
            acc += rng.random_range(0.05..1.5);
            acc
        })
        .collect()
}

/// Mean of the largest coordinate and friends for sorted Dirichlet(alpha)
/// draws, by brute force.
pub fn sorted_dirichlet_means(alpha: f64, k: usize, draws: usize, rng: &mut RngStream) -> Vec<f64> {
    use rand_distr::Gamma;
    let gamma = Gamma::new(alpha, 1.0).unwrap();
    let mut means = vec![0.0; k];
    for _ in 0..draws {
        let mut w: Vec<f64> = (0..k).map(|_| rng.sample(gamma)).collect();
        let total: f64 = w.iter().sum();
        w.sort_by(f64::total_cmp);
        for (m, wi) in means.iter_mut().zip(&w) {
            *m += wi / total / draws as f64;
        }
    }
    means
}

/// Two-sided Kolmogorov-Smirnov statistic of `sample` against `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}
