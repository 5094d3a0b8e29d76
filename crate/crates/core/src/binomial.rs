//! Log-space binomial tail probabilities.
//!
//! Tails are needed far beyond `f64` range (probabilities like `2^-1000`
//! show up for badly miscalibrated rank sets), so everything is returned as
//! a natural logarithm.

use statrs::function::factorial::ln_binomial;

/// Stop summing once a term is this small relative to the running total.
const SUM_TOL: f64 = 1e-18;

/// `ln P(X = k)` for `X ~ Binomial(trials, p)` with `0 < p < 1`.
pub fn ln_pmf(trials: u64, p: f64, k: u64) -> f64 {
    if k > trials {
        return f64::NEG_INFINITY;
    }
    ln_binomial(trials, k) + k as f64 * p.ln() + (trials - k) as f64 * (-p).ln_1p()
}

/// `(ln P(X <= k), ln P(X >= k))` for `X ~ Binomial(trials, p)`, `p` in `[0, 1]`.
pub fn ln_tails(trials: u64, p: f64, k: u64) -> (f64, f64) {
    debug_assert!((0.0..=1.0).contains(&p));
    if k > trials {
        return (0.0, f64::NEG_INFINITY);
    }
    if p <= 0.0 {
        let upper = if k == 0 { 0.0 } else { f64::NEG_INFINITY };
        return (0.0, upper);
    }
    if p >= 1.0 {
        let lower = if k == trials { 0.0 } else { f64::NEG_INFINITY };
        return (lower, 0.0);
    }
    (ln_lower(trials, p, k), ln_upper(trials, p, k))
}

fn ln_lower(trials: u64, p: f64, k: u64) -> f64 {
    if k >= trials {
        return 0.0;
    }
    if (k as f64) <= trials as f64 * p {
        ln_lower_direct(trials, p, k)
    } else {
        // The complement is an upper tail that starts above the mean, so it
        // is at most about one half and the subtraction is benign.
        (-ln_upper_direct(trials, p, k + 1).exp()).ln_1p()
    }
}

fn ln_upper(trials: u64, p: f64, k: u64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    if (k as f64) >= trials as f64 * p {
        ln_upper_direct(trials, p, k)
    } else {
        (-ln_lower_direct(trials, p, k - 1).exp()).ln_1p()
    }
}

/// Sums `pmf(k) + pmf(k-1) + ...` relative to `pmf(k)`.
fn ln_lower_direct(trials: u64, p: f64, k: u64) -> f64 {
    let q = 1.0 - p;
    let n = trials as f64;
    let mut term = 1.0;
    let mut total = 1.0;
    let mut j = k;
    while j > 0 {
        // pmf(j-1) / pmf(j)
        term *= j as f64 * q / ((n - j as f64 + 1.0) * p);
        total += term;
        if term < SUM_TOL * total {
            break;
        }
        j -= 1;
    }
    ln_pmf(trials, p, k) + total.ln()
}

/// Sums `pmf(k) + pmf(k+1) + ...` relative to `pmf(k)`.
fn ln_upper_direct(trials: u64, p: f64, k: u64) -> f64 {
    let q = 1.0 - p;
    let n = trials as f64;
    let mut term = 1.0;
    let mut total = 1.0;
    let mut j = k;
    while j < trials {
        // pmf(j+1) / pmf(j)
        term *= (n - j as f64) * p / ((j as f64 + 1.0) * q);
        total += term;
        if term < SUM_TOL * total {
            break;
        }
        j += 1;
    }
    ln_pmf(trials, p, k) + total.ln()
}

/// `ln(e^a + e^b)`.
pub(crate) fn ln_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Both log tails for every `k` in `0..=trials` at a fixed `p`.
///
/// Built by cumulative log-sum-exp over the pmf; used where the same
/// `(trials, p)` is queried many times.
#[derive(Clone, Debug)]
pub struct TailTable {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl TailTable {
    pub fn new(trials: u64, p: f64) -> Self {
        let n = trials as usize;
        if p <= 0.0 || p >= 1.0 {
            let (lower, upper) = (0..=trials).map(|k| ln_tails(trials, p, k)).unzip();
            return Self { lower, upper };
        }
        let pmf: Vec<f64> = (0..=trials).map(|k| ln_pmf(trials, p, k)).collect();
        let mut lower = vec![0.0; n + 1];
        let mut upper = vec![0.0; n + 1];
        let mut acc = f64::NEG_INFINITY;
        for k in 0..=n {
            acc = ln_add_exp(acc, pmf[k]);
            lower[k] = acc.min(0.0);
        }
        acc = f64::NEG_INFINITY;
        for k in (0..=n).rev() {
            acc = ln_add_exp(acc, pmf[k]);
            upper[k] = acc.min(0.0);
        }
        lower[n] = 0.0;
        upper[0] = 0.0;
        Self { lower, upper }
    }

    pub fn ln_lower(&self, k: usize) -> f64 {
        self.lower[k]
    }

    pub fn ln_upper(&self, k: usize) -> f64 {
        self.upper[k]
    }
}
