//! The two-point variant: `theta` is 1/3 or 2/3 with equal prior mass, so
//! every posterior family is fixed by two numbers and ties are certain.

use rayon::prelude::*;
use serde::Serialize;

use super::q::{value_of_q, ScalarLaw};
use crate::ModelError;

const LOW: f64 = 1.0 / 3.0;
const HIGH: f64 = 2.0 / 3.0;

/// Residual below which a scanned family is reported as passing.
pub const SCAN_THRESHOLD: f64 = 1e-6;

/// Law of `theta` on `{1/3, 2/3}` with mass `p_low` at 1/3.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoPointLaw {
    pub p_low: f64,
}

impl ScalarLaw for TwoPointLaw {
    fn below(&self, s: f64) -> f64 {
        if s <= LOW {
            0.0
        } else if s <= HIGH {
            self.p_low
        } else {
            1.0
        }
    }

    fn tie(&self, s: f64) -> f64 {
        if s == LOW {
            self.p_low
        } else if s == HIGH {
            1.0 - self.p_low
        } else {
            0.0
        }
    }

    fn quantile(&self, x: f64) -> f64 {
        if x <= self.p_low {
            LOW
        } else {
            HIGH
        }
    }
}

/// Posterior mass at 1/3 after observing 0 (`a`) and 1 (`b`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DiscreteFamily {
    pub a: f64,
    pub b: f64,
}

impl DiscreteFamily {
    pub fn new(a: f64, b: f64) -> Result<Self, ModelError> {
        if !((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b)) {
            return Err(ModelError::InvalidParameter(format!("({a}, {b}) is not a pair of probabilities")));
        }
        Ok(Self { a, b })
    }

    pub fn correct() -> Self {
        Self { a: 2.0 / 3.0, b: 1.0 / 3.0 }
    }

    pub fn q(&self, x: f64, y: u8) -> f64 {
        let (fitted, truth) = if y == 0 {
            (TwoPointLaw { p_low: self.a }, TwoPointLaw { p_low: 2.0 / 3.0 })
        } else {
            (TwoPointLaw { p_low: self.b }, TwoPointLaw { p_low: 1.0 / 3.0 })
        };
        value_of_q(&fitted, &truth, x)
    }

    /// `max |(q(x|0) + q(x|1))/2 - x|`. Both `q` are piecewise linear with
    /// kinks only at `a` and `b`, so checking those (plus a coarse grid as
    /// a guard) gives the exact supremum.
    pub fn residual(&self) -> f64 {
        let r = |x: f64| (0.5 * (self.q(x, 0) + self.q(x, 1)) - x).abs();
        let grid = (0..=64).map(|i| i as f64 / 64.0);
        [self.a, self.b].into_iter().chain(grid).map(r).fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScanPoint {
    pub a: f64,
    pub b: f64,
    pub residual: f64,
}

fn residual_at(p: [f64; 2]) -> f64 {
    if !(0.0..=1.0).contains(&p[0]) || !(0.0..=1.0).contains(&p[1]) {
        return f64::INFINITY;
    }
    DiscreteFamily { a: p[0], b: p[1] }.residual()
}

/// Nelder-Mead on a two-dimensional function.
fn nelder_mead<F: Fn([f64; 2]) -> f64>(f: F, start: [f64; 2], step: f64, iterations: usize) -> [f64; 2] {
    let mut simplex = [start, [start[0] + step, start[1]], [start[0], start[1] + step]];
    let mut values = simplex.map(&f);
    for _ in 0..iterations {
        let mut order = [0, 1, 2];
        order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
        simplex = order.map(|i| simplex[i]);
        values = order.map(|i| values[i]);
        if (values[2] - values[0]).abs() < 1e-16 && dist(simplex[0], simplex[2]) < 1e-15 {
            break;
        }
        let centroid = [(simplex[0][0] + simplex[1][0]) / 2.0, (simplex[0][1] + simplex[1][1]) / 2.0];
        let along = |t: f64| [centroid[0] + t * (simplex[2][0] - centroid[0]), centroid[1] + t * (simplex[2][1] - centroid[1])];
        let reflected = along(-1.0);
        let fr = f(reflected);
        if fr < values[0] {
            let expanded = along(-2.0);
            let fe = f(expanded);
            if fe < fr {
                simplex[2] = expanded;
                values[2] = fe;
            } else {
                simplex[2] = reflected;
                values[2] = fr;
            }
        } else if fr < values[1] {
            simplex[2] = reflected;
            values[2] = fr;
        } else {
            let contracted = if fr < values[2] { along(-0.5) } else { along(0.5) };
            let fc = f(contracted);
            if fc < values[2].min(fr) {
                simplex[2] = contracted;
                values[2] = fc;
            } else {
                for k in 1..3 {
                    simplex[k] = [
                        (simplex[0][0] + simplex[k][0]) / 2.0,
                        (simplex[0][1] + simplex[k][1]) / 2.0,
                    ];
                    values[k] = f(simplex[k]);
                }
            }
        }
    }
    let best = (0..3).min_by(|&i, &j| values[i].total_cmp(&values[j])).unwrap();
    simplex[best]
}

fn dist(p: [f64; 2], q: [f64; 2]) -> f64 {
    (p[0] - q[0]).abs().max((p[1] - q[1]).abs())
}

/// Scans `(a, b)` over the interior grid `i / resolution`, refines every
/// grid-local minimum of the residual by Nelder-Mead, and returns the
/// distinct families whose exact residual is below [`SCAN_THRESHOLD`].
pub fn discrete_sbc_scan(resolution: usize) -> Result<Vec<ScanPoint>, ModelError> {
    if resolution < 100 {
        return Err(ModelError::InvalidParameter(format!("scan resolution must be at least 100, got {resolution}")));
    }
    let n = resolution;
    let grid: Vec<Vec<f64>> = (0..=n)
        .into_par_iter()
        .map(|i| (0..=n).map(|j| residual_at([i as f64 / n as f64, j as f64 / n as f64])).collect())
        .collect();

    let mut candidates = Vec::new();
    for i in 1..n {
        for j in 1..n {
            let v = grid[i][j];
            let is_min = (i - 1..=i + 1)
                .flat_map(|a| (j - 1..=j + 1).map(move |b| (a, b)))
                .filter(|&(a, b)| (a, b) != (i, j) && (1..n).contains(&a) && (1..n).contains(&b))
                .all(|(a, b)| grid[a][b] >= v);
            if (is_min && v < 0.05) || v < SCAN_THRESHOLD {
                candidates.push([i as f64 / n as f64, j as f64 / n as f64]);
            }
        }
    }

    let step = 1.0 / n as f64;
    let refined: Vec<ScanPoint> = candidates
        .par_iter()
        .map(|&start| {
            let p = nelder_mead(residual_at, start, step, 2000);
            ScanPoint { a: p[0], b: p[1], residual: residual_at(p) }
        })
        .collect();

    let mut out: Vec<ScanPoint> = Vec::new();
    for point in refined.into_iter().filter(|p| p.residual < SCAN_THRESHOLD) {
        match out.iter_mut().find(|q| dist([q.a, q.b], [point.a, point.b]) <= 2.0 * step) {
            Some(existing) if existing.residual <= point.residual => {}
            Some(existing) => *existing = point,
            None => out.push(point),
        }
    }
    out.sort_by(|p, q| p.a.total_cmp(&q.a).then(p.b.total_cmp(&q.b)));
    Ok(out)
}
