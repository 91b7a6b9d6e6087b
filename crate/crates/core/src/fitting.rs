//! Power-law and monomolecular curve fits.
//!
//! Power law `y = A * x^B` is fitted by ordinary least squares on
//! `(ln x, ln y)`; `B` is the literal exponent (negative for decaying
//! rank-frequency curves). Monomolecular `y = C - D * exp(-E * x)` is fitted
//! by damped Gauss-Newton. With an onset `k0 > 0` the model is taken to be 0
//! for `x <= k0` and only points with `x > k0` enter the fit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 200;
const PARAM_TOL: f64 = 1e-9;
const DAMPING_MIN: f64 = 1e-12;
const DAMPING_MAX: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum Model {
    PowerLaw {
        #[serde(rename = "A")]
        a: f64,
        #[serde(rename = "B")]
        b: f64,
    },
    Monomolecular {
        #[serde(rename = "C")]
        c: f64,
        #[serde(rename = "D")]
        d: f64,
        #[serde(rename = "E")]
        rate: f64,
        k0: u32,
    },
}

impl Model {
    pub fn predict(&self, x: f64) -> f64 {
        match *self {
            Model::PowerLaw { a, b } => a * x.powf(b),
            Model::Monomolecular { c, d, rate, k0 } => {
                if k0 > 0 && x <= k0 as f64 {
                    0.0
                } else {
                    c - d * (-rate * x).exp()
                }
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Model::PowerLaw { .. } => "power_law",
            Model::Monomolecular { .. } => "monomolecular",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    #[serde(flatten)]
    pub model: Model,
    /// Coefficient of determination; for power laws it is computed in log space.
    pub r_squared: f64,
    /// Root-mean-square residual, in the same space as `r_squared`.
    pub rmse: f64,
    pub n_points: usize,
    pub excluded_points: usize,
    pub converged: bool,
    /// False when the data cannot pin down every parameter (a flat series
    /// leaves the monomolecular rate free).
    pub identifiable: bool,
}

fn r_squared(ss_res: f64, observed: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = observed.clone().count() as f64;
    let mean = observed.clone().sum::<f64>() / n;
    let ss_tot: f64 = observed.map(|y| (y - mean).powi(2)).sum();
    if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res <= f64::EPSILON * mean.abs().max(1.0) {
        1.0
    } else {
        f64::NEG_INFINITY
    }
}

/// Least-squares line `y = intercept + slope * x`.
fn linear_fit(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (my - slope * mx, slope)
}

/// Fit `y = A * x^B` over points with `x > 0` and `y > 0`.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<FitResult> {
    let logs: Vec<(f64, f64)> =
        points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).map(|&(x, y)| (x.ln(), y.ln())).collect();
    if logs.len() < 3 {
        return Err(Error::InsufficientPoints { needed: 3, got: logs.len() });
    }
    let (intercept, slope) = linear_fit(&logs);
    let ss_res: f64 = logs.iter().map(|&(lx, ly)| (ly - intercept - slope * lx).powi(2)).sum();
    Ok(FitResult {
        model: Model::PowerLaw { a: intercept.exp(), b: slope },
        r_squared: r_squared(ss_res, logs.iter().map(|p| p.1)),
        rmse: (ss_res / logs.len() as f64).sqrt(),
        n_points: logs.len(),
        excluded_points: points.len() - logs.len(),
        converged: true,
        identifiable: true,
    })
}

/// Solve the 3x3 system `a * x = b` by Gaussian elimination with partial
/// pivoting. Returns `None` when singular.
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < f64::MIN_POSITIVE {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let factor = a[row][col] / a[col][col];
            let pivot_row = a[col];
            for (entry, p) in a[row][col..].iter_mut().zip(&pivot_row[col..]) {
                *entry -= factor * p;
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let tail: f64 = (row + 1..3).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

fn sse(points: &[(f64, f64)], p: [f64; 3]) -> f64 {
    points.iter().map(|&(x, y)| (y - (p[0] - p[1] * (-p[2] * x).exp())).powi(2)).sum()
}

/// Starting point: `C` at the series maximum, then a line through
/// `(x, ln(C + eps - y))` gives `ln D` as intercept and `-E` as slope.
/// Points within a thousandth of the range below `C` are left out of the
/// line, since their logarithm is dominated by `eps`.
fn initial_guess(points: &[(f64, f64)]) -> [f64; 3] {
    let c0 = points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let floor = points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let eps = if c0 != 0.0 { 1e-6 * c0.abs() } else { 1e-6 };
    let cutoff = 1e-3 * (c0 - floor);
    let mut line: Vec<(f64, f64)> =
        points.iter().filter(|&&(_, y)| c0 - y > cutoff).map(|&(x, y)| (x, (c0 + eps - y).ln())).collect();
    if line.len() < 2 {
        line = points.iter().map(|&(x, y)| (x, (c0 + eps - y).ln())).collect();
    }
    let (intercept, slope) = linear_fit(&line);
    let span = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max)
        - points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let rate = if slope < 0.0 && slope.is_finite() { -slope } else { 1.0 / span.max(1.0) };
    let d0 = if intercept.is_finite() { intercept.exp() } else { eps };
    [c0, d0, rate]
}

/// Damped Gauss-Newton from `start`. Returns the parameters and whether the
/// relative step fell below tolerance within the iteration budget.
fn refine(points: &[(f64, f64)], start: [f64; 3]) -> ([f64; 3], bool) {
    let mut p = start;
    let mut cost = sse(points, p);
    let mut damping = 1e-3;
    for _ in 0..MAX_ITERATIONS {
        if cost == 0.0 {
            return (p, true);
        }
        let mut jtj = [[0.0; 3]; 3];
        let mut jtr = [0.0; 3];
        for &(x, y) in points {
            let e = (-p[2] * x).exp();
            let jac = [1.0, -e, p[1] * x * e];
            let r = y - (p[0] - p[1] * e);
            for i in 0..3 {
                jtr[i] += jac[i] * r;
                for k in 0..3 {
                    jtj[i][k] += jac[i] * jac[k];
                }
            }
        }
        let mut lhs = jtj;
        for (i, row) in lhs.iter_mut().enumerate() {
            row[i] += damping * jtj[i][i].max(f64::MIN_POSITIVE);
        }
        let Some(step) = solve3(lhs, jtr) else {
            damping = (damping * 10.0).min(DAMPING_MAX);
            continue;
        };
        let small = (0..3).all(|i| step[i].abs() <= PARAM_TOL * p[i].abs().max(PARAM_TOL));
        let trial = [p[0] + step[0], p[1] + step[1], p[2] + step[2]];
        let trial_cost = if trial[2] > 0.0 { sse(points, trial) } else { f64::INFINITY };
        if trial_cost < cost {
            p = trial;
            cost = trial_cost;
            damping = (damping / 10.0).max(DAMPING_MIN);
        } else {
            damping = (damping * 10.0).min(DAMPING_MAX);
        }
        if small {
            return (p, true);
        }
    }
    (p, false)
}

/// Fit `y = C - D * exp(-E * x)` to the points with `x > k0`.
pub fn fit_monomolecular(points: &[(f64, f64)], k0: u32) -> Result<FitResult> {
    let onset = k0 as f64;
    let fit_set: Vec<(f64, f64)> = points.iter().copied().filter(|&(x, _)| x > onset).collect();
    if fit_set.len() < 4 {
        return Err(Error::InsufficientPoints { needed: 4, got: fit_set.len() });
    }

    let (p, converged) = refine(&fit_set, initial_guess(&fit_set));
    let model = Model::Monomolecular { c: p[0], d: p[1], rate: p[2], k0 };

    let scored: &[(f64, f64)] = if k0 > 0 { points } else { &fit_set };
    let ss_res: f64 = scored.iter().map(|&(x, y)| (y - model.predict(x)).powi(2)).sum();
    let flat = p[1].abs() <= 1e-9 * p[0].abs().max(1.0);
    Ok(FitResult {
        model,
        r_squared: r_squared(ss_res, scored.iter().map(|p| p.1)),
        rmse: (ss_res / scored.len() as f64).sqrt(),
        n_points: fit_set.len(),
        excluded_points: points.len() - fit_set.len(),
        converged,
        identifiable: !flat,
    })
}

/// Sweep `k0` over `0..=max_k0` and keep the fit with the smallest rmse
/// (scored over all points). Ties go to the smaller onset.
pub fn fit_monomolecular_auto(points: &[(f64, f64)], max_k0: u32) -> Result<FitResult> {
    let mut best: Option<FitResult> = None;
    let mut last_err = None;
    for k0 in 0..=max_k0 {
        match fit_monomolecular(points, k0) {
            Ok(fit) if fit.rmse.is_finite() => {
                if best.is_none_or(|b| fit.rmse < b.rmse) {
                    best = Some(fit);
                }
            }
            Ok(_) => {}
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap_or(Error::InsufficientPoints { needed: 4, got: 0 }))
}
