//! Grid-seeded Newton search shared by the nilpotent and idempotent oracles.

use std::cmp::Ordering;
use std::collections::HashMap;

use rayon::prelude::*;

use crate::algebra::Element;
use crate::linalg;

/// Points closer than this (max-norm) are merged.
pub const DEDUP_RADIUS: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Step {
    /// Full Newton on a square system, Levenberg fallback when singular.
    Newton,
    /// Regularized Gauss-Newton; handles non-isolated zero sets.
    GaussNewton,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Refine {
    pub step: Step,
    pub max_iter: usize,
    /// Stop early once the residual max-norm reaches this.
    pub stop_tol: f64,
}

/// Every point of the grid `{-radius + k*step}^n` clipped to `[-radius, radius]`.
pub(crate) fn grid_axis(radius: f64, step: f64) -> Vec<f64> {
    let count = (2.0 * radius / step + 1e-9).floor() as usize + 1;
    (0..count).map(|k| -radius + k as f64 * step).collect()
}

pub(crate) fn grid_size(n: usize, axis_len: usize) -> usize {
    axis_len.pow(n as u32)
}

fn grid_point(n: usize, axis: &[f64], mut idx: usize) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for slot in x.iter_mut().rev() {
        *slot = axis[idx % axis.len()];
        idx /= axis.len();
    }
    x
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Refines `x0` on the system `residual(x) = 0`. The callback returns the
/// residual and its row-major Jacobian. Steps that fail to decrease the
/// squared residual are halved.
pub(crate) fn refine<F>(x0: &[f64], f: &F, cfg: Refine) -> Vec<f64>
where
    F: Fn(&[f64]) -> (Vec<f64>, Vec<f64>),
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut r, mut jac) = f(&x);
    for _ in 0..cfg.max_iter {
        if norm_inf(&r) <= cfg.stop_tol {
            break;
        }
        let delta = match cfg.step {
            Step::Newton => {
                let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
                linalg::solve(n, &jac, &rhs).or_else(|| levenberg(n, &jac, &r))
            }
            Step::GaussNewton => levenberg(n, &jac, &r),
        };
        let Some(delta) = delta else { break };
        let current = norm_sq(&r);
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<f64> = x.iter().zip(&delta).map(|(a, d)| a + scale * d).collect();
            if trial.iter().all(|v| v.is_finite()) {
                let (tr, tj) = f(&trial);
                if norm_sq(&tr) < current {
                    x = trial;
                    r = tr;
                    jac = tj;
                    accepted = true;
                    break;
                }
            }
            scale *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    x
}

/// Solves `(J^T J + mu I) d = -J^T r` with a small relative `mu`.
fn levenberg(n: usize, jac: &[f64], r: &[f64]) -> Option<Vec<f64>> {
    let mut jtj = vec![0.0; n * n];
    let mut jtr = vec![0.0; n];
    for i in 0..n {
        for k in 0..n {
            jtr[i] -= jac[k * n + i] * r[k];
            for j in 0..n {
                jtj[i * n + j] += jac[k * n + i] * jac[k * n + j];
            }
        }
    }
    let trace: f64 = (0..n).map(|i| jtj[i * n + i]).sum();
    let mu = 1e-12 * (1.0 + trace);
    for i in 0..n {
        jtj[i * n + i] += mu;
    }
    linalg::solve(n, &jtj, &jtr)
}

/// Runs [`refine`] from every grid point in parallel and keeps the results
/// whose residual max-norm is within `accept_tol`. Returns deduplicated
/// points in lexicographic order.
pub(crate) fn search<F>(
    n: usize,
    radius: f64,
    step: f64,
    accept_tol: f64,
    f: &F,
    cfg: Refine,
) -> Vec<Element>
where
    F: Fn(&[f64]) -> (Vec<f64>, Vec<f64>) + Sync,
{
    let axis = grid_axis(radius, step);
    let total = grid_size(n, axis.len());
    let hits: Vec<Vec<f64>> = (0..total)
        .into_par_iter()
        .filter_map(|idx| {
            let x0 = grid_point(n, &axis, idx);
            let x = refine(&x0, f, cfg);
            let (r, _) = f(&x);
            (norm_inf(&r) <= accept_tol).then_some(x)
        })
        .collect();
    dedup(hits, DEDUP_RADIUS)
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

/// Greedy clustering in lexicographic order; the first point of each
/// cluster represents it.
pub(crate) fn dedup(mut points: Vec<Vec<f64>>, radius: f64) -> Vec<Element> {
    points.sort_by(|a, b| lex_cmp(a, b));
    let mut reps: Vec<Vec<f64>> = Vec::new();
    let mut buckets: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    let key = |p: &[f64]| -> Vec<i64> { p.iter().map(|v| (v / radius).floor() as i64).collect() };
    for p in points {
        let k = key(&p);
        let n = k.len();
        let mut duplicate = false;
        'outer: for code in 0..3usize.pow(n as u32) {
            let mut nk = k.clone();
            let mut c = code;
            for slot in nk.iter_mut() {
                *slot += (c % 3) as i64 - 1;
                c /= 3;
            }
            if let Some(ids) = buckets.get(&nk) {
                for &id in ids {
                    let d = reps[id]
                        .iter()
                        .zip(&p)
                        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
                    if d <= radius {
                        duplicate = true;
                        break 'outer;
                    }
                }
            }
        }
        if !duplicate {
            buckets.entry(k).or_default().push(reps.len());
            reps.push(p);
        }
    }
    reps.sort_by(|a, b| lex_cmp(a, b));
    reps.into_iter().map(Element).collect()
}
