//! Idempotents (`x^2 = x`), the fixed points of the evolution operator.
//!
//! For the two-dimensional time-homogeneous family with
//! `a = (lambda^t + mu^t)/2` on the diagonal and `b = (lambda^t - mu^t)/2`
//! off it, the full idempotent set is known in closed form; for
//! `lambda > mu` it shrinks from four points to two at the critical time
//! `ln 2 / (ln lambda - ln mu)`. A Newton search covers arbitrary
//! two-dimensional algebras.

use serde::Serialize;

use crate::algebra::{Element, EvolutionAlgebra};
use crate::error::{CeaError, Result};
use crate::oracle::{self, Refine, Step};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Exactness {
    ClosedForm,
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdempotentPoint {
    pub coords: Element,
    pub exactness: Exactness,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdempotentSet {
    pub points: Vec<IdempotentPoint>,
}

impl IdempotentSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn elements(&self) -> impl Iterator<Item = &Element> {
        self.points.iter().map(|p| &p.coords)
    }

    /// Every point of `self` is within `radius` of a point of `other` and
    /// vice versa.
    pub fn matches(&self, other: &IdempotentSet, radius: f64) -> bool {
        let covered = |a: &IdempotentSet, b: &IdempotentSet| {
            a.elements()
                .all(|p| b.elements().any(|q| p.distance(q) <= radius))
        };
        covered(self, other) && covered(other, self)
    }
}

fn check_rates(lambda: f64, mu: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(CeaError::invalid(format!("lambda must be positive, got {lambda}")));
    }
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(CeaError::invalid(format!("mu must be positive, got {mu}")));
    }
    Ok(())
}

/// `gamma(t) = (lambda^t - mu^t) / (lambda^t + mu^t)`.
pub fn gamma(lambda: f64, mu: f64, t: f64) -> f64 {
    let (l, m) = (lambda.powf(t), mu.powf(t));
    (l - m) / (l + m)
}

/// `ln 2 / (ln lambda - ln mu)` when `lambda > mu`, else `None`.
pub fn idempotent_critical_time(lambda: f64, mu: f64) -> Result<Option<f64>> {
    check_rates(lambda, mu)?;
    if lambda > mu {
        Ok(Some(std::f64::consts::LN_2 / (lambda.ln() - mu.ln())))
    } else {
        Ok(None)
    }
}

/// Closed-form idempotent set of the two-dimensional homogeneous family at
/// time `t`.
///
/// At `t = 0` the algebra is the identity and all four points
/// `{0,1}^2` are idempotent, whatever `lambda` and `mu` are.
pub fn idempotents_example2(lambda: f64, mu: f64, t: f64) -> Result<IdempotentSet> {
    check_rates(lambda, mu)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(CeaError::invalid(format!("t must be non-negative, got {t}")));
    }
    let l = lambda.powf(t);
    let m = mu.powf(t);
    let zero = vec![0.0, 0.0];
    let z = 1.0 / l;
    let mut pts: Vec<Vec<f64>> = if lambda == mu || t == 0.0 {
        vec![zero, vec![0.0, z], vec![z, 0.0], vec![z, z]]
    } else {
        let mut base = vec![zero, vec![z, z]];
        let past_critical = match idempotent_critical_time(lambda, mu)? {
            Some(tc) => t >= tc,
            None => false,
        };
        let radicand = l * (2.0 * m - l);
        if !past_critical && radicand > 0.0 {
            let root = radicand.sqrt();
            for sign in [-1.0, 1.0] {
                let denom = m * (l + sign * root);
                base.push(vec![(m + sign * root) / denom, (l - m) / denom]);
            }
        }
        base
    };
    Ok(IdempotentSet {
        points: pts
            .drain(..)
            .map(|c| IdempotentPoint {
                coords: Element(c),
                exactness: Exactness::ClosedForm,
            })
            .collect(),
    })
}

/// Newton search for idempotents of a two-dimensional algebra from every
/// point of the grid `[-radius, radius]^2` (spacing `step`). Newton steps
/// are not confined to the grid box.
pub fn idempotent_oracle(
    e: &EvolutionAlgebra,
    radius: f64,
    step: f64,
    tol: f64,
) -> Result<IdempotentSet> {
    if e.dim() != 2 {
        return Err(CeaError::invalid(format!(
            "idempotent oracle supports dimension 2 only, got {}",
            e.dim()
        )));
    }
    if !(radius > 0.0 && step > 0.0 && tol > 0.0) {
        return Err(CeaError::invalid("radius, step and tol must be positive"));
    }
    let n = 2;
    let m = e.matrix();
    let f = |x: &[f64]| {
        let mut r = e.product_unchecked(x, x).0;
        for j in 0..n {
            r[j] -= x[j];
        }
        let mut jac = vec![0.0; n * n];
        for j in 0..n {
            for i in 0..n {
                jac[j * n + i] = 2.0 * m.get(i, j) * x[i];
            }
            jac[j * n + j] -= 1.0;
        }
        (r, jac)
    };
    let cfg = Refine {
        step: Step::Newton,
        max_iter: 60,
        stop_tol: tol * 1e-3,
    };
    let points = oracle::search(n, radius, step, tol, &f, cfg)
        .into_iter()
        .map(|coords| IdempotentPoint {
            coords,
            exactness: Exactness::Numeric,
        })
        .collect();
    Ok(IdempotentSet { points })
}
