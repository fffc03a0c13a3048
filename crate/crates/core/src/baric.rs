//! Baric evolution algebras and their weight functions.
//!
//! An evolution algebra is baric exactly when some column `i0` of its
//! structure matrix has a non-zero diagonal entry and zeros elsewhere; the
//! weight function is then `x -> a_{i0 i0} x_{i0}`, one per such column.

use serde::Serialize;

use crate::algebra::{Element, EvolutionAlgebra};

/// Default absolute zero tolerance for matrix entries.
pub const DEFAULT_EPS: f64 = 1e-9;

/// A character `sigma(x) = coefficient * x_index` (index is 0-based).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightFunction {
    pub index: usize,
    pub coefficient: f64,
}

impl WeightFunction {
    pub fn eval(&self, x: &Element) -> f64 {
        self.coefficient * x[self.index]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TrivialClass {
    Zero,
    NonZeroTrivial,
    NonTrivial,
}

/// All weight functions of `e`, ascending by column index. Empty iff `e` is
/// not baric at tolerance `eps`.
pub fn weight_functions(e: &EvolutionAlgebra, eps: f64) -> Vec<WeightFunction> {
    let m = e.matrix();
    let n = m.dim();
    (0..n)
        .filter(|&c| m.get(c, c).abs() > eps && (0..n).all(|i| i == c || m.get(i, c).abs() <= eps))
        .map(|c| WeightFunction {
            index: c,
            coefficient: m.get(c, c),
        })
        .collect()
}

pub fn is_baric(e: &EvolutionAlgebra, eps: f64) -> bool {
    !weight_functions(e, eps).is_empty()
}

pub fn classify_trivial(e: &EvolutionAlgebra, eps: f64) -> TrivialClass {
    let m = e.matrix();
    let n = m.dim();
    if m.entries().iter().all(|v| v.abs() <= eps) {
        return TrivialClass::Zero;
    }
    let off_diagonal_zero = (0..n).all(|i| (0..n).all(|j| i == j || m.get(i, j).abs() <= eps));
    if off_diagonal_zero {
        TrivialClass::NonZeroTrivial
    } else {
        TrivialClass::NonTrivial
    }
}
