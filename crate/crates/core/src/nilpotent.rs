//! Absolute nilpotents: elements with `x^2 = 0`.
//!
//! Writing `y_i = x_i^2 >= 0`, the condition `x^2 = 0` is the homogeneous
//! linear system `C y = 0` with `C[j][i] = a_ij` (equation `j` is the
//! `e_j`-component of the evolution operator), i.e. `C` is the transpose of
//! the structure matrix. Non-zero nilpotents exist iff that system has a
//! non-zero solution with non-negative coordinates.

use serde::Serialize;

use crate::algebra::{Element, EvolutionAlgebra};
use crate::linalg;
use crate::oracle::{self, Refine, Step};

/// One coefficient of the reduced rank-`n-1` system `x_i^2 = -d * x_k^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReducedCoefficient {
    pub index: usize,
    pub d: f64,
}

/// Description of the nilpotent set. Indices are 0-based.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NilpotentSet {
    /// Only the zero vector.
    UniqueZero,
    /// The listed coordinates are unconstrained (their basis vectors are
    /// nilpotent); in particular there are infinitely many nilpotents.
    InfiniteFree { free_indices: Vec<usize> },
    /// Rank `n-1` with the cone `x_i^2 = -d_i x_k^2`, every `d_i < 0`.
    InfiniteCone {
        free_index: usize,
        coefficients: Vec<ReducedCoefficient>,
    },
    /// Not decided by the rank/sign criteria; use [`nilpotent_oracle`].
    Undetermined { rank: usize },
}

impl NilpotentSet {
    pub fn is_unique(&self) -> bool {
        matches!(self, NilpotentSet::UniqueZero)
    }

    pub fn is_infinite(&self) -> bool {
        matches!(
            self,
            NilpotentSet::InfiniteFree { .. } | NilpotentSet::InfiniteCone { .. }
        )
    }
}

pub const DEFAULT_EPS: f64 = 1e-9;

pub fn nilpotent_analysis(e: &EvolutionAlgebra, eps: f64) -> NilpotentSet {
    let n = e.dim();
    let c = e.matrix().transpose();
    let cm = c.entries();
    if c.det().abs() > eps {
        return NilpotentSet::UniqueZero;
    }
    let reduced = linalg::rref(n, n, cm, eps);
    let r = reduced.rank();
    if r == n {
        return NilpotentSet::UniqueZero;
    }
    let thresh = linalg::pivot_threshold(cm, eps);

    let zero_columns: Vec<usize> = (0..n)
        .filter(|&i| (0..n).all(|j| cm[j * n + i].abs() <= thresh))
        .collect();
    if !zero_columns.is_empty() {
        return NilpotentSet::InfiniteFree {
            free_indices: zero_columns,
        };
    }

    if r + 1 == n {
        let free_index = reduced.free_columns()[0];
        // Row k of the reduced form reads y_{p_k} + R[k][free] * y_free = 0.
        let coefficients: Vec<ReducedCoefficient> = reduced
            .pivots
            .iter()
            .enumerate()
            .map(|(row, &p)| ReducedCoefficient {
                index: p,
                d: reduced.get(row, free_index),
            })
            .collect();
        if coefficients.iter().any(|c| c.d > eps) {
            return NilpotentSet::UniqueZero;
        }
        if coefficients.iter().all(|c| c.d < -eps) {
            return NilpotentSet::InfiniteCone {
                free_index,
                coefficients,
            };
        }
        return NilpotentSet::Undetermined { rank: r };
    }

    if sign_propagation_forces_zero(n, cm, thresh) {
        return NilpotentSet::UniqueZero;
    }
    NilpotentSet::Undetermined { rank: r }
}

/// An equation whose active coefficients all share one sign forces every
/// variable with a non-zero coefficient to vanish (the `y_i` are
/// non-negative). Repeats until nothing changes; true when all variables
/// end up forced to zero.
fn sign_propagation_forces_zero(n: usize, c: &[f64], thresh: f64) -> bool {
    let mut forced = vec![false; n];
    loop {
        let mut changed = false;
        for j in 0..n {
            let row = &c[j * n..(j + 1) * n];
            let active = || (0..n).filter(|&i| !forced[i]);
            let pos = active().any(|i| row[i] > thresh);
            let neg = active().any(|i| row[i] < -thresh);
            if pos != neg {
                let hits: Vec<usize> = active().filter(|&i| row[i].abs() > thresh).collect();
                for i in hits {
                    forced[i] = true;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    forced.iter().all(|&f| f)
}

/// Brute-force search for nilpotents: Gauss-Newton on `x^2 = 0` from every
/// point of the grid `[-radius, radius]^n` with spacing `step`. Returns the
/// deduplicated points with `|x^2|_inf <= tol`, lexicographically sorted.
/// The grid has `(2 radius / step + 1)^n` points; keep `n <= 3`.
pub fn nilpotent_oracle(e: &EvolutionAlgebra, radius: f64, step: f64, tol: f64) -> Vec<Element> {
    let n = e.dim();
    let m = e.matrix();
    let f = |x: &[f64]| {
        let r = e.product_unchecked(x, x).0;
        let mut jac = vec![0.0; n * n];
        for j in 0..n {
            for i in 0..n {
                jac[j * n + i] = 2.0 * m.get(i, j) * x[i];
            }
        }
        (r, jac)
    };
    let cfg = Refine {
        step: Step::GaussNewton,
        max_iter: 50,
        stop_tol: tol * 1e-3,
    };
    oracle::search(n, radius, step, tol, &f, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::StructureMatrix;

    fn alg<R: AsRef<[f64]>>(rows: &[R]) -> EvolutionAlgebra {
        StructureMatrix::from_rows(rows).unwrap().into()
    }

    fn rotation(t: f64) -> EvolutionAlgebra {
        alg(&[[t.cos(), t.sin()], [-t.sin(), t.cos()]])
    }

    #[test]
    fn nonsingular_is_unique() {
        assert_eq!(nilpotent_analysis(&rotation(1.0), DEFAULT_EPS), NilpotentSet::UniqueZero);
    }

    #[test]
    fn cone_from_columns() {
        // Columns give x1^2 - x2^2 = 0 and 2x1^2 - 2x2^2 = 0.
        let e = alg(&[[1.0, 2.0], [-1.0, -2.0]]);
        match nilpotent_analysis(&e, DEFAULT_EPS) {
            NilpotentSet::InfiniteCone {
                free_index,
                coefficients,
            } => {
                assert_eq!(free_index, 1);
                assert_eq!(coefficients, vec![ReducedCoefficient { index: 0, d: -1.0 }]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn positive_reduced_coefficient_is_unique() {
        // x1^2 + x2^2 = 0.
        let e = alg(&[[1.0, 2.0], [1.0, 2.0]]);
        assert_eq!(nilpotent_analysis(&e, DEFAULT_EPS), NilpotentSet::UniqueZero);
    }

    #[test]
    fn identical_rows_orientation() {
        // Rows all (c, 0, 0): x^2 = c (x1^2 + x2^2 + x3^2) e_1, so only zero.
        let c = 0.7;
        let e = alg(&[[c, 0.0, 0.0], [c, 0.0, 0.0], [c, 0.0, 0.0]]);
        assert_eq!(nilpotent_analysis(&e, DEFAULT_EPS), NilpotentSet::UniqueZero);
        // Identical columns (c, 0, 0)^T: x^2 = c x1^2 (e1 + e2 + e3); x2, x3 free.
        let t = EvolutionAlgebra::new(e.matrix().transpose());
        assert_eq!(
            nilpotent_analysis(&t, DEFAULT_EPS),
            NilpotentSet::InfiniteFree {
                free_indices: vec![1, 2]
            }
        );
    }

    #[test]
    fn zero_matrix_is_free_everywhere() {
        let e = EvolutionAlgebra::new(StructureMatrix::zeros(3));
        assert_eq!(
            nilpotent_analysis(&e, DEFAULT_EPS),
            NilpotentSet::InfiniteFree {
                free_indices: vec![0, 1, 2]
            }
        );
    }

    #[test]
    fn zero_reduced_coefficient_is_undetermined() {
        // Equations: y1 = 0 (row from column 1) with y2 free but also
        // appearing nowhere else; the reduction gives d = 0 for a
        // non-zero column. C = [[1, 0, 0], [0, 1, 1], [0, 1, 1]] style
        // with mixed signs.
        let c = StructureMatrix::from_rows(&[[1.0, 0.0, 0.0], [0.0, 1.0, -1.0], [0.0, 2.0, -2.0]])
            .unwrap();
        let e = EvolutionAlgebra::new(c.transpose());
        // y1 = 0, y2 = y3: cone with d = 0 for index 0 and d = -1 for index 1.
        assert_eq!(
            nilpotent_analysis(&e, DEFAULT_EPS),
            NilpotentSet::Undetermined { rank: 2 }
        );
    }

    #[test]
    fn low_rank_sign_definite_row() {
        // n = 3, rank 1, the single equation 1 y1 + 2 y2 + 3 y3 = 0.
        let c = StructureMatrix::from_rows(&[[1.0, 2.0, 3.0], [2.0, 4.0, 6.0], [0.0, 0.0, 0.0]])
            .unwrap();
        let e = EvolutionAlgebra::new(c.transpose());
        assert_eq!(nilpotent_analysis(&e, DEFAULT_EPS), NilpotentSet::UniqueZero);
        // Mixed signs at rank 1 are left undetermined.
        let c = StructureMatrix::from_rows(&[[1.0, -2.0, 3.0], [2.0, -4.0, 6.0], [0.0, 0.0, 0.0]])
            .unwrap();
        let e = EvolutionAlgebra::new(c.transpose());
        assert_eq!(
            nilpotent_analysis(&e, DEFAULT_EPS),
            NilpotentSet::Undetermined { rank: 1 }
        );
    }

    #[test]
    fn determinant_transpose_invariance() {
        let m = StructureMatrix::from_rows(&[[1.0, 2.0, 0.5], [-3.0, 0.2, 1.0], [0.0, 4.0, -1.0]])
            .unwrap();
        assert!((m.det() - m.transpose().det()).abs() < 1e-12);
    }

    #[test]
    fn oracle_zero_matrix_returns_grid() {
        let e = EvolutionAlgebra::new(StructureMatrix::zeros(2));
        let pts = nilpotent_oracle(&e, 1.0, 0.5, 1e-8);
        assert_eq!(pts.len(), 25);
        assert_eq!(pts[0], Element(vec![-1.0, -1.0]));
    }

    #[test]
    fn oracle_rotation_only_zero() {
        let pts = nilpotent_oracle(&rotation(1.0), 2.0, 0.05, 1e-8);
        assert_eq!(pts.len(), 1);
        assert!(pts[0].norm_inf() <= 1e-4);
    }

    #[test]
    fn oracle_cone_points() {
        let e = alg(&[[1.0, 2.0], [-1.0, -2.0]]);
        let pts = nilpotent_oracle(&e, 1.0, 0.05, 1e-8);
        assert!(pts.len() > 10);
        for p in &pts {
            assert!(e.evolve(p).unwrap().norm_inf() <= 1e-8);
            assert!((p[0] * p[0] - p[1] * p[1]).abs() <= 1e-8, "{p:?}");
        }
    }
}
