//! Small dense linear algebra on row-major `f64` buffers.
//!
//! Dimensions here are tiny (the algebras of interest are 2- and
//! 3-dimensional), so everything is plain Gaussian elimination.

/// Determinant by LU factorization with partial pivoting.
pub fn det(n: usize, a: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), n * n);
    let mut lu = a.to_vec();
    let mut sign = 1.0;
    for k in 0..n {
        let mut p = k;
        for i in k + 1..n {
            if lu[i * n + k].abs() > lu[p * n + k].abs() {
                p = i;
            }
        }
        if lu[p * n + k] == 0.0 {
            return 0.0;
        }
        if p != k {
            for j in 0..n {
                lu.swap(k * n + j, p * n + j);
            }
            sign = -sign;
        }
        let pivot = lu[k * n + k];
        for i in k + 1..n {
            let f = lu[i * n + k] / pivot;
            if f != 0.0 {
                for j in k..n {
                    lu[i * n + j] -= f * lu[k * n + j];
                }
            }
        }
    }
    (0..n).fold(sign, |acc, k| acc * lu[k * n + k])
}

/// Pivot threshold used by [`rank`] and [`rref`]: `eps * (1 + max|entry|)`.
pub fn pivot_threshold(a: &[f64], eps: f64) -> f64 {
    let scale = a.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    eps * (1.0 + scale)
}

/// Reduced row echelon form of a `rows x cols` matrix.
#[derive(Debug, Clone)]
pub struct Rref {
    pub cols: usize,
    /// Row-major reduced matrix; row `k < rank` has a unit entry at `pivots[k]`.
    pub data: Vec<f64>,
    pub pivots: Vec<usize>,
}

impl Rref {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// Columns without a pivot, ascending.
    pub fn free_columns(&self) -> Vec<usize> {
        (0..self.cols).filter(|c| !self.pivots.contains(c)).collect()
    }
}

/// Row reduction with partial pivoting. Columns whose best remaining pivot
/// falls under [`pivot_threshold`] are treated as dependent.
pub fn rref(rows: usize, cols: usize, a: &[f64], eps: f64) -> Rref {
    debug_assert_eq!(a.len(), rows * cols);
    let thresh = pivot_threshold(a, eps);
    let mut m = a.to_vec();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let mut p = r;
        for i in r + 1..rows {
            if m[i * cols + c].abs() > m[p * cols + c].abs() {
                p = i;
            }
        }
        if m[p * cols + c].abs() <= thresh {
            for i in r..rows {
                m[i * cols + c] = 0.0;
            }
            continue;
        }
        if p != r {
            for j in 0..cols {
                m.swap(r * cols + j, p * cols + j);
            }
        }
        let pivot = m[r * cols + c];
        for j in 0..cols {
            m[r * cols + j] /= pivot;
        }
        m[r * cols + c] = 1.0;
        for i in 0..rows {
            if i == r {
                continue;
            }
            let f = m[i * cols + c];
            if f != 0.0 {
                for j in 0..cols {
                    m[i * cols + j] -= f * m[r * cols + j];
                }
                m[i * cols + c] = 0.0;
            }
        }
        pivots.push(c);
        r += 1;
    }
    Rref {
        cols,
        data: m,
        pivots,
    }
}

pub fn rank(rows: usize, cols: usize, a: &[f64], eps: f64) -> usize {
    rref(rows, cols, a, eps).rank()
}

/// `n x n` product `a * b`, ascending summation order.
pub fn mat_mul(n: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for k in 0..n {
                acc += a[i * n + k] * b[k * n + j];
            }
            out[i * n + j] = acc;
        }
    }
    out
}

/// Inverse of a lower-triangular matrix by forward substitution, column by
/// column. Returns `None` if a diagonal entry is exactly zero.
pub fn lower_triangular_inverse(n: usize, l: &[f64]) -> Option<Vec<f64>> {
    if (0..n).any(|i| l[i * n + i] == 0.0) {
        return None;
    }
    let mut inv = vec![0.0; n * n];
    for c in 0..n {
        // Solve L x = e_c; x_i = 0 for i < c.
        for i in c..n {
            let mut rhs = if i == c { 1.0 } else { 0.0 };
            for k in c..i {
                rhs -= l[i * n + k] * inv[k * n + c];
            }
            inv[i * n + c] = rhs / l[i * n + i];
        }
    }
    Some(inv)
}

/// Solves `a x = b` for square `a` by Gaussian elimination with partial
/// pivoting. `None` when a pivot is below `1e-300` in magnitude.
pub fn solve(n: usize, a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    for k in 0..n {
        let mut p = k;
        for i in k + 1..n {
            if m[i * n + k].abs() > m[p * n + k].abs() {
                p = i;
            }
        }
        if m[p * n + k].abs() < 1e-300 {
            return None;
        }
        if p != k {
            for j in 0..n {
                m.swap(k * n + j, p * n + j);
            }
            x.swap(k, p);
        }
        let pivot = m[k * n + k];
        for i in k + 1..n {
            let f = m[i * n + k] / pivot;
            if f != 0.0 {
                for j in k..n {
                    m[i * n + j] -= f * m[k * n + j];
                }
                x[i] -= f * x[k];
            }
        }
    }
    for k in (0..n).rev() {
        let mut acc = x[k];
        for j in k + 1..n {
            acc -= m[k * n + j] * x[j];
        }
        x[k] = acc / m[k * n + k];
    }
    if x.iter().all(|v| v.is_finite()) {
        Some(x)
    } else {
        None
    }
}
