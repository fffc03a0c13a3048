//! Finite-dimensional evolution algebras over the reals.
//!
//! An evolution algebra has a basis `e_1, ..., e_n` with `e_i e_j = 0` for
//! `i != j` and `e_i e_i = sum_j a_ij e_j`. The structure matrix stores
//! `a_ij` at row `i`, column `j`: row `i` holds the coordinates of `e_i^2`.
//! Every other module derives its equations from this orientation.

use std::fmt;
use std::ops::Index;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{CeaError, Result};
use crate::linalg;

/// Square matrix of structural constants, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl StructureMatrix {
    /// Builds an `n x n` matrix from row-major entries.
    pub fn new(n: usize, entries: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(CeaError::invalid("dimension must be at least 1"));
        }
        if entries.len() != n * n {
            return Err(CeaError::DimensionMismatch {
                expected: n * n,
                found: entries.len(),
            });
        }
        if let Some(pos) = entries.iter().position(|v| !v.is_finite()) {
            return Err(CeaError::invalid(format!(
                "entry ({}, {}) is not finite",
                pos / n,
                pos % n
            )));
        }
        Ok(StructureMatrix { n, entries })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for row in rows {
            let row = row.as_ref();
            if row.len() != n {
                return Err(CeaError::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            entries.extend_from_slice(row);
        }
        Self::new(n, entries)
    }

    pub fn zeros(n: usize) -> Self {
        assert!(n > 0, "dimension must be at least 1");
        StructureMatrix {
            n,
            entries: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.entries[i * n + i] = 1.0;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, j)).collect()
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                entries[j * n + i] = self.entries[i * n + j];
            }
        }
        StructureMatrix { n, entries }
    }

    pub fn scale(&self, c: f64) -> Self {
        StructureMatrix {
            n: self.n,
            entries: self.entries.iter().map(|v| v * c).collect(),
        }
    }

    /// Matrix product `self * rhs`.
    pub fn matmul(&self, rhs: &StructureMatrix) -> Result<Self> {
        self.check_same_dim(rhs)?;
        Ok(StructureMatrix {
            n: self.n,
            entries: linalg::mat_mul(self.n, &self.entries, &rhs.entries),
        })
    }

    pub fn det(&self) -> f64 {
        linalg::det(self.n, &self.entries)
    }

    /// Rank with pivot threshold `eps * (1 + max|entry|)`.
    pub fn rank(&self, eps: f64) -> usize {
        linalg::rank(self.n, self.n, &self.entries, eps)
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Max-norm of the entrywise difference.
    pub fn distance(&self, other: &StructureMatrix) -> Result<f64> {
        self.check_same_dim(other)?;
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    fn check_same_dim(&self, other: &StructureMatrix) -> Result<()> {
        if self.n != other.n {
            return Err(CeaError::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        Ok(())
    }

    /// Parses the plain-text format: first line `n`, then `n` lines of `n`
    /// whitespace-separated reals. Blank lines are ignored.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| CeaError::Parse("empty matrix file".into()))?;
        let n: usize = header
            .parse()
            .map_err(|_| CeaError::Parse(format!("bad dimension line {header:?}")))?;
        if n == 0 {
            return Err(CeaError::Parse("dimension must be at least 1".into()));
        }
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            let line = lines
                .next()
                .ok_or_else(|| CeaError::Parse(format!("missing row {}", i + 1)))?;
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>()
                        .map_err(|_| CeaError::Parse(format!("row {}: bad number {tok:?}", i + 1)))
                })
                .collect::<Result<_>>()?;
            if row.len() != n {
                return Err(CeaError::Parse(format!(
                    "row {} has {} entries, expected {n}",
                    i + 1,
                    row.len()
                )));
            }
            entries.extend(row);
        }
        if lines.next().is_some() {
            return Err(CeaError::Parse(format!("trailing data after {n} rows")));
        }
        Self::new(n, entries).map_err(|e| CeaError::Parse(e.to_string()))
    }

    /// Writes the plain-text format using shortest round-trip decimals.
    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.n);
        for i in 0..self.n {
            let row: Vec<String> = self.row(i).iter().map(|v| format!("{v:?}")).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for StructureMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n {
            let row: Vec<String> = self.row(i).iter().map(|v| format!("{v:>12.6}")).collect();
            writeln!(f, "[{}]", row.join(" "))?;
        }
        Ok(())
    }
}

// Serialized as a list of rows.
impl Serialize for StructureMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for StructureMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        StructureMatrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// Coordinates `x = sum_i x_i e_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Element(pub Vec<f64>);

impl Element {
    pub fn zeros(n: usize) -> Self {
        Element(vec![0.0; n])
    }

    /// The basis vector `e_i` (0-based).
    pub fn basis(n: usize, i: usize) -> Self {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        Element(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn norm_inf(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn distance(&self, other: &Element) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

impl From<Vec<f64>> for Element {
    fn from(v: Vec<f64>) -> Self {
        Element(v)
    }
}

impl Index<usize> for Element {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// An evolution algebra, fully determined by its structure matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionAlgebra {
    matrix: StructureMatrix,
}

impl EvolutionAlgebra {
    pub fn new(matrix: StructureMatrix) -> Self {
        EvolutionAlgebra { matrix }
    }

    pub fn matrix(&self) -> &StructureMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.n
    }

    fn check(&self, x: &Element) -> Result<()> {
        if x.dim() != self.dim() {
            return Err(CeaError::DimensionMismatch {
                expected: self.dim(),
                found: x.dim(),
            });
        }
        Ok(())
    }

    /// `(xy)_j = sum_i a_ij x_i y_i`.
    ///
    /// The product `x_i * y_i` is formed first, so swapping the arguments
    /// yields the identical floating-point result.
    pub fn multiply(&self, x: &Element, y: &Element) -> Result<Element> {
        self.check(x)?;
        self.check(y)?;
        Ok(self.product_unchecked(&x.0, &y.0))
    }

    /// The evolution operator `V(x) = x^2`, `V(x)_j = sum_i a_ij x_i^2`.
    pub fn evolve(&self, x: &Element) -> Result<Element> {
        self.check(x)?;
        Ok(self.product_unchecked(&x.0, &x.0))
    }

    pub(crate) fn product_unchecked(&self, x: &[f64], y: &[f64]) -> Element {
        let n = self.dim();
        let mut z = vec![0.0; n];
        for i in 0..n {
            let xy = x[i] * y[i];
            let row = self.matrix.row(i);
            for j in 0..n {
                z[j] += row[j] * xy;
            }
        }
        Element(z)
    }
}

impl From<StructureMatrix> for EvolutionAlgebra {
    fn from(m: StructureMatrix) -> Self {
        EvolutionAlgebra::new(m)
    }
}

/// Max-norm distance between two structure matrices.
pub fn matrix_distance(m1: &StructureMatrix, m2: &StructureMatrix) -> Result<f64> {
    m1.distance(m2)
}
