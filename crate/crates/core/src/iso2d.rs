//! Two-dimensional rotation algebras `E+_a`, `E-_a` with structure matrices
//! `[[a, ±r], [∓r, a]]`, `r = sqrt(1 - a^2)`: change of basis, the
//! isomorphism decision and the density of the integer-time rotation chain.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::algebra::StructureMatrix;
use crate::error::{CeaError, Result};

/// Isomorphism decisions compare `b` against `±a` with this tolerance.
pub const ISO_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RotSign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl RotSign {
    fn factor(self) -> f64 {
        match self {
            RotSign::Plus => 1.0,
            RotSign::Minus => -1.0,
        }
    }
}

impl fmt::Display for RotSign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RotSign::Plus => "+",
            RotSign::Minus => "-",
        })
    }
}

impl FromStr for RotSign {
    type Err = CeaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "+" | "plus" => Ok(RotSign::Plus),
            "-" | "minus" => Ok(RotSign::Minus),
            other => Err(CeaError::invalid(format!("sign must be + or -, got {other:?}"))),
        }
    }
}

fn check_unit(name: &str, a: f64) -> Result<()> {
    if a.is_nan() || a.abs() > 1.0 {
        return Err(CeaError::invalid(format!("{name} must lie in [-1, 1], got {a}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RotAlgebra {
    pub a: f64,
    pub sign: RotSign,
}

impl RotAlgebra {
    pub fn new(a: f64, sign: RotSign) -> Result<Self> {
        check_unit("a", a)?;
        Ok(RotAlgebra { a, sign })
    }

    /// `sign * sqrt(1 - a^2)`, the (1,2) entry.
    fn r(&self) -> f64 {
        self.sign.factor() * (1.0 - self.a * self.a).sqrt()
    }

    pub fn matrix(&self) -> StructureMatrix {
        let r = self.r();
        StructureMatrix::new(2, vec![self.a, r, -r, self.a]).expect("finite")
    }
}

/// The transform `phi = [[alpha, beta], [gamma, delta]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BasisChange2 {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl BasisChange2 {
    pub fn new(alpha: f64, beta: f64, gamma: f64, delta: f64) -> Self {
        BasisChange2 {
            alpha,
            beta,
            gamma,
            delta,
        }
    }

    pub fn identity() -> Self {
        Self::new(1.0, 0.0, 0.0, 1.0)
    }

    /// `(0, -1; -1, 0)`, which maps `E+_a` onto `E+_{-a}`.
    pub fn swap_negate() -> Self {
        Self::new(0.0, -1.0, -1.0, 0.0)
    }

    pub fn det(&self) -> f64 {
        self.alpha * self.delta - self.beta * self.gamma
    }
}

/// Structure matrix of the image of `src` under `phi`. Each entry is a
/// cubic form in the entries of `phi` divided by `det(phi)`. For `phi`
/// diagonal or anti-diagonal, the coordinate map `x -> (phi^{-1})^T x` is
/// an algebra isomorphism onto the result.
pub fn change_basis_2d(src: &RotAlgebra, phi: &BasisChange2) -> Result<StructureMatrix> {
    check_unit("a", src.a)?;
    let BasisChange2 {
        alpha: al,
        beta: be,
        gamma: ga,
        delta: de,
    } = *phi;
    let det = phi.det();
    let scale = [al, be, ga, de].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if !det.is_finite() || det.abs() <= 1e-14 * scale * scale || det == 0.0 {
        return Err(CeaError::invalid(format!("basis change is singular (det = {det})")));
    }
    let (a, r) = (src.a, src.r());
    let p = a * de - r * ga;
    let q = a * ga + r * de;
    let u = a * al + r * be;
    let v = a * be - r * al;
    let m = vec![
        (p * al * al - q * be * be) / det,
        (u * be * be - v * al * al) / det,
        (p * ga * ga - q * de * de) / det,
        (u * de * de - v * ga * ga) / det,
    ];
    StructureMatrix::new(2, m)
}

/// `E±_a` and `E±_b` (same sign) are isomorphic iff `b = ±a`.
pub fn iso_rotation(a: f64, b: f64, _sign: RotSign) -> Result<bool> {
    check_unit("a", a)?;
    check_unit("b", b)?;
    Ok((b - a).abs() <= ISO_TOL || (b + a).abs() <= ISO_TOL)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityHit {
    pub n: u64,
    /// `+` when `sin n > 0`, so `M(n)` is near `M+_a`.
    pub sign: RotSign,
    pub cos_n: f64,
}

/// Smallest `n` in `1..=n_max` with `|cos n - a| <= tol`.
pub fn density_search(a: f64, tol: f64, n_max: u64) -> Result<Option<DensityHit>> {
    check_unit("a", a)?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(CeaError::invalid(format!("tol must be positive, got {tol}")));
    }
    for n in 1..=n_max {
        let (sn, cs) = (n as f64).sin_cos();
        if (cs - a).abs() <= tol {
            let sign = if sn >= 0.0 { RotSign::Plus } else { RotSign::Minus };
            return Ok(Some(DensityHit { n, sign, cos_n: cs }));
        }
    }
    Ok(None)
}
