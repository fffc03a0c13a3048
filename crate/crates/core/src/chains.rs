//! Chains of evolution algebras: two-time families `M(s, t)`, `0 <= s <= t`,
//! satisfying the Chapman-Kolmogorov equation `M(s,t) = M(s,tau) M(tau,t)`.

use std::f64::consts::{E, PI};
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{EvolutionAlgebra, StructureMatrix};
use crate::error::{CeaError, Result};
use crate::linalg;
use crate::time_fn::TimeFunction;

pub const DEFAULT_DIVERGENCE_BOUND: f64 = 1e12;

/// Source of the invertible lower-triangular matrices `A(t)` behind
/// `M(s,t) = A(s) A(t)^{-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TriangularSource {
    /// Row `i` lists the entries `a_i1 .. a_ii` as functions of time.
    Entries { entries: Vec<Vec<TimeFunction>> },
    /// `A(t) = B^t` for a constant lower-triangular `B` with positive
    /// diagonal. For `n >= 3` the diagonal must be pairwise distinct.
    Power { power: StructureMatrix },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", content = "params", rename_all = "snake_case")]
pub enum ChainFamilySpec {
    /// Three-state Markov process with rate `A > 0`.
    Example1 {
        #[serde(rename = "A")]
        a: f64,
    },
    /// `a = (lambda^t + mu^t)/2` on the diagonal, `b = (lambda^t - mu^t)/2`
    /// off it.
    Example2 { lambda: f64, mu: f64 },
    /// Two-state chain with `beta = phi(t)/phi(s)` and
    /// `alpha = phi(t) (psi(t) - psi(s))`.
    TwoState { phi: TimeFunction, psi: TimeFunction },
    Triangular(TriangularSource),
    /// `[[cos, sin], [-sin, cos]]` of `t - s`.
    Rotation {},
    /// `n` identical rows `(phi(s)/phi(t), 0, ..., 0)`.
    ConstantRow { phi: TimeFunction, n: usize },
    /// Two-state chain with `beta = 1`, `alpha = psi(t) - psi(s)` for
    /// `t < 1` and `beta = 0`, `alpha = g(t)` for `t >= 1`.
    Theorem5 { psi: TimeFunction, g: TimeFunction },
}

/// `1/2 [[1+a+b, 1-a-b], [1+a-b, 1-a+b]]`.
pub fn two_state_matrix(alpha: f64, beta: f64) -> StructureMatrix {
    let (a, b) = (alpha, beta);
    StructureMatrix::new(
        2,
        vec![
            0.5 * (1.0 + a + b),
            0.5 * (1.0 - a - b),
            0.5 * (1.0 + a - b),
            0.5 * (1.0 - a + b),
        ],
    )
    .expect("finite entries")
}

fn check_finite(m: Vec<f64>, n: usize, s: f64, t: f64) -> Result<StructureMatrix> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(CeaError::domain(format!(
            "non-finite structure constant at (s, t) = ({s}, {t})"
        )));
    }
    StructureMatrix::new(n, m)
}

fn example1(a: f64, d: f64) -> Vec<f64> {
    let alpha = 3f64.sqrt() / 2.0 * a;
    let decay = (-1.5 * a * d).exp();
    let (sn, cs) = (alpha * d).sin_cos();
    let r3 = 1.0 / 3f64.sqrt();
    let diag = 2.0 / 3.0 * decay * cs + 1.0 / 3.0;
    let p = decay * (r3 * sn - cs / 3.0) + 1.0 / 3.0;
    let q = -decay * (r3 * sn + cs / 3.0) + 1.0 / 3.0;
    // a12 = a23 = a31 = p, a21 = a32 = a13 = q.
    vec![diag, p, q, q, diag, p, p, q, diag]
}

fn divided_power(a: f64, b: f64, t: f64) -> f64 {
    // (a^t - b^t) / (a - b), with the derivative at the confluent point.
    let scale = a.abs().max(b.abs());
    if (a - b).abs() <= 1e-12 * scale {
        let m = 0.5 * (a + b);
        t * m.powf(t - 1.0)
    } else {
        (a.powf(t) - b.powf(t)) / (a - b)
    }
}

/// `B^t` for lower-triangular `B` with positive diagonal, by the Parlett
/// recurrence.
fn triangular_power(b: &StructureMatrix, t: f64) -> Vec<f64> {
    let n = b.dim();
    // Work on the upper-triangular transpose U = B^T; (B^t)^T = U^t.
    let u = |i: usize, j: usize| b.get(j, i);
    let mut f = vec![0.0; n * n];
    for i in 0..n {
        f[i * n + i] = u(i, i).powf(t);
    }
    for p in 1..n {
        for i in 0..n - p {
            let j = i + p;
            let (uii, ujj) = (u(i, i), u(j, j));
            let v = if n == 2 {
                u(i, j) * divided_power(uii, ujj, t)
            } else {
                let mut acc = u(i, j) * (f[j * n + j] - f[i * n + i]);
                for k in i + 1..j {
                    acc += u(i, k) * f[k * n + j] - f[i * n + k] * u(k, j);
                }
                acc / (ujj - uii)
            };
            f[i * n + j] = v;
        }
    }
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = f[j * n + i];
        }
    }
    out
}

impl TriangularSource {
    fn dim(&self) -> usize {
        match self {
            TriangularSource::Entries { entries } => entries.len(),
            TriangularSource::Power { power } => power.dim(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            TriangularSource::Entries { entries } => {
                if entries.is_empty() {
                    return Err(CeaError::invalid("triangular: no rows"));
                }
                for (i, row) in entries.iter().enumerate() {
                    if row.len() != i + 1 {
                        return Err(CeaError::invalid(format!(
                            "triangular: row {} must list {} entries, got {}",
                            i + 1,
                            i + 1,
                            row.len()
                        )));
                    }
                    for f in row {
                        f.validate()?;
                    }
                    if row[i].vanishes_on_interval() {
                        return Err(CeaError::invalid(format!(
                            "triangular: diagonal entry a_{}{} vanishes, A(t) is singular",
                            i + 1,
                            i + 1
                        )));
                    }
                }
            }
            TriangularSource::Power { power } => {
                let n = power.dim();
                for i in 0..n {
                    if power.get(i, i) <= 0.0 {
                        return Err(CeaError::invalid(format!(
                            "triangular power: diagonal entry b_{}{} must be positive",
                            i + 1,
                            i + 1
                        )));
                    }
                    for j in i + 1..n {
                        if power.get(i, j) != 0.0 {
                            return Err(CeaError::invalid(
                                "triangular power: matrix must be lower triangular",
                            ));
                        }
                    }
                }
                if n >= 3 {
                    for i in 0..n {
                        for j in i + 1..n {
                            let (a, b) = (power.get(i, i), power.get(j, j));
                            if (a - b).abs() <= 1e-8 * a.max(b) {
                                return Err(CeaError::invalid(
                                    "triangular power: diagonal entries must be distinct for n >= 3",
                                ));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn matrix_at(&self, t: f64) -> Result<Vec<f64>> {
        match self {
            TriangularSource::Entries { entries } => {
                let n = entries.len();
                let mut a = vec![0.0; n * n];
                for (i, row) in entries.iter().enumerate() {
                    for (j, f) in row.iter().enumerate() {
                        a[i * n + j] = f.eval(t)?;
                    }
                }
                Ok(a)
            }
            TriangularSource::Power { power } => Ok(triangular_power(power, t)),
        }
    }

    fn eval(&self, s: f64, t: f64) -> Result<StructureMatrix> {
        let n = self.dim();
        let a_s = self.matrix_at(s)?;
        let a_t = self.matrix_at(t)?;
        let inv = linalg::lower_triangular_inverse(n, &a_t).ok_or_else(|| {
            CeaError::domain(format!("triangular: A(t) is singular at t = {t}"))
        })?;
        check_finite(linalg::mat_mul(n, &a_s, &inv), n, s, t)
    }

    fn functions(&self) -> Vec<&TimeFunction> {
        match self {
            TriangularSource::Entries { entries } => entries.iter().flatten().collect(),
            TriangularSource::Power { .. } => Vec::new(),
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(CeaError::invalid(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

fn nonvanishing_phi(phi: &TimeFunction) -> Result<()> {
    phi.validate()?;
    if phi.vanishes_on_interval() {
        return Err(CeaError::invalid("phi must be nonzero on the time domain"));
    }
    Ok(())
}

impl ChainFamilySpec {
    pub fn dim(&self) -> usize {
        match self {
            ChainFamilySpec::Example1 { .. } => 3,
            ChainFamilySpec::ConstantRow { n, .. } => *n,
            ChainFamilySpec::Triangular(src) => src.dim(),
            _ => 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ChainFamilySpec::Example1 { a } => positive("A", *a),
            ChainFamilySpec::Example2 { lambda, mu } => {
                positive("lambda", *lambda)?;
                positive("mu", *mu)
            }
            ChainFamilySpec::TwoState { phi, psi } => {
                nonvanishing_phi(phi)?;
                psi.validate()
            }
            ChainFamilySpec::Triangular(src) => src.validate(),
            ChainFamilySpec::Rotation {} => Ok(()),
            ChainFamilySpec::ConstantRow { phi, n } => {
                if *n == 0 {
                    return Err(CeaError::invalid("constant_row: n must be at least 1"));
                }
                nonvanishing_phi(phi)
            }
            ChainFamilySpec::Theorem5 { psi, g } => {
                psi.validate()?;
                g.validate()
            }
        }
    }

    fn eval(&self, s: f64, t: f64) -> Result<StructureMatrix> {
        let n = self.dim();
        let d = t - s;
        match self {
            ChainFamilySpec::Example1 { a } => check_finite(example1(*a, d), n, s, t),
            ChainFamilySpec::Example2 { lambda, mu } => {
                let (l, m) = (lambda.powf(d), mu.powf(d));
                let (a, b) = (0.5 * (l + m), 0.5 * (l - m));
                check_finite(vec![a, b, b, a], n, s, t)
            }
            ChainFamilySpec::TwoState { phi, psi } => {
                let (ps, pt) = (phi.eval(s)?, phi.eval(t)?);
                if ps == 0.0 {
                    return Err(CeaError::domain(format!("phi vanishes at s = {s}")));
                }
                let alpha = pt * (psi.eval(t)? - psi.eval(s)?);
                let m = two_state_matrix(alpha, pt / ps);
                check_finite(m.entries().to_vec(), n, s, t)
            }
            ChainFamilySpec::Triangular(src) => src.eval(s, t),
            ChainFamilySpec::Rotation {} => {
                let (sn, cs) = d.sin_cos();
                check_finite(vec![cs, sn, -sn, cs], n, s, t)
            }
            ChainFamilySpec::ConstantRow { phi, .. } => {
                let pt = phi.eval(t)?;
                if pt == 0.0 {
                    return Err(CeaError::domain(format!("phi vanishes at t = {t}")));
                }
                let v = phi.eval(s)? / pt;
                let mut m = vec![0.0; n * n];
                for i in 0..n {
                    m[i * n] = v;
                }
                check_finite(m, n, s, t)
            }
            ChainFamilySpec::Theorem5 { psi, g } => {
                let m = if t < 1.0 {
                    two_state_matrix(psi.eval(t)? - psi.eval(s)?, 1.0)
                } else {
                    two_state_matrix(g.eval(t)?, 0.0)
                };
                check_finite(m.entries().to_vec(), n, s, t)
            }
        }
    }

    fn functions(&self) -> Vec<&TimeFunction> {
        match self {
            ChainFamilySpec::TwoState { phi, psi } => vec![phi, psi],
            ChainFamilySpec::ConstantRow { phi, .. } => vec![phi],
            ChainFamilySpec::Theorem5 { psi, g } => vec![psi, g],
            ChainFamilySpec::Triangular(src) => src.functions(),
            _ => Vec::new(),
        }
    }

    /// Functions whose zeros make the family undefined.
    fn denominators(&self) -> Vec<&TimeFunction> {
        match self {
            ChainFamilySpec::TwoState { phi, .. } | ChainFamilySpec::ConstantRow { phi, .. } => {
                vec![phi]
            }
            ChainFamilySpec::Triangular(TriangularSource::Entries { entries }) => {
                entries.iter().enumerate().map(|(i, row)| &row[i]).collect()
            }
            _ => Vec::new(),
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.functions().iter().flat_map(|f| f.breakpoints()).collect();
        if matches!(self, ChainFamilySpec::Theorem5 { .. }) {
            b.push(1.0);
        }
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    fn homogeneous(&self) -> Option<bool> {
        match self {
            ChainFamilySpec::Example1 { .. }
            | ChainFamilySpec::Example2 { .. }
            | ChainFamilySpec::Rotation {}
            | ChainFamilySpec::Triangular(TriangularSource::Power { .. }) => Some(true),
            _ => None,
        }
    }

    fn period(&self) -> Option<f64> {
        match self {
            ChainFamilySpec::Rotation {} => Some(2.0 * PI),
            _ => None,
        }
    }
}

pub type Evaluator = Arc<dyn Fn(f64, f64) -> Result<StructureMatrix> + Send + Sync>;

/// A chain family: an evaluator `(s, t) -> M(s, t)` on `0 <= s <= t`.
#[derive(Clone)]
pub struct ChainFamily {
    spec: Option<ChainFamilySpec>,
    dim: usize,
    evaluator: Evaluator,
    breakpoints: Vec<f64>,
    pub declared_homogeneous: Option<bool>,
    pub declared_period: Option<f64>,
}

impl fmt::Debug for ChainFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChainFamily")
            .field("spec", &self.spec)
            .field("dim", &self.dim)
            .field("declared_homogeneous", &self.declared_homogeneous)
            .field("declared_period", &self.declared_period)
            .finish()
    }
}

impl ChainFamily {
    /// A family from an arbitrary evaluator. `breakpoints` are times where
    /// the evaluator changes formula; they steer the CK sampler.
    pub fn from_fn(
        dim: usize,
        breakpoints: Vec<f64>,
        f: impl Fn(f64, f64) -> Result<StructureMatrix> + Send + Sync + 'static,
    ) -> Self {
        ChainFamily {
            spec: None,
            dim,
            evaluator: Arc::new(f),
            breakpoints,
            declared_homogeneous: None,
            declared_period: None,
        }
    }

    pub fn spec(&self) -> Option<&ChainFamilySpec> {
        self.spec.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// `M(s, t)`.
    pub fn eval(&self, s: f64, t: f64) -> Result<StructureMatrix> {
        if !(s.is_finite() && t.is_finite() && 0.0 <= s && s <= t) {
            return Err(CeaError::invalid(format!(
                "times must satisfy 0 <= s <= t, got (s, t) = ({s}, {t})"
            )));
        }
        let m = (self.evaluator)(s, t)?;
        if m.dim() != self.dim {
            return Err(CeaError::DimensionMismatch {
                expected: self.dim,
                found: m.dim(),
            });
        }
        Ok(m)
    }

    pub fn snapshot(&self, s: f64, t: f64) -> Result<EvolutionAlgebra> {
        self.eval(s, t).map(EvolutionAlgebra::new)
    }

    /// Points in `[lo, hi]` where the family is undefined: poles of the
    /// parameter functions and zeros of the ones it divides by.
    pub fn singular_points_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        let Some(spec) = &self.spec else {
            return Vec::new();
        };
        let mut pts: Vec<f64> = spec.functions().iter().flat_map(|f| f.poles_in(lo, hi)).collect();
        pts.extend(spec.denominators().iter().flat_map(|f| f.zeros_in(lo, hi)));
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }
}

pub fn build_family(spec: ChainFamilySpec) -> Result<ChainFamily> {
    spec.validate()?;
    let dim = spec.dim();
    let breakpoints = spec.breakpoints();
    let declared_homogeneous = spec.homogeneous();
    let declared_period = spec.period();
    let inner = spec.clone();
    Ok(ChainFamily {
        spec: Some(spec),
        dim,
        evaluator: Arc::new(move |s, t| inner.eval(s, t)),
        breakpoints,
        declared_homogeneous,
        declared_period,
    })
}

pub fn snapshot(family: &ChainFamily, s: f64, t: f64) -> Result<EvolutionAlgebra> {
    family.snapshot(s, t)
}

pub fn chain_det(family: &ChainFamily, s: f64, t: f64) -> Result<f64> {
    Ok(family.eval(s, t)?.det())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CKReport {
    pub n_samples: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub max_residual: f64,
    /// `(s, tau, t)`.
    pub worst_triple: [f64; 3],
    pub pass: bool,
}

fn check_sampling(t_max: f64, n_samples: usize) -> Result<()> {
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(CeaError::invalid(format!("t_max must be positive, got {t_max}")));
    }
    if n_samples == 0 {
        return Err(CeaError::invalid("n_samples must be at least 1"));
    }
    Ok(())
}

/// Sorted triples `s < tau < t` in `[0, t_max]`. Every fourth triple
/// straddles a breakpoint inside `(0, t_max)` when there is one.
fn ck_triples(t_max: f64, n: usize, seed: u64, breakpoints: &[f64]) -> Vec<[f64; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inner: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&b| 0.0 < b && b < t_max)
        .collect();
    (0..n)
        .map(|k| {
            if k % 4 == 0 && !inner.is_empty() {
                let b = inner[rng.gen_range(0..inner.len())];
                let s = rng.gen_range(0.0..b);
                let t = rng.gen_range(b..t_max);
                let tau = rng.gen_range(s..t);
                [s, tau, t]
            } else {
                let mut v = [
                    rng.gen_range(0.0..t_max),
                    rng.gen_range(0.0..t_max),
                    rng.gen_range(0.0..t_max),
                ];
                v.sort_by(f64::total_cmp);
                v
            }
        })
        .collect()
}

fn ck_residual(family: &ChainFamily, [s, tau, t]: [f64; 3]) -> Result<f64> {
    let lhs = family.eval(s, t)?;
    let rhs = family.eval(s, tau)?.matmul(&family.eval(tau, t)?)?;
    lhs.distance(&rhs)
}

/// Max entrywise residual of `M(s,t) - M(s,tau) M(tau,t)` over seeded
/// random triples.
pub fn verify_ck(
    family: &ChainFamily,
    t_max: f64,
    n_samples: usize,
    seed: u64,
    tol: f64,
) -> Result<CKReport> {
    check_sampling(t_max, n_samples)?;
    let triples = ck_triples(t_max, n_samples, seed, family.breakpoints());
    let residuals: Vec<Result<f64>> = triples
        .par_iter()
        .map(|&tr| ck_residual(family, tr))
        .collect();
    let mut worst: Option<(f64, [f64; 3])> = None;
    for (tr, r) in triples.iter().zip(residuals) {
        let r = r.map_err(|e| match e {
            CeaError::Domain(msg) => CeaError::Domain(format!(
                "{msg} (triple s = {}, tau = {}, t = {})",
                tr[0], tr[1], tr[2]
            )),
            other => other,
        })?;
        let better = match &worst {
            None => true,
            Some((w, wt)) => {
                r > *w || (r == *w && tr.partial_cmp(wt) == Some(std::cmp::Ordering::Less))
            }
        };
        if better {
            worst = Some((r, *tr));
        }
    }
    let (max_residual, worst_triple) = worst.expect("n_samples >= 1");
    Ok(CKReport {
        n_samples,
        seed,
        tolerance: tol,
        max_residual,
        worst_triple,
        pass: max_residual <= tol,
    })
}

/// Compares `M(s1, s1 + d)` with `M(s2, s2 + d)` on seeded samples.
pub fn check_homogeneous(
    family: &ChainFamily,
    t_max: f64,
    n_samples: usize,
    seed: u64,
    tol: f64,
) -> Result<bool> {
    check_sampling(t_max, n_samples)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..n_samples {
        let d = rng.gen_range(0.0..t_max);
        let s1 = rng.gen_range(0.0..=t_max - d);
        let s2 = rng.gen_range(0.0..=t_max - d);
        let m1 = family.eval(s1, s1 + d)?;
        let m2 = family.eval(s2, s2 + d)?;
        if m1.distance(&m2)? > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Compares `M(s, t + P)` with `M(s, t)` on seeded samples `s <= t <= t_max`.
/// A negative period is checked as its absolute value.
pub fn check_period(
    family: &ChainFamily,
    period: f64,
    t_max: f64,
    n_samples: usize,
    seed: u64,
    tol: f64,
) -> Result<bool> {
    if period == 0.0 || !period.is_finite() {
        return Err(CeaError::invalid("period must be nonzero and finite"));
    }
    check_sampling(t_max, n_samples)?;
    let p = period.abs();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..n_samples {
        let a = rng.gen_range(0.0..t_max);
        let b = rng.gen_range(0.0..t_max);
        let (s, t) = if a <= b { (a, b) } else { (b, a) };
        if family.eval(s, t + p)?.distance(&family.eval(s, t)?)? > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Limit of the two-dimensional homogeneous family as `t -> infinity`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Example2Limit {
    /// Zero multiplication.
    E0,
    /// `e1^2 = e1`, `e2^2 = e2`.
    E1,
    /// `e1^2 = e2^2 = (e1 + e2)/2`.
    EHalf,
    /// `e1^2 = (e1 - e2)/2`, `e2^2 = -(e1 - e2)/2`.
    EMinusHalf,
    /// Entries diverge; no algebra structure in the limit.
    EInfinity,
}

impl Example2Limit {
    pub fn matrix(&self) -> Option<StructureMatrix> {
        let rows: [[f64; 2]; 2] = match self {
            Example2Limit::E0 => [[0.0, 0.0], [0.0, 0.0]],
            Example2Limit::E1 => [[1.0, 0.0], [0.0, 1.0]],
            Example2Limit::EHalf => [[0.5, 0.5], [0.5, 0.5]],
            Example2Limit::EMinusHalf => [[0.5, -0.5], [-0.5, 0.5]],
            Example2Limit::EInfinity => return None,
        };
        Some(StructureMatrix::from_rows(&rows).expect("2x2"))
    }
}

pub fn limit_classify_example2(lambda: f64, mu: f64) -> Result<Example2Limit> {
    positive("lambda", lambda)?;
    positive("mu", mu)?;
    Ok(if lambda < 1.0 && mu < 1.0 {
        Example2Limit::E0
    } else if lambda == 1.0 && mu == 1.0 {
        Example2Limit::E1
    } else if lambda == 1.0 && mu < 1.0 {
        Example2Limit::EHalf
    } else if mu == 1.0 && lambda < 1.0 {
        Example2Limit::EMinusHalf
    } else {
        Example2Limit::EInfinity
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", content = "matrix", rename_all = "snake_case")]
pub enum NumericLimit {
    Finite(StructureMatrix),
    Divergent,
}

/// `M(s, t_probe)`, or `Divergent` once an entry exceeds the bound.
pub fn numeric_limit(
    family: &ChainFamily,
    s: f64,
    t_probe: f64,
    divergence_bound: f64,
) -> Result<NumericLimit> {
    if t_probe < s {
        return Err(CeaError::invalid(format!("t_probe ({t_probe}) must be >= s ({s})")));
    }
    let m = family.eval(s, t_probe)?;
    Ok(if m.max_abs() > divergence_bound {
        NumericLimit::Divergent
    } else {
        NumericLimit::Finite(m)
    })
}

/// The triangular family with `A(t) = [[1, 0], [t, e^t]]`.
pub fn unit_exp_triangular() -> ChainFamilySpec {
    ChainFamilySpec::Triangular(TriangularSource::Entries {
        entries: vec![
            vec![TimeFunction::constant(1.0)],
            vec![TimeFunction::linear(1.0), TimeFunction::exp(E)],
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fam(spec: ChainFamilySpec) -> ChainFamily {
        build_family(spec).unwrap()
    }

    fn close(a: &StructureMatrix, rows: &[[f64; 2]], tol: f64) -> bool {
        a.distance(&StructureMatrix::from_rows(rows).unwrap()).unwrap() <= tol
    }

    #[test]
    fn example1_at_zero_is_identity() {
        let f = fam(ChainFamilySpec::Example1 { a: 1.0 });
        let m = f.eval(0.0, 0.0).unwrap();
        assert!(m.distance(&StructureMatrix::identity(3)).unwrap() < 1e-15);
    }

    #[test]
    fn example1_rows_sum_to_one() {
        let f = fam(ChainFamilySpec::Example1 { a: 1.3 });
        for k in 0..100 {
            let m = f.eval(0.0, k as f64 * 0.07).unwrap();
            for i in 0..3 {
                let s: f64 = m.row(i).iter().sum();
                assert!((s - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn example2_snapshot_and_square() {
        let f = fam(ChainFamilySpec::Example2 { lambda: 2.0, mu: 1.0 });
        let m1 = f.eval(0.0, 1.0).unwrap();
        assert!(close(&m1, &[[1.5, 0.5], [0.5, 1.5]], 0.0));
        let m2 = f.eval(0.0, 2.0).unwrap();
        assert!(close(&m2, &[[2.5, 1.5], [1.5, 2.5]], 0.0));
        assert!(m2.distance(&m1.matmul(&m1).unwrap()).unwrap() < 1e-15);
    }

    #[test]
    fn rotation_quarter_turn() {
        let f = fam(ChainFamilySpec::Rotation {});
        assert!(close(&f.eval(0.0, PI / 2.0).unwrap(), &[[0.0, 1.0], [-1.0, 0.0]], 1e-15));
        assert!(close(&f.eval(1.7, 1.7).unwrap(), &[[1.0, 0.0], [0.0, 1.0]], 0.0));
    }

    #[test]
    fn two_state_diagonal_is_identity() {
        let f = fam(ChainFamilySpec::TwoState {
            phi: TimeFunction::exp(E),
            psi: TimeFunction::linear(0.5),
        });
        for s in [0.0, 0.4, 3.0] {
            assert!(close(&f.eval(s, s).unwrap(), &[[1.0, 0.0], [0.0, 1.0]], 1e-15));
        }
    }

    #[test]
    fn two_state_entries_symbolwise() {
        let phi = TimeFunction::exp(1.7);
        let psi = TimeFunction::Sin;
        let f = fam(ChainFamilySpec::TwoState {
            phi: phi.clone(),
            psi: psi.clone(),
        });
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let a = rng.gen_range(0.0..5.0);
            let b = rng.gen_range(0.0..5.0);
            let (s, t) = if a <= b { (a, b) } else { (b, a) };
            let (ps, pt) = (phi.eval(s).unwrap(), phi.eval(t).unwrap());
            let g = pt * (psi.eval(t).unwrap() - psi.eval(s).unwrap());
            let r = pt / ps;
            let m = f.eval(s, t).unwrap();
            let want = [
                0.5 * (1.0 + g + r),
                0.5 * (1.0 - g - r),
                0.5 * (1.0 + g - r),
                0.5 * (1.0 - g + r),
            ];
            for (x, y) in m.entries().iter().zip(want) {
                assert!((x - y).abs() <= 1e-14);
            }
            // beta is recovered from the entries as a11 - a21.
            assert!((m.get(0, 0) - m.get(1, 0) - r).abs() <= 1e-12);
        }
    }

    #[test]
    fn theorem5_after_one() {
        let f = fam(ChainFamilySpec::Theorem5 {
            psi: TimeFunction::constant(0.0),
            g: TimeFunction::constant(2.0),
        });
        assert!(close(&f.eval(0.5, 2.0).unwrap(), &[[1.5, -0.5], [1.5, -0.5]], 0.0));
        assert!(close(&f.eval(0.2, 0.7).unwrap(), &[[1.0, 0.0], [0.0, 1.0]], 0.0));
        assert_eq!(f.breakpoints(), &[1.0]);
    }

    #[test]
    fn constant_row_rows() {
        let f = fam(ChainFamilySpec::ConstantRow {
            phi: TimeFunction::exp(2.0),
            n: 3,
        });
        let m = f.eval(1.0, 3.0).unwrap();
        for i in 0..3 {
            assert_eq!(m.row(i), &[0.25, 0.0, 0.0]);
        }
    }

    #[test]
    fn triangular_unit_exp() {
        let f = fam(unit_exp_triangular());
        let (s, t) = (0.3, 1.1);
        let m = f.eval(s, t).unwrap();
        assert_eq!(m.get(0, 1), 0.0);
        assert!((m.get(1, 1) - (s - t).exp()).abs() < 1e-15);
        assert!((m.get(1, 0) - (s - t * (s - t).exp())).abs() < 1e-14);
        assert_eq!(m.get(0, 0), 1.0);
    }

    #[test]
    fn triangular_power_is_homogeneous() {
        let b = StructureMatrix::from_rows(&[[2.0, 0.0], [1.0, 0.5]]).unwrap();
        let f = fam(ChainFamilySpec::Triangular(TriangularSource::Power { power: b.clone() }));
        // B^{s - t} with s - t = -1 is B^{-1}.
        let m = f.eval(1.0, 2.0).unwrap();
        let prod = m.matmul(&b).unwrap();
        assert!(prod.distance(&StructureMatrix::identity(2)).unwrap() < 1e-14);
        assert!(check_homogeneous(&f, 5.0, 100, 1, 1e-10).unwrap());
        // Confluent diagonal.
        let b = StructureMatrix::from_rows(&[[2.0, 0.0], [1.0, 2.0]]).unwrap();
        let f = fam(ChainFamilySpec::Triangular(TriangularSource::Power { power: b.clone() }));
        let m = f.eval(0.0, 0.0).unwrap();
        assert!(m.distance(&StructureMatrix::identity(2)).unwrap() < 1e-15);
        let m = f.eval(1.0, 2.0).unwrap().matmul(&b).unwrap();
        assert!(m.distance(&StructureMatrix::identity(2)).unwrap() < 1e-14);
    }

    #[test]
    fn triangular_power_three_by_three() {
        let b = StructureMatrix::from_rows(&[[2.0, 0.0, 0.0], [1.0, 0.5, 0.0], [-1.0, 3.0, 1.5]])
            .unwrap();
        let p = triangular_power(&b, 2.0);
        let sq = b.matmul(&b).unwrap();
        for (x, y) in p.iter().zip(sq.entries()) {
            assert!((x - y).abs() < 1e-12);
        }
        let half = StructureMatrix::new(3, triangular_power(&b, 0.5)).unwrap();
        let back = half.matmul(&half).unwrap();
        assert!(back.distance(&b).unwrap() < 1e-12);
    }

    #[test]
    fn build_errors_name_the_constraint() {
        let e = build_family(ChainFamilySpec::Example2 { lambda: 0.0, mu: 1.0 }).unwrap_err();
        assert!(e.to_string().contains("lambda"));
        assert!(build_family(ChainFamilySpec::Example1 { a: -1.0 }).is_err());
        let e = build_family(ChainFamilySpec::TwoState {
            phi: TimeFunction::constant(0.0),
            psi: TimeFunction::Sin,
        })
        .unwrap_err();
        assert!(e.to_string().contains("phi"));
        let singular = ChainFamilySpec::Triangular(TriangularSource::Entries {
            entries: vec![vec![TimeFunction::constant(1.0)], vec![TimeFunction::Sin, TimeFunction::constant(0.0)]],
        });
        assert!(build_family(singular).unwrap_err().to_string().contains("singular"));
        let bad_power = StructureMatrix::from_rows(&[[1.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 1.0]])
            .unwrap();
        assert!(build_family(ChainFamilySpec::Triangular(TriangularSource::Power { power: bad_power })).is_err());
    }

    #[test]
    fn eval_rejects_reversed_times() {
        let f = fam(ChainFamilySpec::Rotation {});
        assert!(matches!(f.eval(2.0, 1.0), Err(CeaError::InvalidInput(_))));
        assert!(f.eval(-1.0, 1.0).is_err());
    }

    #[test]
    fn tan_pole_propagates() {
        let f = fam(ChainFamilySpec::TwoState {
            phi: TimeFunction::constant(1.0),
            psi: TimeFunction::Tan,
        });
        assert!(matches!(f.eval(0.0, PI / 2.0), Err(CeaError::Domain(_))));
        let pts = f.singular_points_in(0.0, 5.0);
        assert_eq!(pts.len(), 2);
    }

    #[test]
    fn ck_rotation_passes() {
        let f = fam(ChainFamilySpec::Rotation {});
        let r = verify_ck(&f, 2.0 * PI, 200, 42, 1e-9).unwrap();
        assert!(r.pass && r.max_residual <= 1e-12);
        assert_eq!(r.n_samples, 200);
    }

    #[test]
    fn ck_broken_family_fails() {
        let f = ChainFamily::from_fn(2, vec![], |s, t| {
            StructureMatrix::from_rows(&[[1.0 + t - s, 0.0], [0.0, 1.0]])
        });
        assert!((ck_residual(&f, [0.0, 1.0, 2.0]).unwrap() - 1.0).abs() < 1e-15);
        let r = verify_ck(&f, 5.0, 50, 1, 1e-9).unwrap();
        assert!(!r.pass);
    }

    #[test]
    fn ck_is_deterministic() {
        let f = fam(ChainFamilySpec::Example1 { a: 1.0 });
        let a = verify_ck(&f, 5.0, 200, 9, 1e-8).unwrap();
        let b = verify_ck(&f, 5.0, 200, 9, 1e-8).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ck_straddles_breakpoints() {
        let tr = ck_triples(5.0, 200, 4, &[1.0]);
        let straddle = tr.iter().filter(|[s, _, t]| *s < 1.0 && *t >= 1.0).count();
        assert!(straddle >= 50);
        assert!(tr.iter().all(|[s, tau, t]| s <= tau && tau <= t));
    }

    #[test]
    fn ck_all_catalog_families() {
        let specs = vec![
            ChainFamilySpec::Example1 { a: 1.0 },
            ChainFamilySpec::Example2 { lambda: 2.0, mu: 1.0 },
            ChainFamilySpec::Example2 { lambda: 0.5, mu: 3.0 },
            ChainFamilySpec::TwoState {
                phi: TimeFunction::exp(E),
                psi: TimeFunction::linear(0.5),
            },
            unit_exp_triangular(),
            ChainFamilySpec::Rotation {},
            ChainFamilySpec::ConstantRow {
                phi: TimeFunction::exp(2.0),
                n: 3,
            },
            ChainFamilySpec::Theorem5 {
                psi: TimeFunction::constant(0.0),
                g: TimeFunction::constant(2.0),
            },
            ChainFamilySpec::TwoState {
                phi: TimeFunction::constant(1.0),
                psi: TimeFunction::piecewise_const(vec![1.0, 2.5], vec![0.0, 1.0, -0.5]).unwrap(),
            },
        ];
        for spec in specs {
            let f = fam(spec.clone());
            let r = verify_ck(&f, 5.0, 200, 42, 1e-8).unwrap();
            assert!(r.pass, "{spec:?}: {}", r.max_residual);
        }
    }

    #[test]
    fn determinant_cantor_equation() {
        let specs = vec![
            ChainFamilySpec::Example1 { a: 0.7 },
            ChainFamilySpec::Example2 { lambda: 1.5, mu: 0.6 },
            ChainFamilySpec::TwoState {
                phi: TimeFunction::exp(3.0),
                psi: TimeFunction::Cos,
            },
            unit_exp_triangular(),
            ChainFamilySpec::Rotation {},
            ChainFamilySpec::ConstantRow {
                phi: TimeFunction::exp(2.0),
                n: 3,
            },
            ChainFamilySpec::Theorem5 {
                psi: TimeFunction::Sin,
                g: TimeFunction::constant(2.0),
            },
        ];
        for spec in specs {
            let f = fam(spec);
            for tr in ck_triples(5.0, 100, 8, f.breakpoints()) {
                let [s, tau, t] = tr;
                let d = chain_det(&f, s, t).unwrap();
                let prod = chain_det(&f, s, tau).unwrap() * chain_det(&f, tau, t).unwrap();
                assert!((d - prod).abs() <= 1e-8 * (1.0 + d.abs()));
            }
        }
    }

    #[test]
    fn determinant_table() {
        let f = fam(ChainFamilySpec::Example1 { a: 1.0 });
        let d = chain_det(&f, 0.0, 2.0).unwrap();
        assert!((d / (-6f64).exp() - 1.0).abs() < 1e-9);
        let f = fam(ChainFamilySpec::Rotation {});
        assert!((chain_det(&f, 0.3, 4.0).unwrap() - 1.0).abs() < 1e-15);
        let f = fam(ChainFamilySpec::Example2 { lambda: 2.0, mu: 1.0 });
        assert!((chain_det(&f, 0.0, 2.0).unwrap() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn homogeneity_checks() {
        let f = fam(ChainFamilySpec::Example2 { lambda: 2.0, mu: 1.0 });
        assert!(check_homogeneous(&f, 5.0, 100, 42, 1e-9).unwrap());
        let f = fam(ChainFamilySpec::TwoState {
            phi: TimeFunction::exp(E),
            psi: TimeFunction::linear(1.0),
        });
        let d = f.eval(0.0, 1.0).unwrap().distance(&f.eval(1.0, 2.0).unwrap()).unwrap();
        assert!(d > 0.1);
        assert!(!check_homogeneous(&f, 5.0, 100, 42, 1e-9).unwrap());
    }

    #[test]
    fn homogeneous_snapshot_matches_shifted() {
        let f = fam(ChainFamilySpec::Example1 { a: 2.0 });
        assert!(check_homogeneous(&f, 5.0, 50, 1, 1e-12).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..50 {
            let s = rng.gen_range(0.0..3.0);
            let t = s + rng.gen_range(0.0..2.0);
            let a = f.eval(s, t).unwrap();
            let b = f.eval(0.0, t - s).unwrap();
            assert!(a.distance(&b).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn period_checks() {
        let f = fam(ChainFamilySpec::Rotation {});
        assert!(check_period(&f, 2.0 * PI, 10.0, 100, 42, 1e-9).unwrap());
        assert!(!check_period(&f, PI, 10.0, 100, 42, 1e-9).unwrap());
        assert!(check_period(&f, -2.0 * PI, 10.0, 100, 42, 1e-9).unwrap());
        assert!(check_period(&f, 0.0, 10.0, 100, 42, 1e-9).is_err());
        let f = fam(ChainFamilySpec::Example2 { lambda: 1.0, mu: 1.0 });
        assert!(check_period(&f, 0.37, 10.0, 100, 42, 0.0).unwrap());
    }

    #[test]
    fn example2_limit_cases() {
        use Example2Limit::*;
        let cases = [
            ((0.5, 0.5), E0),
            ((1.0, 1.0), E1),
            ((1.0, 0.3), EHalf),
            ((0.7, 1.0), EMinusHalf),
            ((2.0, 0.5), EInfinity),
            ((1.0, 2.0), EInfinity),
        ];
        for ((l, m), want) in cases {
            assert_eq!(limit_classify_example2(l, m).unwrap(), want);
        }
        assert!(limit_classify_example2(0.0, 1.0).is_err());
        assert!(EInfinity.matrix().is_none());
    }

    #[test]
    fn example2_limits_match_numeric_probe() {
        for (l, m) in [(0.5, 0.5), (1.0, 1.0), (1.0, 0.3), (0.7, 1.0), (2.0, 0.5)] {
            let f = fam(ChainFamilySpec::Example2 { lambda: l, mu: m });
            let probe = numeric_limit(&f, 0.0, 60.0, DEFAULT_DIVERGENCE_BOUND).unwrap();
            match (limit_classify_example2(l, m).unwrap().matrix(), probe) {
                (Some(want), NumericLimit::Finite(got)) => {
                    assert!(got.distance(&want).unwrap() <= 1e-6, "{l} {m}")
                }
                (None, NumericLimit::Divergent) => {}
                other => panic!("{l} {m}: {other:?}"),
            }
        }
    }

    #[test]
    fn example1_limit() {
        let f = fam(ChainFamilySpec::Example1 { a: 1.0 });
        let NumericLimit::Finite(m) = numeric_limit(&f, 0.0, 30.0, DEFAULT_DIVERGENCE_BOUND).unwrap()
        else {
            panic!("diverged")
        };
        let third = StructureMatrix::new(3, vec![1.0 / 3.0; 9]).unwrap();
        assert!(m.distance(&third).unwrap() <= 1e-6);
        assert!(numeric_limit(&f, 2.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn family_json_round_trip() {
        let specs = vec![
            ChainFamilySpec::Example1 { a: 1.0 },
            ChainFamilySpec::Example2 { lambda: 2.0, mu: 1.0 },
            ChainFamilySpec::TwoState {
                phi: TimeFunction::exp(E),
                psi: TimeFunction::linear(0.5),
            },
            unit_exp_triangular(),
            ChainFamilySpec::Triangular(TriangularSource::Power {
                power: StructureMatrix::from_rows(&[[2.0, 0.0], [1.0, 0.5]]).unwrap(),
            }),
            ChainFamilySpec::Rotation {},
            ChainFamilySpec::ConstantRow {
                phi: TimeFunction::exp(2.0),
                n: 3,
            },
            ChainFamilySpec::Theorem5 {
                psi: TimeFunction::constant(0.0),
                g: TimeFunction::constant(2.0),
            },
        ];
        for spec in specs {
            let s = serde_json::to_string(&spec).unwrap();
            let back: ChainFamilySpec = serde_json::from_str(&s).unwrap();
            assert_eq!(back, spec, "{s}");
        }
        let s: ChainFamilySpec =
            serde_json::from_str(r#"{"variant":"example1","params":{"A":1.5}}"#).unwrap();
        assert_eq!(s, ChainFamilySpec::Example1 { a: 1.5 });
        let s: ChainFamilySpec =
            serde_json::from_str(r#"{"variant":"rotation","params":{}}"#).unwrap();
        assert_eq!(s, ChainFamilySpec::Rotation {});
    }
}
