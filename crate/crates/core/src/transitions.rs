//! Property transitions along a chain: controller functions, baric time
//! sets, critical times of the exponential-linear controller, and grid
//! diagrams of a property over the time triangle `0 <= s <= t <= t_max`.
//!
//! For the two-state family the off-diagonal entries are
//! `a21 = phi(t) (theta(t) - theta(s)) / 2` and
//! `a12 = phi(t) (theta_minus(t) - theta_minus(s)) / 2`, with
//! `theta = 1/phi + psi` and `theta_minus = 1/phi - psi`. So the snapshot at
//! `(s, t)` is baric exactly when `theta` or `theta_minus` takes equal
//! values at `s` and `t`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::baric;
use crate::chains::ChainFamily;
use crate::error::{CeaError, Result};
use crate::idempotent;
use crate::nilpotent::{self, NilpotentSet};
use crate::time_fn::TimeFunction;

/// Baric tolerance used for diagram scans; cell centers rarely sit on a
/// baric curve exactly.
pub const DEFAULT_DIAGRAM_EPS: f64 = 1e-6;
/// Number of scan steps across the window in [`baric_times`].
pub const SCAN_STEPS: usize = 10_000;
/// Residual target of the bisection in [`baric_times`].
pub const ROOT_TOL: f64 = 1e-12;

pub const DIAGRAM_IDEMPOTENT_RADIUS: f64 = 3.0;
pub const DIAGRAM_IDEMPOTENT_STEP: f64 = 0.1;
pub const DIAGRAM_IDEMPOTENT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Controller {
    /// `theta = 1/phi + psi`, `theta_minus = 1/phi - psi`.
    FromFunctions { phi: TimeFunction, psi: TimeFunction },
    Tan,
    Sin,
    /// `lambda^{-t} + c t`.
    ExpLinear { lambda: f64, c: f64 },
    Const { c: f64 },
}

pub fn controller_from(phi: TimeFunction, psi: TimeFunction) -> Result<Controller> {
    phi.validate()?;
    psi.validate()?;
    if phi.vanishes_on_interval() {
        return Err(CeaError::invalid("phi must be nonzero on the time domain"));
    }
    Ok(Controller::FromFunctions { phi, psi })
}

impl Controller {
    pub fn validate(&self) -> Result<()> {
        match self {
            Controller::FromFunctions { phi, psi } => {
                controller_from(phi.clone(), psi.clone()).map(|_| ())
            }
            Controller::ExpLinear { lambda, c } => {
                if !(*lambda > 0.0 && lambda.is_finite() && c.is_finite()) {
                    return Err(CeaError::invalid(format!(
                        "explinear: lambda must be positive and c finite, got ({lambda}, {c})"
                    )));
                }
                Ok(())
            }
            Controller::Const { c } if !c.is_finite() => {
                Err(CeaError::invalid("const controller must be finite"))
            }
            _ => Ok(()),
        }
    }

    fn inverse_phi(phi: &TimeFunction, t: f64) -> Result<f64> {
        let p = phi.eval(t)?;
        if p == 0.0 {
            return Err(CeaError::domain(format!("phi vanishes at t = {t}")));
        }
        Ok(1.0 / p)
    }

    pub fn theta(&self, t: f64) -> Result<f64> {
        match self {
            Controller::FromFunctions { phi, psi } => Ok(Self::inverse_phi(phi, t)? + psi.eval(t)?),
            Controller::Tan => TimeFunction::Tan.eval(t),
            Controller::Sin => Ok(t.sin()),
            Controller::ExpLinear { lambda, c } => Ok(lambda.powf(-t) + c * t),
            Controller::Const { c } => Ok(*c),
        }
    }

    /// Only controllers built from `phi` and `psi` have a second branch.
    pub fn theta_minus(&self, t: f64) -> Result<Option<f64>> {
        match self {
            Controller::FromFunctions { phi, psi } => {
                Ok(Some(Self::inverse_phi(phi, t)? - psi.eval(t)?))
            }
            _ => Ok(None),
        }
    }

    pub fn poles_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut p = match self {
            Controller::FromFunctions { phi, psi } => {
                let mut p = phi.poles_in(lo, hi);
                p.extend(phi.zeros_in(lo, hi));
                p.extend(psi.poles_in(lo, hi));
                p
            }
            Controller::Tan => TimeFunction::Tan.poles_in(lo, hi),
            _ => Vec::new(),
        };
        p.sort_by(f64::total_cmp);
        p.dedup();
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaricTimes {
    /// Isolated solutions of `theta(t) = theta(s)`, ascending.
    pub times: Vec<f64>,
    /// Maximal scan intervals on which `theta(t) = theta(s)` holds at every
    /// scan point.
    pub intervals: Vec<(f64, f64)>,
    /// Poles and jumps inside the window that split the scan.
    pub poles: Vec<f64>,
}

fn push_unique(v: &mut Vec<f64>, x: f64, radius: f64) {
    if !v.iter().any(|&y| (y - x).abs() <= radius) {
        v.push(x);
    }
}

enum Bracket {
    Root(f64),
    Jump(f64),
}

/// Bisection of `g` on `[a, b]` with `g(a) g(b) < 0`.
fn bisect(g: &dyn Fn(f64) -> Option<f64>, mut a: f64, mut b: f64, tol: f64) -> Bracket {
    let mut ga = g(a).expect("bracket end evaluable");
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let Some(gm) = g(m) else {
            return Bracket::Jump(m);
        };
        if gm.abs() <= ROOT_TOL {
            return Bracket::Root(m);
        }
        if (gm < 0.0) == (ga < 0.0) {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    let m = 0.5 * (a + b);
    match g(m) {
        Some(v) if v.abs() <= tol => Bracket::Root(m),
        _ => Bracket::Jump(m),
    }
}

/// All `t` in `window` with `|theta(t) - theta(s)| <= tol`: a scan with
/// `SCAN_STEPS` steps, sign changes refined by bisection. Only crossings
/// are detected; a tangential touch between scan points is missed. `s` is
/// always included when it lies in the window.
pub fn baric_times(
    controller: &Controller,
    s: f64,
    window: (f64, f64),
    tol: f64,
) -> Result<BaricTimes> {
    controller.validate()?;
    let (lo, hi) = window;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(CeaError::invalid(format!("window must satisfy lo < hi, got ({lo}, {hi})")));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(CeaError::invalid("tol must be positive"));
    }
    let target = controller.theta(s)?;
    let g = |t: f64| controller.theta(t).ok().map(|v| v - target);
    let h = (hi - lo) / SCAN_STEPS as f64;
    let grid: Vec<f64> = (0..=SCAN_STEPS).map(|k| lo + k as f64 * h).collect();
    let vals: Vec<Option<f64>> = grid.iter().map(|&t| g(t)).collect();

    let mut times = Vec::new();
    let mut intervals = Vec::new();
    let mut poles = controller.poles_in(lo, hi);
    if lo <= s && s <= hi {
        times.push(s);
    }
    let flat = |v: Option<f64>| matches!(v, Some(x) if x.abs() <= ROOT_TOL);
    let mut k = 0;
    while k <= SCAN_STEPS {
        if flat(vals[k]) {
            let start = k;
            while k < SCAN_STEPS && flat(vals[k + 1]) {
                k += 1;
            }
            if k > start {
                intervals.push((grid[start], grid[k]));
            } else {
                push_unique(&mut times, grid[k], 1e-9);
            }
        } else if k < SCAN_STEPS {
            if let (Some(a), Some(b)) = (vals[k], vals[k + 1]) {
                if !flat(vals[k + 1]) && (a < 0.0) != (b < 0.0) {
                    match bisect(&g, grid[k], grid[k + 1], tol) {
                        Bracket::Root(r) => push_unique(&mut times, r, 1e-9),
                        Bracket::Jump(p) => push_unique(&mut poles, p, 1e-6),
                    }
                }
            }
        }
        k += 1;
    }
    // Isolated hits inside a plateau are already covered by it.
    times.retain(|&t| t == s || !intervals.iter().any(|&(a, b)| a <= t && t <= b));
    times.sort_by(f64::total_cmp);
    poles.sort_by(f64::total_cmp);
    Ok(BaricTimes {
        times,
        intervals,
        poles,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalCase {
    /// `0 < lambda < 1` and `c < ln lambda`.
    SmallBase,
    /// `lambda > 1` and `0 < c < ln lambda`.
    LargeBase,
    /// The baric set is the diagonal only.
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalTimes {
    pub t_c: Option<f64>,
    pub t_c_prime: Option<f64>,
    pub case: CriticalCase,
}

/// Critical times of `theta(t) = lambda^{-t} + c t`: `t_c` is the minimum
/// of `theta` and `t_c_prime > t_c` solves `theta = 1 = theta(0)`.
pub fn critical_times_p1(lambda: f64, c: f64) -> Result<CriticalTimes> {
    if !(lambda > 0.0 && lambda.is_finite() && c.is_finite()) {
        return Err(CeaError::invalid(format!(
            "lambda must be positive and c finite, got ({lambda}, {c})"
        )));
    }
    if lambda == 1.0 {
        return Err(CeaError::invalid("lambda = 1 makes ln(lambda) vanish"));
    }
    let ln = lambda.ln();
    let case = if lambda < 1.0 {
        if c < ln {
            CriticalCase::SmallBase
        } else {
            CriticalCase::Empty
        }
    } else if c > 0.0 && c < ln {
        CriticalCase::LargeBase
    } else {
        CriticalCase::Empty
    };
    if case == CriticalCase::Empty {
        return Ok(CriticalTimes {
            t_c: None,
            t_c_prime: None,
            case,
        });
    }
    let t_c = (ln / c).ln() / ln;
    let theta = |t: f64| lambda.powf(-t) + c * t - 1.0;
    let mut b = 2.0 * t_c.max(1.0);
    while theta(b) <= 0.0 {
        b *= 2.0;
    }
    let mut a = t_c;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let v = theta(m);
        if v == 0.0 {
            a = m;
            b = m;
            break;
        }
        if v < 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    let t_c_prime = if theta(a).abs() <= theta(b).abs() { a } else { b };
    Ok(CriticalTimes {
        t_c: Some(t_c),
        t_c_prime: Some(t_c_prime),
        case,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Property {
    Baric,
    NilpotentUnique,
    IdempotentCount,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cell {
    pub s: f64,
    pub t: f64,
    /// 0/1 for boolean properties, a count for idempotents, -1 when
    /// undetermined.
    pub value: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagram {
    pub property: Property,
    pub t_max: f64,
    pub resolution: usize,
    pub eps: f64,
    /// Cells with `s <= t`, ordered by `s` index then `t` index.
    pub cells: Vec<Cell>,
}

impl Diagram {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,t,value\n");
        for c in &self.cells {
            writeln!(out, "{:.16e},{:.16e},{}", c.s, c.t, c.value).expect("write to string");
        }
        out
    }
}

pub const UNDETERMINED: i64 = -1;

/// Pointwise classification used for every diagram cell.
pub fn classify_point(
    family: &ChainFamily,
    property: Property,
    s: f64,
    t: f64,
    eps: f64,
) -> Result<i64> {
    let e = match family.snapshot(s, t) {
        Ok(e) => e,
        Err(CeaError::Domain(_)) => return Ok(UNDETERMINED),
        Err(other) => return Err(other),
    };
    Ok(match property {
        Property::Baric => baric::is_baric(&e, eps) as i64,
        Property::NilpotentUnique => match nilpotent::nilpotent_analysis(&e, nilpotent::DEFAULT_EPS) {
            NilpotentSet::UniqueZero => 1,
            NilpotentSet::Undetermined { .. } => UNDETERMINED,
            _ => 0,
        },
        Property::IdempotentCount => idempotent::idempotent_oracle(
            &e,
            DIAGRAM_IDEMPOTENT_RADIUS,
            DIAGRAM_IDEMPOTENT_STEP,
            DIAGRAM_IDEMPOTENT_TOL,
        )?
        .len() as i64,
    })
}

/// Classifies the center of every cell of an `n x n` grid on
/// `[0, t_max]^2` with `s <= t`. Cells whose `s` or `t` range contains a
/// singular point of the family are marked undetermined.
pub fn diagram(
    family: &ChainFamily,
    property: Property,
    t_max: f64,
    n: usize,
    eps: f64,
) -> Result<Diagram> {
    if n < 2 {
        return Err(CeaError::invalid(format!("grid resolution must be at least 2, got {n}")));
    }
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(CeaError::invalid(format!("t_max must be positive, got {t_max}")));
    }
    if property == Property::IdempotentCount && family.dim() != 2 {
        return Err(CeaError::invalid(format!(
            "idempotent-count diagrams need a 2-dimensional family, got dimension {}",
            family.dim()
        )));
    }
    let h = t_max / n as f64;
    let singular: Vec<bool> = (0..n)
        .map(|i| !family.singular_points_in(i as f64 * h, (i + 1) as f64 * h).is_empty())
        .collect();
    let index: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let cells: Result<Vec<Cell>> = index
        .par_iter()
        .map(|&(i, j)| {
            let s = (i as f64 + 0.5) * h;
            let t = (j as f64 + 0.5) * h;
            let value = if singular[i] || singular[j] {
                UNDETERMINED
            } else {
                classify_point(family, property, s, t, eps)?
            };
            Ok(Cell { s, t, value })
        })
        .collect();
    Ok(Diagram {
        property,
        t_max,
        resolution: n,
        eps,
        cells: cells?,
    })
}

/// Fraction of cells with value 1.
pub fn baric_fraction(d: &Diagram) -> f64 {
    let hits = d.cells.iter().filter(|c| c.value == 1).count();
    hits as f64 / d.cells.len() as f64
}

/// Lines `t = sign * s + offset + k * period`, `k = 0, 1, 2, ...`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFamily {
    pub sign: f64,
    pub offset: f64,
    pub period: f64,
}

impl LineFamily {
    /// True when `(s, t)` lies within `tol` (in `t`) of a line of the family.
    pub fn contains(&self, s: f64, t: f64, tol: f64) -> bool {
        let r = t - self.sign * s - self.offset;
        let k = (r / self.period).round();
        k >= 0.0 && (r - k * self.period).abs() <= tol
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnalyticBaricSet {
    Lines { families: Vec<LineFamily> },
    WholeTriangle,
    /// The curve `theta(s) = theta(t)` for `s <= t_c <= t <= t_c_prime`
    /// plus the diagonal, or the diagonal alone in the empty case.
    ExpLinear { critical: CriticalTimes },
}

pub fn analytic_baric_set(controller: &Controller) -> Result<AnalyticBaricSet> {
    controller.validate()?;
    Ok(match controller {
        Controller::Tan => AnalyticBaricSet::Lines {
            families: vec![LineFamily {
                sign: 1.0,
                offset: 0.0,
                period: PI,
            }],
        },
        Controller::Sin => AnalyticBaricSet::Lines {
            families: vec![
                LineFamily {
                    sign: 1.0,
                    offset: 0.0,
                    period: 2.0 * PI,
                },
                LineFamily {
                    sign: -1.0,
                    offset: PI,
                    period: 2.0 * PI,
                },
            ],
        },
        Controller::Const { .. } => AnalyticBaricSet::WholeTriangle,
        Controller::ExpLinear { lambda, c } => AnalyticBaricSet::ExpLinear {
            critical: critical_times_p1(*lambda, *c)?,
        },
        Controller::FromFunctions { .. } => {
            return Err(CeaError::invalid(
                "no closed-form baric set for a general phi/psi controller",
            ))
        }
    })
}
