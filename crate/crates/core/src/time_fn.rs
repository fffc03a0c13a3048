//! Scalar functions of time used to parametrize chain families and
//! controllers.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{CeaError, Result};

/// `|cos t|` below this counts as a pole of `tan`.
const TAN_POLE_EPS: f64 = 1e-12;

/// A user-supplied function of time. Not serializable.
#[derive(Clone)]
pub struct Callback(pub Arc<dyn Fn(f64) -> f64 + Send + Sync>);

impl Callback {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Callback(Arc::new(f))
    }
}

impl fmt::Debug for Callback {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Callback(..)")
    }
}

impl PartialEq for Callback {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeFunction {
    /// `lambda^t`, `lambda > 0`.
    Exp { lambda: f64 },
    /// `c t`.
    Linear { c: f64 },
    Sin,
    Cos,
    /// Undefined at `pi/2 + k pi`.
    Tan,
    Const { c: f64 },
    /// `values[k]` on `[breakpoints[k-1], breakpoints[k])`; needs one more
    /// value than breakpoints, breakpoints strictly increasing.
    PiecewiseConst {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
    #[serde(skip)]
    Callback(Callback),
}

fn is_tan_pole(t: f64) -> bool {
    t.cos().abs() < TAN_POLE_EPS
}

impl TimeFunction {
    pub fn exp(lambda: f64) -> Self {
        TimeFunction::Exp { lambda }
    }

    pub fn linear(c: f64) -> Self {
        TimeFunction::Linear { c }
    }

    pub fn constant(c: f64) -> Self {
        TimeFunction::Const { c }
    }

    pub fn piecewise_const(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let f = TimeFunction::PiecewiseConst { breakpoints, values };
        f.validate()?;
        Ok(f)
    }

    pub fn callback(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        TimeFunction::Callback(Callback::new(f))
    }

    /// Checks the parameter constraints of the variant.
    pub fn validate(&self) -> Result<()> {
        match self {
            TimeFunction::Exp { lambda } => {
                if !(*lambda > 0.0 && lambda.is_finite()) {
                    return Err(CeaError::invalid(format!(
                        "exp: lambda must be positive, got {lambda}"
                    )));
                }
            }
            TimeFunction::Linear { c } | TimeFunction::Const { c } => {
                if !c.is_finite() {
                    return Err(CeaError::invalid("coefficient must be finite"));
                }
            }
            TimeFunction::PiecewiseConst { breakpoints, values } => {
                if values.len() != breakpoints.len() + 1 {
                    return Err(CeaError::invalid(format!(
                        "piecewise_const: need {} values for {} breakpoints, got {}",
                        breakpoints.len() + 1,
                        breakpoints.len(),
                        values.len()
                    )));
                }
                if breakpoints.iter().chain(values).any(|v| !v.is_finite()) {
                    return Err(CeaError::invalid("piecewise_const: non-finite entry"));
                }
                if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(CeaError::invalid(
                        "piecewise_const: breakpoints must be strictly increasing",
                    ));
                }
            }
            TimeFunction::Sin | TimeFunction::Cos | TimeFunction::Tan | TimeFunction::Callback(_) => {}
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        let v = match self {
            TimeFunction::Exp { lambda } => lambda.powf(t),
            TimeFunction::Linear { c } => c * t,
            TimeFunction::Sin => t.sin(),
            TimeFunction::Cos => t.cos(),
            TimeFunction::Tan => {
                if is_tan_pole(t) {
                    return Err(CeaError::domain(format!("tan has a pole at t = {t}")));
                }
                t.tan()
            }
            TimeFunction::Const { c } => *c,
            TimeFunction::PiecewiseConst { breakpoints, values } => {
                values[breakpoints.partition_point(|&b| b <= t)]
            }
            TimeFunction::Callback(f) => (f.0)(t),
        };
        if !v.is_finite() {
            return Err(CeaError::domain(format!("non-finite value at t = {t}")));
        }
        Ok(v)
    }

    /// Jump points of the function (piecewise constants only).
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            TimeFunction::PiecewiseConst { breakpoints, .. } => breakpoints.clone(),
            _ => Vec::new(),
        }
    }

    /// Poles in `[lo, hi]`, ascending.
    pub fn poles_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        match self {
            TimeFunction::Tan => lattice_in(FRAC_PI_2, PI, lo, hi),
            _ => Vec::new(),
        }
    }

    /// Zeros in `[lo, hi]` for the variants whose zero set is a finite
    /// union of points and known in closed form. `Const(0)` and zero
    /// pieces are reported by [`TimeFunction::vanishes_on_interval`].
    pub fn zeros_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        match self {
            TimeFunction::Sin | TimeFunction::Tan => lattice_in(0.0, PI, lo, hi),
            TimeFunction::Cos => lattice_in(FRAC_PI_2, PI, lo, hi),
            TimeFunction::Linear { c } if *c != 0.0 && lo <= 0.0 && 0.0 <= hi => vec![0.0],
            _ => Vec::new(),
        }
    }

    /// True when the function is identically zero on some interval.
    pub fn vanishes_on_interval(&self) -> bool {
        match self {
            TimeFunction::Const { c } | TimeFunction::Linear { c } => *c == 0.0,
            TimeFunction::PiecewiseConst { values, .. } => values.contains(&0.0),
            _ => false,
        }
    }
}

/// Points `offset + k period` lying in `[lo, hi]`.
fn lattice_in(offset: f64, period: f64, lo: f64, hi: f64) -> Vec<f64> {
    let k0 = ((lo - offset) / period).ceil() as i64;
    let mut out = Vec::new();
    let mut k = k0;
    loop {
        let p = offset + k as f64 * period;
        if p > hi {
            break;
        }
        if p >= lo {
            out.push(p);
        }
        k += 1;
    }
    out
}
