//! Independent derivative oracles.
//!
//! Two routes to a partial derivative that share no code path with each
//! other: forward-mode dual numbers (exact derivative rules, ε² = 0) and
//! central finite differences sharpened by one Richardson extrapolation
//! step. Field expressions are written once, generically over [`Real`],
//! so the same source text feeds the plain evaluator, the dual oracle and
//! the difference quotient.

use std::ops::{Add, Div, Mul, Neg, Sub};

use thiserror::Error;

use crate::geom::PolarPoint;

#[derive(Debug, Error)]
pub enum DiffError {
    #[error("finite-difference step {h:.3e} is below the precision floor for coordinate {coord:.3e}")]
    StepTooSmall { h: f64, coord: f64 },
}

/// Scalar abstraction shared by `f64` and [`Dual`].
pub trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn constant(v: f64) -> Self;
    fn value(self) -> f64;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn sqrt(self) -> Self;
    fn powi(self, n: i32) -> Self;
}

impl Real for f64 {
    fn constant(v: f64) -> Self {
        v
    }
    fn value(self) -> f64 {
        self
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
}

/// Dual number `val + der·ε` with `ε² = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub val: f64,
    pub der: f64,
}

impl Dual {
    pub fn new(val: f64, der: f64) -> Self {
        Self { val, der }
    }

    /// Constant: derivative part zero.
    pub fn constant(val: f64) -> Self {
        Self { val, der: 0.0 }
    }

    /// Seed variable: derivative part one.
    pub fn variable(val: f64) -> Self {
        Self { val, der: 1.0 }
    }

    /// Real power with positive base.
    pub fn powf(self, n: f64) -> Self {
        let p = self.val.powf(n - 1.0);
        Dual::new(self.val * p, self.der * n * p)
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, rhs: Dual) -> Dual {
        Dual::new(self.val + rhs.val, self.der + rhs.der)
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, rhs: Dual) -> Dual {
        Dual::new(self.val - rhs.val, self.der - rhs.der)
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, rhs: Dual) -> Dual {
        Dual::new(self.val * rhs.val, self.der * rhs.val + self.val * rhs.der)
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, rhs: Dual) -> Dual {
        let v = self.val / rhs.val;
        Dual::new(v, (self.der - v * rhs.der) / rhs.val)
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual::new(-self.val, -self.der)
    }
}

impl Real for Dual {
    fn constant(v: f64) -> Self {
        Dual::constant(v)
    }
    fn value(self) -> f64 {
        self.val
    }
    fn exp(self) -> Self {
        let e = self.val.exp();
        Dual::new(e, self.der * e)
    }
    fn ln(self) -> Self {
        Dual::new(self.val.ln(), self.der / self.val)
    }
    fn sin(self) -> Self {
        let (s, c) = self.val.sin_cos();
        Dual::new(s, self.der * c)
    }
    fn cos(self) -> Self {
        let (s, c) = self.val.sin_cos();
        Dual::new(c, -self.der * s)
    }
    fn sqrt(self) -> Self {
        let s = self.val.sqrt();
        Dual::new(s, self.der / (2.0 * s))
    }
    fn powi(self, n: i32) -> Self {
        let p = self.val.powi(n - 1);
        Dual::new(self.val * p, self.der * f64::from(n) * p)
    }
}

/// Which variable of an `(r, θ)` expression to differentiate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    R,
    Theta,
}

/// Exact (to rounding) partial derivative by forward-mode propagation.
pub fn dual_partial<F>(expr: F, p: PolarPoint, which: Var) -> f64
where
    F: Fn(Dual, Dual) -> Dual,
{
    dual_partial_at(expr, p.r, p.theta, which)
}

/// [`dual_partial`] over raw coordinates; `Var::R` seeds the first
/// argument, `Var::Theta` the second.
pub fn dual_partial_at<F>(expr: F, first: f64, second: f64, which: Var) -> f64
where
    F: Fn(Dual, Dual) -> Dual,
{
    let (x, y) = match which {
        Var::R => (Dual::variable(first), Dual::constant(second)),
        Var::Theta => (Dual::constant(first), Dual::variable(second)),
    };
    expr(x, y).der
}

/// Central-difference estimate with one Richardson step.
#[derive(Debug, Clone, Copy)]
pub struct FdEstimate {
    pub estimate: f64,
    pub error_estimate: f64,
}

/// Central differences at steps `h0` and `h0/2` combined by Richardson
/// extrapolation; the two-level difference gives the error estimate.
pub fn fd_partial<F>(expr: F, p: PolarPoint, which: Var, h0: f64) -> Result<FdEstimate, DiffError>
where
    F: Fn(f64, f64) -> f64,
{
    let coord = match which {
        Var::R => p.r,
        Var::Theta => p.theta,
    };
    if h0 <= coord.abs().max(1.0) * f64::EPSILON * 4.0 {
        return Err(DiffError::StepTooSmall { h: h0, coord });
    }
    let at = |dr: f64, dth: f64| expr(p.r + dr, p.theta + dth);
    let central = |h: f64| match which {
        Var::R => (at(h, 0.0) - at(-h, 0.0)) / (2.0 * h),
        Var::Theta => (at(0.0, h) - at(0.0, -h)) / (2.0 * h),
    };
    let coarse = central(h0);
    let fine = central(h0 / 2.0);
    // D(h) = f' + c·h² + O(h⁴): one Richardson level cancels the h² term.
    let estimate = (4.0 * fine - coarse) / 3.0;
    let error_estimate = ((fine - coarse) / 3.0).abs() + estimate.abs() * f64::EPSILON;
    Ok(FdEstimate {
        estimate,
        error_estimate,
    })
}
