//! Gradient-flow geometry laboratory.
//!
//! The crate studies the descent flow of a smooth, non-analytic cost
//! function whose trajectory converges to the origin while its unit
//! secants keep winding. The pieces:
//!
//! * [`geom`] — Cartesian / polar / log-polar charts with unwrapped angles.
//! * [`curve`] — closed forms and quadrature for the spiral curve
//!   `(r, θ) = (1/t, log log t)`.
//! * [`diffcheck`] — dual-number and finite-difference derivative oracles.
//! * [`field`] — the flat spiral cost function, its displayed closed-form
//!   expressions, and an underflow-free direction field.
//! * [`flow`] — adaptive Runge–Kutta integration of the normalized descent
//!   flow in a chosen chart and gradient convention.
//! * [`analysis`] — arc-length, length-distance ratio, secant-angle and
//!   winding metrics over trajectories.
//! * [`claims`] — the executable claims ledger with a JSON report.

pub mod analysis;
pub mod claims;
pub mod curve;
pub mod diffcheck;
pub mod field;
pub mod flow;
pub mod geom;

/// `n` geometrically spaced values covering `[a, b]`, endpoints included.
///
/// Both endpoints must be positive and finite; `n >= 2`.
pub fn log_spaced(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite());
    assert!(n >= 2, "need at least the two endpoints");
    let (la, lb) = (a.ln(), b.ln());
    let step = (lb - la) / (n - 1) as f64;
    (0..n)
        .map(|i| {
            if i == n - 1 {
                b
            } else {
                (la + step * i as f64).exp()
            }
        })
        .collect()
}
