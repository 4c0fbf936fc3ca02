//! Coordinate charts and continuous angle lifting.
//!
//! Angles are stored *unwrapped* everywhere downstream: winding is the
//! phenomenon under study, so reduction to a principal value happens only
//! at chart boundaries (Cartesian → polar). The log-polar chart
//! `(ρ, θ) = (log(1/r), θ)` is the canonical state for dynamics near the
//! origin, where `r` itself drops below floating-point range.

use std::f64::consts::PI;

const TAU: f64 = 2.0 * PI;

/// Point in the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartesianPoint {
    pub x: f64,
    pub y: f64,
}

impl CartesianPoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub const ORIGIN: CartesianPoint = CartesianPoint { x: 0.0, y: 0.0 };

    pub fn distance(self, other: CartesianPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Polar chart with the principal angle in `(−π, π]`.
    pub fn to_polar(self) -> PolarPoint {
        PolarPoint::new(self.x.hypot(self.y), self.y.atan2(self.x))
    }

    /// Polar chart with the angle lifted to stay continuous against
    /// `prev_theta`.
    pub fn to_polar_lifted(self, prev_theta: f64) -> PolarPoint {
        let p = self.to_polar();
        PolarPoint::new(p.r, lift_angle(prev_theta, p.theta))
    }
}

/// Point in polar coordinates with unwrapped angle.
///
/// `theta` is *not* reduced mod 2π; the winding of a path is carried by
/// the angle itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarPoint {
    /// Radius, strictly positive.
    pub r: f64,
    /// Unwrapped angle in radians.
    pub theta: f64,
}

impl PolarPoint {
    pub fn new(r: f64, theta: f64) -> Self {
        debug_assert!(r > 0.0, "polar radius must be positive, got {r}");
        Self { r, theta }
    }

    pub fn to_cartesian(self) -> CartesianPoint {
        CartesianPoint::new(self.r * self.theta.cos(), self.r * self.theta.sin())
    }

    pub fn to_log_polar(self) -> LogPolarPoint {
        // -ln r is the exact negation of ln(1/r) in IEEE arithmetic and
        // avoids the rounding of the 1/r division.
        LogPolarPoint::new(-self.r.ln(), self.theta)
    }
}

/// Log-polar chart `(ρ, θ)` with `ρ = log(1/r)`.
///
/// `ρ` grows benignly where `r` underflows; inside the spiral field's
/// domain `ρ ≥ log 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogPolarPoint {
    /// `log(1/r)`, dimensionless.
    pub rho: f64,
    /// Unwrapped angle in radians.
    pub theta: f64,
}

impl LogPolarPoint {
    pub fn new(rho: f64, theta: f64) -> Self {
        Self { rho, theta }
    }

    /// Radius `e^{−ρ}`; underflows to `0.0` for `ρ` beyond ~745.
    pub fn radius(self) -> f64 {
        (-self.rho).exp()
    }

    pub fn to_polar(self) -> PolarPoint {
        PolarPoint::new(self.radius(), self.theta)
    }

    pub fn to_cartesian(self) -> CartesianPoint {
        let r = self.radius();
        CartesianPoint::new(r * self.theta.cos(), r * self.theta.sin())
    }
}

/// Lift a principal-value angle onto the branch closest to `prev_unwrapped`.
///
/// Returns `new_principal + 2πk` with integer `k` chosen so that the result
/// differs from `prev_unwrapped` by at most π.
pub fn lift_angle(prev_unwrapped: f64, new_principal: f64) -> f64 {
    debug_assert!(prev_unwrapped.is_finite());
    let k = ((prev_unwrapped - new_principal) / TAU).round();
    new_principal + TAU * k
}

/// Reduce an unwrapped angle to the principal branch `(−π, π]`.
pub fn principal_angle(theta: f64) -> f64 {
    let mut t = theta % TAU;
    if t > PI {
        t -= TAU;
    } else if t <= -PI {
        t += TAU;
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const LOG_LOG_2: f64 = -0.366_512_920_581_664_33;

    #[test]
    fn to_cartesian_identity_case() {
        let c = PolarPoint::new(1.0, 0.0).to_cartesian();
        assert_eq!(c.x, 1.0);
        assert_eq!(c.y, 0.0);
    }

    #[test]
    fn to_cartesian_axis_case() {
        let c = PolarPoint::new(0.5, std::f64::consts::FRAC_PI_2).to_cartesian();
        assert!(c.x.abs() < 1e-16);
        assert!((c.y - 0.5).abs() < 1e-15);
    }

    #[test]
    fn to_cartesian_spiral_start() {
        // (0.5, log log 2): frozen from high-precision trig evaluation.
        let c = PolarPoint::new(0.5, LOG_LOG_2).to_cartesian();
        assert!((c.x - 0.466_791_328_182_666_4).abs() < 1e-15);
        assert!((c.y - -0.179_181_070_243_098_6).abs() < 1e-15);
    }

    #[test]
    fn lift_angle_no_jump() {
        assert!((lift_angle(0.1, 0.2) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn lift_angle_minimal_jump_rule() {
        assert!((lift_angle(3.0, -3.0) - (TAU - 3.0)).abs() < 1e-12);
        assert!((lift_angle(6.2, 0.0) - TAU).abs() < 1e-12);
    }

    #[test]
    fn principal_angle_branch() {
        assert!((principal_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((principal_angle(-3.0 * PI) - PI).abs() < 1e-12);
        assert!((principal_angle(7.0) - (7.0 - TAU)).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn polar_round_trip(log_r in -8.0f64..0.0, theta in -50.0f64..50.0) {
            let p = PolarPoint::new(10f64.powf(log_r), theta);
            let back = p.to_cartesian().to_polar_lifted(p.theta);
            prop_assert!((back.r - p.r).abs() <= 1e-12 * p.r);
            let scale = p.theta.abs().max(1.0);
            prop_assert!((back.theta - p.theta).abs() <= 1e-12 * scale);
        }

        #[test]
        fn log_polar_round_trip(log_r in -300.0f64..0.0) {
            let r = 10f64.powf(log_r);
            let q = PolarPoint::new(r, 0.3).to_log_polar();
            let back = q.to_polar();
            // r → ρ → r is limited by the quantization of ρ itself:
            // the relative error grows like eps·|ln r|.
            let tol = 2.5e-16 * (q.rho.abs() + 2.0);
            prop_assert!((back.r - r).abs() <= tol * r);
            // ρ → r → ρ is exact to full relative precision.
            let rho_back = -back.r.ln();
            prop_assert!((rho_back - q.rho).abs() <= 1e-15 * q.rho.abs().max(1.0));
        }

        #[test]
        fn lift_stays_within_pi(prev in -100.0f64..100.0, principal in -3.0f64..3.0) {
            let lifted = lift_angle(prev, principal);
            prop_assert!((lifted - prev).abs() <= PI + 1e-9);
            // lifted differs from the principal representative by a whole
            // number of turns
            let k = (lifted - principal) / TAU;
            prop_assert!((k - k.round()).abs() < 1e-9);
        }
    }
}
