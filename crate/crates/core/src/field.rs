//! The flat spiral cost field and an analytic control field.
//!
//! The spiral field on the disk `0 < r ≤ 1/2` is
//!
//! ```text
//! f(r, θ) = e^{−1/r} · (1 − a(r)·sin(θ − log log(1/r))),
//! a(r)    = log(1/r) / (1 + r² log²(1/r)),
//! ```
//!
//! flat at the origin and vanishing sine on the spiral curve
//! `θ = log log(1/r)`. Everything carrying the `e^{−1/r}` factor flows
//! through [`SignedLogValue`] — the factor underflows below `r ≈ 1/709`
//! while the trajectory has to be followed far deeper — and the direction
//! field cancels the factor analytically, so it stays finite for
//! arbitrarily large `ρ = log(1/r)`.
//!
//! Two spiral variants exist on purpose. [`FieldKind::Spiral`] gets its
//! partial derivatives from the dual-number oracle applied to the
//! definition of `f`; [`FieldKind::DisplayedSpiral`] transcribes the
//! closed-form partial-derivative display verbatim, including its
//! cos-term coefficient `1/(r² log(1/r))` where the chain rule gives
//! `1/(r log(1/r))`. The claims ledger compares the two instead of
//! silently picking one.

use std::cmp::Ordering;

use serde::Serialize;
use thiserror::Error;

use crate::diffcheck::{dual_partial_at, Dual, Real, Var};
use crate::geom::{LogPolarPoint, PolarPoint};

/// Domain radius of the spiral field variants.
pub const SPIRAL_DOMAIN_RADIUS: f64 = 0.5;

/// Multiplicative grace band on the domain radius granted to integrator
/// trial stages, which may poke slightly past the boundary.
pub(crate) const DOMAIN_GRACE: f64 = 1.2;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("r = {r:.6e} is outside the field domain (0, {domain_radius:.3}]")]
    OutsideDomain { r: f64, domain_radius: f64 },
    #[error("factored gradient vanished at rho = {rho:.6e}: critical point reached")]
    CriticalPoint { rho: f64 },
    #[error("factored gradient magnitude {magnitude:.3e} fell below the floor {floor:.3e}")]
    BelowGradientFloor { magnitude: f64, floor: f64 },
    #[error("factored components are not representable at r = {r:.6e}")]
    NotRepresentable { r: f64 },
}

// ---------------------------------------------------------------------
// Signed-log scalars
// ---------------------------------------------------------------------

/// A real number stored as sign and natural log of magnitude.
///
/// Encodes exactly one real; zero is `sign = 0`, `log_magnitude = −∞`.
/// A finite value whose magnitude falls below `e^{−inf}`-representable
/// range keeps its sign with `log_magnitude = −∞`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SignedLogValue {
    sign: i8,
    log_magnitude: f64,
}

impl SignedLogValue {
    pub const ZERO: SignedLogValue = SignedLogValue {
        sign: 0,
        log_magnitude: f64::NEG_INFINITY,
    };

    pub fn from_value(v: f64) -> Self {
        if v == 0.0 {
            Self::ZERO
        } else {
            Self {
                sign: if v > 0.0 { 1 } else { -1 },
                log_magnitude: v.abs().ln(),
            }
        }
    }

    pub fn from_parts(sign: i8, log_magnitude: f64) -> Self {
        debug_assert!(matches!(sign, -1..=1));
        if sign == 0 {
            Self::ZERO
        } else {
            Self {
                sign,
                log_magnitude,
            }
        }
    }

    pub fn sign(self) -> i8 {
        self.sign
    }

    pub fn log_magnitude(self) -> f64 {
        self.log_magnitude
    }

    /// Back to a plain double; underflows (overflows) to 0 (±∞) outside
    /// representable range.
    pub fn value(self) -> f64 {
        f64::from(self.sign) * self.log_magnitude.exp()
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    pub fn scale(self, factor: f64) -> Self {
        self * Self::from_value(factor)
    }

    /// Effective sign: magnitudes at the −∞ log floor compare as zero.
    fn sign_key(self) -> i8 {
        if self.log_magnitude == f64::NEG_INFINITY {
            0
        } else {
            self.sign
        }
    }

    /// Total order consistent with the encoded real values.
    pub fn compare(self, other: Self) -> Ordering {
        let (sa, sb) = (self.sign_key(), other.sign_key());
        match sa.cmp(&sb) {
            Ordering::Equal => {}
            ord => return ord,
        }
        match sa {
            1 => self.log_magnitude.total_cmp(&other.log_magnitude),
            -1 => other.log_magnitude.total_cmp(&self.log_magnitude),
            _ => Ordering::Equal,
        }
    }

    /// `next ≤ self` up to a multiplicative slack `e^{slack_log}`.
    pub fn nonincreasing_to(self, next: Self, slack_log: f64) -> bool {
        let (sa, sb) = (self.sign_key(), next.sign_key());
        if sb < sa {
            return true;
        }
        if sb > sa {
            return false;
        }
        match sa {
            1 => next.log_magnitude <= self.log_magnitude + slack_log,
            -1 => next.log_magnitude >= self.log_magnitude - slack_log,
            _ => true,
        }
    }

    /// Relative difference of the encoded values computed in log space,
    /// meaningful when both are nonzero: `|exp(Δlog) − 1|` for equal
    /// signs, `∞` for opposite signs.
    pub fn relative_difference(self, other: Self) -> f64 {
        if self.is_zero() && other.is_zero() {
            return 0.0;
        }
        if self.sign != other.sign {
            return f64::INFINITY;
        }
        let d = self.log_magnitude - other.log_magnitude;
        d.exp_m1().abs()
    }
}

impl std::ops::Mul for SignedLogValue {
    type Output = SignedLogValue;

    fn mul(self, other: Self) -> Self {
        Self::from_parts(
            self.sign * other.sign,
            self.log_magnitude + other.log_magnitude,
        )
    }
}

// ---------------------------------------------------------------------
// Field expressions, generic over the scalar
// ---------------------------------------------------------------------

/// `L = log(1/r)`.
pub fn log_inv_r<T: Real>(r: T) -> T {
    -r.ln()
}

/// Amplitude `a(r) = L / (1 + r²L²)`.
pub fn amplitude<T: Real>(r: T) -> T {
    let l = log_inv_r(r);
    l / (T::constant(1.0) + r * r * l * l)
}

/// Phase `φ(r, θ) = θ − log L`, never reduced mod 2π.
pub fn phase<T: Real>(r: T, theta: T) -> T {
    theta - log_inv_r(r).ln()
}

/// Factored profile `g(r, θ) = 1 − a(r)·sin φ`, so that `f = e^{−1/r}·g`.
pub fn sine_profile<T: Real>(r: T, theta: T) -> T {
    T::constant(1.0) - amplitude(r) * phase(r, theta).sin()
}

/// `f(r, θ)` evaluated directly; representable only for `r ≳ 1/709`.
pub fn cost_direct<T: Real>(r: T, theta: T) -> T {
    (-(T::constant(1.0) / r)).exp() * sine_profile(r, theta)
}

/// Scaling profile `b(r) = (1/r²)·e^{−1/r}·L²/(1 + r²L²)`, direct form.
pub fn scaling_direct<T: Real>(r: T) -> T {
    let l = log_inv_r(r);
    (-(T::constant(1.0) / r)).exp() * l * l
        / (r * r * (T::constant(1.0) + r * r * l * l))
}

/// Amplitude reparametrized by `ρ = log(1/r)`: stable for arbitrarily
/// deep `ρ`, where `r²L²` is computed as `e^{−2ρ}ρ²`.
pub fn amplitude_rho<T: Real>(rho: T) -> T {
    let w = (-(rho + rho)).exp() * rho * rho;
    rho / (T::constant(1.0) + w)
}

/// Factored profile in the log-polar chart: `g̃(ρ, θ) = 1 − ã(ρ)·sin(θ − log ρ)`.
pub fn profile_rho<T: Real>(rho: T, theta: T) -> T {
    T::constant(1.0) - amplitude_rho(rho) * (theta - rho.ln()).sin()
}

// ---------------------------------------------------------------------
// The displayed closed-form expressions
// ---------------------------------------------------------------------

/// The four displayed closed forms attached to the spiral field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DisplayedExpr {
    /// `a(r) = L/(1 + r²L²)`.
    Amplitude,
    /// `b(r) = (1/r²) e^{−1/r} L²/(1 + r²L²)`.
    Scaling,
    /// `∂f/∂r` on the curve: `e^{−1/r} L²/(1 + r²L²)`.
    RadialOnCurve,
    /// `∂f/∂θ` on the curve: `−e^{−1/r} L/(1 + r²L²)`.
    AngularOnCurve,
}

/// Evaluate a displayed closed form at radius `r ∈ (0, 1/2]`.
///
/// Entries carrying the `e^{−1/r}` factor come back in signed-log form;
/// the plain amplitude is encoded losslessly the same way.
pub fn displayed_expr(which: DisplayedExpr, r: f64) -> Result<SignedLogValue, FieldError> {
    if !(r > 0.0 && r <= SPIRAL_DOMAIN_RADIUS) {
        return Err(FieldError::OutsideDomain {
            r,
            domain_radius: SPIRAL_DOMAIN_RADIUS,
        });
    }
    let l = -r.ln();
    let denom = 1.0 + r * r * l * l;
    Ok(match which {
        DisplayedExpr::Amplitude => SignedLogValue::from_value(l / denom),
        DisplayedExpr::Scaling => {
            SignedLogValue::from_parts(1, 2.0 * l - 1.0 / r + (l * l / denom).ln())
        }
        DisplayedExpr::RadialOnCurve => {
            SignedLogValue::from_parts(1, -1.0 / r + (l * l / denom).ln())
        }
        DisplayedExpr::AngularOnCurve => {
            SignedLogValue::from_parts(-1, -1.0 / r + (l / denom).ln())
        }
    })
}

// ---------------------------------------------------------------------
// Field handle
// ---------------------------------------------------------------------

/// Which cost field a [`FieldHandle`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldKind {
    /// Spiral field; partials from the dual-number oracle applied to the
    /// defining expression.
    Spiral,
    /// Spiral field; partials transcribed verbatim from the closed-form
    /// display (cos-term coefficient `1/(r² log(1/r))` included).
    DisplayedSpiral,
    /// Control field `scale·r²/2`, defined on the whole plane.
    QuadraticBowl { scale: f64 },
}

/// Gradient-to-flow convention for the second polar component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientConvention {
    /// Coordinate flow of the Euclidean metric: `θ̇ = −f_θ/r²`.
    Euclidean,
    /// Orthonormal-frame components `(f_r, f_θ/r)` read directly as
    /// coordinate velocities: `θ̇ = −f_θ/r`.
    Frame,
}

/// A scalar cost field with oracle-backed partials and an
/// underflow-free direction field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldHandle {
    kind: FieldKind,
    domain_radius: f64,
}

/// Polar gradient components in signed-log form.
#[derive(Debug, Clone, Copy)]
pub struct PolarGradient {
    pub f_r: SignedLogValue,
    pub f_theta: SignedLogValue,
}

/// Unit descent direction in the log-polar chart.
///
/// `(d_rho, d_theta)` has unit Euclidean norm in chart coordinates; the
/// conformal factor `e^{−ρ}` that maps chart length to plane length is
/// applied by the integrator. `factored_magnitude` is the plane gradient
/// norm divided by the common positive factor `e^{−1/r}` (for the bowl,
/// which has no such factor, it is the raw gradient norm); it overflows
/// to `+∞` for `ρ` beyond ~354, which only ever makes the critical-point
/// floor *harder* to trigger.
#[derive(Debug, Clone, Copy)]
pub struct DirectionSample {
    pub d_rho: f64,
    pub d_theta: f64,
    pub factored_magnitude: f64,
}

/// Descent chart pair with a per-kind positive rescale chosen so the
/// components stay representable at any depth.
///
/// `(v_rho, v_theta)` is proportional (positive factor) to the
/// Euclidean-convention descent velocities `(ρ̇, θ̇) = (f_r/r, −f_θ/r²)`;
/// the frame-convention pair is `(v_rho, v_theta·r)`. The true factored
/// gradient magnitude is `mag_factor · hypot(v_rho, v_theta)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ChartComponents {
    pub v_rho: f64,
    pub v_theta: f64,
    pub mag_factor: f64,
}

impl FieldHandle {
    pub fn spiral() -> Self {
        Self {
            kind: FieldKind::Spiral,
            domain_radius: SPIRAL_DOMAIN_RADIUS,
        }
    }

    pub fn displayed_spiral() -> Self {
        Self {
            kind: FieldKind::DisplayedSpiral,
            domain_radius: SPIRAL_DOMAIN_RADIUS,
        }
    }

    pub fn quadratic_bowl() -> Self {
        Self::quadratic_bowl_scaled(1.0)
    }

    pub fn quadratic_bowl_scaled(scale: f64) -> Self {
        assert!(scale > 0.0 && scale.is_finite());
        Self {
            kind: FieldKind::QuadraticBowl { scale },
            domain_radius: f64::INFINITY,
        }
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn domain_radius(&self) -> f64 {
        self.domain_radius
    }

    fn check_radius(&self, r: f64, grace: f64) -> Result<(), FieldError> {
        if r.is_nan() || r <= 0.0 || r > self.domain_radius * grace {
            return Err(FieldError::OutsideDomain {
                r,
                domain_radius: self.domain_radius,
            });
        }
        Ok(())
    }

    /// Field value at a polar point, in signed-log form.
    pub fn eval(&self, p: PolarPoint) -> Result<SignedLogValue, FieldError> {
        self.check_radius(p.r, 1.0)?;
        Ok(match self.kind {
            FieldKind::QuadraticBowl { scale } => {
                SignedLogValue::from_parts(1, (scale * 0.5).ln() + 2.0 * p.r.ln())
            }
            FieldKind::Spiral | FieldKind::DisplayedSpiral => {
                let g = sine_profile(p.r, p.theta);
                SignedLogValue::from_parts(sign_of(g), -1.0 / p.r + g.abs().ln())
            }
        })
    }

    /// Field value at a log-polar point; usable at depths where `r`
    /// itself underflows.
    pub fn eval_log(&self, q: LogPolarPoint) -> Result<SignedLogValue, FieldError> {
        self.check_radius_log(q.rho, 1.0)?;
        Ok(match self.kind {
            FieldKind::QuadraticBowl { scale } => {
                SignedLogValue::from_parts(1, (scale * 0.5).ln() - 2.0 * q.rho)
            }
            FieldKind::Spiral | FieldKind::DisplayedSpiral => {
                let g = profile_rho(q.rho, q.theta);
                SignedLogValue::from_parts(sign_of(g), -q.rho.exp() + g.abs().ln())
            }
        })
    }

    /// [`Self::eval_log`] with the integrator grace band; trial states
    /// may sit a rounding hair past the domain boundary.
    pub(crate) fn eval_log_relaxed(&self, q: LogPolarPoint) -> Result<SignedLogValue, FieldError> {
        self.check_radius_log(q.rho, DOMAIN_GRACE)?;
        match self.kind {
            FieldKind::QuadraticBowl { scale } => Ok(SignedLogValue::from_parts(
                1,
                (scale * 0.5).ln() - 2.0 * q.rho,
            )),
            FieldKind::Spiral | FieldKind::DisplayedSpiral => {
                let g = profile_rho(q.rho, q.theta);
                Ok(SignedLogValue::from_parts(
                    sign_of(g),
                    -q.rho.exp() + g.abs().ln(),
                ))
            }
        }
    }

    fn check_radius_log(&self, rho: f64, grace: f64) -> Result<(), FieldError> {
        if !rho.is_finite() {
            return Err(FieldError::NotRepresentable { r: (-rho).exp() });
        }
        let rho_min = -(self.domain_radius * grace).ln();
        if self.domain_radius.is_finite() && rho < rho_min {
            return Err(FieldError::OutsideDomain {
                r: (-rho).exp(),
                domain_radius: self.domain_radius,
            });
        }
        Ok(())
    }

    /// Polar gradient `(∂f/∂r, ∂f/∂θ)` in signed-log form.
    ///
    /// For the oracle spiral the partials of the factored profile `g`
    /// come from dual-number differentiation of the defining expression
    /// and are assembled as `f_r = e^{−1/r}(g/r² + g_r)`,
    /// `f_θ = e^{−1/r}·g_θ`; no derivative is hand-transcribed. The
    /// displayed spiral instead assembles the transcribed display, with
    /// `a'(r)` still taken from the dual oracle.
    pub fn polar_partials(&self, p: PolarPoint) -> Result<PolarGradient, FieldError> {
        self.check_radius(p.r, 1.0)?;
        match self.kind {
            FieldKind::QuadraticBowl { scale } => Ok(PolarGradient {
                f_r: SignedLogValue::from_value(scale * p.r),
                f_theta: SignedLogValue::ZERO,
            }),
            FieldKind::Spiral => {
                let g = sine_profile(p.r, p.theta);
                let g_r = dual_partial_at(sine_profile::<Dual>, p.r, p.theta, Var::R);
                let g_theta = dual_partial_at(sine_profile::<Dual>, p.r, p.theta, Var::Theta);
                let radial = g / (p.r * p.r) + g_r;
                if !radial.is_finite() {
                    return Err(FieldError::NotRepresentable { r: p.r });
                }
                Ok(PolarGradient {
                    f_r: factored_to_signed_log(radial, p.r),
                    f_theta: factored_to_signed_log(g_theta, p.r),
                })
            }
            FieldKind::DisplayedSpiral => {
                let g = sine_profile(p.r, p.theta);
                let a = amplitude(p.r);
                let a_prime = dual_partial_at(|r, _| amplitude(r), p.r, p.theta, Var::R);
                let l = -p.r.ln();
                let phi = phase(p.r, p.theta);
                let (sin_phi, cos_phi) = phi.sin_cos();
                let radial =
                    g / (p.r * p.r) - a_prime * sin_phi - a * cos_phi / (p.r * p.r * l);
                if !radial.is_finite() {
                    return Err(FieldError::NotRepresentable { r: p.r });
                }
                Ok(PolarGradient {
                    f_r: factored_to_signed_log(radial, p.r),
                    f_theta: factored_to_signed_log(-a * cos_phi, p.r),
                })
            }
        }
    }

    /// Descent chart components in depth-stable scaling; see
    /// [`ChartComponents`]. Spiral kinds are computed through `ρ`-space
    /// expressions, so no intermediate `1/r` or `1/r²` ever forms.
    pub(crate) fn chart_components(
        &self,
        q: LogPolarPoint,
        grace: f64,
    ) -> Result<ChartComponents, FieldError> {
        self.check_radius_log(q.rho, grace)?;
        Ok(match self.kind {
            // (ρ̇, θ̇) ∝ (f_r/r, 0) = (scale, 0); |∇f| = scale·r.
            FieldKind::QuadraticBowl { scale } => ChartComponents {
                v_rho: 1.0,
                v_theta: 0.0,
                mag_factor: scale * (-q.rho).exp(),
            },
            // v = (r²·f_r, −r·f_θ)/E: with f = E·g and g_r = −g̃_ρ/r this
            // is (g − r·g̃_ρ, −r·g̃_θ); magnitude recovers via e^{2ρ}.
            FieldKind::Spiral => {
                let r = (-q.rho).exp();
                let g = profile_rho(q.rho, q.theta);
                let g_rho = dual_partial_at(profile_rho::<Dual>, q.rho, q.theta, Var::R);
                let g_theta = dual_partial_at(profile_rho::<Dual>, q.rho, q.theta, Var::Theta);
                ChartComponents {
                    v_rho: g - r * g_rho,
                    v_theta: -r * g_theta,
                    mag_factor: (2.0 * q.rho).exp(),
                }
            }
            // Same scaling applied to the transcribed display, whose
            // radial part is g/r² − a'(r)·sinφ − a·cosφ/(r²·L); the dual
            // oracle supplies ã'(ρ) and r²·a'(r) = −r·ã'(ρ).
            //
            // On the curve the leading terms cancel catastrophically
            // (1 − 1/(1+w) with w = r²ρ² far below 1), so the radial
            // part is regrouped exactly as
            //   w/(1+w) + (1−cosφ)/(1+w) + (r·ã' − a)·sinφ
            // with 1 − cosφ = 2·sin²(φ/2).
            FieldKind::DisplayedSpiral => {
                let r = (-q.rho).exp();
                let rr = r * q.rho;
                let w = rr * rr;
                let one_plus_w = 1.0 + w;
                let a = q.rho / one_plus_w;
                let a_rho = dual_partial_at(|rho, _| amplitude_rho(rho), q.rho, q.theta, Var::R);
                let phi = q.theta - q.rho.ln();
                let (sin_phi, cos_phi) = phi.sin_cos();
                let versed = 2.0 * (0.5 * phi).sin().powi(2); // 1 − cosφ
                ChartComponents {
                    v_rho: (w + versed) / one_plus_w + (r * a_rho - a) * sin_phi,
                    v_theta: r * a * cos_phi,
                    mag_factor: (2.0 * q.rho).exp(),
                }
            }
        })
    }

    /// Unit descent direction in the log-polar chart with the common
    /// positive factor cancelled analytically.
    pub fn direction_field(
        &self,
        q: LogPolarPoint,
        convention: GradientConvention,
    ) -> Result<DirectionSample, FieldError> {
        self.direction_field_with_floor(q, convention, 0.0)
    }

    /// [`Self::direction_field`] with a configurable critical-point
    /// floor on the factored gradient magnitude.
    pub fn direction_field_with_floor(
        &self,
        q: LogPolarPoint,
        convention: GradientConvention,
        floor: f64,
    ) -> Result<DirectionSample, FieldError> {
        self.direction_sample(q, convention, floor, 1.0)
    }

    pub(crate) fn direction_sample(
        &self,
        q: LogPolarPoint,
        convention: GradientConvention,
        floor: f64,
        grace: f64,
    ) -> Result<DirectionSample, FieldError> {
        let c = self.chart_components(q, grace)?;
        let v = match convention {
            GradientConvention::Euclidean => (c.v_rho, c.v_theta),
            GradientConvention::Frame => (c.v_rho, c.v_theta * (-q.rho).exp()),
        };
        let norm = v.0.hypot(v.1);
        if !norm.is_finite() {
            return Err(FieldError::NotRepresentable { r: (-q.rho).exp() });
        }
        let factored_magnitude = c.mag_factor * c.v_rho.hypot(c.v_theta);
        if norm == 0.0 {
            return Err(FieldError::CriticalPoint { rho: q.rho });
        }
        if factored_magnitude < floor {
            return Err(FieldError::BelowGradientFloor {
                magnitude: factored_magnitude,
                floor,
            });
        }
        Ok(DirectionSample {
            d_rho: v.0 / norm,
            d_theta: v.1 / norm,
            factored_magnitude,
        })
    }
}

fn sign_of(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// `e^{−1/r}·factored` as a signed-log value.
fn factored_to_signed_log(factored: f64, r: f64) -> SignedLogValue {
    if factored == 0.0 {
        SignedLogValue::ZERO
    } else {
        SignedLogValue::from_parts(sign_of(factored), -1.0 / r + factored.abs().ln())
    }
}
