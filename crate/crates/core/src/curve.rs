//! Closed forms and quadrature for the spiral curve
//! `γ(t) = (r, θ) = (1/t, log log t)` on `t ∈ [2, ∞)`.
//!
//! The curve converges to the origin, has finite length, and its tail
//! length past parameter `s` is bracketed by `1/s` (the straight-line
//! distance) and `1/s + 1/(s log²s)`. Its unit secants from the origin
//! are `(1, log log t)`: the angle is unbounded, so the secants never
//! settle.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::geom::PolarPoint;

#[derive(Debug, Error)]
pub enum CurveError {
    #[error("curve parameter must satisfy t >= 2, got {0}")]
    ParameterBelowDomain(f64),
    #[error("quadrature tolerance {tol:.3e} not met: error estimate {err:.3e} after {intervals} intervals")]
    ToleranceNotMet { tol: f64, err: f64, intervals: usize },
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("tail length {length:.12e} violates its certified bracket [{lower:.12e}, {upper:.12e}]")]
    BracketViolation { length: f64, lower: f64, upper: f64 },
}

/// Curve parameter, guaranteed `t ≥ 2`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct GammaParam(f64);

impl GammaParam {
    pub fn new(t: f64) -> Result<Self, CurveError> {
        if t.is_nan() || t < 2.0 {
            return Err(CurveError::ParameterBelowDomain(t));
        }
        Ok(Self(t))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Default absolute tolerance for [`tail_length`]; far below the gap
/// between the two tail bounds anywhere on the domain.
pub const DEFAULT_TAIL_TOL: f64 = 1e-10;

/// `γ(t) = (1/t, log log t)` in polar coordinates.
pub fn gamma_point(t: GammaParam) -> PolarPoint {
    let t = t.get();
    PolarPoint::new(1.0 / t, t.ln().ln())
}

/// Coordinate velocity `γ'(t) = (dr/dt, dθ/dt) = (−1/t², 1/(t log t))`.
pub fn gamma_velocity(t: GammaParam) -> (f64, f64) {
    let t = t.get();
    (-1.0 / (t * t), 1.0 / (t * t.ln()))
}

/// Plane speed `‖γ'(t)‖ = (1/t²)·sqrt(1 + 1/log²t)`.
///
/// The `1/t²` factor is pulled out of the root so the value stays exact
/// for large `t` instead of squaring `1/t²` into the underflow range.
pub fn gamma_speed(t: GammaParam) -> f64 {
    let t = t.get();
    let l = t.ln();
    (1.0 + 1.0 / (l * l)).sqrt() / (t * t)
}

/// Unwrapped angle of the unit secant from the origin at parameter `t`,
/// which is `log log t`.
pub fn secant_angle(t: GammaParam) -> f64 {
    t.get().ln().ln()
}

/// Same as [`secant_angle`] but with the parameter passed as
/// `rho_t = log t`, so that astronomically large `t` (one full winding
/// already needs `t ≈ e^{535.5}`) stays representable.
pub fn secant_angle_from_log_param(rho_t: f64) -> f64 {
    debug_assert!(rho_t >= std::f64::consts::LN_2);
    rho_t.ln()
}

/// Tail arc length `σ(s) = ∫_s^∞ ‖γ'(t)‖ dt` with certified bounds.
#[derive(Debug, Clone, Copy)]
pub struct TailLengthResult {
    pub s: f64,
    pub length: f64,
    pub abs_error_estimate: f64,
}

impl TailLengthResult {
    /// Lower bound `1/s`: the straight-line distance to the origin.
    pub fn lower_bound(&self) -> f64 {
        1.0 / self.s
    }

    /// Upper bound `1/s + 1/(s log²s)`.
    pub fn upper_bound(&self) -> f64 {
        let l = self.s.ln();
        1.0 / self.s + 1.0 / (self.s * l * l)
    }
}

/// Remaining arc length of γ past parameter `s`, to absolute tolerance
/// `tol`.
///
/// The improper upper limit is removed by the substitution `u = 1/t`,
/// which maps the integral onto `∫_0^{1/s} sqrt(1 + 1/log²(1/u)) du`
/// with a bounded integrand (limit 1 at `u = 0`).
pub fn tail_length(s: f64, tol: f64) -> Result<TailLengthResult, CurveError> {
    if s.is_nan() || s < 2.0 {
        return Err(CurveError::ParameterBelowDomain(s));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(CurveError::BadTolerance(tol));
    }
    let integrand = |u: f64| {
        if u <= 0.0 {
            return 1.0;
        }
        let l = -u.ln(); // log(1/u)
        (1.0 + 1.0 / (l * l)).sqrt()
    };
    let (length, abs_error_estimate) = adaptive_quadrature(&integrand, 0.0, 1.0 / s, tol, 4000)?;
    let result = TailLengthResult {
        s,
        length,
        abs_error_estimate,
    };
    // The bracket holds mathematically; a violation beyond the error
    // margin means the quadrature is lying.
    if length + abs_error_estimate < result.lower_bound()
        || length - abs_error_estimate > result.upper_bound()
    {
        return Err(CurveError::BracketViolation {
            length,
            lower: result.lower_bound(),
            upper: result.upper_bound(),
        });
    }
    Ok(result)
}

// ---------------------------------------------------------------------
// Adaptive Gauss–Kronrod quadrature
// ---------------------------------------------------------------------

// 15-point Kronrod abscissae (positive half) with the embedded 7-point
// Gauss rule on the even-indexed nodes.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_33,
    0.949_107_912_342_758_524_526_189_684_047_85,
    0.864_864_423_359_769_072_789_712_788_640_93,
    0.741_531_185_599_394_439_863_864_773_280_79,
    0.586_087_235_467_691_130_294_144_838_258_73,
    0.405_845_151_377_397_166_906_606_412_076_96,
    0.207_784_955_007_898_467_600_689_403_773_24,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_97,
    0.063_092_092_629_978_553_290_700_663_189_2,
    0.104_790_010_322_250_183_839_876_322_541_52,
    0.140_653_259_715_525_918_745_189_590_510_24,
    0.169_004_726_639_267_902_826_583_426_598_55,
    0.190_350_578_064_785_409_913_256_402_421_01,
    0.204_432_940_075_298_892_414_161_999_234_65,
    0.209_482_141_084_727_828_012_999_174_891_71,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_08,
    0.279_705_391_489_276_667_901_467_771_423_78,
    0.381_830_050_505_118_944_950_369_775_488_98,
    0.417_959_183_673_469_387_755_102_040_816_33,
];

/// One Gauss–Kronrod 15(7) panel: returns (integral, error estimate).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);

    let mut fv = [[0.0f64; 2]; 7];
    let mut res_kronrod = fc * WGK[7];
    // The center is the 7th Gauss node.
    let mut res_gauss = fc * WG[3];
    let mut res_abs = fc.abs() * WGK[7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv[j] = [f1, f2];
        res_kronrod += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = res_kronrod * 0.5;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv[j][0] - mean).abs() + (fv[j][1] - mean).abs());
    }
    let result = res_kronrod * half;
    res_abs *= half.abs();
    res_asc *= half.abs();

    // QUADPACK-style error rescaling.
    let mut err = ((res_kronrod - res_gauss) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / res_asc).powf(1.5);
        err = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (result, err)
}

#[derive(Debug)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive quadrature: repeatedly bisect the panel with the
/// largest error estimate until the summed estimate meets `tol`.
pub fn adaptive_quadrature<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
    max_panels: usize,
) -> Result<(f64, f64), CurveError> {
    let (value, error) = gk15(f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value, error });
    let mut total_error = error;

    while total_error > tol && heap.len() < max_panels {
        let worst = heap.pop().expect("heap is never empty here");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel no longer bisectable in f64; keep it as-is.
            total_error -= worst.error;
            let kept = Panel {
                error: 0.0,
                ..worst
            };
            heap.push(kept);
            continue;
        }
        total_error -= worst.error;
        let (lv, le) = gk15(f, worst.a, mid);
        let (rv, re) = gk15(f, mid, worst.b);
        total_error += le + re;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: lv,
            error: le,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: rv,
            error: re,
        });
    }

    if total_error > tol {
        return Err(CurveError::ToleranceNotMet {
            tol,
            err: total_error,
            intervals: heap.len(),
        });
    }
    // Sum smallest-first to limit cancellation.
    let mut panels: Vec<Panel> = heap.into_vec();
    panels.sort_by(|p, q| p.value.abs().total_cmp(&q.value.abs()));
    let sum = panels.iter().map(|p| p.value).sum();
    Ok((sum, total_error))
}
