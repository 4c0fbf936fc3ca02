//! Trajectory geometry: arc length, length-distance ratio, secant
//! angles, winding and tangent-existence oscillation.
//!
//! Everything here works on a [`SampledPath`], which both integrated
//! trajectories and closed-form-sampled curves convert into, so the
//! analyzer can be validated on inputs whose geometry is known exactly.

use serde::Serialize;
use thiserror::Error;

use crate::flow::Trajectory;
use crate::geom::{lift_angle, CartesianPoint, LogPolarPoint, PolarPoint};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("samples are not strictly ordered in arc length at index {index}")]
    UnorderedSamples { index: usize },
}

/// One path sample: arc-length station and log-polar position.
#[derive(Debug, Clone, Copy)]
pub struct PathSample {
    pub s: f64,
    pub q: LogPolarPoint,
}

/// Ordered path samples with nondecreasing arc length.
#[derive(Debug, Clone)]
pub struct SampledPath {
    samples: Vec<PathSample>,
}

impl SampledPath {
    pub fn from_trajectory(traj: &Trajectory) -> Self {
        Self {
            samples: traj
                .samples
                .iter()
                .map(|t| PathSample { s: t.s, q: t.q })
                .collect(),
        }
    }

    /// Closed-form samples; the arc-length station is the cumulative
    /// chord length.
    pub fn from_polar_points(points: &[PolarPoint]) -> Self {
        Self::from_log_polar_points(
            &points.iter().map(|p| p.to_log_polar()).collect::<Vec<_>>(),
        )
    }

    pub fn from_log_polar_points(points: &[LogPolarPoint]) -> Self {
        let mut samples = Vec::with_capacity(points.len());
        let mut s = 0.0;
        let mut prev: Option<CartesianPoint> = None;
        for &q in points {
            let c = q.to_cartesian();
            if let Some(p) = prev {
                s += p.distance(c);
            }
            prev = Some(c);
            samples.push(PathSample { s, q });
        }
        Self { samples }
    }

    /// Build directly from stations and positions (e.g. a re-read CSV).
    pub fn from_samples(samples: Vec<PathSample>) -> Self {
        Self { samples }
    }

    pub fn samples(&self) -> &[PathSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    fn require(&self, need: usize) -> Result<(), AnalysisError> {
        if self.samples.len() < need {
            return Err(AnalysisError::TooFewSamples {
                need,
                got: self.samples.len(),
            });
        }
        for (i, w) in self.samples.windows(2).enumerate() {
            if w[1].s < w[0].s || w[0].s.is_nan() || w[1].s.is_nan() {
                return Err(AnalysisError::UnorderedSamples { index: i + 1 });
            }
        }
        Ok(())
    }
}

/// Cumulative Euclidean chord sums: entries `(s_k, Σ chords up to k)`;
/// the final entry carries the total chord length.
pub fn arclength_series(path: &SampledPath) -> Result<Vec<(f64, f64)>, AnalysisError> {
    path.require(2)?;
    let mut out = Vec::with_capacity(path.len());
    let mut cum = 0.0;
    let mut prev: Option<CartesianPoint> = None;
    for smp in path.samples() {
        let c = smp.q.to_cartesian();
        if let Some(p) = prev {
            cum += p.distance(c);
        }
        prev = Some(c);
        out.push((smp.s, cum));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RatioEntry {
    pub s: f64,
    pub ratio: f64,
}

/// Length-distance ratio series `σ(s)/|x(s) − limit|`.
#[derive(Debug, Clone, Serialize)]
pub struct LengthDistanceSeries {
    pub entries: Vec<RatioEntry>,
    /// Samples skipped because they coincide with the limit (distance
    /// underflowed to zero).
    pub skipped: usize,
    /// Straight-line gap from the last sample to the limit, used as the
    /// tail estimate for the truncated trajectory.
    pub terminal_gap: f64,
}

/// Remaining arc length over distance-to-limit per sample.
///
/// `σ(s_k)` is the chord length from sample `k` to the last sample plus
/// the straight terminal gap — the certified lower bound for the true
/// remaining length of the truncated trajectory.
pub fn length_distance_series(
    path: &SampledPath,
    limit: CartesianPoint,
) -> Result<LengthDistanceSeries, AnalysisError> {
    let series = arclength_series(path)?;
    let total = series.last().map_or(0.0, |e| e.1);
    let origin_limit = limit.x == 0.0 && limit.y == 0.0;
    let last = path.samples().last().expect("checked nonempty");
    let terminal_gap = distance_to_limit(last.q, limit, origin_limit);

    let mut entries = Vec::with_capacity(series.len());
    let mut skipped = 0usize;
    for (smp, (s, cum)) in path.samples().iter().zip(&series) {
        let dist = distance_to_limit(smp.q, limit, origin_limit);
        if dist == 0.0 {
            skipped += 1;
            continue;
        }
        let sigma = (total - cum) + terminal_gap;
        entries.push(RatioEntry {
            s: *s,
            ratio: sigma / dist,
        });
    }
    Ok(LengthDistanceSeries {
        entries,
        skipped,
        terminal_gap,
    })
}

fn distance_to_limit(q: LogPolarPoint, limit: CartesianPoint, origin_limit: bool) -> f64 {
    if origin_limit {
        q.radius()
    } else {
        q.to_cartesian().distance(limit)
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SecantEntry {
    pub s: f64,
    /// Unwrapped angle of the unit secant from the limit point.
    pub angle: f64,
    pub distance_to_limit: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SecantSeries {
    pub entries: Vec<SecantEntry>,
    pub skipped: usize,
}

/// Unit-secant angles from the limit, lifted to a continuous branch.
///
/// With the limit at the origin the secant of a polar sample is `(1, θ)`
/// by definition, so the unwrapped state angle is used directly — this
/// stays exact at depths where the Cartesian position underflows.
pub fn secant_series(
    path: &SampledPath,
    limit: CartesianPoint,
) -> Result<SecantSeries, AnalysisError> {
    path.require(1)?;
    let origin_limit = limit.x == 0.0 && limit.y == 0.0;
    let mut entries = Vec::with_capacity(path.len());
    let mut skipped = 0usize;
    let mut prev_angle: Option<f64> = None;
    for smp in path.samples() {
        let (angle, dist) = if origin_limit {
            (smp.q.theta, smp.q.radius())
        } else {
            let c = smp.q.to_cartesian();
            let dist = c.distance(limit);
            if dist == 0.0 {
                skipped += 1;
                continue;
            }
            let principal = (c.y - limit.y).atan2(c.x - limit.x);
            let angle = match prev_angle {
                Some(prev) => lift_angle(prev, principal),
                None => principal,
            };
            (angle, dist)
        };
        prev_angle = Some(angle);
        entries.push(SecantEntry {
            s: smp.s,
            angle,
            distance_to_limit: dist,
        });
    }
    Ok(SecantSeries { entries, skipped })
}

/// Report thresholds; the source material gives no finite-data criterion
/// for "has a tangent", so both are explicit configuration.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ReportConfig {
    /// Fraction of total arc length forming the trailing window for the
    /// oscillation measure.
    pub trailing_fraction: f64,
    /// Oscillation below this (radians) counts as a tangent existing.
    pub tangent_threshold: f64,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            trailing_fraction: 0.1,
            tangent_threshold: 1e-2,
        }
    }
}

/// Geometry summary of a path relative to its limit point.
#[derive(Debug, Clone, Serialize)]
pub struct GeometryReport {
    /// Total chord length over the recorded samples.
    pub total_length: f64,
    /// Straight-line gap from the last sample to the limit.
    pub terminal_gap: f64,
    pub ratio_series: Vec<RatioEntry>,
    pub skipped_ratio_samples: usize,
    /// Total unwrapped secant-angle change over 2π.
    pub winding_count: f64,
    /// sup − inf of the secant angle over the trailing window.
    pub oscillation: f64,
    pub tangent_exists: bool,
}

pub fn geometry_report(
    path: &SampledPath,
    limit: CartesianPoint,
    cfg: &ReportConfig,
) -> Result<GeometryReport, AnalysisError> {
    let ratios = length_distance_series(path, limit)?;
    let secants = secant_series(path, limit)?;
    let series = arclength_series(path)?;
    let total_length = series.last().map_or(0.0, |e| e.1);

    let (winding_count, oscillation) = if secants.entries.is_empty() {
        (0.0, 0.0)
    } else {
        let first = secants.entries.first().expect("nonempty").angle;
        let last = secants.entries.last().expect("nonempty").angle;
        let winding = (last - first) / (2.0 * std::f64::consts::PI);

        let s_total = path.samples().last().expect("nonempty").s;
        let window_start = s_total * (1.0 - cfg.trailing_fraction);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for e in secants.entries.iter().filter(|e| e.s >= window_start) {
            lo = lo.min(e.angle);
            hi = hi.max(e.angle);
        }
        let osc = if hi >= lo { hi - lo } else { 0.0 };
        (winding, osc)
    };

    Ok(GeometryReport {
        total_length,
        terminal_gap: ratios.terminal_gap,
        ratio_series: ratios.entries,
        skipped_ratio_samples: ratios.skipped,
        winding_count,
        oscillation,
        tangent_exists: oscillation < cfg.tangent_threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{gamma_point, tail_length, GammaParam};
    use crate::log_spaced;

    fn ray_path(angle: f64, n: usize) -> SampledPath {
        // Straight ray from r = 0.6 down to r = 0.1 at fixed angle.
        let pts: Vec<PolarPoint> = (0..n)
            .map(|i| PolarPoint::new(0.6 - 0.5 * i as f64 / (n - 1) as f64, angle))
            .collect();
        SampledPath::from_polar_points(&pts)
    }

    #[test]
    fn ray_chord_total() {
        let path = ray_path(0.927_295_218_001_612_2, 101);
        let series = arclength_series(&path).unwrap();
        assert!((series.last().unwrap().1 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn two_sample_degenerate_path() {
        let pts = [PolarPoint::new(0.5, 0.2), PolarPoint::new(0.3, 0.2)];
        let path = SampledPath::from_polar_points(&pts);
        let series = arclength_series(&path).unwrap();
        assert_eq!(series.len(), 2);
        assert!((series[1].1 - 0.2).abs() < 1e-15);
    }

    #[test]
    fn one_sample_is_too_few() {
        let path = SampledPath::from_polar_points(&[PolarPoint::new(0.5, 0.0)]);
        assert!(matches!(
            arclength_series(&path),
            Err(AnalysisError::TooFewSamples { .. })
        ));
    }

    #[test]
    fn ray_toward_origin_has_unit_ratio() {
        let path = ray_path(1.1, 101);
        let ld = length_distance_series(&path, CartesianPoint::ORIGIN).unwrap();
        assert_eq!(ld.skipped, 0);
        for e in &ld.entries {
            assert!((e.ratio - 1.0).abs() < 1e-9, "ratio {} at s={}", e.ratio, e.s);
        }
    }

    #[test]
    fn gamma_chords_match_quadrature() {
        let ts: Vec<f64> = log_spaced(2.0, 1e6, 10_000);
        let pts: Vec<PolarPoint> = ts
            .iter()
            .map(|&t| gamma_point(GammaParam::new(t).unwrap()))
            .collect();
        let path = SampledPath::from_polar_points(&pts);
        let total = arclength_series(&path).unwrap().last().unwrap().1;
        let expected = tail_length(2.0, 1e-12).unwrap().length
            - tail_length(1e6, 1e-12).unwrap().length;
        assert!(
            (total - expected).abs() < 1e-4,
            "chord sum {total} vs quadrature {expected}"
        );
    }

    #[test]
    fn gamma_ratio_bracket() {
        let ts: Vec<f64> = log_spaced(2.0, 1e6, 2000);
        let pts: Vec<PolarPoint> = ts
            .iter()
            .map(|&t| gamma_point(GammaParam::new(t).unwrap()))
            .collect();
        let path = SampledPath::from_polar_points(&pts);
        let ld = length_distance_series(&path, CartesianPoint::ORIGIN).unwrap();
        assert_eq!(ld.entries.len(), ts.len());
        for (e, &t) in ld.entries.iter().zip(&ts) {
            let bound = 1.0 + 1.0 / t.ln().powi(2);
            assert!(e.ratio >= 1.0 - 1e-9, "ratio {} below 1 at t={t}", e.ratio);
            assert!(
                e.ratio <= bound + 1e-4,
                "ratio {} above bound {bound} at t={t}",
                e.ratio
            );
        }
    }

    #[test]
    fn log_spiral_ratio_tends_to_sqrt2() {
        // r = e^{−θ}: remaining length is √2·r, so the ratio is √2 once
        // θ is large. The window stays clear of the truncation end,
        // where the straight terminal-gap estimate replaces the true
        // tail and pulls the last ratios toward 1.
        let pts: Vec<PolarPoint> = (0..=3000)
            .map(|i| {
                let theta = 30.0 * i as f64 / 3000.0;
                PolarPoint::new((-theta).exp(), theta)
            })
            .collect();
        let path = SampledPath::from_polar_points(&pts);
        let ld = length_distance_series(&path, CartesianPoint::ORIGIN).unwrap();
        for e in &ld.entries[800..2000] {
            assert!(
                (e.ratio - std::f64::consts::SQRT_2).abs() < 1e-3,
                "ratio {} at s={}",
                e.ratio,
                e.s
            );
        }
    }

    #[test]
    fn ray_secants_and_report() {
        let angle = 0.927_295_218_001_612_2;
        let path = ray_path(angle, 101);
        let report =
            geometry_report(&path, CartesianPoint::ORIGIN, &ReportConfig::default()).unwrap();
        assert!((report.total_length - 0.5).abs() < 1e-12);
        assert_eq!(report.winding_count, 0.0);
        assert_eq!(report.oscillation, 0.0);
        assert!(report.tangent_exists);
        let secants = secant_series(&path, CartesianPoint::ORIGIN).unwrap();
        for e in secants.entries {
            assert_eq!(e.angle, angle);
        }
    }

    #[test]
    fn gamma_secant_angle_is_its_own_theta() {
        let ts = log_spaced(2.0, 1e9, 300);
        let pts: Vec<PolarPoint> = ts
            .iter()
            .map(|&t| gamma_point(GammaParam::new(t).unwrap()))
            .collect();
        let path = SampledPath::from_polar_points(&pts);
        let secants = secant_series(&path, CartesianPoint::ORIGIN).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for (e, &t) in secants.entries.iter().zip(&ts) {
            let expected = t.ln().ln();
            assert!((e.angle - expected).abs() <= 1e-12 * expected.abs().max(1.0));
            assert!(e.angle > prev, "winding must be monotone");
            prev = e.angle;
        }
    }

    #[test]
    fn general_limit_secants_lift_continuously() {
        // Circle around a non-origin limit: consecutive lifted angles
        // must never jump by π or more.
        let limit = CartesianPoint::new(0.2, -0.1);
        let pts: Vec<LogPolarPoint> = (0..200)
            .map(|i| {
                let phi = 4.0 * std::f64::consts::PI * i as f64 / 199.0;
                let c = CartesianPoint::new(limit.x + 0.05 * phi.cos(), limit.y + 0.05 * phi.sin());
                c.to_polar().to_log_polar()
            })
            .collect();
        let path = SampledPath::from_log_polar_points(&pts);
        let secants = secant_series(&path, limit).unwrap();
        for w in secants.entries.windows(2) {
            assert!((w[1].angle - w[0].angle).abs() < std::f64::consts::PI);
        }
        // Two full turns around the limit.
        let total = secants.entries.last().unwrap().angle - secants.entries[0].angle;
        assert!((total - 4.0 * std::f64::consts::PI).abs() < 1e-6);
    }

    #[test]
    fn winding_counts_from_closed_form() {
        // Sample γ by rho_t = log t from t = e (θ = 0) out to e^{2πk}.
        for (k, expected) in [(1.0f64, 1.0f64), (3.0, 3.0)] {
            let rho_end = (2.0 * std::f64::consts::PI * k).exp();
            let rhos = log_spaced(1.0, rho_end, 4000);
            let pts: Vec<LogPolarPoint> = rhos
                .iter()
                .map(|&rho_t| LogPolarPoint::new(rho_t, rho_t.ln()))
                .collect();
            let path = SampledPath::from_log_polar_points(&pts);
            let report =
                geometry_report(&path, CartesianPoint::ORIGIN, &ReportConfig::default()).unwrap();
            assert!(
                (report.winding_count - expected).abs() < 1e-3,
                "winding {} for k={k}",
                report.winding_count
            );
            assert!(!report.tangent_exists, "spiral must not report a tangent");
        }
    }

    #[test]
    fn deep_samples_skip_ratio_but_keep_angles() {
        // Beyond ρ ≈ 745 the radius underflows: ratio entries are
        // skipped and flagged while secant angles stay exact.
        let pts: Vec<LogPolarPoint> = (0..50)
            .map(|i| {
                let rho = 700.0 + 4.0 * i as f64;
                LogPolarPoint::new(rho, rho.ln())
            })
            .collect();
        let path = SampledPath::from_log_polar_points(&pts);
        let ld = length_distance_series(&path, CartesianPoint::ORIGIN).unwrap();
        assert!(ld.skipped > 0);
        let secants = secant_series(&path, CartesianPoint::ORIGIN).unwrap();
        assert_eq!(secants.entries.len(), 50);
    }
}
