//! Drivers that confront computed Green functions with Martin-kernel limit
//! theorems along straight rays and collect the results as convergence
//! reports.
//!
//! Every Green column is solved under the twist `a(q)` of the ray direction,
//! so values along the ray stay of order one and ratios and logarithms are
//! reassembled exactly from `G(z,z′) = G^a(z,z′)e^{a·(z−z′)}`.

use crate::boundary::{exit_distribution, h_function, HarmonicOptions};
use crate::error::{Error, Result};
use crate::geometry::{a_of_q, classify, legendre, Direction, Tolerances};
use crate::green::{green_column, log_martin_kernel, GreenColumn, TruncationBox, DEFAULT_MARGIN};
use crate::lattice::{half_plane_return_period, period2d, JumpMeasure, DEFAULT_PERIOD_HORIZON};
use crate::processes::{TauClass, WalkKind};
use crate::vector::{Point, Vec2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Slack allowed when checking that smoothed gaps do not increase.
pub const TREND_SLACK: f64 = 1e-6;

/// Default trimming fraction of the principal-part decomposition.
pub const DEFAULT_XI_DELTA: f64 = 0.3;

/// Default neighbourhood fraction of the uniform-bound scan.
pub const DEFAULT_SCAN_DELTA: f64 = 0.2;

/// Default radii of convergence experiments.
pub const DEFAULT_RADII: [f64; 4] = [20.0, 30.0, 40.0, 60.0];

/// A straight ray `r ↦ r·q` sampled at the given radii, projected to the lattice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RaySpec {
    /// Unit direction in the closed positive quarter circle.
    pub q: Vec2,
    /// Strictly increasing positive radii.
    pub radii: Vec<f64>,
}

impl RaySpec {
    /// Normalises `q` and checks the radii.
    pub fn new(q: Vec2, radii: &[f64]) -> Result<Self> {
        if !(q.x >= 0.0 && q.y >= 0.0 && q.norm() > 0.0 && q.norm().is_finite()) {
            return Err(Error::Input(format!("ray direction {q} is not in the positive quarter")));
        }
        if radii.is_empty() {
            return Err(Error::Input("a ray needs at least one radius".into()));
        }
        if radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) || radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Input(format!("radii {radii:?} must be positive and increasing")));
        }
        Ok(Self {
            q: q.normalized(),
            radii: radii.to_vec(),
        })
    }

    /// The lattice point of radius `r`: componentwise rounding of `r·q`,
    /// clamped to at least 1.
    pub fn point(&self, r: f64) -> Point {
        let c = |v: f64| ((r * v).round() as i64).max(1);
        Point::new(c(self.q.x), c(self.q.y))
    }

    pub fn points(&self) -> Vec<Point> {
        self.radii.iter().map(|&r| self.point(r)).collect()
    }
}

/// One observation of an experiment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub radius: f64,
    /// Lattice point `z_n` of the ray at this radius.
    pub ray_point: Point,
    /// The point at which the observation is made.
    pub test_point: Point,
    pub observed: f64,
    pub target: f64,
    /// `|observed − target|/|target|`, or the absolute gap when the target is 0.
    pub relative_gap: f64,
}

impl ReportRow {
    fn new(radius: f64, ray_point: Point, test_point: Point, observed: f64, target: f64) -> Self {
        Self {
            radius,
            ray_point,
            test_point,
            observed,
            target,
            relative_gap: relative_gap(observed, target),
        }
    }
}

/// `|observed − target|/|target|`, or the absolute gap when the target vanishes.
pub fn relative_gap(observed: f64, target: f64) -> f64 {
    let d = (observed - target).abs();
    if target.abs() > 1e-12 {
        d / target.abs()
    } else {
        d
    }
}

/// Trend and final-gap summary of a report.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    /// The smoothed gap of every test point does not increase over the last
    /// three radii.
    pub trend_ok: bool,
    /// Largest gap at the largest radius.
    pub final_gap: f64,
    /// Side conditions of the experiment (period agreement, reciprocity, ...).
    pub consistency_ok: bool,
}

impl Verdict {
    /// Whether the trend holds, the side conditions hold and the final gap is
    /// within `tolerance`.
    pub fn passes(&self, tolerance: f64) -> bool {
        self.trend_ok && self.consistency_ok && self.final_gap <= tolerance
    }
}

/// Per-radius table of one experiment with its verdict.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub experiment: String,
    /// Sorted by radius, then by test point order.
    pub rows: Vec<ReportRow>,
    pub verdict: Verdict,
    /// Named auxiliary numbers (fits, truncation errors, side checks).
    pub diagnostics: Vec<(String, f64)>,
}

impl ConvergenceReport {
    fn assemble(experiment: &str, rows: Vec<ReportRow>, diagnostics: Vec<(String, f64)>, consistency_ok: bool) -> Self {
        let verdict = Verdict {
            trend_ok: trend_holds(&rows),
            final_gap: final_gap(&rows),
            consistency_ok,
        };
        Self {
            experiment: experiment.to_string(),
            rows,
            verdict,
            diagnostics,
        }
    }

    pub fn diagnostic(&self, name: &str) -> Option<f64> {
        self.diagnostics.iter().find(|d| d.0 == name).map(|d| d.1)
    }

    /// Gap sequence of one test point, by increasing radius.
    pub fn gaps(&self, test_point: Point) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.test_point == test_point)
            .map(|r| r.relative_gap)
            .collect()
    }
}

/// Two-point moving averages of a sequence.
pub fn smoothed(gaps: &[f64]) -> Vec<f64> {
    if gaps.len() < 2 {
        return gaps.to_vec();
    }
    gaps.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
}

/// Whether the last three smoothed values are non-increasing (up to
/// [`TREND_SLACK`]).
pub fn smoothed_trend_ok(gaps: &[f64]) -> bool {
    let s = smoothed(gaps);
    let tail = &s[s.len().saturating_sub(3)..];
    tail.windows(2).all(|w| w[1] <= w[0] + TREND_SLACK)
}

fn test_points_in_order(rows: &[ReportRow]) -> Vec<Point> {
    let mut pts: Vec<Point> = Vec::new();
    for r in rows {
        if !pts.contains(&r.test_point) {
            pts.push(r.test_point);
        }
    }
    pts
}

fn trend_holds(rows: &[ReportRow]) -> bool {
    test_points_in_order(rows).into_iter().all(|p| {
        let gaps: Vec<f64> = rows.iter().filter(|r| r.test_point == p).map(|r| r.relative_gap).collect();
        smoothed_trend_ok(&gaps)
    })
}

fn final_gap(rows: &[ReportRow]) -> f64 {
    let r_max = rows.iter().map(|r| r.radius).fold(f64::NEG_INFINITY, f64::max);
    rows.iter()
        .filter(|r| r.radius == r_max)
        .map(|r| r.relative_gap)
        .fold(0.0, f64::max)
}

fn spectral_twist(measure: &JumpMeasure, q: Vec2) -> Result<Vec2> {
    Ok(a_of_q(measure, q)?.a)
}

/// Evaluates `per_radius` for every radius in parallel; rows follow the radii.
fn over_radii<F>(ray: &RaySpec, per_radius: F) -> Result<Vec<(Vec<ReportRow>, Vec<(String, f64)>)>>
where
    F: Fn(f64, Point) -> Result<(Vec<ReportRow>, Vec<(String, f64)>)> + Sync,
{
    ray.radii
        .par_iter()
        .map(|&r| per_radius(r, ray.point(r)))
        .collect()
}

fn flatten(parts: Vec<(Vec<ReportRow>, Vec<(String, f64)>)>) -> (Vec<ReportRow>, Vec<(String, f64)>) {
    let mut rows = Vec::new();
    let mut diags = Vec::new();
    for (r, d) in parts {
        rows.extend(r);
        diags.extend(d);
    }
    (rows, diags)
}

fn truncation_diag(radius: f64, col: &GreenColumn) -> (String, f64) {
    (format!("truncation_r{radius}"), col.relative_truncation_error)
}

/// Martin kernel of the quadrant-killed walk against the limit harmonic
/// function: observed `G₊(z,z_n)/G₊(z₀,z_n)`, target `h_{a(q)}(z)/h_{a(q)}(z₀)`.
pub fn quadrant_martin_convergence(
    measure: &JumpMeasure,
    ray: &RaySpec,
    test_points: &[Point],
    z0: Point,
) -> Result<ConvergenceReport> {
    let all: Vec<Point> = test_points.iter().copied().chain([z0]).collect();
    if let Some(p) = all.iter().find(|p| !WalkKind::Quadrant.contains(**p)) {
        return Err(Error::Input(format!("test point {p} outside the open quadrant")));
    }
    let h = h_function(measure, ray.q, &TruncationBox::around(&all, 0), &HarmonicOptions::default())?;
    let log_h = |p: Point| {
        h.log_value(p)
            .ok_or_else(|| Error::Input(format!("harmonic function not available at {p}")))
    };
    let log_h0 = log_h(z0)?;
    let targets: Vec<f64> = test_points
        .iter()
        .map(|&p| Ok((log_h(p)? - log_h0).exp()))
        .collect::<Result<_>>()?;
    let a = h.a.a;
    let parts = over_radii(ray, |r, zn| {
        let mut pts = all.clone();
        pts.push(zn);
        let col = green_column(measure, WalkKind::Quadrant, a, zn, &TruncationBox::around(&pts, DEFAULT_MARGIN))?;
        let rows = test_points
            .iter()
            .zip(&targets)
            .map(|(&p, &t)| Ok(ReportRow::new(r, zn, p, log_martin_kernel(&col, p, z0)?.exp(), t)))
            .collect::<Result<Vec<_>>>()?;
        Ok((rows, vec![truncation_diag(r, &col)]))
    })?;
    let (rows, mut diags) = flatten(parts);
    diags.push(("bracket_width".into(), h.bracket_width));
    Ok(ConvergenceReport::assemble("theorem1", rows, diags, !h.bracket_warning))
}

/// Martin kernel of the free walk: observed `G(z,z_n)/G(z₀,z_n)`, target
/// `exp(a(q)·(z − z₀))` (with `z₀ = 0` this is `exp(a(q)·z)`).
pub fn free_martin_kernel_check(
    measure: &JumpMeasure,
    ray: &RaySpec,
    test_points: &[Point],
    z0: Point,
) -> Result<ConvergenceReport> {
    let a = spectral_twist(measure, ray.q)?;
    let parts = over_radii(ray, |r, zn| {
        let mut pts: Vec<Point> = test_points.to_vec();
        pts.extend([z0, zn]);
        let col = green_column(measure, WalkKind::Free, a, zn, &TruncationBox::around(&pts, DEFAULT_MARGIN))?;
        let rows = test_points
            .iter()
            .map(|&p| {
                let observed = log_martin_kernel(&col, p, z0)?.exp();
                Ok(ReportRow::new(r, zn, p, observed, a.dot_point(p - z0).exp()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((rows, vec![truncation_diag(r, &col)]))
    })?;
    let (rows, diags) = flatten(parts);
    Ok(ConvergenceReport::assemble("neyspitzer", rows, diags, true))
}

/// The exponential decay rate `sup_{a∈D} a·q` of Green functions along `q`,
/// evaluated through the rate function as `inf_{t>0} t·(log φ)*(q/t)` — a route
/// independent of the spectral-point solver.
pub fn rate_by_conjugate(measure: &JumpMeasure, q: Vec2) -> Result<f64> {
    let f = |s: f64| {
        let t = s.exp();
        t * legendre(measure, q * (1.0 / t)).value
    };
    // q/t leaves the hull of the support for small t: find where f becomes finite.
    let (mut lo, mut hi) = (-30.0f64, 30.0f64);
    if !f(hi).is_finite() {
        return Err(Error::Input(format!("direction {q} has infinite rate")));
    }
    if !f(lo).is_finite() {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid).is_finite() {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lo = hi;
        hi = 30.0;
    }
    // The perspective t·Λ*(q/t) is convex in t, hence unimodal in s = ln t.
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let (mut c, mut d) = (b - g * (b - a), a + g * (b - a));
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-11 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    Ok(fc.min(fd).max(0.0))
}

/// Least-squares free fit of `y = A r + B ln r + C` through three points; returns `A`.
pub fn richardson_rate(samples: &[(f64, f64)]) -> Option<f64> {
    if samples.len() < 3 {
        return None;
    }
    let s = &samples[samples.len() - 3..];
    // Solve the 3×3 system by Cramer's rule.
    let m: Vec<[f64; 3]> = s.iter().map(|&(r, _)| [r, r.ln(), 1.0]).collect();
    let y: Vec<f64> = s.iter().map(|p| p.1).collect();
    let det3 = |m: &[[f64; 3]]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det3(&m);
    if d.abs() < 1e-300 {
        return None;
    }
    let mut mx = m.clone();
    for i in 0..3 {
        mx[i][0] = y[i];
    }
    Some(det3(&mx) / d)
}

/// Log-asymptotics of Green functions along a ray: observed
/// `−log G(z_fixed, z_n)/|z_n|`, target the decay rate `a(q)·q` evaluated by
/// [`rate_by_conjugate`]. Diagnostics hold the spectral-point rate, slopes
/// between consecutive radii and a fit removing a logarithmic prefactor.
pub fn log_asymptotics(
    measure: &JumpMeasure,
    kind: WalkKind,
    ray: &RaySpec,
    z_fixed: Point,
) -> Result<ConvergenceReport> {
    if !kind.contains(z_fixed) {
        return Err(Error::Input(format!("{z_fixed} outside the {} domain", kind.name())));
    }
    let a = spectral_twist(measure, ray.q)?;
    let target = rate_by_conjugate(measure, ray.q)?;
    let parts = over_radii(ray, |r, zn| {
        let col = green_column(measure, kind, a, zn, &TruncationBox::around(&[z_fixed, zn], DEFAULT_MARGIN))?;
        let lg = col
            .log_green(z_fixed)
            .filter(|v| v.is_finite())
            .ok_or(Error::Underflow { value: 0.0 })?;
        let observed = -lg / zn.norm();
        Ok((vec![ReportRow::new(r, zn, z_fixed, observed, target)], vec![truncation_diag(r, &col)]))
    })?;
    let (rows, mut diags) = flatten(parts);
    let samples: Vec<(f64, f64)> = rows.iter().map(|r| (r.ray_point.norm(), r.observed * r.ray_point.norm())).collect();
    for w in samples.windows(2) {
        if w[1].0 > w[0].0 {
            diags.push((format!("slope_{:.0}_{:.0}", w[0].0, w[1].0), (w[1].1 - w[0].1) / (w[1].0 - w[0].0)));
        }
    }
    if let Some(fit) = richardson_rate(&samples) {
        diags.push(("richardson_rate".into(), fit));
    }
    let spectral = a.dot(ray.q);
    diags.push(("spectral_rate".into(), spectral));
    diags.push(("rate_discrepancy".into(), (spectral - target).abs()));
    let name = format!("lograte_{}", kind.name());
    Ok(ConvergenceReport::assemble(&name, rows, diags, (spectral - target).abs() <= 1e-8))
}

/// Ratio limit along a ray: observed `e^{−a(q)·w}G(z+w,z_n)/G(z,z_n)`, target 1,
/// for the free walk (`w ∈ k̂ℤ²`) or the walk killed outside `ℤ×ℕ*`
/// (`w ∈ k̂ℤ×{0}`), where `k̂` is the period of the free walk. The side check
/// requires the return-time gcd of the killed walk to equal `k̂` and the
/// ratios for `w` and `−w` to be reciprocal.
pub fn ratio_limit_check(
    measure: &JumpMeasure,
    kind: WalkKind,
    ray: &RaySpec,
    z: Point,
    w: Point,
) -> Result<ConvergenceReport> {
    if !matches!(kind, WalkKind::Free | WalkKind::HalfPlane1) {
        return Err(Error::Input(format!("ratio limits are defined for free and half-plane walks, not {}", kind.name())));
    }
    let k = period2d(measure, DEFAULT_PERIOD_HORIZON)? as i64;
    let khp = half_plane_return_period(measure, DEFAULT_PERIOD_HORIZON)? as i64;
    let allowed = w.x % k == 0 && w.y % k == 0 && (kind == WalkKind::Free || w.y == 0);
    if !allowed {
        return Err(Error::Input(format!(
            "displacement {w} is not in the lattice of admissible shifts (period {k}, {})",
            kind.name()
        )));
    }
    if !kind.contains(z) || !kind.contains(z + w) {
        return Err(Error::Input(format!("{z} and {} must lie in the {} domain", z + w, kind.name())));
    }
    let a = spectral_twist(measure, ray.q)?;
    let parts = over_radii(ray, |r, zn| {
        let col = green_column(measure, kind, a, zn, &TruncationBox::around(&[z, z + w, zn], DEFAULT_MARGIN))?;
        let fwd = (log_martin_kernel(&col, z + w, z)? - a.dot_point(w)).exp();
        let back = (log_martin_kernel(&col, z, z + w)? + a.dot_point(w)).exp();
        Ok((
            vec![ReportRow::new(r, zn, z + w, fwd, 1.0)],
            vec![truncation_diag(r, &col), (format!("reciprocal_defect_r{r}"), (fwd * back - 1.0).abs())],
        ))
    })?;
    let (rows, mut diags) = flatten(parts);
    let reciprocal_ok = diags
        .iter()
        .filter(|d| d.0.starts_with("reciprocal_defect"))
        .all(|d| d.1 <= 1e-6);
    diags.push(("period".into(), k as f64));
    diags.push(("half_plane_period".into(), khp as f64));
    let name = format!("ratiolimit_{}", kind.name());
    Ok(ConvergenceReport::assemble(&name, rows, diags, reciprocal_ok && k == khp))
}

/// Principal-part record at one radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct XiRecord {
    pub radius: f64,
    pub ray_point: Point,
    pub z: Point,
    pub delta: f64,
    /// `Ξ^q_δ(z, z_n) e^{−a(q)·(z − z_n)}`.
    pub xi: f64,
    /// `G₊(z, z_n) e^{−a(q)·(z − z_n)}`.
    pub g_plus: f64,
    /// `G₊(z, z_n)/Ξ^q_δ(z, z_n)`.
    pub ratio: f64,
    /// Twisted exit mass that reached the far side of the exit window.
    pub exit_leak: f64,
}

/// The principal part of the renewal decomposition of `G₊(z, z_n)`:
///
/// * interior `q`: `Ξ = G(z,z_n) − E_z(G(S(τ),z_n); τ<∞, |S(τ)| < δ|z_n|)`;
/// * `q = (1,0)`: the same with the walk killed outside `ℤ×ℕ*` and the event `τ₁ < τ₂`;
/// * `q = (0,1)`: the same with the walk killed outside `ℕ*×ℤ` and the event `τ₂ < τ₁`.
///
/// All terms are evaluated in the twisted units of `a(q)`, in which the
/// common factor `e^{a·(z−z_n)}` cancels from the ratio.
pub fn xi_decomposition(measure: &JumpMeasure, q: Vec2, delta: f64, z: Point, radius: f64) -> Result<XiRecord> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Input(format!("trimming fraction {delta} must lie in (0, 1)")));
    }
    if !WalkKind::Quadrant.contains(z) {
        return Err(Error::Input(format!("{z} outside the open quadrant")));
    }
    let ray = RaySpec::new(q, &[radius])?;
    let zn = ray.point(radius);
    let a = spectral_twist(measure, ray.q)?;
    let (kind, class) = match classify(ray.q, &Tolerances::default()) {
        Direction::Interior => (WalkKind::Free, None),
        Direction::Critical10 => (WalkKind::HalfPlane1, Some(TauClass::Tau1BeforeTau2)),
        Direction::Critical01 => (WalkKind::HalfPlane2, Some(TauClass::Tau2NotAfterTau1)),
    };
    let cut = delta * zn.norm();
    let jd = measure.max_down_jump();
    let reach = Point::new((cut.ceil() as i64).max(z.x), (cut.ceil() as i64).max(z.y));
    // Exit points of interest lie below the axes by at most one jump.
    let exit_box = TruncationBox::around(&[Point::new(1, 1), z, reach], DEFAULT_MARGIN);
    let exit = exit_distribution(measure, WalkKind::Quadrant, a, z, &exit_box)?;
    let kept: Vec<_> = exit
        .weights
        .iter()
        .filter(|e| e.point.as_vec().norm() < cut && class.is_none_or(|c| e.class == c) && kind.contains(e.point))
        .collect();
    let mut corner_lo = Point::new((1 - jd[0]).min(z.x), (1 - jd[1]).min(z.y));
    if matches!(kind, WalkKind::HalfPlane1) {
        corner_lo.y = 1;
    }
    if matches!(kind, WalkKind::HalfPlane2) {
        corner_lo.x = 1;
    }
    let mut pts = vec![corner_lo, z, zn, reach];
    pts.extend(kept.iter().map(|e| e.point));
    let col = green_column(measure, kind, a, zn, &TruncationBox::around(&pts, DEFAULT_MARGIN))?;
    let quad = green_column(measure, WalkKind::Quadrant, a, zn, &TruncationBox::around(&[z, zn], DEFAULT_MARGIN))?;
    let value = |c: &GreenColumn, p: Point| c.value(p).ok_or_else(|| Error::Input(format!("{p} outside the column window")));
    let mut xi = value(&col, z)?;
    for e in &kept {
        xi -= e.weight * value(&col, e.point)?;
    }
    let g_plus = value(&quad, z)?;
    Ok(XiRecord {
        radius,
        ray_point: zn,
        z,
        delta,
        xi,
        g_plus,
        ratio: g_plus / xi,
        exit_leak: exit.truncation_leak,
    })
}

/// Principal-part ratios over the radii of a ray as a report (target 1).
pub fn xi_convergence(measure: &JumpMeasure, ray: &RaySpec, delta: f64, z: Point) -> Result<ConvergenceReport> {
    let parts = over_radii(ray, |r, _| {
        let rec = xi_decomposition(measure, ray.q, delta, z, r)?;
        Ok((
            vec![ReportRow::new(r, rec.ray_point, z, rec.ratio, 1.0)],
            vec![(format!("exit_leak_r{r}"), rec.exit_leak)],
        ))
    })?;
    let (rows, diags) = flatten(parts);
    Ok(ConvergenceReport::assemble("xi", rows, diags, true))
}

/// Constants of the uniform exponential envelope at one radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub radius: f64,
    pub ray_point: Point,
    /// Smallest `C` with `G(z,z_n)/G(z₀,z_n) ≤ C e^{a·(z−z₀)+σ|z−z₀|}`.
    pub upper: f64,
    /// Largest `C′` with `G(z,z_n)/G(z₀,z_n) ≥ C′ e^{a·(z−z₀)−σ|z−z₀|}`
    /// (reported for the free walk only).
    pub lower: Option<f64>,
    /// Number of points scanned.
    pub points: usize,
}

/// Result of [`uniform_bound_scan`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundScan {
    pub kind: WalkKind,
    pub sigma: f64,
    pub delta: f64,
    pub z0: Point,
    /// One entry per scanned radius (the two largest of the ray).
    pub constants: Vec<BoundConstants>,
    /// All constants finite and positive, and stable within a factor 2 between the radii.
    pub stable: bool,
}

/// Scans `|z − z₀| < δ|z_n|` at the two largest radii of the ray for the
/// constants of the uniform exponential envelope of the Martin kernel.
pub fn uniform_bound_scan(
    measure: &JumpMeasure,
    kind: WalkKind,
    ray: &RaySpec,
    sigma: f64,
    delta: f64,
    z0: Point,
) -> Result<BoundScan> {
    if !matches!(kind, WalkKind::Free | WalkKind::HalfPlane1) {
        return Err(Error::Input(format!("uniform bounds are scanned for free and half-plane walks, not {}", kind.name())));
    }
    if !(sigma >= 0.0 && delta > 0.0 && delta < 1.0) {
        return Err(Error::Input(format!("need σ ≥ 0 and δ ∈ (0,1), got σ={sigma}, δ={delta}")));
    }
    if !kind.contains(z0) {
        return Err(Error::Input(format!("base point {z0} outside the {} domain", kind.name())));
    }
    let a = spectral_twist(measure, ray.q)?;
    let radii: Vec<f64> = ray.radii.iter().rev().take(2).rev().copied().collect();
    let constants: Vec<BoundConstants> = radii
        .par_iter()
        .map(|&r| {
            let zn = ray.point(r);
            let rad = delta * zn.norm();
            let span = rad.ceil() as i64;
            let zs: Vec<Point> = (-span..=span)
                .flat_map(|dx| (-span..=span).map(move |dy| Point::new(dx, dy)))
                .filter(|d| d.as_vec().norm() < rad)
                .map(|d| z0 + d)
                .filter(|p| kind.contains(*p))
                .collect();
            let mut pts = zs.clone();
            pts.extend([z0, zn]);
            let col = green_column(measure, kind, a, zn, &TruncationBox::around(&pts, DEFAULT_MARGIN))?;
            let (mut upper, mut lower) = (0.0f64, f64::INFINITY);
            for &p in &zs {
                let d = p - z0;
                let base = log_martin_kernel(&col, p, z0)? - a.dot_point(d);
                let s = sigma * d.as_vec().norm();
                upper = upper.max((base - s).exp());
                lower = lower.min((base + s).exp());
            }
            Ok(BoundConstants {
                radius: r,
                ray_point: zn,
                upper,
                lower: (kind == WalkKind::Free).then_some(lower),
                points: zs.len(),
            })
        })
        .collect::<Result<_>>()?;
    let ok = |c: f64| c.is_finite() && c > 0.0;
    let within2 = |x: f64, y: f64| x <= 2.0 * y && y <= 2.0 * x;
    let mut stable = constants.iter().all(|c| ok(c.upper) && c.lower.is_none_or(ok));
    if let [c1, c2] = constants.as_slice() {
        stable &= within2(c1.upper, c2.upper);
        if let (Some(l1), Some(l2)) = (c1.lower, c2.lower) {
            stable &= within2(l1, l2);
        }
    }
    Ok(BoundScan {
        kind,
        sigma,
        delta,
        z0,
        constants,
        stable,
    })
}
