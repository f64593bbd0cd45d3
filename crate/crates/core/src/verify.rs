//! The acceptance suite: numbered checks over the reference measures, each
//! with pinned tolerances, producing named metrics and a verdict.
//!
//! Runtime limits are recorded separately from the numerical metrics so that
//! the metrics themselves are reproducible byte for byte.

use crate::boundary::{
    exit_distribution, free_martingale_defect, h_function, harmonicity_residual, level_crossing_profile,
    HarmonicOptions,
};
use crate::error::Result;
use crate::geometry::{a_of_q, circle_directions, grad_phi, hessian_phi, lambda_eps, min_point, phi};
use crate::green::{check_renewal, check_twist_identity, RenewalVariant, TruncationBox};
use crate::lattice::fixtures::{m1, m2};
use crate::lattice::{half_plane_return_period, period2d, JumpMeasure, DEFAULT_PERIOD_HORIZON};
use crate::limits::{
    log_asymptotics, free_martin_kernel_check, ratio_limit_check, quadrant_martin_convergence, xi_decomposition, ConvergenceReport,
    RaySpec, DEFAULT_RADII, DEFAULT_XI_DELTA,
};
use crate::processes::{exit_probability_mc, sample_rng, twisted_kernel, WalkKind};
use crate::vector::{Point, Vec2};
use rand::RngExt;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;
use std::time::Instant;

/// Radii of the log-asymptotics experiment.
pub const LOG_RADII: [f64; 5] = [20.0, 30.0, 40.0, 60.0, 80.0];

/// Level list of the level-crossing profile.
pub const PROFILE_LEVELS: [i64; 7] = [1, 2, 4, 8, 16, 32, 64];

/// Parameters of the suite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub seed: u64,
    pub mc_samples: u64,
    pub mc_horizon: u64,
    pub mc_cases: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: 1,
            mc_samples: 100_000,
            mc_horizon: 10_000,
            mc_cases: 10,
        }
    }
}

/// One measured quantity with its acceptance condition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub name: String,
    pub value: f64,
    /// Human-readable condition, e.g. `<= 1e-10`; empty for diagnostics.
    pub condition: String,
    pub passed: bool,
}

/// Outcome of one numbered criterion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub id: u32,
    pub title: String,
    pub metrics: Vec<Metric>,
    /// Convergence reports produced along the way.
    pub reports: Vec<ConvergenceReport>,
    pub elapsed_s: f64,
    pub time_limit_s: f64,
}

impl CriterionOutcome {
    /// All numerical conditions hold.
    pub fn values_pass(&self) -> bool {
        self.metrics.iter().all(|m| m.passed)
    }

    pub fn time_passes(&self) -> bool {
        self.elapsed_s <= self.time_limit_s
    }

    pub fn passed(&self) -> bool {
        self.values_pass() && self.time_passes()
    }

    /// Failing metrics, for reporting.
    pub fn failures(&self) -> Vec<&Metric> {
        self.metrics.iter().filter(|m| !m.passed).collect()
    }

    /// One line `criterion N [PASS|FAIL] title — summary`.
    pub fn summary_line(&self) -> String {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        let conditions = self.metrics.iter().filter(|m| !m.condition.is_empty()).count();
        let failing: Vec<String> = self
            .failures()
            .iter()
            .take(4)
            .map(|m| format!("{}={:.4e} (need {})", m.name, m.value, m.condition))
            .collect();
        let time = format!("{:.1}s/{:.0}s", self.elapsed_s, self.time_limit_s);
        if failing.is_empty() && self.time_passes() {
            format!("criterion {:>2} [{status}] {} — {conditions} conditions hold, {time}", self.id, self.title)
        } else {
            format!(
                "criterion {:>2} [{status}] {} — {} of {conditions} conditions fail: {}; {time}",
                self.id,
                self.title,
                self.failures().len(),
                failing.join(", ")
            )
        }
    }
}

struct Builder {
    id: u32,
    title: &'static str,
    metrics: Vec<Metric>,
    reports: Vec<ConvergenceReport>,
    start: Instant,
    limit: f64,
}

impl Builder {
    fn new(id: u32, title: &'static str, limit: f64) -> Self {
        Self {
            id,
            title,
            metrics: Vec::new(),
            reports: Vec::new(),
            start: Instant::now(),
            limit,
        }
    }

    fn at_most(&mut self, name: impl Into<String>, value: f64, limit: f64) {
        self.metrics.push(Metric {
            name: name.into(),
            value,
            condition: format!("<= {limit:e}"),
            passed: value <= limit,
        });
    }

    fn at_least(&mut self, name: impl Into<String>, value: f64, limit: f64) {
        self.metrics.push(Metric {
            name: name.into(),
            value,
            condition: format!(">= {limit:e}"),
            passed: value >= limit,
        });
    }

    fn above(&mut self, name: impl Into<String>, value: f64, limit: f64) {
        self.metrics.push(Metric {
            name: name.into(),
            value,
            condition: format!("> {limit:e}"),
            passed: value > limit,
        });
    }

    fn holds(&mut self, name: impl Into<String>, ok: bool) {
        self.metrics.push(Metric {
            name: name.into(),
            value: f64::from(u8::from(ok)),
            condition: "true".into(),
            passed: ok,
        });
    }

    fn info(&mut self, name: impl Into<String>, value: f64) {
        self.metrics.push(Metric {
            name: name.into(),
            value,
            condition: String::new(),
            passed: true,
        });
    }

    fn error(&mut self, name: impl Into<String>, e: &crate::Error) {
        log::error!("{}: {e}", self.title);
        self.metrics.push(Metric {
            name: format!("{}_error", name.into()),
            value: f64::NAN,
            condition: format!("no error ({e})"),
            passed: false,
        });
    }

    fn finish(self) -> CriterionOutcome {
        CriterionOutcome {
            id: self.id,
            title: self.title.to_string(),
            metrics: self.metrics,
            reports: self.reports,
            elapsed_s: self.start.elapsed().as_secs_f64(),
            time_limit_s: self.limit,
        }
    }
}

/// Runs `f`, recording an error as a failing metric.
fn guarded(b: &mut Builder, name: &str, f: impl FnOnce(&mut Builder) -> Result<()>) {
    if let Err(e) = f(b) {
        b.error(name, &e);
    }
}

fn fixtures() -> [(&'static str, JumpMeasure); 2] {
    [("m1", m1()), ("m2", m2())]
}

/// Geometry of the spectral points and the derivatives of `φ`.
pub fn geometry_suite() -> CriterionOutcome {
    let mut b = Builder::new(1, "geometry suite", 5.0);
    for (name, m) in fixtures() {
        guarded(&mut b, name, |b| {
            let (mut phi_err, mut angle_err) = (0.0f64, 0.0f64);
            let dirs = circle_directions(64);
            let mut points = Vec::with_capacity(dirs.len());
            for &q in &dirs {
                let a = a_of_q(&m, q)?.a;
                let g = grad_phi(&m, a);
                phi_err = phi_err.max((phi(&m, a) - 1.0).abs());
                angle_err = angle_err.max(g.cross(q).abs().atan2(g.dot(q)));
                points.push(a);
            }
            b.at_most(format!("{name}_max_phi_defect"), phi_err, 1e-10);
            b.at_most(format!("{name}_max_normal_angle"), angle_err, 1e-8);
            let drift = m.mean();
            b.at_most(format!("{name}_drift_ray_twist_norm"), a_of_q(&m, drift)?.a.norm(), 1e-10);
            points.push(min_point(&m)?);
            points.push(Vec2::ZERO);
            let (mut ge, mut he) = (0.0f64, 0.0f64);
            for &a in points.iter().step_by(4) {
                let (g_fd, h_fd) = finite_differences(&m, a);
                let g = grad_phi(&m, a);
                let h = hessian_phi(&m, a);
                let scale = phi(&m, a).max(1.0);
                ge = ge.max(g.max_abs_diff(g_fd) / scale);
                he = he
                    .max((h.xx - h_fd[0]).abs() / scale)
                    .max((h.xy - h_fd[1]).abs() / scale)
                    .max((h.yy - h_fd[2]).abs() / scale);
            }
            b.at_most(format!("{name}_gradient_vs_differences"), ge, 1e-8);
            b.at_most(format!("{name}_hessian_vs_differences"), he, 1e-5);
            Ok(())
        });
    }
    b.finish()
}

/// Central differences of `φ`: gradient, and Hessian entries `[xx, xy, yy]`.
fn finite_differences(m: &JumpMeasure, a: Vec2) -> (Vec2, [f64; 3]) {
    let f = |x: f64, y: f64| phi(m, Vec2::new(a.x + x, a.y + y));
    let h = 1e-6;
    let g = Vec2::new((f(h, 0.0) - f(-h, 0.0)) / (2.0 * h), (f(0.0, h) - f(0.0, -h)) / (2.0 * h));
    let k = 1e-4;
    let c = f(0.0, 0.0);
    let xx = (f(k, 0.0) - 2.0 * c + f(-k, 0.0)) / (k * k);
    let yy = (f(0.0, k) - 2.0 * c + f(0.0, -k)) / (k * k);
    let xy = (f(k, k) - f(k, -k) - f(-k, k) + f(-k, -k)) / (4.0 * k * k);
    (g, [xx, xy, yy])
}

/// Exact identities: twisting, renewal, the free martingale and the period of
/// the half-plane walk.
pub fn identity_suite(opts: &VerifyOptions) -> CriterionOutcome {
    let mut b = Builder::new(2, "exact identities", 120.0);
    let e1 = Vec2::new(1.0, 0.0);
    let cases = [
        ("m1", m1(), WalkKind::Free, (-20i64, 20i64), (-20i64, 20i64)),
        ("m2", m2(), WalkKind::HalfPlane1, (-20, 20), (1, 41)),
    ];
    for (ci, (name, m, kind, xr, yr)) in cases.into_iter().enumerate() {
        guarded(&mut b, name, |b| {
            let a = a_of_q(&m, e1)?.a;
            let mut rng = sample_rng(opts.seed, 0x7157 + ci as u64);
            let draw = |rng: &mut rand_chacha::ChaCha8Rng| {
                Point::new(rng.random_range(xr.0..=xr.1), rng.random_range(yr.0..=yr.1))
            };
            let mut pairs = Vec::with_capacity(50);
            for _ in 0..5 {
                let t = draw(&mut rng);
                for _ in 0..10 {
                    pairs.push((draw(&mut rng), t));
                }
            }
            let bx = TruncationBox {
                x_range: xr,
                y_range: yr,
                margin: 40,
            };
            let r = check_twist_identity(&m, kind, a, &bx, &pairs)?;
            b.at_most(format!("{name}_{}_twist_identity", kind.name()), r, 1e-9);
            Ok(())
        });
    }
    let p = Point::new;
    let renewal = [
        ("m1", RenewalVariant::QuadrantVsFree, p(2, 2), p(10, 10)),
        ("m1", RenewalVariant::QuadrantVsFree, p(1, 3), p(6, 2)),
        ("m1", RenewalVariant::QuadrantVsFree, p(4, 1), p(3, 8)),
        ("m1", RenewalVariant::QuadrantVsHalfPlane1, p(2, 2), p(10, 10)),
        ("m1", RenewalVariant::QuadrantVsHalfPlane1, p(3, 1), p(1, 5)),
        ("m2", RenewalVariant::QuadrantVsFree, p(2, 2), p(10, 10)),
        ("m2", RenewalVariant::QuadrantVsFree, p(5, 2), p(2, 7)),
        ("m2", RenewalVariant::QuadrantVsHalfPlane1, p(2, 2), p(10, 10)),
        ("m2", RenewalVariant::QuadrantVsHalfPlane1, p(1, 1), p(4, 4)),
        ("m2", RenewalVariant::QuadrantVsHalfPlane1, p(6, 3), p(2, 2)),
    ];
    let (mm1, mm2) = (m1(), m2());
    for (i, (name, variant, z, t)) in renewal.into_iter().enumerate() {
        let m = if name == "m1" { &mm1 } else { &mm2 };
        guarded(&mut b, &format!("renewal_{i}"), |b| {
            let r = check_renewal(m, variant, z, t, &TruncationBox::around(&[z, t], 60))?;
            let tag = match variant {
                RenewalVariant::QuadrantVsFree => "free",
                RenewalVariant::QuadrantVsHalfPlane1 => "halfplane",
            };
            b.at_most(format!("{name}_renewal_{tag}_{}_{}_{}_{}", z.x, z.y, t.x, t.y), r.residual, 1e-7);
            Ok(())
        });
    }
    for (name, m) in fixtures() {
        guarded(&mut b, name, |b| {
            let mut worst = 0.0f64;
            for z in [p(1, 1), p(5, 7), p(-3, 12), p(40, 2)] {
                worst = worst.max(free_martingale_defect(&m, z)?);
            }
            b.at_most(format!("{name}_free_martingale_defect"), worst, 1e-12);
            let k = period2d(&m, DEFAULT_PERIOD_HORIZON)?;
            let khp = half_plane_return_period(&m, DEFAULT_PERIOD_HORIZON)?;
            b.info(format!("{name}_period"), k as f64);
            b.holds(format!("{name}_half_plane_period_equals_period"), k == khp);
            Ok(())
        });
    }
    b.finish()
}

/// Monte Carlo exit frequencies of twisted walks against the exit mass of the
/// linear-system solution.
pub fn exit_bridge(opts: &VerifyOptions) -> CriterionOutcome {
    let mut b = Builder::new(3, "Monte Carlo exit bridge", 180.0);
    for i in 0..opts.mc_cases {
        let (name, m) = if i % 2 == 0 { ("m1", m1()) } else { ("m2", m2()) };
        guarded(&mut b, &format!("case{i}"), |b| {
            let mut rng = sample_rng(opts.seed, 0xb41d + i as u64);
            let angle: f64 = rng.random_range(0.0..4.0 * FRAC_PI_2);
            let s: f64 = rng.random_range(0.2..0.95);
            let z = Point::new(rng.random_range(1..=6), rng.random_range(1..=6));
            let amin = min_point(&m)?;
            let a = amin + (a_of_q(&m, Vec2::polar(angle))?.a - amin) * s;
            let mc = exit_probability_mc(&twisted_kernel(&m, a), z, opts.mc_horizon, opts.mc_samples, opts.seed + i as u64)?;
            let exit = exit_distribution(&m, WalkKind::Quadrant, a, z, &TruncationBox::around(&[z], 60))?;
            let (lo, hi) = exit.exit_bracket;
            let distance = (lo - mc.estimate).max(mc.estimate - hi).max(0.0);
            b.info(format!("case{i}_{name}_mc"), mc.estimate);
            b.info(format!("case{i}_{name}_solver"), 0.5 * (lo + hi));
            b.at_most(format!("case{i}_{name}_excess_over_3sigma"), distance - 3.0 * mc.std_error, 1e-3);
            Ok(())
        });
    }
    b.finish()
}

fn harmonic_directions() -> [(&'static str, Vec2); 4] {
    [
        ("q10", Vec2::new(1.0, 0.0)),
        ("q01", Vec2::new(0.0, 1.0)),
        ("qdiag", Vec2::new(1.0, 1.0).normalized()),
        ("q21", Vec2::new(2.0, 1.0).normalized()),
    ]
}

/// Harmonicity, positivity and certified brackets of `h_{a(q)}` on a 50×50 window.
pub fn harmonic_suite() -> CriterionOutcome {
    let mut b = Builder::new(4, "harmonicity and positivity", 180.0);
    let region = TruncationBox {
        x_range: (1, 50),
        y_range: (1, 50),
        margin: 0,
    };
    for (name, m) in fixtures() {
        for (qn, q) in harmonic_directions() {
            guarded(&mut b, &format!("{name}_{qn}"), |b| {
                let h = h_function(&m, q, &region, &HarmonicOptions::default())?;
                let (mut res, mut rel, mut min_v) = (0.0f64, 0.0f64, f64::INFINITY);
                let mut trusted = 0usize;
                for x in 1..=50 {
                    for y in 1..=50 {
                        let z = Point::new(x, y);
                        let v = h.value(z).expect("queried point");
                        min_v = min_v.min(v);
                        if h.is_trusted(z, &m) {
                            trusted += 1;
                            let r = harmonicity_residual(&h, &m, z)?;
                            res = res.max(r);
                            rel = rel.max(r / v);
                        }
                    }
                }
                let outside_zero = (-2..=52)
                    .flat_map(|t| [Point::new(t, 0), Point::new(t, -1), Point::new(0, t), Point::new(-1, t)])
                    .all(|z| h.value(z) == Some(0.0));
                b.at_most(format!("{name}_{qn}_harmonicity_residual"), res, 1e-7);
                b.info(format!("{name}_{qn}_relative_residual"), rel);
                b.info(format!("{name}_{qn}_trusted_points"), trusted as f64);
                b.above(format!("{name}_{qn}_min_value"), min_v, 0.0);
                b.holds(format!("{name}_{qn}_zero_outside"), outside_zero);
                b.at_most(format!("{name}_{qn}_bracket_width"), h.bracket_width, 1e-7);
                Ok(())
            });
        }
    }
    b.finish()
}

/// Critical twists exit almost surely; interior twists survive with positive
/// probability.
pub fn exit_dichotomy() -> CriterionOutcome {
    let mut b = Builder::new(5, "exit dichotomy", 60.0);
    for (name, m) in fixtures() {
        for (qn, q) in [("q10", Vec2::new(1.0, 0.0)), ("q01", Vec2::new(0.0, 1.0))] {
            guarded(&mut b, &format!("{name}_{qn}"), |b| {
                let z = Point::new(3, 3);
                let a = a_of_q(&m, q)?.a;
                let exit = exit_distribution(&m, WalkKind::Quadrant, a, z, &TruncationBox::around(&[z], 400))?;
                b.at_least(format!("{name}_{qn}_certified_exit_mass"), exit.exit_bracket.0, 1.0 - 1e-5);
                b.info(format!("{name}_{qn}_window_exit_mass"), exit.total_mass());
                b.info(format!("{name}_{qn}_window_leak"), exit.truncation_leak);
                Ok(())
            });
        }
        for (qn, q) in [("qdiag", Vec2::new(1.0, 1.0)), ("q21", Vec2::new(2.0, 1.0))] {
            guarded(&mut b, &format!("{name}_{qn}"), |b| {
                let z = Point::new(30, 30);
                let a = a_of_q(&m, q.normalized())?.a;
                let exit = exit_distribution(&m, WalkKind::Quadrant, a, z, &TruncationBox::around(&[z], 60))?;
                b.at_least(format!("{name}_{qn}_survival"), 1.0 - exit.exit_bracket.1, 0.01);
                Ok(())
            });
        }
    }
    b.finish()
}

/// Martin kernel of the quadrant walk against the harmonic-function ratio.
pub fn martin_convergence() -> CriterionOutcome {
    let mut b = Builder::new(6, "Martin kernel convergence", 300.0);
    let m = m1();
    let tests = [Point::new(2, 3), Point::new(4, 1), Point::new(3, 3)];
    for (qn, q, tol) in [("qdiag", Vec2::new(1.0, 1.0), 0.05), ("q10", Vec2::new(1.0, 0.0), 0.08)] {
        guarded(&mut b, qn, |b| {
            let ray = RaySpec::new(q, &DEFAULT_RADII)?;
            let r = quadrant_martin_convergence(&m, &ray, &tests, Point::new(1, 1))?;
            b.holds(format!("m1_{qn}_smoothed_trend"), r.verdict.trend_ok);
            b.holds(format!("m1_{qn}_brackets_closed"), r.verdict.consistency_ok);
            b.at_most(format!("m1_{qn}_final_gap"), r.verdict.final_gap, tol);
            b.reports.push(r);
            Ok(())
        });
    }
    b.finish()
}

/// Free-walk Martin kernels and the exponential decay rates of Green functions.
pub fn free_kernel_and_rates() -> CriterionOutcome {
    let mut b = Builder::new(7, "free kernel limit and decay rates", 300.0);
    let e1 = Vec2::new(1.0, 0.0);
    let origin = Point::new(0, 0);
    let ns_cases = [
        ("m1_q10", m1(), e1, vec![Point::new(0, 3), Point::new(2, 0)]),
        ("m1_drift", m1(), Vec2::new(1.0, 1.0), vec![Point::new(2, 1), Point::new(0, 3)]),
        ("m2_q10", m2(), e1, vec![Point::new(2, 0), Point::new(1, 2)]),
    ];
    for (name, m, q, pts) in ns_cases {
        guarded(&mut b, name, |b| {
            let ray = RaySpec::new(q, &DEFAULT_RADII)?;
            let mut r = free_martin_kernel_check(&m, &ray, &pts, origin)?;
            r.experiment = format!("neyspitzer_{name}");
            b.at_most(format!("{name}_free_kernel_final_gap"), r.verdict.final_gap, 0.05);
            b.reports.push(r);
            Ok(())
        });
    }
    let (mm1, mm2) = (m1(), m2());
    let rate_cases = [
        ("m1", &mm1, WalkKind::Free),
        ("m1", &mm1, WalkKind::Quadrant),
        ("m1", &mm1, WalkKind::HalfPlane1),
        ("m2", &mm2, WalkKind::Free),
        ("m2", &mm2, WalkKind::Quadrant),
        ("m2", &mm2, WalkKind::HalfPlane1),
    ];
    for (name, m, kind) in rate_cases {
        guarded(&mut b, name, |b| {
            let ray = RaySpec::new(e1, &LOG_RADII)?;
            let mut r = log_asymptotics(m, kind, &ray, Point::new(1, 1))?;
            r.experiment = format!("{}_{name}_q10", r.experiment);
            let tag = format!("{name}_q10_{}", kind.name());
            b.at_most(format!("{tag}_log_rate_final_gap"), r.verdict.final_gap, 0.10);
            b.holds(format!("{tag}_independent_rate_agrees"), r.verdict.consistency_ok);
            if let (Some(fit), Some(rate)) = (r.diagnostic("richardson_rate"), r.diagnostic("spectral_rate")) {
                b.info(format!("{tag}_fitted_rate_gap"), (fit - rate).abs() / rate);
            }
            b.reports.push(r);
            Ok(())
        });
    }
    // On the drift ray the rate is zero; the observed rate is recorded.
    guarded(&mut b, "drift", |b| {
        let ray = RaySpec::new(Vec2::new(1.0, 1.0), &LOG_RADII)?;
        let mut r = log_asymptotics(&mm1, WalkKind::Quadrant, &ray, Point::new(1, 1))?;
        r.experiment = format!("{}_m1_drift", r.experiment);
        let last = r.rows.last().map_or(f64::NAN, |row| row.observed);
        b.info("m1_drift_quadrant_observed_rate", last);
        b.at_least("m1_drift_quadrant_observed_rate_nonnegative", last, 0.0);
        b.reports.push(r);
        Ok(())
    });
    b.finish()
}

/// Distance from `w` to the open ray `{θq : θ > 0}`.
fn distance_to_ray(w: Vec2, q: Vec2) -> f64 {
    if w.dot(q) > 0.0 {
        w.cross(q).abs()
    } else {
        w.norm()
    }
}

/// Ratio limits, the principal-part decomposition, and the strict
/// inequality behind it.
pub fn ratio_limits_and_principal_part() -> CriterionOutcome {
    let mut b = Builder::new(8, "ratio limits and principal part", 300.0);
    let e1 = Vec2::new(1.0, 0.0);
    let one = Point::new(1, 1);
    let ratio_cases = [
        ("m1", m1(), WalkKind::Free, Point::new(2, 0)),
        ("m2", m2(), WalkKind::HalfPlane1, Point::new(1, 0)),
    ];
    for (name, m, kind, w) in ratio_cases {
        guarded(&mut b, name, |b| {
            let ray = RaySpec::new(e1, &DEFAULT_RADII)?;
            let mut r = ratio_limit_check(&m, kind, &ray, one, w)?;
            r.experiment = format!("{}_{name}", r.experiment);
            let tag = format!("{name}_{}_w{}_{}", kind.name(), w.x, w.y);
            b.at_most(format!("{tag}_ratio_final_gap"), r.verdict.final_gap, 0.03);
            b.holds(format!("{tag}_period_and_reciprocity"), r.verdict.consistency_ok);
            b.reports.push(r);
            Ok(())
        });
    }
    let m = m1();
    for (qn, q, tol) in [
        ("qdiag", Vec2::new(1.0, 1.0), 0.02),
        ("q21", Vec2::new(2.0, 1.0), 0.02),
        ("q10", e1, 0.05),
        ("q01", Vec2::new(0.0, 1.0), 0.05),
    ] {
        guarded(&mut b, qn, |b| {
            let x = xi_decomposition(&m, q, DEFAULT_XI_DELTA, Point::new(2, 2), 60.0)?;
            b.at_most(format!("m1_{qn}_principal_part_gap"), (x.ratio - 1.0).abs(), tol);
            Ok(())
        });
    }
    for (qn, q) in [("qdiag", Vec2::new(1.0, 1.0)), ("q10", e1), ("q21", Vec2::new(2.0, 1.0))] {
        guarded(&mut b, qn, |b| {
            let q = q.normalized();
            let rate = a_of_q(&m, q)?.rate();
            let mut min_excess = f64::INFINITY;
            let mut count = 0;
            for i in 0..10 {
                for j in 0..10 {
                    let w = Vec2::new(-2.0 + 4.0 * i as f64 / 9.0, -2.0 + 4.0 * j as f64 / 9.0);
                    if distance_to_ray(w, q) >= 0.3 {
                        count += 1;
                        min_excess = min_excess.min(lambda_eps(&m, q, w, 0.0)? - rate);
                    }
                }
            }
            b.info(format!("m1_{qn}_offray_grid_points"), count as f64);
            b.above(format!("m1_{qn}_offray_min_excess"), min_excess, 0.0);
            Ok(())
        });
    }
    b.finish()
}

/// Level-crossing profile of the critical vertical walk.
pub fn level_crossing_suite() -> CriterionOutcome {
    let mut b = Builder::new(9, "level-crossing profile", 30.0);
    guarded(&mut b, "m1", |b| {
        let prof = level_crossing_profile(&m1(), &PROFILE_LEVELS)?;
        let monotone = prof.windows(2).all(|w| w[1].value >= w[0].value);
        for p in &prof {
            b.info(format!("m1_level_{}", p.k), p.value);
        }
        b.holds("m1_profile_nondecreasing", monotone);
        b.at_least("m1_profile_at_64", prof.last().map_or(f64::NAN, |p| p.value), 0.98);
        Ok(())
    });
    b.finish()
}

/// Criteria 1–9 in order.
pub fn run_all(opts: &VerifyOptions) -> Vec<CriterionOutcome> {
    vec![
        geometry_suite(),
        identity_suite(opts),
        exit_bridge(opts),
        harmonic_suite(),
        exit_dichotomy(),
        martin_convergence(),
        free_kernel_and_rates(),
        ratio_limits_and_principal_part(),
        level_crossing_suite(),
    ]
}
