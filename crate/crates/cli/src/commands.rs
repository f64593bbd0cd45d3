//! Subcommand drivers: each computes its results, writes CSV artifacts and
//! returns the verdicts that go into the run manifest.

use crate::config::RunConfig;
use crate::output::{f, i, write_json, write_table, Table};
use clap::{Subcommand, ValueEnum};
use mq_core::boundary::{h_function, HarmonicOptions};
use mq_core::geometry::{a_of_q, circle_directions};
use mq_core::green::{green_column, TruncationBox};
use mq_core::lattice::validate;
use mq_core::limits::{
    log_asymptotics, free_martin_kernel_check, ratio_limit_check, quadrant_martin_convergence, uniform_bound_scan,
    xi_decomposition, ConvergenceReport, RaySpec,
};
use mq_core::processes::{exit_probability_mc, twisted_kernel};
use mq_core::verify::{run_all, CriterionOutcome, VerifyOptions};
use mq_core::{Error, Point, Result, Vec2};
use serde::Serialize;
use std::path::Path;
use std::time::Instant;

#[derive(Clone, Debug, Subcommand)]
pub enum Command {
    /// Check the hypotheses on the jump measure.
    Validate,
    /// Spectral points a(q) and rates a(q)·q over directions on the circle.
    Geometry {
        /// Number of equally spaced directions.
        #[arg(long)]
        sweep: Option<usize>,
    },
    /// Monte Carlo exit probability of the twisted quadrant walk.
    Mc,
    /// A Green column of the configured walk kind on the configured region.
    Green,
    /// The harmonic function h_{a(q)} on the configured region.
    Harmonic,
    /// Limit-theorem experiments along the configured ray.
    Limits {
        #[arg(value_enum)]
        experiment: LimitExperiment,
    },
    /// The full acceptance suite on the reference measures.
    Verify,
}

impl Command {
    pub fn name(&self) -> String {
        match self {
            Command::Validate => "validate".into(),
            Command::Geometry { .. } => "geometry".into(),
            Command::Mc => "mc".into(),
            Command::Green => "green".into(),
            Command::Harmonic => "harmonic".into(),
            Command::Limits { experiment } => format!("limits {}", experiment.name()),
            Command::Verify => "verify".into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum LimitExperiment {
    /// Quadrant Martin kernel against the harmonic-function ratio.
    #[value(name = "theorem1")]
    QuadrantKernel,
    /// Free-walk Martin kernel against `exp(a(q)·(z − z₀))`.
    #[value(name = "neyspitzer")]
    FreeKernel,
    Lograte,
    Ratiolimit,
    Xi,
    Bounds,
}

impl LimitExperiment {
    pub fn name(self) -> &'static str {
        match self {
            LimitExperiment::QuadrantKernel => "theorem1",
            LimitExperiment::FreeKernel => "neyspitzer",
            LimitExperiment::Lograte => "lograte",
            LimitExperiment::Ratiolimit => "ratiolimit",
            LimitExperiment::Xi => "xi",
            LimitExperiment::Bounds => "bounds",
        }
    }
}

/// One verdict of a run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerdictEntry {
    pub experiment: String,
    pub passed: bool,
    pub detail: String,
}

/// What a subcommand produced.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Outcome {
    pub verdicts: Vec<VerdictEntry>,
    /// Artifact file names, relative to the output directory.
    pub outputs: Vec<String>,
    pub timings: Vec<(String, f64)>,
}

impl Outcome {
    fn verdict(&mut self, experiment: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.verdicts.push(VerdictEntry {
            experiment: experiment.into(),
            passed,
            detail: detail.into(),
        });
    }

    fn table(&mut self, dir: &Path, name: &str, t: &Table) -> Result<()> {
        write_table(dir, name, t).map_err(io_error)?;
        self.outputs.push(name.into());
        Ok(())
    }

    fn json<T: Serialize>(&mut self, dir: &Path, name: &str, v: &T) -> Result<()> {
        write_json(dir, name, v).map_err(io_error)?;
        self.outputs.push(name.into());
        Ok(())
    }
}

fn io_error(e: std::io::Error) -> Error {
    Error::Input(format!("writing output: {e}"))
}

fn pt(p: Point) -> [String; 2] {
    [i(p.x), i(p.y)]
}

/// Runs one subcommand, writing its artifacts into `out`.
pub fn execute(cfg: &RunConfig, cmd: &Command, out: &Path) -> Result<Outcome> {
    let mut o = Outcome::default();
    let start = Instant::now();
    match cmd {
        Command::Validate => validate_cmd(cfg, out, &mut o)?,
        Command::Geometry { sweep } => geometry_cmd(cfg, sweep.unwrap_or(cfg.sweep), out, &mut o)?,
        Command::Mc => mc_cmd(cfg, out, &mut o)?,
        Command::Green => green_cmd(cfg, out, &mut o)?,
        Command::Harmonic => harmonic_cmd(cfg, out, &mut o)?,
        Command::Limits { experiment } => limits_cmd(cfg, *experiment, out, &mut o)?,
        Command::Verify => verify_cmd(cfg, out, &mut o)?,
    }
    o.timings.push(("total".into(), start.elapsed().as_secs_f64()));
    Ok(o)
}

fn validate_cmd(cfg: &RunConfig, out: &Path, o: &mut Outcome) -> Result<()> {
    let r = validate(&cfg.measure);
    let mut t = Table::new(&["property", "value"]);
    let b = |v: bool| i(v);
    t.push(vec!["irreducible_with_drift".into(), b(r.h1_irreducible)]);
    t.push(vec!["generates_lattice".into(), b(r.generates_lattice)]);
    t.push(vec!["mean_x".into(), f(r.mean.x)]);
    t.push(vec!["mean_y".into(), f(r.mean.y)]);
    t.push(vec!["killed_irreducible".into(), b(r.h2_killed_irreducible)]);
    t.push(vec!["finite_generating_function".into(), b(r.h3_finite_phi)]);
    t.push(vec!["coordinate1_aperiodic".into(), b(r.h4_coordinates_aperiodic[0])]);
    t.push(vec!["coordinate2_aperiodic".into(), b(r.h4_coordinates_aperiodic[1])]);
    t.push(vec!["period".into(), r.period_2d.map_or("none".into(), i)]);
    o.table(out, "validate.csv", &t)?;
    let detail = r.require().err().map_or("all hypotheses hold".into(), |e| e.to_string());
    o.verdict("validate", r.all_hold(), detail);
    Ok(())
}

fn geometry_cmd(cfg: &RunConfig, n: usize, out: &Path, o: &mut Outcome) -> Result<()> {
    if n == 0 {
        return Err(Error::Input("--sweep needs at least one direction".into()));
    }
    let mut t = Table::new(&["index", "q_x", "q_y", "a_x", "a_y", "rate"]);
    for (k, q) in circle_directions(n).into_iter().enumerate() {
        let sp = a_of_q(&cfg.measure, q)?;
        t.push(vec![i(k), f(q.x), f(q.y), f(sp.a.x), f(sp.a.y), f(sp.rate())]);
    }
    o.table(out, "geometry.csv", &t)?;
    o.verdict("geometry", true, format!("{n} directions"));
    Ok(())
}

fn twist_or_spectral(cfg: &RunConfig) -> Result<Vec2> {
    match cfg.twist {
        Some(a) => Ok(a),
        None => Ok(a_of_q(&cfg.measure, cfg.q.normalized())?.a),
    }
}

fn mc_cmd(cfg: &RunConfig, out: &Path, o: &mut Outcome) -> Result<()> {
    let a = twist_or_spectral(cfg)?;
    let est = exit_probability_mc(&twisted_kernel(&cfg.measure, a), cfg.mc_start, cfg.mc_horizon, cfg.mc_samples, cfg.seed)?;
    let mut t = Table::new(&["a_x", "a_y", "z_x", "z_y", "horizon", "n", "hits", "estimate", "std_error", "seed"]);
    let [zx, zy] = pt(cfg.mc_start);
    t.push(vec![
        f(a.x),
        f(a.y),
        zx,
        zy,
        i(cfg.mc_horizon),
        i(est.n),
        i(est.hits),
        f(est.estimate),
        f(est.std_error),
        i(est.seed),
    ]);
    o.table(out, "mc.csv", &t)?;
    o.verdict("mc", true, format!("estimate {} ± {}", est.estimate, est.std_error));
    Ok(())
}

fn region_points(bx: &TruncationBox) -> impl Iterator<Item = Point> + '_ {
    (bx.x_range.0..=bx.x_range.1).flat_map(move |x| (bx.y_range.0..=bx.y_range.1).map(move |y| Point::new(x, y)))
}

fn green_cmd(cfg: &RunConfig, out: &Path, o: &mut Outcome) -> Result<()> {
    let a = cfg.twist.unwrap_or(Vec2::ZERO);
    let col = green_column(&cfg.measure, cfg.kind, a, cfg.target, &cfg.region)?;
    let mut t = Table::new(&["x", "y", "twisted_green", "log_green"]);
    for z in region_points(&cfg.region) {
        let v = col.value(z).ok_or_else(|| Error::Input(format!("{z} outside the window")))?;
        let lg = col.log_green(z).expect("value exists");
        let [x, y] = pt(z);
        t.push(vec![x, y, f(v), f(lg)]);
    }
    o.table(out, "green.csv", &t)?;
    o.verdict(
        "green",
        !col.truncation_warning,
        format!("relative truncation error {:e}", col.relative_truncation_error),
    );
    Ok(())
}

fn harmonic_cmd(cfg: &RunConfig, out: &Path, o: &mut Outcome) -> Result<()> {
    let opts = HarmonicOptions {
        bracket_tol: cfg.bracket_tol,
        ..HarmonicOptions::default()
    };
    let h = h_function(&cfg.measure, cfg.q, &cfg.region, &opts)?;
    let mut t = Table::new(&["x", "y", "h", "log_h", "h_lo", "h_hi"]);
    for z in region_points(&cfg.region) {
        let missing = || Error::Input(format!("{z} outside the window"));
        let (lo, hi) = h.bracket(z).ok_or_else(missing)?;
        let [x, y] = pt(z);
        t.push(vec![x, y, f(h.value(z).ok_or_else(missing)?), f(h.log_value(z).ok_or_else(missing)?), f(lo), f(hi)]);
    }
    o.table(out, "harmonic.csv", &t)?;
    o.verdict("harmonic", !h.bracket_warning, format!("relative bracket width {:e}", h.bracket_width));
    Ok(())
}

/// Rows of a convergence report as a table.
pub fn report_table(reports: &[ConvergenceReport]) -> Table {
    let mut t = Table::new(&[
        "experiment",
        "radius",
        "ray_x",
        "ray_y",
        "test_x",
        "test_y",
        "observed",
        "target",
        "relative_gap",
    ]);
    for r in reports {
        for row in &r.rows {
            let [rx, ry] = pt(row.ray_point);
            let [tx, ty] = pt(row.test_point);
            t.push(vec![
                r.experiment.clone(),
                f(row.radius),
                rx,
                ry,
                tx,
                ty,
                f(row.observed),
                f(row.target),
                f(row.relative_gap),
            ]);
        }
    }
    t
}

fn record_report(r: &ConvergenceReport, tolerance: f64, out: &Path, o: &mut Outcome) -> Result<()> {
    let name = r.experiment.clone();
    o.table(out, &format!("limits_{name}.csv"), &report_table(std::slice::from_ref(r)))?;
    #[derive(Serialize)]
    struct Summary<'a> {
        experiment: &'a str,
        verdict: &'a mq_core::limits::Verdict,
        tolerance: f64,
        passed: bool,
        diagnostics: &'a [(String, f64)],
    }
    let passed = r.verdict.passes(tolerance);
    o.json(
        out,
        &format!("limits_{name}.json"),
        &Summary {
            experiment: &name,
            verdict: &r.verdict,
            tolerance,
            passed,
            diagnostics: &r.diagnostics,
        },
    )?;
    o.verdict(
        name,
        passed,
        format!(
            "trend {} final gap {} (tolerance {tolerance}) side checks {}",
            r.verdict.trend_ok, r.verdict.final_gap, r.verdict.consistency_ok
        ),
    );
    Ok(())
}

fn limits_cmd(cfg: &RunConfig, exp: LimitExperiment, out: &Path, o: &mut Outcome) -> Result<()> {
    let m = &cfg.measure;
    let ray = RaySpec::new(cfg.q, &cfg.radii)?;
    match exp {
        LimitExperiment::QuadrantKernel => {
            let r = quadrant_martin_convergence(m, &ray, &cfg.points, cfg.z0)?;
            record_report(&r, cfg.tolerance, out, o)
        }
        LimitExperiment::FreeKernel => {
            let r = free_martin_kernel_check(m, &ray, &cfg.points, cfg.z0)?;
            record_report(&r, cfg.tolerance, out, o)
        }
        LimitExperiment::Lograte => {
            let r = log_asymptotics(m, cfg.kind, &ray, cfg.z0)?;
            record_report(&r, cfg.tolerance, out, o)
        }
        LimitExperiment::Ratiolimit => {
            let r = ratio_limit_check(m, cfg.kind, &ray, cfg.z0, cfg.w)?;
            record_report(&r, cfg.tolerance, out, o)
        }
        LimitExperiment::Xi => {
            let z = cfg.points.first().copied().unwrap_or(cfg.z0);
            let mut t = Table::new(&["radius", "ray_x", "ray_y", "z_x", "z_y", "delta", "xi", "g_plus", "ratio", "exit_leak"]);
            let mut gap = 0.0f64;
            for &radius in &ray.radii {
                let x = xi_decomposition(m, ray.q, cfg.delta, z, radius)?;
                let [rx, ry] = pt(x.ray_point);
                let [zx, zy] = pt(x.z);
                t.push(vec![f(radius), rx, ry, zx, zy, f(x.delta), f(x.xi), f(x.g_plus), f(x.ratio), f(x.exit_leak)]);
                gap = (x.ratio - 1.0).abs();
            }
            o.table(out, "limits_xi.csv", &t)?;
            o.verdict("xi", gap <= cfg.tolerance, format!("final |ratio − 1| = {gap} (tolerance {})", cfg.tolerance));
            Ok(())
        }
        LimitExperiment::Bounds => {
            let scan = uniform_bound_scan(m, cfg.kind, &ray, cfg.sigma, cfg.scan_delta, cfg.z0)?;
            let mut t = Table::new(&["radius", "ray_x", "ray_y", "upper", "lower", "points"]);
            for c in &scan.constants {
                let [rx, ry] = pt(c.ray_point);
                t.push(vec![f(c.radius), rx, ry, f(c.upper), c.lower.map_or(String::new(), f), i(c.points)]);
            }
            o.table(out, "limits_bounds.csv", &t)?;
            o.verdict("bounds", scan.stable, "constants finite and stable within a factor 2");
            Ok(())
        }
    }
}

/// Metrics of verification outcomes as a table (timings excluded).
pub fn metrics_table(outcomes: &[CriterionOutcome]) -> Table {
    let mut t = Table::new(&["criterion", "metric", "value", "condition", "passed"]);
    for c in outcomes {
        for m in &c.metrics {
            t.push(vec![i(c.id), m.name.clone(), f(m.value), m.condition.clone(), i(m.passed)]);
        }
    }
    t
}

fn verify_cmd(cfg: &RunConfig, out: &Path, o: &mut Outcome) -> Result<()> {
    let opts = VerifyOptions {
        seed: cfg.seed,
        mc_samples: cfg.mc_samples,
        mc_horizon: cfg.mc_horizon,
        ..VerifyOptions::default()
    };
    let outcomes = run_all(&opts);
    o.table(out, "verify_metrics.csv", &metrics_table(&outcomes))?;
    let reports: Vec<ConvergenceReport> = outcomes.iter().flat_map(|c| c.reports.iter().cloned()).collect();
    o.table(out, "verify_reports.csv", &report_table(&reports))?;
    for c in &outcomes {
        o.verdict(format!("criterion {}: {}", c.id, c.title), c.passed(), c.summary_line());
        o.timings.push((format!("criterion {}", c.id), c.elapsed_s));
    }
    Ok(())
}
