//! Plain-text run configuration: `key = value` lines, `#` comments, and an
//! optional `[measure]` block of `dx dy mass` lines.
//!
//! ```text
//! name = m1
//! q = 1, 0
//! radii = 20, 30, 40, 60
//! [measure]
//! 1 0 0.35
//! -1 0 0.15
//! 0 1 0.35
//! 0 -1 0.15
//! ```

use mq_core::green::TruncationBox;
use mq_core::lattice::fixtures;
use mq_core::limits::{DEFAULT_RADII, DEFAULT_SCAN_DELTA, DEFAULT_XI_DELTA};
use mq_core::processes::WalkKind;
use mq_core::{Error, JumpMeasure, Point, Result, Vec2};
use serde::Serialize;
use std::collections::BTreeSet;

/// Every parameter of a run, with documented defaults.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    /// Label of the measure (`m1` by default).
    pub name: String,
    /// The jump measure: a fixture (`measure = m1|m2`), a `[measure]` block,
    /// or a file of `dx dy mass` lines (`measure_file = PATH`). Default `m1`.
    pub measure: JumpMeasure,
    /// Ray direction (normalised by the consumers). Default `(1, 0)`.
    pub q: Vec2,
    /// Ray radii. Default `20, 30, 40, 60`; an empty list means the default.
    pub radii: Vec<f64>,
    /// Walk kind for `green`, `lograte`, `ratiolimit`, `bounds`. Default `quadrant`.
    pub kind: WalkKind,
    /// Twist for `green` and `mc`; default: `a(q)` for `mc`, `(0, 0)` for `green`.
    pub twist: Option<Vec2>,
    /// Queried region `x_lo, x_hi, y_lo, y_hi`. Default `1, 10, 1, 10`.
    pub region: TruncationBox,
    /// Window margin around queried regions. Default 40.
    pub margin: i64,
    /// Target of `green`. Default `(10, 10)`.
    pub target: Point,
    /// Reference point of Martin kernels. Default `(1, 1)`.
    pub z0: Point,
    /// Test points `x, y; x, y; ...`. Default `2, 3; 4, 1; 3, 3`.
    pub points: Vec<Point>,
    /// Shift of the ratio-limit experiment. Default `(2, 0)`.
    pub w: Point,
    /// Trimming fraction of the principal part. Default 0.3.
    pub delta: f64,
    /// Neighbourhood fraction of the uniform-bound scan. Default 0.2.
    pub scan_delta: f64,
    /// Slack exponent of the uniform-bound scan. Default 0.05.
    pub sigma: f64,
    /// Root seed. Default 1.
    pub seed: u64,
    /// Monte Carlo sample count. Default 100000.
    pub mc_samples: u64,
    /// Monte Carlo horizon. Default 10000.
    pub mc_horizon: u64,
    /// Monte Carlo start point. Default `(5, 5)`.
    pub mc_start: Point,
    /// Final-gap tolerance of `limits` verdicts. Default 0.08.
    pub tolerance: f64,
    /// Bracket tolerance of harmonic functions. Default 1e-7.
    pub bracket_tol: f64,
    /// Number of directions of `geometry --sweep`. Default 64.
    pub sweep: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            name: "m1".into(),
            measure: fixtures::m1(),
            q: Vec2::new(1.0, 0.0),
            radii: DEFAULT_RADII.to_vec(),
            kind: WalkKind::Quadrant,
            twist: None,
            region: TruncationBox {
                x_range: (1, 10),
                y_range: (1, 10),
                margin: 40,
            },
            margin: 40,
            target: Point::new(10, 10),
            z0: Point::new(1, 1),
            points: vec![Point::new(2, 3), Point::new(4, 1), Point::new(3, 3)],
            w: Point::new(2, 0),
            delta: DEFAULT_XI_DELTA,
            scan_delta: DEFAULT_SCAN_DELTA,
            sigma: 0.05,
            seed: 1,
            mc_samples: 100_000,
            mc_horizon: 10_000,
            mc_start: Point::new(5, 5),
            tolerance: 0.08,
            bracket_tol: 1e-7,
            sweep: 64,
        }
    }
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::Config { line, msg: msg.into() }
}

fn numbers<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<Vec<T>> {
    v.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|_| err(line, format!("`{key}`: cannot parse `{s}`"))))
        .collect()
}

fn exactly<T: Copy + std::str::FromStr, const N: usize>(line: usize, key: &str, v: &str) -> Result<[T; N]> {
    let xs: Vec<T> = numbers(line, key, v)?;
    xs.try_into()
        .map_err(|xs: Vec<T>| err(line, format!("`{key}` needs {N} numbers, got {}", xs.len())))
}

fn scalar<T: Copy + std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T> {
    Ok(exactly::<T, 1>(line, key, v)?[0])
}

fn point(line: usize, key: &str, v: &str) -> Result<Point> {
    let [x, y] = exactly::<i64, 2>(line, key, v)?;
    Ok(Point::new(x, y))
}

fn vector(line: usize, key: &str, v: &str) -> Result<Vec2> {
    let [x, y] = exactly::<f64, 2>(line, key, v)?;
    Ok(Vec2::new(x, y))
}

/// Parses `dx dy mass` lines (comments and blank lines allowed) into a measure.
pub fn parse_measure_lines<'a>(lines: impl Iterator<Item = (usize, &'a str)>, header_line: usize) -> Result<JumpMeasure> {
    let mut entries = Vec::new();
    let mut seen = BTreeSet::new();
    for (no, raw) in lines {
        let text = raw.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        let parts: Vec<&str> = text.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(err(no, format!("measure line needs `dx dy mass`, got `{text}`")));
        }
        let dx: i64 = parts[0].parse().map_err(|_| err(no, format!("bad offset `{}`", parts[0])))?;
        let dy: i64 = parts[1].parse().map_err(|_| err(no, format!("bad offset `{}`", parts[1])))?;
        let mass: f64 = parts[2].parse().map_err(|_| err(no, format!("bad mass `{}`", parts[2])))?;
        if !seen.insert((dx, dy)) {
            return Err(err(no, format!("duplicate offset ({dx}, {dy})")));
        }
        entries.push((Point::new(dx, dy), mass));
    }
    JumpMeasure::new(entries).map_err(|e| err(header_line, format!("invalid measure: {e}")))
}

/// Parses a configuration, filling defaults. `read_file` resolves
/// `measure_file` paths.
pub fn parse_config_with(text: &str, read_file: &dyn Fn(&str) -> std::io::Result<String>) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let lines: Vec<(usize, &str)> = text.lines().enumerate().map(|(i, l)| (i + 1, l)).collect();
    let mut i = 0;
    let mut measure_source: Option<usize> = None;
    while i < lines.len() {
        let (no, raw) = lines[i];
        i += 1;
        let text = raw.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        if text.starts_with('[') {
            if text != "[measure]" {
                return Err(err(no, format!("unknown section `{text}`")));
            }
            if let Some(prev) = measure_source.replace(no) {
                return Err(err(no, format!("measure already given on line {prev}")));
            }
            let start = i;
            while i < lines.len() && !lines[i].1.trim().starts_with('[') && !lines[i].1.contains('=') {
                i += 1;
            }
            cfg.measure = parse_measure_lines(lines[start..i].iter().copied(), no)?;
            continue;
        }
        let (key, value) = text
            .split_once('=')
            .ok_or_else(|| err(no, format!("expected `key = value`, got `{text}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if !seen.insert(key.to_string()) {
            return Err(err(no, format!("duplicate key `{key}`")));
        }
        match key {
            "name" => cfg.name = value.to_string(),
            "measure" => {
                if let Some(prev) = measure_source.replace(no) {
                    return Err(err(no, format!("measure already given on line {prev}")));
                }
                cfg.measure = match value {
                    "m1" => fixtures::m1(),
                    "m2" => fixtures::m2(),
                    other => return Err(err(no, format!("unknown fixture `{other}` (m1, m2)"))),
                };
            }
            "measure_file" => {
                if let Some(prev) = measure_source.replace(no) {
                    return Err(err(no, format!("measure already given on line {prev}")));
                }
                let body = read_file(value).map_err(|e| err(no, format!("reading `{value}`: {e}")))?;
                cfg.measure = parse_measure_lines(body.lines().enumerate().map(|(i, l)| (i + 1, l)), no)
                    .map_err(|e| err(no, format!("in `{value}`: {e}")))?;
            }
            "q" => cfg.q = vector(no, key, value)?,
            "radii" => {
                let r: Vec<f64> = numbers(no, key, value)?;
                cfg.radii = if r.is_empty() { DEFAULT_RADII.to_vec() } else { r };
            }
            "kind" => cfg.kind = WalkKind::parse(value).map_err(|e| err(no, e.to_string()))?,
            "twist" => cfg.twist = Some(vector(no, key, value)?),
            "region" => {
                let [x0, x1, y0, y1] = exactly::<i64, 4>(no, key, value)?;
                if x1 < x0 || y1 < y0 {
                    return Err(err(no, "`region` needs x_lo ≤ x_hi and y_lo ≤ y_hi"));
                }
                cfg.region.x_range = (x0, x1);
                cfg.region.y_range = (y0, y1);
            }
            "margin" => cfg.margin = scalar(no, key, value)?,
            "target" => cfg.target = point(no, key, value)?,
            "z0" => cfg.z0 = point(no, key, value)?,
            "points" => {
                cfg.points = value
                    .split(';')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| point(no, key, s))
                    .collect::<Result<_>>()?;
            }
            "w" => cfg.w = point(no, key, value)?,
            "delta" => cfg.delta = scalar(no, key, value)?,
            "scan_delta" => cfg.scan_delta = scalar(no, key, value)?,
            "sigma" => cfg.sigma = scalar(no, key, value)?,
            "seed" => cfg.seed = scalar(no, key, value)?,
            "mc_samples" => cfg.mc_samples = scalar(no, key, value)?,
            "mc_horizon" => cfg.mc_horizon = scalar(no, key, value)?,
            "mc_start" => cfg.mc_start = point(no, key, value)?,
            "tolerance" => cfg.tolerance = scalar(no, key, value)?,
            "bracket_tol" => cfg.bracket_tol = scalar(no, key, value)?,
            "sweep" => cfg.sweep = scalar(no, key, value)?,
            other => return Err(err(no, format!("unknown key `{other}`"))),
        }
    }
    if cfg.margin < 1 {
        return Err(err(0, "`margin` must be positive"));
    }
    cfg.region.margin = cfg.margin;
    Ok(cfg)
}

/// Parses a configuration; `measure_file` paths are read from disk.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_with(text, &|p| std::fs::read_to_string(p))
}
