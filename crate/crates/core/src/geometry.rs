//! Convex geometry of the jump generating function `φ(a) = Σ μ(z) e^{a·z}` and
//! of the compact set `D = {φ ≤ 1}`: derivatives, the spectral map `q ↦ a(q)`,
//! the convex conjugate of `log φ`, sample-path rate functionals and the
//! two-piece rate `λ_ε`.

use crate::error::{Error, Result};
use crate::lattice::JumpMeasure;
use crate::vector::{Point, Sym2, Vec2};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

/// Numerical tolerances shared by every geometric solve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Target residual of Newton iterations (gradient norm, `|φ − 1|`).
    pub newton_tol: f64,
    /// Angular tolerance on `∇φ(a(q))` versus `q`, in radians.
    pub angle_tol: f64,
    /// Iteration cap of every Newton loop.
    pub max_iter: usize,
    /// Directions closer than this angle to an axis are treated as the axis.
    pub axis_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            newton_tol: 1e-12,
            angle_tol: 1e-8,
            max_iter: 100,
            axis_tol: 1e-9,
        }
    }
}

/// `φ(a)`.
pub fn phi(measure: &JumpMeasure, a: Vec2) -> f64 {
    measure
        .entries()
        .iter()
        .map(|&(z, p)| p * a.dot_point(z).exp())
        .sum()
}

/// `∇φ(a) = Σ z μ(z) e^{a·z}`.
pub fn grad_phi(measure: &JumpMeasure, a: Vec2) -> Vec2 {
    measure.entries().iter().fold(Vec2::ZERO, |acc, &(z, p)| {
        acc + z.as_vec() * (p * a.dot_point(z).exp())
    })
}

/// `∇²φ(a) = Σ z zᵀ μ(z) e^{a·z}`.
pub fn hessian_phi(measure: &JumpMeasure, a: Vec2) -> Sym2 {
    let mut h = Sym2::default();
    for &(z, p) in measure.entries() {
        let w = p * a.dot_point(z).exp();
        let (x, y) = (z.x as f64, z.y as f64);
        h.xx += w * x * x;
        h.xy += w * x * y;
        h.yy += w * y * y;
    }
    h
}

/// `log φ` with its gradient and Hessian (the mean and covariance of the
/// normalised twisted step), evaluated with a max-shift so large `|a|` cannot
/// overflow.
#[derive(Clone, Copy, Debug)]
pub struct LogPhi {
    pub value: f64,
    pub grad: Vec2,
    pub hess: Sym2,
}

pub fn log_phi(measure: &JumpMeasure, a: Vec2) -> LogPhi {
    let shift = measure
        .support()
        .map(|z| a.dot_point(z))
        .fold(f64::NEG_INFINITY, f64::max);
    let (mut s, mut m, mut h) = (0.0, Vec2::ZERO, Sym2::default());
    for &(z, p) in measure.entries() {
        let w = p * (a.dot_point(z) - shift).exp();
        let (x, y) = (z.x as f64, z.y as f64);
        s += w;
        m = m + Vec2::new(x, y) * w;
        h.xx += w * x * x;
        h.xy += w * x * y;
        h.yy += w * y * y;
    }
    let mean = m * (1.0 / s);
    let hess = Sym2 {
        xx: h.xx / s - mean.x * mean.x,
        xy: h.xy / s - mean.x * mean.y,
        yy: h.yy / s - mean.y * mean.y,
    };
    LogPhi {
        value: shift + s.ln(),
        grad: mean,
        hess,
    }
}

/// The unique minimiser of `φ`, by damped Newton on `log φ` started at 0.
pub fn min_point(measure: &JumpMeasure) -> Result<Vec2> {
    min_point_with(measure, &Tolerances::default())
}

pub fn min_point_with(measure: &JumpMeasure, tol: &Tolerances) -> Result<Vec2> {
    let mut a = Vec2::ZERO;
    let mut lp = log_phi(measure, a);
    for _ in 0..tol.max_iter {
        let g = grad_phi(measure, a);
        if g.norm() <= 0.1 * tol.newton_tol {
            return Ok(a);
        }
        let step = lp.hess.solve(-lp.grad).ok_or_else(|| {
            Error::Hypothesis("φ is not strictly convex: support does not span the plane".into())
        })?;
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-12 {
            let cand = a + step * t;
            let lc = log_phi(measure, cand);
            // Near the minimum the Armijo decrease (≈ |∇|²) drops below the
            // resolution of log φ; a step that halves the gradient is then
            // accepted instead, since Newton converges quadratically there.
            let decreases = lc.value <= lp.value + 1e-4 * t * lp.grad.dot(step);
            if decreases || lc.grad.norm() <= 0.5 * lp.grad.norm() {
                a = cand;
                lp = lc;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // No further decrease is representable; accept if the gradient is tiny.
            break;
        }
    }
    let g = grad_phi(measure, a);
    if g.norm() <= tol.newton_tol {
        Ok(a)
    } else {
        Err(Error::NoConvergence {
            what: "minimiser of φ",
            iterations: tol.max_iter,
            residual: g.norm(),
        })
    }
}

/// Largest `t ≥ 0` with `φ(base + t·dir) = 1`, assuming `φ(base) < 1`
/// (so the ray leaves the compact set `D` exactly once).
pub fn ray_exit(measure: &JumpMeasure, base: Vec2, dir: Vec2) -> Result<f64> {
    let f = |t: f64| phi(measure, base + dir * t) - 1.0;
    if f(0.0) >= 0.0 {
        return Err(Error::Input(format!("ray base {base} is not inside D")));
    }
    let mut hi = 1.0;
    let mut iter = 0;
    while f(hi) < 0.0 {
        hi *= 2.0;
        iter += 1;
        if iter > 200 {
            return Err(Error::Hypothesis(format!("D is unbounded in direction {dir}")));
        }
    }
    bracketed_root(f, 0.0, hi)
}

/// Root of a function with `f(lo) < 0 ≤ f(hi)` by bisection to full precision.
fn bracketed_root(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> Result<f64> {
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Of the two adjacent floats, return the one closer to the root.
    Ok(if f(lo).abs() <= f(hi).abs() { lo } else { hi })
}

/// Both solutions `t_lo ≤ t_hi` of `φ(base + t·dir) = 1`, or `None` when the
/// line misses `D`. The function is convex along the line, so there are at most two.
pub fn line_roots(measure: &JumpMeasure, base: Vec2, dir: Vec2) -> Result<Option<(f64, f64)>> {
    // Minimise g(t) = φ(base + t dir) by safeguarded Newton.
    let g = |t: f64| phi(measure, base + dir * t);
    let d1 = |t: f64| grad_phi(measure, base + dir * t).dot(dir);
    let d2 = |t: f64| {
        let h = hessian_phi(measure, base + dir * t);
        h.apply(dir).dot(dir)
    };
    let mut t = 0.0;
    for _ in 0..200 {
        let (g1, g2) = (d1(t), d2(t));
        if !(g2 > 0.0) {
            return Err(Error::Hypothesis(format!("φ is flat along direction {dir}")));
        }
        let step = -g1 / g2;
        // Newton on a convex function can overshoot far from the minimum; cap the step.
        let step = step.clamp(-4.0, 4.0);
        t += step;
        if step.abs() <= 1e-15 * (1.0 + t.abs()) {
            break;
        }
    }
    if g(t) >= 1.0 {
        return Ok(None);
    }
    let mut lo = 1.0;
    while g(t - lo) < 1.0 {
        lo *= 2.0;
    }
    let mut hi = 1.0;
    while g(t + hi) < 1.0 {
        hi *= 2.0;
    }
    let left = bracketed_root(|s| g(t - s) - 1.0, 0.0, lo)?;
    let right = bracketed_root(|s| g(t + s) - 1.0, 0.0, hi)?;
    Ok(Some((t - left, t + right)))
}

/// A point of `∂D` with its outward unit normal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralPoint {
    pub a: Vec2,
    pub q: Vec2,
    pub gradient_norm: f64,
}

impl SpectralPoint {
    /// The exponential rate `a(q)·q`.
    pub fn rate(&self) -> f64 {
        self.a.dot(self.q)
    }
}

/// Which formula of the harmonic function family applies to a direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    /// `q = (1, 0)`.
    Critical10,
    /// `q = (0, 1)`.
    Critical01,
    /// Any other direction.
    Interior,
}

/// Classifies a direction; axis directions are recognised within `axis_tol`.
pub fn classify(q: Vec2, tol: &Tolerances) -> Direction {
    let q = q.normalized();
    if q.angle_to(Vec2::new(1.0, 0.0)) < tol.axis_tol {
        Direction::Critical10
    } else if q.angle_to(Vec2::new(0.0, 1.0)) < tol.axis_tol {
        Direction::Critical01
    } else {
        Direction::Interior
    }
}

fn wrap_angle(x: f64) -> f64 {
    let mut y = x % (2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    } else if y <= -PI {
        y += 2.0 * PI;
    }
    y
}

/// The point `a(q) = argmax_{a ∈ D} a·q` of `∂D` with outward normal `q`.
pub fn a_of_q(measure: &JumpMeasure, q: Vec2) -> Result<SpectralPoint> {
    a_of_q_with(measure, q, &Tolerances::default())
}

/// See [`a_of_q`]. The boundary is parametrised by the polar angle around the
/// minimiser of `φ`; the angle whose boundary normal matches `q` is bracketed
/// by bisection (the normal turns monotonically on a strictly convex curve)
/// and then polished by Newton on `{∇φ(a) = λq, φ(a) = 1}`.
pub fn a_of_q_with(measure: &JumpMeasure, q: Vec2, tol: &Tolerances) -> Result<SpectralPoint> {
    let qn = q.norm();
    if !(qn.is_finite() && qn > 0.0) {
        return Err(Error::Input(format!("direction {q} must be nonzero")));
    }
    let q = q * (1.0 / qn);
    let center = min_point_with(measure, tol)?;
    let boundary = |theta: f64| -> Result<Vec2> {
        let u = Vec2::polar(theta);
        Ok(center + u * ray_exit(measure, center, u)?)
    };
    let alpha = q.angle();
    let (mut lo, mut hi) = (alpha - FRAC_PI_2, alpha + FRAC_PI_2);
    let mut a = boundary(alpha)?;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        a = boundary(mid)?;
        let d = wrap_angle(grad_phi(measure, a).angle() - alpha);
        if d > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-4 * tol.angle_tol {
            break;
        }
    }
    // Newton polish of the KKT system.
    let mut lambda = grad_phi(measure, a).norm();
    for _ in 0..tol.max_iter {
        let g = grad_phi(measure, a);
        let f = phi(measure, a) - 1.0;
        let r = g - q * lambda;
        if f.abs() <= 0.01 * tol.newton_tol && r.norm() <= 0.01 * tol.newton_tol * lambda {
            break;
        }
        let h = hessian_phi(measure, a);
        // Solve [[H, -q], [gᵀ, 0]] (da, dλ) = -(r, f).
        let m = [
            [h.xx, h.xy, -q.x],
            [h.xy, h.yy, -q.y],
            [g.x, g.y, 0.0],
        ];
        let Some(d) = solve3(m, [-r.x, -r.y, -f]) else { break };
        let step = Vec2::new(d[0], d[1]);
        if !(step.norm().is_finite()) || step.norm() > 1.0 {
            break;
        }
        a = a + step;
        lambda += d[2];
        if step.norm() <= 1e-16 * (1.0 + a.norm()) {
            break;
        }
    }
    // Radial projection restores φ = 1 to the last bit.
    let u = a - center;
    let un = u.norm();
    let a = center + u * (ray_exit(measure, center, u * (1.0 / un))? / un);
    let g = grad_phi(measure, a);
    let sp = SpectralPoint {
        a,
        q,
        gradient_norm: g.norm(),
    };
    let phi_err = (phi(measure, a) - 1.0).abs();
    let ang = g.angle_to(q);
    if phi_err > 1e-10 || ang > tol.angle_tol {
        return Err(Error::NoConvergence {
            what: "spectral point a(q)",
            iterations: tol.max_iter,
            residual: phi_err.max(ang),
        });
    }
    Ok(sp)
}

fn solve3(m: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(&m);
    if !(d.abs() > 1e-300) {
        return None;
    }
    let mut out = [0.0; 3];
    for (col, o) in out.iter_mut().enumerate() {
        let mut mc = m;
        for row in 0..3 {
            mc[row][col] = b[row];
        }
        *o = det(&mc) / d;
    }
    Some(out)
}

/// Value of the convex conjugate `(log φ)*(v) = sup_a (a·v − log φ(a))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateValue {
    /// `f64::INFINITY` when the supremum is infinite.
    pub value: f64,
    /// Maximiser, when the supremum is attained.
    pub argmax: Option<Vec2>,
}

impl RateValue {
    pub const INFINITE: RateValue = RateValue {
        value: f64::INFINITY,
        argmax: None,
    };

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }
}

/// Convex hull of the support, counter-clockwise, collinear points dropped.
fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort();
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: Point, a: Point, b: Point| (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
    let mut hull: Vec<Point> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

/// The convex conjugate of `log φ` at `v`.
///
/// Inside the convex hull of the support the supremum is attained and found by
/// damped Newton. On a face of the hull it is the conjugate of the measure
/// restricted to that face (the supremum is approached at infinity). Outside
/// the hull it is infinite.
pub fn legendre(measure: &JumpMeasure, v: Vec2) -> RateValue {
    let support: Vec<Point> = measure.support().collect();
    let hull = convex_hull(&support);
    let scale = 1.0 + v.norm();
    let eps = 1e-12 * scale;
    match hull.len() {
        1 => {
            return if v.max_abs_diff(hull[0].as_vec()) <= eps {
                RateValue { value: 0.0, argmax: None }
            } else {
                RateValue::INFINITE
            };
        }
        2 => return face_conjugate(measure, hull[0], hull[1], v, eps),
        _ => {}
    }
    let n = hull.len();
    let mut on_edge = None;
    for i in 0..n {
        let (p, r) = (hull[i].as_vec(), hull[(i + 1) % n].as_vec());
        let e = r - p;
        let c = e.cross(v - p) / e.norm();
        if c < -eps {
            return RateValue::INFINITE;
        }
        if c <= eps {
            on_edge = Some(i);
        }
    }
    if let Some(i) = on_edge {
        return face_conjugate(measure, hull[i], hull[(i + 1) % n], v, eps);
    }
    interior_conjugate(measure, v)
}

/// Conjugate at a point of the segment `[p, r]`, using only the mass carried by
/// support points on that segment's line.
fn face_conjugate(measure: &JumpMeasure, p: Point, r: Point, v: Vec2, eps: f64) -> RateValue {
    let (pv, e) = (p.as_vec(), (r - p).as_vec());
    let len2 = e.dot(e);
    let s = (v - pv).dot(e) / len2;
    if (e.cross(v - pv) / len2.sqrt()).abs() > eps || s < -eps || s > 1.0 + eps {
        return RateValue::INFINITE;
    }
    // Points of the face, by their coordinate along the edge (0 at p, 1 at r).
    let face: Vec<(f64, f64)> = measure
        .entries()
        .iter()
        .filter(|(z, _)| e.cross(z.as_vec() - pv).abs() <= 1e-9)
        .map(|&(z, m)| ((z.as_vec() - pv).dot(e) / len2, m))
        .collect();
    let at = |t: f64| face.iter().filter(|f| (f.0 - t).abs() <= 1e-12).map(|f| f.1).sum::<f64>();
    if s <= 1e-12 {
        return RateValue { value: -at(0.0).ln(), argmax: None };
    }
    if s >= 1.0 - 1e-12 {
        return RateValue { value: -at(1.0).ln(), argmax: None };
    }
    // sup_b (b s − log Σ m e^{b t}) by Newton in one variable.
    let lse = |b: f64| {
        let mx = face.iter().map(|f| b * f.0).fold(f64::NEG_INFINITY, f64::max);
        let (mut z0, mut z1, mut z2) = (0.0, 0.0, 0.0);
        for &(t, m) in &face {
            let w = m * (b * t - mx).exp();
            z0 += w;
            z1 += w * t;
            z2 += w * t * t;
        }
        let mean = z1 / z0;
        (mx + z0.ln(), mean, z2 / z0 - mean * mean)
    };
    let mut b = 0.0;
    for _ in 0..200 {
        let (_, mean, var) = lse(b);
        let step = ((s - mean) / var).clamp(-8.0, 8.0);
        b += step;
        if step.abs() < 1e-14 * (1.0 + b.abs()) {
            break;
        }
    }
    let (l, _, _) = lse(b);
    RateValue { value: b * s - l, argmax: None }
}

fn interior_conjugate(measure: &JumpMeasure, v: Vec2) -> RateValue {
    let obj = |a: Vec2| a.dot(v) - log_phi(measure, a).value;
    let mut a = Vec2::ZERO;
    for _ in 0..500 {
        let lp = log_phi(measure, a);
        let g = v - lp.grad;
        if g.norm() <= 1e-13 * (1.0 + v.norm()) {
            break;
        }
        let Some(step) = lp.hess.solve(g) else { break };
        let f0 = obj(a);
        let mut t = 1.0;
        let mut moved = false;
        while t > 1e-14 {
            let cand = a + step * t;
            if obj(cand) >= f0 + 1e-4 * t * g.dot(step) {
                a = cand;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    RateValue {
        value: obj(a).max(0.0),
        argmax: Some(a),
    }
}

/// Constraint imposed on a sample path by the killing rule of a walk.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PathConstraint {
    None,
    /// Second coordinate stays non-negative.
    HalfPlane1,
    /// First coordinate stays non-negative.
    HalfPlane2,
    /// Both coordinates stay non-negative.
    Quadrant,
}

impl PathConstraint {
    fn admits(self, p: Vec2) -> bool {
        match self {
            PathConstraint::None => true,
            PathConstraint::HalfPlane1 => p.y >= 0.0,
            PathConstraint::HalfPlane2 => p.x >= 0.0,
            PathConstraint::Quadrant => p.x >= 0.0 && p.y >= 0.0,
        }
    }
}

/// Rate functional of a piecewise-linear path given by `(time, position)`
/// breakpoints: `Σ duration · (log φ)*(slope)`, or `+∞` when the path violates
/// the constraint. The constraint sets are convex, so checking breakpoints
/// suffices for linear segments.
pub fn pathwise_rate(
    measure: &JumpMeasure,
    path: &[(f64, Vec2)],
    constraint: PathConstraint,
) -> Result<f64> {
    if path.len() < 2 {
        return Err(Error::Input("a path needs at least two breakpoints".into()));
    }
    if path.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::Input("path breakpoint times must be strictly increasing".into()));
    }
    if path.iter().any(|&(_, p)| !constraint.admits(p)) {
        return Ok(f64::INFINITY);
    }
    let mut total = 0.0;
    for w in path.windows(2) {
        let dt = w[1].0 - w[0].0;
        let slope = (w[1].1 - w[0].1) * (1.0 / dt);
        let r = legendre(measure, slope);
        if !r.is_finite() {
            return Ok(f64::INFINITY);
        }
        total += dt * r.value;
    }
    Ok(total)
}

/// `λ_ε(q, w) = a(w)·w + a(q−w)·(q−w) − ε|w|`, with `a(·)` of a nonzero vector
/// taken at its direction.
pub fn lambda_eps(measure: &JumpMeasure, q: Vec2, w: Vec2, eps: f64) -> Result<f64> {
    let r = q - w;
    let tiny = 1e-12 * (1.0 + q.norm());
    if w.norm() <= tiny || r.norm() <= tiny {
        return Err(Error::Input("λ_ε needs w ≠ 0 and w ≠ q".into()));
    }
    let aw = a_of_q(measure, w)?.a;
    let ar = a_of_q(measure, r)?.a;
    Ok(aw.dot(w) + ar.dot(r) - eps * w.norm())
}

/// `n` unit directions spread uniformly over the circle, starting at angle 0.
pub fn circle_directions(n: usize) -> Vec<Vec2> {
    (0..n)
        .map(|k| Vec2::polar(2.0 * PI * k as f64 / n as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::fixtures::{m1, m2};

    #[test]
    fn phi_at_origin_and_on_diagonal() {
        assert!((phi(&m1(), Vec2::ZERO) - 1.0).abs() < 1e-15);
        let t = (3.0f64 / 7.0).ln();
        assert!((phi(&m1(), Vec2::new(t, t)) - 1.0).abs() < 1e-14);
        let g = grad_phi(&m1(), Vec2::ZERO);
        assert!(g.max_abs_diff(Vec2::new(0.2, 0.2)) < 1e-15);
        let h = hessian_phi(&m1(), Vec2::ZERO);
        assert!((h.xx - 0.5).abs() < 1e-15 && h.xy == 0.0 && (h.yy - 0.5).abs() < 1e-15);
    }

    #[test]
    fn minimiser_of_m1() {
        let a = min_point(&m1()).unwrap();
        let t = 0.5 * (3.0f64 / 7.0).ln();
        assert!(a.max_abs_diff(Vec2::new(t, t)) < 1e-12);
        assert!(grad_phi(&m2(), min_point(&m2()).unwrap()).norm() <= 1e-12);
    }

    #[test]
    fn spectral_point_on_axes() {
        let m = m1();
        let sp = a_of_q(&m, Vec2::new(1.0, 0.0)).unwrap();
        // Closed form: e^{2 a₂} = 3/7 and φ = 1 is a quadratic in x = e^{a₁}.
        let c = 2.0 * (0.35f64 * 0.15).sqrt();
        let x = ((1.0 - c) + ((1.0 - c).powi(2) - 4.0 * 0.35 * 0.15).sqrt()) / (2.0 * 0.35);
        assert!(sp.a.max_abs_diff(Vec2::new(x.ln(), 0.5 * (3.0f64 / 7.0).ln())) < 1e-10);
        let diag = a_of_q(&m, Vec2::new(1.0, 1.0)).unwrap();
        assert!(diag.a.norm() < 1e-10);
        let sw = a_of_q(&m, Vec2::new(0.0, 1.0)).unwrap();
        assert!(sw.a.max_abs_diff(sp.a.swap()) < 1e-10);
    }

    #[test]
    fn classification() {
        let t = Tolerances::default();
        assert_eq!(classify(Vec2::new(1.0, 0.0), &t), Direction::Critical10);
        assert_eq!(classify(Vec2::new(1.0, 1e-12), &t), Direction::Critical10);
        assert_eq!(classify(Vec2::new(0.0, 2.0), &t), Direction::Critical01);
        assert_eq!(classify(Vec2::new(1.0, 1e-6), &t), Direction::Interior);
    }

    #[test]
    fn conjugate_special_values() {
        let m = m1();
        let r = legendre(&m, Vec2::new(0.2, 0.2));
        assert!(r.value.abs() < 1e-14);
        assert!(r.argmax.unwrap().norm() < 1e-10);
        assert!(!legendre(&m, Vec2::new(5.0, 0.0)).is_finite());
        // Vertex of the hull: −log μ(vertex).
        assert!((legendre(&m, Vec2::new(1.0, 0.0)).value + 0.35f64.ln()).abs() < 1e-12);
        // Midpoint of the edge between (1,0) and (0,1): sup_b (b/2 − log(0.35 + 0.35 e^b)) at b = 0.
        let mid = legendre(&m, Vec2::new(0.5, 0.5)).value;
        assert!((mid + 0.7f64.ln()).abs() < 1e-12, "{mid}");
    }

    #[test]
    fn convex_hull_drops_interior_and_collinear_points() {
        let pts = [
            Point::new(0, 0),
            Point::new(1, 0),
            Point::new(2, 0),
            Point::new(0, 2),
            Point::new(1, 1),
            Point::new(2, 2),
        ];
        let h = convex_hull(&pts);
        assert_eq!(h, vec![Point::new(0, 0), Point::new(2, 0), Point::new(2, 2), Point::new(0, 2)]);
    }

    #[test]
    fn path_rate_rejects_bad_times_and_constraint_violations() {
        let m = m1();
        let p = [(0.0, Vec2::ZERO), (0.0, Vec2::new(1.0, 1.0))];
        assert!(pathwise_rate(&m, &p, PathConstraint::None).is_err());
        let leave = [(0.0, Vec2::new(1.0, 1.0)), (10.0, Vec2::new(-1.0, 3.0))];
        assert_eq!(pathwise_rate(&m, &leave, PathConstraint::Quadrant).unwrap(), f64::INFINITY);
        assert!(pathwise_rate(&m, &leave, PathConstraint::HalfPlane1).unwrap().is_finite());
        let mean_path = [(0.0, Vec2::ZERO), (3.0, Vec2::new(0.6, 0.6))];
        assert!(pathwise_rate(&m, &mean_path, PathConstraint::None).unwrap().abs() < 1e-14);
    }

    #[test]
    fn lambda_rejects_degenerate_splits() {
        let q = Vec2::new(1.0, 0.0);
        assert!(lambda_eps(&m1(), q, Vec2::ZERO, 0.0).is_err());
        assert!(lambda_eps(&m1(), q, q, 0.0).is_err());
    }
}
