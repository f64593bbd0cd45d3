//! Sparse direct solves of `(I − P) x = b` for a translation-invariant kernel
//! restricted to a rectangle of ℤ², with iterative refinement.

use crate::error::{Error, Result};
use crate::lattice::Offset;
use crate::vector::Point;
use faer::prelude::*;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Par};
use std::sync::Once;

/// Residual (max-norm, relative to the right-hand side) targeted by refinement.
pub const SOLVE_TOLERANCE: f64 = 1e-11;

const MAX_REFINEMENT: usize = 8;

/// A rectangle `[x0, x0+nx) × [y0, y0+ny)` of lattice points, indexed row-major in x.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Grid {
    pub x0: i64,
    pub y0: i64,
    pub nx: usize,
    pub ny: usize,
}

impl Grid {
    /// The rectangle with the given inclusive corners; empty ranges are rejected.
    pub fn from_corners(lo: Point, hi: Point) -> Result<Self> {
        if hi.x < lo.x || hi.y < lo.y {
            return Err(Error::Input(format!("empty grid between {lo} and {hi}")));
        }
        Ok(Self {
            x0: lo.x,
            y0: lo.y,
            nx: (hi.x - lo.x + 1) as usize,
            ny: (hi.y - lo.y + 1) as usize,
        })
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn lo(&self) -> Point {
        Point::new(self.x0, self.y0)
    }

    pub fn hi(&self) -> Point {
        Point::new(self.x0 + self.nx as i64 - 1, self.y0 + self.ny as i64 - 1)
    }

    pub fn contains(&self, p: Point) -> bool {
        self.index(p).is_some()
    }

    pub fn index(&self, p: Point) -> Option<usize> {
        let dx = p.x - self.x0;
        let dy = p.y - self.y0;
        (dx >= 0 && dy >= 0 && (dx as usize) < self.nx && (dy as usize) < self.ny)
            .then(|| dx as usize * self.ny + dy as usize)
    }

    pub fn point(&self, i: usize) -> Point {
        Point::new(self.x0 + (i / self.ny) as i64, self.y0 + (i % self.ny) as i64)
    }

    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.len()).map(|i| self.point(i))
    }
}

/// LU factorisation of `I − P` on a grid, where `P(z, z+s) = w(s)` for
/// `z + s` inside the grid and every other transition is dropped.
pub struct StencilSystem {
    grid: Grid,
    steps: Vec<(Offset, f64)>,
    lu: Lu<usize, f64>,
}

/// Pins faer's internal parallelism to sequential. Its parallel kernels split
/// work by the size of the rayon pool, which changes the rounding of
/// factorisations with the thread count; independent solves still run in
/// parallel at the caller's level.
fn sequential_kernels() {
    static PIN: Once = Once::new();
    PIN.call_once(|| faer::set_global_parallelism(Par::Seq));
}

impl StencilSystem {
    pub fn new(grid: Grid, steps: &[(Offset, f64)]) -> Result<Self> {
        sequential_kernels();
        let n = grid.len();
        let mut trips = Vec::with_capacity(n * (steps.len() + 1));
        for i in 0..n {
            let z = grid.point(i);
            let mut diag = 1.0;
            for &(s, w) in steps {
                match grid.index(z + s) {
                    Some(j) if j == i => diag -= w,
                    Some(j) => trips.push(Triplet::new(i, j, -w)),
                    None => {}
                }
            }
            trips.push(Triplet::new(i, i, diag));
        }
        let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &trips)
            .map_err(|e| Error::Solver(format!("assembling {n}×{n} system: {e:?}")))?;
        let lu = a
            .sp_lu()
            .map_err(|e| Error::Solver(format!("factorising {n}×{n} system: {e:?}")))?;
        Ok(Self {
            grid,
            steps: steps.to_vec(),
            lu,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `(I − P) x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let g = &self.grid;
        (0..g.len())
            .map(|i| {
                let z = g.point(i);
                let mut v = x[i];
                for &(s, w) in &self.steps {
                    if let Some(j) = g.index(z + s) {
                        v -= w * x[j];
                    }
                }
                v
            })
            .collect()
    }

    /// `(I − P)ᵀ x`.
    pub fn apply_adjoint(&self, x: &[f64]) -> Vec<f64> {
        let g = &self.grid;
        let mut out = x.to_vec();
        for i in 0..g.len() {
            let z = g.point(i);
            for &(s, w) in &self.steps {
                if let Some(j) = g.index(z + s) {
                    out[j] -= w * x[i];
                }
            }
        }
        out
    }

    /// Solves `(I − P) x = b` for every column of `rhs`.
    pub fn solve_many(&self, rhs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        self.solve_impl(rhs, false)
    }

    /// Solves `(I − P)ᵀ x = b` for every column of `rhs`.
    pub fn solve_adjoint_many(&self, rhs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        self.solve_impl(rhs, true)
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        Ok(self.solve_many(&[rhs.to_vec()])?.pop().expect("one column"))
    }

    pub fn solve_adjoint(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        Ok(self.solve_adjoint_many(&[rhs.to_vec()])?.pop().expect("one column"))
    }

    fn raw_solve(&self, cols: &[Vec<f64>], adjoint: bool) -> Vec<Vec<f64>> {
        let n = self.grid.len();
        let mut m = Mat::<f64>::from_fn(n, cols.len(), |i, j| cols[j][i]);
        if adjoint {
            self.lu.solve_transpose_in_place(m.as_mut());
        } else {
            self.lu.solve_in_place(m.as_mut());
        }
        (0..cols.len())
            .map(|j| (0..n).map(|i| m[(i, j)]).collect())
            .collect()
    }

    fn residual(&self, x: &[f64], b: &[f64], adjoint: bool) -> Vec<f64> {
        let ax = if adjoint { self.apply_adjoint(x) } else { self.apply(x) };
        b.iter().zip(&ax).map(|(b, a)| b - a).collect()
    }

    fn solve_impl(&self, rhs: &[Vec<f64>], adjoint: bool) -> Result<Vec<Vec<f64>>> {
        let n = self.grid.len();
        if rhs.iter().any(|c| c.len() != n) {
            return Err(Error::Input(format!("right-hand side length must be {n}")));
        }
        let mut xs = self.raw_solve(rhs, adjoint);
        for (x, b) in xs.iter_mut().zip(rhs) {
            let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
            let mut res = self.residual(x, b, adjoint);
            let mut norm = res.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let mut iter = 0;
            while norm > 0.01 * SOLVE_TOLERANCE * scale && iter < MAX_REFINEMENT {
                let dx = self.raw_solve(&[res.clone()], adjoint).pop().expect("one column");
                let cand: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + d).collect();
                let cand_res = self.residual(&cand, b, adjoint);
                let cand_norm = cand_res.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                if cand_norm >= norm {
                    break;
                }
                *x = cand;
                res = cand_res;
                norm = cand_norm;
                iter += 1;
            }
            if !(norm <= SOLVE_TOLERANCE * scale) {
                return Err(Error::NoConvergence {
                    what: "iterative refinement",
                    iterations: iter,
                    residual: norm / scale,
                });
            }
        }
        Ok(xs)
    }
}
