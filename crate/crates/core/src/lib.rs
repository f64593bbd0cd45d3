//! Numerics for random walks on ℤ² killed outside the positive quadrant: the
//! geometry of the jump generating function, Green functions of free and
//! killed walks, boundary functionals, the harmonic functions `h_a`, and
//! drivers that test Martin-kernel limit theorems numerically.

pub mod boundary;
pub mod error;
pub mod geometry;
pub mod green;
pub mod lattice;
pub mod limits;
pub mod linalg;
pub mod processes;
pub mod vector;
pub mod verify;

pub use error::{Error, Result};
pub use lattice::JumpMeasure;
pub use vector::{Point, Vec2};
