//! Heisenberg group geometry and a discrete Minkowski-problem solver.

pub mod body;
pub mod convexity;
pub mod density;
pub mod error;
pub mod geodesic;
pub mod geometry;
pub mod grid;
pub mod group;
pub mod io;
pub mod measure;
pub mod numeric;
pub mod polytope;
pub mod sampling;
pub mod solver;

pub use error::{Error, Result};
pub use group::{GroupPoint, HorizontalVector};
