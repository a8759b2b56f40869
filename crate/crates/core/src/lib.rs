//! Transversality defect analysis for parametrized families of maps.
//!
//! A family `F(x, a)` of maps from an `n`-dimensional slice variable `x`,
//! parametrized by an `m`-dimensional parameter `a`, is studied against a
//! submanifold `Z` of the target. The library measures how far `F` and its
//! slices `F_a = F(., a)` are from being transverse to `Z` at a point, sorts
//! points into strata by slice/family defect, constructs local models that
//! restore transversality after a controlled dimension drop, and estimates by
//! seeded sampling whether non-transverse parameters form a negligible set.
//!
//! All coordinates and grids are exact rationals. Linear algebra runs either
//! over exact rationals or over `f64` with explicit tolerances; the backend is
//! chosen at the call site and threaded through every rank decision.

pub mod defect;
pub mod expr;
pub mod genericity;
pub mod geometry;
pub mod linalg;
pub mod local_model;
pub mod scenario;

pub use linalg::{Backend, ExactBackend, FloatBackend, Matrix, Rat, Scalar, ScalarBackend};
