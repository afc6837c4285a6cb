//! Twisted cohomological equation `(X+m)f = g` for the geodesic flow in the
//! irreducible unitary models of SL(2,R).
//!
//! Vectors are finitely supported in the weight basis `{u_k}`. The crate builds
//! the basic solutions `f_{n}`, evaluates the obstruction functionals, assembles
//! full and one-sided solutions, and carries an independent least-squares
//! oracle for the truncated coefficient system.

pub mod basic_solutions;
pub mod error;
pub mod fit;
pub mod obstructions;
pub mod rep_model;
pub mod solver;
pub mod spectral_ops;

mod banded;

pub use error::{Error, Result};
pub use rep_model::{CoeffVector, Delta, RepParams, Series, SobolevOrder, C64};
