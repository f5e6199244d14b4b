//! Verification engine for neutral (2,2) four-manifold geometry and the
//! hyperbolic twistor spaces built over it.
//!
//! The crate evaluates closed-form geometric identities (curvature
//! decomposition, Nijenhuis tensors, fundamental-form derivatives,
//! Cauchy–Riemann systems) and cross-checks each against an independent
//! numerical oracle.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod bivector;
pub mod builtin;
pub mod error;
pub mod expr;
pub mod geometry;
pub mod jet;
pub mod parahermitian;
pub mod petean;
pub mod report;
pub mod sampling;
pub mod selftest;
pub mod specfile;
pub mod twistor;

pub use error::{Error, Result};
