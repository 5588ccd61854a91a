//! Numerical toolkit for conformal Kaehler submanifolds of Euclidean space.
//!
//! The crate is organised bottom-up:
//!
//! - [`linalg`]: indefinite inner product spaces and their subspaces.
//! - [`kaehler`]: complex structures and paired spaces `W^{p,p}`.
//! - [`flat_forms`]: the forms `α`, `β`, `γ`, flatness and the degenerate split.
//! - [`lightcone`]: the light-cone embedding `ψ` of Euclidean space and the
//!   correspondence between conformal and light-cone isometric immersions.
//! - [`immersions`]: surface charts, product immersions and point data.
//! - [`scenarios`]: end-to-end verification pipelines producing reports.

pub mod error;
pub mod flat_forms;
pub mod immersions;
pub mod kaehler;
pub mod lightcone;
pub mod linalg;
pub mod scenarios;

pub use error::{GeometryError, Result};
pub use linalg::{QuadSpace, Subspace, TolerancePolicy};
