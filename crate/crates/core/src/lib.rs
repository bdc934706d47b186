//! Numerical toolkit for the Caffarelli–Silvestre extension of the fractional
//! Laplacian in one boundary dimension.
//!
//! The crate provides
//!
//! * the logarithmically convex Carleman weight and its derivatives ([`weights`]),
//! * graded half-plane grids, weighted quadrature and vanishing-order fits ([`grid`]),
//! * conformal-polar charts and discrete extension operators ([`coords`]),
//! * the explicit spherical spectrum, eigenfunctions and the radial parametrix
//!   kernel ([`spectrum`]),
//! * extension profiles, the Dirichlet-to-Neumann symbol, homogeneous solutions
//!   and blow-up rescaling ([`extension`]),
//! * two-sided evaluators for the weighted inequalities built on top of these
//!   objects ([`inequalities`]),
//! * a self-check suite used by the command line front end ([`verify`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coords;
pub mod error;
pub mod extension;
pub mod grid;
pub mod inequalities;
pub mod quadrature;
pub mod spectrum;
pub mod verify;
pub mod weights;

pub use coords::{ConformalChart, Form};
pub use spectrum::EigenPair;
pub use error::{Error, Result};

pub use extension::{ExtensionProfile, SpectralBoundaryData};
pub use inequalities::{InequalityReport, TestFunctionSpec};
pub use grid::{BoundaryTrace, Chart, Field, FractionalParams, GridFunction, HalfPlaneGrid, Region};
pub use weights::CarlemanWeight;
