//! Solver library for q-valued (branched) solutions of the Dirichlet
//! problem for the Poisson equation and for small-data quasilinear elliptic
//! systems on the cylinder `B1^2(0) x torus`, plus diagnostics for the
//! regularity structure of the computed fields (decay exponents, frequency
//! functions, branch-set traces, Cauchy-type derivative bounds).
//!
//! Representations: a q-valued function is stored as q sheets over a polar
//! grid cut along the positive x1-axis ([`field::SheetedField`]); the
//! conformal change of variables `xi = x^{1/q}` turns it into a single-valued
//! field on the disk ([`field::UnfoldedField`]), where the Dirichlet solver
//! ([`poisson::solve_dirichlet`]) works mode by mode. An independent direct
//! finite-difference solver ([`fdref::direct_fd_reference`]) cross-checks
//! the pipeline, and [`nonlinear::picard_solve`] runs the small-data
//! fixed-point iteration for quasilinear systems such as the minimal surface
//! equation and system.
//!
//! All numerics are generic over the floating-point type via [`Scalar`];
//! concrete `f64` aliases are exported at the crate root.

pub mod diagnostics;
pub mod error;
pub mod fdref;
pub mod field;
pub mod grid;
pub mod hungarian;
pub mod io;
pub mod modal;
pub mod mv;
pub mod nonlinear;
pub mod poisson;
pub mod scalar;
pub mod spectrum;
pub mod unfold;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Scalar type used by the CLI and shipped fixtures.
pub type Real = f64;
pub type Grid64 = grid::Grid<Real>;
pub type Field = field::SheetedField<Real>;
pub type UnfoldedField64 = field::UnfoldedField<Real>;
pub type Trace64 = field::Trace<Real>;
pub type Spectrum64 = spectrum::ModeSpectrum<Real>;
pub type Nonlinearity64 = nonlinear::Nonlinearity<Real>;
