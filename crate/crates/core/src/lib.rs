//! Spectral toolkit for the fractional scalar field equation
//! `(-Delta)^s u = f(u)` on periodic grids.

pub mod cli;
pub mod decomposition;
pub mod error;
pub mod extension;
pub(crate) mod fft;
pub mod fractional;
pub mod grid;
pub mod group;
pub mod io;
pub mod nonlinearity;
pub mod parallel;
pub mod resample;
pub mod variational;

pub use error::{Error, Result};
pub use fractional::FracParams;
pub use grid::{Field, GridSpec, SpectralField};
pub use group::GroupElement;
pub use nonlinearity::{Nonlinearity, NonlinearityKind, Quadrature};
pub use variational::{LevelsReport, SolverConfig};
