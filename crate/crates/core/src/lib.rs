//! Pseudospectral simulation and verification of the semilinear Klein–Gordon
//! equation on flat-slicing de Sitter backgrounds.
//!
//! The crate is organised bottom-up:
//!
//! - [`params`]: physical constants, derived quantities and regime classification.
//! - [`spectral`]: periodic lattice, Fourier transforms and Sobolev-type norms.
//! - [`ode`]: an adaptive Dormand–Prince 8(5,3) integrator shared by the scalar solvers.
//! - [`mode_ode`]: the per-wavenumber fundamental system that defines the propagator symbols.
//! - [`nonlinearity`]: pointwise source terms and the vacuum-shift identity.
//! - [`propagator`]: free evolution, Duhamel integrals, Picard iteration and RK4 time stepping.
//! - [`diagnostics`]: energy densities and balance-law residuals.
//! - [`blowup`]: reduction to the spatial integral `w(t)`, blow-up detection, lifespan bound.
//! - [`scattering`]: asymptotic free data and deviation from the free flow.
//! - [`snapshot`]: the binary field snapshot format.

pub mod blowup;
pub mod diagnostics;
mod error;
pub mod mode_ode;
pub mod nonlinearity;
pub mod ode;
pub mod params;
pub mod propagator;
pub mod quadrature;
pub mod scattering;
pub mod snapshot;
pub mod spectral;

pub use error::{Error, Result};
pub use params::{DerivedConstants, MassKind, PhysicalParams, RegimeReport};
pub use propagator::{Equation, StateSnapshot, Trajectory};
pub use spectral::{Field, Grid, SpectralField};
