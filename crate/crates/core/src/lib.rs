//! Pseudospectral solver for the generalized Camassa-Holm equation
//! `u_t - u_txx = ∂x(2+∂x)[(2-∂x)u]²` on a periodic box, with diagnostics for
//! weighted persistence, tail asymptotics and analyticity.

pub mod analyticity;
pub mod asymptotics;
pub mod dynamics;
pub mod error;
pub mod grid;
pub mod integrator;
pub mod io;
pub mod nonlocal;
pub mod persistence;
pub mod quadrature;
pub mod weights;

pub use dynamics::RhsForm;
pub use error::{Error, Result};
pub use grid::{
    dealiased_product, derivative, h1_norm, interpolate_onto, lp_norm, make_grid, sample,
    spectral_derivative, Field, Grid,
};
