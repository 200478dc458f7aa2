//! Shared numerical machinery: complex matrices, eigenvalues, and the
//! adaptive integrator.

pub mod cmat;
pub mod ode;

pub use cmat::{eigen_set_distance, eigenvalues, CMat};
pub use ode::{dopri5, rk4, OdeOptions};
