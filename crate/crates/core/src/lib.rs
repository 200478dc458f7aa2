//! jetconn: exact symbolic + numerical toolkit for parameterized linear
//! connections.
//!
//! The crate prolongs linear connections to jet order k with respect to
//! parameters, verifies and searches rational differential invariants,
//! constructs Lax (adjoint) and isomonodromic (Schlessinger) systems, emits
//! parameterized Galois-group PDE systems, and validates monodromy claims
//! numerically.

pub mod algebra;
pub mod connection;
pub mod error;
pub mod io;
pub mod isomonodromy;
pub mod invariants;
pub mod jet;
pub mod monodromy;
pub mod numeric;

pub use error::{Error, Result};
