//! Exact arithmetic kernel: variables, sparse multivariate polynomials,
//! normalized rational functions, matrices, and rational linear algebra.

pub mod gcd;
pub mod linalg;
pub mod matrix;
pub mod poly;
pub mod ratfun;
pub mod vars;

pub use matrix::MatRF;
pub use poly::{Mono, Poly};
pub use ratfun::RatFun;
pub use vars::{Var, VarId, VarKind, VarSpace};
