//! Parsing of expressions and connection spec documents; report emission.

pub mod expr;
pub mod report;
pub mod spec;

pub use expr::{parse_expr, parse_rational};
pub use report::Report;
pub use spec::{build_connection, parse_connection, preset, ConnectionSpecFile};
