//! Vector-valued Gabor frames on R x Z_q, the twisted convolution algebra of the
//! associated noncommutative torus, and its Chern number and energy functionals.

pub mod algebra;
pub mod error;
pub mod frame;
pub mod geometry;
pub mod lattice;
pub mod moyal;
pub mod signal;

pub use error::{Error, Result};

/// Library version, embedded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
