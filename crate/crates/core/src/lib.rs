pub mod analysis;
pub mod assignment;
pub mod chain1d;
pub mod cli;
pub mod drop;
pub mod eom;
pub mod error;
pub mod lattice;
pub mod linalg;
pub mod optimize;

pub use error::{Error, Result};
