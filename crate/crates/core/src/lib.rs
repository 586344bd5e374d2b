//! Simulation of a heralded four-ensemble W-state interface and
//! certification of its entanglement depth with the `{Delta, y_c}` witness.

pub mod analysis;
pub mod bounds;
pub mod error;
pub mod experiment;
pub mod fockspace;
pub mod interface;
pub mod thermal;
pub mod witness;

pub use error::{Error, Result};
