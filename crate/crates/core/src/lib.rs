//! Concentration bounds for mixing random fields indexed by exponentially
//! growing trees: exact tree combinatorics, bound evaluation, field
//! simulation, and numerical verification.

pub mod bounds;
pub mod embed;
pub mod error;
pub mod fields;
pub mod paircount;
pub mod par;
pub mod rng;
pub mod tree;
pub mod verify;

pub use error::{Error, Result};
