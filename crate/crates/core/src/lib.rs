//! Sparse linear-Q elimination for finite-horizon MDPs with misspecified features.

pub mod elimination;
pub mod error;
pub mod experiments;
pub mod instances;
pub mod mdp;
pub mod net;
pub mod oracles;
pub mod par;
pub mod seed;
pub mod sparse;

pub use error::{Error, Result};
