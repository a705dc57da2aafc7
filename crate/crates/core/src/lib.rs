//! Critical-point engine for leading-order potential functions of compact
//! smooth toric manifolds over the Novikov ring.

// index loops mirror the matrix algebra they implement
#![allow(clippy::needless_range_loop)]

pub mod error;
pub mod floer;
pub mod linalg;
pub mod locator;
pub mod lift;
pub mod lte;
pub mod polytope;
pub mod novikov;
pub mod potential;
pub mod qcoh;
pub mod scalar;

pub use error::{Error, Result};
