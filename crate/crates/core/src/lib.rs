// NaN-rejecting comparisons and index loops over parallel arrays are deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod body;
pub mod centroaffine;
pub mod error;
pub mod solver;
pub mod sphere_grid;
pub mod verify;

pub use error::{Error, Result};
