#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod analysis;
pub mod bdf;
pub mod cli;
pub mod dd;
pub mod error;
pub mod gauss_jacobi;
pub mod mittag_leffler;
pub mod poly;
pub mod problems;
pub mod rational;
pub mod solver;

pub use error::{Error, Result};
