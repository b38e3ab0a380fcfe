//! Martingale Hardy and BMO norms, atomic blocks and their certificates on
//! finite filtered probability spaces and on tracial matrix algebras.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod atoms;
pub mod error;
pub mod experiment;
pub mod gen;
pub mod medians;
pub mod nc;
pub mod norms;
pub mod prob;

pub use error::{Error, Result, Violation};
