#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod davenport;
pub mod dilated_series;
pub mod dyadic_martingale;
pub mod ergodic_transfer;
pub mod error;
pub mod experiment;
pub mod modulus;
pub mod par;
pub mod randomized;
pub mod report;
pub mod riesz_symbolic;
pub mod tail;
pub mod torus_fn;

pub use error::{Error, Result};
