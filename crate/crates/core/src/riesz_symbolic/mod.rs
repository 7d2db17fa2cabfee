//! Riesz products on the circle and their symbolic-space counterpart.

pub mod riesz;
pub mod symbolic;

pub use riesz::*;
pub use symbolic::*;
