//! Numerical toolkit for shrinking-target and quantitative-recurrence sets
//! of overlapping affine iterated function systems.

pub mod covering;
pub mod dimension;
pub mod error;
pub mod garsia;
pub mod ifs;
pub mod measure;
pub mod transversality;

pub use error::{Error, Result};
