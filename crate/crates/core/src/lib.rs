//! Numerical toolkit for parallel repetition of k-player free games.

pub mod error;
pub mod qmat;

pub use error::{Error, Result};
pub mod games;
pub mod qit;
pub mod seed;
pub mod values;
pub mod advice;
pub mod search;
