//! Exact ordered additive representation functions.
//!
//! Counts `r_k`, `r≤_k`, `r<_k` and linear-form representations of finite
//! integer set truncations two independent ways (dynamic programming and
//! weighted products of dilated generating functions), and provides the
//! error-term statistics and circle-integral checks built on top of them.

pub mod circle;
pub mod cli;
pub mod compositions;
pub mod erdosfuchs;
pub mod error;
pub mod intset;
pub mod repcount;
pub mod series;

pub use error::{Error, Result};
