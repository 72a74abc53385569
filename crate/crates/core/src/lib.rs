//! Economic complexity metrics and growth-regression tooling.

pub mod complexity;
pub mod econometrics;
pub mod error;
pub mod synthetic;
pub mod trade_data;

pub use error::{Error, Result};
