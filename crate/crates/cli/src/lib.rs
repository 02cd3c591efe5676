//! Command-line front end and HTTP service for `skeleform-core`.

pub mod cli;
pub mod error;
pub mod ops;
pub mod service;

pub use cli::run;
pub use error::{ApiError, ErrorCode};
