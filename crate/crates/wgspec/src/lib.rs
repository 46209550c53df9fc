//! Batch front-end for `waveguide-spectral`: scenario files, a content-hashed cache of
//! boundary spectral data, reconstruction and stability drivers, CSV/JSON/plot-script
//! output, and the acceptance suite.

pub mod acceptance;
pub mod cache;
pub mod commands;
pub mod error;
pub mod report;
pub mod scenario;

pub use error::{Error, Result};
