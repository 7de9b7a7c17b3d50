//! Configuration files, binary tensors, run manifests, reports and the
//! command implementations behind the `vfi` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod report;
pub mod tensor;

pub use error::{CliError, Result};
