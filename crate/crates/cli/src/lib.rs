//! Command-line harness for `l4dec-core`: matrix files, seeded experiments,
//! sweeps with CSV/SVG output, landscape reports and baseline comparisons.

pub mod commands;
pub mod error;
pub mod experiment;
pub mod io;
pub mod stats;
pub mod svg;
pub mod sweep;

pub use error::{CliError, CliResult};
