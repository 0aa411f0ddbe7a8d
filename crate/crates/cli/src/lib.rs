//! Command-line front end for `evosym`: file formats, reports and command
//! implementations. The `evosym` binary is a thin argument parser over
//! [`commands`].
//!
//! - [`spec_file`]: versioned JSON formats for channels, supermaps,
//!   instruments and states.
//! - [`report`]: the report schema and numeric report comparison.
//! - [`commands`]: classify, reverse, decompose, nogo, simulate.
//! - [`fixtures`]: the bundled corpus of named objects.

pub mod commands;
pub mod fixtures;
pub mod report;
pub mod spec_file;
