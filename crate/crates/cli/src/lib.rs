//! Plumbing behind the `upin` binary: configuration, run manifests, CSV
//! reports, SVG charts, and the three subcommand drivers. Lives in a library
//! target so integration tests can drive commands in-process.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod report;
pub mod svg;
