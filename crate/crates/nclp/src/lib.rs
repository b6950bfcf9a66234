//! Std companion to `nclp-core`: JSON matrix files, run reports, the property
//! suites and the `nclp` command line.

pub mod cli;
pub mod format;
pub mod propsuite;
pub mod report;
