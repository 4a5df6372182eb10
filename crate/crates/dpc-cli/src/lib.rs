//! Library backing the `dpc` command-line tool; the binary is a thin
//! dispatcher over these modules.

pub mod bench;
pub mod commands;
pub mod config;
pub mod manifest;
pub mod seed;
