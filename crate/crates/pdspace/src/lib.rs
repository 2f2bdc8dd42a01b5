//! Std companion of `pdspace-core`: JSON formats, seeded parallel sweeps and
//! the `pdspace` command-line tool.

pub mod cli;
pub mod json;
pub mod sweep;
