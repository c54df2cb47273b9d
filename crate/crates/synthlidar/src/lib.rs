//! Batch tooling around `synthlidar-core`: configuration, file formats,
//! parallel generation of scans and images, dataset evaluation and the
//! `synthlidar` command-line tool.

pub mod calib;
pub mod cli;
pub mod config;
pub mod error;
pub mod evaluate;
pub mod generate;
pub mod io;
