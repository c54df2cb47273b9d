//! File formats.

pub mod export;
pub mod image;
pub mod manifest;
pub mod scene_file;
pub mod sweep_file;
