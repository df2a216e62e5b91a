//! File formats and the command-line driver around [`ptzcap_core`].

pub mod cli;
pub mod config;
pub mod error;
pub mod formats;
pub mod report;
pub mod skeleton_file;

pub use ptzcap_core as core;
