//! IO, file formats, and command implementations for the panoqa pipeline.
//!
//! The algorithms live in `panoqa-core`; this crate adds what needs an OS:
//! scene-bundle and JSONL codecs ([`formats`]), the TOML pipeline
//! configuration ([`config`]), a synthetic scene-corpus writer ([`synth`]),
//! and the subcommand implementations ([`commands`]) behind the `panoqa`
//! binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod synth;

pub use error::{CliError, CliResult};
