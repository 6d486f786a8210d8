//! Library surface of the `odeasym` command-line tool: configuration
//! parsing, the three analysis pipelines, example reproduction, and
//! artifact writing. The binary in `main.rs` is a thin dispatcher over
//! these functions so integration tests can drive them directly.

pub mod config;
pub mod examples;
pub mod outputs;
pub mod pipeline;
