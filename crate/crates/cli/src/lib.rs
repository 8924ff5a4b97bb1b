//! Configuration, CSV input and output, and command dispatch for the
//! `gpheat` binary.

pub mod config;
pub mod io;
pub mod run;
