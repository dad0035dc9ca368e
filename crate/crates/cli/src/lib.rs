//! Command implementations behind the `dfcn` binary. Each command reads an
//! [`config::ExperimentConfig`] and writes its outputs below `paths.out`.

pub mod commands;
pub mod config;
pub mod io;
