//! File formats, configuration, parallel execution and reporting around
//! `ehrdrift-core`, plus the command implementations behind the
//! `ehrdrift` binary.

pub mod commands;
pub mod config;
pub mod exec;
pub mod io;
pub mod report;
pub mod svg;
pub mod validate;
