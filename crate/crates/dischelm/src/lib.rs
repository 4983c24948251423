//! File formats, JSON reports and the command-line front end.

pub mod cli;
mod demo;
pub mod io;
pub mod report;

pub use cli::run;
