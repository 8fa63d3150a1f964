//! Library side of the `profassoc` command-line tool.

pub mod commands;
pub mod io;
pub mod report;
