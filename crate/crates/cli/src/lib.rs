//! Library half of the `jsda` command: argument parsing, dispatch and
//! report writing.

pub mod app;
pub mod report;
