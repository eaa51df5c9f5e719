//! File formats and configuration for the `ethos` command-line tool. The
//! numeric pipeline itself lives in `ethos-core`; this crate only moves
//! bytes in and out of it.

pub mod config;
pub mod io;
