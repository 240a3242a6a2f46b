//! Command-line front end: instance generation, solving, LP export,
//! batch benchmarks and cap sweeps.

pub mod bench;
pub mod commands;
pub mod lp;
pub mod manifest;
pub mod sweep;
