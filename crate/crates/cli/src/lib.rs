//! File formats and command implementations behind the `ncftap` binary.
//!
//! Exit statuses: 0 EMS, 2 ARBITRAGE, 3 UNDECIDED, 1 input error, 4 rejected
//! certificate (from `verify`).

pub mod commands;
pub mod format;

pub use commands::{CliError, Generator};
pub use format::{emit_market, parse_market, FormatError, Market};
