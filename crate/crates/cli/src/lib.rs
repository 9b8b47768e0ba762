//! Library half of the `qguide` command: table building and serialization,
//! kept separate from argument parsing so it can be tested in memory.

pub mod commands;
pub mod table;

pub use commands::{AncillaChoice, Grid, Params, SpectrumKind};
pub use table::{format_g, Cell, Table};
