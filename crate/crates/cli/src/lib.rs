//! Scenario files, grid runner, CSV and plot-data output for the `mptc`
//! binary.

pub mod config;
pub mod error;
pub mod plot;
pub mod runner;

pub use config::{
    builtin, CoinConfig, ConfigEntry, GroupConfig, ProtocolChoice, ScenarioConfig, BUILTINS,
};
pub use error::CliError;
pub use plot::{emit_plot_data, PlotData};
pub use runner::{run_grid, run_one, sort_rows, to_csv, GridResult, Row, RunOptions, CSV_HEADER};
