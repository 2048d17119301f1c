//! Command-line front end: campaign configuration, the counter-file format
//! and the `simulate` / `analyze` / `report` commands.

pub mod cli;
pub mod commands;
pub mod config;
pub mod counter_file;
pub mod error;

pub use cli::{run, Cli, Command};
pub use commands::{analyze, report, simulate_campaign, simulate_record, AnalyzeOptions, Sidecar};
pub use config::{Analysis, CampaignConfig};
pub use counter_file::{
    read_counter_file, write_counter_file, CounterFile, Flag, FormatError, Header, Row,
};
pub use error::{CliError, Result};
