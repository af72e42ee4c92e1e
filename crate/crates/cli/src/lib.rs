//! Batch front-end for the `fsocap-core` capacity engine: scenario files,
//! parameter sweeps, CSV/JSON tables and the error-comparison table.

pub mod config;
pub mod error;
pub mod model;
pub mod output;
pub mod run;
pub mod table1;

pub use config::{Overrides, Scenario};
pub use error::CliError;
pub use output::{Format, Table};
pub use run::{run_scenario, Report};
pub use table1::{table1_report, Table1Report};
