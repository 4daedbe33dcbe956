//! Monte Carlo experiments: configuration, presets, metrics and CSV output.

mod config;
mod experiment;
mod metrics;
mod output;
mod presets;

pub use config::{ChannelKind, ReceiverKind, SystemConfig};
pub use experiment::{
    run_experiment, run_single, ExperimentOutput, ExperimentRecord, SnrSummary, StageOneMetrics,
};
pub use metrics::{nmse, ser};
pub use output::{gnuplot_script, write_crb_csv, write_records_csv, write_summary_csv, CSV_HEADER};
pub use presets::{preset, PRESET_NAMES};
