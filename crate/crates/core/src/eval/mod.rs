//! Experiment metrics and output artifacts.

mod csv;
mod pgm;
mod stats;

pub use self::csv::{
    format_sig, to_csv_string, write_csv, CsvRecord, EvalRecord, Field, RollingRow, RotationRow, SampleRow, SweepRow,
};
pub use pgm::{encode_pgm, write_pgm};
pub use stats::{average_ranks, error_rate, mean_confidence, pearson, scale_factor, scale_uncertainties, spearman};
