use std::path::Path;

use super::EnvelopeOutput;
use crate::eval::{write_csv, CsvRecord, Field};
use crate::{Result, Scalar};

/// One row of the envelope run report.
#[derive(Clone, Debug, PartialEq)]
pub struct RunReportRow {
    pub frame_index: u64,
    /// Empty during rolling warm-up.
    pub u_t: Option<f64>,
    pub trigger_stage: String,
    pub forward_passes_cumulative: u64,
}

impl CsvRecord for RunReportRow {
    const HEADER: &'static [&'static str] = &["frame_index", "u_t", "trigger_stage", "forward_passes_cumulative"];

    fn fields(&self) -> Vec<Field> {
        vec![
            Field::Int(self.frame_index as i64),
            self.u_t.map_or(Field::Empty, Field::Float),
            Field::Text(self.trigger_stage.clone()),
            Field::Int(self.forward_passes_cumulative as i64),
        ]
    }
}

pub fn run_report_rows<T: Scalar>(outputs: &[EnvelopeOutput<T>]) -> Vec<RunReportRow> {
    outputs
        .iter()
        .map(|o| RunReportRow {
            frame_index: o.frame_index,
            u_t: o.frame_uncertainty.map(Scalar::to_f64_lossy),
            trigger_stage: o.trigger_stage_name.clone(),
            forward_passes_cumulative: o.forward_passes_used,
        })
        .collect()
}

/// `frame_index,u_t,trigger_stage,forward_passes_cumulative`, one row per frame.
pub fn write_run_report<T: Scalar>(outputs: &[EnvelopeOutput<T>], path: impl AsRef<Path>) -> Result<()> {
    write_csv(&run_report_rows(outputs), path)
}
