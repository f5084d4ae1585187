//! CSV tables: header row, `.` decimal point, six significant digits, LF line endings.

use std::fs;
use std::path::Path;

use crate::{Error, Result};

/// A single CSV cell.
#[derive(Clone, Debug, PartialEq)]
pub enum Field {
    Int(i64),
    Float(f64),
    Text(String),
    Empty,
}

impl Field {
    fn render(&self) -> String {
        match self {
            Field::Int(v) => v.to_string(),
            Field::Float(v) => format_sig(*v, 6),
            Field::Text(s) => s.clone(),
            Field::Empty => String::new(),
        }
    }
}

/// A row type together with its column schema.
pub trait CsvRecord {
    const HEADER: &'static [&'static str];

    fn fields(&self) -> Vec<Field>;
}

/// Fixed-point rendering with `digits` significant digits (`0` for zero).
pub fn format_sig(value: f64, digits: usize) -> String {
    if value == 0.0 {
        return "0".into();
    }
    if !value.is_finite() {
        return value.to_string();
    }
    let digits = digits.max(1);
    // scientific formatting gives the exponent after rounding to `digits`
    let sci = format!("{:.*e}", digits - 1, value);
    let exponent: i32 = sci.rsplit('e').next().unwrap().parse().unwrap();
    let decimals = (digits as i32 - 1 - exponent).max(0) as usize;
    format!("{value:.decimals$}")
}

pub fn to_csv_string<R: CsvRecord>(records: &[R]) -> Result<String> {
    let mut writer = ::csv::WriterBuilder::new()
        .terminator(::csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let encode = |e: ::csv::Error| Error::Input(format!("csv encoding: {e}"));
    writer.write_record(R::HEADER).map_err(encode)?;
    for record in records {
        let fields = record.fields();
        if fields.len() != R::HEADER.len() {
            return Err(Error::Input(format!(
                "record has {} fields, schema has {}",
                fields.len(),
                R::HEADER.len()
            )));
        }
        writer
            .write_record(fields.iter().map(Field::render))
            .map_err(encode)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::Input(format!("csv encoding: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn write_csv<R: CsvRecord>(records: &[R], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = to_csv_string(records)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Per-domain summary.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalRecord {
    pub domain_tag: String,
    pub error: f64,
    pub mean_uncertainty: f64,
    pub mean_confidence: f64,
}

impl CsvRecord for EvalRecord {
    const HEADER: &'static [&'static str] = &["domain_tag", "error", "mean_uncertainty", "mean_confidence"];

    fn fields(&self) -> Vec<Field> {
        vec![
            Field::Text(self.domain_tag.clone()),
            Field::Float(self.error),
            Field::Float(self.mean_uncertainty),
            Field::Float(self.mean_confidence),
        ]
    }
}

/// Rotation experiment, one row per rotation domain.
#[derive(Clone, Debug, PartialEq)]
pub struct RotationRow {
    pub rotation_deg: u32,
    pub error: f64,
    pub mean_uncertainty: f64,
    pub mean_uncertainty_scaled: f64,
    pub mean_confidence: f64,
}

impl CsvRecord for RotationRow {
    const HEADER: &'static [&'static str] = &[
        "rotation_deg",
        "error",
        "mean_uncertainty",
        "mean_uncertainty_scaled",
        "mean_confidence",
    ];

    fn fields(&self) -> Vec<Field> {
        vec![
            Field::Int(i64::from(self.rotation_deg)),
            Field::Float(self.error),
            Field::Float(self.mean_uncertainty),
            Field::Float(self.mean_uncertainty_scaled),
            Field::Float(self.mean_confidence),
        ]
    }
}

/// Rotation experiment, one row per (domain, sample).
#[derive(Clone, Debug, PartialEq)]
pub struct SampleRow {
    pub rotation_deg: u32,
    pub sample_index: usize,
    pub label: usize,
    pub prediction: usize,
    pub uncertainty: f64,
    pub confidence: f64,
}

impl CsvRecord for SampleRow {
    const HEADER: &'static [&'static str] = &[
        "rotation_deg",
        "sample_index",
        "label",
        "prediction",
        "uncertainty",
        "confidence",
    ];

    fn fields(&self) -> Vec<Field> {
        vec![
            Field::Int(i64::from(self.rotation_deg)),
            Field::Int(self.sample_index as i64),
            Field::Int(self.label as i64),
            Field::Int(self.prediction as i64),
            Field::Float(self.uncertainty),
            Field::Float(self.confidence),
        ]
    }
}

/// Rolling benchmark grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct RollingRow {
    pub frame_rate: f64,
    /// Window length (rolling) or passes per frame (vanilla).
    pub stride: usize,
    pub mode: String,
    pub mean_u: f64,
    pub forward_passes: u64,
}

impl CsvRecord for RollingRow {
    const HEADER: &'static [&'static str] = &["frame_rate", "stride", "mode", "mean_u", "forward_passes"];

    fn fields(&self) -> Vec<Field> {
        vec![
            Field::Float(self.frame_rate),
            Field::Int(self.stride as i64),
            Field::Text(self.mode.clone()),
            Field::Float(self.mean_u),
            Field::Int(self.forward_passes as i64),
        ]
    }
}

/// Dropout sweep point.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub dropout_rate: f64,
    pub error: f64,
}

impl CsvRecord for SweepRow {
    const HEADER: &'static [&'static str] = &["dropout_rate", "error"];

    fn fields(&self) -> Vec<Field> {
        vec![Field::Float(self.dropout_rate), Field::Float(self.error)]
    }
}
