//! Experiment drivers behind the CLI subcommands. They return plain tables;
//! writing files is left to the commands.

use envelope_core::data::{build_rotation_domains, rotate, subsample, synth_sequence, DriftSpec};
use envelope_core::envelope::{run_rolling, run_stream, run_vanilla};
use envelope_core::eval::{error_rate, scale_factor, spearman, RollingRow, RotationRow, SampleRow, SweepRow};
use envelope_core::metric::{ce_u, class_uncertainty_bar};
use envelope_core::tinynet::{derive_seed, predict_class, softmax};
use envelope_core::{
    EnvelopeConfig, EnvelopeOutput, HitVector, LabeledSet, MaskStream, Model, Result, Tensor, TriggerConfig,
    UncertaintyMap,
};
use rayon::prelude::*;
use serde::Serialize;

/// Per-sample outcome on one rotation domain.
#[derive(Clone, Debug)]
struct SampleOutcome {
    prediction: usize,
    confidence: f64,
    uncertainty: f64,
}

/// Rank correlations of the rotation experiment. `None` marks an undefined value
/// (a constant series).
#[derive(Clone, Debug, Default, Serialize)]
pub struct RotationSummary {
    /// Spearman(mean u, error) over domains.
    pub spearman_uncertainty: Option<f64>,
    /// Spearman(1 - mean confidence, error) over domains.
    pub spearman_confidence: Option<f64>,
    /// Spearman(u, misclassified) over every (domain, sample) pair.
    pub spearman_samples: Option<f64>,
    /// Factor mapping mean u onto the error scale of the unrotated domain.
    pub scale_factor: Option<f64>,
}

pub struct RotationResult {
    pub rows: Vec<RotationRow>,
    pub samples: Vec<SampleRow>,
    pub summary: RotationSummary,
}

/// Error, mean u and mean confidence for each rotation domain.
///
/// Predictions and confidences come from the deterministic pass; u from `fwp`
/// vanilla dropout passes. Sample `i` draws its masks from `derive_seed(seed, i)`
/// on every domain.
pub fn rotation_experiment(model: &Model, set: &LabeledSet, fwp: usize, dropout: f64, seed: u64) -> Result<RotationResult> {
    let trigger = TriggerConfig::default();
    let domains = build_rotation_domains(set)?;
    let mut per_domain = Vec::with_capacity(domains.len());
    for (&deg, domain) in &domains {
        let outcomes = domain
            .images()
            .par_iter()
            .enumerate()
            .map(|(i, image)| {
                let probs = softmax(model.forward(image, None)?.values())?;
                let config = EnvelopeConfig::vanilla(fwp, dropout, derive_seed(seed, i as u64));
                let out = run_vanilla(model, image, &config, &trigger)?;
                Ok(SampleOutcome {
                    prediction: predict_class(&probs)?,
                    confidence: probs.iter().copied().fold(0.0, f64::max),
                    uncertainty: out.frame_uncertainty.unwrap_or(0.0),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        per_domain.push((deg, outcomes));
    }

    let labels = set.labels();
    let n = labels.len() as f64;
    let mut rows = Vec::new();
    let mut samples = Vec::new();
    let mut sample_u = Vec::new();
    let mut sample_wrong = Vec::new();
    for (deg, outcomes) in &per_domain {
        let predictions: Vec<usize> = outcomes.iter().map(|o| o.prediction).collect();
        rows.push(RotationRow {
            rotation_deg: *deg,
            error: error_rate(&predictions, labels)?,
            mean_uncertainty: outcomes.iter().map(|o| o.uncertainty).sum::<f64>() / n,
            mean_uncertainty_scaled: f64::NAN,
            mean_confidence: outcomes.iter().map(|o| o.confidence).sum::<f64>() / n,
        });
        for (i, (o, &label)) in outcomes.iter().zip(labels).enumerate() {
            samples.push(SampleRow {
                rotation_deg: *deg,
                sample_index: i,
                label,
                prediction: o.prediction,
                uncertainty: o.uncertainty,
                confidence: o.confidence,
            });
            sample_u.push(o.uncertainty);
            sample_wrong.push(if o.prediction == label { 0.0 } else { 1.0 });
        }
    }

    let mut summary = RotationSummary::default();
    if let Some((_, source)) = per_domain.first() {
        let errors: Vec<f64> = source
            .iter()
            .zip(labels)
            .map(|(o, &l)| if o.prediction == l { 0.0 } else { 1.0 })
            .collect();
        let us: Vec<f64> = source.iter().map(|o| o.uncertainty).collect();
        if let Ok(factor) = scale_factor(&errors, &us) {
            summary.scale_factor = Some(factor);
            rows.iter_mut()
                .for_each(|r| r.mean_uncertainty_scaled = r.mean_uncertainty * factor);
        }
    }
    let errors: Vec<f64> = rows.iter().map(|r| r.error).collect();
    let mean_u: Vec<f64> = rows.iter().map(|r| r.mean_uncertainty).collect();
    let unconfidence: Vec<f64> = rows.iter().map(|r| 1.0 - r.mean_confidence).collect();
    summary.spearman_uncertainty = spearman(&mean_u, &errors).ok();
    summary.spearman_confidence = spearman(&unconfidence, &errors).ok();
    summary.spearman_samples = spearman(&sample_u, &sample_wrong).ok();
    Ok(RotationResult { rows, samples, summary })
}

#[derive(Clone, Debug)]
pub struct RollingBenchConfig {
    /// Frame rate of the synthesized source streams.
    pub source_frame_rate: f64,
    /// Source stream length in frames.
    pub length: usize,
    pub frame_rates: Vec<f64>,
    pub strides: Vec<usize>,
    pub fwps: Vec<usize>,
    pub dropout: f64,
    pub brightness_decay_per_frame: f64,
    pub noise_sigma_ramp_per_frame: f64,
    /// Use pinned masks (pass id depends only on the slot within a window).
    pub pinned: bool,
    pub seed: u64,
}

/// Per-frame outputs of one grid point on the first base image.
pub struct RunTrace {
    pub name: String,
    pub outputs: Vec<EnvelopeOutput>,
}

pub struct RollingBenchResult {
    pub rows: Vec<RollingRow>,
    pub traces: Vec<RunTrace>,
}

fn mean_u(outputs: &[EnvelopeOutput]) -> (f64, usize) {
    let us: Vec<f64> = outputs.iter().filter_map(|o| o.frame_uncertainty).collect();
    (us.iter().sum::<f64>(), us.len())
}

/// Rolling and vanilla runs over drifting streams built from each base image.
///
/// Each grid point reports the mean u over all non-warm-up frames of all
/// streams, and the forward passes spent on one stream.
pub fn rolling_bench(model: &Model, bases: &[Tensor], config: &RollingBenchConfig) -> Result<RollingBenchResult> {
    let trigger = TriggerConfig::default();
    let mut grid = Vec::new();
    for &rate in &config.frame_rates {
        for &s in &config.strides {
            grid.push((rate, s, "rolling"));
        }
        for &f in &config.fwps {
            grid.push((rate, f, "vanilla"));
        }
    }
    let streams = bases
        .iter()
        .enumerate()
        .map(|(b, base)| {
            let drift = DriftSpec {
                brightness_decay_per_frame: config.brightness_decay_per_frame,
                noise_sigma_ramp_per_frame: config.noise_sigma_ramp_per_frame,
                seed: derive_seed(config.seed, b as u64),
            };
            synth_sequence(base, config.length, config.source_frame_rate, &drift)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    let mut traces = Vec::new();
    for &(rate, size, mode) in &grid {
        let runs = streams
            .par_iter()
            .enumerate()
            .map(|(b, stream)| {
                let stream = subsample(stream, rate)?;
                let seed = derive_seed(config.seed, b as u64);
                let mut env = match mode {
                    "rolling" => EnvelopeConfig::rolling(size, config.dropout, seed),
                    _ => EnvelopeConfig::vanilla(size, config.dropout, seed),
                };
                if config.pinned {
                    env = env.pinned();
                }
                match mode {
                    "rolling" => run_rolling(model, &stream, &env, &trigger),
                    _ => run_stream(model, &stream, &env, &trigger),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let (sum, count) = runs
            .iter()
            .map(|r| mean_u(r))
            .fold((0.0, 0), |(s, c), (s2, c2)| (s + s2, c + c2));
        let first = runs.into_iter().next().unwrap_or_default();
        rows.push(RollingRow {
            frame_rate: rate,
            stride: size,
            mode: mode.to_string(),
            mean_u: if count == 0 { f64::NAN } else { sum / count as f64 },
            forward_passes: first.last().map_or(0, |o| o.forward_passes_used),
        });
        traces.push(RunTrace {
            name: format!("{mode}_{size}_fps{rate}"),
            outputs: first,
        });
    }
    Ok(RollingBenchResult { rows, traces })
}

/// Error of a single dropout pass at each rate. Sample `i` reuses the mask
/// stream `derive_seed(seed, i)` at every rate, so a unit dropped at one rate
/// is also dropped at every higher one. Rate 0 is the deterministic pass.
pub fn dropout_sweep(model: &Model, set: &LabeledSet, rates: &[f64], seed: u64) -> Result<Vec<SweepRow>> {
    rates
        .iter()
        .map(|&rate| {
            let predictions = set
                .images()
                .par_iter()
                .enumerate()
                .map(|(i, image)| {
                    let mut masks = MaskStream::new(derive_seed(seed, i as u64), 0);
                    predict_class(&softmax(model.forward_with_rate(image, rate, &mut masks)?.values())?)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(SweepRow {
                dropout_rate: rate,
                error: error_rate(&predictions, set.labels())?,
            })
        })
        .collect()
}

pub struct Heatmap {
    pub map: UncertaintyMap,
    pub hits: HitVector,
    pub frame_uncertainty: f64,
}

/// Per-class one-vs-rest uncertainty bar of one (optionally rotated) image.
/// Pass `k` uses mask stream `(seed, k)`, as a vanilla envelope does on its first frame.
pub fn class_heatmap(model: &Model, image: &Tensor, degrees: f64, fwp: usize, dropout: f64, seed: u64) -> Result<Heatmap> {
    EnvelopeConfig::vanilla(fwp, dropout, seed).validate()?;
    let image = rotate(image, degrees)?;
    let passes = (0..fwp as u64)
        .into_par_iter()
        .map(|k| {
            let mut masks = MaskStream::new(seed, k);
            predict_class(&softmax(model.forward_with_rate(&image, dropout, &mut masks)?.values())?)
        })
        .collect::<Result<Vec<_>>>()?;
    let hits = HitVector::from_passes(&passes)?;
    Ok(Heatmap {
        map: class_uncertainty_bar(&hits, model.class_count())?,
        frame_uncertainty: ce_u(&hits),
        hits,
    })
}
