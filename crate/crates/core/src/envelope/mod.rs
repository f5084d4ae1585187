//! The monitoring envelope around a classifier.
//!
//! Vanilla mode runs `n_fwp` dropout passes on every frame. Rolling mode runs
//! a single dropout pass per frame and pools the votes of the last `stride`
//! frames, so `stride` consecutive frames stand in for `stride` passes on one
//! frame: covering `m` frames costs `m` passes instead of `m * stride`.
//!
//! In both modes the pooled votes go through [`metric::pixel_uncertainty_map`]
//! and the frame uncertainty (mean over pixels) drives the trigger state machine.

mod report;
mod trigger;
mod window;

pub use report::{run_report_rows, write_run_report, RunReportRow};
pub use trigger::{candidate_stage, update_trigger, TriggerConfig, TriggerState};
pub use window::RollingWindow;

use rayon::prelude::*;

use crate::data::FrameStream;
use crate::metric::{self, ClassMap, UncertaintyMap};
use crate::tinynet::{predict_class, softmax, MaskStream, Model};
use crate::{Error, Result, Scalar, Tensor};

/// Anything that labels a frame, optionally with dropout active.
pub trait Perceiver<T: Scalar>: Sync {
    fn class_count(&self) -> usize;

    /// One forward pass. `dropout` carries the rate and the mask stream for a
    /// stochastic pass; `None` is the deterministic pass.
    fn perceive(&self, frame: &Tensor<T>, dropout: Option<(f64, &mut MaskStream)>) -> Result<ClassMap>;
}

/// A flat classifier labels the whole frame with one class (a 1x1 map).
impl<T: Scalar> Perceiver<T> for Model<T> {
    fn class_count(&self) -> usize {
        Model::class_count(self)
    }

    fn perceive(&self, frame: &Tensor<T>, dropout: Option<(f64, &mut MaskStream)>) -> Result<ClassMap> {
        let logits = match dropout {
            Some((rate, masks)) => self.forward_with_rate(frame, rate, masks)?,
            None => self.forward(frame, None)?,
        };
        Ok(ClassMap::single(predict_class(&softmax(logits.values())?)?))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Vanilla,
    Rolling,
}

/// How pass indices map onto mask streams.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MaskSchedule {
    /// Every pass of a run gets its own stream.
    Fresh,
    /// Pass `k` of every vanilla frame and rolling frame `t` with `t % stride == k`
    /// share stream `k`, so a rolling window over identical frames sees exactly
    /// the masks of one vanilla frame.
    Pinned,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnvelopeConfig {
    /// Dropout passes per frame in vanilla mode.
    pub n_fwp: usize,
    /// Window length (frames) in rolling mode.
    pub stride: usize,
    pub dropout_rate: f64,
    pub mode: Mode,
    pub seed: u64,
    pub schedule: MaskSchedule,
}

impl EnvelopeConfig {
    pub fn vanilla(n_fwp: usize, dropout_rate: f64, seed: u64) -> Self {
        Self {
            n_fwp,
            stride: n_fwp,
            dropout_rate,
            mode: Mode::Vanilla,
            seed,
            schedule: MaskSchedule::Fresh,
        }
    }

    pub fn rolling(stride: usize, dropout_rate: f64, seed: u64) -> Self {
        Self {
            n_fwp: 1,
            stride,
            dropout_rate,
            mode: Mode::Rolling,
            seed,
            schedule: MaskSchedule::Fresh,
        }
    }

    pub fn pinned(mut self) -> Self {
        self.schedule = MaskSchedule::Pinned;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_fwp == 0 || self.stride == 0 {
            return Err(Error::Config("n_fwp and stride must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Config(format!(
                "dropout rate {} outside [0, 1)",
                self.dropout_rate
            )));
        }
        Ok(())
    }

    /// Forward passes needed to cover `frames` frames in this mode.
    pub fn passes_for(&self, frames: u64) -> u64 {
        match self.mode {
            Mode::Vanilla => frames * self.n_fwp as u64,
            Mode::Rolling => frames,
        }
    }

    fn pass_id(&self, frame_index: u64, pass: u64) -> u64 {
        match (self.mode, self.schedule) {
            (Mode::Vanilla, MaskSchedule::Fresh) => frame_index * self.n_fwp as u64 + pass,
            (Mode::Vanilla, MaskSchedule::Pinned) => pass,
            (Mode::Rolling, MaskSchedule::Fresh) => frame_index,
            (Mode::Rolling, MaskSchedule::Pinned) => frame_index % self.stride as u64,
        }
    }
}

impl Default for EnvelopeConfig {
    fn default() -> Self {
        Self::vanilla(5, 0.2, 0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnvelopeOutput<T = f64> {
    pub frame_index: u64,
    pub timestamp: f64,
    /// Majority vote over the passes (vanilla) or this frame's own dropout pass (rolling).
    pub prediction: ClassMap,
    /// `None` while a rolling window is still filling.
    pub uncertainty_map: Option<UncertaintyMap<T>>,
    pub frame_uncertainty: Option<T>,
    /// Cumulative forward passes of the run so far, this frame included.
    pub forward_passes_used: u64,
    pub trigger_stage: usize,
    pub trigger_stage_name: String,
}

impl<T> EnvelopeOutput<T> {
    pub fn is_warmup(&self) -> bool {
        self.frame_uncertainty.is_none()
    }
}

/// Stateful runner for one stream.
pub struct Envelope<'m, T: Scalar, P: Perceiver<T> + ?Sized> {
    model: &'m P,
    config: EnvelopeConfig,
    trigger_config: TriggerConfig,
    trigger: TriggerState,
    window: RollingWindow,
    frames_seen: u64,
    passes_used: u64,
    _scalar: std::marker::PhantomData<T>,
}

impl<'m, T: Scalar, P: Perceiver<T> + ?Sized> Envelope<'m, T, P> {
    pub fn new(model: &'m P, config: EnvelopeConfig, trigger_config: TriggerConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            model,
            window: RollingWindow::new(config.stride),
            trigger: TriggerState::new(&trigger_config),
            config,
            trigger_config,
            frames_seen: 0,
            passes_used: 0,
            _scalar: std::marker::PhantomData,
        })
    }

    pub fn config(&self) -> &EnvelopeConfig {
        &self.config
    }

    pub fn passes_used(&self) -> u64 {
        self.passes_used
    }

    pub fn trigger_state(&self) -> &TriggerState {
        &self.trigger
    }

    fn dropout_pass(&self, frame: &Tensor<T>, pass_id: u64) -> Result<ClassMap> {
        let mut masks = MaskStream::new(self.config.seed, pass_id);
        self.model
            .perceive(frame, Some((self.config.dropout_rate, &mut masks)))
    }

    /// Feeds the next frame of the stream.
    pub fn process(&mut self, frame: &Tensor<T>, timestamp: f64) -> Result<EnvelopeOutput<T>> {
        let index = self.frames_seen;
        let (prediction, uncertainty_map) = match self.config.mode {
            Mode::Vanilla => {
                let maps = (0..self.config.n_fwp as u64)
                    .into_par_iter()
                    .map(|k| self.dropout_pass(frame, self.config.pass_id(index, k)))
                    .collect::<Result<Vec<_>>>()?;
                self.passes_used += maps.len() as u64;
                let uncertainty = metric::pixel_uncertainty_map::<T>(&maps)?;
                (metric::majority_map(&maps)?, Some(uncertainty))
            }
            Mode::Rolling => {
                let map = self.dropout_pass(frame, self.config.pass_id(index, 0))?;
                self.passes_used += 1;
                if let Some(oldest) = self.window.latest() {
                    if !oldest.same_dims(&map) {
                        return Err(Error::Input("frame output size changed mid-stream".into()));
                    }
                }
                self.window.push(map.clone(), timestamp);
                let uncertainty = if self.window.is_full() {
                    Some(metric::pixel_uncertainty_map(self.window.contiguous())?)
                } else {
                    None
                };
                (map, uncertainty)
            }
        };
        self.frames_seen += 1;

        let frame_uncertainty = uncertainty_map.as_ref().map(metric::frame_uncertainty);
        if let Some(u) = frame_uncertainty {
            self.trigger = update_trigger(&self.trigger, u.to_f64_lossy(), &self.trigger_config);
        }
        Ok(EnvelopeOutput {
            frame_index: index,
            timestamp,
            prediction,
            uncertainty_map,
            frame_uncertainty,
            forward_passes_used: self.passes_used,
            trigger_stage: self.trigger.stage(),
            trigger_stage_name: self.trigger_config.stage_name(self.trigger.stage()).to_string(),
        })
    }

    /// Processes every frame of `stream` in order.
    pub fn run(&mut self, stream: &FrameStream<T>) -> Result<Vec<EnvelopeOutput<T>>> {
        stream
            .frames()
            .iter()
            .enumerate()
            .map(|(i, f)| self.process(f, stream.timestamp(i)))
            .collect()
    }
}

/// Vanilla Monte Carlo Dropout on a single frame.
pub fn run_vanilla<T: Scalar, P: Perceiver<T> + ?Sized>(
    model: &P,
    frame: &Tensor<T>,
    config: &EnvelopeConfig,
    trigger: &TriggerConfig,
) -> Result<EnvelopeOutput<T>> {
    if config.mode != Mode::Vanilla {
        return Err(Error::Config("run_vanilla needs a vanilla-mode config".into()));
    }
    Envelope::new(model, config.clone(), trigger.clone())?.process(frame, 0.0)
}

/// Rolling Monte Carlo Dropout over a stream; the first `stride - 1` outputs are warm-up.
pub fn run_rolling<T: Scalar, P: Perceiver<T> + ?Sized>(
    model: &P,
    stream: &FrameStream<T>,
    config: &EnvelopeConfig,
    trigger: &TriggerConfig,
) -> Result<Vec<EnvelopeOutput<T>>> {
    if config.mode != Mode::Rolling {
        return Err(Error::Config("run_rolling needs a rolling-mode config".into()));
    }
    Envelope::new(model, config.clone(), trigger.clone())?.run(stream)
}

/// Either mode over a whole stream.
pub fn run_stream<T: Scalar, P: Perceiver<T> + ?Sized>(
    model: &P,
    stream: &FrameStream<T>,
    config: &EnvelopeConfig,
    trigger: &TriggerConfig,
) -> Result<Vec<EnvelopeOutput<T>>> {
    Envelope::new(model, config.clone(), trigger.clone())?.run(stream)
}

/// Element-wise mean of probability tensors from several passes.
pub fn predictive_mean<T: Scalar>(stacks: &[Tensor<T>]) -> Result<Tensor<T>> {
    let first = stacks
        .first()
        .ok_or_else(|| Error::Input("predictive mean of zero passes".into()))?;
    if let Some(bad) = stacks.iter().position(|s| s.shape() != first.shape()) {
        return Err(Error::Input(format!(
            "pass {bad} has shape {:?}, expected {:?}",
            stacks[bad].shape(),
            first.shape()
        )));
    }
    let n = T::lit(stacks.len() as f64);
    let mut sum = vec![T::zero(); first.len()];
    for s in stacks {
        sum.iter_mut().zip(s.values()).for_each(|(a, &b)| *a += b);
    }
    Tensor::new(first.shape().to_vec(), sum.into_iter().map(|v| v / n).collect())
}
