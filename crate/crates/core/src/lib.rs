//! Monte Carlo Dropout uncertainty envelope for classifiers.
//!
//! The crate wraps a classifier in a monitoring layer that runs stochastic
//! (dropout-enabled) forward passes, turns the spread of their predicted classes
//! into a bounded hit-count uncertainty, and maps that uncertainty onto staged
//! safety triggers. Two runners are provided: vanilla Monte Carlo Dropout
//! (several passes on one frame) and rolling Monte Carlo Dropout (one pass per
//! frame, hits pooled over a sliding window of consecutive frames).
//!
//! Module map:
//!
//! * [`tinynet`] - a small dense classifier with inference-time dropout, SGD
//!   training and a binary model format.
//! * [`metric`] - hit accumulation, pseudo ground truth and the uncertainty measures.
//! * [`envelope`] - the vanilla / rolling runners and the trigger state machine.
//! * [`data`] - IDX parsing, rotation shifts and synthetic drifting frame streams.
//! * [`eval`] - error, confidence, Spearman correlation, CSV tables and PGM heatmaps.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`). The generic
//! types default to `f64`; `*32` aliases below name the single-precision variants.

pub mod data;
pub mod envelope;
mod error;
pub mod eval;
pub mod metric;
mod scalar;
pub mod tensor;
pub mod tinynet;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use tensor::Tensor;

pub use data::{FrameStream, LabeledSet};
pub use envelope::{EnvelopeConfig, EnvelopeOutput, TriggerConfig, TriggerState};
pub use metric::{ClassMap, HitVector, UncertaintyMap};
pub use tinynet::{MaskStream, Model, TrainConfig};

pub type Tensor32 = Tensor<f32>;
pub type Tensor64 = Tensor<f64>;
pub type Model32 = Model<f32>;
pub type Model64 = Model<f64>;
pub type UncertaintyMap32 = UncertaintyMap<f32>;
pub type UncertaintyMap64 = UncertaintyMap<f64>;
pub type FrameStream32 = FrameStream<f32>;
pub type FrameStream64 = FrameStream<f64>;
pub type LabeledSet32 = LabeledSet<f32>;
pub type LabeledSet64 = LabeledSet<f64>;
