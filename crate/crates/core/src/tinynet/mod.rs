//! Minimal dense classifier with inference-time dropout.
//!
//! Dropout sits after the activation of every weight layer except the output
//! layer and uses inverted scaling (survivors are multiplied by `1 / (1 - p)`),
//! so the deterministic pass needs no correction.

mod dropout;
mod io;
mod model;
mod train;

pub use dropout::{apply_dropout, derive_seed, MaskStream};
pub use model::{init_model, Activation, Architecture, Gradients, Layer, Model};
pub use train::{train, TrainConfig, TrainOutcome};

use crate::{Error, Result, Scalar};

/// Numerically stable softmax (max subtraction).
pub fn softmax<T: Scalar>(logits: &[T]) -> Result<Vec<T>> {
    if logits.is_empty() {
        return Err(Error::Input("softmax of an empty vector".into()));
    }
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("softmax input contains NaN or infinity".into()));
    }
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let mut out: Vec<T> = logits.iter().map(|&v| (v - max).exp()).collect();
    let total: T = out.iter().copied().sum();
    for v in &mut out {
        *v /= total;
    }
    Ok(out)
}

/// `log(sum(exp(x)))` without overflow.
pub fn log_sum_exp<T: Scalar>(values: &[T]) -> T {
    let max = values.iter().copied().fold(T::neg_infinity(), T::max);
    let sum: T = values.iter().map(|&v| (v - max).exp()).sum();
    max + sum.ln()
}

/// Index of the largest entry; the lowest index wins exact ties.
pub fn predict_class<T: Scalar>(probabilities: &[T]) -> Result<usize> {
    if probabilities.is_empty() {
        return Err(Error::Input("cannot predict from an empty vector".into()));
    }
    let mut best = 0;
    for (i, &p) in probabilities.iter().enumerate().skip(1) {
        if p > probabilities[best] {
            best = i;
        }
    }
    Ok(best)
}
