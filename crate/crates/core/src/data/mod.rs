//! Dataset ingestion and domain-shift generation.

mod idx;
mod rotate;
mod stream;

pub use idx::{encode_images, encode_labels, parse_idx, parse_images, parse_labels, IdxData, IdxKind};
pub use rotate::{build_rotation_domains, rotate, ROTATION_STEP_DEGREES, ROTATION_MAX_DEGREES};
pub use stream::{subsample, synth_sequence, DriftSpec, FrameStream};

use crate::{Error, Result, Scalar, Tensor};

/// Grayscale images in `[0, 1]` with their class labels.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSet<T = f64> {
    images: Vec<Tensor<T>>,
    labels: Vec<usize>,
}

impl<T: Scalar> LabeledSet<T> {
    pub fn new(images: Vec<Tensor<T>>, labels: Vec<usize>) -> Result<Self> {
        if images.len() != labels.len() {
            return Err(Error::Input(format!(
                "{} images but {} labels",
                images.len(),
                labels.len()
            )));
        }
        Ok(Self { images, labels })
    }

    pub fn images(&self) -> &[Tensor<T>] {
        &self.images
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// The first `n` samples (or all of them).
    pub fn head(&self, n: usize) -> Self {
        let n = n.min(self.len());
        Self {
            images: self.images[..n].to_vec(),
            labels: self.labels[..n].to_vec(),
        }
    }
}
