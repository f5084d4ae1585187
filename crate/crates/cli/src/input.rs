//! Reading IDX files (raw or gzip-compressed) and model files from disk.

use std::fs;
use std::io::Read;
use std::path::Path;

use anyhow::{Context, Result};
use envelope_core::data::{parse_images, parse_labels};
use envelope_core::{LabeledSet, Model, Tensor};
use flate2::read::GzDecoder;

const GZIP_MAGIC: [u8; 2] = [0x1f, 0x8b];

/// File contents, transparently gunzipped.
pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    let raw = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    if !raw.starts_with(&GZIP_MAGIC) {
        return Ok(raw);
    }
    let mut out = Vec::new();
    GzDecoder::new(raw.as_slice())
        .read_to_end(&mut out)
        .with_context(|| format!("decompressing {}", path.display()))?;
    Ok(out)
}

pub fn load_images(path: &Path) -> Result<Vec<Tensor>> {
    let bytes = read_bytes(path)?;
    parse_images(&bytes).with_context(|| format!("parsing {}", path.display()))
}

pub fn load_labels(path: &Path) -> Result<Vec<usize>> {
    let bytes = read_bytes(path)?;
    parse_labels(&bytes).with_context(|| format!("parsing {}", path.display()))
}

/// Images and labels, optionally truncated to the first `limit` samples.
pub fn load_set(images: &Path, labels: &Path, limit: Option<usize>) -> Result<LabeledSet> {
    let set = LabeledSet::new(load_images(images)?, load_labels(labels)?)
        .with_context(|| format!("pairing {} with {}", images.display(), labels.display()))?;
    Ok(match limit {
        Some(n) => set.head(n),
        None => set,
    })
}

pub fn load_model(path: &Path) -> Result<Model> {
    Model::load(path).with_context(|| format!("loading model {}", path.display()))
}
