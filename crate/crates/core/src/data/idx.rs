//! IDX container (the MNIST file format): big-endian magic, big-endian u32
//! dimension sizes, then an unsigned-byte payload.

use crate::{Error, Result, Scalar, Tensor};

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;
const MAX_LABEL: u8 = 9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IdxKind {
    Images,
    Labels,
}

#[derive(Clone, Debug, PartialEq)]
pub enum IdxData<T = f64> {
    Images(Vec<Tensor<T>>),
    Labels(Vec<usize>),
}

fn parse_error(offset: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        offset,
        message: message.into(),
    }
}

fn read_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes(b.try_into().unwrap()))
        .ok_or_else(|| parse_error(offset, "truncated header"))
}

/// Reads the header and returns `(dims, payload offset)`.
fn header(bytes: &[u8], magic: u32, rank: usize) -> Result<(Vec<usize>, usize)> {
    let found = read_u32(bytes, 0)?;
    if found != magic {
        return Err(parse_error(
            0,
            format!("magic {found} does not match expected {magic}"),
        ));
    }
    let dims = (0..rank)
        .map(|i| read_u32(bytes, 4 + 4 * i).map(|d| d as usize))
        .collect::<Result<Vec<_>>>()?;
    let start = 4 + 4 * rank;
    let expected: usize = dims.iter().product();
    let available = bytes.len() - start;
    if available < expected {
        return Err(parse_error(
            bytes.len(),
            format!("truncated payload: header promises {expected} bytes, found {available}"),
        ));
    }
    if available > expected {
        return Err(parse_error(
            start + expected,
            format!("{} bytes beyond the declared payload", available - expected),
        ));
    }
    Ok((dims, start))
}

/// Images file (magic 2051, three dimensions); pixels scaled by 1/255.
pub fn parse_images<T: Scalar>(bytes: &[u8]) -> Result<Vec<Tensor<T>>> {
    let (dims, start) = header(bytes, IMAGES_MAGIC, 3)?;
    let (count, rows, cols) = (dims[0], dims[1], dims[2]);
    if rows == 0 || cols == 0 {
        return Err(parse_error(8, format!("degenerate image size {rows}x{cols}")));
    }
    let scale = T::lit(1.0 / 255.0);
    let stride = rows * cols;
    (0..count)
        .map(|i| {
            let px = &bytes[start + i * stride..start + (i + 1) * stride];
            Tensor::new(vec![rows, cols], px.iter().map(|&b| T::lit(f64::from(b)) * scale).collect())
        })
        .collect()
}

/// Labels file (magic 2049, one dimension); labels must be digits 0..=9.
pub fn parse_labels(bytes: &[u8]) -> Result<Vec<usize>> {
    let (_, start) = header(bytes, LABELS_MAGIC, 1)?;
    bytes[start..]
        .iter()
        .enumerate()
        .map(|(i, &b)| {
            if b > MAX_LABEL {
                Err(parse_error(start + i, format!("label {b} outside 0..=9")))
            } else {
                Ok(usize::from(b))
            }
        })
        .collect()
}

pub fn parse_idx<T: Scalar>(bytes: &[u8], kind: IdxKind) -> Result<IdxData<T>> {
    match kind {
        IdxKind::Images => parse_images(bytes).map(IdxData::Images),
        IdxKind::Labels => parse_labels(bytes).map(IdxData::Labels),
    }
}

/// Inverse of [`parse_images`]: `round(255 * v)` per pixel. All images must share one shape.
pub fn encode_images<T: Scalar>(images: &[Tensor<T>]) -> Result<Vec<u8>> {
    let (rows, cols) = match images.first() {
        Some(img) => img
            .dims2()
            .ok_or_else(|| Error::Input("images must be rank 2".into()))?,
        None => (0, 0),
    };
    let mut out = Vec::with_capacity(16 + images.len() * rows * cols);
    out.extend_from_slice(&IMAGES_MAGIC.to_be_bytes());
    for d in [images.len(), rows, cols] {
        out.extend_from_slice(&(d as u32).to_be_bytes());
    }
    for img in images {
        if img.dims2() != Some((rows, cols)) {
            return Err(Error::Input("images differ in shape".into()));
        }
        out.extend(
            img.values()
                .iter()
                .map(|v| (v.to_f64_lossy() * 255.0).round().clamp(0.0, 255.0) as u8),
        );
    }
    Ok(out)
}

pub fn encode_labels(labels: &[usize]) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    for &l in labels {
        if l > usize::from(MAX_LABEL) {
            return Err(Error::Input(format!("label {l} outside 0..=9")));
        }
        out.push(l as u8);
    }
    Ok(out)
}
