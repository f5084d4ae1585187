use std::collections::BTreeMap;

use rayon::prelude::*;

use super::LabeledSet;
use crate::{Error, Result, Scalar, Tensor};

pub const ROTATION_STEP_DEGREES: u32 = 5;
pub const ROTATION_MAX_DEGREES: u32 = 90;

/// `(sin, cos)` with exact values at multiples of 90 degrees.
fn sin_cos(degrees: f64) -> (f64, f64) {
    if degrees % 90.0 == 0.0 {
        match (degrees / 90.0) as u32 % 4 {
            0 => (0.0, 1.0),
            1 => (1.0, 0.0),
            2 => (0.0, -1.0),
            _ => (-1.0, 0.0),
        }
    } else {
        degrees.to_radians().sin_cos()
    }
}

/// Anticlockwise rotation about the image center with bilinear sampling.
///
/// Source positions outside the image read as 0. The output has the input's
/// shape. At right angles the mapping is an exact pixel permutation; for a
/// square `N x N` image rotated by 90 degrees, `out[r][c] == in[c][N - 1 - r]`.
pub fn rotate<T: Scalar>(image: &Tensor<T>, degrees: f64) -> Result<Tensor<T>> {
    let (rows, cols) = image
        .dims2()
        .ok_or_else(|| Error::Input(format!("rotate needs a 2-D image, got shape {:?}", image.shape())))?;
    if !(0.0..360.0).contains(&degrees) {
        return Err(Error::Input(format!("rotation angle {degrees} outside [0, 360)")));
    }
    if degrees == 0.0 {
        return Ok(image.clone());
    }
    let (sin, cos) = sin_cos(degrees);
    let cy = (rows as f64 - 1.0) / 2.0;
    let cx = (cols as f64 - 1.0) / 2.0;
    let src = image.values();
    let pixel = |r: isize, c: isize| -> f64 {
        if r < 0 || c < 0 || r >= rows as isize || c >= cols as isize {
            0.0
        } else {
            src[r as usize * cols + c as usize].to_f64_lossy()
        }
    };

    let mut out = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let x = c as f64 - cx;
            let y = r as f64 - cy;
            let sx = x * cos - y * sin + cx;
            let sy = x * sin + y * cos + cy;
            let x0 = sx.floor();
            let y0 = sy.floor();
            let fx = sx - x0;
            let fy = sy - y0;
            let (x0, y0) = (x0 as isize, y0 as isize);
            let top = pixel(y0, x0) * (1.0 - fx) + pixel(y0, x0 + 1) * fx;
            let bottom = pixel(y0 + 1, x0) * (1.0 - fx) + pixel(y0 + 1, x0 + 1) * fx;
            let v = top * (1.0 - fy) + bottom * fy;
            out.push(T::lit(v.clamp(0.0, 1.0)));
        }
    }
    Tensor::new(vec![rows, cols], out)
}

/// Rotated copies of `set` at 0, 5, ..., 90 degrees, each rotated from the original.
pub fn build_rotation_domains<T: Scalar>(set: &LabeledSet<T>) -> Result<BTreeMap<u32, LabeledSet<T>>> {
    if set.is_empty() {
        return Err(Error::Input("cannot build rotation domains from an empty set".into()));
    }
    let mut domains = BTreeMap::new();
    for degrees in (0..=ROTATION_MAX_DEGREES).step_by(ROTATION_STEP_DEGREES as usize) {
        let images = set
            .images()
            .par_iter()
            .map(|img| rotate(img, f64::from(degrees)))
            .collect::<Result<Vec<_>>>()?;
        domains.insert(degrees, LabeledSet::new(images, set.labels().to_vec())?);
    }
    Ok(domains)
}
