//! Binary model format.
//!
//! ```text
//! "DPNV1\0"
//! u32 layer count
//! per layer: u32 rows, u32 cols, f64 dropout_rate, u8 activation (0 identity, 1 relu),
//!            f64[rows * cols] weights (row-major), f64[cols] bias
//! ```
//! All integers and floats are little-endian.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use super::model::{Activation, Layer, Model};
use crate::{Error, Result, Scalar, Tensor};

pub const MAGIC: &[u8; 6] = b"DPNV1\0";

impl<T: Scalar> Model<T> {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + self.param_count() * 8);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.layers().len() as u32).to_le_bytes());
        for layer in self.layers() {
            out.extend_from_slice(&(layer.inputs() as u32).to_le_bytes());
            out.extend_from_slice(&(layer.outputs() as u32).to_le_bytes());
            out.extend_from_slice(&layer.dropout_rate.to_le_bytes());
            out.push(layer.activation.code());
            for v in layer.weights.values().iter().chain(layer.bias.values()) {
                out.extend_from_slice(&v.to_f64_lossy().to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(MAGIC.len())? != MAGIC {
            return Err(Error::Parse {
                offset: 0,
                message: "not a model file (bad magic)".into(),
            });
        }
        let count = r.u32()? as usize;
        if count == 0 {
            return Err(r.error("model file declares zero layers"));
        }
        let mut layers = Vec::with_capacity(count);
        for _ in 0..count {
            let rows = r.u32()? as usize;
            let cols = r.u32()? as usize;
            let dropout_rate = r.f64()?;
            let code = r.take(1)?[0];
            let activation =
                Activation::from_code(code).ok_or_else(|| r.error(&format!("unknown activation code {code}")))?;
            let weights = (0..rows * cols).map(|_| r.f64().map(T::lit)).collect::<Result<Vec<_>>>()?;
            let bias = (0..cols).map(|_| r.f64().map(T::lit)).collect::<Result<Vec<_>>>()?;
            layers.push(Layer {
                weights: Tensor::new(vec![rows, cols], weights).map_err(|e| r.error(&e.to_string()))?,
                bias: Tensor::new(vec![cols], bias).map_err(|e| r.error(&e.to_string()))?,
                activation,
                dropout_rate,
            });
        }
        if r.pos != bytes.len() {
            return Err(r.error("trailing bytes after last layer"));
        }
        let class_count = layers.last().map(|l: &Layer<T>| l.outputs()).unwrap_or(0);
        Model::from_layers(layers, class_count)
    }

    pub fn write_to(&self, w: &mut impl Write) -> std::io::Result<()> {
        w.write_all(&self.to_bytes())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)
            .map_err(|e| Error::Input(format!("reading model: {e}")))?;
        Self::from_bytes(&bytes)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn error(&self, message: &str) -> Error {
        Error::Parse {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let slice = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(slice)
            }
            None => Err(self.error(&format!("truncated: needed {n} more bytes"))),
        }
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
