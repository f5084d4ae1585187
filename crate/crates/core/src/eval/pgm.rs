//! Binary PGM (P5) heatmaps on a fixed scale: 0 maps to 0, 1 maps to 255.

use std::fs;
use std::path::Path;

use crate::metric::UncertaintyMap;
use crate::{Error, Result, Scalar};

pub fn encode_pgm<T: Scalar>(map: &UncertaintyMap<T>) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", map.width(), map.height()).into_bytes();
    out.extend(map.values().iter().map(|v| {
        // round half up
        (255.0 * v.to_f64_lossy() + 0.5).floor().clamp(0.0, 255.0) as u8
    }));
    out
}

pub fn write_pgm<T: Scalar>(map: &UncertaintyMap<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(map)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn payload(values: Vec<f64>) -> Vec<u8> {
        let n = values.len();
        let bytes = encode_pgm(&UncertaintyMap::new(1, n, values).unwrap());
        let header = format!("P5\n{n} 1\n255\n");
        assert!(bytes.starts_with(header.as_bytes()));
        bytes[header.len()..].to_vec()
    }

    #[test]
    fn fixed_scale_bytes() {
        assert_eq!(payload(vec![0.0]), vec![0]);
        assert_eq!(payload(vec![1.0]), vec![255]);
        assert_eq!(payload(vec![0.5, 0.25]), vec![128, 64]);
    }

    #[test]
    fn header_is_width_then_height() {
        let map = UncertaintyMap::new(2, 3, vec![0.0; 6]).unwrap();
        assert!(encode_pgm(&map).starts_with(b"P5\n3 2\n255\n"));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("map.pgm");
        write_pgm(&map, &path).unwrap();
        assert_eq!(fs::read(&path).unwrap().len(), 11 + 6);
    }
}
