//! IDX ubyte files (the MNIST container format).

use crate::error::{invalid, Result};

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

fn be_u32(bytes: &[u8], at: usize) -> Result<u32> {
    match bytes.get(at..at + 4) {
        Some(b) => Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]])),
        None => invalid(format!("IDX header truncated at byte {at}")),
    }
}

/// Images as row-major pixel rows scaled to [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct IdxImages {
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<Vec<f64>>,
}

pub fn parse_idx_images(bytes: &[u8]) -> Result<IdxImages> {
    let magic = be_u32(bytes, 0)?;
    if magic != IMAGES_MAGIC {
        return invalid(format!("bad IDX image magic {magic:#010x}"));
    }
    let count = be_u32(bytes, 4)? as usize;
    let rows = be_u32(bytes, 8)? as usize;
    let cols = be_u32(bytes, 12)? as usize;
    let size = rows.checked_mul(cols).filter(|&s| s > 0);
    let Some(size) = size else {
        return invalid(format!("bad IDX image shape {rows}x{cols}"));
    };
    let body = &bytes[16..];
    if count.checked_mul(size) != Some(body.len()) {
        return invalid(format!("IDX image body has {} bytes, expected {count} x {size}", body.len()));
    }
    let pixels = body.chunks_exact(size).map(|c| c.iter().map(|&b| b as f64 / 255.0).collect()).collect();
    Ok(IdxImages { rows, cols, pixels })
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<usize>> {
    let magic = be_u32(bytes, 0)?;
    if magic != LABELS_MAGIC {
        return invalid(format!("bad IDX label magic {magic:#010x}"));
    }
    let count = be_u32(bytes, 4)? as usize;
    let body = &bytes[8..];
    if body.len() != count {
        return invalid(format!("IDX label body has {} bytes, expected {count}", body.len()));
    }
    Ok(body.iter().map(|&b| b as usize).collect())
}

pub fn encode_idx_images(rows: usize, cols: usize, images: &[Vec<u8>]) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.len() * rows * cols);
    for v in [IMAGES_MAGIC, images.len() as u32, rows as u32, cols as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    for img in images {
        out.extend_from_slice(img);
    }
    out
}

pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let bytes = encode_idx_images(2, 2, &[vec![0, 255, 51, 102], vec![1, 2, 3, 4]]);
        let img = parse_idx_images(&bytes).unwrap();
        assert_eq!((img.rows, img.cols, img.pixels.len()), (2, 2, 2));
        assert_eq!(img.pixels[0], vec![0.0, 1.0, 0.2, 0.4]);
        assert_eq!(parse_idx_labels(&encode_idx_labels(&[3, 7])).unwrap(), vec![3, 7]);
    }

    #[test]
    fn rejects_corrupt_files() {
        let good = encode_idx_images(2, 2, &[vec![0; 4]]);
        assert!(parse_idx_images(&good[..good.len() - 1]).is_err());
        assert!(parse_idx_images(&good[..10]).is_err());
        assert!(parse_idx_images(&encode_idx_labels(&[1])).is_err());
        assert!(parse_idx_labels(&good).is_err());
        assert!(parse_idx_images(&encode_idx_images(0, 3, &[])).is_err());
    }
}
