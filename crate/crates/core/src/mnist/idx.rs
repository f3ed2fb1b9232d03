//! IDX container: big-endian magic `0x000008TT`, one `u32` size per
//! dimension, then the raw payload. Only unsigned-byte payloads are read.

use std::path::Path;

use crate::error::{Error, Result};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    /// Row-major, `count · rows · cols` bytes.
    pub pixels: Vec<u8>,
}

impl IdxImages {
    pub fn image(&self, i: usize) -> &[u8] {
        let size = self.rows * self.cols;
        &self.pixels[i * size..(i + 1) * size]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IdxData {
    Images(IdxImages),
    Labels(Vec<u8>),
}

fn read_u32(bytes: &[u8], at: usize) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or(Error::Truncated {
            needed: at + 4,
            found: bytes.len(),
        })
}

fn payload(bytes: &[u8], header: usize, len: usize) -> Result<&[u8]> {
    let needed = header + len;
    if bytes.len() < needed {
        return Err(Error::Truncated {
            needed,
            found: bytes.len(),
        });
    }
    Ok(&bytes[header..needed])
}

/// Parses an image (`0x803`) or label (`0x801`) file.
pub fn parse_idx(bytes: &[u8]) -> Result<IdxData> {
    match read_u32(bytes, 0)? {
        IMAGES_MAGIC => {
            let count = read_u32(bytes, 4)? as usize;
            let rows = read_u32(bytes, 8)? as usize;
            let cols = read_u32(bytes, 12)? as usize;
            let pixels = payload(bytes, 16, count * rows * cols)?.to_vec();
            Ok(IdxData::Images(IdxImages {
                count,
                rows,
                cols,
                pixels,
            }))
        }
        LABELS_MAGIC => {
            let count = read_u32(bytes, 4)? as usize;
            Ok(IdxData::Labels(payload(bytes, 8, count)?.to_vec()))
        }
        other => Err(Error::IdxFormat(format!("unsupported magic 0x{other:08x}"))),
    }
}

pub fn parse_images(bytes: &[u8]) -> Result<IdxImages> {
    match parse_idx(bytes)? {
        IdxData::Images(i) => Ok(i),
        IdxData::Labels(_) => Err(Error::IdxFormat("expected an image file, found labels".into())),
    }
}

pub fn parse_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    match parse_idx(bytes)? {
        IdxData::Labels(l) => Ok(l),
        IdxData::Images(_) => Err(Error::IdxFormat("expected a label file, found images".into())),
    }
}

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Loads a paired image/label split and checks that the counts agree.
pub fn load_pair(images: &Path, labels: &Path) -> Result<(IdxImages, Vec<u8>)> {
    let imgs = parse_images(&read_file(images)?)?;
    let labs = parse_labels(&read_file(labels)?)?;
    if imgs.count != labs.len() {
        return Err(Error::CountMismatch {
            images: imgs.count,
            labels: labs.len(),
        });
    }
    Ok((imgs, labs))
}

/// Serialises images in IDX form.
pub fn encode_images(images: &IdxImages) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.pixels.len());
    for v in [IMAGES_MAGIC, images.count as u32, images.rows as u32, images.cols as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.extend_from_slice(&images.pixels);
    out
}

pub fn encode_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}
