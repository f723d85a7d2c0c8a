//! MNIST IDX file parsing and pairing.
//!
//! IDX layout: a 4-byte big-endian magic (0x00000803 for images,
//! 0x00000801 for labels), one big-endian u32 per dimension, then the raw
//! `u8` payload. Gzip-compressed files are recognized by their 0x1f 0x8b
//! signature and decompressed transparently, since the official
//! distribution ships gzipped.

use std::fmt;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;

use crate::error::{Error, Result};

pub const IMAGE_SIDE: usize = 28;
pub const IMAGE_PIXELS: usize = IMAGE_SIDE * IMAGE_SIDE;

const MAGIC_IMAGES: u32 = 0x0000_0803;
const MAGIC_LABELS: u32 = 0x0000_0801;

/// One 28x28 grayscale image, row-major, exactly as stored in the file.
#[derive(Clone, PartialEq, Eq)]
pub struct RawImage {
    pixels: [u8; IMAGE_PIXELS],
}

impl RawImage {
    pub fn new(pixels: [u8; IMAGE_PIXELS]) -> Self {
        Self { pixels }
    }

    pub fn zero() -> Self {
        Self {
            pixels: [0; IMAGE_PIXELS],
        }
    }

    pub fn pixels(&self) -> &[u8; IMAGE_PIXELS] {
        &self.pixels
    }

    pub fn pixel(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * IMAGE_SIDE + col]
    }
}

impl fmt::Debug for RawImage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RawImage({} px, first={})", IMAGE_PIXELS, self.pixels[0])
    }
}

/// Paired images and digit labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    images: Vec<RawImage>,
    labels: Vec<u8>,
}

impl Dataset {
    pub fn new(images: Vec<RawImage>, labels: Vec<u8>) -> Result<Self> {
        if images.len() != labels.len() {
            return Err(Error::CountMismatch {
                images: images.len(),
                labels: labels.len(),
            });
        }
        if let Some(bad) = labels.iter().position(|&l| l > 9) {
            return Err(Error::InvalidParameter(format!(
                "label {} at index {bad} is not a digit",
                labels[bad]
            )));
        }
        Ok(Self { images, labels })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn image(&self, i: usize) -> &RawImage {
        &self.images[i]
    }

    pub fn label(&self, i: usize) -> u8 {
        self.labels[i]
    }

    pub fn images(&self) -> &[RawImage] {
        &self.images
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn iter(&self) -> impl Iterator<Item = (&RawImage, u8)> {
        self.images.iter().zip(self.labels.iter().copied())
    }

    /// First `n` items (or the whole set when `n` is 0 or past the end).
    pub fn truncated(&self, n: usize) -> Dataset {
        if n == 0 || n >= self.len() {
            return self.clone();
        }
        Dataset {
            images: self.images[..n].to_vec(),
            labels: self.labels[..n].to_vec(),
        }
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    let raw = fs::read(path).map_err(|e| Error::io(path, e))?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| Error::io(path, e))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

struct IdxReader<'a> {
    bytes: &'a [u8],
    offset: usize,
    path: &'a Path,
}

impl<'a> IdxReader<'a> {
    fn new(bytes: &'a [u8], path: &'a Path) -> Self {
        Self {
            bytes,
            offset: 0,
            path,
        }
    }

    fn error(&self, message: impl Into<String>) -> Error {
        Error::format(self.path, self.offset as u64, message)
    }

    fn read_u32(&mut self, what: &str) -> Result<u32> {
        let end = self.offset + 4;
        if end > self.bytes.len() {
            return Err(self.error(format!("truncated file while reading {what}")));
        }
        let v = u32::from_be_bytes(self.bytes[self.offset..end].try_into().unwrap());
        self.offset = end;
        Ok(v)
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.offset.checked_add(n).ok_or_else(|| self.error("length overflow"))?;
        if end > self.bytes.len() {
            return Err(self.error(format!(
                "truncated file: {what} needs {n} bytes, {} left",
                self.bytes.len() - self.offset
            )));
        }
        let s = &self.bytes[self.offset..end];
        self.offset = end;
        Ok(s)
    }

    fn expect_end(&self) -> Result<()> {
        if self.offset != self.bytes.len() {
            return Err(self.error(format!(
                "{} trailing bytes after declared payload",
                self.bytes.len() - self.offset
            )));
        }
        Ok(())
    }
}

/// Parse an IDX image file into images in file order, bytes unmodified.
pub fn load_idx_images(path: impl AsRef<Path>) -> Result<Vec<RawImage>> {
    let path = path.as_ref();
    let bytes = read_file(path)?;
    let mut r = IdxReader::new(&bytes, path);
    let magic = r.read_u32("magic")?;
    if magic != MAGIC_IMAGES {
        return Err(Error::format(
            path,
            0,
            format!("bad magic 0x{magic:08x}, expected 0x{MAGIC_IMAGES:08x} (IDX images)"),
        ));
    }
    let count = r.read_u32("image count")? as usize;
    let rows = r.read_u32("row count")? as usize;
    let cols = r.read_u32("column count")? as usize;
    if rows != IMAGE_SIDE || cols != IMAGE_SIDE {
        return Err(Error::format(
            path,
            8,
            format!("expected {IMAGE_SIDE}x{IMAGE_SIDE} images, file declares {rows}x{cols}"),
        ));
    }
    let payload = r.take(count * IMAGE_PIXELS, "pixel data")?;
    r.expect_end()?;
    Ok(payload
        .chunks_exact(IMAGE_PIXELS)
        .map(|c| RawImage::new(c.try_into().unwrap()))
        .collect())
}

/// Parse an IDX label file; every label must be a digit 0-9.
pub fn load_idx_labels(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    let path = path.as_ref();
    let bytes = read_file(path)?;
    let mut r = IdxReader::new(&bytes, path);
    let magic = r.read_u32("magic")?;
    if magic != MAGIC_LABELS {
        return Err(Error::format(
            path,
            0,
            format!("bad magic 0x{magic:08x}, expected 0x{MAGIC_LABELS:08x} (IDX labels)"),
        ));
    }
    let count = r.read_u32("label count")? as usize;
    let payload = r.take(count, "label data")?;
    r.expect_end()?;
    if let Some(bad) = payload.iter().position(|&l| l > 9) {
        return Err(Error::format(
            path,
            (8 + bad) as u64,
            format!("label byte 0x{:02x} is not a digit 0-9", payload[bad]),
        ));
    }
    Ok(payload.to_vec())
}

/// Load and pair an image file with its label file.
pub fn load_dataset(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<Dataset> {
    let images = load_idx_images(images_path)?;
    let labels = load_idx_labels(labels_path)?;
    Dataset::new(images, labels)
}

/// Serialize images back to IDX bytes (uncompressed).
pub fn idx_image_bytes(images: &[RawImage]) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.len() * IMAGE_PIXELS);
    out.extend_from_slice(&MAGIC_IMAGES.to_be_bytes());
    out.extend_from_slice(&(images.len() as u32).to_be_bytes());
    out.extend_from_slice(&(IMAGE_SIDE as u32).to_be_bytes());
    out.extend_from_slice(&(IMAGE_SIDE as u32).to_be_bytes());
    for img in images {
        out.extend_from_slice(img.pixels());
    }
    out
}

/// Serialize labels back to IDX bytes (uncompressed).
pub fn idx_label_bytes(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&MAGIC_LABELS.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

pub fn write_idx_images(path: impl AsRef<Path>, images: &[RawImage]) -> Result<()> {
    let path = path.as_ref();
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&idx_image_bytes(images))
        .map_err(|e| Error::io(path, e))
}

pub fn write_idx_labels(path: impl AsRef<Path>, labels: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&idx_label_bytes(labels))
        .map_err(|e| Error::io(path, e))
}

const TRAIN_IMAGES: &str = "train-images-idx3-ubyte";
const TRAIN_LABELS: &str = "train-labels-idx1-ubyte";
const TEST_IMAGES: &str = "t10k-images-idx3-ubyte";
const TEST_LABELS: &str = "t10k-labels-idx1-ubyte";

/// Resolve a canonical MNIST file inside `dir`, accepting a `.gz` variant.
pub fn locate(dir: &Path, stem: &str) -> Result<PathBuf> {
    let plain = dir.join(stem);
    if plain.exists() {
        return Ok(plain);
    }
    let gz = dir.join(format!("{stem}.gz"));
    if gz.exists() {
        return Ok(gz);
    }
    Err(Error::io(
        plain,
        std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("neither {stem} nor {stem}.gz found in {}", dir.display()),
        ),
    ))
}

/// Load the canonical train/test pair from a directory.
pub fn load_mnist(dir: impl AsRef<Path>) -> Result<(Dataset, Dataset)> {
    let dir = dir.as_ref();
    let train = load_dataset(locate(dir, TRAIN_IMAGES)?, locate(dir, TRAIN_LABELS)?)?;
    let test = load_dataset(locate(dir, TEST_IMAGES)?, locate(dir, TEST_LABELS)?)?;
    Ok((train, test))
}
