//! T-patterns: fixed permutations that flatten a 28x28 image into the
//! 784-vector fed to the reservoir, plus input normalization.
//!
//! Pixel index convention: `row * 28 + col`, row-major, exactly as the
//! image bytes arrive from the IDX file.
//!
//! Builtin patterns:
//!
//! * pattern 1: column-by-column scan, `perm[k] = (k % 28) * 28 + k / 28`;
//! * pattern 2: clockwise inward spiral starting at (0, 0), walking right
//!   along the top edge first;
//! * pattern 3: the central 20x20 block (rows 4-23, cols 4-23) row by row,
//!   then the 4 remaining border rings clockwise, outermost first.
//!
//! Pattern files are plain text: 784 whitespace-separated decimal indices.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mnist::{RawImage, IMAGE_PIXELS, IMAGE_SIDE};

/// Length of the network input vector: one bias element plus the pixels.
pub const INPUT_LEN: usize = IMAGE_PIXELS + 1;

/// A bijection on pixel indices 0..784.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    perm: Vec<usize>,
}

impl Pattern {
    /// Validate and wrap a permutation; every index 0..783 must appear once.
    pub fn from_perm(perm: Vec<usize>) -> Result<Self> {
        if perm.len() != IMAGE_PIXELS {
            return Err(Error::InvalidPattern(format!(
                "expected {IMAGE_PIXELS} entries, got {}",
                perm.len()
            )));
        }
        let mut seen = [false; IMAGE_PIXELS];
        for (k, &idx) in perm.iter().enumerate() {
            if idx >= IMAGE_PIXELS {
                return Err(Error::InvalidPattern(format!(
                    "entry {k} is {idx}, outside 0..{IMAGE_PIXELS}"
                )));
            }
            if seen[idx] {
                return Err(Error::InvalidPattern(format!(
                    "index {idx} appears more than once (second time at entry {k})"
                )));
            }
            seen[idx] = true;
        }
        Ok(Self { perm })
    }

    pub fn identity() -> Self {
        Self {
            perm: (0..IMAGE_PIXELS).collect(),
        }
    }

    /// One of the three builtin T-patterns.
    pub fn builtin(id: u8) -> Result<Self> {
        let perm = match id {
            1 => column_major(),
            2 => spiral_order(IMAGE_SIDE),
            3 => center_then_border(),
            _ => {
                return Err(Error::InvalidPattern(format!(
                    "builtin pattern id must be 1, 2 or 3, got {id}"
                )))
            }
        };
        debug_assert_eq!(perm.len(), IMAGE_PIXELS);
        Ok(Self { perm })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut perm = Vec::with_capacity(IMAGE_PIXELS);
        for tok in text.split_whitespace() {
            let idx: usize = tok.parse().map_err(|_| {
                Error::InvalidPattern(format!("{}: not an integer: {tok:?}", path.display()))
            })?;
            perm.push(idx);
        }
        Self::from_perm(perm)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = String::with_capacity(4 * IMAGE_PIXELS);
        for (k, idx) in self.perm.iter().enumerate() {
            text.push_str(&idx.to_string());
            text.push(if (k + 1) % IMAGE_SIDE == 0 { '\n' } else { ' ' });
        }
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// Inverse permutation: `inv.apply(self.apply(img)) == img` pixels.
    pub fn inverse(&self) -> Pattern {
        let mut inv = vec![0usize; IMAGE_PIXELS];
        for (k, &idx) in self.perm.iter().enumerate() {
            inv[idx] = k;
        }
        Pattern { perm: inv }
    }

    /// Reorder pixels: `out[k] = pixels[perm[k]]`.
    pub fn apply(&self, image: &RawImage) -> Vec<u8> {
        let px = image.pixels();
        self.perm.iter().map(|&idx| px[idx]).collect()
    }

    /// Flatten, divide by 255 and prepend the bias element.
    pub fn prepare_input(&self, image: &RawImage) -> InputVector {
        let px = image.pixels();
        let mut y = Vec::with_capacity(INPUT_LEN);
        y.push(1.0);
        for &idx in &self.perm {
            y.push(px[idx] as f64 / 255.0);
        }
        InputVector { y }
    }
}

/// Normalized network input: `y[0] == 1` (bias), `y[1..]` in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct InputVector {
    y: Vec<f64>,
}

impl InputVector {
    pub fn new(y: Vec<f64>) -> Result<Self> {
        if y.len() != INPUT_LEN {
            return Err(Error::DimensionMismatch(format!(
                "input vector must have {INPUT_LEN} elements, got {}",
                y.len()
            )));
        }
        if y[0] != 1.0 {
            return Err(Error::InvalidParameter(format!(
                "input bias element must be exactly 1, got {}",
                y[0]
            )));
        }
        if let Some(bad) = y[1..].iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidParameter(format!(
                "input element {} is {} (outside [0, 1])",
                bad + 1,
                y[bad + 1]
            )));
        }
        Ok(Self { y })
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }
}

fn column_major() -> Vec<usize> {
    (0..IMAGE_PIXELS)
        .map(|k| (k % IMAGE_SIDE) * IMAGE_SIDE + k / IMAGE_SIDE)
        .collect()
}

/// Clockwise walk of ring `d` of an `n` x `n` grid, starting at the ring's
/// top-left corner and moving right.
fn ring(n: usize, d: usize, out: &mut Vec<usize>) {
    let lo = d;
    let hi = n - 1 - d;
    if lo == hi {
        out.push(lo * n + lo);
        return;
    }
    for c in lo..=hi {
        out.push(lo * n + c);
    }
    for r in lo + 1..=hi {
        out.push(r * n + hi);
    }
    for c in (lo..hi).rev() {
        out.push(hi * n + c);
    }
    for r in (lo + 1..hi).rev() {
        out.push(r * n + lo);
    }
}

fn spiral_order(n: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(n * n);
    for d in 0..n.div_ceil(2) {
        ring(n, d, &mut out);
    }
    out
}

fn center_then_border() -> Vec<usize> {
    let mut out = Vec::with_capacity(IMAGE_PIXELS);
    for r in 4..=23 {
        for c in 4..=23 {
            out.push(r * IMAGE_SIDE + c);
        }
    }
    for d in 0..4 {
        ring(IMAGE_SIDE, d, &mut out);
    }
    out
}
