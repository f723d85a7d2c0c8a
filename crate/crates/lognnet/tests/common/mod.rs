//! Shared helpers for integration tests that need the real MNIST files.
#![allow(dead_code)] // each test target uses its own subset of helpers

use std::path::PathBuf;

use lognnet::mnist::{self, Dataset};

/// Directory holding the four canonical MNIST IDX files: the
/// `LOGNNET_DATA_DIR` environment variable when set, otherwise `data/` at
/// the workspace root.
pub fn data_dir() -> PathBuf {
    if let Some(dir) = std::env::var_os("LOGNNET_DATA_DIR") {
        return PathBuf::from(dir);
    }
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

pub fn load_mnist() -> (Dataset, Dataset) {
    let dir = data_dir();
    mnist::load_mnist(&dir).unwrap_or_else(|e| {
        panic!(
            "MNIST files not found ({e}). Place train-images-idx3-ubyte, \
             train-labels-idx1-ubyte, t10k-images-idx3-ubyte and \
             t10k-labels-idx1-ubyte (plain or .gz) in {} or set LOGNNET_DATA_DIR.",
            dir.display()
        )
    })
}
