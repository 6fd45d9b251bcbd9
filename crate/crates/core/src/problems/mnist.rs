//! Big-endian IDX files as distributed for MNIST.

use std::path::{Path, PathBuf};

use thiserror::Error;

use super::{Dataset, ProblemError};

/// Environment variable naming the directory that holds the IDX files.
pub const DATA_DIR_ENV: &str = "FFTKF_DATA_DIR";

const IMAGE_MAGIC: u32 = 0x0000_0803;
const LABEL_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Error)]
pub enum MnistError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: bad magic 0x{found:08x}, expected 0x{expected:08x}")]
    BadMagic { path: PathBuf, expected: u32, found: u32 },
    #[error("{path}: truncated, need {needed} bytes but file has {actual}")]
    Truncated {
        path: PathBuf,
        needed: usize,
        actual: usize,
    },
    #[error("{images} images but {labels} labels")]
    CountMismatch { images: usize, labels: usize },
    #[error("{path}: label {label} out of range 0..=9")]
    BadLabel { path: PathBuf, label: u8 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MnistDataset {
    /// `len × rows × cols` pixels scaled to `[0, 1]`.
    pub images: Vec<f64>,
    pub labels: Vec<u8>,
    pub rows: usize,
    pub cols: usize,
}

impl MnistDataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn truncate(&mut self, n: usize) {
        let n = n.min(self.len());
        self.labels.truncate(n);
        self.images.truncate(n * self.rows * self.cols);
    }

    pub fn into_dataset(self) -> Dataset {
        Dataset {
            features: self.images,
            labels: self.labels.into_iter().map(usize::from).collect(),
            num_features: self.rows * self.cols,
            classes: 10,
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>, MnistError> {
    std::fs::read(path).map_err(|source| MnistError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn header(path: &Path, bytes: &[u8], magic: u32, words: usize) -> Result<Vec<usize>, MnistError> {
    let needed = 4 * words;
    if bytes.len() < needed {
        return Err(MnistError::Truncated {
            path: path.to_path_buf(),
            needed,
            actual: bytes.len(),
        });
    }
    let word = |i: usize| u32::from_be_bytes(bytes[4 * i..4 * i + 4].try_into().unwrap());
    if word(0) != magic {
        return Err(MnistError::BadMagic {
            path: path.to_path_buf(),
            expected: magic,
            found: word(0),
        });
    }
    Ok((1..words).map(|i| word(i) as usize).collect())
}

fn parse_images(path: &Path, bytes: &[u8]) -> Result<(Vec<f64>, usize, usize, usize), MnistError> {
    let dims = header(path, bytes, IMAGE_MAGIC, 4)?;
    let (n, rows, cols) = (dims[0], dims[1], dims[2]);
    let needed = 16 + n * rows * cols;
    if bytes.len() < needed {
        return Err(MnistError::Truncated {
            path: path.to_path_buf(),
            needed,
            actual: bytes.len(),
        });
    }
    let images = bytes[16..needed].iter().map(|&b| f64::from(b) / 255.0).collect();
    Ok((images, n, rows, cols))
}

fn parse_labels(path: &Path, bytes: &[u8]) -> Result<Vec<u8>, MnistError> {
    let dims = header(path, bytes, LABEL_MAGIC, 2)?;
    let n = dims[0];
    let needed = 8 + n;
    if bytes.len() < needed {
        return Err(MnistError::Truncated {
            path: path.to_path_buf(),
            needed,
            actual: bytes.len(),
        });
    }
    let labels = bytes[8..needed].to_vec();
    if let Some(&label) = labels.iter().find(|&&l| l > 9) {
        return Err(MnistError::BadLabel {
            path: path.to_path_buf(),
            label,
        });
    }
    Ok(labels)
}

/// Parses an image file (magic `0x803`) and a label file (magic `0x801`).
pub fn load_mnist_idx(images: impl AsRef<Path>, labels: impl AsRef<Path>) -> Result<MnistDataset, MnistError> {
    let (ip, lp) = (images.as_ref(), labels.as_ref());
    let (pixels, n, rows, cols) = parse_images(ip, &read(ip)?)?;
    let labels = parse_labels(lp, &read(lp)?)?;
    if labels.len() != n {
        return Err(MnistError::CountMismatch {
            images: n,
            labels: labels.len(),
        });
    }
    Ok(MnistDataset {
        images: pixels,
        labels,
        rows,
        cols,
    })
}

/// Loads the `train` and `t10k` splits from a directory using the standard
/// file names, truncating the training split to `subset_n` examples.
pub fn load_mnist_dir(dir: impl AsRef<Path>, subset_n: Option<usize>) -> Result<(Dataset, Dataset), ProblemError> {
    let dir = dir.as_ref();
    let mut train = load_mnist_idx(dir.join("train-images-idx3-ubyte"), dir.join("train-labels-idx1-ubyte"))?;
    let test = load_mnist_idx(dir.join("t10k-images-idx3-ubyte"), dir.join("t10k-labels-idx1-ubyte"))?;
    if let Some(n) = subset_n {
        train.truncate(n);
    }
    Ok((train.into_dataset(), test.into_dataset()))
}
