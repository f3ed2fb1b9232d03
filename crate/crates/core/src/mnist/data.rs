use std::path::{Path, PathBuf};

use serde::Serialize;

use super::idx::{load_pair, IdxImages};
use crate::error::{Error, Result};
use crate::state::StateVector;

pub const IMAGE_SIDE: usize = 28;
pub const POOL: usize = 7;
pub const POOLED_SIDE: usize = IMAGE_SIDE / POOL;
pub const FEATURES: usize = POOLED_SIDE * POOLED_SIDE;
pub const NUM_CLASSES: usize = 4;

pub const TRAIN_IMAGES: &str = "train-images-idx3-ubyte";
pub const TRAIN_LABELS: &str = "train-labels-idx1-ubyte";
pub const TEST_IMAGES: &str = "t10k-images-idx3-ubyte";
pub const TEST_LABELS: &str = "t10k-labels-idx1-ubyte";

/// Environment variable overriding the default data directory.
pub const DATA_DIR_ENV: &str = "LCQNN_DATA_DIR";

#[derive(Debug, Clone, PartialEq)]
pub struct MnistExample {
    /// Unit-norm, row-major 4×4 pooled intensities.
    pub pixels: [f64; FEATURES],
    pub label: u8,
}

impl MnistExample {
    pub fn encode(&self) -> Result<StateVector> {
        StateVector::amplitude_encode(&self.pixels)
    }
}

/// 7×7 average pooling, scaling to `[0, 1]` and ℓ2 normalisation.
pub fn preprocess(image: &[u8]) -> Result<[f64; FEATURES]> {
    if image.len() != IMAGE_SIDE * IMAGE_SIDE {
        return Err(Error::DimensionMismatch {
            expected: IMAGE_SIDE * IMAGE_SIDE,
            found: image.len(),
        });
    }
    let mut out = [0.0; FEATURES];
    for (r, row) in image.chunks(IMAGE_SIDE).enumerate() {
        for (c, &px) in row.iter().enumerate() {
            out[(r / POOL) * POOLED_SIDE + c / POOL] += px as f64;
        }
    }
    let scale = 1.0 / (255.0 * (POOL * POOL) as f64);
    out.iter_mut().for_each(|v| *v *= scale);
    let norm = out.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm <= 1e-9 {
        return Err(Error::ZeroNorm(norm));
    }
    out.iter_mut().for_each(|v| *v /= norm);
    Ok(out)
}

/// Keeps labels below [`NUM_CLASSES`], taking at most `limit / 4` examples
/// per class in file order (the first `limit % 4` classes take one more).
/// Blank images are dropped with a warning.
pub fn select_examples(images: &IdxImages, labels: &[u8], limit: Option<usize>) -> Result<Vec<MnistExample>> {
    if images.rows != IMAGE_SIDE || images.cols != IMAGE_SIDE {
        return Err(Error::Dataset(format!(
            "expected {IMAGE_SIDE}x{IMAGE_SIDE} images, found {}x{}",
            images.rows, images.cols
        )));
    }
    let quota: Vec<usize> = (0..NUM_CLASSES)
        .map(|c| match limit {
            Some(l) => l / NUM_CLASSES + usize::from(c < l % NUM_CLASSES),
            None => usize::MAX,
        })
        .collect();
    let mut taken = [0usize; NUM_CLASSES];
    let mut out = Vec::new();
    for (i, &label) in labels.iter().enumerate() {
        let class = label as usize;
        if class >= NUM_CLASSES || taken[class] >= quota[class] {
            continue;
        }
        match preprocess(images.image(i)) {
            Ok(pixels) => {
                taken[class] += 1;
                out.push(MnistExample { pixels, label });
            }
            Err(Error::ZeroNorm(_)) => log::warn!("dropping blank image {i}"),
            Err(e) => return Err(e),
        }
    }
    if out.is_empty() {
        return Err(Error::Dataset("no examples with labels 0-3".into()));
    }
    Ok(out)
}

pub fn class_counts(examples: &[MnistExample]) -> [usize; NUM_CLASSES] {
    let mut counts = [0; NUM_CLASSES];
    examples.iter().for_each(|e| counts[e.label as usize] += 1);
    counts
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub train: Vec<MnistExample>,
    pub test: Vec<MnistExample>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DatasetSummary {
    pub train: [usize; NUM_CLASSES],
    pub test: [usize; NUM_CLASSES],
}

impl Dataset {
    pub fn summary(&self) -> DatasetSummary {
        DatasetSummary {
            train: class_counts(&self.train),
            test: class_counts(&self.test),
        }
    }
}

/// `$LCQNN_DATA_DIR`, or `data/mnist` relative to the working directory.
pub fn default_data_dir() -> PathBuf {
    std::env::var_os(DATA_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("data").join("mnist"))
}

/// Paths that must exist in `dir`.
pub fn required_files(dir: &Path) -> [PathBuf; 4] {
    [TRAIN_IMAGES, TRAIN_LABELS, TEST_IMAGES, TEST_LABELS].map(|f| dir.join(f))
}

pub fn load_dataset(dir: &Path, train_limit: Option<usize>, test_limit: Option<usize>) -> Result<Dataset> {
    let (train_images, train_labels) = load_pair(&dir.join(TRAIN_IMAGES), &dir.join(TRAIN_LABELS))?;
    let (test_images, test_labels) = load_pair(&dir.join(TEST_IMAGES), &dir.join(TEST_LABELS))?;
    let data = Dataset {
        train: select_examples(&train_images, &train_labels, train_limit)?,
        test: select_examples(&test_images, &test_labels, test_limit)?,
    };
    let s = data.summary();
    log::info!("class counts: train {:?}, test {:?}", s.train, s.test);
    Ok(data)
}
