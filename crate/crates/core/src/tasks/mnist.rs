//! MNIST as a reward task: IDX ingestion, 16x16 deskewed preprocessing, and
//! the cross-entropy reward / accuracy metrics.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{Episode, Task};
use crate::genome::{Network, Weights};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

pub const RAW_SIDE: usize = 28;
pub const SIDE: usize = 16;
pub const PIXELS: usize = SIDE * SIDE;
pub const CLASSES: usize = 10;

pub const TRAIN_IMAGES: &str = "train-images-idx3-ubyte";
pub const TRAIN_LABELS: &str = "train-labels-idx1-ubyte";
pub const TEST_IMAGES: &str = "t10k-images-idx3-ubyte";
pub const TEST_LABELS: &str = "t10k-labels-idx1-ubyte";

/// Unprocessed IDX contents.
#[derive(Debug, Clone)]
pub struct RawMnist {
    pub rows: usize,
    pub cols: usize,
    /// `count * rows * cols` bytes, row-major per image.
    pub pixels: Vec<u8>,
    pub labels: Vec<u8>,
}

impl RawMnist {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn image(&self, i: usize) -> &[u8] {
        let n = self.rows * self.cols;
        &self.pixels[i * n..(i + 1) * n]
    }
}

struct IdxReader<'a> {
    path: &'a Path,
    data: &'a [u8],
    pos: usize,
}

impl<'a> IdxReader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.data.len());
        let Some(end) = end else {
            return Err(Error::TruncatedFile {
                path: self.path.to_path_buf(),
            });
        };
        let out = &self.data[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn magic(&mut self, expected: u32) -> Result<()> {
        let found = self.u32()?;
        if found != expected {
            return Err(Error::BadMagic {
                path: self.path.to_path_buf(),
                expected,
                found,
            });
        }
        Ok(())
    }
}

pub fn load_mnist(image_path: impl AsRef<Path>, label_path: impl AsRef<Path>) -> Result<RawMnist> {
    let image_path = image_path.as_ref();
    let label_path = label_path.as_ref();
    let image_bytes = fs::read(image_path).map_err(|e| Error::io(image_path, e))?;
    let label_bytes = fs::read(label_path).map_err(|e| Error::io(label_path, e))?;

    let mut images = IdxReader {
        path: image_path,
        data: &image_bytes,
        pos: 0,
    };
    images.magic(IMAGE_MAGIC)?;
    let n_images = images.u32()? as usize;
    let rows = images.u32()? as usize;
    let cols = images.u32()? as usize;
    let pixels = images.take(n_images * rows * cols)?.to_vec();

    let mut labels = IdxReader {
        path: label_path,
        data: &label_bytes,
        pos: 0,
    };
    labels.magic(LABEL_MAGIC)?;
    let n_labels = labels.u32()? as usize;
    let label_data = labels.take(n_labels)?.to_vec();

    if n_images != n_labels {
        return Err(Error::CountMismatch {
            images: n_images,
            labels: n_labels,
        });
    }
    Ok(RawMnist {
        rows,
        cols,
        pixels,
        labels: label_data,
    })
}

/// Shears the image horizontally about its intensity centroid so that the
/// second-order moment `mu11` vanishes. Samples outside the image read as 0.
pub fn deskew(image: &[f64], side: usize) -> Vec<f64> {
    let (mut m00, mut m10, mut m01) = (0.0, 0.0, 0.0);
    for y in 0..side {
        for x in 0..side {
            let v = image[y * side + x];
            m00 += v;
            m10 += x as f64 * v;
            m01 += y as f64 * v;
        }
    }
    if m00 <= 0.0 {
        return image.to_vec();
    }
    let cx = m10 / m00;
    let cy = m01 / m00;
    let (mut mu11, mut mu02) = (0.0, 0.0);
    for y in 0..side {
        for x in 0..side {
            let v = image[y * side + x];
            let dy = y as f64 - cy;
            mu11 += (x as f64 - cx) * dy * v;
            mu02 += dy * dy * v;
        }
    }
    if mu02 < 1e-2 {
        return image.to_vec();
    }
    let skew = mu11 / mu02;
    // rounding noise in the moments of a symmetric image
    if skew.abs() < 1e-12 {
        return image.to_vec();
    }
    let mut out = vec![0.0; side * side];
    for y in 0..side {
        let row = &image[y * side..(y + 1) * side];
        let shift = skew * (y as f64 - cy);
        let at = |i: isize| {
            if i >= 0 && (i as usize) < side {
                row[i as usize]
            } else {
                0.0
            }
        };
        for x in 0..side {
            let sx = x as f64 + shift;
            let x0 = sx.floor();
            let f = sx - x0;
            let i = x0 as isize;
            let a = at(i);
            let b = at(i + 1);
            out[y * side + x] = a + f * (b - a);
        }
    }
    out
}

/// Bilinear resize with pixel-centre alignment and edge replication.
pub fn resize_bilinear(image: &[f64], side: usize, new_side: usize) -> Vec<f64> {
    let scale = side as f64 / new_side as f64;
    let taps: Vec<(usize, usize, f64)> = (0..new_side)
        .map(|d| {
            let s = ((d as f64 + 0.5) * scale - 0.5).max(0.0);
            let i0 = (s.floor() as usize).min(side - 1);
            let f = if i0 >= side - 1 { 0.0 } else { s - i0 as f64 };
            (i0, (i0 + 1).min(side - 1), f)
        })
        .collect();
    let mut out = vec![0.0; new_side * new_side];
    for (dy, &(y0, y1, fy)) in taps.iter().enumerate() {
        for (dx, &(x0, x1, fx)) in taps.iter().enumerate() {
            let p = |y: usize, x: usize| image[y * side + x];
            let top = p(y0, x0) + fx * (p(y0, x1) - p(y0, x0));
            let bottom = p(y1, x0) + fx * (p(y1, x1) - p(y1, x0));
            out[dy * new_side + dx] = top + fy * (bottom - top);
        }
    }
    out
}

/// Deskew, downsample to 16x16, and scale intensities into `[0, 1]`.
pub fn preprocess_digit(image28: &[u8]) -> Vec<f64> {
    assert_eq!(image28.len(), RAW_SIDE * RAW_SIDE, "expected a 28x28 image");
    let img: Vec<f64> = image28.iter().map(|&b| f64::from(b)).collect();
    let straight = deskew(&img, RAW_SIDE);
    resize_bilinear(&straight, RAW_SIDE, SIDE)
        .into_iter()
        .map(|v| (v / 255.0).clamp(0.0, 1.0))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MnistDataset {
    /// `len() * 256` pixels in `[0, 1]`.
    pub images: Vec<f64>,
    pub labels: Vec<u8>,
    pub split: Split,
}

const CACHE_MAGIC: u32 = 0x5741_4E4E;

impl MnistDataset {
    pub fn from_raw(raw: &RawMnist, split: Split) -> Self {
        assert_eq!((raw.rows, raw.cols), (RAW_SIDE, RAW_SIDE));
        let images: Vec<f64> = (0..raw.len())
            .into_par_iter()
            .flat_map_iter(|i| preprocess_digit(raw.image(i)))
            .collect();
        MnistDataset {
            images,
            labels: raw.labels.clone(),
            split,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn image(&self, i: usize) -> &[f64] {
        &self.images[i * PIXELS..(i + 1) * PIXELS]
    }

    /// Restricts the dataset to the given sample indices.
    pub fn subset(&self, indices: &[usize]) -> Self {
        MnistDataset {
            images: indices.iter().flat_map(|&i| self.image(i).iter().copied()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            split: self.split,
        }
    }

    /// Binary cache: `u32 magic, u32 count, u32 side` (little endian), then
    /// `count * side * side` f64 pixels and `count` label bytes.
    pub fn write_cache(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut buf = Vec::with_capacity(12 + self.images.len() * 8 + self.labels.len());
        buf.extend_from_slice(&CACHE_MAGIC.to_le_bytes());
        buf.extend_from_slice(&(self.len() as u32).to_le_bytes());
        buf.extend_from_slice(&(SIDE as u32).to_le_bytes());
        for v in &self.images {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        buf.extend_from_slice(&self.labels);
        fs::write(path, buf).map_err(|e| Error::io(path, e))
    }

    pub fn read_cache(path: impl AsRef<Path>, split: Split) -> Result<Self> {
        let path = path.as_ref();
        let data = fs::read(path).map_err(|e| Error::io(path, e))?;
        let truncated = || Error::TruncatedFile {
            path: path.to_path_buf(),
        };
        let word = |at: usize| -> Result<u32> {
            let b = data.get(at..at + 4).ok_or_else(truncated)?;
            Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        };
        let magic = word(0)?;
        if magic != CACHE_MAGIC {
            return Err(Error::BadMagic {
                path: path.to_path_buf(),
                expected: CACHE_MAGIC,
                found: magic,
            });
        }
        let count = word(4)? as usize;
        let side = word(8)? as usize;
        if side != SIDE {
            return Err(Error::InvalidCache(format!("image side {side}, expected {SIDE}")));
        }
        let n_pix = count * side * side;
        let pix_end = 12 + n_pix * 8;
        if data.len() != pix_end + count {
            return Err(truncated());
        }
        let images = data[12..pix_end]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        Ok(MnistDataset {
            images,
            labels: data[pix_end..].to_vec(),
            split,
        })
    }
}

/// Loads one split from a directory of standard IDX files, preprocessing and
/// caching the result next to them when `cache` is set.
pub fn load_split(dir: impl AsRef<Path>, split: Split, cache: bool) -> Result<MnistDataset> {
    let dir = dir.as_ref();
    let (img, lbl, cache_name) = match split {
        Split::Train => (TRAIN_IMAGES, TRAIN_LABELS, "train-16x16.wann"),
        Split::Test => (TEST_IMAGES, TEST_LABELS, "test-16x16.wann"),
    };
    let cache_path = dir.join(cache_name);
    if cache {
        if let Ok(ds) = MnistDataset::read_cache(&cache_path, split) {
            return Ok(ds);
        }
    }
    let raw = load_mnist(dir.join(img), dir.join(lbl))?;
    let ds = MnistDataset::from_raw(&raw, split);
    if cache {
        // a read-only data directory is fine; we just recompute next time
        if let Err(e) = ds.write_cache(&cache_path) {
            log::warn!("could not write MNIST cache: {e}");
        }
    }
    Ok(ds)
}

/// Where the IDX files live: `$WANN_MNIST_DIR`, else `data/mnist` under the
/// workspace root.
pub fn default_data_dir() -> PathBuf {
    if let Some(dir) = std::env::var_os("WANN_MNIST_DIR") {
        return PathBuf::from(dir);
    }
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist")
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Softmax cross-entropy of `logits` against class `label`.
pub fn cross_entropy(logits: &[f64], label: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logits.iter().map(|&z| (z - max).exp()).sum();
    sum.ln() - (logits[label] - max)
}

/// Negative mean cross-entropy over the samples `batch` of `data`.
pub fn mnist_reward(net: &Network, weights: Weights<'_>, data: &MnistDataset, batch: &[usize]) -> f64 {
    let mut scratch = Vec::new();
    let total: f64 = batch
        .iter()
        .map(|&i| {
            let out = net.activate(data.image(i), weights, &mut scratch);
            cross_entropy(out, data.labels[i] as usize)
        })
        .sum();
    -total / batch.len() as f64
}

pub fn predict(net: &Network, weights: Weights<'_>, image: &[f64], scratch: &mut Vec<f64>) -> usize {
    argmax(net.activate(image, weights, scratch))
}

/// Fraction of samples whose arg-max output equals the label.
pub fn mnist_accuracy(net: &Network, weights: Weights<'_>, data: &MnistDataset) -> f64 {
    if data.is_empty() {
        return 0.0;
    }
    let correct: usize = (0..data.len())
        .into_par_iter()
        .map_init(Vec::new, |scratch, i| {
            usize::from(predict(net, weights, data.image(i), scratch) == data.labels[i] as usize)
        })
        .sum();
    correct as f64 / data.len() as f64
}

/// Classification reframed as a one-step episode: the reward is the negative
/// cross-entropy on a random minibatch of the training set.
#[derive(Debug, Clone)]
pub struct MnistTask {
    pub train: Arc<MnistDataset>,
    pub batch_size: usize,
}

impl MnistTask {
    pub fn new(train: Arc<MnistDataset>, batch_size: usize) -> Self {
        MnistTask { train, batch_size }
    }

    /// The minibatch used by every rollout sharing `common_seed`.
    pub fn batch(&self, common_seed: u64) -> Vec<usize> {
        let mut rng = ChaCha8Rng::seed_from_u64(common_seed);
        let n = self.train.len();
        rand::seq::index::sample(&mut rng, n, self.batch_size.min(n)).into_vec()
    }
}

impl Task for MnistTask {
    fn name(&self) -> &str {
        "mnist"
    }

    fn n_inputs(&self) -> usize {
        PIXELS
    }

    fn n_outputs(&self) -> usize {
        CLASSES
    }

    fn rollout(&self, net: &Network, weights: Weights<'_>, episode: Episode) -> f64 {
        let batch = self.batch(episode.common_seed);
        mnist_reward(net, weights, &self.train, &batch)
    }
}
