//! MNIST images in IDX format and the even/odd mixture scenario.

use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::sample::{RngStream, SampleSet};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

/// Side length of the pooling window used for downsampling.
pub const POOL: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct MnistStore {
    images: Vec<u8>,
    labels: Vec<u8>,
    rows: usize,
    cols: usize,
    downsampled: Option<Vec<f64>>,
    even: Vec<usize>,
    odd: Vec<usize>,
}

fn be_u32(bytes: &[u8], at: usize) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or(Error::TruncatedFile {
            expected: at + 4,
            found: bytes.len(),
        })
}

fn check_magic(bytes: &[u8], expected: u32) -> Result<()> {
    let found = be_u32(bytes, 0)?;
    if found != expected {
        return Err(Error::BadMagic { expected, found });
    }
    Ok(())
}

impl MnistStore {
    /// Parses in-memory IDX image and label files.
    pub fn from_idx_bytes(images: &[u8], labels: &[u8]) -> Result<Self> {
        check_magic(images, IMAGE_MAGIC)?;
        check_magic(labels, LABEL_MAGIC)?;
        let count = be_u32(images, 4)? as usize;
        let rows = be_u32(images, 8)? as usize;
        let cols = be_u32(images, 12)? as usize;
        let n_labels = be_u32(labels, 4)? as usize;
        if count != n_labels {
            return Err(Error::CountMismatch {
                images: count,
                labels: n_labels,
            });
        }
        let pixels = count * rows * cols;
        if images.len() < 16 + pixels {
            return Err(Error::TruncatedFile {
                expected: 16 + pixels,
                found: images.len(),
            });
        }
        if labels.len() < 8 + count {
            return Err(Error::TruncatedFile {
                expected: 8 + count,
                found: labels.len(),
            });
        }
        let labels = labels[8..8 + count].to_vec();
        if let Some(bad) = labels.iter().find(|&&l| l > 9) {
            return Err(Error::invalid(format!("label {bad} outside 0..9")));
        }
        let even = (0..count).filter(|&i| labels[i].is_multiple_of(2)).collect();
        let odd = (0..count).filter(|&i| labels[i] % 2 == 1).collect();
        Ok(Self {
            images: images[16..16 + pixels].to_vec(),
            labels,
            rows,
            cols,
            downsampled: None,
            even,
            odd,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn pixels_per_image(&self) -> usize {
        self.rows * self.cols
    }

    pub fn image(&self, i: usize) -> &[u8] {
        let p = self.pixels_per_image();
        &self.images[i * p..(i + 1) * p]
    }

    /// Computes and caches the `POOL × POOL` mean-pooled images, scaled to
    /// `[0, 1]`.
    pub fn with_downsampled(mut self) -> Result<Self> {
        if !self.rows.is_multiple_of(POOL) || !self.cols.is_multiple_of(POOL) {
            return Err(Error::invalid(format!(
                "{}x{} images cannot be pooled in {POOL}x{POOL} blocks",
                self.rows, self.cols
            )));
        }
        let (r, c) = (self.rows / POOL, self.cols / POOL);
        let scale = 1.0 / (255.0 * (POOL * POOL) as f64);
        let mut out = Vec::with_capacity(self.len() * r * c);
        for i in 0..self.len() {
            let img = self.image(i);
            for br in 0..r {
                for bc in 0..c {
                    let mut s = 0u32;
                    for dr in 0..POOL {
                        let row = (br * POOL + dr) * self.cols + bc * POOL;
                        s += img[row..row + POOL].iter().map(|&v| v as u32).sum::<u32>();
                    }
                    out.push(s as f64 * scale);
                }
            }
        }
        self.downsampled = Some(out);
        Ok(self)
    }

    pub fn downsampled_dim(&self) -> Option<usize> {
        self.downsampled.as_ref().map(|_| (self.rows / POOL) * (self.cols / POOL))
    }

    /// Image `i` as features in `[0, 1]`.
    fn features(&self, i: usize, downsampled: bool, out: &mut Vec<f64>) -> Result<()> {
        if downsampled {
            let d = self
                .downsampled_dim()
                .ok_or_else(|| Error::invalid("downsampled images were not computed"))?;
            let ds = self.downsampled.as_ref().expect("dimension implies data");
            out.extend_from_slice(&ds[i * d..(i + 1) * d]);
        } else {
            out.extend(self.image(i).iter().map(|&v| v as f64 / 255.0));
        }
        Ok(())
    }

    pub fn dim(&self, downsampled: bool) -> Result<usize> {
        if downsampled {
            self.downsampled_dim()
                .ok_or_else(|| Error::invalid("downsampled images were not computed"))
        } else {
            Ok(self.pixels_per_image())
        }
    }
}

pub fn load_mnist(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<MnistStore> {
    let images = std::fs::read(images_path)?;
    let labels = std::fs::read(labels_path)?;
    MnistStore::from_idx_bytes(&images, &labels)
}

/// Draws `X` from even-label images and each `Y` row from odd-label images
/// with probability `gamma` (even-label otherwise), all with replacement.
/// Also returns the labels of the `Y` rows.
pub fn sample_mnist_mix_with_labels(
    store: &MnistStore,
    gamma: f64,
    n1: usize,
    n2: usize,
    rng: &RngStream,
    downsampled: bool,
) -> Result<(SampleSet, SampleSet, Vec<u8>)> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidScenarioParams(format!("gamma must lie in [0, 1], got {gamma}")));
    }
    if store.even.is_empty() {
        return Err(Error::EmptyLabelGroup("even"));
    }
    if store.odd.is_empty() && gamma > 0.0 {
        return Err(Error::EmptyLabelGroup("odd"));
    }
    let d = store.dim(downsampled)?;
    let mut g = rng.rng();
    let mut xs = Vec::with_capacity(n1 * d);
    for _ in 0..n1 {
        let i = store.even[g.random_range(0..store.even.len())];
        store.features(i, downsampled, &mut xs)?;
    }
    let mut ys = Vec::with_capacity(n2 * d);
    let mut labels = Vec::with_capacity(n2);
    for _ in 0..n2 {
        let pool = if g.random::<f64>() < gamma { &store.odd } else { &store.even };
        let i = pool[g.random_range(0..pool.len())];
        store.features(i, downsampled, &mut ys)?;
        labels.push(store.labels[i]);
    }
    Ok((SampleSet::new(xs, n1, d)?, SampleSet::new(ys, n2, d)?, labels))
}

pub fn sample_mnist_mix(
    store: &MnistStore,
    gamma: f64,
    n1: usize,
    n2: usize,
    rng: &RngStream,
    downsampled: bool,
) -> Result<(SampleSet, SampleSet)> {
    let (x, y, _) = sample_mnist_mix_with_labels(store, gamma, n1, n2, rng, downsampled)?;
    Ok((x, y))
}

/// Builds IDX image and label byte buffers; used for fixtures.
pub fn encode_idx(images: &[Vec<u8>], labels: &[u8], rows: usize, cols: usize) -> (Vec<u8>, Vec<u8>) {
    let mut img = Vec::with_capacity(16 + images.len() * rows * cols);
    for v in [IMAGE_MAGIC, images.len() as u32, rows as u32, cols as u32] {
        img.extend_from_slice(&v.to_be_bytes());
    }
    for im in images {
        img.extend_from_slice(im);
    }
    let mut lab = Vec::with_capacity(8 + labels.len());
    lab.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    lab.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    lab.extend_from_slice(labels);
    (img, lab)
}
