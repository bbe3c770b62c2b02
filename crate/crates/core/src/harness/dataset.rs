//! Desk-scale datasets.

use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};
use crate::rng::{SeededRng, Stream};

use super::idx::{parse_idx_images, parse_idx_labels};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    SyntheticLinear,
    SyntheticLogistic,
    SyntheticBlobs,
    IdxImages,
}

impl DatasetKind {
    pub fn name(self) -> &'static str {
        match self {
            DatasetKind::SyntheticLinear => "linear",
            DatasetKind::SyntheticLogistic => "logistic",
            DatasetKind::SyntheticBlobs => "blobs",
            DatasetKind::IdxImages => "idx",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "linear" => DatasetKind::SyntheticLinear,
            "logistic" => DatasetKind::SyntheticLogistic,
            "blobs" => DatasetKind::SyntheticBlobs,
            "idx" | "mnist" => DatasetKind::IdxImages,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub kind: DatasetKind,
    pub num_examples: usize,
    pub dim: usize,
    pub num_classes: usize,
    pub noise_scale: f64,
    pub path: Option<PathBuf>,
    pub labels_path: Option<PathBuf>,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec {
            kind: DatasetKind::SyntheticBlobs,
            num_examples: 6000,
            dim: 20,
            num_classes: 10,
            noise_scale: 2.0,
            path: None,
            labels_path: None,
        }
    }
}

/// Row-major features with a label (classification) or target (regression).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub dim: usize,
    pub num_classes: usize,
    pub features: Vec<f64>,
    pub labels: Vec<usize>,
    pub targets: Vec<f64>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(idx.len() * self.dim);
        for &i in idx {
            features.extend_from_slice(self.row(i));
        }
        Dataset {
            dim: self.dim,
            num_classes: self.num_classes,
            features,
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            targets: idx.iter().map(|&i| self.targets[i]).collect(),
        }
    }

    /// Shuffles with `rng` and holds out `fraction` of the examples.
    pub fn split_test(&self, fraction: f64, rng: &mut SeededRng) -> (Dataset, Dataset) {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.shuffle(rng);
        let test = ((self.len() as f64) * fraction).round() as usize;
        (self.subset(&idx[test..]), self.subset(&idx[..test]))
    }
}

fn normal_vec(rng: &mut SeededRng, len: usize, scale: f64) -> Vec<f64> {
    (0..len).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Builds the dataset; synthetic kinds draw from the data stream of `seed`.
pub fn generate_dataset(spec: &DatasetSpec, seed: u64) -> Result<Dataset> {
    let mut rng = SeededRng::new(seed, Stream::Data);
    let (m, d) = (spec.num_examples, spec.dim);
    if spec.kind != DatasetKind::IdxImages && (m == 0 || d == 0) {
        return invalid("dataset needs num_examples >= 1 and dim >= 1");
    }
    if !(spec.noise_scale >= 0.0 && spec.noise_scale.is_finite()) {
        return invalid(format!("noise_scale must be >= 0, got {}", spec.noise_scale));
    }
    let ds = match spec.kind {
        DatasetKind::SyntheticLinear => {
            let w = normal_vec(&mut rng, d, 1.0 / (d as f64).sqrt());
            let features = normal_vec(&mut rng, m * d, 1.0);
            let targets = (0..m)
                .map(|i| {
                    let x = &features[i * d..(i + 1) * d];
                    let clean: f64 = x.iter().zip(&w).map(|(a, b)| a * b).sum();
                    clean + spec.noise_scale * rng.sample::<f64, _>(StandardNormal)
                })
                .collect();
            Dataset { dim: d, num_classes: 1, features, labels: vec![0; m], targets }
        }
        DatasetKind::SyntheticLogistic => {
            let w = normal_vec(&mut rng, d, 1.0);
            let features = normal_vec(&mut rng, m * d, 1.0);
            let labels: Vec<usize> = (0..m)
                .map(|i| {
                    let x = &features[i * d..(i + 1) * d];
                    let z: f64 = x.iter().zip(&w).map(|(a, b)| a * b).sum();
                    usize::from(z + spec.noise_scale * rng.sample::<f64, _>(StandardNormal) > 0.0)
                })
                .collect();
            let targets = labels.iter().map(|&l| l as f64).collect();
            Dataset { dim: d, num_classes: 2, features, labels, targets }
        }
        DatasetKind::SyntheticBlobs => {
            let k = spec.num_classes;
            if k < 2 {
                return invalid("blobs need num_classes >= 2");
            }
            let centers = normal_vec(&mut rng, k * d, 1.0);
            let mut features = Vec::with_capacity(m * d);
            let mut labels = Vec::with_capacity(m);
            for _ in 0..m {
                let y = rng.gen_range(0..k);
                for c in 0..d {
                    let z: f64 = rng.sample(StandardNormal);
                    features.push(centers[y * d + c] + spec.noise_scale * z);
                }
                labels.push(y);
            }
            let targets = labels.iter().map(|&l| l as f64).collect();
            Dataset { dim: d, num_classes: k, features, labels, targets }
        }
        DatasetKind::IdxImages => load_idx(spec)?,
    };
    Ok(ds)
}

fn load_idx(spec: &DatasetSpec) -> Result<Dataset> {
    let (Some(images), Some(labels)) = (&spec.path, &spec.labels_path) else {
        return invalid("idx dataset needs data_path and labels_path");
    };
    let images = parse_idx_images(&std::fs::read(images)?)?;
    let mut labels = parse_idx_labels(&std::fs::read(labels)?)?;
    if labels.len() != images.pixels.len() {
        return invalid(format!("{} images but {} labels", images.pixels.len(), labels.len()));
    }
    let keep = if spec.num_examples == 0 { labels.len() } else { spec.num_examples.min(labels.len()) };
    labels.truncate(keep);
    let num_classes = spec.num_classes.max(labels.iter().max().map_or(1, |&l| l + 1));
    let dim = images.rows * images.cols;
    let features = images.pixels.into_iter().take(keep).flatten().collect();
    let targets = labels.iter().map(|&l| l as f64).collect();
    Ok(Dataset { dim, num_classes, features, labels, targets })
}
