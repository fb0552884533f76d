//! Deterministic synthetic datasets.
//!
//! Randomness comes from ChaCha8 keyed by the configured seed, with one
//! stream per role (train features, test features, labels, cluster means)
//! so that changing one size does not shift the others. Normals use the
//! Box–Muller transform.

use nalgebra::DMatrix;
use ntk_core::propagation::{normalize_inputs, normalize_spatial_inputs};
use ntk_core::predictor::center_labels;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Generator, SweepConfig};
use crate::error::{Result, SweepError};

const STREAM_TRAIN: u64 = 0;
const STREAM_TEST: u64 = 1;
const STREAM_LABELS: u64 = 2;
const STREAM_MEANS: u64 = 3;

/// Inputs are normalized to unit mean-square per row (per pixel for
/// convolutional inputs); propagation rescales them to `q*`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub x_train: DMatrix<f64>,
    pub x_test: DMatrix<f64>,
    /// Centered labels, one column.
    pub y: DMatrix<f64>,
    pub generator: Generator,
}

impl SyntheticDataset {
    /// Training rows followed by test rows.
    pub fn joint(&self) -> DMatrix<f64> {
        let (m, n, w) = (self.x_train.nrows(), self.x_test.nrows(), self.x_train.ncols());
        DMatrix::from_fn(m + n, w, |i, j| {
            if i < m {
                self.x_train[(i, j)]
            } else {
                self.x_test[(i - m, j)]
            }
        })
    }

    pub fn train_len(&self) -> usize {
        self.x_train.nrows()
    }
}

struct Normals {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl Normals {
    fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Normals { rng, spare: None }
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn next(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }

    fn matrix(&mut self, rows: usize, cols: usize) -> DMatrix<f64> {
        // Row-major draw order so the layout does not depend on storage order.
        let mut out = DMatrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                out[(i, j)] = self.next();
            }
        }
        out
    }
}

fn normalize(cfg: &SweepConfig, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let out = if cfg.architecture.is_cnn() {
        normalize_spatial_inputs(x, cfg.spatial, 1.0)?
    } else {
        normalize_inputs(x, 1.0)?
    };
    Ok(out)
}

pub fn generate_data(cfg: &SweepConfig) -> Result<SyntheticDataset> {
    let (m, n, w) = (cfg.m, cfg.n, cfg.input_width());
    if w == 0 || m == 0 {
        return Err(SweepError::Config("dataset needs rows and columns".into()));
    }
    let mut train = Normals::new(cfg.seed, STREAM_TRAIN).matrix(m, w);
    let mut test = Normals::new(cfg.seed, STREAM_TEST).matrix(n, w);
    let labels: Vec<f64> = match cfg.generator {
        Generator::TwoClusters => {
            if m % 2 == 1 {
                return Err(SweepError::Config(format!(
                    "two_clusters needs an even training size, got m = {m}"
                )));
            }
            let mean = Normals::new(cfg.seed, STREAM_MEANS).matrix(1, w);
            let mean = &mean / mean.norm() * (w as f64).sqrt();
            let sign = |i: usize| if i.is_multiple_of(2) { 1.0 } else { -1.0 };
            for i in 0..m {
                let shifted = train.row(i) + &mean * sign(i);
                train.set_row(i, &shifted);
            }
            for i in 0..n {
                let shifted = test.row(i) + &mean * sign(i);
                test.set_row(i, &shifted);
            }
            (0..m).map(sign).collect()
        }
        Generator::GaussianIid => {
            let teacher = Normals::new(cfg.seed, STREAM_LABELS).matrix(w, 1);
            (0..m)
                .map(|i| {
                    let v = (train.row(i) * &teacher)[(0, 0)];
                    if v >= 0.0 {
                        1.0
                    } else {
                        -1.0
                    }
                })
                .collect()
        }
    };
    let y = center_labels(&DMatrix::from_column_slice(m, 1, &labels));
    Ok(SyntheticDataset {
        x_train: normalize(cfg, &train)?,
        x_test: normalize(cfg, &test)?,
        y,
        generator: cfg.generator,
    })
}
