use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{IpadError, Result};
use crate::framework::BlockPoint;
use crate::inner::project_unit_columns;
use crate::linalg::{dot_sparse_t, Mat};
use crate::sdl::SdlInstance;

/// Shape, sparsity, noise and seed of a synthetic dictionary learning instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    /// Nonzeros per code row.
    pub k: usize,
    pub noise_sigma: f64,
    pub lambda: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self { n: 64, m: 600, p: 4000, k: 5, noise_sigma: 0.01, lambda: 0.02, seed: 0 }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 || self.p == 0 {
            return Err(IpadError::Config(format!(
                "synthetic shapes must be positive (n = {}, m = {}, p = {})",
                self.n, self.m, self.p
            )));
        }
        if self.k > self.m {
            return Err(IpadError::Config(format!("k = {} exceeds m = {}", self.k, self.m)));
        }
        if !(self.noise_sigma >= 0.0) || !(self.lambda >= 0.0) {
            return Err(IpadError::Config("noise_sigma and lambda must be nonnegative".into()));
        }
        Ok(())
    }
}

/// A generated instance with its ground truth.
#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub instance: SdlInstance,
    pub d_true: Mat,
    pub w_true: Mat,
}

// Independent ChaCha streams per role, so changing one draw does not shift the others.
const STREAM_DICT: u64 = 0;
const STREAM_CODES: u64 = 1;
const STREAM_NOISE: u64 = 2;
const STREAM_INIT: u64 = 3;

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Mat {
    Mat::from_shape_simple_fn((rows, cols), || StandardNormal.sample(rng))
}

/// Random dictionary with unit-norm columns.
pub fn random_unit_columns(n: usize, m: usize, rng: &mut ChaCha8Rng) -> Mat {
    project_unit_columns(&gaussian(n, m, rng))
}

/// `I = D* W*ᵀ + σ N` with random unit-column `D*` and exactly `k` standard
/// normal entries per row of `W*`. A pure function of `spec`.
pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let d_true = random_unit_columns(spec.n, spec.m, &mut rng(spec.seed, STREAM_DICT));

    let mut codes_rng = rng(spec.seed, STREAM_CODES);
    let mut w_true = Mat::zeros((spec.p, spec.m));
    for mut row in w_true.rows_mut() {
        let mut cols = sample(&mut codes_rng, spec.m, spec.k).into_vec();
        cols.sort_unstable();
        for j in cols {
            let mut v: f64 = StandardNormal.sample(&mut codes_rng);
            // An exact zero would break the k-per-row count.
            while v == 0.0 {
                v = StandardNormal.sample(&mut codes_rng);
            }
            row[j] = v;
        }
    }

    let mut data = dot_sparse_t(&d_true.view(), &w_true.view());
    if spec.noise_sigma > 0.0 {
        let noise = gaussian(spec.n, spec.p, &mut rng(spec.seed, STREAM_NOISE));
        data.scaled_add(spec.noise_sigma, &noise);
    }
    let instance = SdlInstance::new(data, spec.m, spec.lambda, None)?;
    Ok(SyntheticData { instance, d_true, w_true })
}

/// Starting point `(W⁰, D⁰) = (0, random unit columns)`.
pub fn synthetic_init(spec: &SyntheticSpec) -> BlockPoint {
    let d0 = random_unit_columns(spec.n, spec.m, &mut rng(spec.seed, STREAM_INIT));
    BlockPoint::new(Mat::zeros((spec.p, spec.m)), d0)
}
