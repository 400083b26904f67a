//! Patch-based denoising set up as a dictionary learning problem.

use serde::{Deserialize, Serialize};

use crate::error::{IpadError, Result};
use crate::framework::{BlockPoint, NnpProblem};
use crate::linalg::dot_sparse_t;
use crate::sdl::SdlInstance;

use super::dct::overcomplete_dct;
use super::image::{extract_patches, reconstruct, GrayImage, PatchGrid, PATCH};

/// Pixels enter the model divided by this, so λ is given in squared 8-bit
/// units and rescaled accordingly.
const PIXEL_SCALE: f64 = 255.0;

/// Penalty for noise level `σ`, on the line through the published
/// `(σ, λ)` pairs `(15, 2500)`, `(20, 3500)`, `(25, 4500)`, `(30, 5500)`.
pub fn table_lambda(sigma: f64) -> f64 {
    (200.0 * sigma - 500.0).max(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DenoiseSpec {
    pub sigma: f64,
    /// Penalty in squared 8-bit units; `None` uses [`table_lambda`].
    pub lambda: Option<f64>,
    pub stride: usize,
    pub atoms: usize,
    /// Box on the code entries, in model units (pixels / 255).
    pub bound: Option<f64>,
    pub noise_seed: u64,
}

impl Default for DenoiseSpec {
    fn default() -> Self {
        Self { sigma: 20.0, lambda: None, stride: 4, atoms: 256, bound: Some(10.0), noise_seed: 0 }
    }
}

impl DenoiseSpec {
    pub fn resolved_lambda(&self) -> f64 {
        self.lambda.unwrap_or_else(|| table_lambda(self.sigma))
    }
}

/// A noisy image turned into a dictionary learning instance.
#[derive(Debug, Clone)]
pub struct DenoiseProblem {
    pub instance: SdlInstance,
    pub grid: PatchGrid,
    /// Per-patch means removed before coding.
    pub means: Vec<f64>,
    /// `D⁰` is the overcomplete DCT and `W⁰` its hard-thresholded analysis
    /// coefficients `prox_f(IᵀD⁰, 1)`.
    pub init: BlockPoint,
}

pub fn build_denoise_problem(noisy: &GrayImage, spec: &DenoiseSpec) -> Result<DenoiseProblem> {
    if spec.atoms == 0 {
        return Err(IpadError::Config("dictionary size must be positive".into()));
    }
    let (patches, grid) = extract_patches(noisy, spec.stride)?;
    let means: Vec<f64> =
        patches.rows().into_iter().map(|r| r.sum() / r.len() as f64).collect();
    let mut data = patches.t().to_owned();
    for (mut col, mean) in data.columns_mut().into_iter().zip(&means) {
        col.mapv_inplace(|v| (v - mean) / PIXEL_SCALE);
    }
    let lambda = spec.resolved_lambda() / (PIXEL_SCALE * PIXEL_SCALE);
    let instance = SdlInstance::new(data, spec.atoms, lambda, spec.bound)?;
    let d0 = overcomplete_dct(PATCH, spec.atoms)?;
    // From W = 0 a prox-linear code step only keeps correlations far above
    // the noise level, so the dictionary barely moves and the run stops at once.
    let w0 = instance.prox_f(&instance.data().t().dot(&d0), 1.0);
    let init = BlockPoint::new(w0, d0);
    Ok(DenoiseProblem { instance, grid, means, init })
}

/// Image rebuilt from the coded patches `D Wᵀ` with the means restored.
pub fn restore_image(problem: &DenoiseProblem, point: &BlockPoint) -> Result<GrayImage> {
    let model = dot_sparse_t(&point.y.view(), &point.x.view());
    let mut patches = model.t().to_owned();
    for (mut row, mean) in patches.rows_mut().into_iter().zip(&problem.means) {
        row.mapv_inplace(|v| v * PIXEL_SCALE + mean);
    }
    Ok(reconstruct(&patches, &problem.grid)?)
}

/// Deterministic grayscale test scene: smooth shading, flat shapes with
/// sharp edges, stripes and a fine checker texture.
pub fn test_scene(width: usize, height: usize) -> GrayImage {
    let mut pixels = Vec::with_capacity(width * height);
    let (w, h) = (width as f64, height as f64);
    for r in 0..height {
        for c in 0..width {
            let (x, y) = (c as f64 / w, r as f64 / h);
            let mut v = 60.0 + 100.0 * x + 40.0 * (3.0 * y).sin();
            let disk = (x - 0.3).powi(2) + (y - 0.35).powi(2) < 0.04;
            if disk {
                v = 200.0;
            }
            if (0.55..0.9).contains(&x) && (0.15..0.45).contains(&y) {
                v = 30.0;
            }
            if (0.1..0.45).contains(&x) && (0.65..0.92).contains(&y) {
                v = if (c / 4) % 2 == 0 { 220.0 } else { 90.0 };
            }
            if (0.58..0.9).contains(&x) && (0.6..0.9).contains(&y) {
                v = if ((c / 2) + (r / 2)) % 2 == 0 { 170.0 } else { 120.0 };
            }
            let ring = ((x - 0.3).powi(2) + (y - 0.35).powi(2)).sqrt();
            if (0.22..0.24).contains(&ring) {
                v = 250.0;
            }
            pixels.push(v.round().clamp(0.0, 255.0) as u8);
        }
    }
    GrayImage { width, height, pixels }
}
