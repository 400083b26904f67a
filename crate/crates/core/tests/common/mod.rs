#![allow(dead_code)]

use ipad_core::framework::NnpProblem;
use ipad_core::inner::project_unit_columns;
use ipad_core::linalg::Mat;
use ipad_core::sdl::SdlInstance;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Mat {
    Mat::from_shape_simple_fn((rows, cols), || rng.sample(StandardNormal))
}

pub fn unit_columns(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Mat {
    project_unit_columns(&gaussian(rows, cols, rng))
}

/// Sparse codes: each entry is nonzero with probability `fill`.
pub fn sparse_codes(rows: usize, cols: usize, fill: f64, rng: &mut ChaCha8Rng) -> Mat {
    Mat::from_shape_simple_fn((rows, cols), || {
        if rng.random::<f64>() < fill {
            rng.sample(StandardNormal)
        } else {
            0.0
        }
    })
}

pub fn max_abs(a: &Mat) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn frob(a: &Mat) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Random SDL instance with data generated from a sparse ground truth plus noise.
pub fn sdl_instance(n: usize, m: usize, p: usize, lambda: f64, bound: Option<f64>, seed: u64) -> SdlInstance {
    let mut r = rng(seed);
    let d = unit_columns(n, m, &mut r);
    let w = sparse_codes(p, m, 0.2, &mut r);
    let data = d.dot(&w.t()) + gaussian(n, p, &mut r) * 0.05;
    SdlInstance::new(data, m, lambda, bound).unwrap()
}

/// Coupling term of [`QuadPair`].
#[derive(Debug, Clone)]
pub enum Coupling {
    /// `H = 0`
    Zero,
    /// `H = γ/2 ‖x - y‖²` (same shapes)
    Difference(f64),
    /// `H = ½ ‖x yᵀ - c‖²`, smooth and nonconvex
    Bilinear(Mat),
}

/// `f(x) = α/2 ‖x‖² + ⟨a, x⟩`, `g(y) = β/2 ‖y‖² + ⟨b, y⟩` with a choice of
/// smooth coupling. Both regularizers are differentiable with closed-form prox.
#[derive(Debug, Clone)]
pub struct QuadPair {
    pub alpha: f64,
    pub a: Mat,
    pub beta: f64,
    pub b: Mat,
    pub coupling: Coupling,
}

fn quad_prox(v: &Mat, tau: f64, weight: f64, shift: &Mat) -> Mat {
    (v * tau - shift) / (weight + tau)
}

fn quad_value(u: &Mat, weight: f64, shift: &Mat) -> f64 {
    0.5 * weight * u.iter().map(|v| v * v).sum::<f64>() + (u * shift).sum()
}

impl NnpProblem for QuadPair {
    fn f_value(&self, x: &Mat) -> f64 {
        quad_value(x, self.alpha, &self.a)
    }

    fn g_value(&self, y: &Mat) -> f64 {
        quad_value(y, self.beta, &self.b)
    }

    fn h_value(&self, x: &Mat, y: &Mat) -> f64 {
        match &self.coupling {
            Coupling::Zero => 0.0,
            Coupling::Difference(g) => 0.5 * g * (x - y).iter().map(|v| v * v).sum::<f64>(),
            Coupling::Bilinear(c) => 0.5 * (x.dot(&y.t()) - c).iter().map(|v| v * v).sum::<f64>(),
        }
    }

    fn grad_h_x(&self, x: &Mat, y: &Mat) -> Mat {
        match &self.coupling {
            Coupling::Zero => Mat::zeros(x.dim()),
            Coupling::Difference(g) => (x - y) * *g,
            Coupling::Bilinear(c) => (x.dot(&y.t()) - c).dot(y),
        }
    }

    fn grad_h_y(&self, x: &Mat, y: &Mat) -> Mat {
        match &self.coupling {
            Coupling::Zero => Mat::zeros(y.dim()),
            Coupling::Difference(g) => (y - x) * *g,
            Coupling::Bilinear(c) => (x.dot(&y.t()) - c).t().dot(x),
        }
    }

    fn prox_f(&self, v: &Mat, tau: f64) -> Mat {
        quad_prox(v, tau, self.alpha, &self.a)
    }

    fn prox_g(&self, v: &Mat, tau: f64) -> Mat {
        quad_prox(v, tau, self.beta, &self.b)
    }

    fn smooth_grad_f(&self, x: &Mat) -> Option<Mat> {
        Some(x * self.alpha + &self.a)
    }

    fn smooth_grad_g(&self, y: &Mat) -> Option<Mat> {
        Some(y * self.beta + &self.b)
    }

    fn lipschitz_x(&self, y: &Mat) -> Option<f64> {
        match &self.coupling {
            Coupling::Zero => Some(0.0),
            Coupling::Difference(g) => Some(*g),
            Coupling::Bilinear(_) => Some(y.iter().map(|v| v * v).sum::<f64>()),
        }
    }

    fn lipschitz_y(&self, x: &Mat) -> Option<f64> {
        match &self.coupling {
            Coupling::Zero => Some(0.0),
            Coupling::Difference(g) => Some(*g),
            Coupling::Bilinear(_) => Some(x.iter().map(|v| v * v).sum::<f64>()),
        }
    }
}
