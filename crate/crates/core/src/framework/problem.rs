use serde::{Deserialize, Serialize};

use crate::linalg::{all_finite, Mat};

/// Iterate of the outer loop: the pair `(x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockPoint {
    pub x: Mat,
    pub y: Mat,
}

impl BlockPoint {
    pub fn new(x: Mat, y: Mat) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        all_finite(&self.x.view()) && all_finite(&self.y.view())
    }

    pub fn block(&self, block: Block) -> &Mat {
        match block {
            Block::X => &self.x,
            Block::Y => &self.y,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Block {
    X,
    Y,
}

impl Block {
    pub fn label(self) -> &'static str {
        match self {
            Block::X => "x",
            Block::Y => "y",
        }
    }
}

/// Oracle bundle for `min f(x) + g(y) + H(x, y)`.
///
/// `f` and `g` are proper lower semi-continuous (possibly nonconvex, possibly
/// indicators), `H` is smooth. `prox_f(v, tau)` must return a global minimizer
/// of `f(z) + tau/2 ‖z - v‖²`. Every oracle is a pure function of its inputs.
pub trait NnpProblem: Sync {
    fn f_value(&self, x: &Mat) -> f64;
    fn g_value(&self, y: &Mat) -> f64;
    fn h_value(&self, x: &Mat, y: &Mat) -> f64;
    fn grad_h_x(&self, x: &Mat, y: &Mat) -> Mat;
    fn grad_h_y(&self, x: &Mat, y: &Mat) -> Mat;
    fn prox_f(&self, v: &Mat, tau: f64) -> Mat;
    fn prox_g(&self, v: &Mat, tau: f64) -> Mat;

    /// Gradient of `f` when it is differentiable. Used as a test oracle only.
    fn smooth_grad_f(&self, _x: &Mat) -> Option<Mat> {
        None
    }

    fn smooth_grad_g(&self, _y: &Mat) -> Option<Mat> {
        None
    }

    /// Lipschitz bound of `x ↦ ∇ₓH(x, y)` at fixed `y`, when available.
    fn lipschitz_x(&self, _y: &Mat) -> Option<f64> {
        None
    }

    /// Lipschitz bound of `y ↦ ∇ᵧH(x, y)` at fixed `x`, when available.
    fn lipschitz_y(&self, _x: &Mat) -> Option<f64> {
        None
    }

    /// Lipschitz estimate of the full gradient of `H` around `z`, for diagnostics.
    fn lipschitz_joint(&self, _z: &BlockPoint) -> Option<f64> {
        None
    }

    fn psi(&self, z: &BlockPoint) -> f64 {
        self.f_value(&z.x) + self.g_value(&z.y) + self.h_value(&z.x, &z.y)
    }
}

/// One block of a problem with the other block frozen: the pieces
/// `h(u) + H(u, v)` seen by a block subproblem.
pub struct BlockView<'a, P: ?Sized> {
    pub problem: &'a P,
    pub block: Block,
    pub other: &'a Mat,
}

impl<'a, P: NnpProblem + ?Sized> BlockView<'a, P> {
    pub fn new(problem: &'a P, block: Block, other: &'a Mat) -> Self {
        Self { problem, block, other }
    }

    pub fn grad(&self, u: &Mat) -> Mat {
        match self.block {
            Block::X => self.problem.grad_h_x(u, self.other),
            Block::Y => self.problem.grad_h_y(self.other, u),
        }
    }

    pub fn prox(&self, v: &Mat, tau: f64) -> Mat {
        match self.block {
            Block::X => self.problem.prox_f(v, tau),
            Block::Y => self.problem.prox_g(v, tau),
        }
    }

    pub fn regularizer(&self, u: &Mat) -> f64 {
        match self.block {
            Block::X => self.problem.f_value(u),
            Block::Y => self.problem.g_value(u),
        }
    }

    pub fn coupling(&self, u: &Mat) -> f64 {
        match self.block {
            Block::X => self.problem.h_value(u, self.other),
            Block::Y => self.problem.h_value(self.other, u),
        }
    }

    pub fn smooth_grad_regularizer(&self, u: &Mat) -> Option<Mat> {
        match self.block {
            Block::X => self.problem.smooth_grad_f(u),
            Block::Y => self.problem.smooth_grad_g(u),
        }
    }

    pub fn lipschitz(&self) -> Option<f64> {
        match self.block {
            Block::X => self.problem.lipschitz_x(self.other),
            Block::Y => self.problem.lipschitz_y(self.other),
        }
    }
}
