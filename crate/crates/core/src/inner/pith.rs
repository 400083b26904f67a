use serde::{Deserialize, Serialize};

use crate::error::{IpadError, Result};
use crate::framework::{BlockView, InnerSolver, NnpProblem, Subproblem};
use crate::linalg::Mat;

use super::prox_linear::prox_linear_step;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PithConfig {
    /// Multiplier on `L_block + η`; at least 1 so each step majorizes.
    pub step_scale: f64,
    /// Inner budget handed to the acceptance loop by the presets.
    pub max_steps: usize,
}

impl Default for PithConfig {
    fn default() -> Self {
        Self { step_scale: 1.01, max_steps: 20 }
    }
}

impl PithConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_scale >= 1.0) || !self.step_scale.is_finite() {
            return Err(IpadError::Config(format!(
                "PITH step_scale must be at least 1, got {}",
                self.step_scale
            )));
        }
        Ok(())
    }
}

/// Proximal iterative hard-thresholding on the block subproblem
/// `h(u) + H(u, v) + η/2 ‖u - u_prev‖²`.
///
/// Each step is a prox-linear step on the subproblem with weight
/// `L = step_scale · (L_block + η)`, where `L_block` is the block Lipschitz
/// bound reported by the problem. For the sparse coding block `h` is the
/// hard-threshold penalty, hence the name; the solver itself only uses the
/// problem's prox oracle.
#[derive(Debug, Clone)]
pub struct Pith {
    config: PithConfig,
    weight: Option<f64>,
}

impl Pith {
    pub fn new(config: PithConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config, weight: None })
    }

    pub fn config(&self) -> &PithConfig {
        &self.config
    }
}

/// Step weight `step_scale · (L_block + η)`.
pub fn pith_weight<P: NnpProblem + ?Sized>(
    view: &BlockView<'_, P>,
    eta: f64,
    step_scale: f64,
) -> Result<f64> {
    let l = view.lipschitz().ok_or_else(|| {
        IpadError::Config("PITH needs a problem that reports block Lipschitz bounds".into())
    })?;
    if !l.is_finite() || l < 0.0 {
        return Err(IpadError::NonFinite { oracle: "block Lipschitz estimate" });
    }
    Ok(step_scale * (l + eta))
}

/// One PITH step from `u` with weight `l`.
pub fn pith_step<P: NnpProblem + ?Sized>(
    view: &BlockView<'_, P>,
    u: &Mat,
    u_prev: &Mat,
    eta: f64,
    l: f64,
) -> Result<Mat> {
    let grad = view.grad(u) + &((u - u_prev) * eta);
    prox_linear_step(u, &grad, l, |v, w| view.prox(v, w))
}

impl<P: NnpProblem + ?Sized> InnerSolver<P> for Pith {
    fn name(&self) -> &str {
        "pith"
    }

    fn reset(&mut self, sub: &Subproblem<'_, P>) -> Result<()> {
        self.weight = Some(pith_weight(&sub.view, sub.eta, self.config.step_scale)?);
        Ok(())
    }

    fn step(&mut self, sub: &Subproblem<'_, P>, u: &Mat) -> Result<Mat> {
        let l = self.weight.ok_or_else(|| IpadError::Config("PITH stepped before reset".into()))?;
        pith_step(&sub.view, u, sub.u_prev, sub.eta, l)
    }

    fn step_weight(&self) -> Option<f64> {
        self.weight
    }
}
