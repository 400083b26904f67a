use serde::{Deserialize, Serialize};

use crate::error::{IpadError, Result};
use crate::framework::{Block, InnerSolver, Subproblem};
use crate::linalg::{dot_sparse_of, frob, frob_diff, Cholesky, Mat};
use crate::sdl::SdlInstance;

use super::prox::project_unit_columns;

/// Lower bound on the default penalty as a multiple of `η`.
const ETA_FLOOR: f64 = 4.0;
/// Fraction of its value the primal residual must shed over one window.
const WINDOW_SHRINK: f64 = 0.9;
/// Residuals below this, relative to `1 + ‖Z‖`, count as settled.
const SETTLED: f64 = 1e-12;

/// When to refactor the linear system of the D-update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RefactorPolicy {
    /// Once per outer step; W is fixed during the dictionary subproblem.
    /// The stall guard may refactor again after raising `ρ`.
    #[default]
    PerOuterStep,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmmConfig {
    /// Initial penalty `ρ`; `None` uses `max(tr(WᵀW)/m, 4η)`.
    pub rho: Option<f64>,
    pub max_steps: usize,
    pub refactor_policy: RefactorPolicy,
    /// Sweeps per stall check; `0` disables the guard. When `‖D - Z‖` fails
    /// to shrink over a window, `ρ` doubles. A fixed point needs `ρ` above
    /// every column's sphere multiplier, which no cheap formula bounds well.
    #[serde(default = "default_stall_window")]
    pub stall_window: usize,
}

fn default_stall_window() -> usize {
    10
}

impl Default for AdmmConfig {
    fn default() -> Self {
        Self {
            rho: None,
            max_steps: 20,
            refactor_policy: RefactorPolicy::PerOuterStep,
            stall_window: default_stall_window(),
        }
    }
}

impl AdmmConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(rho) = self.rho {
            if !(rho > 0.0) || !rho.is_finite() {
                return Err(IpadError::Config(format!("ADMM rho must be positive, got {rho}")));
            }
        }
        Ok(())
    }
}

/// Data of one dictionary subproblem
/// `min ½‖I - D Wᵀ‖² + η/2 ‖D - Dᵗ‖²` over unit-norm columns.
#[derive(Debug, Clone)]
pub struct DictSubproblem {
    /// `WᵀW + η Id`
    pub hessian: Mat,
    /// `I W + η Dᵗ`
    pub linear: Mat,
    /// `‖WᵀW‖₂`
    pub gram_norm: f64,
    /// `tr(WᵀW) / m`
    pub mean_curvature: f64,
    pub eta: f64,
}

impl DictSubproblem {
    pub fn new(inst: &SdlInstance, w: &Mat, d_prev: &Mat, eta: f64) -> Self {
        let products = inst.code_products(w);
        let mut hessian = products.wtw.clone();
        hessian.diag_mut().mapv_inplace(|v| v + eta);
        let linear = dot_sparse_of(&inst.data().view(), &w.view(), &inst.code_pattern(w))
            + &(d_prev * eta);
        let mean_curvature = products.wtw.diag().sum() / products.wtw.nrows().max(1) as f64;
        Self { hessian, linear, gram_norm: products.gram_norm, mean_curvature, eta }
    }

    /// Gradient `D (WᵀW + η Id) - (I W + η Dᵗ)` of the subproblem objective.
    pub fn gradient(&self, d: &Mat) -> Mat {
        d.dot(&self.hessian) - &self.linear
    }
}

/// Norm of the tangential part of `grad` at a point with unit columns: the
/// first-order residual of a smooth objective constrained to the product of
/// spheres.
pub fn sphere_kkt_residual(grad: &Mat, z: &Mat) -> f64 {
    let mut total = 0.0;
    for (g, zc) in grad.columns().into_iter().zip(z.columns()) {
        let radial = g.dot(&zc);
        total += g.iter().zip(zc.iter()).map(|(gi, zi)| (gi - radial * zi).powi(2)).sum::<f64>();
    }
    total.sqrt()
}

/// ADMM state `(D, Z, U)` and the factorization shared by the D-updates.
#[derive(Debug, Clone)]
pub struct AdmmState {
    pub d: Mat,
    pub z: Mat,
    pub u: Mat,
}

/// One ADMM sweep for the split `D = Z` with the unit-column indicator on `Z`:
///
/// `D ← (IW + ηDᵗ + ρ(Z - U)) (WᵀW + (η+ρ)Id)⁻¹`, `Z ← proj(D + U)`, `U ← U + D - Z`.
pub fn admm_d_solve_step(
    state: &mut AdmmState,
    sub: &DictSubproblem,
    factor: &Cholesky,
    rho: f64,
) {
    let rhs = &sub.linear + &((&state.z - &state.u) * rho);
    state.d = factor.solve_rows(&rhs.view());
    state.z = project_unit_columns(&(&state.d + &state.u));
    state.u = &state.u + &state.d - &state.z;
}

/// Factorization of `WᵀW + (η+ρ)Id`.
pub fn admm_factor(sub: &DictSubproblem, rho: f64) -> Result<Cholesky> {
    let mut a = sub.hessian.clone();
    a.diag_mut().mapv_inplace(|v| v + rho);
    Cholesky::factor(&a.view())
}

/// ADMM inner solver for the dictionary block.
///
/// Hands out the feasible iterate `Z`. `(Z, U)` carry over between outer
/// steps as a warm start, with the dual kept unscaled so it survives a change
/// of `ρ`.
#[derive(Debug, Clone)]
pub struct AdmmDictionary {
    config: AdmmConfig,
    prepared: Option<Prepared>,
    warm: Option<(Mat, Mat)>,
}

#[derive(Debug, Clone)]
struct Prepared {
    sub: DictSubproblem,
    factor: Cholesky,
    rho: f64,
    state: AdmmState,
    sweeps: usize,
    checkpoint: f64,
}

impl Prepared {
    /// Doubles `ρ` when the primal residual stopped shrinking over the last
    /// `window` sweeps.
    fn guard(&mut self, window: usize) -> Result<()> {
        if window == 0 || self.sweeps % window != 0 {
            return Ok(());
        }
        let residual = frob_diff(&self.state.d.view(), &self.state.z.view());
        let scale = 1.0 + frob(&self.state.z.view());
        if residual > WINDOW_SHRINK * self.checkpoint && residual > SETTLED * scale {
            let rho = 2.0 * self.rho;
            self.factor = admm_factor(&self.sub, rho)?;
            self.state.u *= self.rho / rho;
            self.rho = rho;
            self.checkpoint = f64::INFINITY;
        } else {
            self.checkpoint = residual;
        }
        Ok(())
    }
}

impl AdmmDictionary {
    pub fn new(config: AdmmConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config, prepared: None, warm: None })
    }

    pub fn config(&self) -> &AdmmConfig {
        &self.config
    }

    /// Penalty currently in use.
    pub fn rho(&self) -> Option<f64> {
        self.prepared.as_ref().map(|p| p.rho)
    }

    /// Current `(D, Z, U)`.
    pub fn state(&self) -> Option<&AdmmState> {
        self.prepared.as_ref().map(|p| &p.state)
    }

    pub fn subproblem(&self) -> Option<&DictSubproblem> {
        self.prepared.as_ref().map(|p| &p.sub)
    }

    /// Sets up the subproblem for codes `w` and previous dictionary `d_prev`.
    pub fn prepare(&mut self, inst: &SdlInstance, w: &Mat, d_prev: &Mat, eta: f64) -> Result<()> {
        let sub = DictSubproblem::new(inst, w, d_prev, eta);
        let rho = match self.config.rho {
            Some(r) => r,
            None => {
                let r = sub.mean_curvature.max(ETA_FLOOR * eta);
                if r > 0.0 && r.is_finite() {
                    r
                } else {
                    eta
                }
            }
        };
        let factor = admm_factor(&sub, rho)?;
        let (z, u) = match self.warm.take() {
            Some((z, dual)) if z.dim() == d_prev.dim() => (z, dual / rho),
            _ => (d_prev.clone(), Mat::zeros(d_prev.dim())),
        };
        let state = AdmmState { d: z.clone(), z, u };
        self.prepared = Some(Prepared { sub, factor, rho, state, sweeps: 0, checkpoint: f64::INFINITY });
        Ok(())
    }

    /// Runs one ADMM sweep and returns the new `Z`.
    pub fn advance(&mut self) -> Result<&Mat> {
        let p = self
            .prepared
            .as_mut()
            .ok_or_else(|| IpadError::Config("ADMM stepped before reset".into()))?;
        admm_d_solve_step(&mut p.state, &p.sub, &p.factor, p.rho);
        p.sweeps += 1;
        p.guard(self.config.stall_window)?;
        self.warm = Some((p.state.z.clone(), &p.state.u * p.rho));
        Ok(&p.state.z)
    }
}

impl InnerSolver<SdlInstance> for AdmmDictionary {
    fn name(&self) -> &str {
        "admm"
    }

    fn reset(&mut self, sub: &Subproblem<'_, SdlInstance>) -> Result<()> {
        if sub.view.block != Block::Y {
            return Err(IpadError::Config("the ADMM solver handles the dictionary block".into()));
        }
        self.prepare(sub.view.problem, sub.view.other, sub.u_prev, sub.eta)
    }

    fn step(&mut self, _sub: &Subproblem<'_, SdlInstance>, _u: &Mat) -> Result<Mat> {
        self.advance().cloned()
    }

    /// Lipschitz constant of the subproblem gradient, `‖WᵀW‖₂ + η`.
    fn step_weight(&self) -> Option<f64> {
        self.prepared.as_ref().map(|p| p.sub.gram_norm + p.sub.eta)
    }
}
