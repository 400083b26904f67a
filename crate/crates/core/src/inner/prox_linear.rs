use crate::error::{IpadError, Result};
use crate::framework::{InnerSolver, Subproblem};
use crate::linalg::{all_finite, Mat};

/// One prox-linear step `prox(u - grad / L, L)`.
pub fn prox_linear_step(
    u: &Mat,
    grad: &Mat,
    lipschitz: f64,
    prox: impl Fn(&Mat, f64) -> Mat,
) -> Result<Mat> {
    if !(lipschitz > 0.0) || !lipschitz.is_finite() {
        return Err(IpadError::Config(format!(
            "prox-linear step needs a positive finite Lipschitz bound, got {lipschitz}"
        )));
    }
    if !all_finite(&grad.view()) {
        return Err(IpadError::NonFinite { oracle: "gradient in prox-linear step" });
    }
    Ok(prox(&(u - &(grad / lipschitz)), lipschitz))
}

/// Inner solver that never moves. With `max_inner = 0` and `τ = η` the
/// block update becomes a single prox-linear step from the previous iterate.
#[derive(Debug, Clone, Copy, Default)]
pub struct Hold;

impl<P: ?Sized> InnerSolver<P> for Hold {
    fn name(&self) -> &str {
        "hold"
    }

    fn reset(&mut self, _sub: &Subproblem<'_, P>) -> Result<()> {
        Ok(())
    }

    fn step(&mut self, _sub: &Subproblem<'_, P>, u: &Mat) -> Result<Mat> {
        Ok(u.clone())
    }
}
