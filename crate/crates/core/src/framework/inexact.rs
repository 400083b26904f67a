//! Implementable inexactness measure and the inner acceptance loop.

use crate::error::{IpadError, Result};
use crate::linalg::{all_finite, frob, frob_diff, Mat};

use super::config::ProxWeight;
use super::problem::{BlockView, NnpProblem};

/// The block subproblem `min h(u) + H(u, v) + η/2 ‖u - u_prev‖²` handed to an
/// inner solver.
pub struct Subproblem<'a, P: ?Sized> {
    pub view: BlockView<'a, P>,
    pub u_prev: &'a Mat,
    pub eta: f64,
    /// Outer step index (1-based).
    pub t: usize,
}

/// An iterative scheme for a block subproblem.
///
/// `reset` is called once per outer step before the first `step`. Solvers may
/// keep state between outer steps (warm starts) but must be deterministic.
pub trait InnerSolver<P: ?Sized> {
    fn name(&self) -> &str;

    fn reset(&mut self, sub: &Subproblem<'_, P>) -> Result<()>;

    /// Next candidate from the current one.
    fn step(&mut self, sub: &Subproblem<'_, P>, u: &Mat) -> Result<Mat>;

    /// Weight of the proximal steps this solver takes, if it has one. Used
    /// by [`ProxWeight::Inner`].
    fn step_weight(&self) -> Option<f64> {
        None
    }
}

/// Prox-corrected candidate and its error.
#[derive(Debug, Clone)]
pub struct Inexactness {
    pub u_tilde: Mat,
    pub e: Mat,
}

/// Prox correction of a raw inner candidate and its computable error.
///
/// With `v = u_raw - (∇H(u_raw) + η (u_raw - u_prev)) / τ`, returns
/// `ũ = prox_h(v, τ)` and
/// `e = (τ - η)(ũ - u_raw) + ∇H(u_raw) - ∇H(ũ)`.
/// For `τ = 1` this is the textbook form; `-e` is the first-order residual
/// `g + ∇H(ũ) + η (ũ - u_prev)` with `g = τ (v - ũ) ∈ ∂h(ũ)`.
pub fn evaluate_inexactness(
    u_raw: &Mat,
    u_prev: &Mat,
    eta: f64,
    tau: f64,
    prox: impl Fn(&Mat, f64) -> Mat,
    grad: impl Fn(&Mat) -> Mat,
) -> Result<Inexactness> {
    if !(eta > 0.0) || !(tau > 0.0) {
        return Err(IpadError::Config(format!(
            "eta and tau must be positive (eta = {eta}, tau = {tau})"
        )));
    }
    if u_raw.dim() != u_prev.dim() {
        return Err(IpadError::Shape(format!(
            "candidate {:?} vs previous iterate {:?}",
            u_raw.dim(),
            u_prev.dim()
        )));
    }
    let grad_raw = grad(u_raw);
    if !all_finite(&grad_raw.view()) {
        return Err(IpadError::NonFinite { oracle: "grad_H at the raw candidate" });
    }
    let drift = u_raw - &((&grad_raw + &((u_raw - u_prev) * eta)) / tau);
    let u_tilde = prox(&drift, tau);
    if !all_finite(&u_tilde.view()) {
        return Err(IpadError::NonFinite { oracle: "prox" });
    }
    let grad_tilde = grad(&u_tilde);
    if !all_finite(&grad_tilde.view()) {
        return Err(IpadError::NonFinite { oracle: "grad_H at the corrected candidate" });
    }
    let e = (&u_tilde - u_raw) * (tau - eta) + &grad_raw - &grad_tilde;
    Ok(Inexactness { u_tilde, e })
}

/// [`evaluate_inexactness`] with the block's own oracles.
pub fn evaluate_block<P: NnpProblem + ?Sized>(
    view: &BlockView<'_, P>,
    u_raw: &Mat,
    u_prev: &Mat,
    eta: f64,
    tau: f64,
) -> Result<Inexactness> {
    evaluate_inexactness(u_raw, u_prev, eta, tau, |v, w| view.prox(v, w), |u| view.grad(u))
}

/// Outcome of one block update.
#[derive(Debug, Clone)]
pub struct BlockOutcome {
    pub u: Mat,
    pub inner_steps: usize,
    pub e_norm: f64,
    /// `‖ũ - u_prev‖` of the returned point.
    pub delta_norm: f64,
    /// Slack `ε (1 + ‖u_prev‖)` used by the test.
    pub floor: f64,
    /// Whether the error test passed; `false` means the inner budget ran out
    /// and `u` is the candidate with the smallest error ratio.
    pub accepted: bool,
    pub tau: f64,
    /// Proximal parameter and error constant the step ran with.
    pub eta: f64,
    pub c: f64,
}

/// Acceptance slack for a block: `eps (1 + ‖u_prev‖)`.
pub fn error_floor(eps: f64, u_prev: &Mat) -> f64 {
    eps * (1.0 + frob(&u_prev.view()))
}

/// `‖e‖ ≤ C ‖Δ‖ + floor`.
pub fn criterion_holds(e_norm: f64, delta_norm: f64, c: f64, floor: f64) -> bool {
    e_norm <= c * delta_norm + floor
}

fn resolve_tau(rule: ProxWeight, eta: f64, inner: Option<f64>) -> f64 {
    match rule {
        ProxWeight::Unit => 1.0,
        ProxWeight::Eta => eta,
        ProxWeight::Inner => inner.unwrap_or(1.0),
    }
}

/// Runs inner iterations until a prox-corrected candidate passes the error test.
///
/// Each inner step is followed by [`evaluate_inexactness`]; the first
/// corrected candidate `ũ` with `‖e‖ ≤ C ‖ũ - u_prev‖ + floor` is returned.
/// With `max_inner = 0` the previous iterate itself is corrected and tested.
pub fn accept_block<P: NnpProblem + ?Sized>(
    sub: &Subproblem<'_, P>,
    inner: &mut dyn InnerSolver<P>,
    c: f64,
    prox_weight: ProxWeight,
    max_inner: usize,
    eps: f64,
) -> Result<BlockOutcome> {
    let floor = error_floor(eps, sub.u_prev);
    inner.reset(sub)?;
    let mut u = sub.u_prev.clone();
    let mut best: Option<(f64, BlockOutcome)> = None;
    let rounds = max_inner.max(1);
    for i in 1..=rounds {
        let steps = if max_inner == 0 { 0 } else { i };
        if max_inner > 0 {
            u = inner.step(sub, &u)?;
            if u.dim() != sub.u_prev.dim() {
                return Err(IpadError::Shape(format!(
                    "inner solver {} returned {:?}, expected {:?}",
                    inner.name(),
                    u.dim(),
                    sub.u_prev.dim()
                )));
            }
            if !all_finite(&u.view()) {
                return Err(IpadError::NonFinite { oracle: "inner solver step" });
            }
        }
        let tau = resolve_tau(prox_weight, sub.eta, inner.step_weight());
        let Inexactness { u_tilde, e } = evaluate_block(&sub.view, &u, sub.u_prev, sub.eta, tau)?;
        let e_norm = frob(&e.view());
        let delta_norm = frob_diff(&u_tilde.view(), &sub.u_prev.view());
        let accepted = criterion_holds(e_norm, delta_norm, c, floor);
        let outcome = BlockOutcome {
            u: u_tilde,
            inner_steps: steps,
            e_norm,
            delta_norm,
            floor,
            accepted,
            tau,
            eta: sub.eta,
            c,
        };
        if accepted {
            return Ok(outcome);
        }
        let ratio = e_norm / delta_norm.max(floor).max(f64::MIN_POSITIVE);
        if best.as_ref().is_none_or(|(r, _)| ratio < *r) {
            best = Some((ratio, outcome));
        }
    }
    let (_, mut outcome) = best.expect("at least one candidate is evaluated");
    outcome.inner_steps = if max_inner == 0 { 0 } else { rounds };
    Ok(outcome)
}
