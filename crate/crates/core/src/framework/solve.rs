use std::time::Instant;

use crate::error::{IpadError, Result};
use crate::linalg::{frob, Mat};

use super::config::{BlockConfig, ExhaustionPolicy, IpadConfig, Schedule};
use super::inexact::{accept_block, BlockOutcome, InnerSolver, Subproblem};
use super::problem::{Block, BlockPoint, BlockView, NnpProblem};
use super::stop::{check_stop, RelativeChanges};
use super::trace::{IterationRecord, SolveResult, Termination};

/// Resolved `(η, C)` for one block at one outer step.
pub fn block_params<P: NnpProblem + ?Sized>(
    cfg: &BlockConfig,
    view: &BlockView<'_, P>,
    t: usize,
) -> Result<(f64, f64)> {
    let needs_l = matches!(cfg.eta, Schedule::Curvature { .. })
        || matches!(cfg.c, Schedule::Curvature { .. });
    let l = if needs_l { view.lipschitz() } else { None };
    let eta = cfg.eta.at(t - 1, l)?;
    let c = cfg.c.at(t - 1, l)?;
    if !(eta > 2.0 * c) || !(eta > 0.0) {
        return Err(IpadError::Config(format!(
            "step {t}, block {}: eta = {eta} does not exceed 2*C = {}",
            view.block.label(),
            2.0 * c
        )));
    }
    Ok((eta, c))
}

/// One block update of the outer loop.
///
/// `solve_alternating` calls `update` for `x` against the frozen `y`, then
/// for `y` against the new `x`. Implementations may keep state across outer
/// steps but must be deterministic.
pub trait BlockUpdate<P: ?Sized> {
    fn update(
        &mut self,
        problem: &P,
        config: &IpadConfig,
        block: Block,
        u_prev: &Mat,
        other: &Mat,
        t: usize,
    ) -> Result<BlockOutcome>;
}

/// Inexact block update: inner iterations accepted through [`accept_block`].
pub struct InexactUpdate<'s, P: ?Sized> {
    pub inner: &'s mut dyn InnerSolver<P>,
}

impl<'s, P: ?Sized> InexactUpdate<'s, P> {
    pub fn new(inner: &'s mut dyn InnerSolver<P>) -> Self {
        Self { inner }
    }
}

impl<P: NnpProblem + ?Sized> BlockUpdate<P> for InexactUpdate<'_, P> {
    fn update(
        &mut self,
        problem: &P,
        config: &IpadConfig,
        block: Block,
        u_prev: &Mat,
        other: &Mat,
        t: usize,
    ) -> Result<BlockOutcome> {
        let cfg = config.block(block);
        let view = BlockView::new(problem, block, other);
        let (eta, c) = block_params(cfg, &view, t)?;
        let sub = Subproblem { view, u_prev, eta, t };
        accept_block(&sub, &mut *self.inner, c, cfg.prox_weight, cfg.max_inner, config.abs_error_floor)
    }
}

/// Inexact proximal alternating direction method.
///
/// Each outer step updates `x` with `inner_x` against the frozen `y`, then
/// `y` with `inner_y` against the new `x`, accepting each block through
/// [`accept_block`]. One [`IterationRecord`] is kept per outer step, after a
/// record for the initial point.
pub fn solve_ipad<P: NnpProblem + ?Sized>(
    problem: &P,
    config: &IpadConfig,
    inner_x: &mut dyn InnerSolver<P>,
    inner_y: &mut dyn InnerSolver<P>,
    init: BlockPoint,
) -> Result<SolveResult> {
    solve_alternating(
        problem,
        config,
        &mut InexactUpdate::new(inner_x),
        &mut InexactUpdate::new(inner_y),
        init,
    )
}

/// Outer loop shared by the inexact method and the baselines: stop rules,
/// trace keeping and failure handling, with the block updates plugged in.
pub fn solve_alternating<P: NnpProblem + ?Sized>(
    problem: &P,
    config: &IpadConfig,
    update_x: &mut dyn BlockUpdate<P>,
    update_y: &mut dyn BlockUpdate<P>,
    init: BlockPoint,
) -> Result<SolveResult> {
    config.validate()?;
    if !init.is_finite() {
        return Err(IpadError::NonFinite { oracle: "initial point" });
    }
    let psi0 = problem.psi(&init);
    if !psi0.is_finite() {
        return Err(IpadError::InfeasibleInit(psi0));
    }
    let start = Instant::now();
    let elapsed = || if config.wall_clock { start.elapsed().as_secs_f64() } else { 0.0 };
    let lipschitz = |z: &BlockPoint| problem.lipschitz_joint(z).unwrap_or(f64::NAN);

    let mut trace = vec![IterationRecord::initial(psi0, &init, lipschitz(&init))];
    let mut z = init;
    let mut termination = Termination::MaxOuter;

    for t in 1..=config.max_outer {
        let x_prev_norm = frob(&z.x.view());
        let y_prev_norm = frob(&z.y.view());
        let psi_prev = trace.last().map(|r| r.psi).unwrap_or(psi0);

        let step = update_x.update(problem, config, Block::X, &z.x, &z.y, t).and_then(|ox| {
            let oy = update_y.update(problem, config, Block::Y, &z.y, &ox.u, t)?;
            Ok((ox, oy))
        });
        let (ox, oy) = match step {
            Ok(s) => s,
            Err(IpadError::NonFinite { .. }) => {
                let mut diag = trace.last().cloned().expect("trace has the initial record");
                diag.t = t;
                diag.psi = f64::NAN;
                diag.elapsed = elapsed();
                trace.push(diag);
                termination = Termination::NonFinite;
                break;
            }
            Err(e) => return Err(e),
        };

        let next = BlockPoint::new(ox.u, oy.u);
        let psi = problem.psi(&next);
        let record = IterationRecord {
            t,
            psi,
            dx_norm: ox.delta_norm,
            dy_norm: oy.delta_norm,
            x_prev_norm,
            y_prev_norm,
            ex_norm: ox.e_norm,
            ey_norm: oy.e_norm,
            inner_x: ox.inner_steps,
            inner_y: oy.inner_steps,
            elapsed: elapsed(),
            eta_x: ox.eta,
            eta_y: oy.eta,
            c_x: ox.c,
            c_y: oy.c,
            floor_x: ox.floor,
            floor_y: oy.floor,
            accepted_x: ox.accepted,
            accepted_y: oy.accepted,
            lipschitz: lipschitz(&next),
        };
        let changes = RelativeChanges::from_norms(
            record.dx_norm,
            x_prev_norm,
            record.dy_norm,
            y_prev_norm,
            psi_prev,
            psi,
        );
        let exhausted = !(record.accepted_x && record.accepted_y);
        trace.push(record);

        if !psi.is_finite() || !next.is_finite() {
            termination = Termination::NonFinite;
            z = next;
            break;
        }
        z = next;
        if exhausted && config.on_exhausted == ExhaustionPolicy::Stall {
            termination = Termination::Stalled;
            break;
        }
        if check_stop(&changes, config.stop_mode, config.outer_tol) {
            termination = Termination::Converged;
            break;
        }
        if config.time_limit.is_some_and(|limit| start.elapsed().as_secs_f64() >= limit) {
            termination = Termination::TimeLimit;
            break;
        }
    }

    Ok(SolveResult { point: z, trace, termination })
}
