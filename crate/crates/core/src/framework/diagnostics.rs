//! Checks of the sufficient-descent and error inequalities on finished traces.

use serde::{Deserialize, Serialize};

use crate::error::{IpadError, Result};

use super::config::{IpadConfig, Schedule};
use super::trace::IterationRecord;

/// Proximal parameters and error constants in force at one outer step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepParams {
    pub eta_x: f64,
    pub eta_y: f64,
    pub c_x: f64,
    pub c_y: f64,
}

impl StepParams {
    pub fn from_record(r: &IterationRecord) -> Self {
        Self { eta_x: r.eta_x, eta_y: r.eta_y, c_x: r.c_x, c_y: r.c_y }
    }
}

/// Descent constants over a sequence of step parameters:
/// `a = min_t min(η₁/4 - C_x²/η₁, η₂/4 - C_y²/η₂)` and
/// `b = max_t max(η₁ + C_x, M + η₂ + C_y)`.
pub fn descent_constants_over(params: impl IntoIterator<Item = StepParams>, m: f64) -> (f64, f64) {
    let mut a = f64::INFINITY;
    let mut b = f64::NEG_INFINITY;
    for p in params {
        a = a
            .min(p.eta_x / 4.0 - p.c_x * p.c_x / p.eta_x)
            .min(p.eta_y / 4.0 - p.c_y * p.c_y / p.eta_y);
        b = b.max(p.eta_x + p.c_x).max(m + p.eta_y + p.c_y);
    }
    (a, b)
}

/// Descent constants of a configuration whose schedules are fixed in advance.
///
/// Curvature-driven schedules depend on the iterates; use
/// [`descent_constants_from_trace`] for those.
pub fn descent_constants(config: &IpadConfig, m: f64) -> Result<(f64, f64)> {
    let schedules = [&config.x.eta, &config.x.c, &config.y.eta, &config.y.c];
    if schedules.iter().any(|s| matches!(s, Schedule::Curvature { .. })) {
        return Err(IpadError::Config(
            "curvature schedules have no a-priori descent constants".into(),
        ));
    }
    let horizon = schedules
        .iter()
        .map(|s| match s {
            Schedule::Sequence { values } => values.len(),
            _ => 1,
        })
        .max()
        .unwrap_or(1);
    let params = (0..horizon).map(|t| StepParams {
        eta_x: config.x.eta.at(t, None).unwrap(),
        eta_y: config.y.eta.at(t, None).unwrap(),
        c_x: config.x.c.at(t, None).unwrap(),
        c_y: config.y.c.at(t, None).unwrap(),
    });
    Ok(descent_constants_over(params, m))
}

/// Descent constants from the parameters recorded in a trace; `M` is the
/// largest recorded Lipschitz estimate (0 when none was recorded).
pub fn descent_constants_from_trace(trace: &[IterationRecord]) -> (f64, f64) {
    let m = trace
        .iter()
        .map(|r| r.lipschitz)
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max);
    descent_constants_over(trace.iter().filter(|r| r.t > 0).map(StepParams::from_record), m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescentAudit {
    pub checked: usize,
    /// Step indices `t` where `Ψᵗ⁻¹ - Ψᵗ` fell short.
    pub violations: Vec<usize>,
    /// Smallest slack `(Ψᵗ⁻¹ - Ψᵗ) - a (‖Δx‖² + ‖Δy‖²) + tol (1 + |Ψᵗ⁻¹|)`.
    pub worst_margin: f64,
}

impl DescentAudit {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Flags every step with `Ψᵗ⁻¹ - Ψᵗ < a (‖Δx‖² + ‖Δy‖²) - rel_tol (1 + |Ψᵗ⁻¹|)`.
pub fn audit_descent(trace: &[IterationRecord], a: f64, rel_tol: f64) -> DescentAudit {
    let mut violations = Vec::new();
    let mut worst = f64::INFINITY;
    for pair in trace.windows(2) {
        let (prev, cur) = (&pair[0], &pair[1]);
        let decrease = prev.psi - cur.psi;
        let required = a * (cur.dx_norm * cur.dx_norm + cur.dy_norm * cur.dy_norm);
        let margin = decrease - required + rel_tol * (1.0 + prev.psi.abs());
        worst = worst.min(margin);
        if !(margin >= 0.0) {
            violations.push(cur.t);
        }
    }
    DescentAudit { checked: trace.len().saturating_sub(1), violations, worst_margin: worst }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionAudit {
    pub checked: usize,
    /// Accepted steps whose recorded errors break `‖e‖ ≤ C ‖Δ‖ + floor`.
    pub violations: Vec<usize>,
    /// Steps where an inner budget ran out (not counted as accepted).
    pub exhausted: Vec<usize>,
}

/// Re-checks the error test on every accepted step of a trace.
pub fn audit_criterion(trace: &[IterationRecord]) -> CriterionAudit {
    let mut violations = Vec::new();
    let mut exhausted = Vec::new();
    let mut checked = 0;
    for r in trace.iter().filter(|r| r.t > 0) {
        if !(r.accepted_x && r.accepted_y) {
            exhausted.push(r.t);
            continue;
        }
        checked += 1;
        if !(r.criterion_x() && r.criterion_y()) {
            violations.push(r.t);
        }
    }
    CriterionAudit { checked, violations, exhausted }
}

/// Number of sign changes in the sequence of objective decrements.
pub fn oscillation_count(trace: &[IterationRecord]) -> usize {
    let steps: Vec<f64> = trace
        .windows(2)
        .map(|w| w[1].psi - w[0].psi)
        .filter(|d| *d != 0.0)
        .collect();
    steps.windows(2).filter(|w| w[0].signum() != w[1].signum()).count()
}
