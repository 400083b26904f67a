use super::config::StopMode;

/// `num / den`, with a zero denominator mapped to 0 (when `num` is 0 too) or +∞.
pub fn guarded_ratio(num: f64, den: f64) -> f64 {
    if den.abs() <= f64::MIN_POSITIVE {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        num / den.abs()
    }
}

/// Relative changes between two consecutive outer states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativeChanges {
    pub dx_rel: f64,
    pub dy_rel: f64,
    pub dpsi_rel: f64,
}

impl RelativeChanges {
    pub fn new(dx_rel: f64, dy_rel: f64, dpsi_rel: f64) -> Self {
        Self { dx_rel, dy_rel, dpsi_rel }
    }

    pub fn from_norms(
        dx_norm: f64,
        x_prev_norm: f64,
        dy_norm: f64,
        y_prev_norm: f64,
        psi_prev: f64,
        psi_next: f64,
    ) -> Self {
        Self {
            dx_rel: guarded_ratio(dx_norm, x_prev_norm),
            dy_rel: guarded_ratio(dy_norm, y_prev_norm),
            dpsi_rel: guarded_ratio((psi_next - psi_prev).abs(), psi_prev),
        }
    }
}

/// Outer stopping rule (strict inequality).
///
/// `Synthetic`: `max(‖Δy‖/‖y‖, ‖Δx‖/‖x‖, |ΔΨ|/|Ψ|) < tol`.
/// `Real`: `‖Δy‖/‖y‖ < tol`.
pub fn check_stop(changes: &RelativeChanges, mode: StopMode, tol: f64) -> bool {
    match mode {
        StopMode::Synthetic => {
            changes.dx_rel.max(changes.dy_rel).max(changes.dpsi_rel) < tol
                // max() drops NaN; a NaN change never counts as converged
                && !changes.dx_rel.is_nan()
                && !changes.dy_rel.is_nan()
                && !changes.dpsi_rel.is_nan()
        }
        StopMode::Real => changes.dy_rel < tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_mode_needs_all_three_ratios() {
        let c = RelativeChanges::new(5e-5, 5e-5, 5e-5);
        assert!(check_stop(&c, StopMode::Synthetic, 1e-4));
        let c = RelativeChanges::new(5e-5, 2e-4, 5e-5);
        assert!(!check_stop(&c, StopMode::Synthetic, 1e-4));
    }

    #[test]
    fn real_mode_looks_at_the_dictionary_only() {
        let c = RelativeChanges::new(1.0, 5e-3, 1.0);
        assert!(check_stop(&c, StopMode::Real, 1e-2));
    }

    #[test]
    fn equality_does_not_stop() {
        let c = RelativeChanges::new(1e-4, 1e-5, 1e-5);
        assert!(!check_stop(&c, StopMode::Synthetic, 1e-4));
        let c = RelativeChanges::new(0.0, 1e-2, 0.0);
        assert!(!check_stop(&c, StopMode::Real, 1e-2));
    }

    #[test]
    fn zero_denominators() {
        assert_eq!(guarded_ratio(0.0, 0.0), 0.0);
        assert_eq!(guarded_ratio(1.0, 0.0), f64::INFINITY);
        let c = RelativeChanges::from_norms(1.0, 0.0, 0.0, 1.0, 1.0, 1.0);
        assert!(!check_stop(&c, StopMode::Synthetic, 1e-4));
        let c = RelativeChanges::from_norms(0.0, 0.0, 0.0, 1.0, 0.0, 0.0);
        assert!(check_stop(&c, StopMode::Synthetic, 1e-4));
    }
}
