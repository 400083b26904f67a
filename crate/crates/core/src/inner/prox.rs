use ndarray::Axis;

use crate::linalg::Mat;

const UNIT_TOL: f64 = 4.0 * f64::EPSILON;

/// Scalar prox of `λ|·|₀ + box(±U_b)` with weight `τ`.
///
/// The only candidates are `0` and the clamped input `c`; `c` is kept when
/// `λ + τ/2 (c - v)² < τ/2 v²`, ties go to zero.
#[inline]
pub fn hard_threshold_scalar(v: f64, tau: f64, lambda: f64, bound: Option<f64>) -> f64 {
    let c = match bound {
        Some(b) => v.clamp(-b, b),
        None => v,
    };
    let keep = lambda + 0.5 * tau * (c - v) * (c - v);
    let zero = 0.5 * tau * v * v;
    if keep < zero {
        c
    } else {
        0.0
    }
}

/// Elementwise prox of `λ‖·‖₀` plus an optional `‖·‖_∞ ≤ U_b` box, weight `τ`.
pub fn prox_hard_threshold(v: &Mat, tau: f64, lambda: f64, bound: Option<f64>) -> Mat {
    assert!(tau > 0.0, "prox weight must be positive");
    v.mapv(|x| hard_threshold_scalar(x, tau, lambda, bound))
}

/// Nearest matrix with unit-norm columns; a zero column maps to `e₁`.
///
/// Columns already within `UNIT_TOL` of unit norm are left as they are, so
/// the projection is idempotent bitwise.
pub fn project_unit_columns(d: &Mat) -> Mat {
    let mut out = d.clone();
    for mut col in out.axis_iter_mut(Axis(1)) {
        let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (norm - 1.0).abs() <= UNIT_TOL {
            continue;
        }
        if norm > 0.0 && norm.is_finite() {
            col.mapv_inplace(|v| v / norm);
        } else {
            col.fill(0.0);
            if let Some(first) = col.get_mut(0) {
                *first = 1.0;
            }
        }
    }
    out
}
