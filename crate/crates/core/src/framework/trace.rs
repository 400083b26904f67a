use serde::{Deserialize, Serialize};

use super::problem::BlockPoint;

/// Telemetry for one outer step. Record `t = 0` describes the initial point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub t: usize,
    pub psi: f64,
    pub dx_norm: f64,
    pub dy_norm: f64,
    /// `‖xᵗ⁻¹‖`, denominator of the relative change.
    pub x_prev_norm: f64,
    pub y_prev_norm: f64,
    pub ex_norm: f64,
    pub ey_norm: f64,
    pub inner_x: usize,
    pub inner_y: usize,
    /// Seconds since the solve started (0 when wall-clock recording is off).
    pub elapsed: f64,
    pub eta_x: f64,
    pub eta_y: f64,
    pub c_x: f64,
    pub c_y: f64,
    pub floor_x: f64,
    pub floor_y: f64,
    pub accepted_x: bool,
    pub accepted_y: bool,
    /// Lipschitz estimate of ∇H at this iterate (NaN when the problem has none).
    pub lipschitz: f64,
}

impl IterationRecord {
    pub fn initial(psi: f64, z: &BlockPoint, lipschitz: f64) -> Self {
        Self {
            t: 0,
            psi,
            dx_norm: 0.0,
            dy_norm: 0.0,
            x_prev_norm: crate::linalg::frob(&z.x.view()),
            y_prev_norm: crate::linalg::frob(&z.y.view()),
            ex_norm: 0.0,
            ey_norm: 0.0,
            inner_x: 0,
            inner_y: 0,
            elapsed: 0.0,
            eta_x: f64::NAN,
            eta_y: f64::NAN,
            c_x: f64::NAN,
            c_y: f64::NAN,
            floor_x: 0.0,
            floor_y: 0.0,
            accepted_x: true,
            accepted_y: true,
            lipschitz,
        }
    }

    pub fn dx_rel(&self) -> f64 {
        super::stop::guarded_ratio(self.dx_norm, self.x_prev_norm)
    }

    pub fn dy_rel(&self) -> f64 {
        super::stop::guarded_ratio(self.dy_norm, self.y_prev_norm)
    }

    pub fn criterion_x(&self) -> bool {
        self.ex_norm <= self.c_x * self.dx_norm + self.floor_x
    }

    pub fn criterion_y(&self) -> bool {
        self.ey_norm <= self.c_y * self.dy_norm + self.floor_y
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxOuter,
    /// An inner solver exhausted its budget without passing the error test.
    Stalled,
    /// An oracle or iterate went non-finite; the last record is the diagnostic.
    NonFinite,
    /// The wall-clock budget ran out.
    TimeLimit,
}

impl Termination {
    pub fn label(self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::MaxOuter => "max_outer",
            Termination::Stalled => "stalled",
            Termination::NonFinite => "non_finite",
            Termination::TimeLimit => "time_limit",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub point: BlockPoint,
    pub trace: Vec<IterationRecord>,
    pub termination: Termination,
}

impl SolveResult {
    /// Number of outer steps taken.
    pub fn outer_iterations(&self) -> usize {
        self.trace.last().map_or(0, |r| r.t)
    }

    pub fn final_psi(&self) -> f64 {
        self.trace.last().map_or(f64::NAN, |r| r.psi)
    }

    pub fn total_inner(&self) -> (usize, usize) {
        self.trace
            .iter()
            .fold((0, 0), |(a, b), r| (a + r.inner_x, b + r.inner_y))
    }
}
