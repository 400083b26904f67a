use serde::{Deserialize, Serialize};

use crate::error::{IpadError, Result};

/// A per-outer-step sequence of positive reals.
///
/// `Curvature` ties the value to the current Lipschitz bound `L` of the
/// block gradient (`max(factor * L, floor)`); it needs a problem that reports
/// [`lipschitz_x`](super::NnpProblem::lipschitz_x) / `lipschitz_y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Schedule {
    Constant { value: f64 },
    /// Step `t` uses `values[t]`; the last value repeats past the end.
    Sequence { values: Vec<f64> },
    Curvature { factor: f64, floor: f64 },
}

impl Schedule {
    pub fn constant(value: f64) -> Self {
        Schedule::Constant { value }
    }

    /// Value at outer step `t` (0-based) given the block Lipschitz bound.
    pub fn at(&self, t: usize, lipschitz: Option<f64>) -> Result<f64> {
        match self {
            Schedule::Constant { value } => Ok(*value),
            Schedule::Sequence { values } => Ok(values[t.min(values.len() - 1)]),
            Schedule::Curvature { factor, floor } => {
                let l = lipschitz.ok_or_else(|| {
                    IpadError::Config(
                        "curvature schedule needs a problem that reports block Lipschitz bounds"
                            .into(),
                    )
                })?;
                Ok((factor * l).max(*floor))
            }
        }
    }

    fn horizon(&self) -> usize {
        match self {
            Schedule::Sequence { values } => values.len(),
            _ => 1,
        }
    }

    fn validate(&self, what: &str) -> Result<()> {
        let ok = match self {
            Schedule::Constant { value } => value.is_finite() && *value >= 0.0,
            Schedule::Sequence { values } => {
                !values.is_empty() && values.iter().all(|v| v.is_finite() && *v >= 0.0)
            }
            Schedule::Curvature { factor, floor } => {
                factor.is_finite() && floor.is_finite() && *factor >= 0.0 && *floor >= 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(IpadError::Config(format!("{what}: invalid schedule {self:?}")))
        }
    }
}

/// Weight `τ` of the proximal mapping used to correct inner candidates.
///
/// `Unit` is `τ = 1`. Any other choice is the same correction applied to the
/// objective scaled by `1/τ` (with `η` and `C` scaled alike), which leaves
/// the acceptance test invariant but moves the prox step onto the block's
/// own curvature scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ProxWeight {
    #[default]
    Unit,
    /// `τ = η` of the current step.
    Eta,
    /// The inner solver's own step weight when it reports one, else 1.
    Inner,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StopMode {
    /// Relative change of both blocks and of the objective.
    #[default]
    Synthetic,
    /// Relative change of the y block only.
    Real,
}

/// What to do when the inner budget runs out before the error test passes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ExhaustionPolicy {
    /// Keep the best candidate, flag the step and stop the solve.
    #[default]
    Stall,
    /// Keep the best candidate, flag the step and carry on.
    Continue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockConfig {
    /// Error constant `C` of the acceptance test `‖e‖ ≤ C ‖ũ - u_prev‖`.
    pub c: Schedule,
    /// Proximal parameter `η`; must exceed `2C` at every step.
    pub eta: Schedule,
    pub prox_weight: ProxWeight,
    pub max_inner: usize,
}

impl BlockConfig {
    /// Constant `C` with the default `η = max(2.5 C, 1e-3)`.
    pub fn with_c(c: f64) -> Self {
        Self {
            c: Schedule::constant(c),
            eta: Schedule::constant((2.5 * c).max(1e-3)),
            prox_weight: ProxWeight::Unit,
            max_inner: 20,
        }
    }

    fn validate(&self, block: &str) -> Result<()> {
        self.c.validate(&format!("C_{block}"))?;
        self.eta.validate(&format!("eta_{block}"))?;
        let assumption = |eta: f64, c: f64| eta > 2.0 * c && eta > 0.0;
        use Schedule::*;
        match (&self.eta, &self.c) {
            (Curvature { factor: ef, floor: eflo }, Curvature { factor: cf, floor: cflo }) => {
                if !(assumption(*ef, *cf) || (*ef == 0.0 && *cf == 0.0)) || !assumption(*eflo, *cflo)
                {
                    return Err(self.assumption_error(block));
                }
            }
            (Curvature { floor, .. }, c) if !matches!(c, Curvature { .. }) => {
                let horizon = c.horizon();
                for t in 0..horizon {
                    if !assumption(*floor, c.at(t, None)?) {
                        return Err(self.assumption_error(block));
                    }
                }
            }
            // Curvature-scaled C against a fixed eta is checked step by step.
            (_, Curvature { .. }) => {}
            (eta, c) => {
                let horizon = eta.horizon().max(c.horizon());
                for t in 0..horizon {
                    if !assumption(eta.at(t, None)?, c.at(t, None)?) {
                        return Err(self.assumption_error(block));
                    }
                }
            }
        }
        Ok(())
    }

    fn assumption_error(&self, block: &str) -> IpadError {
        IpadError::Config(format!(
            "block {block}: eta must exceed 2*C at every step (eta = {:?}, C = {:?})",
            self.eta, self.c
        ))
    }
}

impl Default for BlockConfig {
    fn default() -> Self {
        Self::with_c(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IpadConfig {
    pub x: BlockConfig,
    pub y: BlockConfig,
    pub max_outer: usize,
    pub outer_tol: f64,
    pub stop_mode: StopMode,
    /// Relative slack `ε` of the acceptance test: a candidate passes when
    /// `‖e‖ ≤ C ‖Δ‖ + ε (1 + ‖u_prev‖)`.
    pub abs_error_floor: f64,
    pub on_exhausted: ExhaustionPolicy,
    pub seed: u64,
    /// Record wall-clock time in the trace. Turn off for byte-reproducible traces.
    pub wall_clock: bool,
    /// Stop after this many seconds. Makes the trace length timing dependent.
    #[serde(default)]
    pub time_limit: Option<f64>,
}

impl Default for IpadConfig {
    fn default() -> Self {
        Self {
            x: BlockConfig::default(),
            y: BlockConfig::default(),
            max_outer: 500,
            outer_tol: 1e-4,
            stop_mode: StopMode::Synthetic,
            abs_error_floor: 1e-12,
            on_exhausted: ExhaustionPolicy::Stall,
            seed: 0,
            wall_clock: true,
            time_limit: None,
        }
    }
}

impl IpadConfig {
    pub fn validate(&self) -> Result<()> {
        self.x.validate("x")?;
        self.y.validate("y")?;
        if self.max_outer == 0 {
            return Err(IpadError::Config("max_outer must be at least 1".into()));
        }
        if !(self.outer_tol > 0.0) {
            return Err(IpadError::Config(format!("outer_tol must be positive, got {}", self.outer_tol)));
        }
        if let Some(limit) = self.time_limit {
            if !(limit > 0.0) {
                return Err(IpadError::Config(format!("time_limit must be positive, got {limit}")));
            }
        }
        if !(self.abs_error_floor >= 0.0) {
            return Err(IpadError::Config("abs_error_floor must be nonnegative".into()));
        }
        Ok(())
    }

    /// Checked constructor.
    pub fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    pub fn block(&self, block: super::Block) -> &BlockConfig {
        match block {
            super::Block::X => &self.x,
            super::Block::Y => &self.y,
        }
    }
}
