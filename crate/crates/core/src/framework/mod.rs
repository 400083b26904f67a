//! Outer alternating loop, inner acceptance protocol and trace diagnostics.

mod config;
mod diagnostics;
mod inexact;
mod problem;
mod solve;
mod stop;
mod trace;

pub use config::{BlockConfig, ExhaustionPolicy, IpadConfig, ProxWeight, Schedule, StopMode};
pub use diagnostics::{
    audit_criterion, audit_descent, descent_constants, descent_constants_from_trace,
    descent_constants_over, oscillation_count, CriterionAudit, DescentAudit, StepParams,
};
pub use inexact::{
    accept_block, criterion_holds, error_floor, evaluate_block, evaluate_inexactness,
    BlockOutcome, Inexactness, InnerSolver, Subproblem,
};
pub use problem::{Block, BlockPoint, BlockView, NnpProblem};
pub use solve::{block_params, solve_alternating, solve_ipad, BlockUpdate, InexactUpdate};
pub use stop::{check_stop, guarded_ratio, RelativeChanges};
pub use trace::{IterationRecord, SolveResult, Termination};
