//! Inner iteration schemes and the proximal primitives they share.

mod admm;
mod pith;
mod prox;
mod prox_linear;

pub use admm::{
    admm_d_solve_step, admm_factor, sphere_kkt_residual, AdmmConfig, AdmmDictionary, AdmmState,
    DictSubproblem, RefactorPolicy,
};
pub use pith::{pith_step, pith_weight, Pith, PithConfig};
pub use prox::{hard_threshold_scalar, project_unit_columns, prox_hard_threshold};
pub use prox_linear::{prox_linear_step, Hold};
