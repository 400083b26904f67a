//! Reference algorithms and the named solver variants compared in the harness.
//!
//! Every variant runs through [`solve_alternating`], so traces, stop rules
//! and failure handling are shared. The variants differ only in how each
//! block is updated:
//!
//! | variant     | codes `W`                  | dictionary `D`                 |
//! |-------------|----------------------------|--------------------------------|
//! | `palm`      | prox-linear                | prox-linear                    |
//! | `mpalm`     | prox-linear                | prox-linear per column         |
//! | `inv`       | prox-linear                | linear solve, then projection  |
//! | `ipad-pith` | PITH, accepted             | prox-linear, accepted          |
//! | `ipad-admm` | prox-linear, accepted      | ADMM, accepted                 |
//! | `ipad-p2a`  | two PITH steps             | ADMM, accepted                 |

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{IpadError, Result};
use crate::framework::{
    block_params, error_floor, evaluate_block, solve_alternating, Block, BlockConfig, BlockOutcome,
    BlockPoint, BlockUpdate, BlockView, ExhaustionPolicy, InexactUpdate, IpadConfig, NnpProblem,
    ProxWeight, Schedule, SolveResult,
};
use crate::inner::{
    project_unit_columns, AdmmConfig, AdmmDictionary, DictSubproblem, Hold, Pith, PithConfig,
};
use crate::linalg::{frob, frob_diff, Cholesky, Mat};
use crate::sdl::SdlInstance;

/// Smallest step weight of a prox-linear update; only reached when the block
/// gradient vanishes identically.
const MIN_WEIGHT: f64 = 1e-12;

/// Prox-linear block update `prox(u - ∇H(u)/L, L)` with `L = γ · L_block`.
///
/// There is no acceptance test. The recorded error is the residual of the
/// step read as an exact prox subproblem with `η = L`, which is bounded by
/// `L_block ‖Δ‖`; `L_block` is recorded as the error constant.
#[derive(Debug, Clone, Copy)]
pub struct ProxLinearUpdate {
    pub gamma: f64,
}

impl<P: NnpProblem + ?Sized> BlockUpdate<P> for ProxLinearUpdate {
    fn update(
        &mut self,
        problem: &P,
        config: &IpadConfig,
        block: Block,
        u_prev: &Mat,
        other: &Mat,
        _t: usize,
    ) -> Result<BlockOutcome> {
        let view = BlockView::new(problem, block, other);
        let lip = view.lipschitz().ok_or_else(|| {
            IpadError::Config("prox-linear steps need block Lipschitz bounds".into())
        })?;
        let l = (self.gamma * lip).max(MIN_WEIGHT);
        let out = evaluate_block(&view, u_prev, u_prev, l, l)?;
        Ok(BlockOutcome {
            e_norm: frob(&out.e.view()),
            delta_norm: frob_diff(&out.u_tilde.view(), &u_prev.view()),
            u: out.u_tilde,
            inner_steps: 0,
            floor: error_floor(config.abs_error_floor, u_prev),
            accepted: true,
            tau: l,
            eta: l,
            c: lip,
        })
    }
}

fn unaccounted(u: Mat, u_prev: &Mat, inner_steps: usize, eta: f64) -> BlockOutcome {
    BlockOutcome {
        delta_norm: frob_diff(&u.view(), &u_prev.view()),
        u,
        inner_steps,
        e_norm: f64::NAN,
        floor: 0.0,
        accepted: true,
        tau: f64::NAN,
        eta,
        c: f64::NAN,
    }
}

/// Dictionary update that solves `D (WᵀW + η Id) = I W + η Dᵗ` and then
/// normalizes the columns. `η` comes from the dictionary block schedule.
#[derive(Debug, Clone, Copy, Default)]
pub struct InvDictionaryUpdate;

impl BlockUpdate<SdlInstance> for InvDictionaryUpdate {
    fn update(
        &mut self,
        problem: &SdlInstance,
        config: &IpadConfig,
        block: Block,
        u_prev: &Mat,
        other: &Mat,
        t: usize,
    ) -> Result<BlockOutcome> {
        if block != Block::Y {
            return Err(IpadError::Config("the linear-system update is for the dictionary".into()));
        }
        let view = BlockView::new(problem, block, other);
        let (eta, _) = block_params(&config.y, &view, t)?;
        let sub = DictSubproblem::new(problem, other, u_prev, eta);
        let solved = Cholesky::factor(&sub.hessian.view())?.solve_rows(&sub.linear.view());
        Ok(unaccounted(project_unit_columns(&solved), u_prev, 1, eta))
    }
}

/// Atom-by-atom dictionary update in ascending column order: each column
/// takes a prox-linear step with weight `‖wᵢ‖²` and is normalized; columns
/// with `wᵢ = 0` are left as they are.
#[derive(Debug, Clone, Copy, Default)]
pub struct ColumnwiseDictionaryUpdate;

/// Per-atom step weights `‖wᵢ‖²`.
pub fn column_weights(w: &Mat) -> Vec<f64> {
    w.columns().into_iter().map(|c| c.dot(&c)).collect()
}

/// One sweep of the columnwise update.
pub fn columnwise_dictionary_sweep(inst: &SdlInstance, w: &Mat, d_prev: &Mat) -> Mat {
    let mut d = d_prev.clone();
    // residual R = D Wᵀ - I, kept current after every column
    let mut r = inst.residual(w, &d);
    let weights = column_weights(w);
    for (i, &li) in weights.iter().enumerate() {
        if li == 0.0 {
            continue;
        }
        let support: Vec<(usize, f64)> = w
            .column(i)
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(j, v)| (j, *v))
            .collect();
        let mut grad = ndarray::Array1::<f64>::zeros(d.nrows());
        for &(j, v) in &support {
            grad.scaled_add(v, &r.column(j));
        }
        let old = d.column(i).to_owned();
        let mut col = &old - &(grad / li);
        let norm = col.dot(&col).sqrt();
        if norm > 0.0 && norm.is_finite() {
            col /= norm;
        } else {
            col.fill(0.0);
            col[0] = 1.0;
        }
        let change = &col - &old;
        for &(j, v) in &support {
            r.column_mut(j).scaled_add(v, &change);
        }
        d.column_mut(i).assign(&col);
    }
    d
}

impl BlockUpdate<SdlInstance> for ColumnwiseDictionaryUpdate {
    fn update(
        &mut self,
        problem: &SdlInstance,
        _config: &IpadConfig,
        block: Block,
        u_prev: &Mat,
        other: &Mat,
        _t: usize,
    ) -> Result<BlockOutcome> {
        if block != Block::Y {
            return Err(IpadError::Config("the columnwise update is for the dictionary".into()));
        }
        let d = columnwise_dictionary_sweep(problem, other, u_prev);
        Ok(unaccounted(d, u_prev, 1, f64::NAN))
    }
}

/// Named solver variants; the names are stable identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "palm")]
    Palm,
    #[serde(rename = "mpalm")]
    Mpalm,
    #[serde(rename = "inv")]
    Inv,
    #[serde(rename = "ipad-pith")]
    IpadPith,
    #[serde(rename = "ipad-admm")]
    IpadAdmm,
    #[serde(rename = "ipad-p2a")]
    IpadP2a,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::Palm,
        Variant::Mpalm,
        Variant::Inv,
        Variant::IpadPith,
        Variant::IpadAdmm,
        Variant::IpadP2a,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Palm => "palm",
            Variant::Mpalm => "mpalm",
            Variant::Inv => "inv",
            Variant::IpadPith => "ipad-pith",
            Variant::IpadAdmm => "ipad-admm",
            Variant::IpadP2a => "ipad-p2a",
        }
    }

    /// Whether every block goes through the inexact acceptance test.
    pub fn is_ipad(self) -> bool {
        matches!(self, Variant::IpadPith | Variant::IpadAdmm | Variant::IpadP2a)
    }

    pub fn preset(self) -> VariantPreset {
        let (w_scheme, d_scheme) = match self {
            Variant::Palm => (WScheme::ProxLinear, DScheme::ProxLinear),
            Variant::Mpalm => (WScheme::ProxLinear, DScheme::ColumnwisePalm),
            Variant::Inv => (WScheme::ProxLinear, DScheme::LinearSystemProject),
            Variant::IpadPith => (WScheme::Pith { max_steps: 20 }, DScheme::ProxLinear),
            Variant::IpadAdmm => (WScheme::ProxLinear, DScheme::Admm),
            Variant::IpadP2a => (WScheme::Pith { max_steps: 2 }, DScheme::Admm),
        };
        VariantPreset { variant: self, w_scheme, d_scheme }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = IpadError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == key)
            .ok_or_else(|| {
                let names: Vec<_> = Variant::ALL.iter().map(|v| v.name()).collect();
                IpadError::Config(format!("unknown variant {s:?}; expected one of {}", names.join(", ")))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WScheme {
    ProxLinear,
    Pith { max_steps: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DScheme {
    ProxLinear,
    Admm,
    LinearSystemProject,
    ColumnwisePalm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariantPreset {
    pub variant: Variant,
    pub w_scheme: WScheme,
    pub d_scheme: DScheme,
}

/// Everything a variant run needs besides the problem and the start point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantSettings {
    pub variant: Variant,
    pub ipad: IpadConfig,
    /// Step weight multiplier `γ` of the plain prox-linear updates.
    pub palm_gamma: f64,
    pub pith: PithConfig,
    pub admm: AdmmConfig,
}

/// Error constant and proximal weight of a prox-linear step inside the
/// inexact method: `C = 1.01 L_block`, `η = 2.05 L_block`. The step is
/// accepted at once since its error is at most `L_block ‖Δ‖`.
pub fn prox_linear_block(factor: f64) -> BlockConfig {
    BlockConfig {
        c: Schedule::Curvature { factor: 1.01, floor: 0.0 },
        eta: Schedule::Curvature { factor, floor: 1e-3 },
        prox_weight: ProxWeight::Eta,
        max_inner: 0,
    }
}

/// Default `γ`, also the `η / L_block` ratio of prox-linear blocks inside the
/// inexact variants.
pub const DEFAULT_GAMMA: f64 = 2.05;

impl VariantSettings {
    /// Defaults for a variant.
    pub fn preset(variant: Variant) -> Self {
        let mut ipad = IpadConfig::default();
        let pith = PithConfig::default();
        let admm = AdmmConfig::default();
        let preset = variant.preset();
        if let WScheme::Pith { max_steps } = preset.w_scheme {
            ipad.x = BlockConfig {
                c: Schedule::constant(1.0),
                eta: Schedule::constant(2.5),
                prox_weight: ProxWeight::Inner,
                max_inner: max_steps,
            };
        } else if variant.is_ipad() {
            ipad.x = prox_linear_block(DEFAULT_GAMMA);
        }
        match preset.d_scheme {
            DScheme::Admm => {
                ipad.y = BlockConfig {
                    c: Schedule::constant(1.0),
                    eta: Schedule::constant(2.5),
                    prox_weight: ProxWeight::Inner,
                    max_inner: admm.max_steps,
                };
            }
            DScheme::ProxLinear if variant.is_ipad() => ipad.y = prox_linear_block(DEFAULT_GAMMA),
            _ => {}
        }
        if variant == Variant::IpadP2a {
            // Two PITH steps are a fixed budget, not a tolerance: steps that
            // miss the error test are flagged and the run goes on.
            ipad.on_exhausted = ExhaustionPolicy::Continue;
        }
        let pith = match preset.w_scheme {
            WScheme::Pith { max_steps } => PithConfig { max_steps, ..pith },
            WScheme::ProxLinear => pith,
        };
        Self { variant, ipad, palm_gamma: DEFAULT_GAMMA, pith, admm }
    }

    pub fn validate(&self) -> Result<()> {
        self.ipad.validate()?;
        self.pith.validate()?;
        self.admm.validate()?;
        if !(self.palm_gamma > 0.0) || !self.palm_gamma.is_finite() {
            return Err(IpadError::Config(format!("palm_gamma must be positive, got {}", self.palm_gamma)));
        }
        Ok(())
    }
}

/// Runs a variant on a dictionary learning instance.
pub fn run_variant(inst: &SdlInstance, settings: &VariantSettings, init: BlockPoint) -> Result<SolveResult> {
    settings.validate()?;
    inst.check_codes(&init.x)?;
    inst.check_dictionary(&init.y)?;
    let preset = settings.variant.preset();
    let cfg = &settings.ipad;
    let ipad = settings.variant.is_ipad();

    let mut hold_x = Hold;
    let mut hold_y = Hold;
    let mut pith = Pith::new(settings.pith)?;
    let mut admm = AdmmDictionary::new(settings.admm)?;
    let mut palm = ProxLinearUpdate { gamma: settings.palm_gamma };
    let mut palm_d = palm;
    let mut inv = InvDictionaryUpdate;
    let mut columns = ColumnwiseDictionaryUpdate;

    let mut inexact_w;
    let update_x: &mut dyn BlockUpdate<SdlInstance> = match preset.w_scheme {
        WScheme::Pith { .. } => {
            inexact_w = InexactUpdate::new(&mut pith);
            &mut inexact_w
        }
        WScheme::ProxLinear if ipad => {
            inexact_w = InexactUpdate::new(&mut hold_x);
            &mut inexact_w
        }
        WScheme::ProxLinear => &mut palm,
    };
    let mut inexact_d;
    let update_y: &mut dyn BlockUpdate<SdlInstance> = match preset.d_scheme {
        DScheme::Admm => {
            inexact_d = InexactUpdate::new(&mut admm);
            &mut inexact_d
        }
        DScheme::ProxLinear if ipad => {
            inexact_d = InexactUpdate::new(&mut hold_y);
            &mut inexact_d
        }
        DScheme::ProxLinear => &mut palm_d,
        DScheme::LinearSystemProject => &mut inv,
        DScheme::ColumnwisePalm => &mut columns,
    };
    solve_alternating(inst, cfg, update_x, update_y, init)
}

/// PALM with `settings.palm_gamma`.
pub fn palm_solve(inst: &SdlInstance, settings: &VariantSettings, init: BlockPoint) -> Result<SolveResult> {
    run_variant(inst, &VariantSettings { variant: Variant::Palm, ..settings.clone() }, init)
}

/// Prox-linear codes, linear-system-then-project dictionary.
pub fn inv_solve(inst: &SdlInstance, settings: &VariantSettings, init: BlockPoint) -> Result<SolveResult> {
    run_variant(inst, &VariantSettings { variant: Variant::Inv, ..settings.clone() }, init)
}

/// Prox-linear codes, columnwise dictionary sweeps.
pub fn mpalm_solve(inst: &SdlInstance, settings: &VariantSettings, init: BlockPoint) -> Result<SolveResult> {
    run_variant(inst, &VariantSettings { variant: Variant::Mpalm, ..settings.clone() }, init)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert_eq!("IPAD_ADMM".parse::<Variant>().unwrap(), Variant::IpadAdmm);
        assert!("ksvd".parse::<Variant>().is_err());
    }

    #[test]
    fn p2a_uses_two_pith_steps() {
        let s = VariantSettings::preset(Variant::IpadP2a);
        assert_eq!(s.ipad.x.max_inner, 2);
        assert_eq!(Variant::IpadP2a.preset().w_scheme, WScheme::Pith { max_steps: 2 });
        for v in Variant::ALL {
            assert!(VariantSettings::preset(v).validate().is_ok(), "{v}");
        }
    }

    #[test]
    fn columnwise_weights() {
        let w = array![[2.0, 0.0], [0.0, 3.0]];
        assert_eq!(column_weights(&w), vec![4.0, 9.0]);
    }
}
