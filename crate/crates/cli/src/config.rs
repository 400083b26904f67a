//! Run configuration: defaults, then a TOML file, then command-line flags.

use std::path::{Path, PathBuf};

use ipad_core::baselines::{Variant, VariantSettings};
use ipad_core::data::{DenoiseSpec, SyntheticSpec};
use ipad_core::framework::{ExhaustionPolicy, Schedule, StopMode};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Synth,
    Denoise,
}

/// Output and bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub mode: Mode,
    pub variant: Variant,
    pub out: PathBuf,
    /// Record elapsed seconds in the trace; off makes trace.csv byte-reproducible.
    pub wall_clock: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { mode: Mode::Synth, variant: Variant::IpadAdmm, out: PathBuf::from("out"), wall_clock: true }
    }
}

/// Outer-loop settings. Unset entries take the variant preset or the mode
/// default (synthetic: 1e-4 on all three changes; denoise: 1e-2 on D).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub max_outer: Option<usize>,
    pub outer_tol: Option<f64>,
    pub stop_mode: Option<StopMode>,
    pub c_x: Option<f64>,
    pub c_y: Option<f64>,
    pub eta_x: Option<f64>,
    pub eta_y: Option<f64>,
    pub max_inner_x: Option<usize>,
    pub max_inner_y: Option<usize>,
    pub abs_error_floor: Option<f64>,
    pub on_exhausted: Option<ExhaustionPolicy>,
    pub palm_gamma: Option<f64>,
    pub time_limit: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct InnerSection {
    pub pith_steps: Option<usize>,
    pub pith_step_scale: Option<f64>,
    pub admm_rho: Option<f64>,
    pub admm_steps: Option<usize>,
}

/// Image source for the denoising mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImageSection {
    /// Binary PGM to denoise; the procedural test scene when unset.
    pub path: Option<PathBuf>,
    /// Side of the centered square crop; the whole image when unset.
    pub crop: Option<usize>,
    /// Side of the procedural scene.
    pub scene_size: usize,
}

impl Default for ImageSection {
    fn default() -> Self {
        Self { path: None, crop: None, scene_size: 128 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    pub solver: SolverSection,
    pub inner: InnerSection,
    pub synthetic: SyntheticSpec,
    pub image: ImageSection,
    pub denoise: DenoiseSpec,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Fills every unset solver and inner entry from the variant preset and the
    /// mode defaults, so the result re-runs without consulting any default.
    pub fn resolved(&self) -> Result<Self, CliError> {
        let settings = self.settings()?;
        let mut out = self.clone();
        let ipad = &settings.ipad;
        out.solver = SolverSection {
            max_outer: Some(ipad.max_outer),
            outer_tol: Some(ipad.outer_tol),
            stop_mode: Some(ipad.stop_mode),
            c_x: constant(&ipad.x.c).or(self.solver.c_x),
            c_y: constant(&ipad.y.c).or(self.solver.c_y),
            eta_x: constant(&ipad.x.eta).or(self.solver.eta_x),
            eta_y: constant(&ipad.y.eta).or(self.solver.eta_y),
            max_inner_x: Some(ipad.x.max_inner),
            max_inner_y: Some(ipad.y.max_inner),
            abs_error_floor: Some(ipad.abs_error_floor),
            on_exhausted: Some(ipad.on_exhausted),
            palm_gamma: Some(settings.palm_gamma),
            time_limit: ipad.time_limit,
        };
        out.inner = InnerSection {
            pith_steps: Some(settings.pith.max_steps),
            pith_step_scale: Some(settings.pith.step_scale),
            admm_rho: settings.admm.rho,
            admm_steps: Some(settings.admm.max_steps),
        };
        Ok(out)
    }

    /// Solver settings for this run: the variant preset with overrides applied.
    pub fn settings(&self) -> Result<VariantSettings, CliError> {
        let mut s = VariantSettings::preset(self.run.variant);
        let (tol, mode, max_outer) = match self.run.mode {
            Mode::Synth => (1e-4, StopMode::Synthetic, 1000),
            Mode::Denoise => (1e-2, StopMode::Real, 200),
        };
        let sv = &self.solver;
        s.ipad.outer_tol = sv.outer_tol.unwrap_or(tol);
        s.ipad.stop_mode = sv.stop_mode.unwrap_or(mode);
        s.ipad.max_outer = sv.max_outer.unwrap_or(max_outer);
        s.ipad.wall_clock = self.run.wall_clock;
        s.ipad.time_limit = sv.time_limit;
        s.ipad.seed = match self.run.mode {
            Mode::Synth => self.synthetic.seed,
            Mode::Denoise => self.denoise.noise_seed,
        };
        if let Some(c) = sv.c_x {
            s.ipad.x.c = Schedule::constant(c);
            s.ipad.x.eta = Schedule::constant(sv.eta_x.unwrap_or(2.5 * c));
        } else if let Some(eta) = sv.eta_x {
            s.ipad.x.eta = Schedule::constant(eta);
        }
        if let Some(c) = sv.c_y {
            s.ipad.y.c = Schedule::constant(c);
            s.ipad.y.eta = Schedule::constant(sv.eta_y.unwrap_or(2.5 * c));
        } else if let Some(eta) = sv.eta_y {
            s.ipad.y.eta = Schedule::constant(eta);
        }
        if let Some(n) = sv.max_inner_x {
            s.ipad.x.max_inner = n;
        }
        if let Some(n) = sv.max_inner_y {
            s.ipad.y.max_inner = n;
        }
        if let Some(f) = sv.abs_error_floor {
            s.ipad.abs_error_floor = f;
        }
        if let Some(p) = sv.on_exhausted {
            s.ipad.on_exhausted = p;
        }
        if let Some(g) = sv.palm_gamma {
            s.palm_gamma = g;
        }
        let inner = &self.inner;
        if let Some(n) = inner.pith_steps {
            s.pith.max_steps = n;
            if matches!(self.run.variant, Variant::IpadPith | Variant::IpadP2a) && sv.max_inner_x.is_none() {
                s.ipad.x.max_inner = n;
            }
        }
        if let Some(scale) = inner.pith_step_scale {
            s.pith.step_scale = scale;
        }
        if inner.admm_rho.is_some() {
            s.admm.rho = inner.admm_rho;
        }
        if let Some(n) = inner.admm_steps {
            s.admm.max_steps = n;
            if self.run.variant == Variant::IpadAdmm || self.run.variant == Variant::IpadP2a {
                if sv.max_inner_y.is_none() {
                    s.ipad.y.max_inner = n;
                }
            }
        }
        s.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(s)
    }
}

fn constant(s: &Schedule) -> Option<f64> {
    match s {
        Schedule::Constant { value } => Some(*value),
        _ => None,
    }
}
