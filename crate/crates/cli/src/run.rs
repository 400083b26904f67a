//! Executing configured runs and comparisons.

use std::path::{Path, PathBuf};
use std::time::Instant;

use ipad_core::baselines::{run_variant, Variant};
use ipad_core::data::image::pgm_encode;
use ipad_core::data::{
    add_noise, build_denoise_problem, gen_synthetic, pgm_read, psnr, restore_image, synthetic_init,
    test_scene, GrayImage,
};
use ipad_core::framework::{
    audit_criterion, audit_descent, descent_constants_over, IterationRecord, SolveResult, StepParams,
    Termination,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Mode, RunConfig};
use crate::error::CliError;
use crate::output::{ensure_dir, plot_files, trace_csv, write_file, Summary};

/// Relative slack of the descent audit.
pub const DESCENT_REL_TOL: f64 = 1e-8;

pub struct RunOutput {
    pub result: SolveResult,
    pub summary: Summary,
    /// Noisy input and restored image of a denoising run.
    pub images: Option<(GrayImage, GrayImage)>,
}

impl RunOutput {
    /// 0 on a normal finish, 3 when the solver stalled or hit non-finite values.
    pub fn exit_code(&self) -> i32 {
        match self.result.termination {
            Termination::Stalled | Termination::NonFinite => 3,
            _ => 0,
        }
    }
}

/// Source image of a denoising run: a PGM file or the procedural scene,
/// cropped to a centered square when asked.
pub fn load_clean_image(cfg: &RunConfig) -> Result<GrayImage, CliError> {
    let img = match &cfg.image.path {
        Some(path) => pgm_read(path)?,
        None => test_scene(cfg.image.scene_size, cfg.image.scene_size),
    };
    match cfg.image.crop {
        Some(side) => {
            if side > img.width || side > img.height {
                return Err(CliError::Config(format!(
                    "crop {side} exceeds the {}x{} image",
                    img.width, img.height
                )));
            }
            Ok(img.crop((img.height - side) / 2, (img.width - side) / 2, side, side)?)
        }
        None => Ok(img),
    }
}

/// Descent-audit constant `a` for the variants the audit applies to: the
/// inexact variants use the recorded `η`, `C`; PALM uses its step weight
/// with `C = 0`. mPALM and INV have no such guarantee.
pub fn descent_a(variant: Variant, trace: &[IterationRecord]) -> Option<f64> {
    let steps = trace.iter().filter(|r| r.t > 0).map(StepParams::from_record);
    let (a, _) = match variant {
        v if v.is_ipad() => descent_constants_over(steps, 0.0),
        Variant::Palm => descent_constants_over(steps.map(|p| StepParams { c_x: 0.0, c_y: 0.0, ..p }), 0.0),
        _ => return None,
    };
    a.is_finite().then_some(a)
}

/// Whether the variant records errors that the acceptance test applies to.
pub fn has_error_records(variant: Variant) -> bool {
    variant.is_ipad() || variant == Variant::Palm
}

pub fn execute(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let resolved = cfg.resolved()?;
    let settings = resolved.settings()?;
    let (instance, init, denoise) = match cfg.run.mode {
        Mode::Synth => {
            let data = gen_synthetic(&cfg.synthetic)?;
            (data.instance, synthetic_init(&cfg.synthetic), None)
        }
        Mode::Denoise => {
            let clean = load_clean_image(cfg)?;
            let noisy = add_noise(&clean, cfg.denoise.sigma, cfg.denoise.noise_seed);
            let problem = build_denoise_problem(&noisy, &cfg.denoise)?;
            let init = problem.init.clone();
            (problem.instance.clone(), init, Some((clean, noisy, problem)))
        }
    };
    let start = Instant::now();
    let result = run_variant(&instance, &settings, init)?;
    let total_time_s = if cfg.run.wall_clock { start.elapsed().as_secs_f64() } else { 0.0 };

    let (psnr_noisy, psnr_recovered, images) = match denoise {
        Some((clean, noisy, problem)) => {
            let recovered = restore_image(&problem, &result.point)?;
            (Some(psnr(&clean, &noisy)?), Some(psnr(&clean, &recovered)?), Some((noisy, recovered)))
        }
        None => (None, None, None),
    };
    let variant = cfg.run.variant;
    let criterion = audit_criterion(&result.trace);
    let descent = descent_a(variant, &result.trace)
        .map(|a| (a, audit_descent(&result.trace, a, DESCENT_REL_TOL).violations.len()));
    let (inner_x_total, inner_y_total) = result.total_inner();
    let summary = Summary {
        variant: variant.name().to_string(),
        mode: match cfg.run.mode {
            Mode::Synth => "synth",
            Mode::Denoise => "denoise",
        }
        .to_string(),
        termination: result.termination.label().to_string(),
        outer_iterations: result.outer_iterations(),
        inner_x_total,
        inner_y_total,
        total_time_s,
        final_psi: result.final_psi(),
        psnr_noisy,
        psnr_recovered,
        criterion_violations: if has_error_records(variant) { criterion.violations.len() } else { 0 },
        exhausted_steps: criterion.exhausted.len(),
        descent_violations: descent.map(|d| d.1),
        descent_a: descent.map(|d| d.0),
        seed: settings.ipad.seed,
        config: resolved,
    };
    Ok(RunOutput { result, summary, images })
}

pub fn write_outputs(out: &RunOutput, dir: &Path) -> Result<(), CliError> {
    ensure_dir(dir)?;
    write_file(dir, "trace.csv", &trace_csv(&out.result.trace)?)?;
    let json = serde_json::to_vec_pretty(&out.summary).map_err(|e| CliError::Io(e.to_string()))?;
    write_file(dir, "summary.json", &json)?;
    write_file(dir, "resolved.toml", out.summary.config.to_toml()?.as_bytes())?;
    for (name, bytes) in plot_files(&out.result.trace)? {
        write_file(dir, name, &bytes)?;
    }
    if let Some((noisy, recovered)) = &out.images {
        write_file(dir, "noisy.pgm", &pgm_encode(noisy))?;
        write_file(dir, "recovered.pgm", &pgm_encode(recovered))?;
    }
    Ok(())
}

/// Runs one configuration and writes its outputs into its output directory.
pub fn run(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let out = execute(cfg)?;
    write_outputs(&out, &cfg.run.out)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub variant: String,
    pub outer_iterations: usize,
    pub wall_time_s: f64,
    pub final_psi: f64,
    pub criterion_violations: usize,
    pub termination: String,
    pub psnr_recovered: Option<f64>,
}

/// Worker count for [`compare`]: `IPAD_THREADS` when set, else the number of CPUs.
pub fn worker_count() -> usize {
    std::env::var("IPAD_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs every member (in parallel up to [`worker_count`]) into
/// `out/NN-variant/` and writes `out/compare.csv` with rows in input order.
pub fn compare(members: &[RunConfig], out: &Path) -> Result<(Vec<CompareRow>, i32), CliError> {
    if members.len() < 2 {
        return Err(CliError::Config(format!("compare needs at least 2 runs, got {}", members.len())));
    }
    ensure_dir(out)?;
    let members: Vec<RunConfig> = members
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let mut m = m.clone();
            m.run.out = member_dir(out, i, m.run.variant);
            m
        })
        .collect();
    for m in &members {
        m.settings()?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count())
        .build()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let outputs: Vec<Result<RunOutput, CliError>> = pool.install(|| members.par_iter().map(run).collect());

    let mut rows = Vec::with_capacity(outputs.len());
    let mut code = 0;
    for res in outputs {
        let o = res?;
        code = code.max(o.exit_code());
        rows.push(CompareRow {
            variant: o.summary.variant.clone(),
            outer_iterations: o.summary.outer_iterations,
            wall_time_s: o.summary.total_time_s,
            final_psi: o.summary.final_psi,
            criterion_violations: o.summary.criterion_violations,
            termination: o.summary.termination.clone(),
            psnr_recovered: o.summary.psnr_recovered,
        });
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in &rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    write_file(out, "compare.csv", &bytes)?;
    Ok((rows, code))
}

fn member_dir(out: &Path, index: usize, variant: Variant) -> PathBuf {
    out.join(format!("{:02}-{}", index, variant.name()))
}
