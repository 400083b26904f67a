use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ipad_core::baselines::Variant;
use ipad_core::framework::{audit_criterion, audit_descent, descent_constants_from_trace, ExhaustionPolicy};

mod config;
mod error;
mod output;
mod run;

use config::{Mode, RunConfig};
use error::CliError;

#[derive(Parser)]
#[command(name = "ipad", version, about = "Inexact proximal alternating direction solvers for sparse dictionary learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Learn a dictionary on generated data.
    Synth(SynthArgs),
    /// Denoise a grayscale image with a learned patch dictionary.
    Denoise(DenoiseArgs),
    /// Recheck the error test and the descent inequality on a trace.csv.
    Audit(AuditArgs),
    /// Run several configurations and tabulate them in compare.csv.
    Compare(CompareArgs),
}

#[derive(Args, Clone, Default)]
struct SolverArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_variant)]
    variant: Option<Variant>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write 0 for elapsed time so traces are byte-reproducible.
    #[arg(long)]
    no_wall_clock: bool,
    #[arg(long)]
    max_outer: Option<usize>,
    /// Tolerance of the stop rule.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    c_x: Option<f64>,
    #[arg(long)]
    c_y: Option<f64>,
    #[arg(long)]
    eta_x: Option<f64>,
    #[arg(long)]
    eta_y: Option<f64>,
    #[arg(long)]
    max_inner_x: Option<usize>,
    #[arg(long)]
    max_inner_y: Option<usize>,
    /// Keep going (flagging the step) when an inner budget runs out.
    #[arg(long)]
    continue_on_exhausted: bool,
    #[arg(long)]
    palm_gamma: Option<f64>,
    #[arg(long)]
    pith_steps: Option<usize>,
    #[arg(long)]
    admm_rho: Option<f64>,
    #[arg(long)]
    admm_steps: Option<usize>,
    /// Stop after this many seconds.
    #[arg(long)]
    time_limit: Option<f64>,
}

#[derive(Args, Clone, Default)]
struct SyntheticArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    /// Nonzeros per code row of the ground truth.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    noise_sigma: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Clone, Default)]
struct ImageArgs {
    /// Binary PGM image; the built-in test scene when absent.
    #[arg(long)]
    image: Option<PathBuf>,
    /// Side of a centered square crop.
    #[arg(long)]
    crop: Option<usize>,
    /// Side of the built-in test scene.
    #[arg(long)]
    scene_size: Option<usize>,
    /// Noise level in 8-bit units.
    #[arg(long)]
    sigma: Option<f64>,
    /// Penalty in squared 8-bit units; defaults to the value tabulated for sigma.
    #[arg(long)]
    image_lambda: Option<f64>,
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long)]
    atoms: Option<usize>,
    /// Box on code entries in model units.
    #[arg(long, conflicts_with = "no_bound")]
    bound: Option<f64>,
    #[arg(long)]
    no_bound: bool,
    #[arg(long)]
    noise_seed: Option<u64>,
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    data: SyntheticArgs,
}

#[derive(Args)]
struct DenoiseArgs {
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    image: ImageArgs,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long)]
    trace: PathBuf,
    /// Descent constant; computed from the recorded step parameters when absent.
    #[arg(long)]
    a: Option<f64>,
    #[arg(long, default_value_t = run::DESCENT_REL_TOL)]
    rel_tol: f64,
}

#[derive(Args)]
struct CompareArgs {
    /// Member configurations, one run each.
    #[arg(long = "member")]
    members: Vec<PathBuf>,
    /// Run each member once per listed variant.
    #[arg(long, value_delimiter = ',', value_parser = parse_variant)]
    variants: Vec<Variant>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    data: SyntheticArgs,
    #[command(flatten)]
    image: ImageArgs,
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse().map_err(|e: ipad_core::IpadError| e.to_string())
}

fn base_config(path: Option<&PathBuf>) -> Result<RunConfig, CliError> {
    path.map_or_else(|| Ok(RunConfig::default()), |p| RunConfig::load(p))
}

fn apply_solver(cfg: &mut RunConfig, a: &SolverArgs) {
    let s = &mut cfg.solver;
    macro_rules! set {
        ($($dst:expr => $src:expr),* $(,)?) => {$(if let Some(v) = $src { $dst = Some(v); })*};
    }
    set!(
        s.max_outer => a.max_outer,
        s.outer_tol => a.tol,
        s.c_x => a.c_x,
        s.c_y => a.c_y,
        s.eta_x => a.eta_x,
        s.eta_y => a.eta_y,
        s.max_inner_x => a.max_inner_x,
        s.max_inner_y => a.max_inner_y,
        s.palm_gamma => a.palm_gamma,
        s.time_limit => a.time_limit,
        cfg.inner.pith_steps => a.pith_steps,
        cfg.inner.admm_rho => a.admm_rho,
        cfg.inner.admm_steps => a.admm_steps,
    );
    if a.continue_on_exhausted {
        cfg.solver.on_exhausted = Some(ExhaustionPolicy::Continue);
    }
    if let Some(v) = a.variant {
        cfg.run.variant = v;
    }
    if let Some(o) = &a.out {
        cfg.run.out = o.clone();
    }
    if a.no_wall_clock {
        cfg.run.wall_clock = false;
    }
}

fn apply_synthetic(cfg: &mut RunConfig, a: &SyntheticArgs) {
    let s = &mut cfg.synthetic;
    macro_rules! set {
        ($($dst:expr => $src:expr),* $(,)?) => {$(if let Some(v) = $src { $dst = v; })*};
    }
    set!(s.n => a.n, s.m => a.m, s.p => a.p, s.k => a.k, s.noise_sigma => a.noise_sigma, s.lambda => a.lambda, s.seed => a.seed);
}

fn apply_image(cfg: &mut RunConfig, a: &ImageArgs) {
    if let Some(p) = &a.image {
        cfg.image.path = Some(p.clone());
    }
    if let Some(c) = a.crop {
        cfg.image.crop = Some(c);
    }
    if let Some(s) = a.scene_size {
        cfg.image.scene_size = s;
    }
    let d = &mut cfg.denoise;
    if let Some(v) = a.sigma {
        d.sigma = v;
    }
    if let Some(v) = a.image_lambda {
        d.lambda = Some(v);
    }
    if let Some(v) = a.stride {
        d.stride = v;
    }
    if let Some(v) = a.atoms {
        d.atoms = v;
    }
    if let Some(v) = a.bound {
        d.bound = Some(v);
    }
    if a.no_bound {
        d.bound = None;
    }
    if let Some(v) = a.noise_seed {
        d.noise_seed = v;
    }
}

fn single_run(mut cfg: RunConfig, mode: Mode) -> Result<i32, CliError> {
    cfg.run.mode = mode;
    let out = run::run(&cfg)?;
    let s = &out.summary;
    println!(
        "{} {}: {} after {} outer steps, psi {:.6e}, {:.2}s",
        s.mode, s.variant, s.termination, s.outer_iterations, s.final_psi, s.total_time_s
    );
    if let (Some(noisy), Some(rec)) = (s.psnr_noisy, s.psnr_recovered) {
        println!("psnr noisy {noisy:.2} dB, recovered {rec:.2} dB");
    }
    println!("criterion violations {}, descent violations {}", s.criterion_violations, match s.descent_violations {
        Some(v) => v.to_string(),
        None => "n/a".into(),
    });
    println!("wrote {}", cfg.run.out.display());
    Ok(out.exit_code())
}

fn audit(args: &AuditArgs) -> Result<i32, CliError> {
    let trace = output::read_trace(&args.trace)?;
    // Steps without recorded errors (mPALM, INV) carry NaN and are skipped.
    let with_errors: Vec<_> = trace
        .iter()
        .filter(|r| r.t == 0 || (r.ex_norm.is_finite() && r.ey_norm.is_finite()))
        .cloned()
        .collect();
    let crit = audit_criterion(&with_errors);
    println!(
        "criterion: {} steps checked, {} violations, {} exhausted, {} without recorded errors",
        crit.checked,
        crit.violations.len(),
        crit.exhausted.len(),
        trace.len() - with_errors.len()
    );
    if !crit.violations.is_empty() {
        println!("criterion violations at t = {:?}", crit.violations);
    }
    let a = args.a.unwrap_or_else(|| descent_constants_from_trace(&trace).0);
    let mut bad = !crit.violations.is_empty();
    if a.is_finite() {
        let d = audit_descent(&trace, a, args.rel_tol);
        println!("descent: a = {a:.6e}, {} steps checked, {} violations", d.checked, d.violations.len());
        if !d.violations.is_empty() {
            println!("descent violations at t = {:?}", d.violations);
            bad = true;
        }
    } else {
        println!("descent: no constants recorded in the trace; pass --a to check");
    }
    Ok(if bad { 3 } else { 0 })
}

fn compare(args: &CompareArgs) -> Result<i32, CliError> {
    let mut bases = if args.members.is_empty() {
        vec![base_config(args.solver.config.as_ref())?]
    } else {
        args.members.iter().map(|p| RunConfig::load(p)).collect::<Result<Vec<_>, _>>()?
    };
    for cfg in &mut bases {
        apply_solver(cfg, &args.solver);
        apply_synthetic(cfg, &args.data);
        apply_image(cfg, &args.image);
        if let Some(mode) = args.mode {
            cfg.run.mode = mode;
        }
    }
    let members: Vec<RunConfig> = if args.variants.is_empty() {
        bases
    } else {
        bases
            .iter()
            .flat_map(|b| {
                args.variants.iter().map(move |&v| {
                    let mut c = b.clone();
                    c.run.variant = v;
                    c
                })
            })
            .collect()
    };
    let out = args.solver.out.clone().unwrap_or_else(|| members.first().map(|m| m.run.out.clone()).unwrap_or_default());
    let (rows, code) = run::compare(&members, &out)?;
    println!("{:<10} {:>6} {:>10} {:>14} {:>10} {}", "variant", "outer", "time_s", "final_psi", "crit_viol", "termination");
    for r in &rows {
        println!(
            "{:<10} {:>6} {:>10.2} {:>14.6e} {:>10} {}",
            r.variant, r.outer_iterations, r.wall_time_s, r.final_psi, r.criterion_violations, r.termination
        );
    }
    println!("wrote {}", out.join("compare.csv").display());
    Ok(code)
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Synth(a) => {
            let mut cfg = base_config(a.solver.config.as_ref())?;
            apply_solver(&mut cfg, &a.solver);
            apply_synthetic(&mut cfg, &a.data);
            single_run(cfg, Mode::Synth)
        }
        Command::Denoise(a) => {
            let mut cfg = base_config(a.solver.config.as_ref())?;
            apply_solver(&mut cfg, &a.solver);
            apply_image(&mut cfg, &a.image);
            single_run(cfg, Mode::Denoise)
        }
        Command::Audit(a) => audit(&a),
        Command::Compare(a) => compare(&a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use clap::CommandFactory;

    use super::*;

    #[test]
    fn argument_definitions_are_consistent() {
        Cli::command().debug_assert();
    }
}
