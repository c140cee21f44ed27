use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, ValueEnum};

use diffuse_poisson::harness::{self, ExperimentConfig, Method, NormKind, SolverOverrides};
use diffuse_poisson::{BandProfile, ChargeSet, Error};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Regularized,
    Trilinear,
    Both,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BandArg {
    /// Transition rescaled to meet both plateaus (continuous permittivity).
    Continuous,
    /// Unscaled tanh, leaving small jumps at the shell radii.
    Published,
}

/// Regularized Poisson solver for point charges in a diffuse dielectric,
/// run on the [-10, 10]^3 benchmark box.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    /// Nodes per axis, comma separated.
    #[arg(long = "n", value_delimiter = ',', default_value = "50,100,200,400")]
    n: Vec<usize>,

    #[arg(long, value_enum, default_value = "both")]
    method: MethodArg,

    /// Inner shell radius.
    #[arg(long, default_value_t = 2.0)]
    ri: f64,

    /// Outer shell radius.
    #[arg(long, default_value_t = 5.0)]
    re: f64,

    /// Steepness of the tanh transition.
    #[arg(long, default_value_t = 6.0)]
    k: f64,

    #[arg(long = "eps-in", default_value_t = 1.0)]
    eps_in: f64,

    #[arg(long = "eps-out", default_value_t = 80.0)]
    eps_out: f64,

    #[arg(long, value_enum, default_value = "continuous")]
    band: BandArg,

    /// Charge file with "x y z q" lines. Overrides --q.
    #[arg(long)]
    charges: Option<PathBuf>,

    /// Magnitude of the single charge at the origin.
    #[arg(long, default_value_t = 1.0)]
    q: f64,

    /// Relative residual tolerance for CG.
    #[arg(long)]
    tol: Option<f64>,

    /// CG iteration cap (default 10 N).
    #[arg(long = "max-iter")]
    max_iter: Option<usize>,

    /// Output directory for CSV and field files.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Write the z = 0 slice of each solution.
    #[arg(long)]
    slice: bool,

    /// Write the radial reference profile.
    #[arg(long)]
    profile: bool,

    /// Write full fields as ASCII.
    #[arg(long)]
    field: bool,
}

fn config(args: &Args) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::benchmark(&args.n);
    cfg.method = match args.method {
        MethodArg::Regularized => Method::Regularized,
        MethodArg::Trilinear => Method::Trilinear,
        MethodArg::Both => Method::Both,
    };
    let d = &mut cfg.dielectric;
    d.r_i = args.ri;
    d.r_e = args.re;
    d.k = args.k;
    d.eps_i = args.eps_in;
    d.eps_e = args.eps_out;
    d.profile = match args.band {
        BandArg::Continuous => BandProfile::Continuous,
        BandArg::Published => BandProfile::Published,
    };
    cfg.charges = match &args.charges {
        Some(path) => ChargeSet::from_file(path)
            .with_context(|| format!("reading charges from {}", path.display()))?,
        None => ChargeSet::centered(args.q),
    };
    cfg.solver = SolverOverrides {
        rel_tolerance: args.tol,
        max_iterations: args.max_iter,
        preconditioner: None,
    };
    cfg.output_dir = args.out.clone();
    cfg.emit_slice = args.slice;
    cfg.emit_profile = args.profile;
    cfg.emit_field = args.field;
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = match config(&args) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };

    let study = match harness::convergence_study(&cfg) {
        Ok(s) => s,
        Err(Error::NoConvergence { .. }) => return ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };

    let mut failed = false;
    for run in &study.runs {
        for (name, report) in [("RF", &run.regularized), ("TL", &run.trilinear)] {
            if let Some(r) = report {
                eprintln!(
                    "N={:<4} {name}: {} iterations, residual {:.2e}, {:.2?}{}",
                    run.n,
                    r.iterations,
                    r.final_relative_residual,
                    r.wall_time,
                    if r.converged { "" } else { " (NOT CONVERGED)" }
                );
                failed |= !r.converged;
            }
        }
    }

    println!(
        "{:>5} {:>9} {:>13} {:>5} {:>12} {:>8}",
        "N", "h", "pair", "norm", "value", "order"
    );
    for row in &study.rows {
        if row.norm == NormKind::L2 {
            continue;
        }
        println!(
            "{:>5} {:>9.4} {:>13} {:>5} {:>12.4e} {:>8}",
            row.n,
            row.h,
            row.pair.to_string(),
            row.norm.to_string(),
            row.value,
            row.observed_order
                .map(|o| format!("{o:.2}"))
                .unwrap_or_default()
        );
    }

    if failed {
        eprintln!("error: linear solver did not converge");
        return ExitCode::from(2);
    }
    ExitCode::SUCCESS
}
