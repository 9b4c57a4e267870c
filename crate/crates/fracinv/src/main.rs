//! `fracinv`: forward/inverse solvers for time-fractional diffusion with
//! single-point observations.

use fracinv::fracops::TimeGrid;
use fracinv::harness::{
    self, build_instance, fmt_float, invert, parse_config, read_trace_csv, solve_forward,
    write_field_csv, write_trace_csv,
};
use fracinv::inverse::InverseError;
use fracinv::mlf::{mittag_leffler, MlParams};
use fracinv::{forward, harness::RunError};

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "fracinv", about = "Time-fractional diffusion: forward solves, single-point inversion, sweeps")]
struct Cli {
    /// Suppress progress output on stderr.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the Mittag-Leffler function E_{alpha,beta}(z).
    Ml(MlArgs),
    /// Print the eigenvalues of the assembled operator as n,lambda CSV.
    Spectrum {
        #[arg(long)]
        config: PathBuf,
    },
    /// Solve the configured forward problem and write field/trace/report.
    Forward {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reconstruct f(t) of a source problem from a trace CSV.
    InvertSource(InvertArgs),
    /// Reconstruct f(t) of a potential problem from a trace CSV.
    InvertPotential(InvertArgs),
    /// Run a sweep config: per-point run directories plus sweep.csv.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Args)]
struct MlArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    beta: f64,
    /// Single evaluation point.
    #[arg(long, conflicts_with = "grid", allow_hyphen_values = true)]
    z: Option<f64>,
    /// Evaluation grid start:stop:n.
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
}

#[derive(Args)]
struct InvertArgs {
    #[arg(long)]
    config: PathBuf,
    /// Observation trace CSV (t,u_x0) on the config's time grid.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, RunError> {
    match cli.command {
        Command::Ml(args) => {
            let params = MlParams::new(args.alpha, args.beta)
                .map_err(fracinv::forward::SolveError::from)?;
            println!("z,value");
            match (&args.z, &args.grid) {
                (Some(z), _) => {
                    let v = mittag_leffler(params, *z)
                        .map_err(fracinv::forward::SolveError::from)?;
                    println!("{},{}", fmt_float(*z), fmt_float(v));
                }
                (None, Some(grid)) => {
                    let parts: Vec<&str> = grid.split(':').collect();
                    if parts.len() != 3 {
                        eprintln!("--grid expects start:stop:n");
                        return Ok(ExitCode::from(2));
                    }
                    let start: f64 = parts[0].parse().unwrap_or(f64::NAN);
                    let stop: f64 = parts[1].parse().unwrap_or(f64::NAN);
                    let n: usize = parts[2].parse().unwrap_or(0);
                    if !start.is_finite() || !stop.is_finite() || n < 2 {
                        eprintln!("--grid expects start:stop:n with n >= 2");
                        return Ok(ExitCode::from(2));
                    }
                    for i in 0..n {
                        let z = start + (stop - start) * i as f64 / (n - 1) as f64;
                        let v = mittag_leffler(params, z)
                            .map_err(fracinv::forward::SolveError::from)?;
                        println!("{},{}", fmt_float(z), fmt_float(v));
                    }
                }
                (None, None) => {
                    eprintln!("provide --z or --grid start:stop:n");
                    return Ok(ExitCode::from(2));
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Spectrum { config } => {
            let cfg = parse_config(&config)?;
            let inst = build_instance(&cfg)?;
            println!("n,lambda");
            for (n, lambda) in inst.basis.lambdas().iter().enumerate() {
                println!("{},{}", n + 1, fmt_float(*lambda));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Forward { config, out } => {
            let cfg = parse_config(&config)?;
            let inst = build_instance(&cfg)?;
            let report = solve_forward(&cfg, &inst)?;
            std::fs::create_dir_all(&out)?;
            write_field_csv(&out.join("field.csv"), &report)?;
            let trace = forward::observe(&report.field, cfg.x0)?;
            write_trace_csv(&out.join("trace.csv"), &trace, "t,u_x0")?;
            let report_path = out.join("report.txt");
            let residuals = report
                .contraction_residuals
                .iter()
                .map(|r| fmt_float(*r))
                .collect::<Vec<_>>()
                .join(";");
            std::fs::write(
                &report_path,
                format!(
                    "picard_iterations = {}\nspectral_tail = {}\nn_modes = {}\ncontraction_residuals = {}\n",
                    report.picard_iterations,
                    fmt_float(report.spectral_tail),
                    inst.basis.n_modes(),
                    residuals,
                ),
            )?;
            if report.spectral_tail > 1e-6 && !cli.quiet {
                eprintln!(
                    "warning: spectral tail {:.3e} above 1e-6; raise n_modes",
                    report.spectral_tail
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::InvertSource(args) | Command::InvertPotential(args) => {
            let cfg = parse_config(&args.config)?;
            let inst = build_instance(&cfg)?;
            let grid = TimeGrid::new(cfg.t_final, cfg.n_steps, cfg.alpha)?;
            let data = read_trace_csv(&args.data, grid)?;
            match invert(&cfg, &inst, &data) {
                Ok(result) => {
                    std::fs::create_dir_all(&args.out)?;
                    write_trace_csv(&args.out.join("f_hat.csv"), &result.f_hat, "t,f")?;
                    write_trace_csv(
                        &args.out.join("residual.csv"),
                        &result.residual_trace,
                        "t,residual",
                    )?;
                    std::fs::write(
                        args.out.join("report.txt"),
                        format!(
                            "floor_margin = {}\nmax_inner_iterations = {}\n",
                            fmt_float(result.floor_margin),
                            result
                                .diagnostics
                                .iter()
                                .map(|d| d.inner_iterations)
                                .max()
                                .unwrap_or(0),
                        ),
                    )?;
                    Ok(ExitCode::SUCCESS)
                }
                Err(RunError::Inverse(InverseError::FloorViolation {
                    node,
                    time,
                    value,
                    delta,
                })) => {
                    eprintln!(
                        "floor violation at t = {time} (node {node}): |denominator| = {value:e} < delta = {delta:e}"
                    );
                    Ok(ExitCode::from(3))
                }
                Err(other) => Err(other),
            }
        }
        Command::Sweep { config, out, seed } => {
            let mut cfg = parse_config(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let out_root = out
                .or_else(|| cfg.out_dir.clone())
                .or_else(|| std::env::var("FRACINV_OUT_ROOT").ok().map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("fracinv-out"));
            let summary = harness::run(&cfg, &out_root)?;
            if !cli.quiet {
                for row in &summary.rows {
                    eprintln!("run {:04}: {}", row.index, row.status);
                }
                eprintln!("sweep table: {}", summary.sweep_csv.display());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
