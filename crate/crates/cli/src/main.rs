use clap::{Parser, Subcommand};
use latgas_cli::commands;
use latgas_cli::config::RunConfig;
use latgas_cli::runner::resolve_threads;
use latgas_cli::CliError;
use std::path::PathBuf;
use std::process::ExitCode;

const CONFIG_REFERENCE: &str = "\
CONFIG FILE (flat `key = value` with [section] headers; `#`/`;` comments):

  [model]      theta, alpha, beta (exchange-rate parameters; theta > 0,
               theta+alpha > 0, theta+beta > 0, theta+alpha+beta > 0),
               n (lattice scale N; sites -N..2N)
  [initial]    profile = step | constant | piecewise
               step:      left, bulk, right       (density per region)
               constant:  value
               piecewise: points = u:v, u:v, ...  (jumps only at u = 0, 1)
  [simulate]   t_end, snapshots (comma list in [0, t_end]), replicas,
               seed, block_l (interface-trace block radius, <= N/4),
               averaging_k (Cesàro truncation depth, 3..N/2)
  [pde]        cells (per region), safety (CFL factor in (0, 0.5]),
               snapshots (defaults to [simulate].snapshots)
  [gibbs]      interval (<= 16), lambdas, samples, tv_tolerance,
               lln_blocks, lln_densities, lln_samples, lln_delta
  [ensembles]  rho_min, rho_max, rho_step, lambda_min, lambda_max,
               lambda_step
  [output]     dir

EXIT CODES: 0 success; 2 invalid configuration or arguments; 1 runtime
failure (including failed statistical checks and failed comparisons).

THREADS: --threads, else LATGAS_THREADS, else all available cores.
Outputs are byte-identical for any thread count.";

#[derive(Parser)]
#[command(
    name = "latgas",
    version,
    about = "Lattice gas with reservoir coupling: exact sampling, event-driven dynamics, and the macroscopic interface solver",
    after_long_help = CONFIG_REFERENCE
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run replicas of the particle system; emit replica-mean profiles,
    /// interface traces with potential gaps, and a manifest
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (defaults to [output].dir)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Base seed (defaults to [simulate].seed)
        #[arg(long)]
        seed: Option<u64>,
        /// Replica count (defaults to [simulate].replicas)
        #[arg(long)]
        replicas: Option<usize>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Solve the macroscopic system; emit profiles and a residual report
    Pde {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also solve on a doubled grid and report self-convergence
        #[arg(long)]
        refine: bool,
    },
    /// Time-integrated pairing distance between profile sets
    Compare {
        /// Simulated profile CSV (site-resolved)
        #[arg(long)]
        sim: PathBuf,
        /// Solver profile CSV (cell-resolved)
        #[arg(long)]
        pde: PathBuf,
        /// Traces CSV for the interface potential gaps
        #[arg(long)]
        traces: Option<PathBuf>,
        /// Lattice scale N (defaults to the sim file's metadata)
        #[arg(long)]
        n: Option<usize>,
        /// Cesàro truncation depth (defaults to the sim file's metadata)
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 0.05)]
        tol_distance: f64,
        #[arg(long, default_value_t = 0.1)]
        tol_gap: f64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Tabulate pressures, densities, potentials, free energies, and flux
    Ensembles {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sampler-vs-enumeration and concentration checks
    GibbsCheck {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn main() -> ExitCode {
    match dispatch() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

fn dispatch() -> Result<(), CliError> {
    match Cli::parse().command {
        Command::Simulate { config, out, seed, replicas, threads } => {
            let cfg = RunConfig::from_file(&config)?;
            let out_dir = out.unwrap_or_else(|| cfg.output_dir.clone());
            let seed = seed.unwrap_or(cfg.simulate.seed);
            let replicas = replicas.unwrap_or(cfg.simulate.replicas);
            let threads = resolve_threads(threads);
            let outputs = commands::simulate::run(&cfg, seed, replicas, threads, &out_dir)?;
            println!("wrote {}", outputs.profiles.display());
            println!("wrote {}", outputs.traces.display());
            println!("wrote {}", outputs.manifest.display());
            Ok(())
        }
        Command::Pde { config, out, refine } => {
            let cfg = RunConfig::from_file(&config)?;
            let out_dir = out.unwrap_or_else(|| cfg.output_dir.clone());
            let outputs = commands::pde::run(&cfg, refine, &out_dir)?;
            println!("wrote {}", outputs.profiles.display());
            println!("wrote {}", outputs.report.display());
            println!(
                "mass drift {:.3e}, max interface potential mismatch {:.3e}",
                outputs.mass_drift, outputs.max_lambda_mismatch
            );
            if let Some(ratios) = &outputs.refine_ratios {
                for (name, v) in ratios {
                    println!("refine {name}: {v:.4}");
                }
            }
            Ok(())
        }
        Command::Compare { sim, pde, traces, n, k, tol_distance, tol_gap, out } => {
            let report = commands::compare::run(&commands::compare::CompareArgs {
                sim: &sim,
                pde: &pde,
                traces: traces.as_deref(),
                n,
                k,
                tol_distance,
                tol_gap,
                out: &out,
            })?;
            for (g, d) in &report.distances {
                println!("{g}: {d:.6}");
            }
            println!(
                "max distance {:.6} (tolerance {tol_distance}): {}",
                report.max_distance,
                if report.distance_pass { "PASS" } else { "FAIL" }
            );
            if let (Some((g0, g1)), Some(pass)) = (report.final_gaps, report.gap_pass) {
                println!(
                    "final potential gaps {g0:.4}, {g1:.4} (tolerance {tol_gap}): {}",
                    if pass { "PASS" } else { "FAIL" }
                );
            }
            println!("wrote {}", report.report_path.display());
            if report.distance_pass && report.gap_pass.unwrap_or(true) {
                Ok(())
            } else {
                Err(CliError::Runtime("comparison outside tolerances".into()))
            }
        }
        Command::Ensembles { config, out } => {
            let cfg = RunConfig::from_file(&config)?;
            let out_dir = out.unwrap_or_else(|| cfg.output_dir.clone());
            let outputs = commands::ensembles::run(&cfg, &out_dir)?;
            println!("wrote {}", outputs.rho_table.display());
            println!("wrote {}", outputs.lambda_table.display());
            Ok(())
        }
        Command::GibbsCheck { config, out, threads } => {
            let cfg = RunConfig::from_file(&config)?;
            let out_dir = out.unwrap_or_else(|| cfg.output_dir.clone());
            let threads = resolve_threads(threads);
            let outputs = commands::gibbs_check::run(&cfg, threads, &out_dir)?;
            for (lambda, tv) in &outputs.tv_results {
                println!("lambda {lambda}: TV {tv:.5}");
            }
            println!("wrote {}", outputs.report.display());
            if outputs.all_passed {
                println!("all checks passed");
                Ok(())
            } else {
                Err(CliError::Runtime("gibbs-check found failures (see report)".into()))
            }
        }
    }
}
