//! `quantumness` command-line tool.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or input error.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use quantumness::majorana::{constellation, q_function, ColorMap};
use quantumness::multipole::{
    averaged_entanglement, coherent_average_value, entropy_upper_bound, linear_entropy, linear_entropy_multipole,
    multipoles,
};
use quantumness::numeric::fmt15;
use quantumness::optimize::{maximize_average_entanglement, minimize_average_entanglement, OptimizerConfig};
use quantumness::oracle::mc_average_entanglement;
use quantumness::states::{read_state_file, SpinState};
use quantumness::symmetry::{detect_point_group, DEFAULT_TOL};

/// Environment variable with the default number of worker threads.
const THREADS_ENV: &str = "QUANTUMNESS_THREADS";
/// `verify` fails beyond this many standard errors.
const VERIFY_SIGMAS: f64 = 5.0;
const ATLAS_MAX_TWICE_SPIN: u32 = 30;

#[derive(Parser)]
#[command(name = "quantumness", version, about = "SU(2)-averaged entanglement of spin states")]
struct Cli {
    /// Worker threads (default: $QUANTUMNESS_THREADS, else all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Averaged and fixed-partition entanglement, multipole weights.
    Compute {
        state_file: PathBuf,
        /// Print JSON instead of key = value lines.
        #[arg(long)]
        json: bool,
    },
    /// Search for states of maximal (or minimal) averaged entanglement.
    Optimize {
        #[arg(long)]
        twice_spin: u32,
        /// Default: max(50, 20 S).
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        max_iterations: Option<usize>,
        #[arg(long)]
        minimize: bool,
        /// Write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Majorana stars and their point-group symmetry.
    Constellation {
        state_file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        /// Write the star CSV here instead of stdout.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Write the symmetry JSON here instead of stdout.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Sample the Q function on a (θ, φ) grid.
    Qfunc {
        state_file: PathBuf,
        #[arg(long, default_value_t = 91)]
        ntheta: usize,
        #[arg(long, default_value_t = 181)]
        nphi: usize,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long, value_enum, default_value_t = MapArg::Heat)]
        colormap: MapArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the closed form with a Monte Carlo average over rotations.
    Verify {
        state_file: PathBuf,
        #[arg(long, default_value_t = 200_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Table of maximal, coherent and bound values per spin.
    Atlas {
        #[arg(long, default_value_t = 12)]
        max_twice_spin: u32,
        /// Default: max(50, 20 S) per spin.
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Ppm,
}

#[derive(Clone, Copy, ValueEnum)]
enum MapArg {
    Heat,
    Gray,
}

enum Failure {
    /// Bad input or I/O: exit 2.
    Input(String),
    /// A check did not pass: exit 1.
    Check(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Input(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = configure_threads(cli.threads) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Check(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(1)
        }
    }
}

fn configure_threads(flag: Option<usize>) -> Result<(), String> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => Some(v.trim().parse::<usize>().map_err(|_| format!("{THREADS_ENV}={v} is not a thread count"))?),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err("thread count must be at least 1".into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn run(cmd: Command) -> Outcome {
    match cmd {
        Command::Compute { state_file, json } => compute(&load(&state_file)?, json),
        Command::Optimize { twice_spin, restarts, seed, max_iterations, minimize, out } => {
            let mut cfg = OptimizerConfig { seed, ..OptimizerConfig::for_spin(twice_spin) };
            if let Some(r) = restarts {
                cfg.restarts = r;
            }
            if let Some(m) = max_iterations {
                cfg.max_iterations = m;
            }
            optimize(twice_spin, &cfg, minimize, out.as_deref())
        }
        Command::Constellation { state_file, tol, csv, json } => {
            stars(&load(&state_file)?, tol, csv.as_deref(), json.as_deref())
        }
        Command::Qfunc { state_file, ntheta, nphi, format, colormap, out } => {
            let grid = q_function(&load(&state_file)?, ntheta, nphi)?;
            let bytes = match format {
                Format::Csv => grid.to_csv().into_bytes(),
                Format::Ppm => grid.to_ppm(match colormap {
                    MapArg::Heat => ColorMap::Heat,
                    MapArg::Gray => ColorMap::Gray,
                }),
            };
            emit(out.as_deref(), &bytes)
        }
        Command::Verify { state_file, samples, seed } => verify(&load(&state_file)?, samples, seed),
        Command::Atlas { max_twice_spin, restarts, seed, out } => atlas(max_twice_spin, restarts, seed, out.as_deref()),
    }
}

fn load(path: &Path) -> Result<SpinState, Failure> {
    read_state_file(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn emit(path: Option<&Path>, bytes: &[u8]) -> Outcome {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| Failure::Input(format!("{}: {e}", p.display()))),
        None => {
            io::stdout().write_all(bytes)?;
            Ok(())
        }
    }
}

fn compute(state: &SpinState, as_json: bool) -> Outcome {
    let table = multipoles(state);
    let avg = averaged_entanglement(state);
    let fixed = linear_entropy(state);
    let fixed_multipole = linear_entropy_multipole(&table);
    let weights: Vec<f64> = (0..=table.max_rank()).map(|k| table.rank_weight(k)).collect();
    let purity = table.purity();
    let pure = table.check_pure();
    if as_json {
        let doc = json!({
            "twice_spin": state.twice_spin(),
            "averaged_entanglement": avg,
            "linear_entropy": fixed,
            "linear_entropy_multipole": fixed_multipole,
            "coherent_value": coherent_average_value(state.twice_spin()),
            "upper_bound": entropy_upper_bound(state.twice_spin()),
            "rank_weights": weights,
            "purity": purity,
            "pure": pure.is_ok(),
        });
        println!("{}", serde_json::to_string_pretty(&doc)?);
    } else {
        println!("twice_spin = {}", state.twice_spin());
        println!("averaged_entanglement = {}", fmt15(avg));
        println!("linear_entropy = {}", fmt15(fixed));
        println!("linear_entropy_multipole = {}", fmt15(fixed_multipole));
        println!("coherent_value = {}", fmt15(coherent_average_value(state.twice_spin())));
        println!("upper_bound = {}", fmt15(entropy_upper_bound(state.twice_spin())));
        for (k, w) in weights.iter().enumerate() {
            println!("rank_weight[{k}] = {}", fmt15(*w));
        }
        println!("purity = {}", fmt15(purity));
        println!("pure = {}", pure.is_ok());
    }
    if let Err(e) = pure {
        log::warn!("multipole invariants: {e}");
    }
    Ok(())
}

fn optimize(twice_spin: u32, cfg: &OptimizerConfig, minimize: bool, out: Option<&Path>) -> Outcome {
    let report = if minimize {
        minimize_average_entanglement(twice_spin, cfg)?
    } else {
        maximize_average_entanglement(twice_spin, cfg)?
    };
    if let Some(p) = out {
        fs::write(p, report.to_json() + "\n").map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?;
    }
    let c = constellation(&report.best_state);
    let group = detect_point_group(&c, DEFAULT_TOL)?;
    println!("objective = {}", report.objective);
    println!("best_value = {}", fmt15(report.best_value));
    println!("coherent_value = {}", fmt15(coherent_average_value(twice_spin)));
    println!("upper_bound = {}", fmt15(entropy_upper_bound(twice_spin)));
    println!(
        "restarts = {} (converged {}, at best {}, distinct optima {})",
        report.restarts.len(),
        report.restarts.iter().filter(|r| r.converged).count(),
        report.restarts_at_best,
        report.distinct_optima
    );
    println!("symmetry_order = {}", group.order);
    println!("proper_order = {}", group.proper_order);
    println!("continuous = {}", group.continuous);
    print!("{}", c.to_csv());
    Ok(())
}

fn stars(state: &SpinState, tol: f64, csv: Option<&Path>, json: Option<&Path>) -> Outcome {
    let c = constellation(state);
    let report = detect_point_group(&c, tol)?;
    match (csv, json) {
        (None, None) => {
            print!("{}", c.to_csv());
            println!();
            println!("{}", report.to_json());
        }
        _ => {
            if csv.is_none() {
                print!("{}", c.to_csv());
            }
            if json.is_none() {
                println!("{}", report.to_json());
            }
            if let Some(p) = csv {
                emit(Some(p), c.to_csv().as_bytes())?;
            }
            if let Some(p) = json {
                emit(Some(p), (report.to_json() + "\n").as_bytes())?;
            }
        }
    }
    Ok(())
}

fn verify(state: &SpinState, samples: usize, seed: u64) -> Outcome {
    let exact = averaged_entanglement(state);
    let (mean, err) = mc_average_entanglement(state, samples, seed)?;
    let sigmas = if err > 0.0 { (mean - exact).abs() / err } else if mean == exact { 0.0 } else { f64::INFINITY };
    println!("closed_form = {}", fmt15(exact));
    println!("monte_carlo = {}", fmt15(mean));
    println!("stderr = {}", fmt15(err));
    println!("deviation_sigmas = {}", fmt15(sigmas));
    if sigmas > VERIFY_SIGMAS {
        return Err(Failure::Check(format!("{} standard errors apart", fmt15(sigmas))));
    }
    println!("pass");
    Ok(())
}

fn atlas(max_twice_spin: u32, restarts: Option<usize>, seed: u64, out: Option<&Path>) -> Outcome {
    if max_twice_spin == 0 || max_twice_spin > ATLAS_MAX_TWICE_SPIN {
        return Err(Failure::Input(format!("--max-twice-spin must be in 1..={ATLAS_MAX_TWICE_SPIN}")));
    }
    let mut csv = String::from("twice_spin,spin,e_max,e_coherent,upper_bound,symmetry_order,proper_order,continuous\n");
    for n in 1..=max_twice_spin {
        let mut cfg = OptimizerConfig { seed, ..OptimizerConfig::for_spin(n) };
        if let Some(r) = restarts {
            cfg.restarts = r;
        }
        let report = maximize_average_entanglement(n, &cfg)?;
        let group = detect_point_group(&constellation(&report.best_state), DEFAULT_TOL)?;
        let row = format!(
            "{},{},{},{},{},{},{},{}\n",
            n,
            fmt15(n as f64 / 2.0),
            fmt15(report.best_value),
            fmt15(coherent_average_value(n)),
            fmt15(entropy_upper_bound(n)),
            group.order,
            group.proper_order,
            group.continuous
        );
        log::info!("twice_spin {n}: {}", row.trim_end());
        csv.push_str(&row);
    }
    emit(out, csv.as_bytes())
}
