//! Command-line front end: `cdf`, `capacity-sweep`, `convergence`, and
//! `validate` subcommands producing deterministic CSV/JSON outputs.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use spa_sim::config::RunConfig;
use spa_sim::experiment::{convergence_trace, run};
use spa_sim::report::{
    capacity_csv, cdf_csv, convergence_csv, convergence_summary_json, default_db_grid,
    summary_json,
};
use spa_sim::{Result, SimError};

/// Thread-count override; defaults to all cores.
#[cfg(feature = "parallel")]
const THREADS_ENV: &str = "SPA_SIM_THREADS";

#[derive(Parser)]
#[command(
    name = "spa-sim",
    about = "Multi-cell massive MIMO uplink simulator with smart pilot assignment",
    version
)]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Overrides {
    /// Flat key-value config file (flags override file values).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// Comma-separated antenna counts, e.g. 8,32,128.
    #[arg(long, global = true)]
    antennas: Option<String>,
    /// Comma-separated strategies: random, conventional, spa, optimal_p,
    /// optimal_pprime.
    #[arg(long, global = true)]
    strategies: Option<String>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(short, long, global = true)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Min-SINR CDF per strategy and antenna count (cdf.csv, summary.json).
    Cdf,
    /// Mean worst-user capacity versus antenna count (capacity.csv,
    /// summary.json).
    CapacitySweep,
    /// Sequential iterative scheme traces (convergence.csv, summary.json).
    Convergence,
    /// Runs the built-in property checks and reports pass/fail.
    Validate,
}

fn build_config(overrides: &Overrides) -> Result<RunConfig> {
    let mut cfg = match &overrides.config {
        Some(path) => RunConfig::parse_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = overrides.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = overrides.trials {
        cfg.trials = trials;
    }
    if let Some(antennas) = &overrides.antennas {
        cfg.set("antennas", antennas)?;
    }
    if let Some(strategies) = &overrides.strategies {
        cfg.set("strategies", strategies)?;
    }
    Ok(cfg)
}

#[cfg(feature = "parallel")]
fn init_threads() {
    if let Ok(n) = std::env::var(THREADS_ENV) {
        if let Ok(n) = n.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        } else {
            eprintln!("warning: ignoring unparsable {THREADS_ENV}={n}");
        }
    }
}

#[cfg(not(feature = "parallel"))]
fn init_threads() {}

fn write_out(dir: &PathBuf, name: &str, contents: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), contents)?;
    Ok(())
}

fn cmd_cdf(cfg: &RunConfig, out: &PathBuf, verbose: bool) -> Result<()> {
    let scenario = cfg.to_scenario();
    let started = Instant::now();
    let result = run(&scenario)?;
    if verbose {
        eprintln!("ran {} trials in {:.2?}", scenario.trials, started.elapsed());
    }
    write_out(out, "cdf.csv", &cdf_csv(&result, &default_db_grid())?)?;
    write_out(out, "summary.json", &summary_json(&result)?)?;
    eprintln!(
        "wrote {}/cdf.csv and summary.json ({:.2?} wall clock)",
        out.display(),
        started.elapsed()
    );
    Ok(())
}

fn cmd_capacity_sweep(cfg: &RunConfig, out: &PathBuf, verbose: bool) -> Result<()> {
    let scenario = cfg.to_scenario();
    let started = Instant::now();
    let result = run(&scenario)?;
    if verbose {
        eprintln!("ran {} trials in {:.2?}", scenario.trials, started.elapsed());
    }
    write_out(out, "capacity.csv", &capacity_csv(&result))?;
    write_out(out, "summary.json", &summary_json(&result)?)?;
    eprintln!(
        "wrote {}/capacity.csv and summary.json ({:.2?} wall clock)",
        out.display(),
        started.elapsed()
    );
    Ok(())
}

fn cmd_convergence(cfg: &RunConfig, out: &PathBuf, verbose: bool) -> Result<()> {
    let scenario = cfg.to_scenario();
    let started = Instant::now();
    let result = convergence_trace(&scenario)?;
    if verbose {
        eprintln!(
            "converged fraction {:.3}, median sweeps {}",
            result.converged_fraction, result.median_sweeps
        );
    }
    write_out(out, "convergence.csv", &convergence_csv(&result))?;
    write_out(out, "summary.json", &convergence_summary_json(&result)?)?;
    eprintln!(
        "wrote {}/convergence.csv and summary.json ({:.2?} wall clock)",
        out.display(),
        started.elapsed()
    );
    Ok(())
}

fn cmd_validate(cfg: &RunConfig) -> Result<()> {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use spa_sim::airlink::{estimate_channels, estimate_channels_matrix, PilotBook, PilotNoise};
    use spa_sim::assignment::{exhaustive_pprime, spa, AssignmentMetrics, PilotAssignment};
    use spa_sim::experiment::{empirical_cdf, run_trial, Scenario};
    use spa_sim::fading::{draw_channels, FadingTensor, SystemConfig};

    let mut failures = 0usize;
    let mut check = |name: &str, ok: bool| {
        println!("{}  {name}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            failures += 1;
        }
    };

    // SPA attains the exhaustive P' optimum
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut spa_ok = true;
    for trial in 0..200 {
        let k = 2 + trial % 6;
        let metrics = AssignmentMetrics {
            alpha: (0..k).map(|_| 10f64.powf(rng.random_range(-3.0..3.0))).collect(),
            gamma: (0..k).map(|_| 10f64.powf(rng.random_range(-3.0..3.0))).collect(),
        };
        let greedy = metrics.min_ratio(&spa(&metrics));
        let (_, opt) = exhaustive_pprime(&metrics, 9)?;
        if (greedy - opt).abs() > 1e-12 * opt.abs() {
            spa_ok = false;
        }
    }
    check("spa matches exhaustive max-min optimum (200 instances)", spa_ok);

    // matrix vs closed-form estimation paths
    let mut est_ok = true;
    for _ in 0..20 {
        let (cells, users, m) = (2usize, 3usize, 4usize);
        let beta =
            FadingTensor::from_values(cells, users, vec![1.0; cells * cells * users]).unwrap();
        let ch = draw_channels(&beta, m, &mut rng);
        let book = PilotBook::dft(users);
        let sys = SystemConfig::table_defaults();
        let noise = PilotNoise::draw(cells, m, users, sys.pilot_noise_var, &mut rng);
        let assignments: Vec<PilotAssignment> = (0..cells)
            .map(|_| PilotAssignment::random(users, &mut rng))
            .collect();
        let a = estimate_channels(&ch, &assignments, &book, &sys, &noise)?;
        let b = estimate_channels_matrix(&ch, &assignments, &book, &sys, &noise)?;
        for bs in 0..cells {
            for pilot in 0..users {
                for (x, y) in a.get(bs, pilot).iter().zip(b.get(bs, pilot)) {
                    if (x - y).norm() > 1e-10 {
                        est_ok = false;
                    }
                }
            }
        }
    }
    check("matrix and closed-form estimation paths agree (20 configs)", est_ok);

    // trial determinism
    let scenario = Scenario {
        users_per_cell: 4,
        antennas: vec![8],
        trials: 2,
        seed: cfg.seed,
        ..Scenario::default()
    };
    let t1 = run_trial(&scenario, 0)?;
    let t2 = run_trial(&scenario, 0)?;
    check(
        "trials are deterministic",
        t1.min_finite_sinr == t2.min_finite_sinr,
    );

    // CDF monotone from 0 to 1
    let samples: Vec<f64> = (0..100).map(|_| rng.random_range(-20.0..30.0)).collect();
    let grid = default_db_grid();
    let cdf = empirical_cdf(&samples, &grid)?;
    let monotone = cdf.windows(2).all(|w| w[1] >= w[0]);
    check(
        "empirical CDF is monotone within [0, 1]",
        monotone && cdf.iter().all(|&p| (0.0..=1.0).contains(&p)),
    );

    if failures > 0 {
        return Err(SimError::Domain(format!("{failures} validation check(s) failed")));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads();
    let outcome = build_config(&cli.overrides).and_then(|cfg| {
        cfg.validate()?;
        match cli.command {
            Command::Cdf => cmd_cdf(&cfg, &cli.overrides.out, cli.overrides.verbose),
            Command::CapacitySweep => {
                cmd_capacity_sweep(&cfg, &cli.overrides.out, cli.overrides.verbose)
            }
            Command::Convergence => {
                cmd_convergence(&cfg, &cli.overrides.out, cli.overrides.verbose)
            }
            Command::Validate => cmd_validate(&cfg),
        }
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
