//! Seeded Monte-Carlo harness for the min-SINR CDF, worst-user capacity, and
//! convergence experiments.
//!
//! Every trial derives its randomness from (seed, trial index, purpose)
//! substreams, so results are independent of execution order and identical
//! under parallel and sequential execution. All strategies within a trial
//! share the same geometry, large-scale gains, small-scale channels, and
//! pilot noise, so strategy comparisons are paired.

use serde::Serialize;

use crate::airlink::{
    asymptotic_sinr, estimate_channels, finite_m_sinr, sinr_table, PilotBook, PilotNoise,
};
use crate::assignment::{
    conventional, exhaustive_pprime, exhaustive_table, metrics, sequential_iterate, spa,
    PilotAssignment, DEFAULT_EXHAUSTIVE_LIMIT,
};
use crate::fading::{draw_channels, large_scale, SystemConfig};
use crate::geometry::{build_hex_layout, distances, drop_users};
use crate::lin_to_db;
use crate::rng::{substream, Purpose};
use crate::{Result, SimError};

/// Pilot assignment strategy under test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Uniform random permutation per cell per trial.
    Random,
    /// Identity permutation everywhere.
    Conventional,
    /// SPA at the target cell, identity elsewhere.
    Spa,
    /// Exhaustive max-min over the finite-M SINR (problem P).
    OptimalP,
    /// Exhaustive max-min over the large-scale objective (problem P').
    OptimalPPrime,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::Random,
        Strategy::Conventional,
        Strategy::Spa,
        Strategy::OptimalP,
        Strategy::OptimalPPrime,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Random => "random",
            Strategy::Conventional => "conventional",
            Strategy::Spa => "spa",
            Strategy::OptimalP => "optimal_p",
            Strategy::OptimalPPrime => "optimal_pprime",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "random" => Ok(Strategy::Random),
            "conventional" => Ok(Strategy::Conventional),
            "spa" => Ok(Strategy::Spa),
            "optimal_p" => Ok(Strategy::OptimalP),
            "optimal_pprime" => Ok(Strategy::OptimalPPrime),
            other => Err(SimError::Config(format!(
                "unknown strategy '{other}'; expected one of random, conventional, \
                 spa, optimal_p, optimal_pprime"
            ))),
        }
    }

    fn is_exhaustive(self) -> bool {
        matches!(self, Strategy::OptimalP | Strategy::OptimalPPrime)
    }
}

/// Full description of one experiment.
#[derive(Debug, Clone, Serialize)]
pub struct Scenario {
    pub cells: usize,
    pub users_per_cell: usize,
    pub antennas: Vec<usize>,
    pub cell_radius: f64,
    #[serde(skip)]
    pub cfg: SystemConfig,
    pub trials: u64,
    pub seed: u64,
    pub strategies: Vec<Strategy>,
    pub target_cell: usize,
    pub max_sweeps: usize,
    pub exhaustive_limit: usize,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.cfg.validate()?;
        if self.trials == 0 {
            return Err(SimError::Config("trials must be at least 1".into()));
        }
        if self.users_per_cell == 0 {
            return Err(SimError::Config("users_per_cell must be at least 1".into()));
        }
        if self.strategies.is_empty() {
            return Err(SimError::Config("strategies must be non-empty".into()));
        }
        if self.antennas.is_empty() {
            return Err(SimError::Config("antennas list must be non-empty".into()));
        }
        if self.target_cell >= self.cells {
            return Err(SimError::Config(format!(
                "target_cell {} out of range for {} cells",
                self.target_cell, self.cells
            )));
        }
        if self.users_per_cell > self.exhaustive_limit
            && self.strategies.iter().any(|s| s.is_exhaustive())
        {
            return Err(SimError::Config(format!(
                "exhaustive strategies need K <= {} (K! permutations); got K = {}",
                self.exhaustive_limit, self.users_per_cell
            )));
        }
        Ok(())
    }
}

impl Default for Scenario {
    /// Table-style defaults: 7 cells of radius 500 m, 8 users, M in
    /// {8, 32, 128, 512}.
    fn default() -> Self {
        Scenario {
            cells: 7,
            users_per_cell: 8,
            antennas: vec![8, 32, 128, 512],
            cell_radius: 500.0,
            cfg: SystemConfig::table_defaults(),
            trials: 10_000,
            seed: 1,
            strategies: vec![Strategy::Random, Strategy::Conventional, Strategy::Spa],
            target_cell: 0,
            max_sweeps: 20,
            exhaustive_limit: DEFAULT_EXHAUSTIVE_LIMIT,
        }
    }
}

/// One trial's paired measurements: `[strategy][antenna-count]` matrices.
#[derive(Debug, Clone)]
pub struct TrialRecord {
    /// Minimum finite-M SINR over target-cell users, linear; +inf sentinel
    /// possible in degenerate configs.
    pub min_finite_sinr: Vec<Vec<f64>>,
    /// Minimum asymptotic SINR under each strategy's assignment. Indexed the
    /// same way since the optimal-P assignment depends on M.
    pub min_asymptotic_sinr: Vec<Vec<f64>>,
}

fn min_of(values: &[f64]) -> f64 {
    values.iter().fold(f64::INFINITY, |a, &b| a.min(b))
}

/// Runs the full per-trial pipeline: layout -> drop -> distances -> betas,
/// then per antenna count and strategy the pilot phase and SINR evaluation.
pub fn run_trial(scenario: &Scenario, trial: u64) -> Result<TrialRecord> {
    let layout = build_hex_layout(scenario.cells, scenario.cell_radius)?;
    let drop = drop_users(
        &layout,
        scenario.users_per_cell,
        &mut substream(scenario.seed, trial, Purpose::UserDrop),
    )?;
    let dist = distances(&layout, &drop)?;
    let beta = large_scale(
        &dist,
        scenario.cell_radius,
        scenario.cfg.path_loss_exponent,
        scenario.cfg.shadow_sigma_db,
        &mut substream(scenario.seed, trial, Purpose::Shadowing),
    );
    let k = scenario.users_per_cell;
    let target = scenario.target_cell;
    let book = PilotBook::dft(k);

    // All strategies share the same other-cell assignments (identity), so
    // within a trial they differ only in the target-cell permutation and the
    // comparisons are exactly paired.
    let identity_all: Vec<PilotAssignment> = (0..scenario.cells).map(|_| conventional(k)).collect();
    // M-independent assignments, resolved once per trial
    let mut fixed: Vec<Option<Vec<PilotAssignment>>> = Vec::new();
    for strategy in &scenario.strategies {
        let assignments = match strategy {
            Strategy::Random => {
                let mut rng = substream(scenario.seed, trial, Purpose::Assignments);
                let mut a = identity_all.clone();
                a[target] = PilotAssignment::random(k, &mut rng);
                Some(a)
            }
            Strategy::Conventional => Some(identity_all.clone()),
            Strategy::Spa => {
                let m = metrics(&beta, &identity_all, target)?;
                let mut a = identity_all.clone();
                a[target] = spa(&m);
                Some(a)
            }
            Strategy::OptimalPPrime => {
                let m = metrics(&beta, &identity_all, target)?;
                let (best, _) = exhaustive_pprime(&m, scenario.exhaustive_limit)?;
                let mut a = identity_all.clone();
                a[target] = best;
                Some(a)
            }
            Strategy::OptimalP => None,
        };
        fixed.push(assignments);
    }

    let n_strategies = scenario.strategies.len();
    let n_m = scenario.antennas.len();
    let mut min_finite = vec![vec![0.0; n_m]; n_strategies];
    let mut min_asym = vec![vec![0.0; n_m]; n_strategies];
    for (mi, &m_count) in scenario.antennas.iter().enumerate() {
        let channels = draw_channels(
            &beta,
            m_count,
            &mut substream(scenario.seed, trial, Purpose::SmallScale(mi as u32)),
        );
        let noise = PilotNoise::draw(
            scenario.cells,
            m_count,
            book.length,
            scenario.cfg.pilot_noise_var,
            &mut substream(scenario.seed, trial, Purpose::PilotNoise(mi as u32)),
        );
        for (si, strategy) in scenario.strategies.iter().enumerate() {
            let assignments = match &fixed[si] {
                Some(a) => a.clone(),
                None => {
                    // problem P: exhaustive over the finite-M SINR table
                    let table =
                        sinr_table(&channels, &identity_all, &book, &scenario.cfg, &noise, target)?;
                    let (best, _) = exhaustive_table(&table, scenario.exhaustive_limit)?;
                    let mut a = identity_all.clone();
                    a[target] = best;
                    a
                }
            };
            let estimates =
                estimate_channels(&channels, &assignments, &book, &scenario.cfg, &noise)?;
            let report = finite_m_sinr(&channels, &estimates, &assignments, &scenario.cfg, target)?;
            min_finite[si][mi] = report.min_sinr();
            min_asym[si][mi] = min_of(&asymptotic_sinr(&beta, &assignments, target)?);
            let _ = strategy;
        }
    }
    Ok(TrialRecord {
        min_finite_sinr: min_finite,
        min_asymptotic_sinr: min_asym,
    })
}

/// Runs all trials serially, in trial order.
pub fn run_trials_sequential(scenario: &Scenario) -> Result<Vec<TrialRecord>> {
    scenario.validate()?;
    (0..scenario.trials).map(|t| run_trial(scenario, t)).collect()
}

/// Runs all trials on the rayon pool; the substream scheme makes the result
/// identical to the sequential run.
#[cfg(feature = "parallel")]
pub fn run_trials_parallel(scenario: &Scenario) -> Result<Vec<TrialRecord>> {
    use rayon::prelude::*;
    scenario.validate()?;
    (0..scenario.trials)
        .into_par_iter()
        .map(|t| run_trial(scenario, t))
        .collect()
}

/// Runs all trials, parallel when the `parallel` feature is enabled.
pub fn run_trials(scenario: &Scenario) -> Result<Vec<TrialRecord>> {
    #[cfg(feature = "parallel")]
    {
        run_trials_parallel(scenario)
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_trials_sequential(scenario)
    }
}

/// Per-(strategy, antenna-count) summary of the trial vectors.
#[derive(Debug, Clone, Serialize)]
pub struct CellSummary {
    pub strategy: Strategy,
    pub antennas: usize,
    /// Per-trial minimum finite-M SINR in dB, +inf sentinels excluded.
    pub min_sinr_db: Vec<f64>,
    /// Count of excluded +inf sentinels.
    pub excluded: usize,
    pub median_db: f64,
    pub mean_db: f64,
    /// Mean over trials of log2(1 + min SINR), bits/s/Hz.
    pub worst_user_capacity: f64,
}

/// Aggregated experiment output.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentResult {
    pub scenario: Scenario,
    pub summaries: Vec<CellSummary>,
}

impl ExperimentResult {
    pub fn summary(&self, strategy: Strategy, antennas: usize) -> Option<&CellSummary> {
        self.summaries
            .iter()
            .find(|s| s.strategy == strategy && s.antennas == antennas)
    }
}

/// Median of an unsorted slice (mean of the middle two for even lengths).
pub fn median(samples: &[f64]) -> f64 {
    let mut v = samples.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("no NaN"));
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Right-continuous empirical CDF: fraction of samples <= each grid point.
pub fn empirical_cdf(samples: &[f64], grid: &[f64]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(SimError::Domain(
            "empirical CDF of an empty sample set".into(),
        ));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("no NaN"));
    let n = sorted.len() as f64;
    Ok(grid
        .iter()
        .map(|&g| sorted.partition_point(|&s| s <= g) as f64 / n)
        .collect())
}

/// Mean worst-user capacity over trials: average of log2(1 + min SINR).
pub fn worst_user_capacity(min_sinr_linear: &[f64]) -> Result<f64> {
    if min_sinr_linear.is_empty() {
        return Err(SimError::Domain(
            "worst-user capacity of an empty sample set".into(),
        ));
    }
    Ok(min_sinr_linear.iter().map(|&s| (1.0 + s).log2()).sum::<f64>() / min_sinr_linear.len() as f64)
}

/// Runs the scenario and aggregates per-(strategy, M) summaries.
pub fn run(scenario: &Scenario) -> Result<ExperimentResult> {
    let records = run_trials(scenario)?;
    aggregate(scenario, &records)
}

pub fn aggregate(scenario: &Scenario, records: &[TrialRecord]) -> Result<ExperimentResult> {
    let mut summaries = Vec::new();
    for (si, &strategy) in scenario.strategies.iter().enumerate() {
        for (mi, &antennas) in scenario.antennas.iter().enumerate() {
            let linear: Vec<f64> = records.iter().map(|r| r.min_finite_sinr[si][mi]).collect();
            let finite: Vec<f64> = linear.iter().copied().filter(|s| s.is_finite()).collect();
            let excluded = linear.len() - finite.len();
            if excluded > 0 {
                eprintln!(
                    "warning: {excluded} infinite min-SINR sample(s) excluded for {} at M={antennas}",
                    strategy.name()
                );
            }
            let db: Vec<f64> = finite.iter().map(|&s| lin_to_db(s)).collect();
            let capacity = worst_user_capacity(&finite)?;
            summaries.push(CellSummary {
                strategy,
                antennas,
                median_db: median(&db),
                mean_db: db.iter().sum::<f64>() / db.len().max(1) as f64,
                worst_user_capacity: capacity,
                min_sinr_db: db,
                excluded,
            });
        }
    }
    Ok(ExperimentResult {
        scenario: scenario.clone(),
        summaries,
    })
}

/// Convergence experiment output.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceResult {
    pub scenario: Scenario,
    /// `avg_min_sinr_db[mi][sweep][cell]`: average over trials of each
    /// cell's minimum finite-M SINR after each sweep (linear average,
    /// reported in dB). Trials that converge early hold their fixed point.
    pub avg_min_sinr_db: Vec<Vec<Vec<f64>>>,
    /// Sweeps to convergence per trial; None when max_sweeps was exhausted.
    pub sweeps_to_convergence: Vec<Option<usize>>,
    pub converged_fraction: f64,
    pub median_sweeps: f64,
}

/// Runs the sequential iterative scheme per trial and averages each cell's
/// min SINR per sweep (Fig.-3(c)-style trace).
pub fn convergence_trace(scenario: &Scenario) -> Result<ConvergenceResult> {
    scenario.validate()?;
    let per_trial: Vec<(Vec<Vec<Vec<f64>>>, Option<usize>)> = {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            (0..scenario.trials)
                .into_par_iter()
                .map(|t| convergence_trial(scenario, t))
                .collect::<Result<Vec<_>>>()?
        }
        #[cfg(not(feature = "parallel"))]
        {
            (0..scenario.trials)
                .map(|t| convergence_trial(scenario, t))
                .collect::<Result<Vec<_>>>()?
        }
    };
    let n_m = scenario.antennas.len();
    let sweeps = scenario.max_sweeps;
    let cells = scenario.cells;
    let mut avg = vec![vec![vec![0.0f64; cells]; sweeps]; n_m];
    for (trace, _) in &per_trial {
        for mi in 0..n_m {
            for s in 0..sweeps {
                for c in 0..cells {
                    avg[mi][s][c] += trace[mi][s][c];
                }
            }
        }
    }
    let n = scenario.trials as f64;
    for plane in &mut avg {
        for row in plane {
            for v in row {
                *v = lin_to_db(*v / n);
            }
        }
    }
    let sweeps_to_convergence: Vec<Option<usize>> = per_trial.iter().map(|(_, s)| *s).collect();
    let converged: Vec<f64> = sweeps_to_convergence
        .iter()
        .flatten()
        .map(|&s| s as f64)
        .collect();
    let converged_fraction = converged.len() as f64 / scenario.trials as f64;
    Ok(ConvergenceResult {
        scenario: scenario.clone(),
        avg_min_sinr_db: avg,
        sweeps_to_convergence,
        converged_fraction,
        median_sweeps: median(&converged),
    })
}

/// One convergence trial: returns `[mi][sweep][cell]` min finite-M SINR
/// (linear) and the sweeps-to-convergence count.
fn convergence_trial(
    scenario: &Scenario,
    trial: u64,
) -> Result<(Vec<Vec<Vec<f64>>>, Option<usize>)> {
    let layout = build_hex_layout(scenario.cells, scenario.cell_radius)?;
    let drop = drop_users(
        &layout,
        scenario.users_per_cell,
        &mut substream(scenario.seed, trial, Purpose::UserDrop),
    )?;
    let dist = distances(&layout, &drop)?;
    let beta = large_scale(
        &dist,
        scenario.cell_radius,
        scenario.cfg.path_loss_exponent,
        scenario.cfg.shadow_sigma_db,
        &mut substream(scenario.seed, trial, Purpose::Shadowing),
    );
    let k = scenario.users_per_cell;
    let cells = scenario.cells;
    let book = PilotBook::dft(k);
    let init: Vec<PilotAssignment> = (0..cells).map(|_| conventional(k)).collect();
    let outcome = sequential_iterate(&beta, &init, scenario.max_sweeps)?;

    let mut trace = vec![vec![vec![0.0f64; cells]; scenario.max_sweeps]; scenario.antennas.len()];
    for (mi, &m_count) in scenario.antennas.iter().enumerate() {
        let channels = draw_channels(
            &beta,
            m_count,
            &mut substream(scenario.seed, trial, Purpose::SmallScale(mi as u32)),
        );
        let noise = PilotNoise::draw(
            cells,
            m_count,
            book.length,
            scenario.cfg.pilot_noise_var,
            &mut substream(scenario.seed, trial, Purpose::PilotNoise(mi as u32)),
        );
        let mut last: Vec<f64> = vec![0.0; cells];
        for (sweep_idx, record) in outcome.sweeps.iter().enumerate() {
            let estimates =
                estimate_channels(&channels, &record.assignments, &book, &scenario.cfg, &noise)?;
            for cell in 0..cells {
                let report = finite_m_sinr(
                    &channels,
                    &estimates,
                    &record.assignments,
                    &scenario.cfg,
                    cell,
                )?;
                last[cell] = report.min_sinr();
                trace[mi][sweep_idx][cell] = last[cell];
            }
        }
        // a converged (or truncated) trial holds its last state
        for sweep_idx in outcome.sweeps.len()..scenario.max_sweeps {
            trace[mi][sweep_idx].copy_from_slice(&last);
        }
    }
    Ok((trace, outcome.converged_after))
}
