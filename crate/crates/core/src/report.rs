//! Deterministic CSV and JSON writers for the experiment outputs.
//!
//! Numeric cells use 9 significant digits in scientific notation so golden
//! files stay byte-stable; non-finite values print as the `inf` token.

use std::fmt::Write as _;

use serde::Serialize;

use crate::experiment::{empirical_cdf, ConvergenceResult, ExperimentResult};
use crate::Result;

/// Default dB grid for CDF curves: [-20, +30] in 0.25 dB steps.
pub fn default_db_grid() -> Vec<f64> {
    (0..=200).map(|i| -20.0 + 0.25 * i as f64).collect()
}

/// 9-significant-digit, locale-independent cell formatting.
pub fn format_cell(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.8e}")
    }
}

/// `cdf.csv`: sinr_db column, then one CDF column per strategy and antenna
/// count, named `<strategy>_m<M>`.
pub fn cdf_csv(result: &ExperimentResult, grid: &[f64]) -> Result<String> {
    let mut header = vec!["sinr_db".to_string()];
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for summary in &result.summaries {
        header.push(format!("{}_m{}", summary.strategy.name(), summary.antennas));
        columns.push(empirical_cdf(&summary.min_sinr_db, grid)?);
    }
    let mut out = String::new();
    let _ = writeln!(out, "{}", header.join(","));
    for (gi, g) in grid.iter().enumerate() {
        let mut row = vec![format_cell(*g)];
        for col in &columns {
            row.push(format_cell(col[gi]));
        }
        let _ = writeln!(out, "{}", row.join(","));
    }
    Ok(out)
}

/// `capacity.csv`: m column, then one mean worst-user-capacity column per
/// strategy.
pub fn capacity_csv(result: &ExperimentResult) -> String {
    let strategies = &result.scenario.strategies;
    let mut header = vec!["m".to_string()];
    header.extend(strategies.iter().map(|s| s.name().to_string()));
    let mut out = String::new();
    let _ = writeln!(out, "{}", header.join(","));
    for &m in &result.scenario.antennas {
        let mut row = vec![m.to_string()];
        for &strategy in strategies {
            let cap = result
                .summary(strategy, m)
                .map(|s| s.worst_user_capacity)
                .unwrap_or(f64::NAN);
            row.push(format_cell(cap));
        }
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

/// `convergence.csv`: sweep column, then the per-cell average min-SINR (dB)
/// for each antenna count, named `m<M>_cell<c>`.
pub fn convergence_csv(result: &ConvergenceResult) -> String {
    let scenario = &result.scenario;
    let mut header = vec!["sweep".to_string()];
    for &m in &scenario.antennas {
        for c in 0..scenario.cells {
            header.push(format!("m{m}_cell{c}"));
        }
    }
    let mut out = String::new();
    let _ = writeln!(out, "{}", header.join(","));
    for sweep in 0..scenario.max_sweeps {
        let mut row = vec![(sweep + 1).to_string()];
        for mi in 0..scenario.antennas.len() {
            for c in 0..scenario.cells {
                row.push(format_cell(result.avg_min_sinr_db[mi][sweep][c]));
            }
        }
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

#[derive(Serialize)]
struct StrategySummaryJson {
    strategy: &'static str,
    antennas: usize,
    trials: usize,
    excluded_infinite: usize,
    median_min_sinr_db: f64,
    mean_min_sinr_db: f64,
    worst_user_capacity_bps_hz: f64,
}

/// `summary.json` for the cdf / capacity-sweep commands: scenario echo plus
/// per-strategy statistics and excluded-sample counts. Deliberately free of
/// timing so repeated runs are byte-identical; wall-clock goes to stderr.
pub fn summary_json(result: &ExperimentResult) -> Result<String> {
    let summaries: Vec<StrategySummaryJson> = result
        .summaries
        .iter()
        .map(|s| StrategySummaryJson {
            strategy: s.strategy.name(),
            antennas: s.antennas,
            trials: s.min_sinr_db.len() + s.excluded,
            excluded_infinite: s.excluded,
            median_min_sinr_db: s.median_db,
            mean_min_sinr_db: s.mean_db,
            worst_user_capacity_bps_hz: s.worst_user_capacity,
        })
        .collect();
    let doc = serde_json::json!({
        "scenario": result.scenario,
        "strategies": summaries,
    });
    Ok(serde_json::to_string_pretty(&doc).expect("serializable") + "\n")
}

/// `summary.json` for the convergence command.
pub fn convergence_summary_json(result: &ConvergenceResult) -> Result<String> {
    let within_10 = result
        .sweeps_to_convergence
        .iter()
        .filter(|s| matches!(s, Some(n) if *n <= 10))
        .count();
    let doc = serde_json::json!({
        "scenario": result.scenario,
        "converged_fraction": result.converged_fraction,
        "converged_within_10_sweeps": within_10 as f64
            / result.sweeps_to_convergence.len() as f64,
        "median_sweeps_to_convergence": result.median_sweeps,
    });
    Ok(serde_json::to_string_pretty(&doc).expect("serializable") + "\n")
}
