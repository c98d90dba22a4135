//! Flat key-value run configuration.
//!
//! One `key = value` per line, `#` comments. Defaults reproduce the standard
//! parameter table: 7 cells, 8 users, 500 m radius, path-loss exponent 3,
//! 8 dB shadowing, 20 dB cell-edge SNR, 0 dBm powers, M in {8, 32, 128, 512}.

use std::fmt::Write as _;
use std::path::Path;

use crate::assignment::DEFAULT_EXHAUSTIVE_LIMIT;
use crate::experiment::{Scenario, Strategy};
use crate::fading::SystemConfig;
use crate::{Result, SimError};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub cells: usize,
    pub users_per_cell: usize,
    pub cell_radius: f64,
    pub path_loss_exponent: f64,
    pub shadow_sigma_db: f64,
    pub cell_edge_snr_db: f64,
    pub pilot_power_dbm: f64,
    pub data_power_dbm: f64,
    pub trials: u64,
    pub seed: u64,
    pub antennas: Vec<usize>,
    pub strategies: Vec<Strategy>,
    pub target_cell: usize,
    pub max_sweeps: usize,
    pub exhaustive_limit: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            cells: 7,
            users_per_cell: 8,
            cell_radius: 500.0,
            path_loss_exponent: 3.0,
            shadow_sigma_db: 8.0,
            cell_edge_snr_db: 20.0,
            pilot_power_dbm: 0.0,
            data_power_dbm: 0.0,
            trials: 10_000,
            seed: 1,
            antennas: vec![8, 32, 128, 512],
            strategies: vec![Strategy::Random, Strategy::Conventional, Strategy::Spa],
            target_cell: 0,
            max_sweeps: 20,
            exhaustive_limit: DEFAULT_EXHAUSTIVE_LIMIT,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.to_scenario().validate()
    }

    pub fn to_scenario(&self) -> Scenario {
        Scenario {
            cells: self.cells,
            users_per_cell: self.users_per_cell,
            antennas: self.antennas.clone(),
            cell_radius: self.cell_radius,
            cfg: SystemConfig::from_dbm(
                self.pilot_power_dbm,
                self.data_power_dbm,
                self.path_loss_exponent,
                self.shadow_sigma_db,
                self.cell_edge_snr_db,
            ),
            trials: self.trials,
            seed: self.seed,
            strategies: self.strategies.clone(),
            target_cell: self.target_cell,
            max_sweeps: self.max_sweeps,
            exhaustive_limit: self.exhaustive_limit,
        }
    }

    /// Applies one `key = value` pair.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value.trim().parse().map_err(|_| {
                SimError::Config(format!("cannot parse '{value}' for key '{key}'"))
            })
        }
        match key {
            "cells" => self.cells = num(key, value)?,
            "users_per_cell" => {
                self.users_per_cell = num(key, value)?;
                if self.users_per_cell == 0 {
                    return Err(SimError::Config(
                        "users_per_cell violates the K >= 1 invariant".into(),
                    ));
                }
            }
            "cell_radius" => self.cell_radius = num(key, value)?,
            "path_loss_exponent" => self.path_loss_exponent = num(key, value)?,
            "shadow_sigma_db" => self.shadow_sigma_db = num(key, value)?,
            "cell_edge_snr_db" => self.cell_edge_snr_db = num(key, value)?,
            "pilot_power_dbm" => self.pilot_power_dbm = num(key, value)?,
            "data_power_dbm" => self.data_power_dbm = num(key, value)?,
            "trials" => {
                self.trials = num(key, value)?;
                if self.trials == 0 {
                    return Err(SimError::Config(
                        "trials violates the trials >= 1 invariant".into(),
                    ));
                }
            }
            "seed" => self.seed = num(key, value)?,
            "antennas" => {
                self.antennas = value
                    .split(',')
                    .map(|s| num("antennas", s))
                    .collect::<Result<Vec<usize>>>()?;
            }
            "strategies" => {
                self.strategies = value
                    .split(',')
                    .map(Strategy::parse)
                    .collect::<Result<Vec<Strategy>>>()?;
            }
            "target_cell" => self.target_cell = num(key, value)?,
            "max_sweeps" => self.max_sweeps = num(key, value)?,
            "exhaustive_limit" => self.exhaustive_limit = num(key, value)?,
            other => {
                return Err(SimError::Config(format!("unknown key '{other}'")));
            }
        }
        Ok(())
    }

    /// Parses a flat config document, starting from the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                SimError::Config(format!("line {}: expected 'key = value'", lineno + 1))
            })?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| SimError::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(cfg)
    }

    pub fn parse_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// Renders the config back into the flat format; `parse(print)` round
    /// trips.
    pub fn print(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "cells = {}", self.cells);
        let _ = writeln!(s, "users_per_cell = {}", self.users_per_cell);
        let _ = writeln!(s, "cell_radius = {}", self.cell_radius);
        let _ = writeln!(s, "path_loss_exponent = {}", self.path_loss_exponent);
        let _ = writeln!(s, "shadow_sigma_db = {}", self.shadow_sigma_db);
        let _ = writeln!(s, "cell_edge_snr_db = {}", self.cell_edge_snr_db);
        let _ = writeln!(s, "pilot_power_dbm = {}", self.pilot_power_dbm);
        let _ = writeln!(s, "data_power_dbm = {}", self.data_power_dbm);
        let _ = writeln!(s, "trials = {}", self.trials);
        let _ = writeln!(s, "seed = {}", self.seed);
        let antennas: Vec<String> = self.antennas.iter().map(usize::to_string).collect();
        let _ = writeln!(s, "antennas = {}", antennas.join(","));
        let strategies: Vec<&str> = self.strategies.iter().map(|s| s.name()).collect();
        let _ = writeln!(s, "strategies = {}", strategies.join(","));
        let _ = writeln!(s, "target_cell = {}", self.target_cell);
        let _ = writeln!(s, "max_sweeps = {}", self.max_sweeps);
        let _ = writeln!(s, "exhaustive_limit = {}", self.exhaustive_limit);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_table_defaults() {
        let cfg = RunConfig::parse("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.cells, 7);
        assert_eq!(cfg.users_per_cell, 8);
        assert_eq!(cfg.cell_radius, 500.0);
        assert_eq!(cfg.path_loss_exponent, 3.0);
        assert_eq!(cfg.shadow_sigma_db, 8.0);
        assert_eq!(cfg.cell_edge_snr_db, 20.0);
        assert_eq!(cfg.antennas, vec![8, 32, 128, 512]);
    }

    #[test]
    fn zero_users_names_the_invariant() {
        let err = RunConfig::parse("users_per_cell = 0").unwrap_err();
        assert!(err.to_string().contains("K >= 1"), "{err}");
        assert!(err.to_string().contains("line 1"), "{err}");
    }

    #[test]
    fn unknown_key_is_rejected_with_line_number() {
        let err = RunConfig::parse("cells = 7\nbogus = 1").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("unknown key 'bogus'"), "{msg}");
        assert!(msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let cfg = RunConfig::parse("# header\n\nseed = 7 # inline\n").unwrap();
        assert_eq!(cfg.seed, 7);
    }

    #[test]
    fn round_trip() {
        let mut cfg = RunConfig::default();
        cfg.seed = 42;
        cfg.antennas = vec![16, 64];
        cfg.strategies = vec![Strategy::Spa, Strategy::OptimalP];
        cfg.users_per_cell = 5;
        let reparsed = RunConfig::parse(&cfg.print()).unwrap();
        assert_eq!(reparsed, cfg);
    }

    #[test]
    fn bad_value_is_named() {
        let err = RunConfig::parse("trials = many").unwrap_err();
        assert!(err.to_string().contains("'many'"), "{err}");
    }
}
