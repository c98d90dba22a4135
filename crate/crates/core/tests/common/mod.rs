//! Shared helpers for the acceptance suites, including the symbol-level
//! Monte-Carlo residual-power oracle. The oracle builds the received data
//! vector from scratch and measures the residual power empirically, staying
//! independent of the analytic conditional-expectation path it checks.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use spa_sim::assignment::PilotAssignment;
use spa_sim::fading::{ChannelSet, SystemConfig};

pub fn complex_gaussian<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn herm_dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Empirical mean and standard error of the residual power |eps|^2 for one
/// pilot of the target cell, over `draws` independent symbol/noise
/// realizations. `h_hat` is the MF estimate for the pilot; `mates[j]` is the
/// user of cell j holding it.
pub fn symbol_level_residual_power<R: Rng>(
    channels: &ChannelSet,
    h_hat: &[Complex64],
    mates: &[usize],
    cfg: &SystemConfig,
    target: usize,
    draws: usize,
    rng: &mut R,
) -> (f64, f64) {
    let cells = channels.cells;
    let k = channels.users_per_cell;
    let m = channels.antennas;
    let sqrt_pu = cfg.data_power.sqrt();
    let noise_scale = cfg.data_noise_var.sqrt();
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    let mut received = vec![Complex64::ZERO; m];
    for _ in 0..draws {
        received.iter_mut().for_each(|y| *y = Complex64::ZERO);
        // kept detector terms: sqrt(rho_u) * sum_j (c_j^H c_j) x_{j, mate}
        let mut kept = Complex64::ZERO;
        for j in 0..cells {
            for user in 0..k {
                let symbol = complex_gaussian(rng);
                let h = channels.link(target, j, user);
                for (y, hm) in received.iter_mut().zip(h) {
                    *y += sqrt_pu * hm * symbol;
                }
                if user == mates[j] {
                    kept += sqrt_pu * herm_dot(h, h) * symbol;
                }
            }
        }
        for y in received.iter_mut() {
            *y += complex_gaussian(rng) * noise_scale;
        }
        let eps = herm_dot(h_hat, &received) - kept;
        let p = eps.norm_sqr();
        sum += p;
        sumsq += p * p;
    }
    let n = draws as f64;
    let mean = sum / n;
    let var = (sumsq / n - mean * mean).max(0.0);
    (mean, (var / n).sqrt())
}

/// Analytic residual power recovered from the SINR report:
/// E|eps|^2 = rho_u * (signal / SINR - contamination), with signal and
/// contamination recomputed here from the raw channels.
pub fn residual_from_sinr(
    channels: &ChannelSet,
    mates: &[usize],
    cfg: &SystemConfig,
    target: usize,
    sinr: f64,
) -> f64 {
    let home = channels.link(target, target, mates[target]);
    let signal = herm_dot(home, home).norm_sqr();
    let contamination: f64 = (0..channels.cells)
        .filter(|&j| j != target)
        .map(|j| {
            let h = channels.link(target, j, mates[j]);
            herm_dot(h, h).norm_sqr()
        })
        .sum();
    cfg.data_power * (signal / sinr - contamination)
}

/// Mates vector (pilot holder per cell) for one pilot index.
pub fn mates_for_pilot(assignments: &[PilotAssignment], pilot: usize) -> Vec<usize> {
    assignments.iter().map(|a| a.user_of_pilot(pilot)).collect()
}
