//! Pilot transmission, matched-filter channel estimation, and uplink SINR.
//!
//! Every cell reuses the same orthonormal pilot book, so the MF estimate for
//! pilot k at BS i is the sum of the channels of every cell's pilot-k user
//! plus equivalent noise: h_hat[i][k] = sum_j h[i][j][u_j(k)] + v. Two
//! estimation paths are provided and must agree: the full matrix path that
//! builds the received block Y and correlates it with the pilot, and the
//! closed-form path that adds the equivalent noise directly.
//!
//! The finite-M SINR uses the conditional expectation of the MF residual
//! power over unit-power symbols and noise given the channels:
//!   E|eps|^2 = rho_u * sum_j |h_hat^H c_j - c_j^H c_j|^2
//!            + rho_u * sum_j sum_{k' not the pilot mate} |h_hat^H h_ijk'|^2
//!            + sigma_n^2 * ||h_hat||^2
//! where c_j is the channel of cell j's pilot mate. A symbol-level
//! Monte-Carlo path exists in the test suite as an independent oracle.

use num_complex::Complex64;
use rand::Rng;

use crate::assignment::PilotAssignment;
use crate::fading::{complex_gaussian, ChannelSet, FadingTensor, SystemConfig};
use crate::{Result, SimError};

/// Orthonormal pilot book, K rows of length tau (tau = K here: a normalized
/// DFT basis, the minimal choice satisfying Phi Phi^H = I).
#[derive(Debug, Clone)]
pub struct PilotBook {
    pub pilots: usize,
    pub length: usize,
    rows: Vec<Complex64>,
}

impl PilotBook {
    pub fn dft(pilots: usize) -> Self {
        let scale = 1.0 / (pilots as f64).sqrt();
        let mut rows = Vec::with_capacity(pilots * pilots);
        for k in 0..pilots {
            for t in 0..pilots {
                let phase = -2.0 * std::f64::consts::PI * (k * t) as f64 / pilots as f64;
                rows.push(Complex64::from_polar(scale, phase));
            }
        }
        Self {
            pilots,
            length: pilots,
            rows,
        }
    }

    #[inline]
    pub fn row(&self, k: usize) -> &[Complex64] {
        &self.rows[k * self.length..(k + 1) * self.length]
    }
}

/// Pilot-phase AWGN, one M x tau matrix per BS.
#[derive(Debug, Clone)]
pub struct PilotNoise {
    pub cells: usize,
    pub antennas: usize,
    pub length: usize,
    data: Vec<Complex64>,
}

impl PilotNoise {
    /// Draws entries i.i.d. CN(0, variance).
    pub fn draw<R: Rng>(
        cells: usize,
        antennas: usize,
        length: usize,
        variance: f64,
        rng: &mut R,
    ) -> Self {
        let scale = variance.sqrt();
        let data = (0..cells * antennas * length)
            .map(|_| complex_gaussian(rng) * scale)
            .collect();
        Self {
            cells,
            antennas,
            length,
            data,
        }
    }

    pub fn zero(cells: usize, antennas: usize, length: usize) -> Self {
        Self {
            cells,
            antennas,
            length,
            data: vec![Complex64::ZERO; cells * antennas * length],
        }
    }

    #[inline]
    fn entry(&self, bs: usize, antenna: usize, t: usize) -> Complex64 {
        self.data[(bs * self.antennas + antenna) * self.length + t]
    }

    /// Equivalent noise v_ik = (1/sqrt(rho_p)) N_i phi_k^H.
    pub fn equivalent(&self, bs: usize, pilot_row: &[Complex64], pilot_power: f64) -> Vec<Complex64> {
        let inv = 1.0 / pilot_power.sqrt();
        (0..self.antennas)
            .map(|m| {
                let mut acc = Complex64::ZERO;
                for (t, phi) in pilot_row.iter().enumerate() {
                    acc += self.entry(bs, m, t) * phi.conj();
                }
                acc * inv
            })
            .collect()
    }
}

/// MF channel estimates h_hat[i][k] (BS i, pilot k), length-M vectors.
#[derive(Debug, Clone)]
pub struct ChannelEstimates {
    pub cells: usize,
    pub pilots: usize,
    pub antennas: usize,
    data: Vec<Complex64>,
}

impl ChannelEstimates {
    #[inline]
    pub fn get(&self, bs: usize, pilot: usize) -> &[Complex64] {
        let idx = bs * self.pilots + pilot;
        &self.data[idx * self.antennas..(idx + 1) * self.antennas]
    }
}

fn check_dims(
    channels: &ChannelSet,
    assignments: &[PilotAssignment],
    pilots: &PilotBook,
) -> Result<()> {
    if assignments.len() != channels.cells {
        return Err(SimError::Dimension(format!(
            "{} assignments for {} cells",
            assignments.len(),
            channels.cells
        )));
    }
    for a in assignments {
        if a.len() != channels.users_per_cell {
            return Err(SimError::Dimension(format!(
                "assignment length {} does not match K = {}",
                a.len(),
                channels.users_per_cell
            )));
        }
    }
    if pilots.pilots != channels.users_per_cell {
        return Err(SimError::Dimension(format!(
            "pilot book has {} pilots for K = {}",
            pilots.pilots, channels.users_per_cell
        )));
    }
    Ok(())
}

/// Closed-form estimation path: contamination sum plus equivalent noise.
pub fn estimate_channels(
    channels: &ChannelSet,
    assignments: &[PilotAssignment],
    pilots: &PilotBook,
    cfg: &SystemConfig,
    noise: &PilotNoise,
) -> Result<ChannelEstimates> {
    check_dims(channels, assignments, pilots)?;
    let (cells, k, m) = (channels.cells, channels.users_per_cell, channels.antennas);
    let mut data = Vec::with_capacity(cells * k * m);
    for bs in 0..cells {
        for pilot in 0..k {
            let mut est = noise.equivalent(bs, pilots.row(pilot), cfg.pilot_power);
            for j in 0..cells {
                let h = channels.link(bs, j, assignments[j].user_of_pilot(pilot));
                for (e, hm) in est.iter_mut().zip(h) {
                    *e += hm;
                }
            }
            data.extend(est);
        }
    }
    Ok(ChannelEstimates {
        cells,
        pilots: k,
        antennas: m,
        data,
    })
}

/// Matrix estimation path: builds the received pilot block
/// Y_i = sqrt(rho_p) * sum over users of h * phi^T + N_i, then correlates
/// with each pilot row and rescales.
pub fn estimate_channels_matrix(
    channels: &ChannelSet,
    assignments: &[PilotAssignment],
    pilots: &PilotBook,
    cfg: &SystemConfig,
    noise: &PilotNoise,
) -> Result<ChannelEstimates> {
    check_dims(channels, assignments, pilots)?;
    let (cells, k, m) = (channels.cells, channels.users_per_cell, channels.antennas);
    let tau = pilots.length;
    let sqrt_p = cfg.pilot_power.sqrt();
    let inv_sqrt_p = 1.0 / sqrt_p;
    let mut data = Vec::with_capacity(cells * k * m);
    let mut received = vec![Complex64::ZERO; m * tau];
    for bs in 0..cells {
        received.iter_mut().for_each(|y| *y = Complex64::ZERO);
        for j in 0..cells {
            for pilot in 0..k {
                let h = channels.link(bs, j, assignments[j].user_of_pilot(pilot));
                let phi = pilots.row(pilot);
                for (mi, hm) in h.iter().enumerate() {
                    let scaled = sqrt_p * hm;
                    for (t, p) in phi.iter().enumerate() {
                        received[mi * tau + t] += scaled * p;
                    }
                }
            }
        }
        for (mi, row) in received.chunks_exact_mut(tau).enumerate() {
            for (t, y) in row.iter_mut().enumerate() {
                *y += noise.entry(bs, mi, t);
            }
        }
        for pilot in 0..k {
            let phi = pilots.row(pilot);
            for mi in 0..m {
                let mut acc = Complex64::ZERO;
                for (t, p) in phi.iter().enumerate() {
                    acc += received[mi * tau + t] * p.conj();
                }
                data.push(acc * inv_sqrt_p);
            }
        }
    }
    Ok(ChannelEstimates {
        cells,
        pilots: k,
        antennas: m,
        data,
    })
}

#[inline]
fn herm_dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Per-user SINR and capacity for the target cell.
#[derive(Debug, Clone)]
pub struct SinrReport {
    /// Linear SINR per target-cell user index; +inf sentinel in degenerate
    /// interference-free noiseless cases.
    pub sinr: Vec<f64>,
    /// log2(1 + SINR) per user.
    pub capacity: Vec<f64>,
    /// User index attaining the minimum SINR.
    pub min_user: usize,
    /// Number of +inf sentinels in `sinr`.
    pub infinite_count: usize,
}

impl SinrReport {
    pub fn min_sinr(&self) -> f64 {
        self.sinr[self.min_user]
    }

    fn from_sinrs(sinr: Vec<f64>) -> Self {
        let min_user = sinr
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).expect("no NaN SINR"))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let infinite_count = sinr.iter().filter(|s| s.is_infinite()).count();
        let capacity = sinr.iter().map(|&s| capacity(s).expect("sinr >= 0")).collect();
        Self {
            sinr,
            capacity,
            min_user,
            infinite_count,
        }
    }
}

/// Conditional-expectation residual power for one pilot of the target cell.
/// `h_hat` is the MF estimate for that pilot, `mates[j]` the pilot mate in
/// cell j.
fn residual_power(
    channels: &ChannelSet,
    h_hat: &[Complex64],
    mates: &[usize],
    cfg: &SystemConfig,
    target: usize,
) -> f64 {
    let (cells, k) = (channels.cells, channels.users_per_cell);
    let mut acc = 0.0;
    for j in 0..cells {
        for user in 0..k {
            let h = channels.link(target, j, user);
            let cross = herm_dot(h_hat, h);
            if user == mates[j] {
                // kept term: subtract the self-product the detector relies on
                let self_product = herm_dot(h, h);
                acc += (cross - self_product).norm_sqr();
            } else {
                acc += cross.norm_sqr();
            }
        }
    }
    let est_energy: f64 = h_hat.iter().map(|z| z.norm_sqr()).sum();
    cfg.data_power * acc + cfg.data_noise_var * est_energy
}

/// Finite-M uplink SINR per target-cell user (Monte-Carlo-free: the residual
/// power is the conditional expectation given the channels).
pub fn finite_m_sinr(
    channels: &ChannelSet,
    estimates: &ChannelEstimates,
    assignments: &[PilotAssignment],
    cfg: &SystemConfig,
    target: usize,
) -> Result<SinrReport> {
    if estimates.cells != channels.cells
        || estimates.pilots != channels.users_per_cell
        || estimates.antennas != channels.antennas
    {
        return Err(SimError::Dimension(
            "estimates do not match the channel set".into(),
        ));
    }
    if assignments.len() != channels.cells {
        return Err(SimError::Dimension(format!(
            "{} assignments for {} cells",
            assignments.len(),
            channels.cells
        )));
    }
    let (cells, k) = (channels.cells, channels.users_per_cell);
    let mut sinr = vec![0.0; k];
    for pilot in 0..k {
        let mates: Vec<usize> = (0..cells)
            .map(|j| assignments[j].user_of_pilot(pilot))
            .collect();
        let user = mates[target];
        let h_hat = estimates.get(target, pilot);
        let home = channels.link(target, target, user);
        let signal = herm_dot(home, home).norm_sqr();
        let contamination: f64 = (0..cells)
            .filter(|&j| j != target)
            .map(|j| {
                let h = channels.link(target, j, mates[j]);
                herm_dot(h, h).norm_sqr()
            })
            .sum();
        let residual = residual_power(channels, h_hat, &mates, cfg, target);
        let denom = contamination + residual / cfg.data_power;
        sinr[user] = if denom == 0.0 {
            f64::INFINITY
        } else {
            signal / denom
        };
    }
    Ok(SinrReport::from_sinrs(sinr))
}

/// Finite-M SINR table for the target cell: `table[pilot][user]` is the SINR
/// user `user` would see holding pilot `pilot`, with the other cells'
/// assignments and the pilot noise fixed. The SINR of a pilot depends on the
/// target cell's permutation only through its own holder, so a full
/// permutation scores as min over pilots of table[k][perm[k]]; this makes the
/// exhaustive problem-P search linear in K! instead of quadratic.
pub fn sinr_table(
    channels: &ChannelSet,
    others: &[PilotAssignment],
    pilots: &PilotBook,
    cfg: &SystemConfig,
    noise: &PilotNoise,
    target: usize,
) -> Result<Vec<Vec<f64>>> {
    check_dims(channels, others, pilots)?;
    let (cells, k) = (channels.cells, channels.users_per_cell);
    let mut table = vec![vec![0.0; k]; k];
    for pilot in 0..k {
        // contamination part of the estimate, independent of the home holder
        let mut base = noise.equivalent(target, pilots.row(pilot), cfg.pilot_power);
        let mut mates: Vec<usize> = (0..cells).map(|j| others[j].user_of_pilot(pilot)).collect();
        for j in 0..cells {
            if j == target {
                continue;
            }
            let h = channels.link(target, j, mates[j]);
            for (b, hm) in base.iter_mut().zip(h) {
                *b += hm;
            }
        }
        let contamination: f64 = (0..cells)
            .filter(|&j| j != target)
            .map(|j| {
                let h = channels.link(target, j, mates[j]);
                herm_dot(h, h).norm_sqr()
            })
            .sum();
        for user in 0..k {
            let home = channels.link(target, target, user);
            let h_hat: Vec<Complex64> =
                base.iter().zip(home).map(|(b, h)| b + h).collect();
            mates[target] = user;
            let signal = herm_dot(home, home).norm_sqr();
            let residual = residual_power(channels, &h_hat, &mates, cfg, target);
            let denom = contamination + residual / cfg.data_power;
            table[pilot][user] = if denom == 0.0 {
                f64::INFINITY
            } else {
                signal / denom
            };
        }
    }
    Ok(table)
}

/// Large-antenna SINR limit per target-cell user:
/// beta_home^2 / sum over other cells of beta_cross^2, indices resolved
/// through the pilot assignments. +inf with no interferers.
pub fn asymptotic_sinr(
    beta: &FadingTensor,
    assignments: &[PilotAssignment],
    target: usize,
) -> Result<Vec<f64>> {
    let (cells, k) = (beta.cells, beta.users_per_cell);
    if assignments.len() != cells {
        return Err(SimError::Dimension(format!(
            "{} assignments for {cells} cells",
            assignments.len()
        )));
    }
    let mut sinr = vec![0.0; k];
    for pilot in 0..k {
        let user = assignments[target].user_of_pilot(pilot);
        let num = beta.get(target, target, user).powi(2);
        let den: f64 = (0..cells)
            .filter(|&j| j != target)
            .map(|j| beta.get(target, j, assignments[j].user_of_pilot(pilot)).powi(2))
            .sum();
        sinr[user] = if den == 0.0 { f64::INFINITY } else { num / den };
    }
    Ok(sinr)
}

/// Shannon capacity log2(1 + sinr) in bits/s/Hz; +inf propagates.
pub fn capacity(sinr: f64) -> Result<f64> {
    if sinr < 0.0 || sinr.is_nan() {
        return Err(SimError::Domain(format!(
            "SINR must be nonnegative, got {sinr}"
        )));
    }
    Ok((1.0 + sinr).log2())
}
