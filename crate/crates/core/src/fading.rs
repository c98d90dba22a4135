//! Large-scale fading (path loss with log-normal shadowing) and small-scale
//! Rayleigh channel vectors.
//!
//! Large-scale gains use beta = z / (r/R)^alpha with 10*log10(z) Gaussian of
//! standard deviation sigma_shadow, independent per (BS, cell, user) link.
//! Channel vectors compose an i.i.d. CN(0, 1) small-scale draw with
//! sqrt(beta). Everything is stored in linear power; dB appears only in
//! reports.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::geometry::DistanceTensor;
use crate::{db_to_lin, Result, SimError};

/// Large-scale gain tensor beta[i][j][k] (BS i, cell j, user k), linear.
#[derive(Debug, Clone)]
pub struct FadingTensor {
    pub cells: usize,
    pub users_per_cell: usize,
    data: Vec<f64>,
}

impl FadingTensor {
    pub fn from_values(cells: usize, users_per_cell: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != cells * cells * users_per_cell {
            return Err(SimError::Dimension(format!(
                "beta tensor needs {} entries, got {}",
                cells * cells * users_per_cell,
                data.len()
            )));
        }
        Ok(Self {
            cells,
            users_per_cell,
            data,
        })
    }

    #[inline]
    pub fn get(&self, bs: usize, cell: usize, user: usize) -> f64 {
        self.data[(bs * self.cells + cell) * self.users_per_cell + user]
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }
}

/// Composed channel vectors h[i][j][k] of length `antennas`, flattened.
#[derive(Debug, Clone)]
pub struct ChannelSet {
    pub cells: usize,
    pub users_per_cell: usize,
    pub antennas: usize,
    data: Vec<Complex64>,
}

impl ChannelSet {
    /// Builds a channel set from explicit link values (tests and oracles).
    pub fn from_values(
        cells: usize,
        users_per_cell: usize,
        antennas: usize,
        data: Vec<Complex64>,
    ) -> Result<Self> {
        if data.len() != cells * cells * users_per_cell * antennas {
            return Err(SimError::Dimension(format!(
                "channel set needs {} entries, got {}",
                cells * cells * users_per_cell * antennas,
                data.len()
            )));
        }
        Ok(Self {
            cells,
            users_per_cell,
            antennas,
            data,
        })
    }

    /// Per-antenna gains for the link from user k of cell j to BS i.
    #[inline]
    pub fn link(&self, bs: usize, cell: usize, user: usize) -> &[Complex64] {
        let idx = (bs * self.cells + cell) * self.users_per_cell + user;
        &self.data[idx * self.antennas..(idx + 1) * self.antennas]
    }
}

/// System power and propagation parameters (Table-I style).
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// Pilot transmit power, linear mW.
    pub pilot_power: f64,
    /// Uplink data transmit power, linear mW.
    pub data_power: f64,
    /// Pilot-phase noise variance per complex entry, linear.
    pub pilot_noise_var: f64,
    /// Data-phase noise variance per complex entry, linear.
    pub data_noise_var: f64,
    pub path_loss_exponent: f64,
    /// Shadowing standard deviation, dB.
    pub shadow_sigma_db: f64,
    /// SNR of a shadowing-free cell-edge user, dB; calibrates the noise floor.
    pub cell_edge_snr_db: f64,
}

impl SystemConfig {
    /// Defaults: 0 dBm pilot and data power, path-loss exponent 3, 8 dB
    /// shadowing, and noise variances set so a cell-edge user with beta = 1
    /// sees 20 dB SNR.
    pub fn table_defaults() -> Self {
        Self::from_dbm(0.0, 0.0, 3.0, 8.0, 20.0)
    }

    /// Builds a config from dBm powers, deriving both noise variances from
    /// the cell-edge SNR: sigma^2 = rho_u * 10^(-snr/10).
    pub fn from_dbm(
        pilot_power_dbm: f64,
        data_power_dbm: f64,
        path_loss_exponent: f64,
        shadow_sigma_db: f64,
        cell_edge_snr_db: f64,
    ) -> Self {
        let pilot_power = db_to_lin(pilot_power_dbm);
        let data_power = db_to_lin(data_power_dbm);
        let noise = data_power * db_to_lin(-cell_edge_snr_db);
        Self {
            pilot_power,
            data_power,
            pilot_noise_var: noise,
            data_noise_var: noise,
            path_loss_exponent,
            shadow_sigma_db,
            cell_edge_snr_db,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("pilot_power", self.pilot_power),
            ("data_power", self.data_power),
            ("pilot_noise_var", self.pilot_noise_var),
            ("data_noise_var", self.data_noise_var),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SimError::Config(format!(
                    "{name} must be strictly positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Generates the large-scale tensor beta = z / (r/R)^alpha with log-normal
/// shadowing of standard deviation `shadow_sigma_db` (dB domain), drawn
/// independently per link. `shadow_sigma_db = 0` disables shadowing exactly.
pub fn large_scale<R: Rng>(
    r: &DistanceTensor,
    cell_radius: f64,
    path_loss_exponent: f64,
    shadow_sigma_db: f64,
    rng: &mut R,
) -> FadingTensor {
    let n = r.cells * r.cells * r.users_per_cell;
    let mut data = Vec::with_capacity(n);
    for bs in 0..r.cells {
        for cell in 0..r.cells {
            for user in 0..r.users_per_cell {
                let z = if shadow_sigma_db == 0.0 {
                    1.0
                } else {
                    let gauss: f64 = StandardNormal.sample(rng);
                    db_to_lin(gauss * shadow_sigma_db)
                };
                let dist = r.get(bs, cell, user);
                data.push(z / (dist / cell_radius).powf(path_loss_exponent));
            }
        }
    }
    FadingTensor {
        cells: r.cells,
        users_per_cell: r.users_per_cell,
        data,
    }
}

/// One complex sample of CN(0, 1): independent real and imaginary parts of
/// variance 1/2 each.
#[inline]
pub fn complex_gaussian<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Draws one coherence block of channel vectors: h = g * sqrt(beta) with g
/// i.i.d. CN(0, I_M). Deterministic given the rng state.
pub fn draw_channels<R: Rng>(beta: &FadingTensor, antennas: usize, rng: &mut R) -> ChannelSet {
    let links = beta.cells * beta.cells * beta.users_per_cell;
    let mut data = Vec::with_capacity(links * antennas);
    for b in beta.values() {
        let scale = b.sqrt();
        for _ in 0..antennas {
            data.push(complex_gaussian(rng) * scale);
        }
    }
    ChannelSet {
        cells: beta.cells,
        users_per_cell: beta.users_per_cell,
        antennas,
        data,
    }
}
