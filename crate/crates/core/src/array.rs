//! Uniform linear array responses, multipath downlink channels, SINR and
//! transmit beampatterns.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::contour::ContourPartition;
use crate::error::{Error, Result};

pub type CVector = DVector<Complex64>;
pub type CMatrix = DMatrix<Complex64>;

/// Relative PSD tolerance on covariance inputs.
pub const PSD_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayConfig {
    pub n_t: usize,
    pub n_r: usize,
    /// Element spacing in wavelengths.
    pub spacing: f64,
}

impl ArrayConfig {
    pub fn new(n_t: usize, n_r: usize) -> Self {
        Self { n_t, n_r, spacing: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Tx,
    Rx,
}

impl ArrayConfig {
    fn elements(&self, side: Side) -> usize {
        match side {
            Side::Tx => self.n_t,
            Side::Rx => self.n_r,
        }
    }
}

/// Center-referenced response `exp(j 2 pi s sin(phi) ((N-1)/2 - i))`.
pub fn steering(n: usize, spacing: f64, phi: f64) -> CVector {
    let k = 2.0 * PI * spacing * phi.sin();
    let c = (n as f64 - 1.0) / 2.0;
    DVector::from_fn(n, |i, _| Complex64::from_polar(1.0, k * (c - i as f64)))
}

/// `d/dphi` of [`steering`].
pub fn steering_dphi(n: usize, spacing: f64, phi: f64) -> CVector {
    let k = 2.0 * PI * spacing * phi.cos();
    let c = (n as f64 - 1.0) / 2.0;
    steering(n, spacing, phi)
        .iter()
        .enumerate()
        .map(|(i, a)| a * Complex64::new(0.0, k * (c - i as f64)))
        .collect::<Vec<_>>()
        .into()
}

pub fn steering_tx(cfg: &ArrayConfig, phi: f64) -> CVector {
    steering(cfg.n_t, cfg.spacing, phi)
}

pub fn steering_rx(cfg: &ArrayConfig, phi: f64) -> CVector {
    steering(cfg.n_r, cfg.spacing, phi)
}

pub fn steering_derivative(cfg: &ArrayConfig, phi: f64, side: Side) -> CVector {
    steering_dphi(cfg.elements(side), cfg.spacing, phi)
}

/// `||d b / d phi||^2 / N`, which is `pi^2 (N^2 - 1) cos^2(phi) / 12` at
/// half-wavelength spacing.
pub fn z1(n: usize, spacing: f64, phi: f64) -> f64 {
    let k = 2.0 * PI * spacing * phi.cos();
    k * k * ((n * n) as f64 - 1.0) / 12.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteeringBundle {
    pub a: CVector,
    pub a_dot: CVector,
    pub b: CVector,
    pub b_dot: CVector,
    pub z1: f64,
}

impl SteeringBundle {
    pub fn new(cfg: &ArrayConfig, phi: f64) -> Self {
        Self {
            a: steering_tx(cfg, phi),
            a_dot: steering_derivative(cfg, phi, Side::Tx),
            b: steering_rx(cfg, phi),
            b_dot: steering_derivative(cfg, phi, Side::Rx),
            z1: z1(cfg.n_r, cfg.spacing, phi),
        }
    }
}

pub fn bundles_for(cfg: &ArrayConfig, partition: &ContourPartition) -> Vec<SteeringBundle> {
    partition.subsections.iter().map(|s| SteeringBundle::new(cfg, s.phi)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathComponent {
    pub beta: [f64; 2],
    pub phi: f64,
    pub power: f64,
}

/// How the per-user multipath is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    pub paths: usize,
    /// Power share of the line-of-sight path; `None` when the line of sight
    /// is blocked and every path is random with equal power.
    pub los_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommChannel {
    /// Row `n` is `h_n^H`.
    pub h: CMatrix,
    pub gains: Vec<f64>,
    pub paths: Vec<Vec<PathComponent>>,
}

impl CommChannel {
    pub fn from_vectors(cols: &[CVector]) -> Self {
        let n_t = cols.first().map_or(0, |c| c.len());
        let h = DMatrix::from_fn(cols.len(), n_t, |n, i| cols[n][i].conj());
        Self { h, gains: vec![1.0; cols.len()], paths: vec![Vec::new(); cols.len()] }
    }

    pub fn users(&self) -> usize {
        self.h.nrows()
    }

    /// Column vector `h_n`.
    pub fn h_vec(&self, n: usize) -> CVector {
        self.h.row(n).adjoint()
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub(crate) fn complex_normal<R: Rng>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// Per-user multipath channel `h_n = sqrt(g_n) sum_l beta_l a(phi_l)`. The
/// line-of-sight gain has power `los_fraction` and a uniform phase; every
/// other gain is complex Gaussian.
pub fn gen_channel(
    cfg: &ArrayConfig,
    user_dirs: &[f64],
    path_loss_db: &[f64],
    model: ChannelModel,
    seed: u64,
) -> Result<CommChannel> {
    if model.paths == 0 {
        return Err(Error::InvalidScenario("channel needs at least one path".into()));
    }
    if user_dirs.len() != path_loss_db.len() {
        return Err(Error::InvalidScenario("one path loss per user required".into()));
    }
    if let Some(f) = model.los_fraction {
        if !(f > 0.0 && f <= 1.0) {
            return Err(Error::InvalidScenario(format!("LoS fraction {f} outside (0, 1]")));
        }
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut h = DMatrix::zeros(user_dirs.len(), cfg.n_t);
    let mut gains = Vec::with_capacity(user_dirs.len());
    let mut paths = Vec::with_capacity(user_dirs.len());
    for (n, (&dir, &pl)) in user_dirs.iter().zip(path_loss_db).enumerate() {
        let g = db_to_linear(-pl);
        let l = model.paths;
        let powers: Vec<f64> = match model.los_fraction {
            Some(_) if l == 1 => vec![1.0],
            Some(f) => std::iter::once(f).chain(std::iter::repeat_n((1.0 - f) / (l - 1) as f64, l - 1)).collect(),
            None => vec![1.0 / l as f64; l],
        };
        let mut comps = Vec::with_capacity(l);
        let mut hv = CVector::zeros(cfg.n_t);
        for (idx, &power) in powers.iter().enumerate() {
            let phi =
                if idx == 0 && model.los_fraction.is_some() { dir } else { rng.random_range(-FRAC_PI_2..FRAC_PI_2) };
            let beta = if idx == 0 && model.los_fraction.is_some() {
                Complex64::from_polar(power.sqrt(), rng.random_range(-PI..PI))
            } else {
                complex_normal(&mut rng, power)
            };
            hv += steering_tx(cfg, phi) * beta;
            comps.push(PathComponent { beta: [beta.re, beta.im], phi, power });
        }
        hv *= Complex64::new(g.sqrt(), 0.0);
        for i in 0..cfg.n_t {
            h[(n, i)] = hv[i].conj();
        }
        gains.push(g);
        paths.push(comps);
    }
    Ok(CommChannel { h, gains, paths })
}

/// SINR of user `n` for beamformer columns `w`.
pub fn sinr(channel: &CommChannel, w: &CMatrix, n: usize, sigma_n2: f64) -> f64 {
    let gains = channel.h.row(n) * w;
    let signal = gains[n].norm_sqr();
    let interference: f64 = gains.iter().enumerate().filter(|(i, _)| *i != n).map(|(_, g)| g.norm_sqr()).sum();
    signal / (interference + sigma_n2)
}

pub fn sinrs(channel: &CommChannel, w: &CMatrix, sigma_n2: f64) -> Vec<f64> {
    (0..channel.users()).map(|n| sinr(channel, w, n, sigma_n2)).collect()
}

pub fn sum_rate(channel: &CommChannel, w: &CMatrix, sigma_n2: f64) -> f64 {
    sinrs(channel, w, sigma_n2).iter().map(|g| (1.0 + g).log2()).sum()
}

/// Real part of `a^H R b`.
pub fn quad_re(a: &CVector, r: &CMatrix, b: &CVector) -> f64 {
    (a.adjoint() * r * b)[(0, 0)].re
}

/// Smallest eigenvalue and trace of a Hermitian matrix.
pub fn hermitian_min_eig(r: &CMatrix) -> (f64, f64) {
    let herm = (r + r.adjoint()) * Complex64::new(0.5, 0.0);
    let min = herm.symmetric_eigenvalues().min();
    (min, r.trace().re)
}

pub fn check_psd(r: &CMatrix) -> Result<()> {
    let (min_eigenvalue, trace) = hermitian_min_eig(r);
    if min_eigenvalue < -PSD_TOL * trace.abs().max(f64::MIN_POSITIVE) {
        return Err(Error::NotPsd { min_eigenvalue, trace });
    }
    Ok(())
}

/// `a(phi)^H R_x a(phi)` on each grid angle.
pub fn beampattern(r_x: &CMatrix, spacing: f64, grid: &[f64]) -> Result<Vec<f64>> {
    check_psd(r_x)?;
    let n = r_x.nrows();
    Ok(grid
        .iter()
        .map(|&phi| {
            let a = steering(n, spacing, phi);
            quad_re(&a, r_x, &a)
        })
        .collect())
}

/// Beampattern of `W W^H` without forming the covariance.
pub fn beampattern_w(w: &CMatrix, spacing: f64, grid: &[f64]) -> Vec<f64> {
    grid.iter()
        .map(|&phi| {
            let a = steering(w.nrows(), spacing, phi);
            (a.adjoint() * w).iter().map(|v| v.norm_sqr()).sum()
        })
        .collect()
}

/// Uniform grid from `start` to `stop` inclusive in degrees, returned in radians.
pub fn degree_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step).round() as usize + 1;
    (0..n).map(|i| (start + i as f64 * step).to_radians()).collect()
}
