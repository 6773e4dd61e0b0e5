//! Echo simulation, matched-filter direction estimation and Monte-Carlo
//! error statistics.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::array::{complex_normal, degree_grid, ArrayConfig, CMatrix, SteeringBundle};
use crate::contour::ContourPartition;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymbolKind {
    Gaussian,
    Qpsk,
}

/// Stream `stream` of the ChaCha generator keyed by `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn gen_symbols_with<R: Rng>(n_c: usize, t: usize, kind: SymbolKind, rng: &mut R) -> CMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(n_c, t, |_, _| match kind {
        SymbolKind::Gaussian => complex_normal(rng, 1.0),
        SymbolKind::Qpsk => {
            let re = if rng.random::<bool>() { h } else { -h };
            let im = if rng.random::<bool>() { h } else { -h };
            Complex64::new(re, im)
        }
    })
}

/// Unit-power symbol streams, one row per user.
pub fn gen_symbols(n_c: usize, t: usize, kind: SymbolKind, seed: u64) -> CMatrix {
    gen_symbols_with(n_c, t, kind, &mut ChaCha20Rng::seed_from_u64(seed))
}

/// Noiseless `g sum_k sqrt(l_k) alpha_k b_k a_k^H X` for transmit block `x`.
pub fn echo_from(
    x: &CMatrix,
    partition: &ContourPartition,
    bundles: &[SteeringBundle],
    g: f64,
    alpha: &[Complex64],
) -> CMatrix {
    let n_r = bundles[0].b.len();
    let mut y = CMatrix::zeros(n_r, x.ncols());
    for ((s, b), &al) in partition.subsections.iter().zip(bundles).zip(alpha) {
        let row = b.a.adjoint() * x;
        y += &b.b * row * (al * g * s.l.sqrt());
    }
    y
}

fn draw_echo<R: Rng>(
    w: &CMatrix,
    c: &CMatrix,
    partition: &ContourPartition,
    bundles: &[SteeringBundle],
    g: f64,
    sigma_s2: f64,
    rng: &mut R,
) -> CMatrix {
    let alpha: Vec<Complex64> = (0..partition.k()).map(|_| complex_normal(rng, 1.0)).collect();
    let x = w * c;
    let mut y = echo_from(&x, partition, bundles, g, &alpha);
    if sigma_s2 > 0.0 {
        for v in y.iter_mut() {
            *v += complex_normal(rng, sigma_s2);
        }
    }
    y
}

/// Echo with fresh `alpha_k ~ CN(0, 1)` and noise `CN(0, sigma_s2)` drawn from `seed`.
pub fn gen_echo(
    w: &CMatrix,
    c: &CMatrix,
    partition: &ContourPartition,
    bundles: &[SteeringBundle],
    g: f64,
    sigma_s2: f64,
    seed: u64,
) -> CMatrix {
    draw_echo(w, c, partition, bundles, g, sigma_s2, &mut ChaCha20Rng::seed_from_u64(seed))
}

/// Uniform grid over [-90, 90] degrees, in radians.
pub fn angle_grid(step_deg: f64) -> Vec<f64> {
    degree_grid(-90.0, 90.0, step_deg)
}

/// Grid angle maximizing `|b(phi)^H Y|`; ties go to the smallest `|phi|`,
/// then the smallest `phi`.
pub fn mf_estimate(y: &CMatrix, cfg: &ArrayConfig, grid: &[f64]) -> f64 {
    let n = y.nrows();
    let gram = y * y.adjoint();
    // Lag sums r_d = sum_{i - j = d} G_ij for d >= 0.
    let lags: Vec<Complex64> = (0..n).map(|d| (d..n).map(|i| gram[(i, i - d)]).sum()).collect();
    let mut best = (f64::NEG_INFINITY, f64::NAN);
    for &phi in grid {
        let k = 2.0 * std::f64::consts::PI * cfg.spacing * phi.sin();
        let mut val = lags[0].re;
        for (d, r) in lags.iter().enumerate().skip(1) {
            val += 2.0 * (r * Complex64::from_polar(1.0, k * d as f64)).re;
        }
        let better = val > best.0
            || (val == best.0 && (phi.abs() < best.1.abs() || (phi.abs() == best.1.abs() && phi < best.1)));
        if better {
            best = (val, phi);
        }
    }
    best.1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub phi_hat: f64,
    pub phi_true: f64,
    pub squared_error: f64,
}

/// Fixed ingredients of a Monte-Carlo run.
#[derive(Debug, Clone)]
pub struct MseSetup<'a> {
    pub array: ArrayConfig,
    pub partition: &'a ContourPartition,
    pub bundles: &'a [SteeringBundle],
    pub g: f64,
    pub sigma_s2: f64,
    pub phi_true: f64,
    pub symbols: usize,
    pub kind: SymbolKind,
    pub grid: &'a [f64],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseResult {
    pub rmse: f64,
    pub trials: Vec<TrialResult>,
}

/// Runs `n_trials` independent trials; trial `i` draws its symbols, RCS
/// and noise from stream `i` of `seed`, so designs compared under the same
/// seed see identical randomness.
pub fn monte_carlo_mse(setup: &MseSetup<'_>, w: &CMatrix, n_trials: usize, seed: u64) -> MseResult {
    let trials: Vec<TrialResult> = (0..n_trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, i);
            let c = gen_symbols_with(w.ncols(), setup.symbols, setup.kind, &mut rng);
            let y = draw_echo(w, &c, setup.partition, setup.bundles, setup.g, setup.sigma_s2, &mut rng);
            let phi_hat = mf_estimate(&y, &setup.array, setup.grid);
            let e = phi_hat - setup.phi_true;
            TrialResult { phi_hat, phi_true: setup.phi_true, squared_error: e * e }
        })
        .collect();
    let mse = trials.iter().map(|t| t.squared_error).sum::<f64>() / trials.len().max(1) as f64;
    MseResult { rmse: mse.sqrt(), trials }
}

/// One-sided exact sign test: probability of at least `wins` successes out
/// of `wins + losses` fair coin flips.
pub fn sign_test_p_value(wins: usize, losses: usize) -> f64 {
    let n = wins + losses;
    if n == 0 {
        return 1.0;
    }
    let ln_half_n = -(n as f64) * std::f64::consts::LN_2;
    let mut ln_c = 0.0f64;
    let mut terms = Vec::with_capacity(n + 1);
    for k in 0..=n {
        if k > 0 {
            ln_c += ((n - k + 1) as f64).ln() - (k as f64).ln();
        }
        if k >= wins {
            terms.push(ln_c + ln_half_n);
        }
    }
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()).exp().min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_test_small_cases() {
        assert!((sign_test_p_value(3, 0) - 0.125).abs() < 1e-12);
        assert!((sign_test_p_value(0, 3) - 1.0).abs() < 1e-12);
        assert!((sign_test_p_value(2, 1) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn grid_sizes() {
        assert_eq!(angle_grid(0.1).len(), 1801);
        assert_eq!(angle_grid(1.0).len(), 181);
    }
}
