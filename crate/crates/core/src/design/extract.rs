//! Rank-one beamformer extraction from relaxed covariance solutions.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::array::{complex_normal, CMatrix, CVector, CommChannel, SteeringBundle};
use crate::error::{Error, Result};

use super::model::coverage_residual;
use super::BeamformerSet;

/// A covariance counts as rank one when `lambda_2 <= RANK_ONE_TOL * lambda_1`.
pub const RANK_ONE_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct Extraction {
    pub beamformers: BeamformerSet,
    /// Number of draws consumed, including the accepted one.
    pub attempts: usize,
}

/// Powers `q` that put every user exactly at SINR `gamma` for the given
/// beam directions: `|h_n^H u_n|^2 q_n - gamma sum_{i != n} |h_n^H u_i|^2 q_i = gamma sigma^2`.
pub fn power_control(channel: &CommChannel, dirs: &[CVector], gamma: f64, sigma_n2: f64) -> Result<Vec<f64>> {
    let n = dirs.len();
    let f = DMatrix::from_fn(n, n, |r, c| {
        let g = (channel.h.row(r) * &dirs[c])[(0, 0)].norm_sqr();
        if r == c {
            g
        } else {
            -gamma * g
        }
    });
    let rhs = DVector::from_element(n, gamma * sigma_n2);
    let q = f.lu().solve(&rhs).ok_or(Error::NegativePower { user: 0, value: f64::NAN })?;
    if let Some((user, &value)) = q.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::NegativePower { user, value });
    }
    Ok(q.iter().copied().collect())
}

/// Rescales each covariance so every SINR constraint of the relaxed
/// problem holds with equality.
pub fn rebalance_covariances(r: &[CMatrix], channel: &CommChannel, gamma: f64, sigma_n2: f64) -> Result<Vec<CMatrix>> {
    let n = r.len();
    let quad = |u: usize, i: usize| {
        let h = channel.h_vec(u);
        (h.adjoint() * &r[i] * &h)[(0, 0)].re
    };
    let f = DMatrix::from_fn(n, n, |a, b| if a == b { quad(a, a) } else { -gamma * quad(a, b) });
    let rhs = DVector::from_element(n, gamma * sigma_n2);
    let s = f.lu().solve(&rhs).ok_or(Error::NegativePower { user: 0, value: f64::NAN })?;
    if let Some((user, &value)) = s.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::NegativePower { user, value });
    }
    Ok(r.iter().zip(s.iter()).map(|(m, &k)| m * Complex64::new(k, 0.0)).collect())
}

fn hermitian(r: &CMatrix) -> CMatrix {
    (r + r.adjoint()) * Complex64::new(0.5, 0.0)
}

fn sqrt_psd(r: &CMatrix) -> CMatrix {
    let eig = hermitian(r).symmetric_eigen();
    let v = &eig.eigenvectors;
    let d = CMatrix::from_diagonal(&eig.eigenvalues.map(|l| Complex64::new(l.max(0.0).sqrt(), 0.0)));
    v * d * v.adjoint()
}

/// Deterministic first candidate `R_n h_n`, whose outer product is
/// dominated by `R_n` while keeping `h_n^H R_n h_n`.
fn channel_matched(r: &CMatrix, h: &CVector) -> CVector {
    let u = r * h;
    let nrm = u.norm();
    if nrm > 0.0 {
        u / Complex64::new(nrm, 0.0)
    } else {
        u
    }
}

/// Algorithm for turning relaxed covariances into beamformers that meet
/// every SINR threshold with equality. The first draw is `R_n h_n`; later
/// draws are `R_n^{1/2} v` with `v` complex Gaussian. A draw is accepted
/// when all powers are positive, the total power does not exceed that of
/// the relaxed solution and, if `coverage` is given, the beam-coverage
/// condition holds.
pub fn extract_rank_one(
    r: &[CMatrix],
    channel: &CommChannel,
    gamma: f64,
    sigma_n2: f64,
    seed: u64,
    max_attempts: usize,
    coverage: Option<&[SteeringBundle]>,
) -> Result<Extraction> {
    let relaxed_power: f64 = r.iter().map(|m| m.trace().re).sum();
    let roots: Vec<CMatrix> = r.iter().map(sqrt_psd).collect();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut last = String::from("no attempts");
    for attempt in 0..max_attempts {
        let dirs: Vec<CVector> = if attempt == 0 {
            r.iter().enumerate().map(|(n, m)| channel_matched(m, &channel.h_vec(n))).collect()
        } else {
            roots
                .iter()
                .map(|root| {
                    let v = CVector::from_fn(root.nrows(), |_, _| complex_normal(&mut rng, 1.0));
                    let u = root * v;
                    let nrm = u.norm();
                    u / Complex64::new(nrm, 0.0)
                })
                .collect()
        };
        let q = match power_control(channel, &dirs, gamma, sigma_n2) {
            Ok(q) => q,
            Err(e) => {
                last = e.to_string();
                continue;
            }
        };
        let cols: Vec<CVector> = dirs.iter().zip(&q).map(|(u, &qn)| u * Complex64::new(qn.sqrt(), 0.0)).collect();
        let set = BeamformerSet::from_columns(&cols);
        let power = set.power();
        if power > relaxed_power + 1e-9 {
            last = format!("power {power:.6e} exceeds relaxed power {relaxed_power:.6e}");
            continue;
        }
        if let Some(bundles) = coverage {
            let res = coverage_residual(&set.r_x(), bundles);
            if res < -1e-9 * relaxed_power {
                last = format!("coverage residual {res:.3e}");
                continue;
            }
        }
        return Ok(Extraction { beamformers: set, attempts: attempt + 1 });
    }
    Err(Error::ExtractionFailed { attempts: max_attempts, last })
}

/// Dominant eigenpair `(lambda_1, v_1)` and `lambda_2` of a Hermitian matrix.
pub(crate) fn dominant(r: &CMatrix) -> (f64, CVector, f64) {
    let eig = hermitian(r).symmetric_eigen();
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let l1 = eig.eigenvalues[idx[0]];
    let l2 = idx.get(1).map_or(0.0, |&i| eig.eigenvalues[i]);
    (l1, eig.eigenvectors.column(idx[0]).into_owned(), l2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{steering, CommChannel};

    #[test]
    fn single_user_power_is_scalar_solve() {
        let h = steering(4, 0.5, 0.3) * Complex64::new(0.01, 0.0);
        let ch = CommChannel::from_vectors(std::slice::from_ref(&h));
        let u = steering(4, 0.5, 0.25);
        let u = &u / Complex64::new(u.norm(), 0.0);
        let q = power_control(&ch, std::slice::from_ref(&u), 10.0, 1e-6).unwrap();
        let g = (h.adjoint() * &u)[(0, 0)].norm_sqr();
        assert!((q[0] - 10.0 * 1e-6 / g).abs() < 1e-12 * q[0]);
    }

    #[test]
    fn sqrt_squares_back() {
        let a = steering(3, 0.5, 0.2);
        let b = steering(3, 0.5, -0.6);
        let r = &a * a.adjoint() + &b * b.adjoint() * Complex64::new(0.5, 0.0);
        let s = sqrt_psd(&r);
        assert!((&s * &s - &r).norm() < 1e-12);
    }
}
