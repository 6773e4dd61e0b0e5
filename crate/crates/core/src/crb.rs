//! Fisher information and Cramér-Rao bounds on the target range, direction
//! and orientation, for extended and point targets.

use nalgebra::{Matrix2x3, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::array::{check_psd, quad_re, CMatrix, SteeringBundle};
use crate::contour::{global_point, ContourPartition, TargetPose, TfsContour, Vec2};
use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Relative threshold under which a Schur-reduced information term is
/// treated as zero.
const DEGENERATE_TOL: f64 = 1e-12;
const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensingParams {
    /// Sensing path loss `1 / d_o^2`.
    pub g: f64,
    pub sigma_s2: f64,
    pub t_s: f64,
    pub bandwidth: f64,
    pub c0: f64,
}

impl SensingParams {
    pub fn new(d_o: f64, sigma_s2: f64, t_s: f64, bandwidth: f64) -> Self {
        Self { g: 1.0 / (d_o * d_o), sigma_s2, t_s, bandwidth, c0: SPEED_OF_LIGHT }
    }

    /// Delay information scale `t_s (4 pi B / c0)^2`.
    pub fn z2(&self) -> f64 {
        let k = 4.0 * std::f64::consts::PI * self.bandwidth / self.c0;
        self.t_s * k * k
    }

    /// `2 g^2 N_r / sigma_s^2`.
    fn prefactor(&self, n_r: usize) -> f64 {
        2.0 * self.g * self.g * n_r as f64 / self.sigma_s2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FimBlocks {
    pub f_kappa1: [[f64; 3]; 3],
    pub f_g: f64,
    pub f_kappa1_g: [f64; 3],
    pub j_kappa1: [[f64; 3]; 3],
}

impl FimBlocks {
    fn assemble(f: Matrix3<f64>, f_g: f64, f_kg: Vector3<f64>) -> Self {
        let j = f - f_kg * f_kg.transpose() / f_g;
        Self { f_kappa1: to_rows(&f), f_g, f_kappa1_g: [f_kg[0], f_kg[1], f_kg[2]], j_kappa1: to_rows(&j) }
    }

    pub fn f_matrix(&self) -> Matrix3<f64> {
        from_rows(&self.f_kappa1)
    }

    pub fn j_matrix(&self) -> Matrix3<f64> {
        from_rows(&self.j_kappa1)
    }
}

fn to_rows(m: &Matrix3<f64>) -> [[f64; 3]; 3] {
    std::array::from_fn(|i| std::array::from_fn(|j| m[(i, j)]))
}

fn from_rows(r: &[[f64; 3]; 3]) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| r[i][j])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubsectionDiagnostics {
    /// `a^H R_x a`.
    pub beam: f64,
    /// `a_dot^H R_x a_dot`.
    pub deriv: f64,
    /// `Re(a_dot^H R_x a)`.
    pub cross: f64,
    pub x: f64,
    pub z1: f64,
    pub l: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrbReport {
    pub crb_d: f64,
    pub crb_phi: f64,
    pub crb_varphi: f64,
    pub blocks: FimBlocks,
    pub per_subsection: Vec<SubsectionDiagnostics>,
}

pub fn diagnostics(
    partition: &ContourPartition,
    bundles: &[SteeringBundle],
    r_x: &CMatrix,
) -> Result<Vec<SubsectionDiagnostics>> {
    check_psd(r_x)?;
    assert_eq!(partition.k(), bundles.len(), "one steering bundle per subsection");
    partition
        .subsections
        .iter()
        .zip(bundles)
        .enumerate()
        .map(|(k, (s, b))| {
            let beam = quad_re(&b.a, r_x, &b.a);
            if !(beam > 0.0) {
                return Err(Error::ZeroIllumination { subsection: k, value: beam });
            }
            Ok(SubsectionDiagnostics {
                beam,
                deriv: quad_re(&b.a_dot, r_x, &b.a_dot),
                cross: quad_re(&b.a_dot, r_x, &b.a),
                x: s.x,
                z1: b.z1,
                l: s.l,
            })
        })
        .collect()
}

/// Weighted sums shared by the closed-form bounds.
struct Sums {
    s0: f64,
    s1: f64,
    s2: f64,
    angle: f64,
    cross: f64,
}

impl Sums {
    fn new(diag: &[SubsectionDiagnostics]) -> Self {
        let mut s = Sums { s0: 0.0, s1: 0.0, s2: 0.0, angle: 0.0, cross: 0.0 };
        for d in diag {
            s.s0 += d.l * d.beam;
            s.s1 += d.l * d.x * d.beam;
            s.s2 += d.l * d.x * d.x * d.beam;
            s.angle += d.l * (d.z1 * d.beam + d.deriv);
            s.cross += d.l * d.cross;
        }
        s
    }

    /// `sum l (Z1 A + D) - (sum l C)^2 / sum l A`.
    fn direction_information(&self) -> f64 {
        self.angle - self.cross * self.cross / self.s0
    }
}

fn direction_bound(sums: &Sums, sp: &SensingParams, n_r: usize) -> Result<f64> {
    let info = sums.direction_information();
    if !(info > DEGENERATE_TOL * sums.angle.abs()) {
        return Err(Error::DegenerateFim(format!("direction information {info:.3e} is not positive")));
    }
    Ok(1.0 / (sp.prefactor(n_r) * sp.t_s * info))
}

/// Closed-form extended-target bounds.
pub fn crb_et(
    partition: &ContourPartition,
    bundles: &[SteeringBundle],
    r_x: &CMatrix,
    sp: &SensingParams,
) -> Result<CrbReport> {
    let n_r = bundles.first().map_or(0, |b| b.b.len());
    let diag = diagnostics(partition, bundles, r_x)?;
    let sums = Sums::new(&diag);
    let crb_phi = direction_bound(&sums, sp, n_r)?;
    let c = sp.prefactor(n_r);
    let range_info = sums.s0 - sums.s1 * sums.s1 / sums.s2;
    let spread_info = sums.s2 - sums.s1 * sums.s1 / sums.s0;
    if !(sums.s2 > 0.0) || !(range_info > DEGENERATE_TOL * sums.s0) || !(spread_info > DEGENERATE_TOL * sums.s2) {
        return Err(Error::DegenerateFim(
            "contour intermediates are all equal, so range and orientation are not separable".into(),
        ));
    }
    let crb_d = 1.0 / (c * sp.z2() * range_info);
    let crb_varphi = crb_phi + 1.0 / (c * sp.z2() * spread_info);
    let blocks = closed_form_blocks(&sums, sp, n_r);
    Ok(CrbReport { crb_d, crb_phi, crb_varphi, blocks, per_subsection: diag })
}

fn closed_form_blocks(s: &Sums, sp: &SensingParams, n_r: usize) -> FimBlocks {
    let c = sp.prefactor(n_r);
    let z2 = sp.z2();
    let mut f = Matrix3::new(s.s0, s.s1, s.s1, s.s1, s.s2, s.s2, s.s1, s.s2, s.s2) * (c * z2);
    f[(1, 1)] += c * sp.t_s * s.angle;
    let f_g = 2.0 * n_r as f64 * sp.t_s / sp.sigma_s2 * s.s0;
    let f_kg = Vector3::new(0.0, 2.0 * sp.g * n_r as f64 * sp.t_s / sp.sigma_s2 * s.cross, 0.0);
    FimBlocks::assemble(f, f_g, f_kg)
}

/// Direction bound only; valid for any subsection count.
pub fn crb_direction(
    partition: &ContourPartition,
    bundles: &[SteeringBundle],
    r_x: &CMatrix,
    sp: &SensingParams,
) -> Result<f64> {
    let n_r = bundles.first().map_or(0, |b| b.b.len());
    let diag = diagnostics(partition, bundles, r_x)?;
    direction_bound(&Sums::new(&diag), sp, n_r)
}

/// Point-target bounds `(crb_d, crb_phi)` at the direction of `bundle`.
pub fn crb_pt(bundle: &SteeringBundle, r_x: &CMatrix, sp: &SensingParams) -> Result<(f64, f64)> {
    check_psd(r_x)?;
    let n_r = bundle.b.len();
    let a = quad_re(&bundle.a, r_x, &bundle.a);
    if !(a > 0.0) {
        return Err(Error::ZeroIllumination { subsection: 0, value: a });
    }
    let d = quad_re(&bundle.a_dot, r_x, &bundle.a_dot);
    let cr = quad_re(&bundle.a_dot, r_x, &bundle.a);
    let c = sp.prefactor(n_r);
    let info = bundle.z1 * a + d - cr * cr / a;
    if !(info > 0.0) {
        return Err(Error::DegenerateFim(format!("point-target direction information {info:.3e}")));
    }
    Ok((1.0 / (c * sp.z2() * a), 1.0 / (c * sp.t_s * info)))
}

/// Parameter sensitivities used by [`fim_numeric_oracle`].
#[derive(Debug, Clone, Copy)]
pub enum Derivatives<'a> {
    /// `mu_k = [1, X_k, X_k]`, `eta_k = [0, 1, 0]`.
    Approximate,
    /// Central differences of the subsection range and direction with
    /// respect to `(d_o, phi_o, varphi)` at fixed local direction.
    Exact { contour: &'a TfsContour, pose: TargetPose, bs: Vec2 },
}

fn range_direction(c: &TfsContour, pose: &TargetPose, bs: Vec2, u: f64) -> (f64, f64) {
    let p = global_point(c, pose, u);
    let rel = [p[0] - bs[0], p[1] - bs[1]];
    (rel[0].hypot(rel[1]), rel[1].atan2(rel[0]))
}

fn sensitivities(deriv: &Derivatives<'_>, u: f64, x: f64) -> Matrix2x3<f64> {
    match deriv {
        Derivatives::Approximate => Matrix2x3::new(1.0, x, x, 0.0, 1.0, 0.0),
        Derivatives::Exact { contour, pose, bs } => {
            let mut m = Matrix2x3::zeros();
            let steps = [1e-5 * pose.d_o, 1e-6, 1e-6];
            for (j, h) in steps.into_iter().enumerate() {
                let shifted = |delta: f64| {
                    let mut p = *pose;
                    match j {
                        0 => p.d_o += delta,
                        1 => p.phi_o += delta,
                        _ => p.varphi += delta,
                    }
                    range_direction(contour, &p, *bs, u)
                };
                let (dp, ap) = shifted(h);
                let (dm, am) = shifted(-h);
                m[(0, j)] = (dp - dm) / (2.0 * h);
                m[(1, j)] = (ap - am) / (2.0 * h);
            }
            m
        }
    }
}

/// Assembles the Fisher blocks subsection by subsection from the
/// per-subsection delay/angle information and the chain rule.
pub fn fim_numeric_oracle(
    partition: &ContourPartition,
    bundles: &[SteeringBundle],
    r_x: &CMatrix,
    sp: &SensingParams,
    deriv: Derivatives<'_>,
) -> Result<FimBlocks> {
    check_psd(r_x)?;
    let n_r = bundles.first().map_or(0, |b| b.b.len()) as f64;
    let mut f = Matrix3::zeros();
    let mut f_g = 0.0;
    let mut f_kg = Vector3::zeros();
    let scale = 2.0 * sp.g * sp.g / sp.sigma_s2;
    for (k, (s, b)) in partition.subsections.iter().zip(bundles).enumerate() {
        let a = quad_re(&b.a, r_x, &b.a);
        if !(a > 0.0) {
            return Err(Error::ZeroIllumination { subsection: k, value: a });
        }
        let d = quad_re(&b.a_dot, r_x, &b.a_dot);
        let cr = quad_re(&b.a_dot, r_x, &b.a);
        let theta = sensitivities(&deriv, s.u, s.x);
        let inner = nalgebra::Matrix2::new(n_r * sp.z2() * a, 0.0, 0.0, n_r * sp.t_s * (b.z1 * a + d));
        f += theta.transpose() * inner * theta * (scale * s.l);
        f_g += 2.0 * n_r * sp.t_s / sp.sigma_s2 * s.l * a;
        f_kg += theta.transpose() * nalgebra::Vector2::new(0.0, n_r * sp.t_s * cr) * (2.0 * sp.g / sp.sigma_s2 * s.l);
    }
    if !(f_g > 0.0) {
        return Err(Error::DegenerateFim("gain information is zero".into()));
    }
    Ok(FimBlocks::assemble(f, f_g, f_kg))
}

/// Inverse of the effective FIM; its diagonal holds `(crb_d, crb_phi, crb_varphi)`.
pub fn efim_schur(blocks: &FimBlocks) -> Result<Matrix3<f64>> {
    if !(blocks.f_g > 0.0) {
        return Err(Error::DegenerateFim("gain information is zero".into()));
    }
    let j = blocks.f_matrix() - blocks.f_kappa1_g_vector() * blocks.f_kappa1_g_vector().transpose() / blocks.f_g;
    let j = (j + j.transpose()) * 0.5;
    let eig = j.symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    if !(lo > 0.0) || hi / lo > MAX_CONDITION {
        return Err(Error::SingularEfim { eigenvalue: lo });
    }
    j.try_inverse().ok_or(Error::SingularEfim { eigenvalue: lo })
}

impl FimBlocks {
    pub fn f_kappa1_g_vector(&self) -> Vector3<f64> {
        Vector3::from(self.f_kappa1_g)
    }
}
