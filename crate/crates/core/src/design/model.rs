//! Shared conic modelling for the covariance-based designs.
//!
//! Decision variables are expressed in units of the power budget, so the
//! power constraint reads `tr(R_x) <= 1`.

use isac_sdp::{BlockId, ConicProblem, LinExpr, ScalarId, Sense, VarRole};
use num_complex::Complex64;

use crate::array::{CMatrix, CVector, SteeringBundle};
use crate::contour::ContourPartition;

use super::DesignConstraints;

/// `R_x = sum_b B_b X_b B_b^H`, with `B_b = I` when absent.
pub(crate) struct CovarianceMap {
    pub terms: Vec<(BlockId, Option<CMatrix>)>,
}

impl CovarianceMap {
    /// Adds `Re tr(coeff R_x)` to `expr`.
    pub fn add(&self, expr: &mut LinExpr, coeff: &CMatrix, scale: f64) {
        let s = Complex64::new(scale, 0.0);
        for (id, basis) in &self.terms {
            match basis {
                Some(b) => expr.add_block(*id, &(b.adjoint() * coeff * b * s)),
                None => expr.add_block(*id, &(coeff * s)),
            };
        }
    }
}

pub(crate) fn outer(a: &CVector, b: &CVector) -> CMatrix {
    a * b.adjoint()
}

/// Coefficient matrices of the direction-information terms:
/// `sum l (Z1 a a^H + a_dot a_dot^H)`, `sum l a a_dot^H`, `sum l a a^H`.
pub(crate) fn sensing_coefficients(partition: &ContourPartition, bundles: &[SteeringBundle]) -> [CMatrix; 3] {
    let n = bundles[0].a.len();
    let mut g1 = CMatrix::zeros(n, n);
    let mut g2 = CMatrix::zeros(n, n);
    let mut g3 = CMatrix::zeros(n, n);
    for (s, b) in partition.subsections.iter().zip(bundles) {
        let aa = outer(&b.a, &b.a);
        let l = Complex64::new(s.l, 0.0);
        g1 += (&aa * Complex64::new(b.z1, 0.0) + outer(&b.a_dot, &b.a_dot)) * l;
        g2 += outer(&b.a, &b.a_dot) * l;
        g3 += aa * l;
    }
    [g1, g2, g3]
}

/// Handles to the epigraph variable of a built design problem.
#[derive(Debug, Clone, Copy)]
pub struct EpigraphInfo {
    pub t: ScalarId,
    pub p_block: BlockId,
    /// True direction information is `t * t_scale * P_t`.
    pub t_scale: f64,
}

/// Adds the 2x2 Schur block that lower-bounds the direction information by
/// `t` and sets the objective to `max t`.
pub(crate) fn add_epigraph(
    p: &mut ConicProblem,
    cov: &CovarianceMap,
    partition: &ContourPartition,
    bundles: &[SteeringBundle],
) -> EpigraphInfo {
    let [g1, g2, g3] = sensing_coefficients(partition, bundles);
    let n = g1.nrows() as f64;
    let s1 = (g1.trace().re / n).max(f64::MIN_POSITIVE);
    let s2 = (g3.trace().re / n).max(f64::MIN_POSITIVE);
    let s12 = (s1 * s2).sqrt();
    let t = p.add_nonneg(VarRole::Decision, "t");
    let pb = p.add_psd_block(2, VarRole::Auxiliary, "schur");
    let unit = |i: usize, j: usize| {
        let mut m = CMatrix::zeros(2, 2);
        m[(i, j)] = Complex64::new(if i == j { 1.0 } else { 0.5 }, 0.0);
        if i != j {
            m[(j, i)] = m[(i, j)];
        }
        m
    };
    let mut e11 = LinExpr::new().with_block(pb, &unit(0, 0)).with_scalar(t, 1.0);
    cov.add(&mut e11, &g1, -1.0 / s1);
    p.add_constraint("schur:11", e11, Sense::Eq, 0.0);
    let mut e12 = LinExpr::new().with_block(pb, &unit(0, 1));
    cov.add(&mut e12, &g2, -1.0 / s12);
    p.add_constraint("schur:12", e12, Sense::Eq, 0.0);
    let mut e22 = LinExpr::new().with_block(pb, &unit(1, 1));
    cov.add(&mut e22, &g3, -1.0 / s2);
    p.add_constraint("schur:22", e22, Sense::Eq, 0.0);
    p.set_objective(LinExpr::new().with_scalar(t, -1.0));
    EpigraphInfo { t, p_block: pb, t_scale: s1 }
}

pub(crate) fn add_power(p: &mut ConicProblem, cov: &CovarianceMap, n_t: usize) {
    let mut e = LinExpr::new();
    cov.add(&mut e, &CMatrix::identity(n_t, n_t), 1.0);
    p.add_constraint("power", e, Sense::Le, 1.0);
}

/// Pairwise rows `2 a_i^H R_x a_i - a_j^H R_x a_j >= 0`.
pub(crate) fn add_coverage(p: &mut ConicProblem, cov: &CovarianceMap, bundles: &[SteeringBundle]) {
    let aa: Vec<CMatrix> = bundles.iter().map(|b| outer(&b.a, &b.a)).collect();
    for (i, ai) in aa.iter().enumerate() {
        for (j, aj) in aa.iter().enumerate() {
            let mut e = LinExpr::new();
            cov.add(&mut e, &(ai * Complex64::new(2.0, 0.0) - aj), 1.0);
            p.add_constraint(format!("coverage:{i}:{j}"), e, Sense::Ge, 0.0);
        }
    }
}

/// Coverage residual `2 min_k - max_k` of the contour beampattern.
pub fn coverage_residual(r_x: &CMatrix, bundles: &[SteeringBundle]) -> f64 {
    let vals: Vec<f64> = bundles.iter().map(|b| crate::array::quad_re(&b.a, r_x, &b.a)).collect();
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    2.0 * min - max
}

pub(crate) fn normalized_noise(cons: &DesignConstraints) -> f64 {
    cons.sigma_n2 / cons.p_t
}
