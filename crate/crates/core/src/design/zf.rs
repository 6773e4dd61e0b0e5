//! Zero-forcing design: each beam is the channel pseudoinverse column plus
//! a null-space component steered at one contour subsection.

use isac_sdp::{BlockId, ConicProblem, LinExpr, Sense, Solution, VarRole};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::array::{CMatrix, CVector, CommChannel, SteeringBundle};
use crate::contour::ContourPartition;
use crate::error::{Error, Result};

use super::model::{add_coverage, add_epigraph, add_power, normalized_noise, CovarianceMap, EpigraphInfo};
use super::{
    achieved_crb, check_constraints, solve_conic, BeamformerSet, BeamformingDesign, DesignConstraints, DesignContext,
    DesignDetails, DesignOutcome,
};

const RANK_TOL: f64 = 1e-10;
const MAX_DIRECTION_SETS: u128 = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ZfComponents {
    /// `H^H (H H^H)^{-1}`, column `n` is `h_n^dagger`.
    pub h_pinv: CMatrix,
    /// Projector onto the null space of `H`.
    pub p_perp: CMatrix,
}

pub fn zf_components(channel: &CommChannel) -> Result<ZfComponents> {
    let h = &channel.h;
    let sv = h.clone().svd(false, false).singular_values;
    let (lo, hi) = (sv.min(), sv.max());
    if !(hi > 0.0) || lo / hi < RANK_TOL || h.nrows() > h.ncols() {
        return Err(Error::RankDeficient { ratio: if hi > 0.0 { lo / hi } else { 0.0 } });
    }
    let gram = h * h.adjoint();
    let inv = gram.cholesky().ok_or(Error::RankDeficient { ratio: lo / hi })?.inverse();
    let h_pinv = h.adjoint() * inv;
    let n_t = h.ncols();
    let p_perp = CMatrix::identity(n_t, n_t) - &h_pinv * h;
    let p_perp = (&p_perp + p_perp.adjoint()) * Complex64::new(0.5, 0.0);
    Ok(ZfComponents { h_pinv, p_perp })
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n.saturating_sub(k));
    (0..k).fold(1u128, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// All size-`n_c` subsets of `0..k` in lexicographic order; multisets when
/// `k < n_c`.
pub fn direction_sets(k: usize, n_c: usize) -> Result<Vec<Vec<usize>>> {
    let repeat = k < n_c;
    let count = if repeat { binomial((k + n_c - 1) as u128, n_c as u128) } else { binomial(k as u128, n_c as u128) };
    if count > MAX_DIRECTION_SETS {
        return Err(Error::TooManyDirectionSets { count });
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut cur: Vec<usize> = if repeat { vec![0; n_c] } else { (0..n_c).collect() };
    if n_c == 0 || k == 0 {
        return Ok(out);
    }
    loop {
        out.push(cur.clone());
        // Advance to the next combination.
        let mut i = n_c;
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            let limit = if repeat { k - 1 } else { k - n_c + i };
            if cur[i] < limit {
                cur[i] += 1;
                for j in i + 1..n_c {
                    cur[j] = if repeat { cur[i] } else { cur[j - 1] + 1 };
                }
                break;
            }
        }
    }
}

pub struct ZfProblem {
    pub problem: ConicProblem,
    pub blocks: Vec<BlockId>,
    /// Per-user basis `[h_n^dagger / |h_n^dagger|, P_perp a_k / |P_perp a_k|]`;
    /// the second column is dropped when the projection vanishes.
    pub bases: Vec<CMatrix>,
    pub epigraph: EpigraphInfo,
    pub p_t: f64,
}

impl ZfProblem {
    /// Beamformers `w_n = B_n v_n` with `v_n v_n^H <= M_n` and `|v_n1|^2 = M_n(1,1)`.
    pub fn beamformers(&self, sol: &Solution) -> BeamformerSet {
        let cols: Vec<CVector> = self
            .blocks
            .iter()
            .zip(&self.bases)
            .map(|(&b, basis)| {
                let m = sol.block(b) * Complex64::new(self.p_t, 0.0);
                let m11 = m[(0, 0)].re.max(0.0);
                let v =
                    if m11 > 0.0 { m.column(0) / Complex64::new(m11.sqrt(), 0.0) } else { CVector::zeros(m.nrows()) };
                basis * v
            })
            .collect();
        BeamformerSet::from_columns(&cols)
    }
}

pub fn build_zf_problem(
    zf: &ZfComponents,
    direction_set: &[usize],
    partition: &ContourPartition,
    bundles: &[SteeringBundle],
    cons: &DesignConstraints,
) -> ZfProblem {
    let n_t = zf.p_perp.nrows();
    let mut p = ConicProblem::new();
    let mut blocks = Vec::with_capacity(direction_set.len());
    let mut bases = Vec::with_capacity(direction_set.len());
    let noise = normalized_noise(cons);
    for (n, &k) in direction_set.iter().enumerate() {
        let hp = zf.h_pinv.column(n).into_owned();
        let hp_norm = hp.norm();
        let proj = &zf.p_perp * &bundles[k].a;
        let proj_norm = proj.norm();
        let mut cols = vec![hp / Complex64::new(hp_norm, 0.0)];
        if proj_norm > 1e-9 * (n_t as f64).sqrt() {
            cols.push(proj / Complex64::new(proj_norm, 0.0));
        }
        let basis = CMatrix::from_fn(n_t, cols.len(), |i, j| cols[j][i]);
        let block = p.add_psd_block(cols.len(), VarRole::Decision, format!("M{n}"));
        let mut e11 = CMatrix::zeros(cols.len(), cols.len());
        e11[(0, 0)] = Complex64::new(1.0, 0.0);
        p.add_constraint(
            format!("sinr:{n}"),
            LinExpr::new().with_block(block, &e11),
            Sense::Ge,
            cons.gamma * noise * hp_norm * hp_norm,
        );
        blocks.push(block);
        bases.push(basis);
    }
    let cov = CovarianceMap { terms: blocks.iter().zip(&bases).map(|(&b, m)| (b, Some(m.clone()))).collect() };
    add_power(&mut p, &cov, n_t);
    if cons.coverage {
        add_coverage(&mut p, &cov, bundles);
    }
    let epigraph = add_epigraph(&mut p, &cov, partition, bundles);
    ZfProblem { problem: p, blocks, bases, epigraph, p_t: cons.p_t }
}

fn design_for_set(ctx: &DesignContext<'_>, zf: &ZfComponents, set: &[usize]) -> Option<(f64, BeamformerSet)> {
    let built = build_zf_problem(zf, set, ctx.partition, ctx.bundles, &ctx.constraints);
    let sol = solve_conic(&built.problem, &ctx.solver).ok()?;
    let w = built.beamformers(&sol).clipped(ctx.constraints.p_t);
    if !check_constraints(ctx, &w).satisfied(&ctx.constraints) {
        return None;
    }
    let crb = achieved_crb(ctx, &w).ok()?;
    Some((crb, w))
}

pub fn design_zf(ctx: &DesignContext<'_>) -> Result<DesignOutcome> {
    let zf = zf_components(ctx.channel)?;
    let sets = direction_sets(ctx.partition.k(), ctx.channel.users())?;
    let results: Vec<Option<(f64, BeamformerSet)>> = sets.par_iter().map(|s| design_for_set(ctx, &zf, s)).collect();
    let feasible = results.iter().filter(|r| r.is_some()).count();
    let best = results.iter().enumerate().filter_map(|(i, r)| r.as_ref().map(|(c, _)| (i, *c))).fold(
        None,
        |acc: Option<(usize, f64)>, (i, c)| match acc {
            Some((_, bc)) if bc <= c => acc,
            _ => Some((i, c)),
        },
    );
    let Some((idx, crb_phi)) = best else {
        return Err(Error::AllInfeasible { tried: sets.len() });
    };
    let beamformers = results[idx].as_ref().map(|(_, w)| w.clone()).expect("chosen set is feasible");
    Ok(DesignOutcome {
        beamformers,
        crb_phi,
        details: DesignDetails::Zf {
            direction_set: sets[idx].clone(),
            sets_tried: sets.len(),
            sets_feasible: feasible,
        },
    })
}

/// Zero-forcing with enumerated null-space sensing directions.
pub struct Zf;

impl BeamformingDesign for Zf {
    fn name(&self) -> &'static str {
        "zf"
    }

    fn description(&self) -> &'static str {
        "zero-forcing with null-space sensing beams"
    }

    fn design(&self, ctx: &DesignContext<'_>) -> Result<DesignOutcome> {
        design_zf(ctx)
    }
}
