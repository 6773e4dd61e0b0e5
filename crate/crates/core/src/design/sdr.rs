//! Semidefinite relaxation of the CRB-minimizing design.

use isac_sdp::{BlockId, ConicProblem, LinExpr, Sense, Solution, VarRole};
use num_complex::Complex64;

use crate::array::{CMatrix, CommChannel, SteeringBundle};
use crate::contour::ContourPartition;
use crate::error::{Error, Result};

use super::extract::{dominant, extract_rank_one, RANK_ONE_TOL};
use super::model::{add_coverage, add_epigraph, add_power, normalized_noise, outer, CovarianceMap, EpigraphInfo};
use super::{
    achieved_crb, check_constraints, solve_conic, BeamformerSet, BeamformingDesign, DesignConstraints, DesignContext,
    DesignDetails, DesignOutcome,
};

pub struct SdrProblem {
    pub problem: ConicProblem,
    /// One `N_t x N_t` block per user, in units of `P_t`.
    pub r_blocks: Vec<BlockId>,
    pub epigraph: EpigraphInfo,
    pub p_t: f64,
}

impl SdrProblem {
    pub fn covariances(&self, sol: &Solution) -> Vec<CMatrix> {
        let s = Complex64::new(self.p_t, 0.0);
        self.r_blocks.iter().map(|&b| sol.block(b) * s).collect()
    }

    /// Relaxed value of `sum l (Z1 A + D) - (sum l C)^2 / sum l A`.
    pub fn direction_information(&self, sol: &Solution) -> f64 {
        sol.scalar(self.epigraph.t) * self.epigraph.t_scale * self.p_t
    }
}

/// Variables `R_n`, objective `max t`; power, per-user SINR, pairwise
/// coverage and Schur-block constraints.
pub fn build_sdr_problem(
    channel: &CommChannel,
    partition: &ContourPartition,
    bundles: &[SteeringBundle],
    cons: &DesignConstraints,
) -> SdrProblem {
    let n_t = channel.h.ncols();
    let users = channel.users();
    let mut p = ConicProblem::new();
    let r_blocks: Vec<BlockId> = (0..users).map(|n| p.add_psd_block(n_t, VarRole::Decision, format!("R{n}"))).collect();
    let cov = CovarianceMap { terms: r_blocks.iter().map(|&b| (b, None)).collect() };
    add_power(&mut p, &cov, n_t);
    let noise = normalized_noise(cons);
    for (n, &rb) in r_blocks.iter().enumerate() {
        let h = channel.h_vec(n);
        let hh = outer(&h, &h);
        let mut e = LinExpr::new();
        cov.add(&mut e, &hh, -1.0);
        e.add_block(rb, &(&hh * Complex64::new(1.0 + 1.0 / cons.gamma, 0.0)));
        p.add_constraint(format!("sinr:{n}"), e, Sense::Ge, noise);
    }
    if cons.coverage {
        add_coverage(&mut p, &cov, bundles);
    }
    let epigraph = add_epigraph(&mut p, &cov, partition, bundles);
    SdrProblem { problem: p, r_blocks, epigraph, p_t: cons.p_t }
}

fn classify_infeasibility(ctx: &DesignContext<'_>) -> Error {
    if ctx.constraints.coverage {
        let relaxed = DesignConstraints { coverage: false, ..ctx.constraints };
        let p = build_sdr_problem(ctx.channel, ctx.partition, ctx.bundles, &relaxed);
        if solve_conic(&p.problem, &ctx.solver).is_ok() {
            return Error::Infeasible { class: "coverage".into() };
        }
    }
    Error::Infeasible { class: "sinr".into() }
}

pub fn design_sdr(ctx: &DesignContext<'_>) -> Result<DesignOutcome> {
    let cons = &ctx.constraints;
    let built = build_sdr_problem(ctx.channel, ctx.partition, ctx.bundles, cons);
    let sol = match solve_conic(&built.problem, &ctx.solver) {
        Ok(s) => s,
        Err(Error::Infeasible { .. }) => return Err(classify_infeasibility(ctx)),
        Err(e) => return Err(e),
    };
    let r = built.covariances(&sol);
    let relaxed_power: f64 = r.iter().map(|m| m.trace().re).sum();
    let c = 2.0 * ctx.sensing.g * ctx.sensing.g * ctx.array.n_r as f64 / ctx.sensing.sigma_s2;
    let relaxed_crb_phi = 1.0 / (c * ctx.sensing.t_s * built.direction_information(&sol));

    let eigs: Vec<_> = r.iter().map(dominant).collect();
    let rank_one = eigs.iter().all(|(l1, _, l2)| *l2 <= RANK_ONE_TOL * l1);
    let mut chosen = None;
    let mut attempts = 0;
    if rank_one {
        let cols: Vec<_> = eigs.iter().map(|(l1, v, _)| v * Complex64::new(l1.max(0.0).sqrt(), 0.0)).collect();
        let set = BeamformerSet::from_columns(&cols).clipped(cons.p_t);
        if check_constraints(ctx, &set).satisfied(cons) {
            chosen = Some(set);
        }
    }
    let beamformers = match chosen {
        Some(s) => s,
        None => {
            let ex = extract_rank_one(
                &r,
                ctx.channel,
                cons.gamma,
                cons.sigma_n2,
                ctx.seed,
                ctx.extraction_attempts,
                cons.coverage.then_some(ctx.bundles),
            )?;
            attempts = ex.attempts;
            ex.beamformers.clipped(cons.p_t)
        }
    };
    let crb_phi = achieved_crb(ctx, &beamformers)?;
    Ok(DesignOutcome {
        beamformers,
        crb_phi,
        details: DesignDetails::Sdr {
            relaxed_crb_phi,
            relaxed_power,
            rank_one,
            extraction_attempts: attempts,
            solver_iterations: sol.stats.iterations,
        },
    })
}

/// Semidefinite relaxation followed by rank-one extraction.
pub struct Sdr;

impl BeamformingDesign for Sdr {
    fn name(&self) -> &'static str {
        "sdr"
    }

    fn description(&self) -> &'static str {
        "semidefinite relaxation with rank-one extraction"
    }

    fn design(&self, ctx: &DesignContext<'_>) -> Result<DesignOutcome> {
        design_sdr(ctx)
    }
}
