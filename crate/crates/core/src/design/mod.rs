//! Transmit beamforming designs that minimize the direction CRB under
//! per-user SINR, power and beam-coverage constraints.
//!
//! Designs implement [`BeamformingDesign`] and are looked up by name in a
//! [`DesignRegistry`].

use std::fmt;

use isac_sdp::{ConicProblem, Solution, SolveStatus, SolverOptions};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::array::{sinrs, ArrayConfig, CMatrix, CVector, CommChannel, SteeringBundle};
use crate::contour::ContourPartition;
use crate::crb::{crb_direction, SensingParams};
use crate::error::{Error, Result};

mod extract;
mod isotropic;
mod model;
mod sdr;
mod zf;

pub use extract::{extract_rank_one, power_control, rebalance_covariances, Extraction, RANK_ONE_TOL};
pub use isotropic::{design_isotropic, Isotropic};
pub use model::{coverage_residual, EpigraphInfo};
pub use sdr::{build_sdr_problem, design_sdr, Sdr, SdrProblem};
pub use zf::{build_zf_problem, design_zf, direction_sets, zf_components, Zf, ZfComponents, ZfProblem};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignConstraints {
    pub p_t: f64,
    /// Linear SINR threshold.
    pub gamma: f64,
    pub sigma_n2: f64,
    pub coverage: bool,
}

/// Beamformer columns `w_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerSet {
    pub w: CMatrix,
}

impl BeamformerSet {
    pub fn from_columns(cols: &[CVector]) -> Self {
        let n_t = cols[0].len();
        Self { w: CMatrix::from_fn(n_t, cols.len(), |i, n| cols[n][i]) }
    }

    pub fn users(&self) -> usize {
        self.w.ncols()
    }

    pub fn column(&self, n: usize) -> CVector {
        self.w.column(n).into_owned()
    }

    pub fn r_n(&self, n: usize) -> CMatrix {
        let w = self.column(n);
        &w * w.adjoint()
    }

    pub fn r_x(&self) -> CMatrix {
        &self.w * self.w.adjoint()
    }

    pub fn power(&self) -> f64 {
        self.w.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { w: &self.w * Complex64::new(s, 0.0) }
    }

    /// Scales down uniformly so the total power does not exceed `p_t`.
    pub fn clipped(self, p_t: f64) -> Self {
        let p = self.power();
        if p > p_t {
            self.scaled((p_t / p).sqrt())
        } else {
            self
        }
    }
}

/// Everything a design needs about the scenario.
#[derive(Debug, Clone)]
pub struct DesignContext<'a> {
    pub array: ArrayConfig,
    pub channel: &'a CommChannel,
    pub partition: &'a ContourPartition,
    pub bundles: &'a [SteeringBundle],
    pub constraints: DesignConstraints,
    pub sensing: SensingParams,
    pub solver: SolverOptions,
    pub seed: u64,
    pub extraction_attempts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum DesignDetails {
    Sdr {
        relaxed_crb_phi: f64,
        relaxed_power: f64,
        rank_one: bool,
        extraction_attempts: usize,
        solver_iterations: usize,
    },
    Zf {
        direction_set: Vec<usize>,
        sets_tried: usize,
        sets_feasible: usize,
    },
    Isotropic,
}

#[derive(Debug, Clone)]
pub struct DesignOutcome {
    pub beamformers: BeamformerSet,
    pub crb_phi: f64,
    pub details: DesignDetails,
}

impl DesignOutcome {
    pub fn sinrs(&self, ctx: &DesignContext<'_>) -> Vec<f64> {
        sinrs(ctx.channel, &self.beamformers.w, ctx.constraints.sigma_n2)
    }
}

pub trait BeamformingDesign: Send + Sync {
    fn name(&self) -> &'static str;
    fn description(&self) -> &'static str;
    fn design(&self, ctx: &DesignContext<'_>) -> Result<DesignOutcome>;
}

impl fmt::Debug for dyn BeamformingDesign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Default)]
pub struct DesignRegistry {
    entries: Vec<Box<dyn BeamformingDesign>>,
}

impl DesignRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Registry holding `sdr`, `zf` and `isotropic`.
    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(Sdr));
        r.register(Box::new(Zf));
        r.register(Box::new(Isotropic));
        r
    }

    /// Adds a design, replacing any existing one with the same name.
    pub fn register(&mut self, design: Box<dyn BeamformingDesign>) {
        self.entries.retain(|d| d.name() != design.name());
        self.entries.push(design);
    }

    pub fn get(&self, name: &str) -> Result<&dyn BeamformingDesign> {
        self.entries
            .iter()
            .find(|d| d.name() == name)
            .map(|d| d.as_ref())
            .ok_or_else(|| Error::UnknownMethod(name.to_string()))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|d| d.name()).collect()
    }
}

/// Solves a design problem and maps non-optimal statuses to errors.
pub fn solve_conic(problem: &ConicProblem, opts: &SolverOptions) -> Result<Solution> {
    let sol = isac_sdp::solve(problem, opts)?;
    match sol.status {
        SolveStatus::Optimal => Ok(sol),
        SolveStatus::Infeasible => Err(Error::Infeasible { class: "constraints".into() }),
        SolveStatus::Unbounded => Err(Error::Infeasible { class: "unbounded objective".into() }),
    }
}

/// Achieved direction CRB of a beamformer set.
pub fn achieved_crb(ctx: &DesignContext<'_>, w: &BeamformerSet) -> Result<f64> {
    crb_direction(ctx.partition, ctx.bundles, &w.r_x(), &ctx.sensing)
}

/// Constraint report used by the design invariants and the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintCheck {
    pub sinrs: Vec<f64>,
    pub min_sinr_ratio: f64,
    pub power: f64,
    pub coverage_residual: f64,
}

pub fn check_constraints(ctx: &DesignContext<'_>, w: &BeamformerSet) -> ConstraintCheck {
    let s = sinrs(ctx.channel, &w.w, ctx.constraints.sigma_n2);
    let min_ratio = s.iter().fold(f64::INFINITY, |a, v| a.min(v / ctx.constraints.gamma));
    ConstraintCheck {
        sinrs: s,
        min_sinr_ratio: min_ratio,
        power: w.power(),
        coverage_residual: coverage_residual(&w.r_x(), ctx.bundles),
    }
}

impl ConstraintCheck {
    pub fn satisfied(&self, cons: &DesignConstraints) -> bool {
        self.min_sinr_ratio >= 1.0 - 1e-6
            && self.power <= cons.p_t + 1e-9
            && (!cons.coverage || self.coverage_residual >= -1e-9 * cons.p_t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beamformer_set_algebra() {
        let cols = [
            CVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)]),
            CVector::from_vec(vec![Complex64::new(0.0, 0.0), Complex64::new(2.0, 0.0)]),
        ];
        let w = BeamformerSet::from_columns(&cols);
        assert_eq!(w.users(), 2);
        assert_eq!(w.power(), 6.0);
        assert!((w.r_x() - (w.r_n(0) + w.r_n(1))).norm() < 1e-15);
        assert_eq!(w.r_x().trace().re, w.power());
        let c = w.clone().clipped(1.5);
        assert!((c.power() - 1.5).abs() < 1e-12);
        assert_eq!(w.clone().clipped(10.0), w);
    }

    #[test]
    fn registry_rejects_unknown_names() {
        let r = DesignRegistry::builtin();
        assert_eq!(r.names(), ["sdr", "zf", "isotropic"]);
        assert!(matches!(r.get("mmse"), Err(Error::UnknownMethod(_))));
    }
}
