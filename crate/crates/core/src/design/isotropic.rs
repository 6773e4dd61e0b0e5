//! Isotropic comparison baseline.

use num_complex::Complex64;

use crate::array::CMatrix;
use crate::error::Result;

use super::{achieved_crb, BeamformerSet, BeamformingDesign, DesignContext, DesignDetails, DesignOutcome};

/// `W = sqrt(P_t / N_t) [e_1, ..., e_Nc]`; SINR is not enforced.
pub fn design_isotropic(n_t: usize, n_c: usize, p_t: f64) -> BeamformerSet {
    let s = Complex64::new((p_t / n_t as f64).sqrt(), 0.0);
    BeamformerSet { w: CMatrix::identity(n_t, n_c) * s }
}

pub struct Isotropic;

impl BeamformingDesign for Isotropic {
    fn name(&self) -> &'static str {
        "isotropic"
    }

    fn description(&self) -> &'static str {
        "scaled identity columns, flat beampattern baseline"
    }

    fn design(&self, ctx: &DesignContext<'_>) -> Result<DesignOutcome> {
        let beamformers = design_isotropic(ctx.array.n_t, ctx.channel.users(), ctx.constraints.p_t);
        let crb_phi = achieved_crb(ctx, &beamformers)?;
        Ok(DesignOutcome { beamformers, crb_phi, details: DesignDetails::Isotropic })
    }
}
