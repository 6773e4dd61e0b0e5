//! Scenario description with unit-suffixed keys, loaded from TOML.

use isac_sdp::SolverOptions;
use serde::{Deserialize, Serialize};

use crate::array::{bundles_for, db_to_linear, gen_channel, ArrayConfig, ChannelModel, CommChannel, SteeringBundle};
use crate::contour::{
    partition_los_with, ContourPartition, IntermediateForm, PartitionOptions, TargetPose, TfsContour,
};
use crate::crb::SensingParams;
use crate::design::{DesignConstraints, DesignContext};
use crate::error::{Error, Result};
use crate::sim::SymbolKind;

pub fn dbw_to_watts(dbw: f64) -> f64 {
    db_to_linear(dbw)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArraySection {
    pub n_t: usize,
    pub n_r: usize,
    pub spacing_wavelengths: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UsersSection {
    pub directions_deg: Vec<f64>,
    pub path_loss_db: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub paths: usize,
    pub los_fraction: f64,
    pub los_blocked: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ContourSpec {
    Preset(String),
    Coefficients { m: Vec<f64>, n: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSection {
    pub d_o_m: f64,
    pub phi_o_deg: f64,
    pub varphi_deg: f64,
    pub subsections: usize,
    pub normalize_lengths: bool,
    pub intermediate_form: IntermediateForm,
    pub contour: ContourSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensingSection {
    pub sigma_s2_dbm: f64,
    pub bandwidth_hz: f64,
    pub t_s_s: f64,
    /// Keep `N_r P_t / (d_o^4 sigma_s^2)` fixed when the range is swept.
    pub radar_snr_hold: bool,
    /// Symbols per Monte-Carlo frame.
    pub symbols: usize,
    pub symbol_kind: SymbolKind,
    pub mf_grid_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintsSection {
    pub p_t_dbw: f64,
    pub gamma_db: f64,
    pub sigma_n2_dbm: f64,
    pub coverage: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub tol: f64,
    pub max_iter: usize,
    pub extraction_attempts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub array: ArraySection,
    pub users: UsersSection,
    pub channel: ChannelSection,
    pub target: TargetSection,
    pub sensing: SensingSection,
    pub constraints: ConstraintsSection,
    pub solver: SolverSection,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            array: ArraySection { n_t: 16, n_r: 16, spacing_wavelengths: 0.5 },
            users: UsersSection { directions_deg: vec![-60.0, -35.0, 35.0, 60.0], path_loss_db: vec![100.0; 4] },
            channel: ChannelSection { paths: 6, los_fraction: 0.9, los_blocked: false, seed: 1 },
            target: TargetSection {
                d_o_m: 27.0,
                phi_o_deg: 0.0,
                varphi_deg: 0.0,
                subsections: 8,
                normalize_lengths: false,
                intermediate_form: IntermediateForm::Printed,
                contour: ContourSpec::Preset("vehicle".into()),
            },
            sensing: SensingSection {
                sigma_s2_dbm: -80.0,
                bandwidth_hz: 10e6,
                t_s_s: 1.0,
                radar_snr_hold: false,
                symbols: 32,
                symbol_kind: SymbolKind::Gaussian,
                mf_grid_deg: 0.1,
            },
            constraints: ConstraintsSection { p_t_dbw: 0.0, gamma_db: 10.0, sigma_n2_dbm: -80.0, coverage: true },
            solver: SolverSection { tol: 1e-8, max_iter: 200, extraction_attempts: 100 },
        }
    }
}

/// Sweepable scenario parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKey {
    /// Target range in meters.
    Range,
    /// SINR threshold in dB.
    Gamma,
    /// Number of users (the first `N_c` listed directions).
    Users,
    /// Bandwidth in Hz.
    Bandwidth,
    /// Number of contour subsections.
    Subsections,
}

impl SweepKey {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "d_o" | "d_o_m" => Ok(Self::Range),
            "gamma" | "gamma_db" => Ok(Self::Gamma),
            "n_c" => Ok(Self::Users),
            "b" | "bandwidth" | "bandwidth_hz" => Ok(Self::Bandwidth),
            "k" | "subsections" => Ok(Self::Subsections),
            _ => {
                Err(Error::InvalidScenario(format!("unknown sweep key `{s}` (expected d_o, gamma, n_c, bandwidth, k)")))
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Range => "d_o_m",
            Self::Gamma => "gamma_db",
            Self::Users => "n_c",
            Self::Bandwidth => "bandwidth_hz",
            Self::Subsections => "k",
        }
    }
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Self = toml::from_str(text).map_err(|e| Error::InvalidScenario(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario is always serializable")
    }

    pub fn contour(&self) -> Result<TfsContour> {
        match &self.target.contour {
            ContourSpec::Preset(name) => TfsContour::preset(name)
                .ok_or_else(|| Error::InvalidScenario(format!("unknown contour preset `{name}`"))),
            ContourSpec::Coefficients { m, n } => TfsContour::new(m.clone(), n.clone()),
        }
    }

    pub fn users(&self) -> usize {
        self.users.directions_deg.len()
    }

    pub fn p_t(&self) -> f64 {
        dbw_to_watts(self.constraints.p_t_dbw)
    }

    pub fn sigma_s2(&self) -> f64 {
        dbm_to_watts(self.sensing.sigma_s2_dbm)
    }

    /// `N_r P_t / (d_o^4 sigma_s^2)`.
    pub fn radar_snr(&self) -> f64 {
        self.array.n_r as f64 * self.p_t() / (self.target.d_o_m.powi(4) * self.sigma_s2())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScenario(m));
        let n_c = self.users();
        if n_c == 0 {
            return bad("at least one user is required".into());
        }
        if !(n_c <= self.array.n_t && self.array.n_t <= self.array.n_r) {
            return bad(format!("need N_c <= N_t <= N_r, got {n_c}, {}, {}", self.array.n_t, self.array.n_r));
        }
        if self.users.path_loss_db.len() != n_c {
            return bad("one path loss per user required".into());
        }
        if self.users.directions_deg.iter().any(|d| !(d.abs() < 90.0)) {
            return bad("user directions must lie in (-90, 90) degrees".into());
        }
        if !(self.array.spacing_wavelengths > 0.0) {
            return bad("element spacing must be positive".into());
        }
        if self.channel.paths == 0 || !(self.channel.los_fraction > 0.0 && self.channel.los_fraction <= 1.0) {
            return bad("channel needs at least one path and a LoS fraction in (0, 1]".into());
        }
        if self.target.subsections == 0 {
            return bad("at least one contour subsection is required".into());
        }
        if !(self.target.d_o_m > 0.0) || !(self.target.phi_o_deg.abs() < 90.0) {
            return bad("target range must be positive and direction inside (-90, 90) degrees".into());
        }
        if !(self.sensing.bandwidth_hz > 0.0 && self.sensing.t_s_s > 0.0) || self.sensing.symbols == 0 {
            return bad("bandwidth, observation time and symbol count must be positive".into());
        }
        if !(self.sensing.mf_grid_deg > 0.0) {
            return bad("matched-filter grid step must be positive".into());
        }
        if !(self.solver.tol > 0.0) || self.solver.max_iter == 0 || self.solver.extraction_attempts == 0 {
            return bad("solver settings must be positive".into());
        }
        let finite = [
            self.constraints.p_t_dbw,
            self.constraints.gamma_db,
            self.constraints.sigma_n2_dbm,
            self.sensing.sigma_s2_dbm,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return bad("power levels must be finite".into());
        }
        self.contour()?;
        Ok(())
    }

    /// Applies one sweep value; with `radar_snr_hold` a range change also
    /// rescales the sensing noise to keep the radar SNR of `self`.
    pub fn with_param(&self, key: SweepKey, value: f64) -> Result<Self> {
        let mut s = self.clone();
        match key {
            SweepKey::Range => {
                let snr = self.radar_snr();
                s.target.d_o_m = value;
                if s.sensing.radar_snr_hold {
                    let sigma = s.array.n_r as f64 * s.p_t() / (value.powi(4) * snr);
                    s.sensing.sigma_s2_dbm = watts_to_dbm(sigma);
                }
            }
            SweepKey::Gamma => s.constraints.gamma_db = value,
            SweepKey::Users => {
                let n = value.round();
                if !(n >= 1.0) || n as usize > self.users() {
                    return Err(Error::InvalidScenario(format!("n_c = {value} outside 1..={}", self.users())));
                }
                s.users.directions_deg.truncate(n as usize);
                s.users.path_loss_db.truncate(n as usize);
            }
            SweepKey::Bandwidth => s.sensing.bandwidth_hz = value,
            SweepKey::Subsections => {
                if !(value >= 1.0) {
                    return Err(Error::InvalidScenario(format!("k = {value} must be at least 1")));
                }
                s.target.subsections = value.round() as usize;
            }
        }
        s.validate()?;
        Ok(s)
    }

    /// Instantiates geometry, channel and derived parameters.
    pub fn build(&self) -> Result<ScenarioModel> {
        self.validate()?;
        let array = ArrayConfig { n_t: self.array.n_t, n_r: self.array.n_r, spacing: self.array.spacing_wavelengths };
        let contour = self.contour()?;
        let pose = TargetPose::new(
            self.target.d_o_m,
            self.target.phi_o_deg.to_radians(),
            self.target.varphi_deg.to_radians(),
        )?;
        let partition = partition_los_with(
            &contour,
            &pose,
            [0.0, 0.0],
            PartitionOptions {
                k: self.target.subsections,
                normalize: self.target.normalize_lengths,
                form: self.target.intermediate_form,
            },
        )?;
        let bundles = bundles_for(&array, &partition);
        let dirs: Vec<f64> = self.users.directions_deg.iter().map(|d| d.to_radians()).collect();
        let model = ChannelModel {
            paths: self.channel.paths,
            los_fraction: (!self.channel.los_blocked).then_some(self.channel.los_fraction),
        };
        let channel = gen_channel(&array, &dirs, &self.users.path_loss_db, model, self.channel.seed)?;
        let sensing =
            SensingParams::new(self.target.d_o_m, self.sigma_s2(), self.sensing.t_s_s, self.sensing.bandwidth_hz);
        let constraints = DesignConstraints {
            p_t: self.p_t(),
            gamma: db_to_linear(self.constraints.gamma_db),
            sigma_n2: dbm_to_watts(self.constraints.sigma_n2_dbm),
            coverage: self.constraints.coverage,
        };
        let solver = SolverOptions { tol: self.solver.tol, max_iter: self.solver.max_iter, ..SolverOptions::default() };
        Ok(ScenarioModel {
            array,
            contour,
            pose,
            partition,
            bundles,
            channel,
            sensing,
            constraints,
            solver,
            extraction_attempts: self.solver.extraction_attempts,
            symbols: self.sensing.symbols,
        })
    }
}

/// A scenario with every derived quantity instantiated.
#[derive(Debug, Clone)]
pub struct ScenarioModel {
    pub array: ArrayConfig,
    pub contour: TfsContour,
    pub pose: TargetPose,
    pub partition: ContourPartition,
    pub bundles: Vec<SteeringBundle>,
    pub channel: CommChannel,
    pub sensing: SensingParams,
    pub constraints: DesignConstraints,
    pub solver: SolverOptions,
    pub extraction_attempts: usize,
    pub symbols: usize,
}

impl ScenarioModel {
    pub fn context(&self, seed: u64) -> DesignContext<'_> {
        DesignContext {
            array: self.array,
            channel: &self.channel,
            partition: &self.partition,
            bundles: &self.bundles,
            constraints: self.constraints,
            sensing: self.sensing,
            solver: self.solver.clone(),
            seed,
            extraction_attempts: self.extraction_attempts,
        }
    }

    /// Sensing parameters of the sampled simulation, in which the
    /// observation window is `symbols` unit-power samples.
    pub fn sensing_discrete(&self) -> SensingParams {
        SensingParams { t_s: self.symbols as f64, ..self.sensing }
    }
}
