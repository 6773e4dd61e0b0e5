//! The five verbs. Each writes into a fresh run directory.

use std::path::Path;

use isac_core::array::{beampattern_w, degree_grid, linear_to_db, sum_rate, CMatrix, SteeringBundle};
use isac_core::contour::ContourPartition;
use isac_core::crb::{crb_direction, crb_et, crb_pt, CrbReport};
use isac_core::design::{
    check_constraints, design_isotropic, BeamformerSet, ConstraintCheck, DesignDetails, DesignOutcome, DesignRegistry,
};
use isac_core::scenario::{Scenario, ScenarioModel, SweepKey};
use isac_core::sim::{angle_grid, monte_carlo_mse, MseSetup};
use rayon::prelude::*;
use serde::Serialize;

use crate::output::{fmt_f64, opt_f64, Manifest, RunDir, Units};
use crate::{load_scenario, CliError, CliResult, Common, ExitStatus, SweepSpec};

struct Run {
    dir: RunDir,
    scenario: Scenario,
    source: String,
    seed: u64,
}

fn start(common: &Common) -> CliResult<Run> {
    let (scenario, source) = load_scenario(common.scenario.as_deref())?;
    let mut dir = RunDir::create(&common.out)?;
    dir.write_text("scenario.toml", &scenario.to_toml())?;
    Ok(Run { dir, scenario, source, seed: common.seed })
}

struct ManifestExtras<'a> {
    command: &'a str,
    method: Option<&'a str>,
    trials: Option<usize>,
    sweep: Option<&'a SweepSpec>,
    status: ExitStatus,
    failures: usize,
}

fn finish(run: Run, extras: ManifestExtras<'_>) -> CliResult<ExitStatus> {
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: extras.command.to_string(),
        scenario_source: run.source,
        seed: run.seed,
        channel_seed: run.scenario.channel.seed,
        method: extras.method.map(str::to_string),
        trials: extras.trials,
        sweep: extras.sweep.map(|s| s.to_string()),
        status: extras.status.label().to_string(),
        failures: extras.failures,
        units: Units::of(&run.scenario),
        files: Vec::new(),
    };
    run.dir.finish(manifest)?;
    Ok(extras.status)
}

fn check_method(method: &str) -> CliResult<()> {
    DesignRegistry::builtin().get(method).map(|_| ()).map_err(|e| CliError::Usage(e.to_string()))
}

fn run_design(model: &ScenarioModel, method: &str, seed: u64) -> CliResult<DesignOutcome> {
    let registry = DesignRegistry::builtin();
    let design = registry.get(method)?;
    Ok(design.design(&model.context(seed))?)
}

fn pt_bundle(model: &ScenarioModel) -> SteeringBundle {
    SteeringBundle::new(&model.array, model.pose.phi_o)
}

#[derive(Serialize)]
struct PointCrb {
    crb_d: f64,
    crb_phi: f64,
}

#[derive(Serialize)]
struct SweepDiagnostics<'a> {
    index: usize,
    key: &'static str,
    value: f64,
    method: &'a str,
    partition: &'a ContourPartition,
    crb: &'a CrbReport,
    crb_pt: PointCrb,
}

struct SweepPoint {
    value: f64,
    result: CliResult<(ScenarioModel, CrbReport, (f64, f64))>,
}

fn covariance_for(model: &ScenarioModel, method: &str, seed: u64) -> CliResult<CMatrix> {
    if method == "isotropic" {
        let w = design_isotropic(model.array.n_t, model.channel.users(), model.constraints.p_t);
        return Ok(w.r_x());
    }
    Ok(run_design(model, method, seed)?.beamformers.r_x())
}

fn sweep_point(base: &Scenario, key: SweepKey, value: f64, method: &str, seed: u64) -> SweepPoint {
    let result = (|| {
        let model = base.with_param(key, value)?.build()?;
        let r_x = covariance_for(&model, method, seed)?;
        let report = crb_et(&model.partition, &model.bundles, &r_x, &model.sensing)?;
        let pt = crb_pt(&pt_bundle(&model), &r_x, &model.sensing)?;
        Ok((model, report, pt))
    })();
    SweepPoint { value, result }
}

pub fn crb_sweep(common: &Common, sweep: &SweepSpec, method: &str) -> CliResult<ExitStatus> {
    check_method(method)?;
    let mut run = start(common)?;
    let points: Vec<SweepPoint> =
        sweep.points().into_par_iter().map(|v| sweep_point(&run.scenario, sweep.key, v, method, run.seed)).collect();
    let header = [
        "index",
        sweep.key.name(),
        "status",
        "crb_d",
        "crb_phi",
        "crb_varphi",
        "crb_d_pt",
        "crb_phi_pt",
        "diagnostics",
        "error",
    ];
    let mut rows = Vec::with_capacity(points.len());
    let mut failures = 0;
    for (i, p) in points.iter().enumerate() {
        match &p.result {
            Ok((model, report, (d_pt, phi_pt))) => {
                let diag_path = format!("diagnostics/point_{i:03}.json");
                let diag = SweepDiagnostics {
                    index: i,
                    key: sweep.key.name(),
                    value: p.value,
                    method,
                    partition: &model.partition,
                    crb: report,
                    crb_pt: PointCrb { crb_d: *d_pt, crb_phi: *phi_pt },
                };
                run.dir.write_json(&diag_path, &diag)?;
                rows.push(vec![
                    i.to_string(),
                    fmt_f64(p.value),
                    "ok".into(),
                    fmt_f64(report.crb_d),
                    fmt_f64(report.crb_phi),
                    fmt_f64(report.crb_varphi),
                    fmt_f64(*d_pt),
                    fmt_f64(*phi_pt),
                    diag_path,
                    String::new(),
                ]);
            }
            Err(e) => {
                failures += 1;
                let mut row = vec![i.to_string(), fmt_f64(p.value), "failed".into()];
                row.extend(std::iter::repeat_n(String::new(), 6));
                row.push(e.to_string());
                rows.push(row);
            }
        }
    }
    run.dir.write_csv("crb_sweep.csv", &header, &rows)?;
    let status = if failures > 0 { ExitStatus::PartialFailure } else { ExitStatus::Ok };
    finish(
        run,
        ManifestExtras {
            command: "crb-sweep",
            method: Some(method),
            trials: None,
            sweep: Some(sweep),
            status,
            failures,
        },
    )
}

#[derive(Serialize)]
struct Beamformers {
    n_t: usize,
    n_c: usize,
    /// Row-major real parts, `re[i][n]` for antenna `i` and user `n`.
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl Beamformers {
    fn of(w: &BeamformerSet) -> Self {
        let m = &w.w;
        Self {
            n_t: m.nrows(),
            n_c: m.ncols(),
            re: (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)].re).collect()).collect(),
            im: (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)].im).collect()).collect(),
        }
    }
}

#[derive(Serialize)]
struct DesignReport {
    method: String,
    status: &'static str,
    crb: CrbReport,
    crb_pt: PointCrb,
    sinrs: Vec<f64>,
    sinrs_db: Vec<f64>,
    gamma_db: f64,
    sum_rate: f64,
    power: f64,
    p_t: f64,
    coverage_residual: f64,
    constraints_satisfied: bool,
    details: DesignDetails,
    beamformers: Beamformers,
}

#[derive(Serialize)]
struct FailureReport {
    method: String,
    status: &'static str,
    error: String,
}

fn report_design(model: &ScenarioModel, method: &str, seed: u64, outcome: &DesignOutcome) -> CliResult<DesignReport> {
    let ctx = model.context(seed);
    let w = &outcome.beamformers;
    let r_x = w.r_x();
    let crb = crb_et(&model.partition, &model.bundles, &r_x, &model.sensing)?;
    let (d_pt, phi_pt) = crb_pt(&pt_bundle(model), &r_x, &model.sensing)?;
    let check: ConstraintCheck = check_constraints(&ctx, w);
    Ok(DesignReport {
        method: method.to_string(),
        status: "ok",
        crb,
        crb_pt: PointCrb { crb_d: d_pt, crb_phi: phi_pt },
        sinrs_db: check.sinrs.iter().map(|&s| linear_to_db(s)).collect(),
        gamma_db: linear_to_db(model.constraints.gamma),
        sum_rate: sum_rate(&model.channel, &w.w, model.constraints.sigma_n2),
        power: check.power,
        p_t: model.constraints.p_t,
        coverage_residual: check.coverage_residual,
        constraints_satisfied: check.satisfied(&model.constraints),
        details: outcome.details.clone(),
        beamformers: Beamformers::of(w),
        sinrs: check.sinrs,
    })
}

pub fn design(common: &Common, method: &str) -> CliResult<ExitStatus> {
    check_method(method)?;
    let mut run = start(common)?;
    let model = run.scenario.build()?;
    let outcome =
        run_design(&model, method, run.seed).and_then(|o| Ok((report_design(&model, method, run.seed, &o)?, o)));
    let (status, failures) = match outcome {
        Ok((report, o)) => {
            run.dir.write_json("design.json", &report)?;
            let grid = degree_grid(-90.0, 90.0, 1.0);
            let gains = beampattern_w(&o.beamformers.w, model.array.spacing, &grid);
            let rows: Vec<Vec<String>> =
                grid.iter().zip(&gains).map(|(phi, g)| vec![fmt_f64(phi.to_degrees().round()), fmt_f64(*g)]).collect();
            run.dir.write_csv("beampattern.csv", &["angle_deg", "gain"], &rows)?;
            (ExitStatus::Ok, 0)
        }
        Err(e) => {
            let status = e.status();
            let label = status.label();
            run.dir.write_json(
                "design.json",
                &FailureReport { method: method.into(), status: label, error: e.to_string() },
            )?;
            eprintln!("error: {e}");
            (status, 1)
        }
    };
    finish(run, ManifestExtras { command: "design", method: Some(method), trials: None, sweep: None, status, failures })
}

#[derive(Serialize)]
struct MseReport {
    method: String,
    n_trials: usize,
    seed: u64,
    symbols: usize,
    grid_deg: f64,
    phi_true_rad: f64,
    rmse: f64,
    root_crb: f64,
    crb_phi: f64,
    rmse_over_root_crb: f64,
    design_crb_phi: f64,
}

pub fn mse(common: &Common, method: &str, trials: usize) -> CliResult<ExitStatus> {
    check_method(method)?;
    if trials == 0 {
        return Err(CliError::Usage("--trials must be positive".into()));
    }
    let mut run = start(common)?;
    let model = run.scenario.build()?;
    let outcome = match run_design(&model, method, run.seed) {
        Ok(o) => o,
        Err(e) => {
            let status = e.status();
            run.dir.write_json(
                "mse.json",
                &FailureReport { method: method.into(), status: status.label(), error: e.to_string() },
            )?;
            eprintln!("error: {e}");
            let extras = ManifestExtras {
                command: "mse",
                method: Some(method),
                trials: Some(trials),
                sweep: None,
                status,
                failures: 1,
            };
            return finish(run, extras);
        }
    };
    let sp = model.sensing_discrete();
    let crb_phi = crb_direction(&model.partition, &model.bundles, &outcome.beamformers.r_x(), &sp)?;
    let grid = angle_grid(run.scenario.sensing.mf_grid_deg);
    let setup = MseSetup {
        array: model.array,
        partition: &model.partition,
        bundles: &model.bundles,
        g: sp.g,
        sigma_s2: sp.sigma_s2,
        phi_true: model.pose.phi_o,
        symbols: model.symbols,
        kind: run.scenario.sensing.symbol_kind,
        grid: &grid,
    };
    let res = monte_carlo_mse(&setup, &outcome.beamformers.w, trials, run.seed);
    let root_crb = crb_phi.sqrt();
    let report = MseReport {
        method: method.to_string(),
        n_trials: trials,
        seed: run.seed,
        symbols: model.symbols,
        grid_deg: run.scenario.sensing.mf_grid_deg,
        phi_true_rad: model.pose.phi_o,
        rmse: res.rmse,
        root_crb,
        crb_phi,
        rmse_over_root_crb: res.rmse / root_crb,
        design_crb_phi: outcome.crb_phi,
    };
    run.dir.write_json("mse.json", &report)?;
    let rows: Vec<Vec<String>> = res
        .trials
        .iter()
        .enumerate()
        .map(|(i, t)| vec![i.to_string(), fmt_f64(t.phi_hat), fmt_f64(t.phi_hat - t.phi_true)])
        .collect();
    run.dir.write_csv("mse_trials.csv", &["trial", "phi_hat_rad", "error_rad"], &rows)?;
    let extras = ManifestExtras {
        command: "mse",
        method: Some(method),
        trials: Some(trials),
        sweep: None,
        status: ExitStatus::Ok,
        failures: 0,
    };
    finish(run, extras)
}

struct MethodResult {
    crb_phi: Option<f64>,
    sum_rate: Option<f64>,
    error: Option<String>,
}

impl MethodResult {
    fn status(&self) -> &'static str {
        if self.error.is_some() {
            "failed"
        } else {
            "ok"
        }
    }
}

fn compare_method(model: &ScenarioModel, method: &str, seed: u64) -> MethodResult {
    match run_design(model, method, seed) {
        Ok(o) => MethodResult {
            crb_phi: Some(o.crb_phi),
            sum_rate: Some(sum_rate(&model.channel, &o.beamformers.w, model.constraints.sigma_n2)),
            error: None,
        },
        Err(e) => MethodResult { crb_phi: None, sum_rate: None, error: Some(e.to_string()) },
    }
}

pub fn compare(common: &Common, sweep: &SweepSpec) -> CliResult<ExitStatus> {
    if !matches!(sweep.key, SweepKey::Gamma | SweepKey::Users) {
        return Err(CliError::Usage(format!("compare sweeps gamma or n_c, not {}", sweep.key.name())));
    }
    let mut run = start(common)?;
    let seed = run.seed;
    let results: Vec<(f64, Result<[MethodResult; 2], String>)> = sweep
        .points()
        .into_par_iter()
        .map(|v| {
            let r = run.scenario.with_param(sweep.key, v).and_then(|s| s.build()).map_err(|e| e.to_string());
            (v, r.map(|m| [compare_method(&m, "sdr", seed), compare_method(&m, "zf", seed)]))
        })
        .collect();
    let header = [
        "index",
        sweep.key.name(),
        "sdr_status",
        "sdr_crb_phi",
        "sdr_sum_rate",
        "zf_status",
        "zf_crb_phi",
        "zf_sum_rate",
        "error",
    ];
    let mut failures = 0;
    let mut rows = Vec::with_capacity(results.len());
    for (i, (v, r)) in results.iter().enumerate() {
        let mut row = vec![i.to_string(), fmt_f64(*v)];
        match r {
            Ok(pair) => {
                let mut errors = Vec::new();
                for (name, m) in ["sdr", "zf"].iter().zip(pair) {
                    row.extend([m.status().to_string(), opt_f64(m.crb_phi), opt_f64(m.sum_rate)]);
                    if let Some(e) = &m.error {
                        errors.push(format!("{name}: {e}"));
                    }
                }
                if !errors.is_empty() {
                    failures += 1;
                }
                row.push(errors.join("; "));
            }
            Err(e) => {
                failures += 1;
                row.extend(["failed", "", "", "failed", "", ""].map(String::from));
                row.push(e.clone());
            }
        }
        rows.push(row);
    }
    run.dir.write_csv("compare.csv", &header, &rows)?;
    let status = if failures > 0 { ExitStatus::PartialFailure } else { ExitStatus::Ok };
    finish(run, ManifestExtras { command: "compare", method: None, trials: None, sweep: Some(sweep), status, failures })
}

#[derive(Serialize)]
struct ValidateSummary {
    valid: bool,
    source: String,
    n_t: usize,
    n_r: usize,
    n_c: usize,
    subsections: usize,
    visible_length_m: f64,
    visible_span_deg: [f64; 2],
    units: Units,
    warnings: Vec<String>,
}

fn lint(s: &Scenario, model: &ScenarioModel) -> Vec<String> {
    let mut w = Vec::new();
    if s.channel.paths == 1 && s.channel.los_blocked {
        w.push("single-path channel with blocked line of sight".to_string());
    }
    let dirs = &s.users.directions_deg;
    for i in 0..dirs.len() {
        for j in i + 1..dirs.len() {
            if (dirs[i] - dirs[j]).abs() < 1.0 {
                w.push(format!("users {i} and {j} are less than 1 degree apart"));
            }
        }
    }
    let target = s.target.phi_o_deg;
    if let Some((i, _)) = dirs.iter().enumerate().find(|(_, d)| (*d - target).abs() < 1.0) {
        w.push(format!("user {i} is within 1 degree of the target direction"));
    }
    if s.sensing.mf_grid_deg > 1.0 {
        w.push(format!("coarse matched-filter grid of {} degrees", s.sensing.mf_grid_deg));
    }
    if model.partition.total_length() <= 0.0 {
        w.push("visible contour has zero length".to_string());
    }
    w
}

pub fn validate(path: Option<&Path>, print: bool) -> CliResult<ExitStatus> {
    let (scenario, source) = load_scenario(path)?;
    let model = scenario.build()?;
    if print {
        print!("{}", scenario.to_toml());
        return Ok(ExitStatus::Ok);
    }
    let phis: Vec<f64> = model.partition.subsections.iter().map(|s| s.phi.to_degrees()).collect();
    let span =
        [phis.iter().copied().fold(f64::INFINITY, f64::min), phis.iter().copied().fold(f64::NEG_INFINITY, f64::max)];
    let summary = ValidateSummary {
        valid: true,
        source,
        n_t: scenario.array.n_t,
        n_r: scenario.array.n_r,
        n_c: scenario.users(),
        subsections: model.partition.k(),
        visible_length_m: model.partition.total_length(),
        visible_span_deg: span,
        units: Units::of(&scenario),
        warnings: lint(&scenario, &model),
    };
    println!("{}", serde_json::to_string_pretty(&summary).map_err(|e| CliError::Other(e.to_string()))?);
    Ok(ExitStatus::Ok)
}
