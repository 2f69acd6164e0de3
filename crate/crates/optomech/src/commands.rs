//! One function per subcommand. Each returns the documents to write; the
//! caller adds metadata and writes them.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};

use optomech_core::backaction::{backaction_at, BackactionSet, FrequencyMode, OperatingPoint};
use optomech_core::calibration::{self, CalibrationCase, CALIBRATION};
use optomech_core::dynamics::{
    build_diffusion, build_drift, evolve_covariance, evolve_exact, steady_state_covariance, DriftDiffusion, NoiseStructure,
};
use optomech_core::fullmodel::{build_full, compare_reduced_full};
use optomech_core::fwm::{integrate_trajectory, FwmParams, FwmRun, TrajectoryEnsemble};
use optomech_core::gaussian::GaussianState;
use optomech_core::matching::{find_matching_detunings, Dominant, Location, MatchOptions, MatchPoint, Side};
use optomech_core::meanfield::{select_branch, solve_linear, solve_quadratic, MeanFieldSolution};
use optomech_core::model::{classify_regime, CavityConfig, CouplingKind, Drive, MechanicalMode, RegimeReport, SystemConfig};
use optomech_core::noise::NoiseModel;
use optomech_core::transfer::{assemble_sweep, fidelity_at_swap, phase_point, run_transfer, TransferScenario};

use crate::config::{FrequencyModeSpec, InitialSpec, Scenario};
use crate::error::CliError;
use crate::output::{Cell, Table};

fn to_hz(x: f64) -> f64 {
    x / TAU
}

/// A named output: either a table or a JSON report.
#[derive(Debug, Clone, PartialEq)]
pub enum Document {
    Table { suffix: &'static str, table: Table },
    Report { suffix: &'static str, value: Value },
}

fn require<'a, T>(block: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
    block.as_ref().ok_or_else(|| CliError::validation(name, "block is required by this command"))
}

fn frequency_mode(m: FrequencyModeSpec) -> FrequencyMode {
    match m {
        FrequencyModeSpec::Weak => FrequencyMode::WeakCoupling,
        FrequencyModeSpec::SelfConsistent => FrequencyMode::SelfConsistent,
    }
}

fn solve_meanfield(sys: &SystemConfig) -> Result<Vec<MeanFieldSolution>, CliError> {
    Ok(if sys.coupling_kind == CouplingKind::Linear { solve_linear(sys)? } else { solve_quadratic(sys)? })
}

/// Operating point from an explicit Δ̄ (linear only) or the selected branch.
fn operating_point(sys: &SystemConfig, delta_bar: Option<f64>, field: &str) -> Result<OperatingPoint, CliError> {
    match (sys.coupling_kind, delta_bar) {
        (CouplingKind::Linear, Some(d)) => Ok(OperatingPoint::linear(sys, d)?),
        (_, Some(_)) => Err(CliError::validation(field, "an explicit detuning is only supported for linear coupling")),
        (_, None) => {
            let branches = solve_meanfield(sys)?;
            let mf = select_branch(sys, &branches)
                .ok_or_else(|| CliError::validation("system", "no admissible mean-field branch for this drive"))?;
            Ok(OperatingPoint::from_meanfield(sys, mf))
        }
    }
}

fn regime_json(r: &RegimeReport) -> Value {
    json!({
        "g_over_kappa": r.g_over_kappa,
        "omega_over_kappa": r.omega_over_kappa,
        "flags": r.flags.iter().map(|f| format!("{f:?}")).collect::<Vec<_>>(),
    })
}

pub fn meanfield(scn: &Scenario) -> Result<Vec<Document>, CliError> {
    let sys = scn.system.to_system()?;
    let branches = solve_meanfield(&sys)?;
    let selected = select_branch(&sys, &branches).map(|b| b.branch);
    let n = sys.n_modes();
    let mut cols = vec!["branch".to_string(), "delta_bar_hz".into(), "delta_shifted_hz".into(), "n_c".into()];
    for j in 0..n {
        cols.push(format!("x_{j}"));
        cols.push(format!("varpi_{j}_hz"));
    }
    cols.extend(["stable".into(), "max_growth_rate_hz".into(), "degenerate".into(), "selected".into()]);
    let mut t = Table::new(cols);
    for b in &branches {
        let mut row: Vec<Cell> = vec![b.branch.into(), to_hz(b.delta_bar).into(), to_hz(b.delta_shifted).into(), b.n_c.into()];
        for j in 0..n {
            row.push(b.displacements[j].into());
            row.push(to_hz(b.varpi[j]).into());
        }
        row.extend([b.stable.into(), to_hz(b.max_growth_rate).into(), b.degenerate.into(), (Some(b.branch) == selected).into()]);
        t.push(row);
    }
    let regime = selected
        .and_then(|i| branches.iter().find(|b| b.branch == i))
        .map(|b| regime_json(&classify_regime(&sys, b.delta_bar)));
    Ok(vec![
        Document::Table { suffix: "branches", table: t },
        Document::Report { suffix: "summary", value: json!({ "selected_branch": selected, "regime": regime }) },
    ])
}

/// Backaction at one sweep coordinate: Δ̄ for linear coupling, Δ_c for
/// quadratic coupling (the mean field is re-solved at every point).
fn sweep_point(sys: &SystemConfig, x: f64, mode: FrequencyMode) -> Result<BackactionSet, CliError> {
    if sys.coupling_kind == CouplingKind::Linear {
        Ok(backaction_at(sys, &OperatingPoint::linear(sys, x)?, mode)?)
    } else {
        let mut s = sys.clone();
        s.cavity.delta_c = x;
        Ok(backaction_at(&s, &operating_point(&s, None, "sweep")?, mode)?)
    }
}

pub fn sweep(scn: &Scenario) -> Result<Vec<Document>, CliError> {
    let spec = require(&scn.sweep, "sweep")?;
    let sys = scn.system.to_system()?;
    let mode = frequency_mode(spec.frequency_mode);
    let (lo, hi) = (spec.delta_min_hz * TAU, spec.delta_max_hz * TAU);
    let grid: Vec<f64> = (0..spec.points).map(|k| lo + (hi - lo) * k as f64 / (spec.points - 1) as f64).collect();
    let sets = grid.par_iter().map(|x| sweep_point(&sys, *x, mode)).collect::<Result<Vec<_>, _>>()?;

    let n = sys.n_modes();
    let axis = if sys.coupling_kind == CouplingKind::Linear { "delta_bar_hz" } else { "delta_c_hz" };
    let mut cols = vec![axis.to_string(), "detuning_hz".into()];
    for j in 0..n {
        cols.extend([format!("nu_{j}_hz"), format!("Omega_{j}_hz"), format!("Gamma_{j}_hz"), format!("Gamma_e_{j}_hz")]);
        if sys.coupling_kind == CouplingKind::QuadraticMinima {
            cols.push(format!("Lambda_{j}_hz"));
        }
    }
    let mut t = Table::new(cols);
    for (x, b) in grid.iter().zip(&sets) {
        let mut row: Vec<Cell> = vec![to_hz(*x).into(), to_hz(b.detuning).into()];
        for j in 0..n {
            row.extend([to_hz(b.nu[j]).into(), to_hz(b.omega[j]).into(), to_hz(b.gamma[j]).into(), to_hz(b.gamma_e[j]).into()]);
            if sys.coupling_kind == CouplingKind::QuadraticMinima {
                row.push(to_hz(b.lambda[j]).into());
            }
        }
        t.push(row);
    }
    Ok(vec![Document::Table { suffix: "sweep", table: t }])
}

fn match_table(points: &[MatchPoint]) -> Table {
    let mut t = Table::new([
        "delta_bar_hz",
        "nu_hz",
        "side",
        "location",
        "dominant",
        "Omega_c_hz",
        "Gamma_c_hz",
        "sideband_distance_kappa",
    ]);
    for p in points {
        t.push(vec![
            to_hz(p.delta_bar).into(),
            to_hz(p.nu).into(),
            (if p.side == Side::Red { "red" } else { "blue" }).into(),
            (if p.location == Location::SidebandCenter { "sideband_center" } else { "wing" }).into(),
            (if p.dominant == Dominant::Coherent { "coherent" } else { "cold_damping" }).into(),
            to_hz(p.omega_c).into(),
            to_hz(p.gamma_c).into(),
            p.sideband_distance.into(),
        ]);
    }
    t
}

pub fn matching(scn: &Scenario) -> Result<(Vec<Document>, String), CliError> {
    let spec = require(&scn.matching, "match")?;
    let sys = scn.system.to_system()?;
    let mut opts = MatchOptions::with_tol(spec.tol_hz * TAU);
    opts.delta_range = spec.range_hz.map(|[a, b]| (a * TAU, b * TAU));
    if let Some(g) = spec.grid_points {
        opts.grid_points = g;
    }
    if let Some(r) = spec.coherent_ratio {
        opts.coherent_ratio = r;
    }
    if let Some(c) = spec.center_threshold {
        opts.center_threshold = c;
    }
    let r = find_matching_detunings(&sys, (spec.pair[0], spec.pair[1]), &opts)?;
    let t = match_table(&r.points);
    let text = t.aligned();
    Ok((
        vec![
            Document::Table { suffix: "match", table: t },
            Document::Report { suffix: "match_summary", value: json!({ "degenerate": r.degenerate, "count": r.points.len() }) },
        ],
        text,
    ))
}

fn initial_product(initial: &[InitialSpec], n: usize, field: &str) -> Result<GaussianState, CliError> {
    if initial.len() != n {
        return Err(CliError::validation(field, &format!("needs {n} entries, one per mode")));
    }
    Ok(GaussianState::product(&initial.iter().map(|s| s.state().state()).collect::<Vec<_>>()))
}

/// Drift and diffusion for `evolve`, plus each mode alone with the cavity.
pub fn evolve_model(scn: &Scenario) -> Result<(DriftDiffusion, DriftDiffusion, f64), CliError> {
    let spec = require(&scn.evolve, "evolve")?;
    let sys = scn.system.to_system()?;
    let point = operating_point(&sys, spec.delta_bar_hz.map(|d| d * TAU), "evolve.delta_bar_hz")?;
    let mut ba = backaction_at(&sys, &point, FrequencyMode::WeakCoupling)?;
    if spec.common_frequency {
        let nu = ba.nu.iter().sum::<f64>() / ba.nu.len() as f64;
        ba = BackactionSet::evaluate(&sys, &point, &vec![nu; sys.n_modes()]);
        ba.nu = vec![nu; sys.n_modes()];
    }
    let noise = scn.noise.model(point.detuning, sys.kappa())?;
    let structure: NoiseStructure = spec.structure.into();
    let build = |b: &BackactionSet| -> Result<DriftDiffusion, CliError> {
        Ok(DriftDiffusion {
            m: build_drift(&sys, b, spec.variant.into())?,
            d: build_diffusion(&sys, b, &noise, point.detuning, structure, CALIBRATION),
        })
    };
    Ok((build(&ba)?, build(&ba.uncoupled())?.block_diagonal(), point.detuning))
}

pub fn evolve(scn: &Scenario) -> Result<Vec<Document>, CliError> {
    let spec = require(&scn.evolve, "evolve")?;
    let n = scn.system.modes.len();
    let v0 = initial_product(&spec.initial, n, "evolve.initial")?;
    let (coupled, uncoupled, _) = evolve_model(scn)?;
    let grid = spec.time_grid();

    let mut runs = vec![("", &coupled)];
    if spec.reference_uncoupled {
        runs.push(("ref_", &uncoupled));
    }
    let series = runs
        .par_iter()
        .map(|(_, dd)| match spec.dt_s {
            Some(dt) => evolve_covariance(dd, &v0, &grid, Some(dt)),
            None => evolve_exact(dd, &v0, &grid),
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut cols = vec!["t_s".to_string()];
    for (prefix, _) in &runs {
        for i in 0..2 * n {
            for j in i..2 * n {
                cols.push(format!("{prefix}V_{i}_{j}"));
            }
        }
        for j in 0..n {
            cols.push(format!("{prefix}nu_sympl_{j}"));
        }
        for j in 0..n {
            cols.push(format!("{prefix}phonons_{j}"));
        }
    }
    let mut t = Table::new(cols);
    for (k, time) in grid.iter().enumerate() {
        let mut row: Vec<Cell> = vec![(*time).into()];
        for states in &series {
            let s = &states[k];
            for i in 0..2 * n {
                for j in i..2 * n {
                    row.push(s.cov[(i, j)].into());
                }
            }
            let mut sy = s.symplectic_eigenvalues();
            sy.sort_by(|a, b| a.total_cmp(b));
            row.extend(sy.into_iter().map(Cell::from));
            row.extend((0..n).map(|j| Cell::from(s.phonon_number(j))));
        }
        t.push(row);
    }
    Ok(vec![Document::Table { suffix: "evolve", table: t }])
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TransferOverrides {
    /// Number of phase points; enables the phase sweep.
    pub sweep_phase: Option<usize>,
    pub squeeze_n: Vec<f64>,
    pub initial: Option<[InitialSpec; 2]>,
}

pub fn transfer_scenario(scn: &Scenario, ov: &TransferOverrides) -> Result<TransferScenario, CliError> {
    let spec = require(&scn.transfer, "transfer")?;
    let sys = scn.system.to_system()?;
    if sys.n_modes() != 2 || sys.coupling_kind != CouplingKind::Linear {
        return Err(CliError::validation("system", "transfer needs exactly two linearly coupled modes"));
    }
    let mut opts = MatchOptions::with_tol(spec.match_tol_hz * TAU);
    opts.delta_range = Some((spec.match_range_hz[0] * TAU, spec.match_range_hz[1] * TAU));
    let matches = find_matching_detunings(&sys, (0, 1), &opts)?;
    let point = matches
        .points
        .into_iter()
        .find(|p| p.dominant == Dominant::Coherent)
        .ok_or_else(|| CliError::validation("transfer.match_range_hz", "no coherent-dominated match point in range"))?;
    let initial = ov.initial.unwrap_or(spec.initial);
    for (i, s) in initial.iter().enumerate() {
        s.check(&format!("transfer.initial[{i}]"))?;
    }
    let mut noise = scn.noise.model(point.delta_bar, sys.kappa())?;
    if ov.sweep_phase.is_none() {
        if let Some(&n) = ov.squeeze_n.first() {
            noise = if n == 0.0 {
                NoiseModel::Vacuum
            } else {
                NoiseModel::squeezed_relative(n, PI / 2.0, point.delta_bar, sys.kappa())?
            };
        }
    }
    let mut sc = TransferScenario::at_match(
        &sys,
        &point,
        noise,
        [initial[0].state(), initial[1].state()],
        spec.direction.into(),
        CALIBRATION,
    )?;
    sc.n_swaps = spec.n_swaps;
    sc.samples_per_swap = spec.samples_per_swap;
    sc.structure = spec.structure.into();
    if let Some(g) = spec.gamma_hz {
        sc.gamma = [g[0] * TAU, g[1] * TAU];
    }
    Ok(sc)
}

/// Phase grid over [−π, π] with `points` entries.
pub fn phase_grid(points: usize) -> Vec<f64> {
    let p = points.max(2);
    (0..p).map(|k| -PI + TAU * k as f64 / (p - 1) as f64).collect()
}

pub fn transfer(scn: &Scenario, ov: &TransferOverrides) -> Result<Vec<Document>, CliError> {
    let spec = require(&scn.transfer, "transfer")?;
    let sc = transfer_scenario(scn, ov)?;
    let summary_base = json!({
        "delta_bar_hz": to_hz(sc.delta_bar),
        "nu_hz": to_hz(sc.nu),
        "Omega_c_hz": to_hz(sc.omega_c),
        "t_swap_s": sc.swap_time(),
    });

    let sweep_points = ov.sweep_phase.or(spec.phase_sweep.as_ref().map(|p| p.phase_points));
    if let Some(points) = sweep_points {
        let n_values = if !ov.squeeze_n.is_empty() {
            ov.squeeze_n.clone()
        } else {
            spec.phase_sweep.as_ref().map(|p| p.n_values.clone()).unwrap_or_else(|| vec![0.0, 1.0, 10.0])
        };
        let phases = phase_grid(points);
        let jobs: Vec<(usize, usize)> = (0..n_values.len()).flat_map(|i| (0..phases.len()).map(move |k| (i, k))).collect();
        let values = jobs
            .par_iter()
            .map(|&(i, k)| {
                let s = if n_values[i] == 0.0 { sc.with_noise(NoiseModel::Vacuum) } else { phase_point(&sc, n_values[i], phases[k])? };
                fidelity_at_swap(&s).map_err(CliError::from)
            })
            .collect::<Result<Vec<f64>, CliError>>()?;
        let fidelity: Vec<Vec<f64>> = values.chunks(phases.len()).map(<[f64]>::to_vec).collect();
        let sweep = assemble_sweep(&n_values, &phases, fidelity);

        let mut cols = vec!["phase_rad".to_string()];
        cols.extend(n_values.iter().map(|n| format!("F_N{n}")));
        let mut t = Table::new(cols);
        for (k, ph) in phases.iter().enumerate() {
            let mut row: Vec<Cell> = vec![(*ph).into()];
            row.extend(sweep.fidelity.iter().map(|r| Cell::from(r[k])));
            t.push(row);
        }
        let mut summary = summary_base;
        summary["n_values"] = json!(sweep.n_values);
        summary["argmax_phase_rad"] = json!(sweep.argmax_phase);
        summary["peak_fidelity"] = json!(sweep.peak);
        summary["peak_fidelity_sqrt"] = json!(sweep.peak.iter().map(|f| f.sqrt()).collect::<Vec<_>>());
        summary["curvature"] = json!(sweep.curvature.iter().map(|c| if c.is_finite() { json!(c) } else { Value::Null }).collect::<Vec<_>>());
        return Ok(vec![
            Document::Table { suffix: "phase_sweep", table: t },
            Document::Report { suffix: "transfer_summary", value: summary },
        ]);
    }

    let r = run_transfer(&sc)?;
    let mut t = Table::new(["t_s", "fidelity", "fidelity_sqrt", "var_x_0", "var_p_0", "var_x_1", "var_p_1"]);
    for k in 0..r.times.len() {
        t.push(vec![
            r.times[k].into(),
            r.fidelity[k].into(),
            r.fidelity_sqrt[k].into(),
            r.var_x[0][k].into(),
            r.var_p[0][k].into(),
            r.var_x[1][k].into(),
            r.var_p[1][k].into(),
        ]);
    }
    let mut summary = summary_base;
    summary["swap_times_s"] = json!(r.swap_times);
    summary["swap_fidelities"] = json!(r.swap_fidelities);
    summary["swap_fidelities_sqrt"] = json!(r.swap_fidelities.iter().map(|f| f.sqrt()).collect::<Vec<_>>());
    summary["min_symplectic"] = json!(r.min_symplectic);
    Ok(vec![
        Document::Table { suffix: "transfer", table: t },
        Document::Report { suffix: "transfer_summary", value: summary },
    ])
}

pub fn fwm_params(scn: &Scenario) -> Result<FwmParams, CliError> {
    let spec = require(&scn.fwm, "fwm")?;
    let sys = scn.system.to_system()?;
    let point = operating_point(&sys, None, "fwm")?;
    let ba = backaction_at(&sys, &point, frequency_mode(spec.frequency_mode))?;
    let noise = scn.noise.model(point.detuning, sys.kappa())?;
    let mut p = FwmParams::from_backaction(&sys, &ba, &noise, CALIBRATION)?;
    p.stratonovich = spec.stratonovich;
    Ok(p)
}

/// Ensemble integration with trajectories spread over the rayon pool.
/// Trajectory i always draws from stream i, so the result does not depend
/// on the number of workers.
pub fn fwm_ensemble(params: &FwmParams, run: &FwmRun, n_traj: usize) -> Result<TrajectoryEnsemble, CliError> {
    let samples = (0..n_traj)
        .into_par_iter()
        .map(|i| integrate_trajectory(params, run, i))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TrajectoryEnsemble::from_samples(run.seed, run.dt, run.t_grid.to_vec(), samples))
}

pub fn fwm(scn: &Scenario, seed: u64, n_traj: Option<usize>) -> Result<Vec<Document>, CliError> {
    let spec = require(&scn.fwm, "fwm")?;
    let params = fwm_params(scn)?;
    let n = params.n_modes();
    if spec.init.len() != n {
        return Err(CliError::validation("fwm.init", &format!("needs {n} amplitudes, one per mode")));
    }
    let init: Vec<Complex64> = spec.init.iter().map(|[re, im]| Complex64::new(*re, *im)).collect();
    let grid: Vec<f64> = (0..spec.samples).map(|k| spec.t_end_s * k as f64 / (spec.samples - 1) as f64).collect();
    let rate = params.max_rate(&init, spec.noise_on);
    let dt = spec.dt_s.unwrap_or(if rate > 0.0 { 1.0 / (50.0 * rate) } else { grid[1] - grid[0] });
    let run = FwmRun { init: &init, noise_on: spec.noise_on, seed, t_grid: &grid, dt };
    let ens = fwm_ensemble(&params, &run, n_traj.unwrap_or(spec.n_traj))?;

    let mut cols = vec!["t_s".to_string()];
    for j in 0..n {
        cols.extend([format!("mean_abs2_{j}"), format!("mean_re_{j}"), format!("mean_im_{j}")]);
    }
    let mut t = Table::new(cols);
    for (k, time) in ens.times.iter().enumerate() {
        let mut row: Vec<Cell> = vec![(*time).into()];
        for j in 0..n {
            row.extend([ens.mean_abs2[k][j].into(), ens.mean[k][j].re.into(), ens.mean[k][j].im.into()]);
        }
        t.push(row);
    }
    let mut spectrum = Table::new((0..=n).map(|j| if j == 0 { "omega_rad_s".to_string() } else { format!("power_{}", j - 1) }));
    let spectra: Vec<Vec<(f64, f64)>> = (0..n).map(|j| ens.spectrum(j)).collect();
    for k in 0..spectra[0].len() {
        let mut row: Vec<Cell> = vec![spectra[0][k].0.into()];
        row.extend(spectra.iter().map(|s| Cell::from(s[k].1)));
        spectrum.push(row);
    }
    let mut docs = vec![
        Document::Table { suffix: "fwm", table: t },
        Document::Table { suffix: "fwm_spectrum", table: spectrum },
    ];
    if spec.dump_trajectories {
        let mut cols = vec!["trajectory".to_string(), "t_s".to_string()];
        for j in 0..n {
            cols.extend([format!("re_{j}"), format!("im_{j}")]);
        }
        let mut d = Table::new(cols);
        for (i, traj) in ens.samples.iter().enumerate() {
            for (k, bs) in traj.iter().enumerate() {
                let mut row: Vec<Cell> = vec![i.into(), ens.times[k].into()];
                for b in bs {
                    row.extend([b.re.into(), b.im.into()]);
                }
                d.push(row);
            }
        }
        docs.push(Document::Table { suffix: "fwm_trajectories", table: d });
    }
    Ok(docs)
}

/// Single-mode system at ω/κ = 0.05 used for the sideband-cooling limit.
fn sideband_system() -> SystemConfig {
    SystemConfig {
        cavity: CavityConfig { kappa: 0.05, delta_c: -1.0, drive: Drive::PhotonNumber(1.0) },
        modes: vec![MechanicalMode { omega: 1.0, gamma: 0.0, coupling: 0.0025, n_th: 0.0 }],
        coupling_kind: CouplingKind::Linear,
        sign_choice: Vec::new(),
    }
}

/// Calibration scan, g/κ convergence study, sideband-cooling limit and a
/// time-domain reduced/full comparison.
pub fn validate(scn: Option<&Scenario>) -> Result<Vec<Document>, CliError> {
    let cal = calibration::calibrate()?;
    let grid: Vec<Value> = cal.grid.iter().map(|(m, o, d)| json!({ "c_m": m, "c_o": o, "worst_deviation": d })).collect();

    let ratios = [0.1, 0.05, 0.02];
    let mut convergence = Vec::new();
    for case in CalibrationCase::ALL {
        let mut devs = Vec::new();
        for &r in &ratios {
            let s = calibration::reference_system(case, calibration::OMEGA_OVER_KAPPA, r);
            let (red, full) = calibration::steady_phonons(&s, CALIBRATION, NoiseStructure::MomentumRows)?;
            devs.push(json!({ "g_over_kappa": r, "reduced": red, "full": full, "deviation": red / full - 1.0 }));
        }
        convergence.push(json!({ "case": format!("{case:?}"), "points": devs }));
    }

    let sb = sideband_system();
    let full = steady_state_covariance(&build_full(&sb, -1.0, &NoiseModel::Vacuum)?)?;
    let n_full = full.phonon_number(1);
    let limit = (0.05f64 / 4.0).powi(2);

    let s = calibration::reference_system(CalibrationCase::Thermal, calibration::OMEGA_OVER_KAPPA, calibration::G_OVER_KAPPA);
    let omega = s.modes[0].omega;
    let t_grid: Vec<f64> = (0..=40).map(|k| k as f64 * 0.5 / omega).collect();
    let cmp = compare_reduced_full(&s, -omega, &NoiseModel::Vacuum, &t_grid, CALIBRATION, NoiseStructure::MomentumRows)?;

    let scenario = match scn {
        Some(sc) => {
            let sys = sc.system.to_system()?;
            let point = operating_point(&sys, None, "system").ok();
            json!({ "valid": true, "regime": point.map(|p| regime_json(&classify_regime(&sys, p.detuning))) })
        }
        None => Value::Null,
    };
    Ok(vec![Document::Report {
        suffix: "validate",
        value: json!({
            "calibration": {
                "chosen": { "c_m": cal.chosen.c_m, "c_o": cal.chosen.c_o },
                "frozen": { "c_m": CALIBRATION.c_m, "c_o": CALIBRATION.c_o },
                "matches_frozen": cal.chosen == CALIBRATION,
                "within_tolerance": cal.within_tolerance,
                "tolerance": calibration::TOLERANCE,
                "grid": grid,
            },
            "convergence": convergence,
            "sideband_limit": { "full": n_full, "analytic": limit, "ratio": n_full / limit },
            "time_domain": {
                "max_cov_deviation": cmp.max_cov_deviation,
                "final_cov_deviation": cmp.final_cov_deviation,
                "phonon_deviation": cmp.phonon_deviation,
                "min_symplectic_reduced": cmp.min_symplectic_reduced,
                "min_symplectic_full": cmp.min_symplectic_full,
            },
            "scenario": scenario,
        }),
    }])
}
