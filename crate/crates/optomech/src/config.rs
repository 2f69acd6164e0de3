//! Scenario files. Frequencies and rates are written in Hz and converted to
//! rad/s on load; times are in seconds.

use std::f64::consts::TAU;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use optomech_core::dynamics::{DriftVariant, NoiseStructure};
use optomech_core::model::{CavityConfig, CouplingKind, Drive, MechanicalMode, Sign, SystemConfig};
use optomech_core::noise::NoiseModel;
use optomech_core::transfer::{Direction, InitialState};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

fn hz(x: f64) -> f64 {
    x * TAU
}

fn to_hz(x: f64) -> f64 {
    x / TAU
}

fn is_false(b: &bool) -> bool {
    !*b
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub system: SystemSpec,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default, rename = "match", skip_serializing_if = "Option::is_none")]
    pub matching: Option<MatchSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evolve: Option<EvolveSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transfer: Option<TransferSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fwm: Option<FwmSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingKindSpec {
    Linear,
    QuadraticMaxima,
    QuadraticMinima,
}

impl From<CouplingKindSpec> for CouplingKind {
    fn from(k: CouplingKindSpec) -> Self {
        match k {
            CouplingKindSpec::Linear => CouplingKind::Linear,
            CouplingKindSpec::QuadraticMaxima => CouplingKind::QuadraticMaxima,
            CouplingKindSpec::QuadraticMinima => CouplingKind::QuadraticMinima,
        }
    }
}

impl From<CouplingKind> for CouplingKindSpec {
    fn from(k: CouplingKind) -> Self {
        match k {
            CouplingKind::Linear => CouplingKindSpec::Linear,
            CouplingKind::QuadraticMaxima => CouplingKindSpec::QuadraticMaxima,
            CouplingKind::QuadraticMinima => CouplingKindSpec::QuadraticMinima,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub coupling_kind: CouplingKindSpec,
    pub cavity: CavitySpec,
    pub modes: Vec<ModeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sign_choice: Option<Vec<SignSpec>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SignSpec {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavitySpec {
    pub kappa_hz: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub delta_c_hz: f64,
    /// Absent when the modes carry effective couplings `g_hz`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drive: Option<DriveSpec>,
}

/// Exactly one of the two fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub photon_number: Option<f64>,
}

/// A mode carries either the single-photon coupling `coupling_hz` or the
/// light-enhanced coupling `g_hz` (linear kind only).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub omega_hz: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub gamma_hz: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub n_th: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_hz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSpec {
    #[default]
    Vacuum,
    /// `phase` is θ_s − θ_c when `relative`, otherwise θ_s itself.
    Squeezed {
        n: f64,
        phase: f64,
        #[serde(default = "yes")]
        relative: bool,
    },
}

fn yes() -> bool {
    true
}

impl NoiseSpec {
    pub fn model(&self, delta_bar: f64, kappa: f64) -> Result<NoiseModel, CliError> {
        let r = match *self {
            NoiseSpec::Vacuum => Ok(NoiseModel::Vacuum),
            NoiseSpec::Squeezed { n, phase, relative: true } => NoiseModel::squeezed_relative(n, phase, delta_bar, kappa),
            NoiseSpec::Squeezed { n, phase, relative: false } => NoiseModel::squeezed(n, phase),
        };
        r.map_err(|e| CliError::from_core(e).with_prefix("noise"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    Vacuum,
    Thermal { n: f64 },
    Squeezed { var_x: f64, var_p: f64 },
    Coherent { re: f64, im: f64 },
}

impl InitialSpec {
    pub fn state(self) -> InitialState {
        match self {
            InitialSpec::Vacuum => InitialState::Vacuum,
            InitialSpec::Thermal { n } => InitialState::Thermal(n),
            InitialSpec::Squeezed { var_x, var_p } => InitialState::Squeezed { var_x, var_p },
            InitialSpec::Coherent { re, im } => InitialState::Coherent { re, im },
        }
    }

    /// `vacuum`, `thermal:N`, `squeezed:VX:VP` or `coherent:RE:IM`.
    pub fn parse(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |i: usize| -> Result<f64, String> {
            parts.get(i).ok_or_else(|| format!("'{s}' is missing a value"))?.parse::<f64>().map_err(|e| format!("'{s}': {e}"))
        };
        let want = |n: usize| if parts.len() == n { Ok(()) } else { Err(format!("'{s}' has the wrong number of values")) };
        match parts[0] {
            "vacuum" => want(1).map(|_| InitialSpec::Vacuum),
            "thermal" => want(2).and_then(|_| Ok(InitialSpec::Thermal { n: num(1)? })),
            "squeezed" => want(3).and_then(|_| Ok(InitialSpec::Squeezed { var_x: num(1)?, var_p: num(2)? })),
            "coherent" => want(3).and_then(|_| Ok(InitialSpec::Coherent { re: num(1)?, im: num(2)? })),
            other => Err(format!("unknown initial state '{other}'")),
        }
    }

    pub fn check(self, field: &str) -> Result<(), CliError> {
        let bad = |reason: &str| Err(CliError::validation(field, reason));
        match self {
            InitialSpec::Thermal { n } if !(n >= 0.0 && n.is_finite()) => bad("thermal occupation must be finite and >= 0"),
            InitialSpec::Squeezed { var_x, var_p } if !(var_x > 0.0 && var_p > 0.0 && var_x * var_p >= 1.0 / 16.0 - 1e-12) => {
                bad("variances must be positive with var_x * var_p >= 1/16")
            }
            InitialSpec::Coherent { re, im } if !(re.is_finite() && im.is_finite()) => bad("amplitude must be finite"),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FrequencyModeSpec {
    #[default]
    Weak,
    SelfConsistent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub delta_min_hz: f64,
    pub delta_max_hz: f64,
    pub points: usize,
    #[serde(default)]
    pub frequency_mode: FrequencyModeSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatchSpec {
    #[serde(default = "first_pair")]
    pub pair: [usize; 2],
    pub tol_hz: f64,
    /// Search interval; defaults to ±(3ω_max + 3κ).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range_hz: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coherent_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center_threshold: Option<f64>,
}

fn first_pair() -> [usize; 2] {
    [0, 1]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum VariantSpec {
    #[default]
    Full,
    ColdDampingOnly,
    CoherentOnly,
}

impl From<VariantSpec> for DriftVariant {
    fn from(v: VariantSpec) -> Self {
        match v {
            VariantSpec::Full => DriftVariant::Full,
            VariantSpec::ColdDampingOnly => DriftVariant::ColdDampingOnly,
            VariantSpec::CoherentOnly => DriftVariant::CoherentOnly,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StructureSpec {
    #[default]
    MomentumRows,
    Isotropic,
}

impl From<StructureSpec> for NoiseStructure {
    fn from(s: StructureSpec) -> Self {
        match s {
            StructureSpec::MomentumRows => NoiseStructure::MomentumRows,
            StructureSpec::Isotropic => NoiseStructure::Isotropic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveSpec {
    /// Operating point; solved from the mean field when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_bar_hz: Option<f64>,
    /// Put every mode at the mean effective frequency (forced match).
    #[serde(default, skip_serializing_if = "is_false")]
    pub common_frequency: bool,
    #[serde(default)]
    pub variant: VariantSpec,
    #[serde(default)]
    pub structure: StructureSpec,
    pub initial: Vec<InitialSpec>,
    pub t_end_s: f64,
    pub samples: usize,
    /// Log-spaced samples from this time to `t_end_s`, after t = 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_from_s: Option<f64>,
    /// Forces fixed-step RK4 with this step. Without it the drift is
    /// propagated in closed form.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_s: Option<f64>,
    /// Also evolve with cross terms removed and write those columns too.
    #[serde(default, skip_serializing_if = "is_false")]
    pub reference_uncoupled: bool,
}

impl EvolveSpec {
    pub fn time_grid(&self) -> Vec<f64> {
        let n = self.samples;
        match self.log_from_s {
            Some(t0) => {
                let r = (self.t_end_s / t0).ln();
                let mut g = vec![0.0];
                g.extend((0..n - 1).map(|k| t0 * (r * k as f64 / (n - 2).max(1) as f64).exp()));
                g
            }
            None => (0..n).map(|k| self.t_end_s * k as f64 / (n - 1) as f64).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DirectionSpec {
    #[default]
    OneToTwo,
    TwoToOne,
}

impl From<DirectionSpec> for Direction {
    fn from(d: DirectionSpec) -> Self {
        match d {
            DirectionSpec::OneToTwo => Direction::OneToTwo,
            DirectionSpec::TwoToOne => Direction::TwoToOne,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransferSpec {
    /// Interval searched for a coherent-dominated match point.
    pub match_range_hz: [f64; 2],
    #[serde(default = "match_tol")]
    pub match_tol_hz: f64,
    pub initial: [InitialSpec; 2],
    #[serde(default)]
    pub direction: DirectionSpec,
    #[serde(default = "three")]
    pub n_swaps: usize,
    #[serde(default = "eight")]
    pub samples_per_swap: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_hz: Option<[f64; 2]>,
    #[serde(default)]
    pub structure: StructureSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_sweep: Option<PhaseSweepSpec>,
}

fn match_tol() -> f64 {
    1.0
}

fn three() -> usize {
    3
}

fn eight() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSweepSpec {
    pub n_values: Vec<f64>,
    /// Uniform grid over [−π, π].
    pub phase_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FwmSpec {
    /// Initial amplitudes as [re, im] per mode.
    pub init: Vec<[f64; 2]>,
    #[serde(default)]
    pub noise_on: bool,
    #[serde(default = "one")]
    pub n_traj: usize,
    pub t_end_s: f64,
    pub samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_s: Option<f64>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub stratonovich: bool,
    #[serde(default)]
    pub frequency_mode: FrequencyModeSpec,
    #[serde(default, skip_serializing_if = "is_false")]
    pub dump_trajectories: bool,
}

fn one() -> usize {
    1
}

/// Raw bytes and the parsed scenario.
pub fn load(path: &Path) -> Result<(Vec<u8>, Scenario), CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::input_io(path, e))?;
    let scenario: Scenario = serde_json::from_slice(&bytes).map_err(|e| CliError::parse(path, &e))?;
    scenario.validate().map_err(|e| e.with_path(path))?;
    Ok((bytes, scenario))
}

impl Scenario {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::validation(
                "schema_version",
                &format!("unsupported version {} (expected {SCHEMA_VERSION})", self.schema_version),
            ));
        }
        self.system.to_system()?;
        if let Some(e) = &self.evolve {
            for (i, s) in e.initial.iter().enumerate() {
                s.check(&format!("evolve.initial[{i}]"))?;
            }
            positive("evolve.t_end_s", e.t_end_s)?;
            if let Some(t0) = e.log_from_s {
                if !(t0 > 0.0 && t0 < e.t_end_s) {
                    return Err(CliError::validation("evolve.log_from_s", "must lie in (0, t_end_s)"));
                }
            }
            if e.samples < 2 || (e.log_from_s.is_some() && e.samples < 3) {
                return Err(CliError::validation("evolve.samples", "need at least 2 samples, 3 with log_from_s"));
            }
        }
        if let Some(t) = &self.transfer {
            for (i, s) in t.initial.iter().enumerate() {
                s.check(&format!("transfer.initial[{i}]"))?;
            }
            if t.n_swaps == 0 || t.samples_per_swap == 0 {
                return Err(CliError::validation("transfer.n_swaps", "n_swaps and samples_per_swap must be >= 1"));
            }
            positive("transfer.match_tol_hz", t.match_tol_hz)?;
        }
        if let Some(s) = &self.sweep {
            if s.points < 2 || !(s.delta_max_hz > s.delta_min_hz) {
                return Err(CliError::validation("sweep", "need points >= 2 and delta_max_hz > delta_min_hz"));
            }
        }
        if let Some(m) = &self.matching {
            positive("match.tol_hz", m.tol_hz)?;
        }
        if let Some(f) = &self.fwm {
            positive("fwm.t_end_s", f.t_end_s)?;
            if f.samples < 2 || f.n_traj == 0 {
                return Err(CliError::validation("fwm.samples", "need samples >= 2 and n_traj >= 1"));
            }
        }
        Ok(())
    }
}

fn positive(field: &str, x: f64) -> Result<(), CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(CliError::validation(field, "must be finite and > 0"))
    }
}

impl SystemSpec {
    pub fn to_system(&self) -> Result<SystemConfig, CliError> {
        let kind: CouplingKind = self.coupling_kind.into();
        if self.modes.is_empty() {
            return Err(CliError::validation("system.modes", "at least one mode is required"));
        }
        let effective = self.modes.iter().any(|m| m.g_hz.is_some());
        for (j, m) in self.modes.iter().enumerate() {
            match (m.coupling_hz, m.g_hz) {
                (Some(_), Some(_)) | (None, None) => {
                    return Err(CliError::validation(
                        &format!("system.modes[{j}]"),
                        "give exactly one of coupling_hz and g_hz",
                    ))
                }
                (Some(_), None) if effective => {
                    return Err(CliError::validation(
                        &format!("system.modes[{j}].coupling_hz"),
                        "all modes must use the same coupling form",
                    ))
                }
                _ => {}
            }
        }
        if effective && kind != CouplingKind::Linear {
            return Err(CliError::validation("system.modes.g_hz", "effective couplings are only meaningful for linear coupling"));
        }

        let drive = match &self.cavity.drive {
            None if effective => Drive::PhotonNumber(1.0),
            None => return Err(CliError::validation("system.cavity.drive", "required when modes give coupling_hz")),
            Some(DriveSpec { eta_hz: Some(eta), photon_number: None }) => {
                if effective {
                    return Err(CliError::validation("system.cavity.drive.eta_hz", "cannot be combined with g_hz"));
                }
                Drive::Amplitude(hz(*eta))
            }
            Some(DriveSpec { eta_hz: None, photon_number: Some(n) }) => Drive::PhotonNumber(*n),
            Some(_) => return Err(CliError::validation("system.cavity.drive", "give exactly one of eta_hz and photon_number")),
        };
        let root_n = match drive {
            Drive::PhotonNumber(n) if effective => {
                if !(n > 0.0) {
                    return Err(CliError::validation("system.cavity.drive.photon_number", "must be > 0 with g_hz"));
                }
                n.sqrt()
            }
            _ => 1.0,
        };
        let modes = self
            .modes
            .iter()
            .map(|m| MechanicalMode {
                omega: hz(m.omega_hz),
                gamma: hz(m.gamma_hz),
                coupling: hz(m.g_hz.map(|g| g / root_n).or(m.coupling_hz).unwrap_or(0.0)),
                n_th: m.n_th,
            })
            .collect();
        let mut sys = SystemConfig {
            cavity: CavityConfig { kappa: hz(self.cavity.kappa_hz), delta_c: hz(self.cavity.delta_c_hz), drive },
            modes,
            coupling_kind: kind,
            sign_choice: Vec::new(),
        };
        if let Some(signs) = &self.sign_choice {
            if signs.len() != sys.n_modes() {
                return Err(CliError::validation("system.sign_choice", "needs one entry per mode"));
            }
            sys.sign_choice = signs.iter().map(|s| if *s == SignSpec::Plus { Sign::Plus } else { Sign::Minus }).collect();
        }
        sys.validate().map_err(|e| CliError::from_core(e).with_prefix("system"))?;
        Ok(sys)
    }

    /// Inverse of [`SystemSpec::to_system`]. A photon-number drive of 1 is
    /// written back as effective couplings, the form in which g is usually quoted.
    pub fn from_system(sys: &SystemConfig) -> Self {
        let effective = sys.cavity.drive == Drive::PhotonNumber(1.0) && sys.coupling_kind == CouplingKind::Linear;
        let drive = match sys.cavity.drive {
            _ if effective => None,
            Drive::Amplitude(eta) => Some(DriveSpec { eta_hz: Some(to_hz(eta)), photon_number: None }),
            Drive::PhotonNumber(n) => Some(DriveSpec { eta_hz: None, photon_number: Some(n) }),
        };
        SystemSpec {
            coupling_kind: sys.coupling_kind.into(),
            cavity: CavitySpec { kappa_hz: to_hz(sys.cavity.kappa), delta_c_hz: to_hz(sys.cavity.delta_c), drive },
            modes: sys
                .modes
                .iter()
                .map(|m| ModeSpec {
                    omega_hz: to_hz(m.omega),
                    gamma_hz: to_hz(m.gamma),
                    n_th: m.n_th,
                    coupling_hz: if effective { None } else { Some(to_hz(m.coupling)) },
                    g_hz: if effective { Some(to_hz(m.coupling)) } else { None },
                })
                .collect(),
            sign_choice: if sys.sign_choice.is_empty() {
                None
            } else {
                Some(sys.sign_choice.iter().map(|s| if *s == Sign::Plus { SignSpec::Plus } else { SignSpec::Minus }).collect())
            },
        }
    }
}
