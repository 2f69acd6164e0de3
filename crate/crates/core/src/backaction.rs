//! Radiation-induced frequency shifts, damping and cross-coefficients
//! obtained after adiabatic elimination of the cavity field.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;

use crate::meanfield::MeanFieldSolution;
use crate::model::{CouplingKind, SystemConfig};
use crate::{Error, Result};

/// (δ−ν)/((δ−ν)²+κ²/4) + (δ+ν)/((δ+ν)²+κ²/4)
#[inline]
pub fn dispersive(delta: f64, nu: f64, kappa: f64) -> f64 {
    let k2 = 0.25 * kappa * kappa;
    let m = delta - nu;
    let p = delta + nu;
    m / (m * m + k2) + p / (p * p + k2)
}

/// 2[(κ/2)/((δ+ν)²+κ²/4) − (κ/2)/((δ−ν)²+κ²/4)]
#[inline]
pub fn absorptive(delta: f64, nu: f64, kappa: f64) -> f64 {
    let k2 = 0.25 * kappa * kappa;
    let h = 0.5 * kappa;
    let m = delta - nu;
    let p = delta + nu;
    2.0 * (h / (p * p + k2) - h / (m * m + k2))
}

pub fn linear_shift_damping(g: f64, nu: f64, delta_bar: f64, kappa: f64) -> (f64, f64) {
    let g2 = g * g;
    (g2 * dispersive(delta_bar, nu, kappa), g2 * absorptive(delta_bar, nu, kappa))
}

pub fn quadratic_maxima_shift_damping(g2: f64, xbar: f64, nu: f64, delta2: f64, kappa: f64) -> (f64, f64) {
    linear_shift_damping(4.0 * g2 * xbar, nu, delta2, kappa)
}

/// Returns (Ω, Γ, Λ) for oscillators sitting at intensity minima.
pub fn quadratic_minima_coefficients(g2: f64, nu: f64, delta_bar2: f64, kappa: f64) -> (f64, f64, f64) {
    let s = 2.0 * g2;
    let (omega, gamma) = linear_shift_damping(s, 2.0 * nu, delta_bar2, kappa);
    (omega, gamma, s * s * kerr_lorentzian(delta_bar2, kappa))
}

#[inline]
fn kerr_lorentzian(delta: f64, kappa: f64) -> f64 {
    2.0 * delta / (delta * delta + 0.25 * kappa * kappa)
}

/// Everything the Lorentzian formulas need about a mean-field branch: the
/// detuning they are evaluated at, each mode's effective strength s_j (so
/// that Ω_j = s_j² ℓ(ν_j) and g_jk = s_j/s_k), the frequency the shift is
/// added to, and the multiple of ν appearing in the sideband denominators.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatingPoint {
    pub kind: CouplingKind,
    pub detuning: f64,
    pub n_c: f64,
    pub strength: Vec<f64>,
    pub base: Vec<f64>,
    pub sideband: f64,
}

impl OperatingPoint {
    /// Linear coupling at effective detuning `delta_bar`.
    pub fn linear(system: &SystemConfig, delta_bar: f64) -> Result<Self> {
        if system.coupling_kind != CouplingKind::Linear {
            return Err(Error::WrongCouplingKind { expected: "Linear" });
        }
        Ok(OperatingPoint {
            kind: CouplingKind::Linear,
            detuning: delta_bar,
            n_c: system.cavity.photon_number(delta_bar),
            strength: system.effective_couplings(delta_bar),
            base: system.modes.iter().map(|m| m.omega).collect(),
            sideband: 1.0,
        })
    }

    pub fn from_meanfield(system: &SystemConfig, mf: &MeanFieldSolution) -> Self {
        let root = libm::sqrt(mf.n_c);
        let modes = &system.modes;
        match system.coupling_kind {
            CouplingKind::Linear => OperatingPoint {
                kind: CouplingKind::Linear,
                detuning: mf.delta_bar,
                n_c: mf.n_c,
                strength: modes.iter().map(|m| m.coupling * root).collect(),
                base: modes.iter().map(|m| m.omega).collect(),
                sideband: 1.0,
            },
            CouplingKind::QuadraticMaxima => OperatingPoint {
                kind: CouplingKind::QuadraticMaxima,
                detuning: mf.delta_shifted,
                n_c: mf.n_c,
                strength: modes
                    .iter()
                    .zip(&mf.displacements)
                    .map(|(m, x)| 4.0 * m.coupling * root * x)
                    .collect(),
                base: mf.varpi.clone(),
                sideband: 1.0,
            },
            CouplingKind::QuadraticMinima => OperatingPoint {
                kind: CouplingKind::QuadraticMinima,
                detuning: mf.delta_bar,
                n_c: mf.n_c,
                strength: modes.iter().map(|m| 2.0 * m.coupling * root).collect(),
                base: mf.varpi.clone(),
                sideband: 2.0,
            },
        }
    }

    pub fn shift(&self, j: usize, nu: f64, kappa: f64) -> f64 {
        let s = self.strength[j];
        s * s * dispersive(self.detuning, self.sideband * nu, kappa)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrequencyMode {
    /// Evaluate the shifts once at the unshifted frequencies.
    WeakCoupling,
    /// Solve ν_j = base_j + Ω_j(ν_j) for each mode.
    SelfConsistent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackactionSet {
    pub kind: CouplingKind,
    pub detuning: f64,
    pub nu: Vec<f64>,
    pub omega: Vec<f64>,
    pub gamma: Vec<f64>,
    /// Cross-Kerr coefficients; zero unless the coupling is at intensity minima.
    pub lambda: Vec<f64>,
    /// Γ_j + γ_j.
    pub gamma_e: Vec<f64>,
    pub strength: Vec<f64>,
    /// `omega_c[(j, k)]` = g_jk Ω_k, evaluated as s_j s_k ℓ(ν_k).
    pub omega_c: DMatrix<f64>,
    pub gamma_c: DMatrix<f64>,
    pub lambda_c: DMatrix<f64>,
}

impl BackactionSet {
    /// Evaluate all coefficients with the Lorentzians taken at `nu_eval`,
    /// reporting ν_j = base_j + Ω_j.
    pub fn evaluate(system: &SystemConfig, point: &OperatingPoint, nu_eval: &[f64]) -> Self {
        let n = system.n_modes();
        let kappa = system.kappa();
        let d = point.detuning;
        let disp: Vec<f64> = nu_eval.iter().map(|nu| dispersive(d, point.sideband * nu, kappa)).collect();
        let abs: Vec<f64> = nu_eval.iter().map(|nu| absorptive(d, point.sideband * nu, kappa)).collect();
        let kerr = if point.kind == CouplingKind::QuadraticMinima { kerr_lorentzian(d, kappa) } else { 0.0 };
        let s = &point.strength;

        let omega: Vec<f64> = (0..n).map(|j| s[j] * s[j] * disp[j]).collect();
        let gamma: Vec<f64> = (0..n).map(|j| s[j] * s[j] * abs[j]).collect();
        let lambda: Vec<f64> = (0..n).map(|j| s[j] * s[j] * kerr).collect();
        let nu = (0..n).map(|j| point.base[j] + omega[j]).collect();
        let gamma_e = (0..n).map(|j| gamma[j] + system.modes[j].gamma).collect();

        BackactionSet {
            kind: point.kind,
            detuning: d,
            nu,
            omega,
            gamma,
            lambda,
            gamma_e,
            strength: s.clone(),
            omega_c: DMatrix::from_fn(n, n, |j, k| s[j] * s[k] * disp[k]),
            gamma_c: DMatrix::from_fn(n, n, |j, k| s[j] * s[k] * abs[k]),
            lambda_c: DMatrix::from_fn(n, n, |j, k| s[j] * s[k] * kerr),
        }
    }

    /// Coefficients for a pair brought into resonance at common frequency
    /// `nu`: both Lorentzians are taken at `nu`, so the pair's cross
    /// coefficients coincide exactly. Other modes keep their unshifted
    /// evaluation frequency.
    pub fn matched_pair(system: &SystemConfig, point: &OperatingPoint, pair: (usize, usize), nu: f64) -> Self {
        let mut nu_eval = point.base.clone();
        nu_eval[pair.0] = nu;
        nu_eval[pair.1] = nu;
        let mut set = Self::evaluate(system, point, &nu_eval);
        set.nu[pair.0] = nu;
        set.nu[pair.1] = nu;
        set
    }

    pub fn n_modes(&self) -> usize {
        self.nu.len()
    }

    /// g_jk = s_j / s_k.
    pub fn coupling_ratio(&self, j: usize, k: usize) -> Result<f64> {
        let sk = self.strength[k];
        if sk == 0.0 {
            return Err(Error::DegenerateCoupling { j, k });
        }
        Ok(self.strength[j] / sk)
    }

    /// Frequencies with every shift, damping and cross term removed.
    pub fn decoupled(&self) -> Self {
        let n = self.n_modes();
        let mut out = self.clone();
        for j in 0..n {
            out.gamma_e[j] -= out.gamma[j];
            out.omega[j] = 0.0;
            out.gamma[j] = 0.0;
            out.lambda[j] = 0.0;
        }
        out.omega_c = DMatrix::zeros(n, n);
        out.gamma_c = DMatrix::zeros(n, n);
        out.lambda_c = DMatrix::zeros(n, n);
        out
    }

    /// Same modes with all cross terms between different modes removed,
    /// keeping each mode's own shift and damping.
    pub fn uncoupled(&self) -> Self {
        let n = self.n_modes();
        let mut out = self.clone();
        for j in 0..n {
            for k in 0..n {
                if j != k {
                    out.omega_c[(j, k)] = 0.0;
                    out.gamma_c[(j, k)] = 0.0;
                    out.lambda_c[(j, k)] = 0.0;
                }
            }
        }
        out
    }
}

/// Number of grid points used to bracket fixed points of ν = base + Ω(ν).
const SELF_CONSISTENT_GRID: usize = 200;

/// All solutions of ν = base + Ω(ν) for mode `j`, in increasing order.
pub fn frequency_fixed_points(point: &OperatingPoint, j: usize, kappa: f64) -> Vec<f64> {
    let base = point.base[j];
    let s = point.strength[j];
    if s == 0.0 {
        return vec![base];
    }
    // |Ω| never exceeds 2 s²/κ, so every fixed point lies in this window.
    let reach = 2.0 * s * s / kappa * 1.01;
    let (lo, hi) = (base - reach, base + reach);
    let f = |nu: f64| base + point.shift(j, nu, kappa) - nu;
    let tol = 1e-10 * libm::fabs(base).max(f64::MIN_POSITIVE);

    let mut roots = Vec::new();
    let h = (hi - lo) / SELF_CONSISTENT_GRID as f64;
    let mut a = lo;
    let mut fa = f(a);
    for i in 1..=SELF_CONSISTENT_GRID {
        let b = lo + h * i as f64;
        let fb = f(b);
        if fa == 0.0 {
            roots.push(a);
        } else if fa * fb < 0.0 {
            roots.push(crate::roots::bisect(&f, a, b, tol));
        }
        a = b;
        fa = fb;
    }
    if fa == 0.0 {
        roots.push(a);
    }
    roots
}

pub fn self_consistent_frequencies(system: &SystemConfig, delta_bar: f64, mode: FrequencyMode) -> Result<BackactionSet> {
    let point = OperatingPoint::linear(system, delta_bar)?;
    backaction_at(system, &point, mode)
}

pub fn backaction_at(system: &SystemConfig, point: &OperatingPoint, mode: FrequencyMode) -> Result<BackactionSet> {
    match mode {
        FrequencyMode::WeakCoupling => Ok(BackactionSet::evaluate(system, point, &point.base)),
        FrequencyMode::SelfConsistent => {
            let kappa = system.kappa();
            let mut nu = Vec::with_capacity(system.n_modes());
            for j in 0..system.n_modes() {
                let branches = frequency_fixed_points(point, j, kappa);
                match branches.len() {
                    1 => nu.push(branches[0]),
                    0 => return Err(Error::NonConvergence { iterations: SELF_CONSISTENT_GRID }),
                    _ => return Err(Error::MultivaluedFrequency { mode: j, branches }),
                }
            }
            let mut set = BackactionSet::evaluate(system, point, &nu);
            set.nu = nu;
            Ok(set)
        }
    }
}
