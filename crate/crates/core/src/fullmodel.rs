//! Linearized cavity + mechanics model without adiabatic elimination.
//!
//! Variables are (x_c, p_c, X_1, P_1, …) in the frame of the drive laser,
//! with the mechanics in the lab frame:
//!
//! ```text
//! ẋ_c = −κ/2 x_c − Δ̄ p_c
//! ṗ_c =  Δ̄ x_c − κ/2 p_c + 2 Σ_j g_j X_j
//! Ẋ_j =  ω_j P_j
//! Ṗ_j = −ω_j X_j − γ_j P_j + 2 g_j x_c
//! ```
//!
//! Mechanical damping acts on the momentum only, as −(γ/2)(b − b†) does.

use alloc::vec::Vec;
use nalgebra::DMatrix;

use crate::backaction::{self_consistent_frequencies, FrequencyMode};
use crate::calibration::Calibration;
use crate::dynamics::{
    build_diffusion, build_drift, evolve_covariance, steady_state_covariance, DriftDiffusion, DriftVariant, NoiseStructure,
};
use crate::gaussian::GaussianState;
use crate::linalg::max_abs;
use crate::model::{CouplingKind, SystemConfig};
use crate::noise::NoiseModel;
use crate::{Error, Result};

pub fn full_drift(system: &SystemConfig, delta_bar: f64, g: &[f64]) -> DMatrix<f64> {
    let n = system.n_modes();
    let kappa = system.kappa();
    let mut m = DMatrix::zeros(2 * n + 2, 2 * n + 2);
    m[(0, 0)] = -0.5 * kappa;
    m[(0, 1)] = -delta_bar;
    m[(1, 0)] = delta_bar;
    m[(1, 1)] = -0.5 * kappa;
    for (j, mode) in system.modes.iter().enumerate() {
        let (x, p) = (2 + 2 * j, 3 + 2 * j);
        m[(1, x)] = 2.0 * g[j];
        m[(x, p)] = mode.omega;
        m[(p, x)] = -mode.omega;
        m[(p, p)] = -mode.gamma;
        m[(p, 0)] = 2.0 * g[j];
    }
    m
}

pub fn full_diffusion(system: &SystemConfig, noise: &NoiseModel) -> DMatrix<f64> {
    let n = system.n_modes();
    let kappa = system.kappa();
    let (big_n, m) = (noise.n(), noise.m());
    let mut d = DMatrix::zeros(2 * n + 2, 2 * n + 2);
    d[(0, 0)] = kappa * (2.0 * big_n + 1.0 + 2.0 * m.re) / 4.0;
    d[(1, 1)] = kappa * (2.0 * big_n + 1.0 - 2.0 * m.re) / 4.0;
    d[(0, 1)] = kappa * m.im / 2.0;
    d[(1, 0)] = d[(0, 1)];
    for (j, mode) in system.modes.iter().enumerate() {
        d[(3 + 2 * j, 3 + 2 * j)] = 0.5 * mode.gamma * (2.0 * mode.n_th + 1.0);
    }
    d
}

pub fn build_full(system: &SystemConfig, delta_bar: f64, noise: &NoiseModel) -> Result<DriftDiffusion> {
    if system.coupling_kind != CouplingKind::Linear {
        return Err(Error::WrongCouplingKind { expected: "Linear" });
    }
    let g = system.effective_couplings(delta_bar);
    Ok(DriftDiffusion { m: full_drift(system, delta_bar, &g), d: full_diffusion(system, noise) })
}

/// Mechanical block (indices 2.., 2..) of a full-model state.
pub fn mechanical_part(state: &GaussianState) -> GaussianState {
    let n = state.mean.len() - 2;
    GaussianState { mean: state.mean.rows(2, n).into_owned(), cov: state.cov.view((2, 2), (n, n)).into_owned() }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    /// Largest entrywise covariance deviation along the trajectory, relative
    /// to the largest full-model mechanical entry at that time.
    pub max_cov_deviation: f64,
    pub final_cov_deviation: f64,
    pub steady_phonons_reduced: Vec<f64>,
    pub steady_phonons_full: Vec<f64>,
    /// Signed relative deviation reduced/full − 1 per mode.
    pub phonon_deviation: Vec<f64>,
    pub min_symplectic_reduced: f64,
    pub min_symplectic_full: f64,
}

impl ErrorReport {
    pub fn max_phonon_deviation(&self) -> f64 {
        self.phonon_deviation.iter().fold(0.0, |a, d| a.max(libm::fabs(*d)))
    }
}

/// Evolves the reduced and full models from the same initial mechanical
/// state (each mode thermal at its bath occupation, cavity in vacuum) and
/// compares mechanical covariances and steady phonon numbers. Both models
/// use lab-frame mechanical quadratures, so no frame rotation is required.
/// An empty `t_grid` skips the time evolution.
pub fn compare_reduced_full(
    system: &SystemConfig,
    delta_bar: f64,
    noise: &NoiseModel,
    t_grid: &[f64],
    cal: Calibration,
    structure: NoiseStructure,
) -> Result<ErrorReport> {
    let n = system.n_modes();
    let ba = self_consistent_frequencies(system, delta_bar, FrequencyMode::WeakCoupling)?;
    let reduced = DriftDiffusion {
        m: build_drift(system, &ba, DriftVariant::Full)?,
        d: build_diffusion(system, &ba, noise, delta_bar, structure, cal),
    };
    let full = build_full(system, delta_bar, noise)?;

    let mechanics: Vec<GaussianState> = system.modes.iter().map(|m| GaussianState::thermal(1, m.n_th)).collect();
    let v_red = GaussianState::product(&mechanics);
    let mut with_cavity = alloc::vec![GaussianState::vacuum(1)];
    with_cavity.extend(mechanics);
    let v_full = GaussianState::product(&with_cavity);

    let (mut max_dev, mut final_dev) = (0.0f64, 0.0);
    let (mut min_red, mut min_full) = (f64::INFINITY, f64::INFINITY);
    if !t_grid.is_empty() {
        let red_t = evolve_covariance(&reduced, &v_red, t_grid, None)?;
        let full_t = evolve_covariance(&full, &v_full, t_grid, None)?;
        for (r, f) in red_t.iter().zip(&full_t) {
            let fm = mechanical_part(f);
            let dev = max_abs(&(&r.cov - &fm.cov)) / max_abs(&fm.cov).max(f64::MIN_POSITIVE);
            max_dev = max_dev.max(dev);
            final_dev = dev;
            min_red = min_red.min(r.min_symplectic());
            min_full = min_full.min(f.min_symplectic());
        }
    }

    let sr = steady_state_covariance(&reduced)?;
    let sf = steady_state_covariance(&full)?;
    let steady_phonons_reduced: Vec<f64> = (0..n).map(|j| sr.phonon_number(j)).collect();
    let steady_phonons_full: Vec<f64> = (0..n).map(|j| sf.phonon_number(j + 1)).collect();
    let phonon_deviation = steady_phonons_reduced.iter().zip(&steady_phonons_full).map(|(r, f)| r / f - 1.0).collect();
    Ok(ErrorReport {
        max_cov_deviation: max_dev,
        final_cov_deviation: final_dev,
        steady_phonons_reduced,
        steady_phonons_full,
        phonon_deviation,
        min_symplectic_reduced: min_red.min(sr.min_symplectic()),
        min_symplectic_full: min_full.min(sf.min_symplectic()),
    })
}
