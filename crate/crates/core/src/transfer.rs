//! Two-mode state transfer through the optically mediated beam-splitter
//! coupling, with fidelity traces and squeezing-phase sweeps.

use alloc::vec::Vec;
use core::f64::consts::PI;
use nalgebra::DMatrix;

use crate::calibration::Calibration;
use crate::dynamics::{build_diffusion, coherent_exchange_drift, integrate_exact, DriftDiffusion, NoiseStructure};
use crate::backaction::{BackactionSet, OperatingPoint};
use crate::linalg::{nearest_rotation_angle, rotation};
use crate::matching::MatchPoint;
use crate::model::{lorentz_denominator, SystemConfig};
use crate::noise::NoiseModel;
use crate::{Error, Result};

pub use crate::gaussian::{gaussian_fidelity, GaussianState};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialState {
    Vacuum,
    Thermal(f64),
    Squeezed { var_x: f64, var_p: f64 },
    Coherent { re: f64, im: f64 },
}

impl InitialState {
    pub fn state(&self) -> GaussianState {
        match *self {
            InitialState::Vacuum => GaussianState::vacuum(1),
            InitialState::Thermal(n) => GaussianState::thermal(1, n),
            InitialState::Squeezed { var_x, var_p } => GaussianState::squeezed(var_x, var_p),
            InitialState::Coherent { re, im } => GaussianState::coherent(re, im),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Mode 1's initial state is compared with mode 2 over time.
    OneToTwo,
    TwoToOne,
}

impl Direction {
    fn modes(self) -> (usize, usize) {
        match self {
            Direction::OneToTwo => (0, 1),
            Direction::TwoToOne => (1, 0),
        }
    }
}

/// Ω_c = g₁g₂ · 2Δ̄/(Δ̄² + κ²/4)
pub fn cross_coupling(g1: f64, g2: f64, delta_bar: f64, kappa: f64) -> f64 {
    g1 * g2 * 2.0 * delta_bar / lorentz_denominator(delta_bar, kappa)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferScenario {
    pub system: SystemConfig,
    pub delta_bar: f64,
    pub nu: f64,
    pub omega_c: f64,
    pub noise: NoiseModel,
    pub initial: [InitialState; 2],
    pub direction: Direction,
    /// Intrinsic damping used during transfer; zero by default.
    pub gamma: [f64; 2],
    /// Number of swap times t_swap + pπ/|Ω_c| included in the trace.
    pub n_swaps: usize,
    /// Trace samples between consecutive swap times.
    pub samples_per_swap: usize,
    pub structure: NoiseStructure,
    pub calibration: Calibration,
}

impl TransferScenario {
    /// Scenario at a match point, with Ω_c from the coherent-exchange formula.
    pub fn at_match(
        system: &SystemConfig,
        point: &MatchPoint,
        noise: NoiseModel,
        initial: [InitialState; 2],
        direction: Direction,
        calibration: Calibration,
    ) -> Result<Self> {
        if system.n_modes() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, found: system.n_modes() });
        }
        let g = system.effective_couplings(point.delta_bar);
        Ok(TransferScenario {
            system: system.clone(),
            delta_bar: point.delta_bar,
            nu: point.nu,
            omega_c: cross_coupling(g[0], g[1], point.delta_bar, system.kappa()),
            noise,
            initial,
            direction,
            gamma: [0.0, 0.0],
            n_swaps: 3,
            samples_per_swap: 8,
            structure: NoiseStructure::MomentumRows,
            calibration,
        })
    }

    pub fn swap_time(&self) -> f64 {
        PI / (2.0 * libm::fabs(self.omega_c))
    }

    /// t_swap + pπ/|Ω_c| for p = 0..n_swaps.
    pub fn swap_times(&self) -> Vec<f64> {
        let t0 = self.swap_time();
        (0..self.n_swaps).map(|p| t0 + 2.0 * t0 * p as f64).collect()
    }

    pub fn with_noise(&self, noise: NoiseModel) -> Self {
        TransferScenario { noise, ..self.clone() }
    }

    pub fn drift_diffusion(&self) -> DriftDiffusion {
        let mut sys = self.system.clone();
        for (m, g) in sys.modes.iter_mut().zip(self.gamma) {
            m.gamma = g;
        }
        let point = OperatingPoint::linear(&sys, self.delta_bar).expect("transfer systems are linear");
        let ba = BackactionSet::matched_pair(&sys, &point, (0, 1), self.nu);
        DriftDiffusion {
            m: coherent_exchange_drift(self.nu, self.omega_c, &self.gamma),
            d: build_diffusion(&sys, &ba, &self.noise, self.delta_bar, self.structure, self.calibration),
        }
    }

    fn initial_state(&self) -> GaussianState {
        GaussianState::product(&[self.initial[0].state(), self.initial[1].state()])
    }

    /// Sample grid: `samples_per_swap` points per half period π/(2|Ω_c|),
    /// which places every swap time exactly on the grid.
    pub fn time_grid(&self) -> Vec<f64> {
        let t0 = self.swap_time();
        let per = self.samples_per_swap.max(1);
        let total = (2 * self.n_swaps.max(1) - 1) * per;
        (0..=total).map(|k| t0 * k as f64 / per as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferResult {
    pub times: Vec<f64>,
    /// Squared Uhlmann fidelity between the source's initial state and the
    /// target's state with the free rotation undone.
    pub fidelity: Vec<f64>,
    /// √F, the amplitude convention.
    pub fidelity_sqrt: Vec<f64>,
    pub var_x: [Vec<f64>; 2],
    pub var_p: [Vec<f64>; 2],
    pub swap_times: Vec<f64>,
    pub swap_fidelities: Vec<f64>,
    pub min_symplectic: f64,
}

/// Target state with the ideal beam-splitter rotation removed, using the
/// nearest rotation to the target←source block of the mean propagator.
fn compensated(state: &GaussianState, phi: &DMatrix<f64>, source: usize, target: usize) -> GaussianState {
    let block = phi.view((2 * target, 2 * source), (2, 2)).into_owned();
    let r = rotation(nearest_rotation_angle(&block));
    let mode = state.mode(target);
    let rt = r.transpose();
    GaussianState { mean: &rt * &mode.mean, cov: &rt * &mode.cov * &r }
}

pub fn run_transfer(scenario: &TransferScenario) -> Result<TransferResult> {
    let dd = scenario.drift_diffusion();
    let grid = scenario.time_grid();
    let traj = integrate_exact(&dd, &scenario.initial_state(), &grid, true)?;
    let (source, target) = scenario.direction.modes();
    let reference = scenario.initial[source].state();

    let mut out = TransferResult {
        times: grid.clone(),
        fidelity: Vec::with_capacity(grid.len()),
        fidelity_sqrt: Vec::with_capacity(grid.len()),
        var_x: [Vec::new(), Vec::new()],
        var_p: [Vec::new(), Vec::new()],
        swap_times: scenario.swap_times(),
        swap_fidelities: Vec::new(),
        min_symplectic: f64::INFINITY,
    };
    for (state, phi) in traj.states.iter().zip(&traj.propagators) {
        let f = gaussian_fidelity(&reference, &compensated(state, phi, source, target))?;
        out.fidelity.push(f);
        out.fidelity_sqrt.push(libm::sqrt(f));
        for j in 0..2 {
            out.var_x[j].push(state.cov[(2 * j, 2 * j)]);
            out.var_p[j].push(state.cov[(2 * j + 1, 2 * j + 1)]);
        }
        out.min_symplectic = out.min_symplectic.min(state.min_symplectic());
    }
    let per = scenario.samples_per_swap.max(1);
    out.swap_fidelities = (0..scenario.n_swaps).map(|p| out.fidelity[(2 * p + 1) * per]).collect();
    Ok(out)
}

/// Fidelity at the first swap time only.
pub fn fidelity_at_swap(scenario: &TransferScenario) -> Result<f64> {
    let dd = scenario.drift_diffusion();
    let grid = [0.0, scenario.swap_time()];
    let traj = integrate_exact(&dd, &scenario.initial_state(), &grid, true)?;
    let (source, target) = scenario.direction.modes();
    gaussian_fidelity(&scenario.initial[source].state(), &compensated(&traj.states[1], &traj.propagators[1], source, target))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSweep {
    pub n_values: Vec<f64>,
    /// Offsets θ_s − θ_c.
    pub phases: Vec<f64>,
    /// `fidelity[i][k]` for `n_values[i]` and `phases[k]`.
    pub fidelity: Vec<Vec<f64>>,
    pub argmax_phase: Vec<f64>,
    pub peak: Vec<f64>,
    /// −d²F/dφ² at the peak from the neighbouring grid points.
    pub curvature: Vec<f64>,
}

/// The scenario's noise replaced by squeezing `n` at offset `phase` from θ_c.
pub fn phase_point(scenario: &TransferScenario, n: f64, phase: f64) -> Result<TransferScenario> {
    let noise = NoiseModel::squeezed_relative(n, phase, scenario.delta_bar, scenario.system.kappa())?;
    Ok(scenario.with_noise(noise))
}

pub fn assemble_sweep(n_values: &[f64], phases: &[f64], fidelity: Vec<Vec<f64>>) -> PhaseSweep {
    let mut argmax_phase = Vec::new();
    let mut peak = Vec::new();
    let mut curvature = Vec::new();
    for row in &fidelity {
        let (k, f) = row.iter().copied().enumerate().fold((0, f64::NEG_INFINITY), |a, (k, f)| if f > a.1 { (k, f) } else { a });
        argmax_phase.push(phases[k]);
        peak.push(f);
        let c = if k > 0 && k + 1 < row.len() {
            let h = 0.5 * (phases[k + 1] - phases[k - 1]);
            -(row[k + 1] - 2.0 * row[k] + row[k - 1]) / (h * h)
        } else {
            f64::NAN
        };
        curvature.push(c);
    }
    PhaseSweep { n_values: n_values.to_vec(), phases: phases.to_vec(), fidelity, argmax_phase, peak, curvature }
}

pub fn sweep_phase(scenario: &TransferScenario, n_values: &[f64], phases: &[f64]) -> Result<PhaseSweep> {
    let mut fidelity = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let mut row = Vec::with_capacity(phases.len());
        for &ph in phases {
            row.push(fidelity_at_swap(&phase_point(scenario, n, ph)?)?);
        }
        fidelity.push(row);
    }
    Ok(assemble_sweep(n_values, phases, fidelity))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::CALIBRATION;
    use crate::matching::{Dominant, Location, Side};
    use crate::model::{CavityConfig, CouplingKind, Drive, MechanicalMode};
    use alloc::vec;

    fn toy(noise_free: bool) -> TransferScenario {
        let (nu, kappa) = (10.0, 100.0);
        let s = SystemConfig::new(
            CavityConfig { kappa, delta_c: 0.0, drive: Drive::PhotonNumber(1.0) },
            vec![
                MechanicalMode { omega: nu, gamma: 0.0, coupling: if noise_free { 0.0 } else { 2.0 }, n_th: 0.0 },
                MechanicalMode { omega: nu, gamma: 0.0, coupling: if noise_free { 0.0 } else { 2.0 }, n_th: 0.0 },
            ],
            CouplingKind::Linear,
        )
        .unwrap();
        let delta_bar = -200.0;
        let point = OperatingPoint::linear(&s, delta_bar).unwrap();
        let mp = MatchPoint {
            delta_bar,
            nu,
            side: Side::Red,
            location: Location::Wing,
            dominant: Dominant::Coherent,
            omega_c: 0.0,
            gamma_c: 0.0,
            sideband_distance: 1.9,
            backaction: BackactionSet::matched_pair(&s, &point, (0, 1), nu),
        };
        let mut sc = TransferScenario::at_match(
            &s,
            &mp,
            NoiseModel::Vacuum,
            [InitialState::Thermal(1.0), InitialState::Vacuum],
            Direction::OneToTwo,
            CALIBRATION,
        )
        .unwrap();
        if noise_free {
            sc.omega_c = -0.5;
        }
        sc
    }

    #[test]
    fn noise_free_swaps_are_perfect() {
        let r = run_transfer(&toy(true)).unwrap();
        for f in &r.swap_fidelities {
            assert!((f - 1.0).abs() < 1e-6, "{f}");
        }
        assert!(r.fidelity.iter().all(|f| (0.0..=1.0).contains(f)));
    }

    #[test]
    fn vacuum_noise_degrades_successive_swaps() {
        let r = run_transfer(&toy(false)).unwrap();
        let f = &r.swap_fidelities;
        assert!(f[0] < 1.0);
        assert!(f[0] > f[1] && f[1] > f[2]);
    }

    #[test]
    fn vacuum_sweep_is_flat() {
        let sc = toy(false);
        let phases: Vec<f64> = (0..5).map(|k| -1.5 + 0.75 * k as f64).collect();
        let s = sweep_phase(&sc, &[0.0], &phases).unwrap();
        let row = &s.fidelity[0];
        assert!(row.iter().all(|f| (f - row[0]).abs() <= 1e-12));
    }
}
