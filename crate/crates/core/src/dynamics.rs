//! Reduced Gaussian dynamics of the mechanical modes: drift and diffusion
//! matrices, covariance propagation and steady states.
//!
//! Quadratures are ordered (X_1, P_1, X_2, P_2, …). The drift is the
//! block generalization of the two-mode matrix
//!
//! ```text
//!       ⎛ −Γe,1   2ν_1   −Γc,12   2Ωc,12 ⎞
//!  M = ½⎜ −2ν_1  −Γe,1  −2Ωc,12  −Γc,12  ⎟
//!       ⎜ −Γc,21  2Ωc,21  −Γe,2   2ν_2   ⎟
//!       ⎝ −2Ωc,21 −Γc,21  −2ν_2  −Γe,2   ⎠
//! ```
//!
//! and is constant in time, so off-resonant pairs keep their relative
//! rotation explicitly instead of through e^{i(ν_j−ν_k)t} factors.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::backaction::BackactionSet;
use crate::calibration::Calibration;
use crate::gaussian::GaussianState;
use crate::linalg::{eigenvalues, expm, max_abs, solve_lyapunov, symmetrize};
use crate::model::{CouplingKind, SystemConfig};
use crate::noise::{sideband_noise_coefficient, NoiseModel};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DriftDiffusion {
    pub m: DMatrix<f64>,
    pub d: DMatrix<f64>,
}

impl DriftDiffusion {
    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    /// Every mode on its own: drift and diffusion blocks between different
    /// modes zeroed. Keeping correlated optical noise without the matching
    /// cross damping would not describe a physical state.
    pub fn block_diagonal(&self) -> Self {
        let mut out = self.clone();
        let n = self.dim() / 2;
        for j in 0..n {
            for k in (0..n).filter(|&k| k != j) {
                for a in 0..2 {
                    for b in 0..2 {
                        out.m[(2 * j + a, 2 * k + b)] = 0.0;
                        out.d[(2 * j + a, 2 * k + b)] = 0.0;
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriftVariant {
    Full,
    /// Cross-coupling frequencies dropped; valid near the sideband centres.
    ColdDampingOnly,
    /// Radiative damping dropped, intrinsic γ kept; valid on the wings.
    CoherentOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseStructure {
    /// Bath noise on the momentum rows only.
    MomentumRows,
    /// Bath noise split evenly between both quadratures.
    Isotropic,
}

/// Relative tolerance for treating effective frequencies as equal.
pub const MATCH_TOL: f64 = 1e-9;

pub fn build_drift(system: &SystemConfig, ba: &BackactionSet, variant: DriftVariant) -> Result<DMatrix<f64>> {
    let n = system.n_modes();
    if ba.n_modes() != n {
        return Err(Error::DimensionMismatch { expected: n, found: ba.n_modes() });
    }
    if variant != DriftVariant::Full && n > 1 {
        let lo = ba.nu.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ba.nu.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let tolerance = MATCH_TOL * libm::fabs(hi);
        if hi - lo > tolerance {
            return Err(Error::MismatchedFrequencies { difference: hi - lo, tolerance });
        }
    }
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        for k in 0..n {
            let (damp, rot) = if j == k {
                let damp = match variant {
                    DriftVariant::CoherentOnly => system.modes[j].gamma,
                    _ => ba.gamma[j] + system.modes[j].gamma,
                };
                (damp, ba.nu[j])
            } else {
                match variant {
                    DriftVariant::Full => (ba.gamma_c[(j, k)], ba.omega_c[(j, k)]),
                    DriftVariant::ColdDampingOnly => (ba.gamma_c[(j, k)], 0.0),
                    DriftVariant::CoherentOnly => (0.0, ba.omega_c[(j, k)]),
                }
            };
            m[(2 * j, 2 * k)] = -0.5 * damp;
            m[(2 * j + 1, 2 * k + 1)] = -0.5 * damp;
            m[(2 * j, 2 * k + 1)] = rot;
            m[(2 * j + 1, 2 * k)] = -rot;
        }
    }
    Ok(m)
}

pub fn build_diffusion(
    system: &SystemConfig,
    ba: &BackactionSet,
    noise: &NoiseModel,
    delta_bar: f64,
    structure: NoiseStructure,
    cal: Calibration,
) -> DMatrix<f64> {
    let n = system.n_modes();
    let mut d = DMatrix::zeros(2 * n, 2 * n);
    for (j, mode) in system.modes.iter().enumerate() {
        let bath = mode.gamma * (2.0 * mode.n_th + 1.0) * cal.c_m;
        match structure {
            NoiseStructure::MomentumRows => d[(2 * j + 1, 2 * j + 1)] += bath,
            NoiseStructure::Isotropic => {
                d[(2 * j, 2 * j)] += 0.5 * bath;
                d[(2 * j + 1, 2 * j + 1)] += 0.5 * bath;
            }
        }
    }
    let sideband = if ba.kind == CouplingKind::QuadraticMinima { 2.0 } else { 1.0 };
    for i in 0..n {
        for j in 0..n {
            let nu = 0.5 * sideband * (ba.nu[i] + ba.nu[j]);
            let s_ff = sideband_noise_coefficient(noise, delta_bar, nu, system.kappa()) * cal.c_o;
            d[(2 * i + 1, 2 * j + 1)] += ba.strength[i] * ba.strength[j] * s_ff;
        }
    }
    d
}

/// Drift of the coherent-exchange (beam-splitter) model at common frequency
/// `nu` with cross-coupling `omega_c` between every pair.
pub fn coherent_exchange_drift(nu: f64, omega_c: f64, gammas: &[f64]) -> DMatrix<f64> {
    let n = gammas.len();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        for k in 0..n {
            let rot = if j == k { nu } else { omega_c };
            m[(2 * j, 2 * k + 1)] = rot;
            m[(2 * j + 1, 2 * k)] = -rot;
        }
        m[(2 * j, 2 * j)] = -0.5 * gammas[j];
        m[(2 * j + 1, 2 * j + 1)] = -0.5 * gammas[j];
    }
    m
}

/// Largest step accepted by [`evolve_covariance`]: 1/(50 max(|λ(M)|, ν_max)).
pub fn max_step(m: &DMatrix<f64>) -> f64 {
    let radius = eigenvalues(m).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let n = m.nrows() / 2;
    let nu_max = (0..n).map(|j| libm::fabs(m[(2 * j, 2 * j + 1)])).fold(0.0, f64::max);
    let rate = radius.max(nu_max);
    if rate == 0.0 {
        f64::INFINITY
    } else {
        1.0 / (50.0 * rate)
    }
}

/// Samples of an integration: states at each requested time and, when
/// requested, the mean propagator Φ(t) with Φ̇ = MΦ, Φ(0) = I.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<GaussianState>,
    pub propagators: Vec<DMatrix<f64>>,
}

/// y ← y + a x
#[inline]
fn axpy(y: &mut DMatrix<f64>, a: f64, x: &DMatrix<f64>) {
    for (yi, xi) in y.as_mut_slice().iter_mut().zip(x.as_slice()) {
        *yi += a * xi;
    }
}

struct Rk4 {
    k: [DMatrix<f64>; 4],
    tmp: DMatrix<f64>,
    mv: DMatrix<f64>,
    lk: [DMatrix<f64>; 4],
    ltmp: DMatrix<f64>,
}

impl Rk4 {
    fn new(n: usize, cols: usize) -> Self {
        let z = DMatrix::zeros(n, n);
        let l = DMatrix::zeros(n, cols);
        Rk4 {
            k: [z.clone(), z.clone(), z.clone(), z.clone()],
            tmp: z.clone(),
            mv: z,
            lk: [l.clone(), l.clone(), l.clone(), l.clone()],
            ltmp: l,
        }
    }

    /// out ← M V + V Mᵀ + D, using a single matrix product.
    fn lyap_rhs(mv: &mut DMatrix<f64>, m: &DMatrix<f64>, v: &DMatrix<f64>, d: &DMatrix<f64>, out: &mut DMatrix<f64>) {
        mv.gemm(1.0, m, v, 0.0);
        let n = m.nrows();
        for c in 0..n {
            for r in 0..n {
                out[(r, c)] = mv[(r, c)] + mv[(c, r)] + d[(r, c)];
            }
        }
    }

    fn step_cov(&mut self, m: &DMatrix<f64>, d: &DMatrix<f64>, v: &mut DMatrix<f64>, h: f64) {
        let Rk4 { k, tmp, mv, .. } = self;
        Self::lyap_rhs(mv, m, v, d, &mut k[0]);
        tmp.copy_from(v);
        axpy(tmp, 0.5 * h, &k[0]);
        Self::lyap_rhs(mv, m, tmp, d, &mut k[1]);
        tmp.copy_from(v);
        axpy(tmp, 0.5 * h, &k[1]);
        Self::lyap_rhs(mv, m, tmp, d, &mut k[2]);
        tmp.copy_from(v);
        axpy(tmp, h, &k[2]);
        Self::lyap_rhs(mv, m, tmp, d, &mut k[3]);
        axpy(v, h / 6.0, &k[0]);
        axpy(v, h / 3.0, &k[1]);
        axpy(v, h / 3.0, &k[2]);
        axpy(v, h / 6.0, &k[3]);
        symmetrize(v);
    }

    /// RK4 step of ẏ = M y for a block of columns.
    fn step_linear(&mut self, m: &DMatrix<f64>, y: &mut DMatrix<f64>, h: f64) {
        let Rk4 { lk, ltmp, .. } = self;
        lk[0].gemm(1.0, m, y, 0.0);
        ltmp.copy_from(y);
        axpy(ltmp, 0.5 * h, &lk[0]);
        lk[1].gemm(1.0, m, ltmp, 0.0);
        ltmp.copy_from(y);
        axpy(ltmp, 0.5 * h, &lk[1]);
        lk[2].gemm(1.0, m, ltmp, 0.0);
        ltmp.copy_from(y);
        axpy(ltmp, h, &lk[2]);
        lk[3].gemm(1.0, m, ltmp, 0.0);
        axpy(y, h / 6.0, &lk[0]);
        axpy(y, h / 3.0, &lk[1]);
        axpy(y, h / 3.0, &lk[2]);
        axpy(y, h / 6.0, &lk[3]);
    }
}

/// Integrates V̇ = MV + VMᵀ + D and u̇ = Mu with fixed-step RK4, reporting
/// the state at every entry of `t_grid` (the first entry is the initial
/// time). Each interval is split into equal steps no longer than `dt_max`,
/// which defaults to the stability bound.
pub fn integrate(
    dd: &DriftDiffusion,
    v0: &GaussianState,
    t_grid: &[f64],
    dt_max: Option<f64>,
    with_propagator: bool,
) -> Result<Trajectory> {
    let n = dd.dim();
    if v0.mean.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: v0.mean.len() });
    }
    if t_grid.is_empty() {
        return Err(Error::invalid("t_grid", "must not be empty"));
    }
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) || !t_grid.iter().all(|t| t.is_finite()) {
        return Err(Error::invalid("t_grid", "must be finite and strictly increasing"));
    }
    let limit = max_step(&dd.m);
    let dt = dt_max.unwrap_or(limit);
    if !(dt > 0.0) {
        return Err(Error::invalid("dt", "must be > 0"));
    }
    if dt > limit * (1.0 + 1e-12) {
        return Err(Error::StepTooLarge { dt, limit });
    }

    let mut cov = v0.cov.clone();
    symmetrize(&mut cov);
    // Mean and propagator share one linear solve as extra columns.
    let cols = if with_propagator { n + 1 } else { 1 };
    let mut rk = Rk4::new(n, cols);
    let mut lin = DMatrix::zeros(n, cols);
    lin.column_mut(0).copy_from(&v0.mean);
    if with_propagator {
        lin.view_mut((0, 1), (n, n)).fill_with_identity();
    }

    let mut states = Vec::with_capacity(t_grid.len());
    let mut props = Vec::new();
    let record = |cov: &DMatrix<f64>, lin: &DMatrix<f64>, states: &mut Vec<GaussianState>, props: &mut Vec<DMatrix<f64>>| {
        states.push(GaussianState { mean: DVector::from_column_slice(lin.column(0).as_slice()), cov: cov.clone() });
        if with_propagator {
            props.push(lin.view((0, 1), (n, n)).into_owned());
        }
    };
    record(&cov, &lin, &mut states, &mut props);
    let track_linear = with_propagator || v0.mean.iter().any(|x| *x != 0.0);
    for w in t_grid.windows(2) {
        let span = w[1] - w[0];
        let steps = libm::ceil(span / dt).max(1.0) as usize;
        let h = span / steps as f64;
        for _ in 0..steps {
            rk.step_cov(&dd.m, &dd.d, &mut cov, h);
            if track_linear {
                rk.step_linear(&dd.m, &mut lin, h);
            }
        }
        record(&cov, &lin, &mut states, &mut props);
    }
    Ok(Trajectory { times: t_grid.to_vec(), states, propagators: props })
}

pub fn evolve_covariance(dd: &DriftDiffusion, v0: &GaussianState, t_grid: &[f64], dt_max: Option<f64>) -> Result<Vec<GaussianState>> {
    integrate(dd, v0, t_grid, dt_max, false).map(|t| t.states)
}

/// Closed-form propagation for a constant drift. Over a step h,
/// V ← ΦVΦᵀ + Q and u ← Φu with Φ = exp(Mh) and Q = ∫₀ʰ Φ(s)DΦ(s)ᵀds, both
/// read off one exponential of the block matrix [[−M, D], [0, Mᵀ]]h.
/// The block contains exp(−Mh), so steps are split until h·max|Re λ| ≤ 1;
/// rotation frequencies do not limit the step. Equal grid spacings share
/// one set of exponentials.
pub fn integrate_exact(dd: &DriftDiffusion, v0: &GaussianState, t_grid: &[f64], with_propagator: bool) -> Result<Trajectory> {
    let n = dd.dim();
    if v0.mean.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: v0.mean.len() });
    }
    if t_grid.is_empty() || t_grid.windows(2).any(|w| !(w[1] > w[0])) || !t_grid.iter().all(|t| t.is_finite()) {
        return Err(Error::invalid("t_grid", "must be non-empty, finite and strictly increasing"));
    }
    let abscissa = eigenvalues(&dd.m).iter().map(|z| libm::fabs(z.re)).fold(0.0, f64::max);
    let block = |h: f64| -> (DMatrix<f64>, DMatrix<f64>) {
        let mut c = DMatrix::zeros(2 * n, 2 * n);
        c.view_mut((0, 0), (n, n)).copy_from(&(-&dd.m * h));
        c.view_mut((0, n), (n, n)).copy_from(&(&dd.d * h));
        c.view_mut((n, n), (n, n)).copy_from(&(dd.m.transpose() * h));
        let e = expm(&c);
        let phi = e.view((n, n), (n, n)).transpose();
        let q = &phi * e.view((0, n), (n, n));
        (phi, q)
    };
    let step = |h: f64| -> (DMatrix<f64>, DMatrix<f64>) {
        let parts = libm::ceil(h * abscissa).max(1.0) as usize;
        let (phi_s, q_s) = block(h / parts as f64);
        let (mut phi, mut q) = (phi_s.clone(), q_s.clone());
        for _ in 1..parts {
            q = &phi_s * &q * phi_s.transpose() + &q_s;
            phi = &phi_s * &phi;
        }
        (phi, q)
    };
    let mut cov = v0.cov.clone();
    let mut mean = v0.mean.clone();
    let mut prop = DMatrix::identity(n, n);
    let mut states = Vec::with_capacity(t_grid.len());
    let mut props = Vec::new();
    states.push(v0.clone());
    if with_propagator {
        props.push(prop.clone());
    }
    let mut cached: Option<(f64, DMatrix<f64>, DMatrix<f64>)> = None;
    for w in t_grid.windows(2) {
        let h = w[1] - w[0];
        if !matches!(&cached, Some((hc, _, _)) if libm::fabs(hc - h) <= 1e-12 * h) {
            let (phi, q) = step(h);
            cached = Some((h, phi, q));
        }
        let (_, phi, q) = cached.as_ref().expect("filled above");
        cov = phi * &cov * phi.transpose() + q;
        symmetrize(&mut cov);
        mean = phi * &mean;
        states.push(GaussianState { mean: mean.clone(), cov: cov.clone() });
        if with_propagator {
            prop = phi * &prop;
            props.push(prop.clone());
        }
    }
    Ok(Trajectory { times: t_grid.to_vec(), states, propagators: props })
}

pub fn evolve_exact(dd: &DriftDiffusion, v0: &GaussianState, t_grid: &[f64]) -> Result<Vec<GaussianState>> {
    integrate_exact(dd, v0, t_grid, false).map(|t| t.states)
}

pub fn steady_state_covariance(dd: &DriftDiffusion) -> Result<GaussianState> {
    let cov = solve_lyapunov(&dd.m, &dd.d)?;
    Ok(GaussianState { mean: DVector::zeros(dd.dim()), cov })
}

/// Relative Lyapunov residual ‖MV + VMᵀ + D‖ / ‖D‖ of a steady state.
pub fn steady_residual(dd: &DriftDiffusion, v: &GaussianState) -> f64 {
    max_abs(&crate::linalg::lyapunov_residual(&dd.m, &v.cov, &dd.d)) / max_abs(&dd.d).max(f64::MIN_POSITIVE)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DarkModeAnalysis {
    /// [[Γ_i, Γ_c,ij], [Γ_c,ji, Γ_j]]
    pub damping_matrix: [[f64; 2]; 2],
    pub determinant: f64,
    /// Ascending by magnitude: dark then bright.
    pub eigenvalues: [f64; 2],
    pub dark_mode: [f64; 2],
    pub bright_damping: f64,
}

pub fn dark_mode_analysis(ba: &BackactionSet, pair: (usize, usize)) -> DarkModeAnalysis {
    let (i, j) = pair;
    let a = [[ba.gamma[i], ba.gamma_c[(i, j)]], [ba.gamma_c[(j, i)], ba.gamma[j]]];
    let tr = a[0][0] + a[1][1];
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let disc = libm::sqrt((tr * tr - 4.0 * det).max(0.0));
    let (l1, l2) = (0.5 * (tr - disc), 0.5 * (tr + disc));
    let (dark, bright) = if libm::fabs(l1) <= libm::fabs(l2) { (l1, l2) } else { (l2, l1) };
    // Null vector of (A − λI), from whichever row is better conditioned.
    let r0 = [a[0][1], dark - a[0][0]];
    let r1 = [dark - a[1][1], a[1][0]];
    let v = if r0[0].abs() + r0[1].abs() >= r1[0].abs() + r1[1].abs() { r0 } else { r1 };
    let norm = libm::sqrt(v[0] * v[0] + v[1] * v[1]);
    let mut dark_mode = if norm > 0.0 { [v[0] / norm, v[1] / norm] } else { [1.0, 0.0] };
    if dark_mode[0] < 0.0 || (dark_mode[0] == 0.0 && dark_mode[1] < 0.0) {
        dark_mode = [-dark_mode[0], -dark_mode[1]];
    }
    DarkModeAnalysis { damping_matrix: a, determinant: det, eigenvalues: [dark, bright], dark_mode, bright_damping: bright }
}

/// Least-squares decay rate of ln|y(t) − y_∞| over the supplied samples.
pub fn fitted_decay_rate(times: &[f64], values: &[f64], asymptote: f64) -> f64 {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(_, v)| libm::fabs(**v - asymptote) > 0.0)
        .map(|(t, v)| (*t, libm::log(libm::fabs(*v - asymptote))))
        .collect();
    let n = pts.len() as f64;
    let (st, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (t, y)| (a + t, b + y));
    let (mt, my) = (st / n, sy / n);
    let (num, den) = pts.iter().fold((0.0, 0.0), |(a, b), (t, y)| (a + (t - mt) * (y - my), b + (t - mt) * (t - mt)));
    -num / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backaction::{self_consistent_frequencies, FrequencyMode};
    use crate::calibration::CALIBRATION;
    use crate::model::{CavityConfig, CouplingKind, Drive, MechanicalMode};

    fn sys(modes: &[(f64, f64, f64, f64)], kappa: f64) -> SystemConfig {
        SystemConfig::new(
            CavityConfig { kappa, delta_c: 0.0, drive: Drive::PhotonNumber(1.0) },
            modes
                .iter()
                .map(|&(omega, gamma, coupling, n_th)| MechanicalMode { omega, gamma, coupling, n_th })
                .collect(),
            CouplingKind::Linear,
        )
        .unwrap()
    }

    fn reduced(s: &SystemConfig, delta_bar: f64) -> (BackactionSet, DriftDiffusion) {
        let ba = self_consistent_frequencies(s, delta_bar, FrequencyMode::WeakCoupling).unwrap();
        let m = build_drift(s, &ba, DriftVariant::Full).unwrap();
        let d = build_diffusion(s, &ba, &NoiseModel::Vacuum, delta_bar, NoiseStructure::MomentumRows, CALIBRATION);
        (ba, DriftDiffusion { m, d })
    }

    #[test]
    fn decoupled_eigenvalues() {
        let s = sys(&[(3.0, 0.2, 0.0, 0.0), (2.0, 0.1, 0.0, 0.0)], 1.0);
        let (_, dd) = reduced(&s, -1.0);
        let mut eig = eigenvalues(&dd.m);
        eig.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap());
        let expect = [(-0.1, -3.0), (-0.05, -2.0), (-0.05, 2.0), (-0.1, 3.0)];
        for (z, (re, im)) in eig.iter().zip(expect) {
            assert!((z.re - re).abs() < 1e-12 && (z.im - im).abs() < 1e-12);
        }
    }

    #[test]
    fn coherent_only_eigenvalues() {
        let (nu, oc, g) = (5.0, 0.3, 0.02);
        let m = coherent_exchange_drift(nu, oc, &[g, g]);
        let mut im: Vec<f64> = eigenvalues(&m).iter().map(|z| z.im).collect();
        im.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expect = [-(nu + oc), -(nu - oc), nu - oc, nu + oc];
        for (a, b) in im.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
        for z in eigenvalues(&m) {
            assert!((z.re + g / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn variant_requires_match() {
        let s = sys(&[(3.0, 0.2, 0.1, 0.0), (2.0, 0.1, 0.1, 0.0)], 1.0);
        let (ba, _) = reduced(&s, -1.0);
        assert!(matches!(build_drift(&s, &ba, DriftVariant::CoherentOnly), Err(Error::MismatchedFrequencies { .. })));
    }

    #[test]
    fn frozen_dynamics() {
        let dd = DriftDiffusion { m: DMatrix::zeros(2, 2), d: DMatrix::zeros(2, 2) };
        let v0 = GaussianState::thermal(1, 3.0);
        let out = evolve_covariance(&dd, &v0, &[0.0, 1.0, 5.0], Some(0.1)).unwrap();
        assert!(out.iter().all(|s| s.cov == v0.cov));
    }

    #[test]
    fn no_baths_no_diffusion() {
        let s = sys(&[(3.0, 0.0, 0.0, 5.0)], 1.0);
        let (_, dd) = reduced(&s, -1.0);
        assert_eq!(max_abs(&dd.d), 0.0);
    }

    #[test]
    fn thermal_equilibrium() {
        for structure in [NoiseStructure::MomentumRows, NoiseStructure::Isotropic] {
            let s = sys(&[(3.0, 0.01, 0.0, 4.0)], 1.0);
            let ba = self_consistent_frequencies(&s, -1.0, FrequencyMode::WeakCoupling).unwrap();
            let m = build_drift(&s, &ba, DriftVariant::Full).unwrap();
            let d = build_diffusion(&s, &ba, &NoiseModel::Vacuum, -1.0, structure, CALIBRATION);
            let v = steady_state_covariance(&DriftDiffusion { m, d }).unwrap();
            // Noise on P alone leaves a (γ/2ν)² anisotropy.
            let (nu, g) = (ba.nu[0], 0.01);
            let expect = match structure {
                NoiseStructure::MomentumRows => {
                    let r = nu * nu / (nu * nu + g * g / 4.0);
                    [(0, 0, 2.25 * r), (1, 1, 2.25 * (2.0 - r)), (0, 1, 2.25 * r * g / (2.0 * nu))]
                }
                NoiseStructure::Isotropic => [(0, 0, 2.25), (1, 1, 2.25), (0, 1, 0.0)],
            };
            for (i, j, e) in expect {
                assert!((v.cov[(i, j)] - e).abs() < 1e-10, "{structure:?} {i}{j} {}", v.cov[(i, j)]);
            }
        }
    }

    #[test]
    fn resolved_sideband_detailed_balance() {
        // Steady occupancy of a cold-damped mode is A₊/(A₋ − A₊) with A∓ the
        // anti-Stokes/Stokes rates g²κ/((Δ̄±ν)² + κ²/4).
        let (nu, kappa, g, d) = (20.0, 1.0, 0.05, -20.0);
        let s = sys(&[(nu, 0.0, g, 0.0)], kappa);
        let (ba, dd) = reduced(&s, d);
        let v = steady_state_covariance(&dd).unwrap();
        let rate = |x: f64| g * g * kappa / (x * x + 0.25 * kappa * kappa);
        let (cool, heat) = (rate(d + ba.nu[0]), rate(d - ba.nu[0]));
        let expect = heat / (cool - heat);
        assert!((v.phonon_number(0) / expect - 1.0).abs() < 1e-3, "{} {expect}", v.phonon_number(0));
        assert!(v.min_symplectic() >= 0.25 - 1e-12);
    }

    #[test]
    fn blue_single_mode_unstable() {
        let s = sys(&[(3.0, 1e-4, 0.1, 0.0)], 1.0);
        let (_, dd) = reduced(&s, 3.0);
        assert!(matches!(steady_state_covariance(&dd), Err(Error::UnstableDrift { .. })));
    }

    #[test]
    fn steady_state_matches_long_evolution() {
        let s = sys(&[(3.0, 0.01, 0.1, 2.0)], 1.0);
        let (_, dd) = reduced(&s, -3.0);
        let v = steady_state_covariance(&dd).unwrap();
        assert!(steady_residual(&dd, &v) < 1e-10);
        let slowest = eigenvalues(&dd.m).iter().map(|z| -z.re).fold(f64::INFINITY, f64::min);
        let t_end = 20.0 / slowest;
        let out = evolve_covariance(&dd, &GaussianState::thermal(1, 2.0), &[0.0, t_end], None).unwrap();
        let last = &out.last().unwrap().cov;
        let rel = max_abs(&(last - &v.cov)) / max_abs(&v.cov);
        assert!(rel < 1e-6, "{rel}");
    }

    #[test]
    fn fourth_order_convergence() {
        let s = sys(&[(3.0, 0.05, 0.2, 1.0)], 1.0);
        let (_, dd) = reduced(&s, -2.0);
        let v0 = GaussianState::squeezed(0.1, 3.0);
        let t = [0.0, 2.0];
        let at = |h: f64| evolve_covariance(&dd, &v0, &t, Some(h)).unwrap()[1].cov.clone();
        let h = max_step(&dd.m);
        let reference = at(h / 8.0);
        let e1 = max_abs(&(at(h) - &reference));
        let e2 = max_abs(&(at(h / 2.0) - &reference));
        let ratio = e1 / e2;
        assert!(ratio > 12.0 && ratio < 20.0, "{ratio}");
    }

    #[test]
    fn step_bound_enforced() {
        let s = sys(&[(3.0, 0.05, 0.2, 1.0)], 1.0);
        let (_, dd) = reduced(&s, -2.0);
        let err = evolve_covariance(&dd, &GaussianState::vacuum(1), &[0.0, 1.0], Some(1.0)).unwrap_err();
        assert!(matches!(err, Error::StepTooLarge { .. }));
    }

    #[test]
    fn dark_mode_symmetric() {
        let s = sys(&[(3.0, 0.0, 0.1, 0.0), (3.0, 0.0, 0.1, 0.0)], 1.0);
        let (ba, _) = reduced(&s, -3.0);
        let a = dark_mode_analysis(&ba, (0, 1));
        assert!(a.determinant.abs() <= 1e-14 * ba.gamma[0] * ba.gamma[1]);
        let r = 0.5f64.sqrt();
        assert!((a.dark_mode[0] - r).abs() < 1e-12 && (a.dark_mode[1] + r).abs() < 1e-12);
        assert!((a.bright_damping - (ba.gamma[0] + ba.gamma[1])).abs() < 1e-12 * a.bright_damping);
    }

    #[test]
    fn block_diagonal_keeps_each_mode() {
        let s = sys(&[(3.0, 0.0, 0.1, 0.0), (3.0, 0.0, 0.1, 0.0)], 1.0);
        let (ba, dd) = reduced(&s, -3.0);
        let b = dd.block_diagonal();
        assert!(dd.d[(1, 3)] != 0.0 && b.d[(1, 3)] == 0.0 && b.d[(3, 1)] == 0.0);
        assert_eq!(b.m.view((0, 0), (2, 2)), dd.m.view((0, 0), (2, 2)));
        assert_eq!(b.d.view((2, 2), (2, 2)), dd.d.view((2, 2), (2, 2)));
        // Each mode alone relaxes to a physical state.
        let single = DriftDiffusion { m: build_drift(&s, &ba.uncoupled(), DriftVariant::Full).unwrap(), d: dd.d.clone() }.block_diagonal();
        assert!(steady_state_covariance(&single).unwrap().min_symplectic() >= 0.25 - 1e-12);
    }

    #[test]
    fn fit_recovers_rate() {
        let t: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = t.iter().map(|t| 2.0 + 3.0 * (-0.7 * t).exp()).collect();
        assert!((fitted_decay_rate(&t, &y, 2.0) - 0.7).abs() < 1e-10);
    }

    #[test]
    fn exact_matches_rk4() {
        let s = sys(&[(1.0, 0.01, 0.05, 2.0), (1.1, 0.0, 0.03, 0.0)], 1.0);
        let (_, dd) = reduced(&s, -1.0);
        let v0 = GaussianState::thermal(2, 3.0);
        let grid: Vec<f64> = (0..20).map(|k| k as f64 * 2.5).collect();
        let a = evolve_covariance(&dd, &v0, &grid, None).unwrap();
        let b = evolve_exact(&dd, &v0, &grid).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!(max_abs(&(&x.cov - &y.cov)) < 1e-8 * max_abs(&x.cov));
        }
        // Undamped exchange: no steady state, propagators still agree.
        let dd = DriftDiffusion { m: coherent_exchange_drift(3.0, 0.2, &[0.0, 0.0]), d: DMatrix::identity(4, 4) * 0.01 };
        let mut v0 = GaussianState::thermal(2, 1.0);
        v0.mean[0] = 1.0;
        let a = integrate(&dd, &v0, &grid, Some(max_step(&dd.m) / 4.0), true).unwrap();
        let b = integrate_exact(&dd, &v0, &grid, true).unwrap();
        for k in 0..grid.len() {
            assert!(max_abs(&(&a.states[k].cov - &b.states[k].cov)) < 1e-8);
            assert!((&a.states[k].mean - &b.states[k].mean).amax() < 1e-9);
            assert!(max_abs(&(&a.propagators[k] - &b.propagators[k])) < 1e-9);
        }
    }
}
