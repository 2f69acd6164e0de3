//! Semiclassical trajectories of the four-wave-mixing equations for modes
//! held at intensity minima:
//!
//! ```text
//! ḃ_j = [iΩ_j − γ_j/2] b_j − (i/2) Σ_k g_jk Λ_k |b_k|² b_j
//!       − ½ Σ_k g_jk [iΩ_k + Γ_k/2] e^{2i(ν_j−ν_k)t} b_k² b_j*
//!       − 2i g_j F(t) (b_j + b_j* e^{2iν_j t}) + i ξ_j(t)
//! ```
//!
//! with F(t) real white noise of intensity S_FF·c_o (Itô convention) and
//! ξ_j complex thermal noise with E|dξ_j|² = γ_j(n̄_th,j + ½) dt.

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::backaction::BackactionSet;
use crate::calibration::Calibration;
use crate::model::{CouplingKind, SystemConfig};
use crate::noise::{effective_noise_coefficient, NoiseModel};
use crate::{Error, Result};

/// Amplitude beyond which a trajectory is considered unstable.
pub const AMPLITUDE_LIMIT: f64 = 1e6;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, PartialEq)]
pub struct FwmParams {
    pub nu: Vec<f64>,
    pub omega: Vec<f64>,
    pub gamma: Vec<f64>,
    pub n_th: Vec<f64>,
    /// g_jk Λ_k
    pub kerr: Vec<Vec<f64>>,
    /// g_jk [iΩ_k + Γ_k/2]
    pub mixing: Vec<Vec<Complex64>>,
    /// 2 g_j √(S_FF c_o): multiplicative noise amplitude per mode.
    pub noise_amplitude: Vec<f64>,
    /// Add the Itô-to-Stratonovich drift correction.
    pub stratonovich: bool,
}

impl FwmParams {
    pub fn from_backaction(system: &SystemConfig, ba: &BackactionSet, noise: &NoiseModel, cal: Calibration) -> Result<Self> {
        if system.coupling_kind != CouplingKind::QuadraticMinima || ba.kind != CouplingKind::QuadraticMinima {
            return Err(Error::WrongCouplingKind { expected: "QuadraticMinima" });
        }
        let n = system.n_modes();
        let kappa = system.kappa();
        for (j, s) in ba.strength.iter().enumerate() {
            // strength is 2g_j for this kind.
            let ratio = libm::fabs(0.5 * s) / kappa;
            if ratio > 0.5 {
                return Err(Error::StrongCouplingRegime { mode: j, ratio });
            }
        }
        let s_ff = effective_noise_coefficient(noise, ba.detuning, kappa) * cal.c_o;
        Ok(FwmParams {
            nu: ba.nu.clone(),
            omega: ba.omega.clone(),
            gamma: system.modes.iter().map(|m| m.gamma).collect(),
            n_th: system.modes.iter().map(|m| m.n_th).collect(),
            kerr: (0..n).map(|j| (0..n).map(|k| ba.lambda_c[(j, k)]).collect()).collect(),
            mixing: (0..n)
                .map(|j| (0..n).map(|k| Complex64::new(0.5 * ba.gamma_c[(j, k)], ba.omega_c[(j, k)])).collect())
                .collect(),
            noise_amplitude: ba.strength.iter().map(|s| s * libm::sqrt(s_ff)).collect(),
            stratonovich: false,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.nu.len()
    }

    /// Deterministic drift at time t.
    #[allow(clippy::needless_range_loop)]
    pub fn drift(&self, b: &[Complex64], t: f64, out: &mut [Complex64]) {
        let n = self.n_modes();
        for j in 0..n {
            let mut f = Complex64::new(-0.5 * self.gamma[j], self.omega[j]) * b[j];
            let mut kerr = 0.0;
            let mut mix = Complex64::new(0.0, 0.0);
            for k in 0..n {
                kerr += self.kerr[j][k] * b[k].norm_sqr();
                let phase = Complex64::from_polar(1.0, 2.0 * (self.nu[j] - self.nu[k]) * t);
                mix += self.mixing[j][k] * phase * b[k] * b[k];
            }
            f -= 0.5 * I * kerr * b[j];
            f -= 0.5 * mix * b[j].conj();
            out[j] = f;
        }
    }

    /// Coefficient of the real optical noise increment for mode j.
    pub fn noise_coefficient(&self, j: usize, b: Complex64, t: f64) -> Complex64 {
        let rot = Complex64::from_polar(1.0, 2.0 * self.nu[j] * t);
        -I * self.noise_amplitude[j] * (b + b.conj() * rot)
    }

    /// Itô-to-Stratonovich correction ½ Σ (σ ∂σ/∂b + σ* ∂σ/∂b*) for mode j.
    /// For this purely imaginary coefficient it vanishes identically.
    pub fn stratonovich_correction(&self, j: usize, b: Complex64, t: f64) -> Complex64 {
        let c = self.noise_amplitude[j];
        let rot = Complex64::from_polar(1.0, 2.0 * self.nu[j] * t);
        let sigma = self.noise_coefficient(j, b, t);
        let d_b = -I * c;
        let d_bc = -I * c * rot;
        0.5 * (sigma * d_b + sigma.conj() * d_bc)
    }

    /// Largest rate that a step must resolve.
    pub fn max_rate(&self, init: &[Complex64], noise_on: bool) -> f64 {
        let n = self.n_modes();
        let amp2 = init.iter().map(|b| b.norm_sqr()).fold(0.0, f64::max);
        let mut r: f64 = 0.0;
        for j in 0..n {
            r = r.max(libm::fabs(self.omega[j])).max(self.gamma[j]);
            for k in 0..n {
                r = r.max(libm::fabs(self.kerr[j][k]) * amp2);
                r = r.max(self.mixing[j][k].norm() * amp2);
                r = r.max(2.0 * libm::fabs(self.nu[j] - self.nu[k]));
            }
            if noise_on {
                r = r.max(2.0 * libm::fabs(self.nu[j]));
                r = r.max(self.noise_amplitude[j] * self.noise_amplitude[j]);
            }
        }
        r
    }

    /// One Euler–Maruyama step with optical increment `dw` and thermal
    /// increments `dxi` (already scaled).
    pub fn step(&self, b: &mut [Complex64], t: f64, h: f64, dw: f64, dxi: &[Complex64], scratch: &mut [Complex64]) {
        self.drift(b, t, scratch);
        for j in 0..b.len() {
            let mut inc = scratch[j] * h;
            if self.stratonovich {
                inc += self.stratonovich_correction(j, b[j], t) * h;
            }
            inc += self.noise_coefficient(j, b[j], t) * dw + I * dxi[j];
            b[j] += inc;
        }
    }
}

/// Stream of Gaussian increments for one trajectory. The stream depends only
/// on (seed, trajectory index).
pub struct Increments {
    rng: ChaCha8Rng,
}

impl Increments {
    pub fn new(seed: u64, trajectory: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trajectory as u64);
        Increments { rng }
    }

    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FwmRun<'a> {
    pub init: &'a [Complex64],
    pub noise_on: bool,
    pub seed: u64,
    pub t_grid: &'a [f64],
    pub dt: f64,
}

fn check_run(params: &FwmParams, run: &FwmRun) -> Result<()> {
    let n = params.n_modes();
    if run.init.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: run.init.len() });
    }
    if run.t_grid.is_empty() || run.t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("t_grid", "must be non-empty and strictly increasing"));
    }
    if !(run.dt > 0.0 && run.dt.is_finite()) {
        return Err(Error::invalid("dt", "must be finite and > 0"));
    }
    let rate = params.max_rate(run.init, run.noise_on);
    if rate > 0.0 {
        let limit = 1.0 / (50.0 * rate);
        if run.dt > limit * (1.0 + 1e-12) {
            return Err(Error::StepTooLarge { dt: run.dt, limit });
        }
    }
    Ok(())
}

/// Amplitudes at each time of `run.t_grid` for trajectory `index`.
pub fn integrate_trajectory(params: &FwmParams, run: &FwmRun, index: usize) -> Result<Vec<Vec<Complex64>>> {
    check_run(params, run)?;
    let n = params.n_modes();
    let mut inc = Increments::new(run.seed, index);
    let mut b = run.init.to_vec();
    let mut scratch = vec![Complex64::new(0.0, 0.0); n];
    let mut dxi = vec![Complex64::new(0.0, 0.0); n];
    let thermal: Vec<f64> = (0..n).map(|j| libm::sqrt(0.5 * params.gamma[j] * (params.n_th[j] + 0.5))).collect();

    let mut out = Vec::with_capacity(run.t_grid.len());
    out.push(b.clone());
    let mut t = run.t_grid[0];
    for w in run.t_grid.windows(2) {
        let span = w[1] - w[0];
        let steps = libm::ceil(span / run.dt - 1e-9).max(1.0) as usize;
        let h = span / steps as f64;
        let sq = libm::sqrt(h);
        for s in 0..steps {
            let dw = if run.noise_on { inc.normal() * sq } else { 0.0 };
            for j in 0..n {
                dxi[j] = if run.noise_on && thermal[j] > 0.0 {
                    Complex64::new(inc.normal(), inc.normal()) * (thermal[j] * sq)
                } else {
                    Complex64::new(0.0, 0.0)
                };
            }
            params.step(&mut b, t, h, dw, &dxi, &mut scratch);
            t = w[0] + h * (s + 1) as f64;
            if b.iter().any(|z| !(z.norm() <= AMPLITUDE_LIMIT)) {
                return Err(Error::AmplitudeOverflow { trajectory: index, time: t, limit: AMPLITUDE_LIMIT });
            }
        }
        out.push(b.clone());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryEnsemble {
    pub n_traj: usize,
    pub seed: u64,
    pub dt: f64,
    pub times: Vec<f64>,
    /// `samples[trajectory][time][mode]`
    pub samples: Vec<Vec<Vec<Complex64>>>,
    /// ⟨|b_j|²⟩ per time and mode.
    pub mean_abs2: Vec<Vec<f64>>,
    /// ⟨b_j⟩ per time and mode.
    pub mean: Vec<Vec<Complex64>>,
}

impl TrajectoryEnsemble {
    pub fn from_samples(seed: u64, dt: f64, times: Vec<f64>, samples: Vec<Vec<Vec<Complex64>>>) -> Self {
        let n_traj = samples.len();
        let n_t = times.len();
        let n_modes = samples.first().map(|s| s[0].len()).unwrap_or(0);
        let mut mean_abs2 = vec![vec![0.0; n_modes]; n_t];
        let mut mean = vec![vec![Complex64::new(0.0, 0.0); n_modes]; n_t];
        for traj in &samples {
            for (ti, bs) in traj.iter().enumerate() {
                for (j, b) in bs.iter().enumerate() {
                    mean_abs2[ti][j] += b.norm_sqr();
                    mean[ti][j] += b;
                }
            }
        }
        let inv = if n_traj > 0 { 1.0 / n_traj as f64 } else { 0.0 };
        for ti in 0..n_t {
            for j in 0..n_modes {
                mean_abs2[ti][j] *= inv;
                mean[ti][j] *= inv;
            }
        }
        TrajectoryEnsemble { n_traj, seed, dt, times, samples, mean_abs2, mean }
    }

    /// Trajectory-averaged periodogram of mode `j` on the sample grid,
    /// as (angular frequency, power) for the non-negative DFT bins.
    pub fn spectrum(&self, j: usize) -> Vec<(f64, f64)> {
        let n = self.times.len();
        if n < 2 || self.n_traj == 0 {
            return Vec::new();
        }
        let dt = (self.times[n - 1] - self.times[0]) / (n - 1) as f64;
        let mut out = Vec::with_capacity(n / 2 + 1);
        for k in 0..=n / 2 {
            let w = core::f64::consts::TAU * k as f64 / (n as f64 * dt);
            let mut p = 0.0;
            for traj in &self.samples {
                let mut acc = Complex64::new(0.0, 0.0);
                for (m, bs) in traj.iter().enumerate() {
                    acc += bs[j] * Complex64::from_polar(1.0, -w * m as f64 * dt);
                }
                p += acc.norm_sqr() * dt / n as f64;
            }
            out.push((w, p / self.n_traj as f64));
        }
        out
    }
}

pub fn integrate_fwm(params: &FwmParams, run: &FwmRun, n_traj: usize) -> Result<TrajectoryEnsemble> {
    let samples = (0..n_traj).map(|i| integrate_trajectory(params, run, i)).collect::<Result<Vec<_>>>()?;
    Ok(TrajectoryEnsemble::from_samples(run.seed, run.dt, run.t_grid.to_vec(), samples))
}

/// Phase-rotation rate of a single noise-free, undamped mode with |b| = r:
/// Ω − ½(Ω + Λ) r².
pub fn single_mode_rotation_rate(omega: f64, lambda: f64, r: f64) -> f64 {
    omega - 0.5 * (omega + lambda) * r * r
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(omega: f64, lambda: f64, gamma_rad: f64, gamma: f64) -> FwmParams {
        FwmParams {
            nu: vec![10.0],
            omega: vec![omega],
            gamma: vec![gamma],
            n_th: vec![0.0],
            kerr: vec![vec![lambda]],
            mixing: vec![vec![Complex64::new(0.5 * gamma_rad, omega)]],
            noise_amplitude: vec![0.05],
            stratonovich: false,
        }
    }

    fn unwrap_phase(traj: &[Vec<Complex64>], j: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(traj.len());
        let mut prev = traj[0][j].arg();
        let mut acc = prev;
        out.push(acc);
        for s in &traj[1..] {
            let a = s[j].arg();
            let mut d = a - prev;
            while d > core::f64::consts::PI {
                d -= core::f64::consts::TAU;
            }
            while d < -core::f64::consts::PI {
                d += core::f64::consts::TAU;
            }
            acc += d;
            prev = a;
            out.push(acc);
        }
        out
    }

    #[test]
    fn kerr_rotation_rate() {
        let p = single(0.3, 0.8, 0.0, 0.0);
        let init = [Complex64::new(0.7, 0.0)];
        let t: Vec<f64> = (0..=20).map(|k| k as f64).collect();
        let run = FwmRun { init: &init, noise_on: false, seed: 1, t_grid: &t, dt: 1e-4 };
        let traj = integrate_trajectory(&p, &run, 0).unwrap();
        let ph = unwrap_phase(&traj, 0);
        let rate = (ph[20] - ph[0]) / 20.0;
        let expect = single_mode_rotation_rate(0.3, 0.8, 0.7);
        assert!((rate / expect - 1.0).abs() < 1e-2);
        assert!((traj[20][0].norm() - 0.7).abs() < 1e-3);
    }

    #[test]
    fn decoupled_limit_is_damped_rotation() {
        let p = single(0.0, 0.0, 0.0, 0.2);
        let init = [Complex64::new(1.0, 0.0)];
        let t = [0.0, 5.0];
        let run = FwmRun { init: &init, noise_on: false, seed: 1, t_grid: &t, dt: 1e-4 };
        let traj = integrate_trajectory(&p, &run, 0).unwrap();
        assert!((traj[1][0].norm() - (-0.5f64).exp()).abs() < 1e-4);
    }

    #[test]
    fn stratonovich_correction_vanishes() {
        let p = single(0.3, 0.8, 0.1, 0.0);
        for (b, t) in [(Complex64::new(0.3, -0.2), 0.1), (Complex64::new(-1.0, 2.0), 3.7)] {
            assert!(p.stratonovich_correction(0, b, t).norm() < 1e-15);
        }
    }

    #[test]
    fn seeded_streams_reproducible() {
        let p = single(0.3, 0.8, 0.1, 0.01);
        let init = [Complex64::new(0.5, 0.0)];
        let t: Vec<f64> = (0..=4).map(|k| k as f64 * 0.1).collect();
        let run = FwmRun { init: &init, noise_on: true, seed: 42, t_grid: &t, dt: 1e-4 };
        let a = integrate_fwm(&p, &run, 3).unwrap();
        let b = integrate_fwm(&p, &run, 3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.samples[0], a.samples[1]);
    }

    #[test]
    fn step_limit() {
        let p = single(0.3, 0.8, 0.1, 0.01);
        let init = [Complex64::new(0.5, 0.0)];
        let run = FwmRun { init: &init, noise_on: true, seed: 42, t_grid: &[0.0, 1.0], dt: 0.1 };
        assert!(matches!(integrate_trajectory(&p, &run, 0), Err(Error::StepTooLarge { .. })));
    }

    #[test]
    fn overflow_detected() {
        // Strong negative damping blows the amplitude up.
        let p = single(0.0, 0.0, 0.0, -20.0);
        let init = [Complex64::new(1.0, 0.0)];
        let run = FwmRun { init: &init, noise_on: false, seed: 0, t_grid: &[0.0, 2.0], dt: 1e-3 };
        assert!(matches!(integrate_trajectory(&p, &run, 0), Err(Error::AmplitudeOverflow { .. })));
    }
}
