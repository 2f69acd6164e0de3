//! Classical steady states of the driven cavity and mechanical modes.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::fullmodel::full_drift;
use crate::linalg::max_real_eigenvalue;
use crate::model::{lorentz_denominator, CouplingKind, Drive, Sign, SystemConfig};
use crate::roots::cubic_real_roots;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MeanFieldSolution {
    pub alpha_s: Complex64,
    pub n_c: f64,
    /// (β_j + β_j*)_s for linear coupling, x̄_j for quadratic coupling.
    pub displacements: Vec<f64>,
    /// Δ̄ (linear) or Δ̄⁽²⁾ (quadratic): the detuning seen by the mean field.
    pub delta_bar: f64,
    /// Δ⁽²⁾ for quadratic maxima; equal to `delta_bar` otherwise.
    pub delta_shifted: f64,
    /// ϖ_j = ω_j + 2g₀,j⁽²⁾ n̄_c for quadratic coupling, ω_j for linear.
    pub varpi: Vec<f64>,
    pub stable: bool,
    /// Largest real part of the linearized dynamics around this state.
    pub max_growth_rate: f64,
    pub branch: usize,
    /// Part of a continuous family of equilibria rather than an isolated point.
    pub degenerate: bool,
}

/// Relative margin below which a marginal growth rate still counts as stable.
const STABILITY_TOL: f64 = 1e-9;

fn stability_scale(system: &SystemConfig) -> f64 {
    system.kappa() + system.modes.iter().fold(0.0f64, |a, m| a.max(m.omega))
}

/// Σ_j 2 g₀,j² / ω_j
fn linear_stiffness(system: &SystemConfig) -> f64 {
    system.modes.iter().map(|m| 2.0 * m.coupling * m.coupling / m.omega).sum()
}

/// Residual Δ̄ − Δ_c − S η²/(Δ̄² + κ²/4) of the linear self-consistency.
pub fn linear_residual(system: &SystemConfig, delta_bar: f64) -> f64 {
    let c = &system.cavity;
    let eta = c.eta(delta_bar);
    delta_bar - c.delta_c - linear_stiffness(system) * eta * eta / lorentz_denominator(delta_bar, c.kappa)
}

pub fn solve_linear(system: &SystemConfig) -> Result<Vec<MeanFieldSolution>> {
    if system.coupling_kind != CouplingKind::Linear {
        return Err(Error::WrongCouplingKind { expected: "Linear" });
    }
    let c = &system.cavity;
    let s = linear_stiffness(system);
    let k2 = 0.25 * c.kappa * c.kappa;
    let detunings = match c.drive {
        Drive::PhotonNumber(n) => vec![c.delta_c + s * n],
        Drive::Amplitude(eta) => {
            if s == 0.0 {
                vec![c.delta_c]
            } else {
                // (Δ̄ − Δ_c)(Δ̄² + κ²/4) − S η² = 0
                cubic_real_roots(-c.delta_c, k2, -c.delta_c * k2 - s * eta * eta)
            }
        }
    };
    let scale = stability_scale(system);
    let mut out = Vec::with_capacity(detunings.len());
    for (branch, delta_bar) in detunings.into_iter().enumerate() {
        let eta = c.eta(delta_bar);
        let alpha_s = Complex64::new(eta, 0.0) / Complex64::new(0.5 * c.kappa, -delta_bar);
        let n_c = alpha_s.norm_sqr();
        let displacements = system.modes.iter().map(|m| 2.0 * m.coupling * n_c / m.omega).collect();
        let g: Vec<f64> = system.modes.iter().map(|m| m.coupling * alpha_s.norm()).collect();
        let growth = max_real_eigenvalue(&full_drift(system, delta_bar, &g));
        out.push(MeanFieldSolution {
            alpha_s,
            n_c,
            displacements,
            delta_bar,
            delta_shifted: delta_bar,
            varpi: system.modes.iter().map(|m| m.omega).collect(),
            stable: growth <= STABILITY_TOL * scale,
            max_growth_rate: growth,
            branch,
            degenerate: false,
        });
    }
    Ok(out)
}

/// Jacobian of the quadratic-coupling mean-field equations in the real
/// variables (Re α, Im α, X_1, P_1, …).
pub fn quadratic_jacobian(system: &SystemConfig, alpha: Complex64, x: &[f64], delta: f64) -> DMatrix<f64> {
    let n = system.n_modes();
    let kappa = system.kappa();
    let (ar, ai) = (alpha.re, alpha.im);
    let nc = alpha.norm_sqr();
    let mut j = DMatrix::zeros(2 * n + 2, 2 * n + 2);
    j[(0, 0)] = -0.5 * kappa;
    j[(0, 1)] = -delta;
    j[(1, 0)] = delta;
    j[(1, 1)] = -0.5 * kappa;
    for (k, m) in system.modes.iter().enumerate() {
        let (xi, pi) = (2 + 2 * k, 3 + 2 * k);
        let g0 = m.coupling;
        j[(0, xi)] = 8.0 * g0 * x[k] * ai;
        j[(1, xi)] = -8.0 * g0 * x[k] * ar;
        j[(xi, pi)] = m.omega;
        j[(pi, xi)] = -m.omega - 4.0 * g0 * nc;
        j[(pi, pi)] = -m.gamma;
        j[(pi, 0)] = -8.0 * g0 * x[k] * ar;
        j[(pi, 1)] = -8.0 * g0 * x[k] * ai;
    }
    j
}

fn quadratic_solution(system: &SystemConfig, x: Vec<f64>, degenerate: bool) -> MeanFieldSolution {
    let c = &system.cavity;
    let modes = &system.modes;
    let (delta_bar, delta_shifted) = if system.coupling_kind == CouplingKind::QuadraticMinima {
        let d = c.delta_c - modes.iter().map(|m| m.coupling).sum::<f64>();
        (d, d)
    } else {
        let corr: f64 = modes.iter().zip(&x).map(|(m, x)| m.coupling * x * x).sum();
        (c.delta_c - 4.0 * corr, c.delta_c - 8.0 * corr)
    };
    let eta = c.eta(delta_bar);
    let alpha_s = Complex64::new(eta, 0.0) / Complex64::new(0.5 * c.kappa, -delta_bar);
    let n_c = alpha_s.norm_sqr();
    let growth = max_real_eigenvalue(&quadratic_jacobian(system, alpha_s, &x, delta_bar));
    MeanFieldSolution {
        alpha_s,
        n_c,
        varpi: modes.iter().map(|m| m.omega + 2.0 * m.coupling * n_c).collect(),
        displacements: x,
        delta_bar,
        delta_shifted,
        stable: growth <= STABILITY_TOL * stability_scale(system),
        max_growth_rate: growth,
        branch: 0,
        degenerate,
    }
}

/// Photon number n*_j = ω_j / (4|g₀,j⁽²⁾|) at which mode j's restoring force
/// vanishes, the only photon number compatible with a displaced mode.
pub fn critical_photon_number(omega: f64, g0: f64) -> f64 {
    omega / (4.0 * libm::fabs(g0))
}

pub fn solve_quadratic(system: &SystemConfig) -> Result<Vec<MeanFieldSolution>> {
    if !system.coupling_kind.is_quadratic() {
        return Err(Error::WrongCouplingKind { expected: "QuadraticMaxima or QuadraticMinima" });
    }
    system.validate()?;
    let n = system.n_modes();
    let mut out = vec![quadratic_solution(system, vec![0.0; n], false)];

    if system.coupling_kind == CouplingKind::QuadraticMaxima {
        let c = &system.cavity;
        let n_star: Vec<f64> = system.modes.iter().map(|m| critical_photon_number(m.omega, m.coupling)).collect();
        let shares = |j: usize| (0..n).any(|k| k != j && libm::fabs(n_star[k] - n_star[j]) <= 1e-12 * n_star[j]);
        match c.drive {
            Drive::PhotonNumber(nc) => {
                // With the photon number pinned, a displaced mode needs nc = n*_j
                // exactly and its amplitude is then left undetermined.
                if n_star.iter().any(|s| libm::fabs(nc - s) <= 1e-12 * s) {
                    out[0].degenerate = true;
                }
            }
            Drive::Amplitude(eta) => {
                let k2 = 0.25 * c.kappa * c.kappa;
                for j in 0..n {
                    let r = eta * eta / n_star[j] - k2;
                    if r < 0.0 {
                        continue;
                    }
                    let root = libm::sqrt(r);
                    let mut candidates = vec![-root, root];
                    candidates.dedup();
                    for d in candidates {
                        // Δ̄⁽²⁾ = Δ_c + |g₀,j| y_j² must equal d.
                        if d <= c.delta_c {
                            continue;
                        }
                        let y = libm::sqrt((d - c.delta_c) / libm::fabs(system.modes[j].coupling));
                        for sign in [1.0, -1.0] {
                            let mut x = vec![0.0; n];
                            x[j] = sign * 0.5 * y;
                            out.push(quadratic_solution(system, x, shares(j)));
                        }
                    }
                }
            }
        }
    }
    for (i, s) in out.iter_mut().enumerate() {
        s.branch = i;
    }
    Ok(out)
}

/// The branch picked by the system's `sign_choice`: the displaced branch
/// whose nonzero displacement has the chosen sign and is stable, if any,
/// otherwise the undisplaced branch.
pub fn select_branch<'a>(system: &SystemConfig, solutions: &'a [MeanFieldSolution]) -> Option<&'a MeanFieldSolution> {
    let matches_sign = |s: &MeanFieldSolution| {
        s.displacements.iter().enumerate().all(|(j, x)| {
            *x == 0.0 || (system.sign(j) == Sign::Plus) == (*x > 0.0)
        })
    };
    solutions
        .iter()
        .find(|s| s.stable && s.displacements.iter().any(|x| *x != 0.0) && matches_sign(s))
        .or_else(|| solutions.iter().find(|s| s.displacements.iter().all(|x| *x == 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CavityConfig, MechanicalMode};

    fn sys(kind: CouplingKind, delta_c: f64, eta: f64, modes: &[(f64, f64)]) -> SystemConfig {
        SystemConfig::new(
            CavityConfig { kappa: 1.0, delta_c, drive: Drive::Amplitude(eta) },
            modes.iter().map(|&(omega, g)| MechanicalMode { omega, gamma: 1e-3, coupling: g, n_th: 0.0 }).collect(),
            kind,
        )
        .unwrap()
    }

    #[test]
    fn empty_cavity_on_resonance() {
        let s = sys(CouplingKind::Linear, 0.0, 0.7, &[(2.0, 0.0)]);
        let r = solve_linear(&s).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r[0].alpha_s - Complex64::new(1.4, 0.0)).norm() < 1e-15);
        assert_eq!(r[0].delta_bar, 0.0);
    }

    #[test]
    fn empty_cavity_half_width() {
        let s = sys(CouplingKind::Linear, -0.5, 0.7, &[(2.0, 0.0)]);
        let r = solve_linear(&s).unwrap();
        assert!((r[0].n_c - 0.49 * 2.0).abs() < 1e-14);
    }

    #[test]
    fn bistable_branches() {
        // Red bare detuning past √3 κ/2 with a drive inside the bistable window.
        // The upper branch lands blue of resonance here, so only the lower one is checked.
        let s = sys(CouplingKind::Linear, -3.0, 0.0, &[(1.0, 0.05)]);
        let stiff = linear_stiffness(&s);
        // Choose η so that the middle of the S-curve is hit.
        let eta = libm::sqrt((-1.5 + 3.0) * (1.5 * 1.5 + 0.25) / stiff);
        let mut s = s;
        s.cavity.drive = Drive::Amplitude(eta);
        let r = solve_linear(&s).unwrap();
        assert_eq!(r.len(), 3);
        assert!(r[0].stable && !r[1].stable, "{:?}", r.iter().map(|b| (b.delta_bar, b.n_c, b.max_growth_rate)).collect::<Vec<_>>());
        for b in &r {
            assert!(linear_residual(&s, b.delta_bar).abs() < 1e-10);
            let y = 2.0 * 0.05 * b.n_c / 1.0;
            assert!((b.displacements[0] - y).abs() < 1e-12 * y);
        }
    }

    #[test]
    fn minima_undisplaced() {
        let s = sys(CouplingKind::QuadraticMinima, -2.0, 3.0, &[(1.0, 0.01), (1.3, 0.02)]);
        let r = solve_quadratic(&s).unwrap();
        assert_eq!(r.len(), 1);
        assert!(r[0].displacements.iter().all(|x| *x == 0.0));
        assert!((r[0].delta_bar - (-2.0 - 0.03)).abs() < 1e-15);
        assert!(r[0].stable);
    }

    #[test]
    fn maxima_factor_two_and_pairs() {
        let eta = libm::sqrt(250.0 * 9.25);
        let s = sys(CouplingKind::QuadraticMaxima, -5.0, eta, &[(1.0, -0.001)]);
        let r = solve_quadratic(&s).unwrap();
        assert!(r.len() >= 3);
        let displaced: Vec<_> = r.iter().filter(|b| b.displacements[0] != 0.0).collect();
        for pair in displaced.chunks(2) {
            assert_eq!(pair[0].displacements[0], -pair[1].displacements[0]);
        }
        for b in &displaced {
            let lhs = s.cavity.delta_c - b.delta_shifted;
            let rhs = 2.0 * (s.cavity.delta_c - b.delta_bar);
            assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs());
            assert!((b.n_c - critical_photon_number(1.0, -0.001)).abs() < 1e-9 * b.n_c);
            // On the red side the optical force pushes a displaced mode further out.
            if b.delta_bar < 0.0 {
                assert!(!b.stable);
            }
        }
    }

    #[test]
    fn maxima_displaced_needs_blue_side_and_damping() {
        // Blue of resonance the static force restores, but the retarded
        // response anti-damps; enough mechanical damping wins.
        let mut s = sys(CouplingKind::QuadraticMaxima, -0.2, 20.0, &[(1.0, -0.001)]);
        let light = solve_quadratic(&s).unwrap();
        assert!(!light[0].stable);
        assert!(light.iter().all(|b| !b.stable));
        s.modes[0].gamma = 10.0;
        let heavy = solve_quadratic(&s).unwrap();
        let displaced: Vec<_> = heavy.iter().filter(|b| b.displacements[0] != 0.0).collect();
        assert_eq!(displaced.len(), 2);
        assert!(displaced.iter().all(|b| b.stable && b.delta_bar > 0.0));
        assert!(!heavy[0].stable);
    }

    #[test]
    fn maxima_weak_drive_only_origin_stable() {
        let s = sys(CouplingKind::QuadraticMaxima, -0.2, 0.5, &[(1.0, -0.001)]);
        let r = solve_quadratic(&s).unwrap();
        assert!(4.0 * 0.001 * r[0].n_c < 1.0);
        assert!(r[0].stable);
        assert!(r.iter().skip(1).all(|b| !b.stable));
    }
}
