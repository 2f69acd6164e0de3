//! Optical input noise: vacuum or ideal broadband squeezed vacuum.

use num_complex::Complex64;

use crate::model::lorentz_denominator;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel {
    Vacuum,
    /// Ideal squeezing with photon-number parameter `n` and angle `theta_s`,
    /// so that |M| = √(N(N+1)) and arg M = −2θ_s.
    Squeezed { n: f64, theta_s: f64 },
}

impl NoiseModel {
    pub fn squeezed(n: f64, theta_s: f64) -> Result<Self> {
        if !(n.is_finite() && n >= 0.0) {
            return Err(Error::invalid("noise.N", "must be finite and >= 0"));
        }
        if !theta_s.is_finite() {
            return Err(Error::invalid("noise.theta_s", "must be finite"));
        }
        Ok(NoiseModel::Squeezed { n, theta_s })
    }

    /// Squeezed noise whose angle sits `offset` away from the cavity angle θ_c
    /// at `delta_bar`.
    pub fn squeezed_relative(n: f64, offset: f64, delta_bar: f64, kappa: f64) -> Result<Self> {
        Self::squeezed(n, cavity_angle(delta_bar, kappa) + offset)
    }

    pub fn n(&self) -> f64 {
        match *self {
            NoiseModel::Vacuum => 0.0,
            NoiseModel::Squeezed { n, .. } => n,
        }
    }

    pub fn theta_s(&self) -> f64 {
        match *self {
            NoiseModel::Vacuum => 0.0,
            NoiseModel::Squeezed { theta_s, .. } => theta_s,
        }
    }

    pub fn m(&self) -> Complex64 {
        match *self {
            NoiseModel::Vacuum => Complex64::new(0.0, 0.0),
            NoiseModel::Squeezed { n, theta_s } => {
                Complex64::from_polar(libm::sqrt(n * (n + 1.0)), -2.0 * theta_s)
            }
        }
    }
}

/// θ_c = arg(iΔ̄ + κ/2).
pub fn cavity_angle(delta_bar: f64, kappa: f64) -> f64 {
    libm::atan2(delta_bar, 0.5 * kappa)
}

/// Dimensionless factor |M| cos 2(θ_s − θ_c) + N + ½.
pub fn squeezing_factor(noise: &NoiseModel, delta_bar: f64, kappa: f64) -> f64 {
    match *noise {
        NoiseModel::Vacuum => 0.5,
        NoiseModel::Squeezed { n, theta_s } => {
            let m = libm::sqrt(n * (n + 1.0));
            m * libm::cos(2.0 * (theta_s - cavity_angle(delta_bar, kappa))) + n + 0.5
        }
    }
}

/// Symmetrized spectral weight S_FF of the effective optical noise at
/// the mechanical frequencies, before any calibration constant.
pub fn effective_noise_coefficient(noise: &NoiseModel, delta_bar: f64, kappa: f64) -> f64 {
    kappa / lorentz_denominator(delta_bar, kappa) * squeezing_factor(noise, delta_bar, kappa)
}

/// S_FF averaged over the two mechanical sidebands Δ̄ ± ν. Reduces to
/// [`effective_noise_coefficient`] for ν ≪ κ; unlike it, stays consistent
/// with the radiative damping when the sidebands are resolved.
pub fn sideband_noise_coefficient(noise: &NoiseModel, delta_bar: f64, nu: f64, kappa: f64) -> f64 {
    let lor = |x: f64| kappa / lorentz_denominator(x, kappa);
    0.5 * (lor(delta_bar + nu) + lor(delta_bar - nu)) * squeezing_factor(noise, delta_bar, kappa)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::{FRAC_PI_2, PI};
    use proptest::prelude::*;

    #[test]
    fn vacuum_is_half() {
        let s = effective_noise_coefficient(&NoiseModel::Vacuum, 0.3, 2.0);
        assert!((s - 2.0 / (0.09 + 1.0) * 0.5).abs() < 1e-15);
    }

    #[test]
    fn vacuum_at_half_kappa() {
        let kappa = 3.0;
        let s = effective_noise_coefficient(&NoiseModel::Vacuum, -kappa / 2.0, kappa);
        assert!((s - 1.0 / kappa).abs() < 1e-15);
    }

    #[test]
    fn sideband_average_has_doppler_limit() {
        let noise = NoiseModel::squeezed(3.0, 0.4).unwrap();
        let white = effective_noise_coefficient(&noise, -0.7, 1.0);
        let avg = sideband_noise_coefficient(&noise, -0.7, 1e-4, 1.0);
        assert!((avg / white - 1.0).abs() < 1e-7);
        assert_eq!(sideband_noise_coefficient(&noise, -0.7, 0.0, 1.0), white);
    }

    #[test]
    fn optimal_phase_factors() {
        let (d, k) = (-1.7, 1.0);
        let n1 = NoiseModel::squeezed_relative(1.0, FRAC_PI_2, d, k).unwrap();
        assert!((squeezing_factor(&n1, d, k) - (1.5 - 2f64.sqrt())).abs() < 1e-14);
        let n10 = NoiseModel::squeezed_relative(10.0, FRAC_PI_2, d, k).unwrap();
        let f = squeezing_factor(&n10, d, k);
        assert!((f - (10.5 - 110f64.sqrt())).abs() < 1e-13);
        assert!((0.5 / f - 42.0).abs() < 1.0);
    }

    #[test]
    fn m_has_ideal_modulus() {
        let m = NoiseModel::squeezed(3.0, 0.4).unwrap().m();
        assert!((m.norm() - 12f64.sqrt()).abs() < 1e-14);
        assert!((m.arg() + 0.8).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn nonnegative_and_pi_periodic(n in 0.0f64..50.0, th in -10.0f64..10.0, d in -5.0f64..5.0) {
            let a = NoiseModel::squeezed(n, th).unwrap();
            let b = NoiseModel::squeezed(n, th + PI).unwrap();
            let sa = effective_noise_coefficient(&a, d, 1.0);
            let sb = effective_noise_coefficient(&b, d, 1.0);
            prop_assert!(sa >= -1e-12 * (n + 1.0));
            prop_assert!((sa - sb).abs() <= 1e-9 * (n + 1.0));
        }

        #[test]
        fn minimum_at_quarter_turn(n in 0.1f64..50.0, off in -1.5f64..1.5, d in -5.0f64..5.0) {
            let best = NoiseModel::squeezed_relative(n, FRAC_PI_2, d, 1.0).unwrap();
            let other = NoiseModel::squeezed_relative(n, off, d, 1.0).unwrap();
            prop_assert!(squeezing_factor(&best, d, 1.0) <= squeezing_factor(&other, d, 1.0) + 1e-12);
        }
    }
}
