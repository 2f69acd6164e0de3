//! System configuration, validation and regime classification.

use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingKind {
    Linear,
    QuadraticMaxima,
    QuadraticMinima,
}

impl CouplingKind {
    pub fn is_quadratic(self) -> bool {
        !matches!(self, CouplingKind::Linear)
    }
}

/// One mechanical oscillator. `coupling` is the single-photon constant,
/// g₀ for linear coupling or g₀⁽²⁾ for quadratic coupling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MechanicalMode {
    pub omega: f64,
    pub gamma: f64,
    pub coupling: f64,
    pub n_th: f64,
}

/// How the cavity is pumped. A fixed photon number keeps the amplified
/// couplings g_j = g₀,j √n̄_c constant while the detuning is swept.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Drive {
    Amplitude(f64),
    PhotonNumber(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityConfig {
    pub kappa: f64,
    pub delta_c: f64,
    pub drive: Drive,
}

impl CavityConfig {
    /// Intracavity photon number at effective detuning `delta_bar`.
    pub fn photon_number(&self, delta_bar: f64) -> f64 {
        match self.drive {
            Drive::PhotonNumber(n) => n,
            Drive::Amplitude(eta) => eta * eta / lorentz_denominator(delta_bar, self.kappa),
        }
    }

    /// Drive amplitude that produces the configured photon number at `delta_bar`.
    pub fn eta(&self, delta_bar: f64) -> f64 {
        match self.drive {
            Drive::Amplitude(eta) => eta,
            Drive::PhotonNumber(n) => libm::sqrt(n * lorentz_denominator(delta_bar, self.kappa)),
        }
    }
}

#[inline]
pub(crate) fn lorentz_denominator(delta: f64, kappa: f64) -> f64 {
    delta * delta + 0.25 * kappa * kappa
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub cavity: CavityConfig,
    pub modes: Vec<MechanicalMode>,
    pub coupling_kind: CouplingKind,
    /// Branch of the displaced quadratic-maxima steady state reported for
    /// each mode. Empty means `Plus` everywhere.
    pub sign_choice: Vec<Sign>,
}

impl SystemConfig {
    pub fn new(cavity: CavityConfig, modes: Vec<MechanicalMode>, coupling_kind: CouplingKind) -> Result<Self> {
        let s = SystemConfig { cavity, modes, coupling_kind, sign_choice: Vec::new() };
        s.validate()?;
        Ok(s)
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn kappa(&self) -> f64 {
        self.cavity.kappa
    }

    pub fn sign(&self, j: usize) -> Sign {
        self.sign_choice.get(j).copied().unwrap_or(Sign::Plus)
    }

    /// Amplified linear couplings g_j = g₀,j √n̄_c at `delta_bar`.
    pub fn effective_couplings(&self, delta_bar: f64) -> Vec<f64> {
        let root = libm::sqrt(self.cavity.photon_number(delta_bar));
        self.modes.iter().map(|m| m.coupling * root).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let c = &self.cavity;
        if !(c.kappa.is_finite() && c.kappa > 0.0) {
            return Err(Error::invalid("cavity.kappa", "must be finite and > 0"));
        }
        if !c.delta_c.is_finite() {
            return Err(Error::invalid("cavity.delta_c", "must be finite"));
        }
        match c.drive {
            Drive::Amplitude(eta) if !(eta.is_finite() && eta >= 0.0) => {
                return Err(Error::invalid("cavity.eta", "must be finite and >= 0"));
            }
            Drive::PhotonNumber(n) if !(n.is_finite() && n >= 0.0) => {
                return Err(Error::invalid("cavity.n_c", "must be finite and >= 0"));
            }
            _ => {}
        }
        if self.modes.is_empty() {
            return Err(Error::invalid("modes", "at least one mechanical mode is required"));
        }
        for (j, m) in self.modes.iter().enumerate() {
            if !(m.omega.is_finite() && m.omega > 0.0) {
                return Err(Error::invalid(&format!("modes[{j}].omega"), "must be finite and > 0"));
            }
            if !(m.gamma.is_finite() && m.gamma >= 0.0) {
                return Err(Error::invalid(&format!("modes[{j}].gamma"), "must be finite and >= 0"));
            }
            if !(m.n_th.is_finite() && m.n_th >= 0.0) {
                return Err(Error::invalid(&format!("modes[{j}].n_th"), "must be finite and >= 0"));
            }
            if !m.coupling.is_finite() {
                return Err(Error::invalid(&format!("modes[{j}].coupling"), "must be finite"));
            }
        }
        let bad_sign = match self.coupling_kind {
            CouplingKind::Linear => None,
            CouplingKind::QuadraticMaxima => self.modes.iter().position(|m| m.coupling >= 0.0),
            CouplingKind::QuadraticMinima => self.modes.iter().position(|m| m.coupling <= 0.0),
        };
        if let Some(j) = bad_sign {
            return Err(Error::invalid(
                &format!("modes[{j}].coupling"),
                format!(
                    "coupling_kind/sign mismatch: {:?} requires all couplings {}",
                    self.coupling_kind,
                    if self.coupling_kind == CouplingKind::QuadraticMaxima { "< 0" } else { "> 0" }
                ),
            ));
        }
        if !self.sign_choice.is_empty() && self.sign_choice.len() != self.modes.len() {
            return Err(Error::invalid(
                "sign_choice",
                format!("has {} entries for {} modes", self.sign_choice.len(), self.modes.len()),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeFlag {
    ResolvedSideband,
    Doppler,
    WeakCoupling,
    StrongCouplingWarning,
    BlueDetunedWarning,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeReport {
    pub g_over_kappa: Vec<f64>,
    pub omega_over_kappa: Vec<f64>,
    pub flags: Vec<RegimeFlag>,
}

impl RegimeReport {
    pub fn has(&self, flag: RegimeFlag) -> bool {
        self.flags.contains(&flag)
    }
}

pub fn classify_regime(system: &SystemConfig, delta_bar: f64) -> RegimeReport {
    let kappa = system.kappa();
    let g = system.effective_couplings(delta_bar);
    let g_over_kappa: Vec<f64> = g.iter().map(|g| libm::fabs(*g) / kappa).collect();
    let omega_over_kappa: Vec<f64> = system.modes.iter().map(|m| m.omega / kappa).collect();

    let mut flags = Vec::new();
    let min_w = omega_over_kappa.iter().copied().fold(f64::INFINITY, f64::min);
    let max_w = omega_over_kappa.iter().copied().fold(0.0, f64::max);
    if min_w > 1.0 {
        flags.push(RegimeFlag::ResolvedSideband);
    }
    if max_w < 1.0 {
        flags.push(RegimeFlag::Doppler);
    }
    if g_over_kappa.iter().any(|r| *r > 0.5) {
        flags.push(RegimeFlag::StrongCouplingWarning);
    } else {
        flags.push(RegimeFlag::WeakCoupling);
    }
    if delta_bar > 0.0 {
        flags.push(RegimeFlag::BlueDetunedWarning);
    }
    RegimeReport { g_over_kappa, omega_over_kappa, flags }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::hz_to_angular as w;
    use alloc::vec;

    fn two_mode(f1: f64, f2: f64, fk: f64, g1: f64, g2: f64) -> SystemConfig {
        let mode = |f, g| MechanicalMode { omega: w(f), gamma: 0.0, coupling: w(g), n_th: 0.0 };
        SystemConfig::new(
            CavityConfig { kappa: w(fk), delta_c: 0.0, drive: Drive::PhotonNumber(1.0) },
            vec![mode(f1, g1), mode(f2, g2)],
            CouplingKind::Linear,
        )
        .unwrap()
    }

    #[test]
    fn fig2_is_resolved_and_weak() {
        let s = two_mode(20e6, 19.95e6, 1e6, 0.3e6, 0.12e6);
        let r = classify_regime(&s, -w(20e6));
        assert!(r.has(RegimeFlag::ResolvedSideband));
        assert!(r.has(RegimeFlag::WeakCoupling));
        assert!(!r.has(RegimeFlag::Doppler));
        assert!(!r.has(RegimeFlag::BlueDetunedWarning));
    }

    #[test]
    fn fig4_is_doppler() {
        let s = two_mode(100e3, 93e3, 1e6, 90e3, 50e3);
        let r = classify_regime(&s, -w(300e3));
        assert!(r.has(RegimeFlag::Doppler));
        assert!(!r.has(RegimeFlag::ResolvedSideband));
    }

    #[test]
    fn strong_coupling_and_blue_flags() {
        let s = two_mode(100e3, 93e3, 1e6, 600e3, 50e3);
        let r = classify_regime(&s, 1.0);
        assert!(r.has(RegimeFlag::StrongCouplingWarning));
        assert!(!r.has(RegimeFlag::WeakCoupling));
        assert!(r.has(RegimeFlag::BlueDetunedWarning));
    }

    #[test]
    fn mixed_quadratic_signs_rejected() {
        let mut s = two_mode(1e5, 1e5, 1e6, 1.0, -1.0);
        s.coupling_kind = CouplingKind::QuadraticMinima;
        let err = s.validate().unwrap_err();
        assert!(alloc::string::ToString::to_string(&err).contains("coupling_kind/sign mismatch"));
        s.coupling_kind = CouplingKind::QuadraticMaxima;
        assert!(s.validate().is_err());
    }

    #[test]
    fn invalid_fields_are_named() {
        let mut s = two_mode(1e5, 1e5, 1e6, 1.0, 1.0);
        s.modes[1].gamma = -1.0;
        match s.validate().unwrap_err() {
            Error::Invalid { field, .. } => assert_eq!(field, "modes[1].gamma"),
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn photon_number_drive_inverts_lorentzian() {
        let c = CavityConfig { kappa: 2.0, delta_c: 0.0, drive: Drive::PhotonNumber(7.0) };
        let eta = c.eta(-3.0);
        let back = CavityConfig { drive: Drive::Amplitude(eta), ..c }.photon_number(-3.0);
        assert!((back - 7.0).abs() < 1e-12);
    }

    proptest::proptest! {
        #[test]
        fn sideband_flags_exclusive(ws in proptest::collection::vec(0.01f64..100.0, 1..5)) {
            let modes = ws.iter().map(|w| MechanicalMode { omega: *w, gamma: 0.0, coupling: 0.0, n_th: 0.0 }).collect();
            let s = SystemConfig::new(
                CavityConfig { kappa: 1.0, delta_c: 0.0, drive: Drive::Amplitude(1.0) },
                modes,
                CouplingKind::Linear,
            ).unwrap();
            let r = classify_regime(&s, -0.5);
            proptest::prop_assert!(!(r.has(RegimeFlag::ResolvedSideband) && r.has(RegimeFlag::Doppler)));
            proptest::prop_assert!(r.has(RegimeFlag::WeakCoupling) != r.has(RegimeFlag::StrongCouplingWarning));
        }
    }
}
