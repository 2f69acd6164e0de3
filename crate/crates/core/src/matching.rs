//! Detunings at which two modes acquire the same effective frequency.

use alloc::vec::Vec;

use crate::backaction::{self_consistent_frequencies, BackactionSet, FrequencyMode, OperatingPoint};
use crate::model::{classify_regime, CouplingKind, RegimeFlag, SystemConfig};
use crate::roots::bisect;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Red,
    Blue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    SidebandCenter,
    Wing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dominant {
    ColdDamping,
    Coherent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchPoint {
    pub delta_bar: f64,
    pub nu: f64,
    pub side: Side,
    pub location: Location,
    pub dominant: Dominant,
    /// Common cross-coupling frequency Ω_c of the pair.
    pub omega_c: f64,
    /// Common cross-damping rate Γ_c of the pair.
    pub gamma_c: f64,
    /// ||Δ̄| − ν| / κ
    pub sideband_distance: f64,
    /// Coefficients re-evaluated with both modes at the common frequency.
    pub backaction: BackactionSet,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchOptions {
    /// Search interval; defaults to ±(3ω_max + 3κ).
    pub delta_range: Option<(f64, f64)>,
    pub tol: f64,
    pub grid_points: usize,
    /// Coherent when |Ω_c| exceeds this multiple of |Γ_c|.
    pub coherent_ratio: f64,
    /// Sideband-centre threshold in units of κ.
    pub center_threshold: f64,
}

impl MatchOptions {
    pub fn with_tol(tol: f64) -> Self {
        MatchOptions { delta_range: None, tol, grid_points: 4001, coherent_ratio: 3.0, center_threshold: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub points: Vec<MatchPoint>,
    /// The two frequency curves coincide over the whole range.
    pub degenerate: bool,
}

pub fn default_range(system: &SystemConfig) -> (f64, f64) {
    let w = system.modes.iter().fold(0.0f64, |a, m| a.max(m.omega));
    let r = 3.0 * w + 3.0 * system.kappa();
    (-r, r)
}

pub fn find_matching_detunings(system: &SystemConfig, pair: (usize, usize), opts: &MatchOptions) -> Result<MatchResult> {
    let (i, j) = pair;
    let n = system.n_modes();
    if i == j || i >= n || j >= n {
        return Err(Error::invalid("pair", alloc::format!("({i}, {j}) is not a pair of distinct modes out of {n}")));
    }
    if system.coupling_kind != CouplingKind::Linear {
        return Err(Error::WrongCouplingKind { expected: "Linear" });
    }
    if !(opts.tol > 0.0) || opts.grid_points < 2 {
        return Err(Error::invalid("match.tol", "tolerance must be > 0 and grid_points >= 2"));
    }
    let (lo, hi) = opts.delta_range.unwrap_or_else(|| default_range(system));
    if !(hi > lo) {
        return Err(Error::invalid("match.delta_range", "upper bound must exceed lower bound"));
    }
    let kappa = system.kappa();
    let diff = |d: f64| -> f64 {
        let b = self_consistent_frequencies(system, d, FrequencyMode::WeakCoupling).expect("linear system");
        b.nu[i] - b.nu[j]
    };

    let h = (hi - lo) / (opts.grid_points - 1) as f64;
    let grid: Vec<f64> = (0..opts.grid_points).map(|k| lo + h * k as f64).collect();
    for d in [lo, hi, 0.5 * (lo + hi)] {
        let r = classify_regime(system, d);
        if r.has(RegimeFlag::StrongCouplingWarning) {
            let (mode, ratio) = r
                .g_over_kappa
                .iter()
                .copied()
                .enumerate()
                .fold((0, 0.0), |acc, (m, g)| if g > acc.1 { (m, g) } else { acc });
            return Err(Error::StrongCouplingRegime { mode, ratio });
        }
    }
    let values: Vec<f64> = grid.iter().map(|d| diff(*d)).collect();
    let scale = system.modes[i].omega.max(system.modes[j].omega);
    if values.iter().all(|v| libm::fabs(*v) <= 1e-12 * scale) {
        return Ok(MatchResult { points: Vec::new(), degenerate: true });
    }

    let mut roots = Vec::new();
    for k in 0..grid.len() - 1 {
        let (a, b) = (grid[k], grid[k + 1]);
        let (fa, fb) = (values[k], values[k + 1]);
        if fa == 0.0 {
            roots.push(a);
        } else if fa * fb < 0.0 {
            roots.push(bisect(&diff, a, b, opts.tol));
        }
    }
    if *values.last().unwrap() == 0.0 {
        roots.push(hi);
    }

    let mut points = Vec::with_capacity(roots.len());
    for d in roots {
        let weak = self_consistent_frequencies(system, d, FrequencyMode::WeakCoupling)?;
        let nu = 0.5 * (weak.nu[i] + weak.nu[j]);
        let point = OperatingPoint::linear(system, d)?;
        let backaction = BackactionSet::matched_pair(system, &point, pair, nu);
        let omega_c = backaction.omega_c[(i, j)];
        let gamma_c = backaction.gamma_c[(i, j)];
        let sideband_distance = libm::fabs(libm::fabs(d) - nu) / kappa;
        points.push(MatchPoint {
            delta_bar: d,
            nu,
            side: if d < 0.0 { Side::Red } else { Side::Blue },
            location: if sideband_distance < opts.center_threshold { Location::SidebandCenter } else { Location::Wing },
            dominant: if libm::fabs(omega_c) > opts.coherent_ratio * libm::fabs(gamma_c) {
                Dominant::Coherent
            } else {
                Dominant::ColdDamping
            },
            omega_c,
            gamma_c,
            sideband_distance,
            backaction,
        });
    }
    Ok(MatchResult { points, degenerate: false })
}
