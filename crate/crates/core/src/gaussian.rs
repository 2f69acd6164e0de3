//! Gaussian states over quadratures (X_1, P_1, X_2, P_2, …) with vacuum
//! variance 1/4, and the single-mode Uhlmann fidelity.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::linalg::{eigenvalues, symmetrize};
use crate::{Error, Result};

pub const VACUUM_VARIANCE: f64 = 0.25;

/// Tolerance below 1/4 accepted for symplectic eigenvalues.
pub const PHYSICALITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GaussianState {
    pub fn new(mean: DVector<f64>, mut cov: DMatrix<f64>) -> Result<Self> {
        let n = mean.len();
        if !n.is_multiple_of(2) || cov.nrows() != n || cov.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: cov.nrows() });
        }
        symmetrize(&mut cov);
        Ok(GaussianState { mean, cov })
    }

    pub fn vacuum(n_modes: usize) -> Self {
        Self::thermal(n_modes, 0.0)
    }

    pub fn thermal(n_modes: usize, nbar: f64) -> Self {
        let v = (2.0 * nbar + 1.0) * VACUUM_VARIANCE;
        GaussianState {
            mean: DVector::zeros(2 * n_modes),
            cov: DMatrix::from_diagonal_element(2 * n_modes, 2 * n_modes, v),
        }
    }

    /// Single-mode state with diagonal quadrature variances.
    pub fn squeezed(var_x: f64, var_p: f64) -> Self {
        GaussianState { mean: DVector::zeros(2), cov: DMatrix::from_diagonal(&DVector::from_vec(alloc::vec![var_x, var_p])) }
    }

    /// Single-mode coherent state |α⟩ with ⟨X⟩ = Re α, ⟨P⟩ = Im α.
    pub fn coherent(re: f64, im: f64) -> Self {
        GaussianState {
            mean: DVector::from_vec(alloc::vec![re, im]),
            cov: DMatrix::from_diagonal_element(2, 2, VACUUM_VARIANCE),
        }
    }

    /// Tensor product of independent states.
    pub fn product(parts: &[GaussianState]) -> Self {
        let n: usize = parts.iter().map(|p| p.mean.len()).sum();
        let mut mean = DVector::zeros(n);
        let mut cov = DMatrix::zeros(n, n);
        let mut off = 0;
        for p in parts {
            let k = p.mean.len();
            mean.rows_mut(off, k).copy_from(&p.mean);
            cov.view_mut((off, off), (k, k)).copy_from(&p.cov);
            off += k;
        }
        GaussianState { mean, cov }
    }

    pub fn n_modes(&self) -> usize {
        self.mean.len() / 2
    }

    /// Reduced state of mode `j`.
    pub fn mode(&self, j: usize) -> GaussianState {
        GaussianState {
            mean: self.mean.rows(2 * j, 2).into_owned(),
            cov: self.cov.view((2 * j, 2 * j), (2, 2)).into_owned(),
        }
    }

    /// ⟨b†b⟩ for mode `j`.
    pub fn phonon_number(&self, j: usize) -> f64 {
        let (x, p) = (self.mean[2 * j], self.mean[2 * j + 1]);
        self.cov[(2 * j, 2 * j)] + self.cov[(2 * j + 1, 2 * j + 1)] + x * x + p * p - 0.5
    }

    pub fn symplectic_eigenvalues(&self) -> Vec<f64> {
        symplectic_eigenvalues(&self.cov)
    }

    pub fn min_symplectic(&self) -> f64 {
        self.symplectic_eigenvalues().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn check_physical(&self) -> Result<()> {
        let min_symplectic = self.min_symplectic();
        if !(min_symplectic >= VACUUM_VARIANCE - PHYSICALITY_TOL) {
            return Err(Error::UnphysicalState { min_symplectic });
        }
        Ok(())
    }
}

/// Moduli of the eigenvalues of ΩV, one per mode, ascending.
pub fn symplectic_eigenvalues(cov: &DMatrix<f64>) -> Vec<f64> {
    let n = cov.nrows();
    let mut omega_v = DMatrix::zeros(n, n);
    for j in 0..n / 2 {
        for c in 0..n {
            omega_v[(2 * j, c)] = cov[(2 * j + 1, c)];
            omega_v[(2 * j + 1, c)] = -cov[(2 * j, c)];
        }
    }
    if n == 2 {
        // ΩV has eigenvalues ±i√det V.
        return alloc::vec![libm::sqrt(cov[(0, 0)] * cov[(1, 1)] - cov[(0, 1)] * cov[(1, 0)])];
    }
    let mut im: Vec<f64> = eigenvalues(&omega_v).iter().map(|z| libm::fabs(z.im)).collect();
    im.sort_by(|a, b| a.partial_cmp(b).unwrap());
    im.chunks(2).map(|c| 0.5 * (c[0] + c[1])).collect()
}

fn det2(m: &DMatrix<f64>) -> f64 {
    m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]
}

/// Squared Uhlmann fidelity [Tr √(√ρ₁ ρ₂ √ρ₁)]² of two single-mode
/// Gaussian states.
pub fn gaussian_fidelity(s1: &GaussianState, s2: &GaussianState) -> Result<f64> {
    if s1.mean.len() != 2 || s2.mean.len() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: s1.mean.len().max(s2.mean.len()) });
    }
    s1.check_physical()?;
    s2.check_physical()?;
    if s1 == s2 {
        return Ok(1.0);
    }
    // Convert to the convention with vacuum covariance I/2.
    let a = &s1.cov * 2.0;
    let b = &s2.cov * 2.0;
    let sum = &a + &b;
    let big_delta = det2(&sum);
    let small_delta = 4.0 * (det2(&a) - 0.25) * (det2(&b) - 0.25);
    let small_delta = small_delta.max(0.0);
    let d = (&s1.mean - &s2.mean) * core::f64::consts::SQRT_2;
    let inv = DMatrix::from_row_slice(2, 2, &[sum[(1, 1)], -sum[(0, 1)], -sum[(1, 0)], sum[(0, 0)]]) / big_delta;
    let quad = (d.transpose() * inv * &d)[(0, 0)];
    let f = libm::exp(-0.5 * quad) / (libm::sqrt(big_delta + small_delta) - libm::sqrt(small_delta));
    Ok(f.clamp(0.0, 1.0))
}
