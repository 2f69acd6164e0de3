//! Small dense helpers: spectra, Lyapunov equations, symmetrization.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::{Error, Result};

pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<Complex64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    m.complex_eigenvalues().iter().copied().collect()
}

pub fn max_real_eigenvalue(m: &DMatrix<f64>) -> f64 {
    eigenvalues(m).iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    eigenvalues(m).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn symmetrize(v: &mut DMatrix<f64>) {
    let n = v.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let s = 0.5 * (v[(i, j)] + v[(j, i)]);
            v[(i, j)] = s;
            v[(j, i)] = s;
        }
    }
}

/// Largest absolute entry.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, x| a.max(libm::fabs(*x)))
}

/// M V + V Mᵀ + D
pub fn lyapunov_residual(m: &DMatrix<f64>, v: &DMatrix<f64>, d: &DMatrix<f64>) -> DMatrix<f64> {
    let mv = m * v;
    &mv + mv.transpose() + d
}

/// Solves M V + V Mᵀ + D = 0 for symmetric V through the vectorized system
/// (I⊗M + M⊗I) vec V = −vec D, with two rounds of iterative refinement.
pub fn solve_lyapunov(m: &DMatrix<f64>, d: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    if m.ncols() != n || d.nrows() != n || d.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: d.nrows() });
    }
    let max_real = max_real_eigenvalue(m);
    if max_real >= -1e-12 * max_abs(m).max(f64::MIN_POSITIVE) {
        return Err(Error::UnstableDrift { max_real });
    }
    let n2 = n * n;
    let mut a = DMatrix::<f64>::zeros(n2, n2);
    // Column-major vec: vec(MV) = (I⊗M) vec V, vec(VMᵀ) = (M⊗I) vec V.
    for col in 0..n {
        for i in 0..n {
            for k in 0..n {
                a[(col * n + i, col * n + k)] += m[(i, k)];
                a[(col * n + i, k * n + i)] += m[(col, k)];
            }
        }
    }
    let lu = a.lu();
    let solve = |rhs: &DMatrix<f64>| -> Result<DMatrix<f64>> {
        let b = DVector::from_iterator(n2, rhs.iter().map(|x| -x));
        let x = lu.solve(&b).ok_or(Error::UnstableDrift { max_real })?;
        Ok(DMatrix::from_column_slice(n, n, x.as_slice()))
    };
    let mut v = solve(d)?;
    symmetrize(&mut v);
    for _ in 0..2 {
        let r = lyapunov_residual(m, &v, d);
        if max_abs(&r) == 0.0 {
            break;
        }
        v += solve(&r)?;
        symmetrize(&mut v);
    }
    Ok(v)
}

/// Nearest rotation to a 2×2 matrix, as an angle.
pub fn nearest_rotation_angle(b: &DMatrix<f64>) -> f64 {
    libm::atan2(b[(1, 0)] - b[(0, 1)], b[(0, 0)] + b[(1, 1)])
}

pub fn rotation(theta: f64) -> DMatrix<f64> {
    let (s, c) = (libm::sin(theta), libm::cos(theta));
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

/// Matrix exponential by scaling and squaring of a degree-18 Taylor
/// polynomial. nalgebra only provides `exp` with its `std` feature.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = a.row_iter().map(|r| r.iter().map(|x| libm::fabs(*x)).sum::<f64>()).fold(0.0, f64::max);
    let squarings = if norm > 0.5 { libm::ceil(libm::log2(norm / 0.5)) as u32 } else { 0 };
    let scaled = a / libm::pow(2.0, squarings as f64);
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..=18 {
        term = &term * &scaled / k as f64;
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}
