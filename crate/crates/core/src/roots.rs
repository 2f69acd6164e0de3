//! Scalar root finding.

use alloc::vec;
use alloc::vec::Vec;

/// Bisection on a bracket with `f(a)` and `f(b)` of opposite sign, until the
/// bracket is narrower than `tol`.
pub fn bisect<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        if libm::fabs(b - a) <= tol {
            break;
        }
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Real roots of x³ + a x² + b x + c, ascending, each polished by bisection.
pub fn cubic_real_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    use core::f64::consts::PI;

    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let shift = -a / 3.0;
    let disc = q * q / 4.0 + p * p * p / 27.0;
    let mut roots: Vec<f64> = if disc > 0.0 {
        let s = libm::sqrt(disc);
        vec![libm::cbrt(-q / 2.0 + s) + libm::cbrt(-q / 2.0 - s) + shift]
    } else if p == 0.0 {
        vec![shift]
    } else {
        let r = libm::sqrt(-p / 3.0);
        let arg = (3.0 * q / (2.0 * p) / r).clamp(-1.0, 1.0);
        let phi = libm::acos(arg) / 3.0;
        (0..3).map(|k| 2.0 * r * libm::cos(phi - 2.0 * PI * k as f64 / 3.0) + shift).collect()
    };
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());

    let f = |x: f64| ((x + a) * x + b) * x + c;
    let scale = 1.0 + libm::fabs(a) + libm::sqrt(libm::fabs(b)) + libm::cbrt(libm::fabs(c));
    let n = roots.len();
    let mut polished = Vec::with_capacity(n);
    for i in 0..n {
        let x = roots[i];
        let lo = if i > 0 { 0.5 * (roots[i - 1] + x) } else { x - scale };
        let hi = if i + 1 < n { 0.5 * (x + roots[i + 1]) } else { x + scale };
        let (flo, fhi) = (f(lo), f(hi));
        if flo * fhi < 0.0 {
            polished.push(bisect(&f, lo, hi, 0.0));
        } else {
            polished.push(x);
        }
    }
    polished.dedup_by(|x, y| libm::fabs(*x - *y) <= 1e-14 * scale);
    polished
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn three_known_roots() {
        // (x-1)(x-2)(x+3) = x³ - 7x + 6
        let r = cubic_real_roots(0.0, -7.0, 6.0);
        assert_eq!(r.len(), 3);
        for (x, e) in r.iter().zip([-3.0, 1.0, 2.0]) {
            assert!((x - e).abs() < 1e-14);
        }
    }

    #[test]
    fn single_root() {
        let r = cubic_real_roots(0.0, 1.0, -2.0);
        assert_eq!(r.len(), 1);
        assert!((r[0] - 1.0).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn roots_have_small_residual(x1 in -10.0f64..10.0, x2 in -10.0f64..10.0, x3 in -10.0f64..10.0) {
            let a = -(x1 + x2 + x3);
            let b = x1 * x2 + x2 * x3 + x1 * x3;
            let c = -x1 * x2 * x3;
            for r in cubic_real_roots(a, b, c) {
                let res = ((r + a) * r + b) * r + c;
                prop_assert!(res.abs() < 1e-9 * (1.0 + c.abs() + b.abs() + a.abs()) * 100.0);
            }
        }
    }
}
