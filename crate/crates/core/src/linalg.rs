//! Small dense linear algebra: closed forms up to 2×2, cyclic Jacobi beyond.

use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Eigenvalues `(min, max)` of the symmetric matrix `[[a, b], [b, d]]`.
pub fn sym2_eigenvalues(a: f64, b: f64, d: f64) -> (f64, f64) {
    let mean = 0.5 * (a + d);
    let radius = libm::hypot(0.5 * (a - d), b);
    (mean - radius, mean + radius)
}

/// Largest real part among the roots of `λ² + c1·λ + c0`.
pub fn quadratic_max_real_root(c1: f64, c0: f64) -> f64 {
    let disc = c1 * c1 - 4.0 * c0;
    if disc >= 0.0 {
        0.5 * (-c1 + libm::sqrt(disc))
    } else {
        -0.5 * c1
    }
}

/// Eigenvalues of a symmetric `n × n` row-major matrix by cyclic Jacobi sweeps,
/// sorted ascending. Converges when the off-diagonal Frobenius norm drops
/// below `tol` times the matrix norm; fails after `max_sweeps`.
pub fn jacobi_eigenvalues(matrix: &[f64], n: usize, tol: f64, max_sweeps: usize) -> Result<Vec<f64>> {
    if matrix.len() != n * n {
        return Err(Error::Contract(format!("expected {} entries, got {}", n * n, matrix.len())));
    }
    let mut a = matrix.to_vec();
    let scale = libm::sqrt(a.iter().map(|v| v * v).sum::<f64>()).max(f64::MIN_POSITIVE);

    let off = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[i * n + j] * a[i * n + j];
                }
            }
        }
        libm::sqrt(s)
    };

    for _ in 0..max_sweeps {
        if off(&a) <= tol * scale {
            let mut eig: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
            eig.sort_by(f64::total_cmp);
            return Ok(eig);
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + libm::sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    Err(Error::Numerical(format!("Jacobi did not converge in {max_sweeps} sweeps")))
}
