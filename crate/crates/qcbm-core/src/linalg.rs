//! Hermitian eigen-machinery for the unitary-dilation construction: a
//! principal square root of a positive-semidefinite Hermitian matrix via
//! a cyclic Jacobi eigensolver on the real-symmetric embedding.

use alloc::{vec, vec::Vec};
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;

/// Eigenvalues this far below zero are treated as round-off and clamped;
/// anything lower fails. Sized for inputs like `I - A†A` whose scale is
/// only known to the spectral-norm solver's 1e-10 relative tolerance.
const PSD_CLAMP: f64 = 1e-9;

/// Off-diagonal Frobenius mass, relative to the total, at which the
/// Jacobi sweep stops.
const JACOBI_TOL: f64 = 1e-14;

const MAX_JACOBI_SWEEPS: usize = 60;

/// Dense real symmetric eigendecomposition by cyclic Jacobi rotations.
/// Returns the eigenvalues and the orthogonal matrix with eigenvectors
/// as columns, in no particular order.
fn jacobi_symmetric(mut s: Vec<Vec<f64>>) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = s.len();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let total: f64 = s
        .iter()
        .flat_map(|row| row.iter())
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt();
    if total == 0.0 {
        return Ok((vec![0.0; n], v));
    }

    for _ in 0..MAX_JACOBI_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += 2.0 * s[p][q] * s[p][q];
            }
        }
        if off.sqrt() <= JACOBI_TOL * total {
            let eigenvalues = (0..n).map(|i| s[i][i]).collect();
            return Ok((eigenvalues, v));
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = s[p][q];
                if apq.abs() <= f64::EPSILON * total {
                    continue;
                }
                let tau = (s[q][q] - s[p][p]) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let skp = s[k][p];
                    let skq = s[k][q];
                    s[k][p] = c * skp - sn * skq;
                    s[k][q] = sn * skp + c * skq;
                }
                for k in 0..n {
                    let spk = s[p][k];
                    let sqk = s[q][k];
                    s[p][k] = c * spk - sn * sqk;
                    s[q][k] = sn * spk + c * sqk;
                }
                for row in v.iter_mut() {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = c * vp - sn * vq;
                    row[q] = sn * vp + c * vq;
                }
            }
        }
    }
    Err(Error::numerical(
        "Jacobi eigensolver failed to converge within its sweep budget",
    ))
}

/// Principal square root of a Hermitian positive-semidefinite matrix.
/// The input is symmetrized, embedded as the real symmetric matrix
/// `[[X, -Y], [Y, X]]` (with `H = X + iY`), eigendecomposed, clamped at
/// zero within `PSD_CLAMP`, and mapped back. Eigenvalues below the clamp
/// window mean the input was not positive semidefinite.
pub(crate) fn hermitian_sqrt_psd(h: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !h.is_square() {
        return Err(Error::input("matrix square root needs a square matrix"));
    }
    let n = h.rows();
    let mut s = vec![vec![0.0; 2 * n]; 2 * n];
    for i in 0..n {
        for j in 0..n {
            // Hermitian part only, so round-off asymmetry cannot leak in.
            let x = 0.5 * (h[(i, j)].re + h[(j, i)].re);
            let y = 0.5 * (h[(i, j)].im - h[(j, i)].im);
            s[i][j] = x;
            s[n + i][n + j] = x;
            s[i][n + j] = -y;
            s[n + i][j] = y;
        }
    }
    let (eigenvalues, v) = jacobi_symmetric(s)?;
    let mut roots = Vec::with_capacity(eigenvalues.len());
    for &lambda in &eigenvalues {
        if lambda < -PSD_CLAMP {
            return Err(Error::numerical(alloc::format!(
                "matrix is not positive semidefinite: eigenvalue {lambda:e}"
            )));
        }
        roots.push(lambda.max(0.0).sqrt());
    }
    let dim = 2 * n;
    let mut out = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut re = 0.0;
            let mut im = 0.0;
            for k in 0..dim {
                re += v[i][k] * roots[k] * v[j][k];
                im += v[n + i][k] * roots[k] * v[j][k];
            }
            out[(i, j)] = crate::Complex64::new(re, im);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::random_complex_gaussian;
    use crate::rng::stream;
    use crate::Complex64;

    fn diag(entries: &[f64]) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(entries.len(), entries.len());
        for (i, &e) in entries.iter().enumerate() {
            m[(i, i)] = Complex64::new(e, 0.0);
        }
        m
    }

    #[test]
    fn square_root_of_a_diagonal_matrix() {
        let root = hermitian_sqrt_psd(&diag(&[4.0, 9.0, 0.25])).unwrap();
        let want = diag(&[2.0, 3.0, 0.5]);
        for i in 0..3 {
            for j in 0..3 {
                assert!((root[(i, j)] - want[(i, j)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn square_root_squares_back() {
        let mut rng = stream(140, 0);
        for n in 2..=5 {
            let g = random_complex_gaussian(n, n, &mut rng);
            let h = &g.dagger() * &g;
            let root = hermitian_sqrt_psd(&h).unwrap();
            let back = &root * &root;
            for i in 0..n {
                for j in 0..n {
                    assert!(
                        (back[(i, j)] - h[(i, j)]).norm() < 1e-9 * (1.0 + h.max_abs()),
                        "n = {n}, entry ({i}, {j})"
                    );
                    assert!((root[(i, j)] - root[(j, i)].conj()).norm() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn negative_spectrum_is_rejected() {
        let err = hermitian_sqrt_psd(&diag(&[1.0, -0.5])).unwrap_err();
        assert!(err.message().contains("positive semidefinite"));
    }

    #[test]
    fn round_off_negatives_clamp_to_zero() {
        let root = hermitian_sqrt_psd(&diag(&[1.0, -1e-10])).unwrap();
        assert!((root[(0, 0)].re - 1.0).abs() < 1e-12);
        assert_eq!(root[(1, 1)], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn zero_matrix_roots_to_zero() {
        let root = hermitian_sqrt_psd(&ComplexMatrix::zeros(3, 3)).unwrap();
        assert_eq!(root.max_abs(), 0.0);
    }
}
