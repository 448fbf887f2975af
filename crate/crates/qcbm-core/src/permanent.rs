//! Permanents of small complex matrices via the gray-coded
//! Balasubramanian-Bax-Franklin-Glynn formula, O(2^n · n).

use alloc::{format, vec::Vec};
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;

/// Hard cap on the matrix dimension accepted by [`permanent`].
pub const MAX_PERMANENT_DIM: usize = 20;

/// Permanent of a square matrix. The empty matrix has permanent 1.
pub fn permanent(a: &ComplexMatrix) -> Result<Complex64> {
    if !a.is_square() {
        return Err(Error::input(format!(
            "permanent: matrix is {}x{}, must be square",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    if n > MAX_PERMANENT_DIM {
        return Err(Error::resource(format!(
            "permanent: dimension {n} exceeds the cap {MAX_PERMANENT_DIM}"
        )));
    }
    if n == 0 {
        return Ok(Complex64::new(1.0, 0.0));
    }

    // Column signs δ ∈ {±1}^n with δ_0 pinned to +1. A gray-code walk flips
    // one sign per step, so the row sums r_i = Σ_j δ_j a_ij update in O(n).
    let mut row_sums: Vec<Complex64> = (0..n)
        .map(|i| (0..n).map(|j| a[(i, j)]).sum())
        .collect();
    let mut total: Complex64 = row_sums.iter().product();
    let mut sign = 1.0f64;
    let mut gray: u64 = 0;
    for g in 1u64..(1 << (n - 1)) {
        let next = g ^ (g >> 1);
        let bit = gray ^ next; // exactly one bit
        let j = bit.trailing_zeros() as usize + 1; // column 0 never flips
        let dir = if next & bit != 0 { -2.0 } else { 2.0 };
        for (i, r) in row_sums.iter_mut().enumerate() {
            *r += dir * a[(i, j)];
        }
        sign = -sign;
        let prod: Complex64 = row_sums.iter().product();
        total += sign * prod;
        gray = next;
    }
    Ok(total / 2f64.powi(n as i32 - 1))
}
