//! Output statistics of a linear interferometer in the Fock basis.

use alloc::{format, vec::Vec};
#[allow(unused_imports)]
use num_traits::Float;

use crate::dist::DistributionTable;
use crate::error::{Error, Result};
use crate::fock::{enumerate_fock, FockState};
use crate::matrix::ComplexMatrix;
use crate::permanent::permanent;

/// Maximum unitarity residual accepted for a transfer matrix.
pub const UNITARITY_TOL: f64 = 1e-8;

/// Occupations up to this value use exact integer factorials; beyond it
/// the normalization is accumulated in log space.
const EXACT_FACTORIAL_CAP: u8 = 10;

fn factorial_u64(k: u8) -> u64 {
    (2..=k as u64).product()
}

fn ln_factorial(k: u8) -> f64 {
    (2..=k as u64).map(|i| (i as f64).ln()).sum()
}

/// Product of occupation factorials for both patterns, as a plain value
/// when every occupation is small and via log space otherwise.
fn occupancy_norm(input: &FockState, output: &FockState) -> f64 {
    let occs = input
        .occupations()
        .iter()
        .chain(output.occupations())
        .copied();
    if occs.clone().all(|v| v <= EXACT_FACTORIAL_CAP) {
        occs.map(|v| factorial_u64(v) as f64).product()
    } else {
        occs.map(ln_factorial).sum::<f64>().exp()
    }
}

fn repeat_by_occupation(state: &FockState) -> Vec<usize> {
    let mut idx = Vec::with_capacity(state.photon_count() as usize);
    for (mode, &occ) in state.occupations().iter().enumerate() {
        for _ in 0..occ {
            idx.push(mode);
        }
    }
    idx
}

fn transition_probability(
    u: &ComplexMatrix,
    input: &FockState,
    output: &FockState,
) -> Result<f64> {
    let rows = repeat_by_occupation(output);
    let cols = repeat_by_occupation(input);
    let sub = u.gather(&rows, &cols);
    let per = permanent(&sub)?;
    Ok(per.norm_sqr() / occupancy_norm(input, output))
}

fn check_shapes(u: &ComplexMatrix, input: &FockState, output: &FockState) -> Result<()> {
    if !u.is_square() || u.rows() != input.modes() {
        return Err(Error::input(format!(
            "transfer matrix is {}x{} but the input has {} modes",
            u.rows(),
            u.cols(),
            input.modes()
        )));
    }
    if output.modes() != input.modes() {
        return Err(Error::input(format!(
            "output has {} modes, input has {}",
            output.modes(),
            input.modes()
        )));
    }
    if output.photon_count() != input.photon_count() {
        return Err(Error::input(format!(
            "photon number not conserved: input {}, output {}",
            input.photon_count(),
            output.photon_count()
        )));
    }
    Ok(())
}

/// Probability of measuring `output` when `input` is sent through the
/// interferometer `u`.
pub fn output_probability(
    u: &ComplexMatrix,
    input: &FockState,
    output: &FockState,
) -> Result<f64> {
    check_shapes(u, input, output)?;
    u.require_unitary(UNITARITY_TOL)?;
    transition_probability(u, input, output)
}

/// Full output distribution of `input` through `u`, over all occupation
/// patterns with the same photon number.
pub fn ideal_distribution(
    u: &ComplexMatrix,
    input: &FockState,
) -> Result<DistributionTable<FockState>> {
    if !u.is_square() || u.rows() != input.modes() {
        return Err(Error::input(format!(
            "transfer matrix is {}x{} but the input has {} modes",
            u.rows(),
            u.cols(),
            input.modes()
        )));
    }
    u.require_unitary(UNITARITY_TOL)?;
    let space = enumerate_fock(input.modes(), input.photon_count())?;
    let mut probs = Vec::with_capacity(space.len());
    for out in &space {
        probs.push(transition_probability(u, input, out)?);
    }
    DistributionTable::new(space, probs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{random_unitary, Complex64};
    use crate::mesh::{t_matrix, MzElement};
    use crate::rng::stream;
    use num_complex::Complex;

    #[test]
    fn identity_maps_input_to_itself() {
        let u = ComplexMatrix::identity(4);
        let input = FockState::new(vec![1, 0, 1, 0]);
        let dist = ideal_distribution(&u, &input).unwrap();
        for (pattern, p) in dist.iter() {
            if pattern == &input {
                assert!((p - 1.0).abs() < 1e-12);
            } else {
                assert!(p.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn balanced_splitter_cancels_coincidences() {
        let e = MzElement {
            top_mode: 0,
            theta: 0.0,
            theta_prime: core::f64::consts::FRAC_PI_2,
        };
        let u = t_matrix(2, &e).unwrap();
        let input = FockState::new(vec![1, 1]);
        let both = output_probability(&u, &input, &input).unwrap();
        assert!(both < 1e-12, "coincidence survived: {both}");
        let bunched = FockState::new(vec![2, 0]);
        assert!((output_probability(&u, &input, &bunched).unwrap() - 0.5).abs() < 1e-12);
        let other = FockState::new(vec![0, 2]);
        assert!((output_probability(&u, &input, &other).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn random_unitary_distributions_are_normalized() {
        let mut rng = stream(21, 0);
        for &(m, n) in &[(4usize, 2u32), (5, 2), (6, 3)] {
            let u = random_unitary(m, &mut rng);
            let input = crate::fock::alternating_input(m, n).unwrap();
            // `new` inside rejects totals off by more than 1e-9.
            let dist = ideal_distribution(&u, &input).unwrap();
            assert!((dist.total() - 1.0).abs() < 1e-10, "m = {m}, n = {n}");
        }
    }

    #[test]
    fn output_phase_screen_leaves_probabilities_alone() {
        let mut rng = stream(22, 0);
        let m = 5;
        let u = random_unitary(m, &mut rng);
        let mut screened = u.clone();
        for col in 0..m {
            for row in 0..m {
                let phase = Complex::new(0.0, 0.83 * (row as f64 + 1.0)).exp();
                let v: Complex64 = screened[(row, col)];
                screened[(row, col)] = phase * v;
            }
        }
        let input = crate::fock::alternating_input(m, 2).unwrap();
        let a = ideal_distribution(&u, &input).unwrap();
        let b = ideal_distribution(&screened, &input).unwrap();
        for (pa, pb) in a.probs().iter().zip(b.probs()) {
            assert!((pa - pb).abs() < 1e-12);
        }
    }

    #[test]
    fn vacuum_input_stays_vacuum() {
        let u = random_unitary(3, &mut stream(23, 0));
        let input = FockState::new(vec![0, 0, 0]);
        let dist = ideal_distribution(&u, &input).unwrap();
        assert_eq!(dist.len(), 1);
        assert!((dist.probs()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn photon_number_must_be_conserved() {
        let u = ComplexMatrix::identity(3);
        let input = FockState::new(vec![1, 1, 0]);
        let output = FockState::new(vec![1, 0, 0]);
        assert!(output_probability(&u, &input, &output).is_err());
    }

    #[test]
    fn non_unitary_matrices_are_rejected() {
        let mut u = ComplexMatrix::identity(3);
        u[(0, 0)] = Complex::new(1.5, 0.0);
        let input = FockState::new(vec![1, 0, 0]);
        assert!(ideal_distribution(&u, &input).is_err());
    }

    #[test]
    fn collision_outputs_carry_factorial_weights() {
        // Two photons into one arm of a generic splitter: the amplitude
        // doubles per bosonic enhancement, the factorial halves it back.
        let e = MzElement {
            top_mode: 0,
            theta: 0.7,
            theta_prime: 1.1,
        };
        let u = t_matrix(2, &e).unwrap();
        let input = FockState::new(vec![2, 0]);
        let dist = ideal_distribution(&u, &input).unwrap();
        assert!((dist.total() - 1.0).abs() < 1e-12);
        // p(2,0) = |u00|^4, p(1,1) = 2 |u00 u10|^2, p(0,2) = |u10|^4.
        let u00 = u[(0, 0)].norm_sqr();
        let u10 = u[(1, 0)].norm_sqr();
        let p20 = dist.prob_of(&FockState::new(vec![2, 0]));
        let p11 = dist.prob_of(&FockState::new(vec![1, 1]));
        let p02 = dist.prob_of(&FockState::new(vec![0, 2]));
        assert!((p20 - u00 * u00).abs() < 1e-12);
        assert!((p11 - 2.0 * u00 * u10).abs() < 1e-12);
        assert!((p02 - u10 * u10).abs() < 1e-12);
    }
}
