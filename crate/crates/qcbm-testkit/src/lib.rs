//! Reference implementations the test suites compare against. Everything
//! here favours the most literal formulation available over speed, and
//! deliberately shares no algorithmic machinery with the main crate:
//! permanents by permutation sums, state evolution by applying creation
//! operators term by term, norms by dense SVD, recycling by enumerating
//! loss events.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use qcbm_core::dist::DistributionTable;
use qcbm_core::fock::{ClickPattern, FockState};
use qcbm_core::{Complex64, ComplexMatrix};

/// Permanent as the literal sum over all permutations, walked with
/// Heap's algorithm. Exponential; for small oracle matrices only.
pub fn permanent_by_definition(a: &ComplexMatrix) -> Complex64 {
    assert!(a.is_square(), "permanent of a non-square matrix");
    let n = a.rows();
    if n == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let term = |perm: &[usize]| -> Complex64 {
        perm.iter()
            .enumerate()
            .map(|(i, &j)| a[(i, j)])
            .product()
    };
    let mut perm: Vec<usize> = (0..n).collect();
    let mut sum = term(&perm);
    let mut counters = vec![0usize; n];
    let mut i = 0;
    while i < n {
        if counters[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(counters[i], i);
            }
            sum += term(&perm);
            counters[i] += 1;
            i = 0;
        } else {
            counters[i] = 0;
            i += 1;
        }
    }
    sum
}

/// Full output distribution of `input` through the interferometer `u`,
/// built by feeding the photons in one at a time: each input photon in
/// mode j becomes the superposition sum_i u[i][j] applied on top of every
/// partial state, with the bosonic sqrt(v_i + 1) enhancement. Input
/// multiplicities are divided out at the end.
pub fn dense_output_distribution(
    u: &ComplexMatrix,
    input: &FockState,
) -> BTreeMap<FockState, f64> {
    let m = input.modes();
    assert!(u.is_square() && u.rows() == m, "matrix/input shape mismatch");
    let mut amplitudes: BTreeMap<Vec<u8>, Complex64> = BTreeMap::new();
    amplitudes.insert(vec![0u8; m], Complex64::new(1.0, 0.0));
    let mut input_norm = 1.0f64;
    for (j, &occ) in input.occupations().iter().enumerate() {
        for k in 0..occ {
            input_norm *= (k + 1) as f64;
            let mut next: BTreeMap<Vec<u8>, Complex64> = BTreeMap::new();
            for (state, amp) in &amplitudes {
                for i in 0..m {
                    let enhancement = ((state[i] + 1) as f64).sqrt();
                    let mut grown = state.clone();
                    grown[i] += 1;
                    *next.entry(grown).or_insert(Complex64::new(0.0, 0.0)) +=
                        amp * u[(i, j)] * enhancement;
                }
            }
            amplitudes = next;
        }
    }
    let scale = 1.0 / input_norm.sqrt();
    amplitudes
        .into_iter()
        .map(|(occ, amp)| (FockState::new(occ), (amp * scale).norm_sqr()))
        .collect()
}

/// Largest singular value through nalgebra's dense SVD.
pub fn svd_spectral_norm(a: &ComplexMatrix) -> f64 {
    let m = DMatrix::from_fn(a.rows(), a.cols(), |i, j| a[(i, j)]);
    m.svd(false, false)
        .singular_values
        .iter()
        .fold(0.0f64, |acc, &s| acc.max(s))
}

/// Click-recycling statistics obtained by enumerating every single-loss
/// event: each collision-free outcome loses each of its photons in turn
/// with equal weight, and the surviving pattern is lifted back to every
/// completion. Contributions landing on the event's own origin are
/// signal, the rest interference.
pub struct SingleLossRecycling {
    pub recycled: DistributionTable<ClickPattern>,
    /// Share of the recycled mass that is signal: `1 / (m - n + 1)`.
    pub p1: f64,
    /// Normalized interference part; absent when no event produces one.
    pub interference: Option<DistributionTable<ClickPattern>>,
    pub signal_total: f64,
    pub interference_total: f64,
}

pub fn single_loss_recycling(reference: &DistributionTable<ClickPattern>) -> SingleLossRecycling {
    let space: Vec<ClickPattern> = reference.space().to_vec();
    let index_of = |pattern: &ClickPattern| -> usize {
        space.binary_search(pattern).expect("pattern outside the space")
    };
    let mut signal = vec![0.0f64; space.len()];
    let mut interference = vec![0.0f64; space.len()];
    for (origin, p) in reference.iter() {
        let n = origin.click_count() as f64;
        for lost in origin.support() {
            let weight = p / n;
            let observed = origin.without_click(lost).expect("lost mode must be set");
            for mode in 0..observed.modes() {
                if let Some(completion) = observed.with_click(mode) {
                    if completion == *origin {
                        signal[index_of(&completion)] += weight;
                    } else {
                        interference[index_of(&completion)] += weight;
                    }
                }
            }
        }
    }
    let signal_total: f64 = signal.iter().sum();
    let interference_total: f64 = interference.iter().sum();
    let combined: Vec<f64> = signal
        .iter()
        .zip(&interference)
        .map(|(s, c)| s + c)
        .collect();
    let recycled = DistributionTable::from_weights(space.clone(), combined)
        .expect("recycled weights must carry mass");
    let interference = if interference_total > 1e-15 {
        Some(
            DistributionTable::from_weights(space, interference)
                .expect("interference weights carry mass"),
        )
    } else {
        None
    };
    SingleLossRecycling {
        recycled,
        p1: signal_total / (signal_total + interference_total),
        interference,
        signal_total,
        interference_total,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_permanent_by_hand() {
        let a = ComplexMatrix::from_fn(2, 2, |i, j| {
            Complex64::new(1.0 + (2 * i + j) as f64, 0.0)
        });
        // [[1, 2], [3, 4]]: 1*4 + 2*3 = 10.
        let per = permanent_by_definition(&a);
        assert!((per - Complex64::new(10.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn identity_circuit_keeps_the_input() {
        let input = FockState::new(vec![1, 0, 2]);
        let dist = dense_output_distribution(&ComplexMatrix::identity(3), &input);
        let p = dist.get(&input).copied().unwrap_or(0.0);
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spectral_norm_of_a_diagonal() {
        let mut a = ComplexMatrix::zeros(2, 2);
        a[(0, 0)] = Complex64::new(3.0, 0.0);
        a[(1, 1)] = Complex64::new(-1.0, 0.0);
        assert!((svd_spectral_norm(&a) - 3.0).abs() < 1e-12);
    }
}
