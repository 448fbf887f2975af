//! Randomized additive-error permanent estimation: sign-vector sampling
//! of the Glynn formula, Hoeffding-sized sample budgets, squared-value
//! variants, and the photonic route that reads |Per|^2 off a dilated
//! interferometer's output probability.

use alloc::{format, vec, vec::Vec};
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::dist::sample_categorical;
use crate::error::{Error, Result};
use crate::fock::FockState;
use crate::linalg::hermitian_sqrt_psd;
use crate::matrix::ComplexMatrix;
use crate::output::ideal_distribution;
use crate::rng::{stream, ChaCha8Rng};
use crate::Complex64;

/// Power-iteration settings for the spectral norm.
const NORM_REL_TOL: f64 = 1e-10;
const NORM_MAX_ITERS: usize = 10_000;
/// Iterations without convergence before the start vector is redrawn.
const NORM_RESTART_EVERY: usize = 2_000;
/// Seed of the solver's internal start-vector stream; fixed so the norm
/// of a given matrix is the same in every run.
const NORM_SEED: u64 = 0x9e37_79b9_7f4a_7c15;

/// Exhaustive sign-vector averages walk all 2^n vectors; beyond this the
/// walk is refused.
pub const GLYNN_EXHAUSTIVE_CAP: usize = 16;

/// A randomized permanent estimate with its accuracy contract: with
/// probability at least 1 - delta the true value lies within `bound` of
/// `value` (squared variants report real values in `value.re`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PermEstimate {
    pub value: Complex64,
    pub samples_used: u64,
    pub epsilon: f64,
    pub bound: f64,
}

fn require_square_nonempty(a: &ComplexMatrix) -> Result<usize> {
    if !a.is_square() {
        return Err(Error::input(format!(
            "permanent estimation needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if a.rows() == 0 {
        return Err(Error::input("permanent estimation needs a nonempty matrix"));
    }
    Ok(a.rows())
}

fn l2_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest singular value, by power iteration on `A†A` with a fixed
/// internal start-vector stream. Stagnant runs redraw the start vector;
/// exceeding the iteration cap is an error.
pub fn spectral_norm(a: &ComplexMatrix) -> Result<f64> {
    if a.rows() == 0 || a.cols() == 0 {
        return Err(Error::input("spectral norm of an empty matrix"));
    }
    if a.max_abs() == 0.0 {
        return Ok(0.0);
    }
    let b = &a.dagger() * a;
    let dim = b.rows();
    let mut rng = stream(NORM_SEED, 0);
    let draw = |rng: &mut ChaCha8Rng| -> Vec<Complex64> {
        let v: Vec<Complex64> = (0..dim)
            .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let norm = l2_norm(&v);
        v.into_iter().map(|z| z / norm).collect()
    };
    let mut v = draw(&mut rng);
    let mut previous = f64::NAN;
    for iter in 1..=NORM_MAX_ITERS {
        let w = b.mul_vec(&v);
        let rayleigh: f64 = v
            .iter()
            .zip(&w)
            .map(|(vi, wi)| (vi.conj() * wi).re)
            .sum();
        let norm_w = l2_norm(&w);
        if norm_w == 0.0 {
            // Start vector fell in the kernel; try another.
            v = draw(&mut rng);
            previous = f64::NAN;
            continue;
        }
        if (rayleigh - previous).abs() <= NORM_REL_TOL * rayleigh.abs().max(f64::MIN_POSITIVE)
        {
            return Ok(rayleigh.max(0.0).sqrt());
        }
        previous = rayleigh;
        v = w.into_iter().map(|z| z / norm_w).collect();
        if iter % NORM_RESTART_EVERY == 0 {
            v = draw(&mut rng);
            previous = f64::NAN;
        }
    }
    Err(Error::numerical(
        "spectral norm power iteration exceeded its iteration cap",
    ))
}

fn glynn_value(a: &ComplexMatrix, x: &[f64]) -> Complex64 {
    let n = a.rows();
    let sign: f64 = x.iter().product();
    let mut value = Complex64::new(sign, 0.0);
    for i in 0..n {
        let mut row = Complex64::new(0.0, 0.0);
        for (j, &xj) in x.iter().enumerate() {
            row += a[(i, j)] * xj;
        }
        value *= row;
    }
    value
}

/// One term of the sign-vector average `Per(a) = E_x[Πx_j · Π_i (a x)_i]`
/// over x uniform on {-1, +1}^n.
pub fn glynn_sample(a: &ComplexMatrix, x: &[f64]) -> Result<Complex64> {
    let n = require_square_nonempty(a)?;
    if x.len() != n {
        return Err(Error::input(format!(
            "sign vector length {} does not match matrix size {n}",
            x.len()
        )));
    }
    if x.iter().any(|&s| s != 1.0 && s != -1.0) {
        return Err(Error::input("sign vector entries must be +1 or -1"));
    }
    Ok(glynn_value(a, x))
}

/// The exact average over all 2^n sign vectors; equals the permanent.
pub fn glynn_exhaustive(a: &ComplexMatrix) -> Result<Complex64> {
    let n = require_square_nonempty(a)?;
    if n > GLYNN_EXHAUSTIVE_CAP {
        return Err(Error::resource(format!(
            "exhaustive sign average needs 2^{n} terms; the cap is 2^{GLYNN_EXHAUSTIVE_CAP}"
        )));
    }
    let mut sum = Complex64::new(0.0, 0.0);
    let mut x = vec![1.0; n];
    for mask in 0u64..(1u64 << n) {
        for (j, xj) in x.iter_mut().enumerate() {
            *xj = if mask >> j & 1 == 1 { -1.0 } else { 1.0 };
        }
        sum += glynn_value(a, &x);
    }
    Ok(sum / (1u64 << n) as f64)
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if !(p.is_finite() && 0.0 < p && p < 1.0) {
        return Err(Error::input(format!("{name} must lie strictly in (0, 1), got {p}")));
    }
    Ok(())
}

/// Samples needed for additive error `epsilon * ||a||^n` with failure
/// probability `delta`: `ceil((2 / epsilon^2) ln(4 / delta))`, one
/// Hoeffding budget each for the real and imaginary parts.
pub fn gurvits_samples_for(epsilon: f64, delta: f64) -> Result<u64> {
    check_probability("epsilon", epsilon)?;
    check_probability("delta", delta)?;
    let t = (2.0 / (epsilon * epsilon)) * (4.0 / delta).ln();
    Ok((t.ceil() as u64).max(1))
}

/// The epsilon a given sample count buys, inverting the budget formula.
fn epsilon_for_samples(samples: u64, delta: f64) -> Result<f64> {
    check_probability("delta", delta)?;
    if samples == 0 {
        return Err(Error::input("sample count must be positive"));
    }
    Ok((2.0 / samples as f64 * (4.0 / delta).ln()).sqrt())
}

fn glynn_mean(a: &ComplexMatrix, samples: u64, rng: &mut ChaCha8Rng) -> Complex64 {
    let n = a.rows();
    let mut x = vec![1.0; n];
    let mut sum = Complex64::new(0.0, 0.0);
    for _ in 0..samples {
        for xj in x.iter_mut() {
            *xj = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        }
        sum += glynn_value(a, &x);
    }
    sum / samples as f64
}

fn gurvits_with_budget(
    a: &ComplexMatrix,
    samples: u64,
    epsilon: f64,
    rng: &mut ChaCha8Rng,
) -> Result<PermEstimate> {
    let n = require_square_nonempty(a)?;
    let norm = spectral_norm(a)?;
    let value = glynn_mean(a, samples, rng);
    Ok(PermEstimate {
        value,
        samples_used: samples,
        epsilon,
        bound: epsilon * norm.powi(n as i32),
    })
}

/// Sign-vector sampling estimate of `Per(a)` to additive error
/// `epsilon * ||a||^n` with probability at least `1 - delta`.
pub fn gurvits_estimate(
    a: &ComplexMatrix,
    epsilon: f64,
    delta: f64,
    rng: &mut ChaCha8Rng,
) -> Result<PermEstimate> {
    let samples = gurvits_samples_for(epsilon, delta)?;
    gurvits_with_budget(a, samples, epsilon, rng)
}

/// Same estimator with the sample count chosen directly; the reported
/// epsilon is what that budget buys at failure probability `delta`.
pub fn gurvits_estimate_with_samples(
    a: &ComplexMatrix,
    samples: u64,
    delta: f64,
    rng: &mut ChaCha8Rng,
) -> Result<PermEstimate> {
    let epsilon = epsilon_for_samples(samples, delta)?;
    gurvits_with_budget(a, samples, epsilon, rng)
}

fn squared_from(base: PermEstimate, n: usize, norm: f64) -> PermEstimate {
    let epsilon = base.epsilon;
    PermEstimate {
        value: Complex64::new(base.value.norm_sqr(), 0.0),
        samples_used: base.samples_used,
        epsilon,
        bound: epsilon * (2.0 + epsilon) * norm.powi(2 * n as i32),
    }
}

/// Squared-magnitude variant: the sign-vector mean is squared, and the
/// additive-error contract widens to `epsilon (2 + epsilon) ||a||^(2n)`.
pub fn squared_estimate(
    a: &ComplexMatrix,
    epsilon: f64,
    delta: f64,
    rng: &mut ChaCha8Rng,
) -> Result<PermEstimate> {
    let n = require_square_nonempty(a)?;
    let norm = spectral_norm(a)?;
    let base = gurvits_estimate(a, epsilon, delta, rng)?;
    Ok(squared_from(base, n, norm))
}

/// Squared-magnitude variant with the sample count chosen directly.
pub fn squared_estimate_with_samples(
    a: &ComplexMatrix,
    samples: u64,
    delta: f64,
    rng: &mut ChaCha8Rng,
) -> Result<PermEstimate> {
    let n = require_square_nonempty(a)?;
    let norm = spectral_norm(a)?;
    let base = gurvits_estimate_with_samples(a, samples, delta, rng)?;
    Ok(squared_from(base, n, norm))
}

/// Embeds `a / ||a||` as the top-left block of a `2n x 2n` unitary
/// `[[A, (I - AA†)^½], [(I - A†A)^½, -A†]]`. Fails on the zero matrix,
/// which admits no rescaling.
pub fn unitary_dilation(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = require_square_nonempty(a)?;
    let norm = spectral_norm(a)?;
    if norm == 0.0 {
        return Err(Error::degenerate("the zero matrix cannot be rescaled into a unitary"));
    }
    let scaled = a.scale(Complex64::new(1.0 / norm, 0.0));
    let dag = scaled.dagger();
    let right = &scaled * &dag;
    let left = &dag * &scaled;
    let gap = |m: &ComplexMatrix| {
        ComplexMatrix::from_fn(n, n, |i, j| {
            let delta = if i == j {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
            delta - m[(i, j)]
        })
    };
    let top_right = hermitian_sqrt_psd(&gap(&right))?;
    let bottom_left = hermitian_sqrt_psd(&gap(&left))?;
    Ok(ComplexMatrix::from_fn(2 * n, 2 * n, |i, j| {
        match (i < n, j < n) {
            (true, true) => scaled[(i, j)],
            (true, false) => top_right[(i, j - n)],
            (false, true) => bottom_left[(i - n, j)],
            (false, false) => -dag[(i - n, j - n)],
        }
    }))
}

/// Estimates `|Per(a)|^2` by preparing one photon in each of the first n
/// modes of the dilated interferometer and counting how often all n come
/// out where they went in; the frequency times `||a||^(2n)` is the
/// estimate, accurate to `epsilon * ||a||^(2n)` with probability
/// `1 - delta` at `epsilon = sqrt(ln(2/delta) / (2 shots))`.
pub fn sampler_estimate(
    a: &ComplexMatrix,
    shots: u64,
    delta: f64,
    rng: &mut ChaCha8Rng,
) -> Result<PermEstimate> {
    let n = require_square_nonempty(a)?;
    if shots == 0 {
        return Err(Error::input("sampling needs at least one shot"));
    }
    check_probability("delta", delta)?;
    let epsilon = ((2.0 / delta).ln() / (2.0 * shots as f64)).sqrt();
    let norm = spectral_norm(a)?;
    if norm == 0.0 {
        return Ok(PermEstimate {
            value: Complex64::new(0.0, 0.0),
            samples_used: 0,
            epsilon,
            bound: 0.0,
        });
    }
    let u = unitary_dilation(a)?;
    let mut occupations = vec![1u8; n];
    occupations.extend(core::iter::repeat_n(0u8, n));
    let input = FockState::new(occupations);
    let ideal = ideal_distribution(&u, &input)?;
    let counts = sample_categorical(&ideal, shots, rng)?;
    let hits = counts.get(&input).copied().unwrap_or(0);
    let p_hat = hits as f64 / shots as f64;
    let scale = norm.powi(2 * n as i32);
    Ok(PermEstimate {
        value: Complex64::new(scale * p_hat, 0.0),
        samples_used: shots,
        epsilon,
        bound: epsilon * scale,
    })
}
