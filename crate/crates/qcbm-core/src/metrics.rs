//! Distances between discrete distributions on a shared outcome space.

use alloc::format;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Additive floor applied to model bins inside the KL logarithm, keeping
/// the divergence finite when the model misses a populated bin.
pub const KL_SMOOTHING: f64 = 1e-12;

fn check_pair(p: &[f64], q: &[f64]) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::input(format!(
            "distributions have different sizes: {} and {}",
            p.len(),
            q.len()
        )));
    }
    if p.is_empty() {
        return Err(Error::input("distributions must be nonempty"));
    }
    if p.iter().chain(q).any(|&x| !x.is_finite() || x < 0.0) {
        return Err(Error::input(
            "distribution entries must be finite and nonnegative",
        ));
    }
    Ok(())
}

/// KL divergence `Σ p ln(p / (q + eps))` in nats. Terms with `p = 0`
/// contribute nothing; `eps` smooths only the model side `q`.
pub fn kl_divergence(p: &[f64], q: &[f64], eps: f64) -> Result<f64> {
    check_pair(p, q)?;
    if !eps.is_finite() || eps < 0.0 {
        return Err(Error::input("smoothing must be finite and nonnegative"));
    }
    let mut acc = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi > 0.0 {
            let denom = qi + eps;
            if denom <= 0.0 {
                return Err(Error::numerical(
                    "model assigns zero mass to a populated bin and no smoothing was given",
                ));
            }
            acc += pi * (pi / denom).ln();
        }
    }
    Ok(acc)
}

/// Total variation distance `½ Σ |p − q|`.
pub fn tvd(p: &[f64], q: &[f64]) -> Result<f64> {
    check_pair(p, q)?;
    Ok(p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand::Rng;

    fn random_dist(len: usize, seed: u64) -> Vec<f64> {
        let mut rng = stream(seed, 0);
        let raw: Vec<f64> = (0..len).map(|_| rng.gen::<f64>() + 1e-3).collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|x| x / total).collect()
    }

    #[test]
    fn identical_distributions_have_zero_distance() {
        let p = random_dist(20, 51);
        assert_eq!(tvd(&p, &p).unwrap(), 0.0);
        let kl = kl_divergence(&p, &p, KL_SMOOTHING).unwrap();
        assert!(kl.abs() < 1e-9, "kl {kl}");
    }

    #[test]
    fn disjoint_distributions_are_maximally_far() {
        let p = vec![1.0, 0.0];
        let q = vec![0.0, 1.0];
        assert_eq!(tvd(&p, &q).unwrap(), 1.0);
        let kl = kl_divergence(&p, &q, KL_SMOOTHING).unwrap();
        assert!((kl - (1.0 / KL_SMOOTHING).ln()).abs() < 1e-9);
    }

    #[test]
    fn kl_is_nonnegative_up_to_smoothing() {
        for seed in 0..10u64 {
            let p = random_dist(15, 100 + seed);
            let q = random_dist(15, 200 + seed);
            let kl = kl_divergence(&p, &q, KL_SMOOTHING).unwrap();
            assert!(kl > -1e-9, "seed {seed}: kl {kl}");
        }
    }

    #[test]
    fn tvd_is_symmetric_and_bounded() {
        for seed in 0..10u64 {
            let p = random_dist(12, 300 + seed);
            let q = random_dist(12, 400 + seed);
            let d = tvd(&p, &q).unwrap();
            assert_eq!(d, tvd(&q, &p).unwrap());
            assert!((0.0..=1.0).contains(&d));
        }
    }

    #[test]
    fn kl_without_smoothing_rejects_empty_model_bins() {
        let p = vec![0.5, 0.5];
        let q = vec![1.0, 0.0];
        assert!(kl_divergence(&p, &q, 0.0).is_err());
        assert!(kl_divergence(&p, &q, KL_SMOOTHING).is_ok());
    }

    #[test]
    fn mismatched_or_invalid_inputs_are_rejected() {
        assert!(tvd(&[0.5], &[0.5, 0.5]).is_err());
        assert!(tvd(&[], &[]).is_err());
        assert!(kl_divergence(&[0.5, f64::NAN], &[0.5, 0.5], 0.0).is_err());
        assert!(kl_divergence(&[0.5, 0.5], &[-0.1, 1.1], 0.0).is_err());
    }

    #[test]
    fn hand_computed_values() {
        let p = [0.75, 0.25];
        let q = [0.5, 0.5];
        let want = 0.75 * (0.75f64 / 0.5).ln() + 0.25 * (0.25f64 / 0.5).ln();
        assert!((kl_divergence(&p, &q, 0.0).unwrap() - want).abs() < 1e-15);
        assert!((tvd(&p, &q).unwrap() - 0.25).abs() < 1e-15);
    }
}
