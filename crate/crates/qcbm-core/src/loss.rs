//! Uniform per-photon loss: sampling with it and small exact references.
//!
//! Loss is applied to the interferometer output, which is equivalent to
//! losing photons anywhere along the path when the rate is mode-independent.

use alloc::{collections::BTreeMap, format, vec::Vec};
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::dist::{CumulativeSampler, DistributionTable};
use crate::error::{Error, Result};
use crate::fock::{binomial, enumerate_clicks_up_to, enumerate_fock_up_to, ClickPattern, FockState};

/// Mode-count cap for the exact lossy reference distributions.
pub const EXACT_LOSSY_MODE_CAP: usize = 10;
/// Photon-count cap for the exact lossy reference distributions.
pub const EXACT_LOSSY_PHOTON_CAP: u32 = 4;

/// Uniform loss channel: each photon is independently lost with
/// probability `eta`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossModel {
    eta: f64,
}

impl LossModel {
    pub fn new(eta: f64) -> Result<Self> {
        if !eta.is_finite() || !(0.0..=1.0).contains(&eta) {
            return Err(Error::input(format!(
                "loss rate must lie in [0, 1], got {eta}"
            )));
        }
        Ok(Self { eta })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Per-photon survival probability.
    pub fn survival(&self) -> f64 {
        1.0 - self.eta
    }

    pub fn is_lossless(&self) -> bool {
        self.eta == 0.0
    }
}

/// Click-pattern tallies from threshold detectors after loss.
#[derive(Clone, Debug, PartialEq)]
pub struct LossyCounts {
    modes: usize,
    total_shots: u64,
    counts: BTreeMap<ClickPattern, u64>,
    survivor_photons: BTreeMap<u32, u64>,
}

impl LossyCounts {
    /// Builds from raw tallies. The survivor-photon histogram may be empty
    /// (unknown); when present its total must match the click total.
    pub fn new(
        modes: usize,
        counts: BTreeMap<ClickPattern, u64>,
        survivor_photons: BTreeMap<u32, u64>,
    ) -> Result<Self> {
        if counts.keys().any(|p| p.modes() != modes) {
            return Err(Error::input("click pattern width differs from mode count"));
        }
        if counts.values().any(|&c| c == 0) {
            return Err(Error::input("zero-count entries are not stored"));
        }
        let total_shots: u64 = counts.values().sum();
        let survivor_total: u64 = survivor_photons.values().sum();
        if !survivor_photons.is_empty() && survivor_total != total_shots {
            return Err(Error::input(format!(
                "survivor histogram covers {survivor_total} shots, counts cover {total_shots}"
            )));
        }
        Ok(Self {
            modes,
            total_shots,
            counts,
            survivor_photons,
        })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn total_shots(&self) -> u64 {
        self.total_shots
    }

    pub fn counts(&self) -> &BTreeMap<ClickPattern, u64> {
        &self.counts
    }

    /// Histogram of how many photons survived each shot, when tracked.
    pub fn survivor_photons(&self) -> &BTreeMap<u32, u64> {
        &self.survivor_photons
    }

    /// Entries whose click count is exactly `clicks`.
    pub fn stratum(&self, clicks: u32) -> BTreeMap<ClickPattern, u64> {
        self.counts
            .iter()
            .filter(|(p, _)| p.click_count() == clicks)
            .map(|(p, &c)| (p.clone(), c))
            .collect()
    }

    pub fn stratum_shots(&self, clicks: u32) -> u64 {
        self.counts
            .iter()
            .filter(|(p, _)| p.click_count() == clicks)
            .map(|(_, &c)| c)
            .sum()
    }

    /// Tallies grouped by click count.
    pub fn click_histogram(&self) -> BTreeMap<u32, u64> {
        let mut hist = BTreeMap::new();
        for (p, &c) in &self.counts {
            *hist.entry(p.click_count()).or_insert(0) += c;
        }
        hist
    }
}

/// Samples `shots` detector patterns: an ideal output state per shot,
/// then independent per-photon survival, then thresholding.
pub fn lossy_sample(
    ideal: &DistributionTable<FockState>,
    loss: &LossModel,
    shots: u64,
    rng: &mut impl Rng,
) -> Result<LossyCounts> {
    let sampler = CumulativeSampler::new(ideal)?;
    let modes = ideal.space()[0].modes();
    let eta = loss.eta();
    let mut counts: BTreeMap<ClickPattern, u64> = BTreeMap::new();
    let mut survivor_photons: BTreeMap<u32, u64> = BTreeMap::new();
    let mut survivors = Vec::with_capacity(modes);
    for _ in 0..shots {
        let state = &ideal.space()[sampler.draw(rng)];
        survivors.clear();
        let mut total: u32 = 0;
        for &occ in state.occupations() {
            let mut kept: u8 = 0;
            for _ in 0..occ {
                if rng.gen::<f64>() >= eta {
                    kept += 1;
                }
            }
            total += kept as u32;
            survivors.push(kept.min(1));
        }
        let pattern = ClickPattern::new(survivors.clone())?;
        *counts.entry(pattern).or_insert(0) += 1;
        *survivor_photons.entry(total).or_insert(0) += 1;
    }
    LossyCounts::new(modes, counts, survivor_photons)
}

fn check_exact_caps(modes: usize, photons: u32) -> Result<()> {
    if modes > EXACT_LOSSY_MODE_CAP || photons > EXACT_LOSSY_PHOTON_CAP {
        return Err(Error::resource(format!(
            "exact lossy reference is capped at {EXACT_LOSSY_MODE_CAP} modes and \
             {EXACT_LOSSY_PHOTON_CAP} photons; got {modes} modes, {photons} photons"
        )));
    }
    Ok(())
}

/// Enumerates the survivor patterns of `state` (componentwise at most it),
/// handing each to `visit` with its loss-channel weight.
fn for_each_survivor(
    state: &FockState,
    eta: f64,
    visit: &mut impl FnMut(FockState, f64),
) -> Result<()> {
    let occs = state.occupations();
    let modes = occs.len();
    let mut current = alloc::vec![0u8; modes];
    visit_mode(occs, eta, 0, 1.0, &mut current, visit)?;
    Ok(())
}

fn visit_mode(
    occs: &[u8],
    eta: f64,
    mode: usize,
    weight: f64,
    current: &mut Vec<u8>,
    visit: &mut impl FnMut(FockState, f64),
) -> Result<()> {
    if mode == occs.len() {
        visit(FockState::new(current.clone()), weight);
        return Ok(());
    }
    let t = occs[mode] as u64;
    for v in 0..=t {
        let ways = binomial(t, v)? as f64;
        let w = weight * ways * (1.0 - eta).powi(v as i32) * eta.powi((t - v) as i32);
        current[mode] = v as u8;
        visit_mode(occs, eta, mode + 1, w, current, visit)?;
    }
    current[mode] = 0;
    Ok(())
}

/// Exact distribution of surviving occupation patterns (before
/// thresholding), over all patterns with at most the input photon number.
pub fn exact_survivor_distribution(
    ideal: &DistributionTable<FockState>,
    loss: &LossModel,
) -> Result<DistributionTable<FockState>> {
    let modes = ideal.space()[0].modes();
    let photons = ideal.space()[0].photon_count();
    check_exact_caps(modes, photons)?;
    let mut acc: BTreeMap<FockState, f64> = BTreeMap::new();
    for (state, p) in ideal.iter() {
        if p == 0.0 {
            continue;
        }
        for_each_survivor(state, loss.eta(), &mut |survivor, w| {
            *acc.entry(survivor).or_insert(0.0) += p * w;
        })?;
    }
    let space = enumerate_fock_up_to(modes, photons)?;
    let probs = space.iter().map(|s| acc.get(s).copied().unwrap_or(0.0)).collect();
    DistributionTable::new(space, probs)
}

/// Exact distribution of detector click patterns after loss.
pub fn exact_lossy_distribution(
    ideal: &DistributionTable<FockState>,
    loss: &LossModel,
) -> Result<DistributionTable<ClickPattern>> {
    let survivors = exact_survivor_distribution(ideal, loss)?;
    let modes = survivors.space()[0].modes();
    let photons = ideal.space()[0].photon_count();
    let mut acc: BTreeMap<ClickPattern, f64> = BTreeMap::new();
    for (state, p) in survivors.iter() {
        *acc.entry(state.threshold()).or_insert(0.0) += p;
    }
    let space = enumerate_clicks_up_to(modes, photons)?;
    let probs = space.iter().map(|s| acc.get(s).copied().unwrap_or(0.0)).collect();
    DistributionTable::new(space, probs)
}

/// Probability mass function of Binomial(n, survival): how many of `n`
/// photons survive the channel.
pub fn binomial_survival_pmf(n: u32, survival: f64) -> Vec<f64> {
    (0..=n)
        .map(|k| {
            let ways = binomial(n as u64, k as u64).unwrap_or(0) as f64;
            ways * survival.powi(k as i32) * (1.0 - survival).powi((n - k) as i32)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::alternating_input;
    use crate::matrix::{random_unitary, ComplexMatrix};
    use crate::output::ideal_distribution;
    use crate::rng::stream;

    fn ideal_for(m: usize, n: u32, seed: u64) -> DistributionTable<FockState> {
        let u = random_unitary(m, &mut stream(seed, 0));
        ideal_distribution(&u, &alternating_input(m, n).unwrap()).unwrap()
    }

    #[test]
    fn loss_rate_is_validated() {
        assert!(LossModel::new(-0.1).is_err());
        assert!(LossModel::new(1.5).is_err());
        assert!(LossModel::new(f64::NAN).is_err());
        assert!(LossModel::new(0.0).unwrap().is_lossless());
        assert_eq!(LossModel::new(1.0).unwrap().survival(), 0.0);
    }

    #[test]
    fn lossless_sampling_keeps_every_photon() {
        let ideal = ideal_for(5, 2, 31);
        let loss = LossModel::new(0.0).unwrap();
        let counts = lossy_sample(&ideal, &loss, 2000, &mut stream(32, 0)).unwrap();
        assert_eq!(counts.total_shots(), 2000);
        assert_eq!(counts.survivor_photons().len(), 1);
        assert_eq!(counts.survivor_photons()[&2], 2000);
    }

    #[test]
    fn full_loss_yields_vacuum_clicks() {
        let ideal = ideal_for(4, 2, 33);
        let loss = LossModel::new(1.0).unwrap();
        let counts = lossy_sample(&ideal, &loss, 500, &mut stream(34, 0)).unwrap();
        let vacuum = ClickPattern::new(vec![0; 4]).unwrap();
        assert_eq!(counts.counts().len(), 1);
        assert_eq!(counts.counts()[&vacuum], 500);
        assert_eq!(counts.survivor_photons()[&0], 500);
    }

    #[test]
    fn survivor_count_marginal_is_binomial() {
        let ideal = ideal_for(6, 3, 35);
        let loss = LossModel::new(0.37).unwrap();
        let survivors = exact_survivor_distribution(&ideal, &loss).unwrap();
        let mut by_count = [0.0; 4];
        for (s, p) in survivors.iter() {
            by_count[s.photon_count() as usize] += p;
        }
        let pmf = binomial_survival_pmf(3, loss.survival());
        for (got, want) in by_count.iter().zip(&pmf) {
            assert!((got - want).abs() < 1e-12, "got {got}, want {want}");
        }
    }

    #[test]
    fn identity_circuit_lossy_distribution_in_closed_form() {
        let u = ComplexMatrix::identity(4);
        let input = FockState::new(vec![1, 0, 1, 0]);
        let ideal = ideal_distribution(&u, &input).unwrap();
        let loss = LossModel::new(0.3).unwrap();
        let lossy = exact_lossy_distribution(&ideal, &loss).unwrap();
        let cases = [
            (vec![1, 0, 1, 0], 0.49),
            (vec![1, 0, 0, 0], 0.21),
            (vec![0, 0, 1, 0], 0.21),
            (vec![0, 0, 0, 0], 0.09),
        ];
        let mut covered = 0.0;
        for (bits, want) in cases {
            let p = lossy.prob_of(&ClickPattern::new(bits).unwrap());
            assert!((p - want).abs() < 1e-12);
            covered += p;
        }
        assert!((covered - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sampled_frequencies_track_the_exact_distribution() {
        let ideal = ideal_for(5, 2, 36);
        let loss = LossModel::new(0.4).unwrap();
        let exact = exact_lossy_distribution(&ideal, &loss).unwrap();
        let shots = 200_000u64;
        let counts = lossy_sample(&ideal, &loss, shots, &mut stream(37, 0)).unwrap();
        let mut tvd = 0.0;
        for (pattern, p) in exact.iter() {
            let f = counts.counts().get(pattern).copied().unwrap_or(0) as f64 / shots as f64;
            tvd += (p - f).abs();
        }
        tvd /= 2.0;
        assert!(tvd < 0.01, "TVD {tvd}");

        let pmf = binomial_survival_pmf(2, loss.survival());
        for (k, want) in pmf.iter().enumerate() {
            let got = counts
                .survivor_photons()
                .get(&(k as u32))
                .copied()
                .unwrap_or(0) as f64;
            let sigma = (shots as f64 * want * (1.0 - want)).sqrt();
            assert!(
                (got - shots as f64 * want).abs() < 5.0 * sigma,
                "photon count {k}"
            );
        }
    }

    #[test]
    fn exact_reference_caps_are_enforced() {
        let u = ComplexMatrix::identity(11);
        let input = FockState::new({
            let mut occ = vec![0u8; 11];
            occ[0] = 1;
            occ
        });
        let ideal = ideal_distribution(&u, &input).unwrap();
        let loss = LossModel::new(0.5).unwrap();
        assert!(matches!(
            exact_lossy_distribution(&ideal, &loss),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn strata_partition_the_counts() {
        let ideal = ideal_for(6, 3, 38);
        let loss = LossModel::new(0.5).unwrap();
        let counts = lossy_sample(&ideal, &loss, 10_000, &mut stream(39, 0)).unwrap();
        let mut total = 0;
        for k in 0..=3 {
            let stratum = counts.stratum(k);
            assert!(stratum.keys().all(|p| p.click_count() == k));
            let shots: u64 = stratum.values().sum();
            assert_eq!(shots, counts.stratum_shots(k));
            total += shots;
        }
        assert_eq!(total, counts.total_shots());
        let hist = counts.click_histogram();
        assert_eq!(hist.values().sum::<u64>(), counts.total_shots());
    }

    #[test]
    fn full_click_mass_is_survival_to_the_n_times_collision_free_mass() {
        let ideal = ideal_for(5, 2, 40);
        let loss = LossModel::new(0.25).unwrap();
        let lossy = exact_lossy_distribution(&ideal, &loss).unwrap();
        let nc_mass: f64 = ideal
            .iter()
            .filter(|(s, _)| s.is_collision_free())
            .map(|(_, p)| p)
            .sum();
        let full_click: f64 = lossy
            .iter()
            .filter(|(p, _)| p.click_count() == 2)
            .map(|(_, p)| p)
            .sum();
        assert!((full_click - 0.75 * 0.75 * nc_mass).abs() < 1e-12);
    }

    #[test]
    fn identity_circuit_stratum_ratio_matches_closed_form() {
        let u = ComplexMatrix::identity(7);
        let input = alternating_input(7, 3).unwrap();
        let ideal = ideal_distribution(&u, &input).unwrap();
        let eta = 0.35;
        let loss = LossModel::new(eta).unwrap();
        let lossy = exact_lossy_distribution(&ideal, &loss).unwrap();
        let mass = |k: u32| -> f64 {
            lossy
                .iter()
                .filter(|(p, _)| p.click_count() == k)
                .map(|(_, p)| p)
                .sum()
        };
        let ratio = mass(2) / mass(3);
        let want = 3.0 * eta / (1.0 - eta);
        assert!((ratio - want).abs() < 1e-12, "ratio {ratio}, want {want}");
    }

    #[test]
    fn relabeling_modes_commutes_with_loss() {
        let m = 4;
        let u = random_unitary(m, &mut stream(41, 0));
        // Swap modes 1 and 2 at the output.
        let mut perm = ComplexMatrix::zeros(m, m);
        let order = [0usize, 2, 1, 3];
        for (row, &src) in order.iter().enumerate() {
            perm[(row, src)] = num_complex::Complex64::new(1.0, 0.0);
        }
        let pu = &perm * &u;
        let input = alternating_input(m, 2).unwrap();
        let loss = LossModel::new(0.3).unwrap();
        let base = exact_lossy_distribution(&ideal_distribution(&u, &input).unwrap(), &loss).unwrap();
        let moved = exact_lossy_distribution(&ideal_distribution(&pu, &input).unwrap(), &loss).unwrap();
        for (pattern, p) in base.iter() {
            let bits = pattern.bits();
            let relabeled: Vec<u8> = order.iter().map(|&src| bits[src]).collect();
            let q = moved.prob_of(&ClickPattern::new(relabeled).unwrap());
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let ideal = ideal_for(5, 2, 42);
        let loss = LossModel::new(0.5).unwrap();
        let a = lossy_sample(&ideal, &loss, 5000, &mut stream(43, 7)).unwrap();
        let b = lossy_sample(&ideal, &loss, 5000, &mut stream(43, 7)).unwrap();
        assert_eq!(a, b);
    }
}
