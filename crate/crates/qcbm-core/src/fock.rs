//! Occupation-number patterns, their threshold (click) images, and the
//! canonical enumeration of pattern spaces.

use alloc::{format, string::String, vec, vec::Vec};
use core::fmt;

use crate::error::{Error, Result};

/// Largest pattern space any enumeration is allowed to materialize.
pub const MAX_PATTERN_COUNT: u64 = 2_000_000;

/// Photon occupations per mode. Ordering is lexicographic on the occupation
/// vector; every pattern space in this crate is sorted by it.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct FockState(Vec<u8>);

impl FockState {
    pub fn new(occupations: Vec<u8>) -> Self {
        Self(occupations)
    }

    pub fn occupations(&self) -> &[u8] {
        &self.0
    }

    pub fn modes(&self) -> usize {
        self.0.len()
    }

    pub fn photon_count(&self) -> u32 {
        self.0.iter().map(|&o| o as u32).sum()
    }

    pub fn is_collision_free(&self) -> bool {
        self.0.iter().all(|&o| o <= 1)
    }

    /// Threshold-detector image: occupation k ↦ min(k, 1).
    pub fn threshold(&self) -> ClickPattern {
        ClickPattern(self.0.iter().map(|&o| o.min(1)).collect())
    }

    /// Copy with one photon removed from `mode`; `None` if none is there.
    pub fn without_photon(&self, mode: usize) -> Option<FockState> {
        if self.0.get(mode).copied().unwrap_or(0) == 0 {
            return None;
        }
        let mut occ = self.0.clone();
        occ[mode] -= 1;
        Some(FockState(occ))
    }

    /// Copy with one photon added at `mode`.
    pub fn with_photon(&self, mode: usize) -> FockState {
        let mut occ = self.0.clone();
        occ[mode] += 1;
        FockState(occ)
    }
}

impl fmt::Display for FockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.iter().all(|&o| o < 10) {
            for &o in &self.0 {
                write!(f, "{o}")?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = self.0.iter().map(|o| format!("{o}")).collect();
            write!(f, "{}", parts.join(","))
        }
    }
}

/// Binary pattern from threshold detectors: clicked / not clicked per mode.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ClickPattern(Vec<u8>);

impl ClickPattern {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::input("click patterns hold only 0/1 entries"));
        }
        Ok(Self(bits))
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn modes(&self) -> usize {
        self.0.len()
    }

    pub fn click_count(&self) -> u32 {
        self.0.iter().map(|&b| b as u32).sum()
    }

    pub fn is_set(&self, mode: usize) -> bool {
        self.0.get(mode).copied().unwrap_or(0) == 1
    }

    /// Modes that clicked, ascending.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &b)| b == 1)
            .map(|(i, _)| i)
    }

    /// Copy with the click at `mode` cleared; `None` if it was not set.
    pub fn without_click(&self, mode: usize) -> Option<ClickPattern> {
        if !self.is_set(mode) {
            return None;
        }
        let mut bits = self.0.clone();
        bits[mode] = 0;
        Some(ClickPattern(bits))
    }

    /// Copy with a click added at `mode`; `None` if one is already there.
    pub fn with_click(&self, mode: usize) -> Option<ClickPattern> {
        if mode >= self.0.len() || self.is_set(mode) {
            return None;
        }
        let mut bits = self.0.clone();
        bits[mode] = 1;
        Some(ClickPattern(bits))
    }

    pub fn bitstring(&self) -> String {
        self.0.iter().map(|&b| if b == 1 { '1' } else { '0' }).collect()
    }

    pub fn from_bitstring(s: &str) -> Result<Self> {
        let mut bits = Vec::with_capacity(s.len());
        for ch in s.chars() {
            match ch {
                '0' => bits.push(0),
                '1' => bits.push(1),
                other => {
                    return Err(Error::input(format!(
                        "invalid character {other:?} in click bitstring {s:?}"
                    )))
                }
            }
        }
        Ok(Self(bits))
    }
}

impl fmt::Display for ClickPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

/// C(n, k) with overflow checking.
pub fn binomial(n: u64, k: u64) -> Result<u64> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc
            .checked_mul(n - i)
            .ok_or_else(|| Error::resource(format!("binomial({n}, {k}) overflows u64")))?;
        acc /= i + 1;
    }
    Ok(acc)
}

fn check_enumeration_size(count: u64, what: &str) -> Result<()> {
    if count > MAX_PATTERN_COUNT {
        Err(Error::resource(format!(
            "{what} would hold {count} patterns, above the cap {MAX_PATTERN_COUNT}"
        )))
    } else {
        Ok(())
    }
}

/// Every placement of `photons` into `modes`, ascending lexicographic.
pub fn enumerate_fock(modes: usize, photons: u32) -> Result<Vec<FockState>> {
    if photons > u8::MAX as u32 {
        return Err(Error::input(format!("photon count {photons} exceeds 255")));
    }
    if modes == 0 {
        return if photons == 0 {
            Ok(vec![FockState::new(Vec::new())])
        } else {
            Err(Error::input("cannot place photons into zero modes"))
        };
    }
    let count = binomial(photons as u64 + modes as u64 - 1, photons as u64)?;
    check_enumeration_size(count, "Fock enumeration")?;
    let mut out = Vec::with_capacity(count as usize);
    let mut prefix = Vec::with_capacity(modes);
    fill_fock(&mut prefix, modes, photons, &mut out);
    Ok(out)
}

fn fill_fock(prefix: &mut Vec<u8>, modes_left: usize, photons_left: u32, out: &mut Vec<FockState>) {
    if modes_left == 1 {
        prefix.push(photons_left as u8);
        out.push(FockState::new(prefix.clone()));
        prefix.pop();
        return;
    }
    for v in 0..=photons_left {
        prefix.push(v as u8);
        fill_fock(prefix, modes_left - 1, photons_left - v, out);
        prefix.pop();
    }
}

/// All occupation patterns with at most `max_photons` photons, lexicographic.
pub fn enumerate_fock_up_to(modes: usize, max_photons: u32) -> Result<Vec<FockState>> {
    let mut count: u64 = 0;
    for n in 0..=max_photons {
        count += binomial(n as u64 + modes as u64 - 1, n as u64)?;
    }
    check_enumeration_size(count, "Fock enumeration")?;
    let mut out = Vec::with_capacity(count as usize);
    let mut prefix = Vec::with_capacity(modes);
    fill_fock_up_to(&mut prefix, modes, max_photons, &mut out);
    Ok(out)
}

fn fill_fock_up_to(prefix: &mut Vec<u8>, modes_left: usize, budget: u32, out: &mut Vec<FockState>) {
    if modes_left == 0 {
        out.push(FockState::new(prefix.clone()));
        return;
    }
    for v in 0..=budget.min(u8::MAX as u32) {
        prefix.push(v as u8);
        fill_fock_up_to(prefix, modes_left - 1, budget - v, out);
        prefix.pop();
    }
}

/// Every click pattern with exactly `clicks` set modes, ascending lexicographic.
pub fn enumerate_clicks(modes: usize, clicks: u32) -> Result<Vec<ClickPattern>> {
    if clicks as usize > modes {
        return Err(Error::input(format!(
            "cannot place {clicks} clicks into {modes} modes"
        )));
    }
    let count = binomial(modes as u64, clicks as u64)?;
    check_enumeration_size(count, "click enumeration")?;
    let mut out = Vec::with_capacity(count as usize);
    let mut prefix = Vec::with_capacity(modes);
    fill_clicks(&mut prefix, modes, clicks, false, &mut out);
    Ok(out)
}

/// All click patterns with at most `max_clicks` set modes, lexicographic.
pub fn enumerate_clicks_up_to(modes: usize, max_clicks: u32) -> Result<Vec<ClickPattern>> {
    let mut count: u64 = 0;
    for k in 0..=max_clicks.min(modes as u32) {
        count += binomial(modes as u64, k as u64)?;
    }
    check_enumeration_size(count, "click enumeration")?;
    let mut out = Vec::with_capacity(count as usize);
    let mut prefix = Vec::with_capacity(modes);
    fill_clicks(&mut prefix, modes, max_clicks.min(modes as u32), true, &mut out);
    Ok(out)
}

fn fill_clicks(
    prefix: &mut Vec<u8>,
    modes_left: usize,
    budget: u32,
    up_to: bool,
    out: &mut Vec<ClickPattern>,
) {
    if modes_left == 0 {
        if up_to || budget == 0 {
            out.push(ClickPattern(prefix.clone()));
        }
        return;
    }
    if up_to || budget < modes_left as u32 {
        prefix.push(0);
        fill_clicks(prefix, modes_left - 1, budget, up_to, out);
        prefix.pop();
    }
    if budget > 0 {
        prefix.push(1);
        fill_clicks(prefix, modes_left - 1, budget - 1, up_to, out);
        prefix.pop();
    }
}

/// Default input: one photon on every even mode, `0, 2, …, 2(n−1)`.
/// Requires `2n ≤ m + 1` so the last photon fits.
pub fn alternating_input(modes: usize, photons: u32) -> Result<FockState> {
    if 2 * photons as usize > modes + 1 {
        return Err(Error::input(format!(
            "alternating input needs 2n <= m + 1; got n = {photons}, m = {modes}"
        )));
    }
    let mut occ = vec![0u8; modes];
    for i in 0..photons as usize {
        occ[2 * i] = 1;
    }
    Ok(FockState::new(occ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_modes_one_photon_order() {
        let states = enumerate_fock(2, 1).unwrap();
        assert_eq!(
            states,
            vec![FockState::new(vec![0, 1]), FockState::new(vec![1, 0])]
        );
    }

    #[test]
    fn twelve_modes_four_photons_count() {
        assert_eq!(enumerate_fock(12, 4).unwrap().len(), 1365);
    }

    #[test]
    fn zero_photons_single_vacuum_state() {
        let states = enumerate_fock(3, 0).unwrap();
        assert_eq!(states, vec![FockState::new(vec![0, 0, 0])]);
    }

    #[test]
    fn enumerations_are_sorted_and_unique() {
        let states = enumerate_fock(5, 3).unwrap();
        assert!(states.windows(2).all(|w| w[0] < w[1]));
        let clicks = enumerate_clicks(6, 3).unwrap();
        assert_eq!(clicks.len(), 20);
        assert!(clicks.windows(2).all(|w| w[0] < w[1]));
        let mixed = enumerate_clicks_up_to(5, 2).unwrap();
        assert_eq!(mixed.len(), 1 + 5 + 10);
        assert!(mixed.windows(2).all(|w| w[0] < w[1]));
        let focks = enumerate_fock_up_to(3, 2).unwrap();
        assert_eq!(focks.len(), 1 + 3 + 6);
        assert!(focks.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn threshold_map_flattens_collisions() {
        let s = FockState::new(vec![2, 0, 1, 3]);
        assert_eq!(s.threshold(), ClickPattern::new(vec![1, 0, 1, 1]).unwrap());
        assert_eq!(s.photon_count(), 6);
        assert!(!s.is_collision_free());
    }

    #[test]
    fn alternating_input_layout() {
        let s = alternating_input(12, 4).unwrap();
        assert_eq!(s.occupations(), &[1, 0, 1, 0, 1, 0, 1, 0, 0, 0, 0, 0]);
        let s = alternating_input(2, 1).unwrap();
        assert_eq!(s.occupations(), &[1, 0]);
        // photons at 0, 2 with m = 3 still fits: 2n = m + 1
        let s = alternating_input(3, 2).unwrap();
        assert_eq!(s.occupations(), &[1, 0, 1]);
        assert!(matches!(alternating_input(3, 3), Err(Error::Input(_))));
    }

    #[test]
    fn bitstring_round_trip() {
        let p = ClickPattern::new(vec![0, 1, 1, 0, 1]).unwrap();
        assert_eq!(p.bitstring(), "01101");
        assert_eq!(ClickPattern::from_bitstring("01101").unwrap(), p);
        assert!(ClickPattern::from_bitstring("01x").is_err());
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(10, 3).unwrap(), 120);
        assert_eq!(binomial(15, 4).unwrap(), 1365);
        assert_eq!(binomial(4, 0).unwrap(), 1);
        assert_eq!(binomial(3, 5).unwrap(), 0);
        assert!(binomial(200, 100).is_err());
    }

    #[test]
    fn enumeration_cap_is_enforced() {
        assert!(matches!(
            enumerate_fock(40, 20),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn click_support_and_edits() {
        let p = ClickPattern::new(vec![1, 0, 1, 0]).unwrap();
        assert_eq!(p.support().collect::<Vec<_>>(), vec![0, 2]);
        assert_eq!(
            p.without_click(2).unwrap(),
            ClickPattern::new(vec![1, 0, 0, 0]).unwrap()
        );
        assert!(p.without_click(1).is_none());
        assert_eq!(
            p.with_click(3).unwrap(),
            ClickPattern::new(vec![1, 0, 1, 1]).unwrap()
        );
        assert!(p.with_click(0).is_none());
    }
}
