//! Coarse-graining of pattern spaces onto a fixed number of bins.
//!
//! Patterns are ranked by their canonical order and consecutive ranks are
//! grouped, so a model over `S` patterns can be compared against a target
//! histogram with `B ≤ S` bins.

use alloc::{format, vec::Vec};

use crate::dist::{DistributionTable, Pattern};
use crate::error::{Error, Result};

/// Assignment of pattern ranks `0..space_len` to contiguous bins.
#[derive(Clone, Debug, PartialEq)]
pub struct BinMap {
    space_len: usize,
    starts: Vec<usize>,
}

impl BinMap {
    pub fn bins(&self) -> usize {
        self.starts.len() - 1
    }

    pub fn space_len(&self) -> usize {
        self.space_len
    }

    /// Rank range covered by bin `b`.
    pub fn range(&self, b: usize) -> core::ops::Range<usize> {
        self.starts[b]..self.starts[b + 1]
    }

    pub fn bin_of(&self, rank: usize) -> usize {
        debug_assert!(rank < self.space_len);
        self.starts.partition_point(|&s| s <= rank) - 1
    }

    pub fn bin_sizes(&self) -> Vec<usize> {
        (0..self.bins()).map(|b| self.range(b).len()).collect()
    }
}

/// Splits `space_len` ranks into `bins` contiguous groups whose sizes
/// differ by at most one.
pub fn build_bin_map(space_len: usize, bins: usize) -> Result<BinMap> {
    if bins == 0 {
        return Err(Error::input("bin count must be positive"));
    }
    if bins > space_len {
        return Err(Error::input(format!(
            "cannot split {space_len} patterns into {bins} bins without empty bins"
        )));
    }
    let starts = (0..=bins).map(|b| b * space_len / bins).collect();
    Ok(BinMap { space_len, starts })
}

/// Sums a model distribution into the bins of `map`.
pub fn model_bin_distribution<P: Pattern>(
    table: &DistributionTable<P>,
    map: &BinMap,
) -> Result<Vec<f64>> {
    if table.len() != map.space_len() {
        return Err(Error::input(format!(
            "bin map covers {} patterns, table holds {}",
            map.space_len(),
            table.len()
        )));
    }
    let probs = table.probs();
    Ok((0..map.bins())
        .map(|b| map.range(b).map(|i| probs[i]).sum())
        .collect())
}
