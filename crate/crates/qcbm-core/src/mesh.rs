//! Rectangular interferometer meshes of two-mode blocks.
//!
//! A mesh on `m` modes is a fixed rectangular layout of nearest-neighbour
//! two-mode blocks, each carrying a phase `theta` and a splitting angle
//! `theta_prime`. `k` identical layouts can be chained, each with its own
//! parameters (or sharing one set when tied).

use alloc::{format, string::String, vec, vec::Vec};
use num_complex::Complex;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{Complex64, ComplexMatrix};

const TAU: f64 = 2.0 * core::f64::consts::PI;

/// Wraps a phase into `[0, 2π)`.
pub fn wrap_phase(x: f64) -> f64 {
    let r = ((x % TAU) + TAU) % TAU;
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// One two-mode block acting on modes `(top_mode, top_mode + 1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MzElement {
    pub top_mode: usize,
    pub theta: f64,
    pub theta_prime: f64,
}

impl MzElement {
    /// Entries of the 2x2 action, row-major `(a, b, c, d)`.
    fn block(&self) -> (Complex64, Complex64, Complex64, Complex64) {
        let phase = Complex::new(0.0, self.theta).exp();
        let c = (self.theta_prime / 2.0).cos();
        let s = (self.theta_prime / 2.0).sin();
        (
            phase * c,
            Complex::new(-s, 0.0),
            phase * s,
            Complex::new(c, 0.0),
        )
    }
}

/// Embeds one block into the `m`-mode identity.
pub fn t_matrix(m: usize, element: &MzElement) -> Result<ComplexMatrix> {
    if element.top_mode + 1 >= m {
        return Err(Error::input(format!(
            "block at modes ({}, {}) does not fit in {m} modes",
            element.top_mode,
            element.top_mode + 1
        )));
    }
    let mut u = ComplexMatrix::identity(m);
    let (a, b, c, d) = element.block();
    let j = element.top_mode;
    u[(j, j)] = a;
    u[(j, j + 1)] = b;
    u[(j + 1, j)] = c;
    u[(j + 1, j + 1)] = d;
    Ok(u)
}

/// Mode pairs of the rectangular layout, column by column. Even columns
/// start at mode 0, odd columns at mode 1; every mode pair is adjacent.
pub fn clements_layout(m: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(m * m.saturating_sub(1) / 2);
    for col in 0..m {
        let start = col % 2;
        let mut top = start;
        while top + 1 < m {
            pairs.push((top, top + 1));
            top += 2;
        }
    }
    pairs
}

/// In-place left action of a 2x2 block on rows `j` and `j + 1` of `u`.
pub(crate) fn apply_two_mode(
    u: &mut ComplexMatrix,
    j: usize,
    a: Complex64,
    b: Complex64,
    c: Complex64,
    d: Complex64,
) {
    let cols = u.cols();
    for col in 0..cols {
        let top = u[(j, col)];
        let bot = u[(j + 1, col)];
        u[(j, col)] = a * top + b * bot;
        u[(j + 1, col)] = c * top + d * bot;
    }
}

/// Raw serialized form; converted through [`MeshParams::new`] so files
/// with bad lengths or non-finite angles are rejected on load.
#[derive(Serialize, Deserialize)]
struct RawMeshParams {
    m: usize,
    k: usize,
    phases: Vec<f64>,
    single_phase_mode: bool,
    tied_blocks: bool,
}

/// Parameter set for a `k`-block mesh on `m` modes.
///
/// Phases are stored element-major per block: slots `2t` and `2t + 1`
/// hold `theta` and `theta_prime` of the `t`-th layout element. The
/// vector always has length `k * m * (m - 1)` and is kept canonical:
/// angles wrapped into `[0, 2π)`, `theta` slots zeroed in single-phase
/// mode, and later blocks mirroring block 0 when blocks are tied.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMeshParams", into = "RawMeshParams")]
pub struct MeshParams {
    m: usize,
    k: usize,
    phases: Vec<f64>,
    single_phase_mode: bool,
    tied_blocks: bool,
}

impl TryFrom<RawMeshParams> for MeshParams {
    type Error = String;

    fn try_from(raw: RawMeshParams) -> core::result::Result<Self, String> {
        MeshParams::new(
            raw.m,
            raw.k,
            raw.phases,
            raw.single_phase_mode,
            raw.tied_blocks,
        )
        .map_err(|e| e.message().into())
    }
}

impl From<MeshParams> for RawMeshParams {
    fn from(p: MeshParams) -> Self {
        RawMeshParams {
            m: p.m,
            k: p.k,
            phases: p.phases,
            single_phase_mode: p.single_phase_mode,
            tied_blocks: p.tied_blocks,
        }
    }
}

impl MeshParams {
    /// Number of phase slots in each block.
    pub fn phases_per_block(m: usize) -> usize {
        m * m.saturating_sub(1)
    }

    /// Number of layout elements in each block.
    pub fn elements_per_block(m: usize) -> usize {
        Self::phases_per_block(m) / 2
    }

    pub fn new(
        m: usize,
        k: usize,
        phases: Vec<f64>,
        single_phase_mode: bool,
        tied_blocks: bool,
    ) -> Result<Self> {
        if m == 0 {
            return Err(Error::input("a mesh needs at least one mode"));
        }
        if k == 0 {
            return Err(Error::input("a mesh needs at least one block"));
        }
        let expected = k * Self::phases_per_block(m);
        if phases.len() != expected {
            return Err(Error::input(format!(
                "expected {expected} phases for m = {m}, k = {k}, got {}",
                phases.len()
            )));
        }
        if phases.iter().any(|p| !p.is_finite()) {
            return Err(Error::input("phases must be finite"));
        }
        let mut phases: Vec<f64> = phases.into_iter().map(wrap_phase).collect();
        if single_phase_mode {
            for slot in phases.iter_mut().step_by(2) {
                *slot = 0.0;
            }
        }
        if tied_blocks && k > 1 {
            let per = Self::phases_per_block(m);
            let (head, tail) = phases.split_at_mut(per);
            for chunk in tail.chunks_mut(per) {
                chunk.copy_from_slice(head);
            }
        }
        Ok(Self {
            m,
            k,
            phases,
            single_phase_mode,
            tied_blocks,
        })
    }

    /// All-zero phases; the resulting mesh is the identity.
    pub fn zeros(m: usize, k: usize, single_phase_mode: bool, tied_blocks: bool) -> Result<Self> {
        let n = k * Self::phases_per_block(m);
        Self::new(m, k, vec![0.0; n], single_phase_mode, tied_blocks)
    }

    /// Phases drawn uniformly from `[0, 2π)`.
    pub fn random(
        m: usize,
        k: usize,
        single_phase_mode: bool,
        tied_blocks: bool,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        let n = k * Self::phases_per_block(m);
        let phases = (0..n).map(|_| rng.gen::<f64>() * TAU).collect();
        Self::new(m, k, phases, single_phase_mode, tied_blocks)
    }

    pub fn modes(&self) -> usize {
        self.m
    }

    pub fn blocks(&self) -> usize {
        self.k
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn single_phase_mode(&self) -> bool {
        self.single_phase_mode
    }

    pub fn tied_blocks(&self) -> bool {
        self.tied_blocks
    }

    /// Elements of one block in application order.
    pub fn block_elements(&self, block: usize) -> Vec<MzElement> {
        let block = if self.tied_blocks { 0 } else { block };
        let base = block * Self::phases_per_block(self.m);
        clements_layout(self.m)
            .into_iter()
            .enumerate()
            .map(|(t, (top, _))| MzElement {
                top_mode: top,
                theta: self.phases[base + 2 * t],
                theta_prime: self.phases[base + 2 * t + 1],
            })
            .collect()
    }

    /// Slots that training may move, honouring the sharing flags.
    pub fn free_indices(&self) -> Vec<usize> {
        let blocks = if self.tied_blocks { 1 } else { self.k };
        let per = Self::phases_per_block(self.m);
        let mut idx = Vec::new();
        for b in 0..blocks {
            for t in 0..Self::elements_per_block(self.m) {
                let base = b * per + 2 * t;
                if !self.single_phase_mode {
                    idx.push(base);
                }
                idx.push(base + 1);
            }
        }
        idx
    }

    pub fn free_phases(&self) -> Vec<f64> {
        self.free_indices()
            .into_iter()
            .map(|i| self.phases[i])
            .collect()
    }

    /// Writes a free-parameter vector back, re-canonicalizing the rest.
    pub fn with_free_phases(&self, values: &[f64]) -> Result<Self> {
        let idx = self.free_indices();
        if values.len() != idx.len() {
            return Err(Error::input(format!(
                "expected {} free phases, got {}",
                idx.len(),
                values.len()
            )));
        }
        let mut phases = self.phases.clone();
        for (&i, &v) in idx.iter().zip(values) {
            phases[i] = v;
        }
        Self::new(
            self.m,
            self.k,
            phases,
            self.single_phase_mode,
            self.tied_blocks,
        )
    }

    /// The full `m x m` transfer matrix, blocks applied in order.
    pub fn unitary(&self) -> ComplexMatrix {
        let mut u = ComplexMatrix::identity(self.m);
        for block in 0..self.k {
            for element in self.block_elements(block) {
                let (a, b, c, d) = element.block();
                apply_two_mode(&mut u, element.top_mode, a, b, c, d);
            }
        }
        debug_assert!(
            u.unitarity_residual() < 1e-10,
            "mesh composition drifted from unitarity"
        );
        u
    }
}
