//! Dictionaries: real `n x N` matrices with unit-norm columns (atoms).

mod adversarial;
mod bounds;
mod construct;
mod design;
mod io;

pub use adversarial::{build_adversarial, Adversarial, TailBound};
pub use bounds::{coherence_bounds, welch_bound, CoherenceBounds};
pub use construct::{
    build_equiangular_block, build_random_sphere, build_two_ortho, sylvester_hadamard,
    EquiangularBlock,
};
pub use design::{design_incoherent, Design, DesignOptions};

use faer::MatRef;
use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::dot;

/// Unit-norm tolerance enforced on every atom.
pub const NORM_TOLERANCE: f64 = 1e-9;

const ZERO_COLUMN: f64 = 1e-12;

/// Column block width for the parallel Gram scan.
const SCAN_BLOCK: usize = 256;

/// A dictionary whose columns are unit-norm atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    atoms: DMatrix<f64>,
    label: String,
}

impl Dictionary {
    /// Wraps a matrix after checking shape, finiteness and unit column norms.
    pub fn new(atoms: DMatrix<f64>, label: impl Into<String>) -> Result<Self> {
        let (n, cols) = atoms.shape();
        if n < 1 || cols < 2 {
            return Err(Error::InvalidParameter(format!(
                "dictionary must be at least 1x2, got {n}x{cols}"
            )));
        }
        if atoms.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("dictionary has non-finite entries".into()));
        }
        for (j, col) in atoms.column_iter().enumerate() {
            let norm = col.norm();
            if (norm - 1.0).abs() > NORM_TOLERANCE {
                return Err(Error::InvalidParameter(format!(
                    "atom {j} has norm {norm}, expected 1"
                )));
            }
        }
        Ok(Self { atoms, label: label.into() })
    }

    /// Scales each column of `m` to unit norm.
    pub fn normalize_columns(mut m: DMatrix<f64>, label: impl Into<String>) -> Result<Self> {
        for (index, mut col) in m.column_iter_mut().enumerate() {
            let norm = col.norm();
            if !(norm >= ZERO_COLUMN) {
                return Err(Error::ZeroColumn { index, norm });
            }
            col /= norm;
        }
        Self::new(m, label)
    }

    pub fn rows(&self) -> usize {
        self.atoms.nrows()
    }

    pub fn cols(&self) -> usize {
        self.atoms.ncols()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.atoms
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.atoms
    }

    /// Column `j` as a contiguous slice.
    pub fn atom(&self, j: usize) -> &[f64] {
        let n = self.rows();
        &self.atoms.as_slice()[j * n..(j + 1) * n]
    }

    /// Writes `A^T r` into `out`.
    pub fn correlate_into(&self, r: &[f64], out: &mut [f64]) {
        debug_assert_eq!(r.len(), self.rows());
        debug_assert_eq!(out.len(), self.cols());
        for (j, c) in out.iter_mut().enumerate() {
            *c = dot(self.atom(j), r);
        }
    }

    pub fn correlate(&self, r: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols()];
        self.correlate_into(r, &mut out);
        out
    }

    /// Coherence: the largest `|<a_i, a_j>|` over distinct atoms.
    ///
    /// Exact scan over all pairs, blocked and run on the rayon pool.
    pub fn coherence(&self) -> f64 {
        let cols = self.cols();
        let blocks: Vec<(usize, usize)> = (0..cols)
            .step_by(SCAN_BLOCK)
            .map(|s| (s, (s + SCAN_BLOCK).min(cols)))
            .collect();
        let pairs: Vec<(usize, usize)> = (0..blocks.len())
            .flat_map(|a| (a..blocks.len()).map(move |b| (a, b)))
            .collect();
        let all = MatRef::from_column_major_slice(self.atoms.as_slice(), self.rows(), cols);
        pairs
            .par_iter()
            .map(|&(a, b)| {
                let (a0, a1) = blocks[a];
                let (b0, b1) = blocks[b];
                let left = all.subcols(a0, a1 - a0);
                let right = all.subcols(b0, b1 - b0);
                let gram = left.transpose() * right;
                let mut best = 0.0f64;
                for jj in 0..gram.ncols() {
                    for ii in 0..gram.nrows() {
                        let (i, j) = (a0 + ii, b0 + jj);
                        if i < j {
                            best = best.max(gram[(ii, jj)].abs());
                        }
                    }
                }
                best
            })
            .reduce(|| 0.0, f64::max)
    }

    /// Returns a copy with columns reordered so that new column `k` is old column `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.cols() {
            return Err(Error::DimensionMismatch { expected: self.cols(), actual: perm.len() });
        }
        let mut seen = vec![false; perm.len()];
        for &p in perm {
            if p >= perm.len() || std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidParameter("not a permutation".into()));
            }
        }
        let atoms = DMatrix::from_fn(self.rows(), self.cols(), |i, k| self.atoms[(i, perm[k])]);
        Ok(Self { atoms, label: self.label.clone() })
    }

    /// Returns a copy with the sign of column `j` flipped.
    pub fn sign_flipped(&self, j: usize) -> Self {
        let mut atoms = self.atoms.clone();
        atoms.column_mut(j).neg_mut();
        Self { atoms, label: self.label.clone() }
    }
}

/// Coherence of an arbitrary dictionary.
pub fn coherence(d: &Dictionary) -> f64 {
    d.coherence()
}

/// Normalizes the columns of `m` into a dictionary.
pub fn normalize_columns(m: DMatrix<f64>) -> Result<Dictionary> {
    Dictionary::normalize_columns(m, "normalized")
}
