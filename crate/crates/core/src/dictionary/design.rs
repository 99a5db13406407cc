//! Incoherent frame design by alternating projection.
//!
//! Each sweep clips the Gram matrix's off-diagonal entries to the target
//! magnitude (unit diagonal), then replaces it by its nearest positive
//! semidefinite matrix of rank at most `n` via a symmetric eigendecomposition,
//! factors that matrix into `n x N` atoms and renormalizes them.

use faer::{Mat, MatRef, Side};
use nalgebra::DMatrix;

use super::{build_random_sphere, welch_bound, Dictionary};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignOptions {
    pub mu_target: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
}

impl DesignOptions {
    pub fn new(mu_target: f64, seed: u64) -> Self {
        Self { mu_target, max_iters: 5000, tol: 1e-3, seed }
    }

    pub fn max_iters(mut self, iters: usize) -> Self {
        self.max_iters = iters;
        self
    }

    pub fn tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }
}

/// Result of a design run; `converged` is false when the sweep budget ran out,
/// in which case `dictionary` is the most incoherent iterate seen.
#[derive(Debug, Clone)]
pub struct Design {
    pub dictionary: Dictionary,
    pub achieved: f64,
    pub iterations: usize,
    pub converged: bool,
    pub target: f64,
}

impl Design {
    /// Fails with [`Error::NoConvergence`] unless the target was met.
    pub fn require_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NoConvergence { achieved: self.achieved, target: self.target })
        }
    }
}

fn max_off_diagonal(g: MatRef<'_, f64>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..g.ncols() {
        for i in 0..j {
            best = best.max(g[(i, j)].abs());
        }
    }
    best
}

fn normalize(frame: &mut Mat<f64>) -> bool {
    for j in 0..frame.ncols() {
        let norm = frame.col(j).norm_l2();
        if norm == 0.0 || !norm.is_finite() {
            return false;
        }
        for i in 0..frame.nrows() {
            frame[(i, j)] /= norm;
        }
    }
    true
}

pub fn design_incoherent(rows: usize, cols: usize, opts: DesignOptions) -> Result<Design> {
    if rows == 0 || rows >= cols {
        return Err(Error::InvalidParameter(format!(
            "design needs 0 < n < N, got ({rows}, {cols})"
        )));
    }
    let welch = welch_bound(rows, cols);
    if !(opts.mu_target > welch) {
        return Err(Error::TargetInfeasible { target: opts.mu_target, welch });
    }
    let target = opts.mu_target;
    let start = build_random_sphere(rows, cols, opts.seed).into_matrix();
    let mut frame = Mat::<f64>::from_fn(rows, cols, |i, j| start[(i, j)]);
    let mut best: Option<(Mat<f64>, f64)> = None;
    let mut iterations = 0;
    loop {
        let mut gram = frame.transpose() * &frame;
        let coherence = max_off_diagonal(gram.as_ref());
        if best.as_ref().is_none_or(|(_, b)| coherence < *b) {
            best = Some((frame.clone(), coherence));
        }
        if coherence <= target + opts.tol || iterations >= opts.max_iters {
            break;
        }
        iterations += 1;

        for j in 0..cols {
            for i in 0..cols {
                gram[(i, j)] = if i == j { 1.0 } else { gram[(i, j)].clamp(-target, target) };
            }
        }
        let eig = gram
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Degenerate(format!("eigendecomposition failed: {e:?}")))?;
        // Eigenvalues come back in nondecreasing order; keep the top `rows`.
        let (vals, vecs) = (eig.S(), eig.U());
        let mut next = Mat::<f64>::zeros(rows, cols);
        for r in 0..rows {
            let k = cols - 1 - r;
            let scale = vals[k].max(0.0).sqrt();
            for j in 0..cols {
                next[(r, j)] = scale * vecs[(j, k)];
            }
        }
        if !normalize(&mut next) {
            break;
        }
        frame = next;
    }
    let (frame, _) = best.expect("at least one iterate");
    let atoms = DMatrix::from_fn(rows, cols, |i, j| frame[(i, j)]);
    let dictionary = Dictionary::new(
        atoms,
        format!("designed n={rows} N={cols} target={target} seed={}", opts.seed),
    )?;
    // Recompute on the returned atoms so `achieved` agrees with `coherence()`.
    let achieved = dictionary.coherence();
    Ok(Design {
        achieved,
        converged: achieved <= target + opts.tol,
        iterations,
        dictionary,
        target,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn below_welch_is_infeasible() {
        let w = welch_bound(16, 20);
        assert!(matches!(
            design_incoherent(16, 20, DesignOptions::new(w * 0.99, 1)),
            Err(Error::TargetInfeasible { .. })
        ));
    }

    #[test]
    fn loose_target_converges_quickly() {
        let d = design_incoherent(16, 20, DesignOptions::new(0.9, 1)).unwrap();
        assert!(d.converged);
        assert!(d.iterations <= 5, "{}", d.iterations);
        assert!(d.dictionary.coherence() <= 0.9 + 1e-3);
        assert!((d.dictionary.coherence() - d.achieved).abs() < 1e-12);
    }

    #[test]
    fn moderate_target_reduces_coherence() {
        let start = build_random_sphere(16, 24, 3).coherence();
        let d = design_incoherent(16, 24, DesignOptions::new(0.3, 3).max_iters(500)).unwrap();
        assert!(d.achieved < start);
        assert!(d.achieved >= welch_bound(16, 24) - 1e-12);
    }
}
