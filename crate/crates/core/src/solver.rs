//! Orthogonal Matching Pursuit and its threshold-stopping variant.
//!
//! Both solvers share one loop: correlate the residual with every atom,
//! pick the largest magnitude (lowest index on ties), extend an incremental
//! QR factorization of the selected atoms and project the residual.

use std::fmt;
use std::io::Write;

use crate::dictionary::Dictionary;
use crate::error::{Error, Result};
use crate::linalg::{argmax_abs, axpy, dot, norm};
use crate::signal::SparseVector;

/// Largest condition estimate accepted for the selected columns.
pub const MAX_CONDITION: f64 = 1e12;

/// Relative residual norm treated as an exact fit.
pub const RESIDUAL_ZERO: f64 = 1e-12;

/// Thin QR factorization grown one column at a time by modified
/// Gram-Schmidt with one reorthogonalization pass.
#[derive(Debug, Clone, Default)]
pub struct IncrementalQr {
    q: Vec<Vec<f64>>,
    /// Column `k` of `R`, entries `0..=k`.
    r: Vec<Vec<f64>>,
}

impl IncrementalQr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn basis(&self, k: usize) -> &[f64] {
        &self.q[k]
    }

    /// `max |R_kk| / min |R_kk|`, a cheap lower estimate of the condition number.
    pub fn condition_estimate(&self) -> f64 {
        let diag = self.r.iter().enumerate().map(|(k, col)| col[k].abs());
        let (lo, hi) = diag.fold((f64::INFINITY, 0.0f64), |(lo, hi), d| (lo.min(d), hi.max(d)));
        if self.r.is_empty() {
            1.0
        } else {
            hi / lo
        }
    }

    /// Appends a column; fails if it is numerically dependent on the basis.
    pub fn push(&mut self, column: &[f64]) -> Result<()> {
        let scale = norm(column);
        let mut v = column.to_vec();
        let mut coeffs = vec![0.0; self.q.len() + 1];
        for _ in 0..2 {
            for (k, q) in self.q.iter().enumerate() {
                let h = dot(q, &v);
                axpy(-h, q, &mut v);
                coeffs[k] += h;
            }
        }
        let rkk = norm(&v);
        coeffs[self.q.len()] = rkk;
        let (lo, hi) = self
            .r
            .iter()
            .enumerate()
            .map(|(k, c)| c[k].abs())
            .fold((rkk, rkk), |(lo, hi), d| (lo.min(d), hi.max(d)));
        let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        if !(rkk > RESIDUAL_ZERO * scale) || condition > MAX_CONDITION {
            return Err(Error::IllConditioned { condition });
        }
        v.iter_mut().for_each(|x| *x /= rkk);
        self.q.push(v);
        self.r.push(coeffs);
        Ok(())
    }

    /// Least-squares coefficients of `y` on the pushed columns.
    pub fn solve(&self, y: &[f64]) -> Vec<f64> {
        let mut z: Vec<f64> = self.q.iter().map(|q| dot(q, y)).collect();
        for k in (0..z.len()).rev() {
            z[k] /= self.r[k][k];
            let zk = z[k];
            for (i, zi) in z.iter_mut().enumerate().take(k) {
                *zi -= self.r[k][i] * zk;
            }
        }
        z
    }

    /// Removes the component of `r` along basis vector `k`.
    fn deflate(&self, k: usize, r: &mut [f64]) {
        let h = dot(&self.q[k], r);
        axpy(-h, &self.q[k], r);
    }
}

fn check_indices(d: &Dictionary, set: &[usize]) -> Result<()> {
    let mut seen = vec![false; d.cols()];
    for &j in set {
        if j >= d.cols() {
            return Err(Error::InvalidParameter(format!("atom index {j} out of range")));
        }
        if std::mem::replace(&mut seen[j], true) {
            return Err(Error::InvalidParameter(format!("atom index {j} repeated")));
        }
    }
    Ok(())
}

fn check_signal(d: &Dictionary, y: &[f64]) -> Result<()> {
    if y.len() != d.rows() {
        return Err(Error::DimensionMismatch { expected: d.rows(), actual: y.len() });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("observation has non-finite entries".into()));
    }
    Ok(())
}

/// Minimizes `||y - A_S c||` over coefficients on the ordered index set `set`.
///
/// Returns the coefficients (in the order of `set`) and the residual, which
/// is orthogonal to every atom in `set`.
pub fn restricted_least_squares(
    d: &Dictionary,
    y: &[f64],
    set: &[usize],
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_signal(d, y)?;
    check_indices(d, set)?;
    let mut qr = IncrementalQr::new();
    for &j in set {
        qr.push(d.atom(j))?;
    }
    let mut residual = y.to_vec();
    for k in 0..qr.len() {
        qr.deflate(k, &mut residual);
    }
    Ok((qr.solve(y), residual))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    IterationsExhausted,
    ThresholdReached,
    ResidualZero,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::IterationsExhausted => "iterations-exhausted",
            Self::ThresholdReached => "threshold-reached",
            Self::ResidualZero => "residual-zero",
        })
    }
}

/// Per-iteration record of a pursuit run.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveTrace {
    /// Atoms in selection order.
    pub selected: Vec<usize>,
    /// `max_i |<a_i, r_{t-1}>|` at each selection.
    pub peak_correlation: Vec<f64>,
    /// `||r_t||` after each selection.
    pub residual_norm: Vec<f64>,
    /// Least-squares coefficients aligned with `selected`.
    pub coefficients: Vec<f64>,
    pub residual: Vec<f64>,
    pub stop_reason: StopReason,
    len: usize,
}

impl SolveTrace {
    pub fn iterations(&self) -> usize {
        self.selected.len()
    }

    /// Sorted selected support.
    pub fn support(&self) -> Vec<usize> {
        let mut s = self.selected.clone();
        s.sort_unstable();
        s
    }

    /// `x_hat` as a sparse vector (exact zeros dropped).
    pub fn estimate(&self) -> SparseVector {
        let mut dense = vec![0.0; self.len];
        for (&j, &c) in self.selected.iter().zip(&self.coefficients) {
            dense[j] = c;
        }
        SparseVector::from_dense(&dense).expect("dense estimate is well formed")
    }

    /// Diagnostic CSV: `iter,selected_index,peak_correlation,residual_norm`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "iter,selected_index,peak_correlation,residual_norm")?;
        for t in 0..self.selected.len() {
            writeln!(
                w,
                "{},{},{},{}",
                t + 1,
                self.selected[t],
                self.peak_correlation[t],
                self.residual_norm[t]
            )?;
        }
        Ok(())
    }
}

fn pursue(d: &Dictionary, y: &[f64], max_iters: usize, tau: Option<f64>) -> Result<SolveTrace> {
    let y_norm = norm(y);
    let mut residual = y.to_vec();
    let mut qr = IncrementalQr::new();
    let mut chosen = vec![false; d.cols()];
    let mut selected = Vec::new();
    let mut peaks = Vec::new();
    let mut norms = Vec::new();
    let mut corr = vec![0.0; d.cols()];
    let stop = loop {
        if tau.is_none() && selected.len() == max_iters {
            break StopReason::IterationsExhausted;
        }
        let exhausted = y_norm == 0.0 || norm(&residual) <= RESIDUAL_ZERO * y_norm;
        if tau.is_none() && exhausted {
            break StopReason::ResidualZero;
        }
        d.correlate_into(&residual, &mut corr);
        let peak = argmax_abs(&corr, |i| chosen[i]);
        if let Some(tau) = tau {
            let all_peak = peak.map_or(0.0, |(_, p)| p);
            if all_peak <= tau {
                break StopReason::ThresholdReached;
            }
            if selected.len() == max_iters {
                break StopReason::IterationsExhausted;
            }
        }
        let Some((j, peak)) = peak.filter(|&(_, p)| p > 0.0 && !exhausted) else {
            break StopReason::ResidualZero;
        };
        qr.push(d.atom(j))?;
        qr.deflate(qr.len() - 1, &mut residual);
        chosen[j] = true;
        selected.push(j);
        peaks.push(peak);
        norms.push(norm(&residual));
    };
    Ok(SolveTrace {
        coefficients: qr.solve(y),
        selected,
        peak_correlation: peaks,
        residual_norm: norms,
        residual,
        stop_reason: stop,
        len: d.cols(),
    })
}

/// OMP with a known sparsity `m`.
pub fn omp(d: &Dictionary, y: &[f64], m: usize) -> Result<SolveTrace> {
    let max = d.rows().min(d.cols());
    if m == 0 || m > max {
        return Err(Error::BadSparsity { m, max });
    }
    check_signal(d, y)?;
    pursue(d, y, m, None)
}

/// OMP that stops once `||A^T r_t||_inf <= tau`, or after `max_iters` selections.
pub fn omp_star(d: &Dictionary, y: &[f64], tau: f64, max_iters: usize) -> Result<SolveTrace> {
    if !(tau >= 0.0) {
        return Err(Error::InvalidParameter(format!("threshold must be >= 0, got {tau}")));
    }
    let max = d.rows().min(d.cols());
    if max_iters > max {
        return Err(Error::BadSparsity { m: max_iters, max });
    }
    check_signal(d, y)?;
    pursue(d, y, max_iters, Some(tau))
}

/// Exact support recovery: the selected set equals the true support.
pub fn support_recovered(trace: &SolveTrace, truth: &SparseVector) -> bool {
    trace.support() == truth.support()
}
