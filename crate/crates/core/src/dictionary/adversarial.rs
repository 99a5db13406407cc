use nalgebra::DMatrix;

use super::{build_equiangular_block, Dictionary, EquiangularBlock};
use crate::error::{Condition, Error, Result};
use crate::guarantees::{mip_holds, mip_limit, mu_feasible_interval, mu_tilde, sparsity_bound};
use crate::signal::SparseVector;

/// Coherence bound assumed for the tail atoms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailBound {
    /// Use the tail's measured coherence.
    Measured,
    /// Use a supplied bound; the tail is scanned to confirm it.
    Value(f64),
}

/// The adversarial dictionary together with its worst-case support.
#[derive(Debug, Clone)]
pub struct Adversarial {
    pub dictionary: Dictionary,
    /// Support `{0, .., m-1}` with unit coefficients; scale by the coefficient level.
    pub template: SparseVector,
    pub block: EquiangularBlock,
    pub mu: f64,
    pub mu_tilde: f64,
    pub l: f64,
    pub tail_coherence: f64,
}

fn violated(condition: Condition, detail: String) -> Error {
    Error::ConditionViolated { condition, detail }
}

/// Builds `[e_1 .. e_m, sqrt(mu~) e_bar .. ; 0 .. 0, sqrt(1-mu~) r_{m+1} ..]`.
///
/// The first `m` atoms are an equiangular block (pairwise `-mu`) padded with
/// zeros; every tail atom shares the component `sqrt(mu~) e_bar`, where
/// `e_bar` is the normalized block sum, so each support/tail pair has inner
/// product exactly `mu`. The tail's own coherence must be at most `L`, and
/// `(m, mu, L)` must satisfy MIP, the sparsity bound and the `mu` interval.
pub fn build_adversarial(
    n: usize,
    big_n: usize,
    m: usize,
    mu: f64,
    tail: &Dictionary,
    bound: TailBound,
) -> Result<Adversarial> {
    if m == 0 || m >= n || m >= big_n {
        return Err(Error::BadSparsity { m, max: n.min(big_n).saturating_sub(1) });
    }
    let (nt, bt) = (n - m, big_n - m);
    if tail.rows() != nt {
        return Err(Error::DimensionMismatch { expected: nt, actual: tail.rows() });
    }
    if tail.cols() != bt {
        return Err(Error::DimensionMismatch { expected: bt, actual: tail.cols() });
    }
    if !mip_holds(m, mu) {
        return Err(violated(
            Condition::Mip,
            format!("mu = {mu} is not below 1/(2m-1) = {}", mip_limit(m)),
        ));
    }
    let tail_coherence = tail.coherence();
    let l = match bound {
        TailBound::Measured => tail_coherence,
        TailBound::Value(l) => {
            if tail_coherence > l + 1e-12 {
                return Err(violated(
                    Condition::TailCoherence,
                    format!("tail coherence {tail_coherence} exceeds L = {l}"),
                ));
            }
            l
        }
    };
    if !(l > 0.0 && l < 1.0) {
        return Err(Error::InvalidParameter(format!("L must lie in (0, 1), got {l}")));
    }
    let max_m = sparsity_bound(l);
    if m as f64 > max_m {
        return Err(violated(
            Condition::SparsityVsTail,
            format!("m = {m} exceeds (3 - L - sqrt(8 - 8L))/L = {max_m:.4} at L = {l}"),
        ));
    }
    match mu_feasible_interval(m, l) {
        Some((lo, hi)) if lo <= mu && mu <= hi => {}
        Some((lo, hi)) => {
            return Err(violated(
                Condition::MuInterval,
                format!("mu = {mu} outside [{lo}, {hi}] at L = {l}"),
            ))
        }
        None => {
            return Err(violated(Condition::MuInterval, format!("interval empty at L = {l}")))
        }
    }

    let block = build_equiangular_block(m, mu)?;
    let mt = mu_tilde(m, mu)?;
    let sum_norm = (m as f64 * (1.0 - (m as f64 - 1.0) * mu)).sqrt();
    let e_bar = block.sum() / sum_norm;
    let (head, body) = (mt.sqrt(), (1.0 - mt).sqrt());

    let mut atoms = DMatrix::zeros(n, big_n);
    atoms.view_mut((0, 0), (m, m)).copy_from(block.vectors());
    for j in 0..bt {
        let mut col = atoms.column_mut(m + j);
        col.rows_mut(0, m).copy_from(&(&e_bar * head));
        for (dst, src) in col.rows_mut(m, nt).iter_mut().zip(tail.atom(j)) {
            *dst = body * src;
        }
    }
    let dictionary = Dictionary::new(
        atoms,
        format!("adversarial n={n} N={big_n} m={m} mu={mu} L={l}"),
    )?;
    let template = SparseVector::new(big_n, (0..m).collect(), vec![1.0; m])?;
    Ok(Adversarial { dictionary, template, block, mu, mu_tilde: mt, l, tail_coherence })
}
