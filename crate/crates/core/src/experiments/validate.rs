//! Monte Carlo checks of the probabilistic lemmas and the solver invariants.

use rayon::prelude::*;

use super::curve::binomial_stderr;
use crate::dictionary::{build_random_sphere, design_incoherent, DesignOptions, Dictionary};
use crate::error::{Error, Result};
use crate::guarantees::{mip_limit, sidak_bound};
use crate::linalg::{dot, norm};
use crate::rng::{derive_seed, Gaussian};
use crate::signal::{apply, random_support_vector, SignMode};
use crate::solver::{omp, support_recovered};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SidakCheck {
    pub n1: usize,
    pub n2: usize,
    pub eta: f64,
    pub correlation: f64,
    pub trials: usize,
    pub empirical: f64,
    pub bound: f64,
    /// Binomial standard error at the bound.
    pub stderr: f64,
}

impl SidakCheck {
    /// `empirical >= bound - k * stderr`.
    pub fn passes(&self, k: f64) -> bool {
        self.empirical >= self.bound - k * self.stderr
    }
}

/// Estimates `Pr[max_i |X_i| < sqrt(2 eta ln n2)]` for `n1` standard normals
/// with common correlation `correlation`, next to the product lower bound.
pub fn validate_sidak(
    n1: usize,
    n2: usize,
    eta: f64,
    correlation: f64,
    trials: usize,
    seed: u64,
) -> Result<SidakCheck> {
    if n1 == 0 || n2 < 2 || trials == 0 {
        return Err(Error::InvalidParameter(format!(
            "need n1 >= 1, n2 >= 2, trials >= 1; got ({n1}, {n2}, {trials})"
        )));
    }
    if !(eta > 0.0) || !(0.0..1.0).contains(&correlation) {
        return Err(Error::InvalidParameter(format!(
            "need eta > 0 and correlation in [0, 1); got ({eta}, {correlation})"
        )));
    }
    let threshold = (2.0 * eta * (n2 as f64).ln()).sqrt();
    let (shared, own) = (correlation.sqrt(), (1.0 - correlation).sqrt());
    let inside = (0..trials)
        .into_par_iter()
        .filter(|&t| {
            let mut g = Gaussian::new(derive_seed(seed, &[t as u64]));
            let z0 = g.sample();
            (0..n1).all(|_| (shared * z0 + own * g.sample()).abs() < threshold)
        })
        .count();
    let empirical = inside as f64 / trials as f64;
    let bound = sidak_bound(n1, n2 as f64, eta);
    Ok(SidakCheck {
        n1,
        n2,
        eta,
        correlation,
        trials,
        empirical,
        bound,
        stderr: binomial_stderr(bound.clamp(0.0, 1.0), trials),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomCoherenceCheck {
    pub rows: usize,
    pub cols: usize,
    pub trials: usize,
    pub within: usize,
    /// `2 sqrt(ln N / n)`.
    pub threshold: f64,
    /// `exp(-1 / sqrt(8 pi ln N))`.
    pub asymptotic: f64,
}

impl RandomCoherenceCheck {
    pub fn fraction(&self) -> f64 {
        self.within as f64 / self.trials as f64
    }
}

/// Fraction of random-sphere dictionaries with coherence at most
/// `2 sqrt(ln N / n)`, reported beside its large-dimension limit.
pub fn validate_random_coherence(
    rows: usize,
    cols: usize,
    trials: usize,
    seed: u64,
) -> Result<RandomCoherenceCheck> {
    if rows == 0 || rows >= cols || trials == 0 {
        return Err(Error::InvalidParameter(format!(
            "need 0 < n < N and trials >= 1; got ({rows}, {cols}, {trials})"
        )));
    }
    let ln_n = (cols as f64).ln();
    let threshold = 2.0 * (ln_n / rows as f64).sqrt();
    let within = (0..trials)
        .into_par_iter()
        .filter(|&t| build_random_sphere(rows, cols, derive_seed(seed, &[t as u64])).coherence() <= threshold)
        .count();
    Ok(RandomCoherenceCheck {
        rows,
        cols,
        trials,
        within,
        threshold,
        asymptotic: (-1.0 / (8.0 * std::f64::consts::PI * ln_n).sqrt()).exp(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverCheck {
    pub instances: usize,
    pub recovered: usize,
    /// `max |<a_j, r_t>| / ||y||` over selected `j` and every prefix length `t`.
    pub max_orthogonality: f64,
    pub repeated_selections: usize,
    pub max_coherence: f64,
}

impl SolverCheck {
    pub fn passes(&self) -> bool {
        self.recovered == self.instances
            && self.repeated_selections == 0
            && self.max_orthogonality <= 1e-8
    }
}

/// An incoherent dictionary satisfying `mu < 1/(2m-1)`, redrawn until one does.
pub fn incoherent_dictionary(rows: usize, cols: usize, m: usize, seed: u64) -> Result<Dictionary> {
    let limit = mip_limit(m);
    let mut last = f64::INFINITY;
    for attempt in 0..16u64 {
        let opts = DesignOptions::new(0.95 * limit, derive_seed(seed, &[attempt])).max_iters(500);
        let design = design_incoherent(rows, cols, opts)?;
        if design.achieved < limit {
            return Ok(design.dictionary);
        }
        last = last.min(design.achieved);
    }
    Err(Error::NoConvergence { achieved: last, target: limit })
}

/// Noiseless OMP on `instances` incoherent dictionaries with random
/// `m`-sparse vectors: counts exact recoveries and checks that every
/// intermediate residual is orthogonal to the atoms selected so far.
pub fn validate_solver(
    rows: usize,
    cols: usize,
    m: usize,
    instances: usize,
    seed: u64,
) -> Result<SolverCheck> {
    let runs: Vec<(bool, f64, usize, f64)> = (0..instances)
        .into_par_iter()
        .map(|i| {
            let d = incoherent_dictionary(rows, cols, m, derive_seed(seed, &[1, i as u64]))?;
            let x = random_support_vector(cols, m, 1.0, SignMode::Random, derive_seed(seed, &[2, i as u64]))?;
            let y = apply(&d, &x)?;
            let y_norm = norm(&y);
            let mut worst = 0.0f64;
            let mut repeats = 0;
            let mut recovered = false;
            for t in 1..=m {
                let trace = omp(&d, &y, t)?;
                for &j in &trace.selected {
                    worst = worst.max(dot(d.atom(j), &trace.residual).abs() / y_norm);
                }
                let mut sorted = trace.selected.clone();
                sorted.sort_unstable();
                sorted.dedup();
                repeats += trace.selected.len() - sorted.len();
                if t == m {
                    recovered = support_recovered(&trace, &x);
                }
            }
            Ok((recovered, worst, repeats, d.coherence()))
        })
        .collect::<Result<_>>()?;
    Ok(SolverCheck {
        instances,
        recovered: runs.iter().filter(|r| r.0).count(),
        max_orthogonality: runs.iter().map(|r| r.1).fold(0.0, f64::max),
        repeated_selections: runs.iter().map(|r| r.2).sum(),
        max_coherence: runs.iter().map(|r| r.3).fold(0.0, f64::max),
    })
}
