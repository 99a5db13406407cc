//! Monte Carlo recovery experiments.
//!
//! A curve fixes a dictionary (or redraws a random one per trial), sweeps a
//! grid of normalized SNR values `x_min / (sigma_eff sqrt(2 ln N))` and counts
//! exact support recoveries. Trial `t` at grid point `k` draws its support,
//! noise and (when resampling) dictionary from `derive_seed(base, [stream, k, t])`,
//! so results do not depend on how rayon schedules the trials.

mod curve;
mod validate;

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;

pub use curve::{
    binomial_stderr, wilson_interval, CurvePoint, RecoveryCurve, ReferenceLines, CSV_COLUMNS,
    CSV_TITLE, WILSON_Z,
};
pub use validate::{
    incoherent_dictionary, validate_random_coherence, validate_sidak, validate_solver,
    RandomCoherenceCheck, SidakCheck,
    SolverCheck,
};

use crate::dictionary::{
    build_adversarial, build_random_sphere, build_two_ortho, design_incoherent, welch_bound,
    Adversarial, DesignOptions, Dictionary, TailBound,
};
use crate::error::{Condition, Error, Result};
use crate::guarantees::{
    auto_beta, benhaim_prob, mip_holds, mip_limit, mu_feasible_interval, mu_tilde, sharp_prob,
    sigma_eff, sparsity_bound, ProblemParams,
};
use crate::linalg::axpy;
use crate::rng::derive_seed;
use crate::signal::{apply, noise, random_support_vector, SignMode, SparseVector};
use crate::solver::{omp, omp_star, support_recovered, StopReason};

const STREAM_DICT: u64 = 1;
const STREAM_SUPPORT: u64 = 2;
const STREAM_NOISE: u64 = 3;

/// Desk-scale dictionary shape.
pub const DESK_SHAPE: (usize, usize) = (256, 512);

/// Tail coherence target, as a multiple of the tail's Welch bound, used when
/// the adversarial `mu` is left to the interval midpoint.
pub const TAIL_WELCH_FACTOR: f64 = 1.35;
pub const TAIL_DESIGN_TOL: f64 = 1e-3;
pub const TAIL_DESIGN_ITERS: usize = 2000;

pub fn default_snr_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 * 0.25).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailSource {
    /// Alternating-projection frame design.
    Designed,
    RandomSphere,
}

impl FromStr for TailSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "designed" => Ok(Self::Designed),
            "random-sphere" | "random" => Ok(Self::RandomSphere),
            other => Err(Error::InvalidParameter(format!("unknown tail source {other:?}"))),
        }
    }
}

impl fmt::Display for TailSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Designed => "designed",
            Self::RandomSphere => "random-sphere",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdversarialSpec {
    /// Coherence of the construction; `None` takes the midpoint of the
    /// feasible interval for the measured tail coherence.
    pub mu: Option<f64>,
    pub tail: TailSource,
    pub design_iters: usize,
}

impl Default for AdversarialSpec {
    fn default() -> Self {
        Self { mu: None, tail: TailSource::Designed, design_iters: TAIL_DESIGN_ITERS }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DictionarySpec {
    TwoOrtho,
    RandomSphere,
    Adversarial(AdversarialSpec),
    File(PathBuf),
}

impl DictionarySpec {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::TwoOrtho => "two-ortho",
            Self::RandomSphere => "random-sphere",
            Self::Adversarial(_) => "adversarial",
            Self::File(_) => "file",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolverSpec {
    Omp,
    /// Threshold `tau = sigma sqrt(2 (1 + alpha) ln N)`.
    OmpStar { alpha: f64 },
}

impl SolverSpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Omp => "omp",
            Self::OmpStar { .. } => "omp-star",
        }
    }
}

/// Threshold of OMP* for noise level `sigma`.
pub fn omp_star_threshold(sigma: f64, alpha: f64, big_n: usize) -> f64 {
    sigma * (2.0 * (1.0 + alpha) * (big_n as f64).ln()).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BetaRule {
    /// `ln m / ln N`.
    Auto,
    Explicit(f64),
}

impl BetaRule {
    pub fn resolve(&self, m: usize, big_n: usize) -> f64 {
        match *self {
            Self::Auto => auto_beta(m, big_n),
            Self::Explicit(b) => b,
        }
    }
}

impl fmt::Display for BetaRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Auto => f.write_str("auto"),
            Self::Explicit(b) => write!(f, "{b}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dictionary: DictionarySpec,
    pub n: usize,
    pub big_n: usize,
    pub m: usize,
    pub sigma: f64,
    /// Strictly increasing normalized SNR values.
    pub snr_grid: Vec<f64>,
    /// Merge the three reference lines into the grid.
    pub include_reference: bool,
    pub trials: usize,
    pub base_seed: u64,
    pub solver: SolverSpec,
    pub beta: BetaRule,
    /// Signs of random-support coefficients; the adversarial vector is all positive.
    pub signs: SignMode,
    /// Redraw the random-sphere dictionary for every trial.
    pub resample: bool,
}

impl ExperimentConfig {
    /// Desk-scale defaults: OMP, `sigma = 1`, 500 trials, the default grid
    /// plus the reference lines.
    pub fn new(dictionary: DictionarySpec, n: usize, big_n: usize, m: usize) -> Self {
        Self {
            dictionary,
            n,
            big_n,
            m,
            sigma: 1.0,
            snr_grid: default_snr_grid(),
            include_reference: true,
            trials: 500,
            base_seed: 0,
            solver: SolverSpec::Omp,
            beta: BetaRule::Auto,
            signs: SignMode::Positive,
            resample: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.n == 0 || self.big_n < 2 {
            return bad(format!("need n >= 1 and N >= 2, got ({}, {})", self.n, self.big_n));
        }
        if self.m == 0 || self.m > self.n.min(self.big_n) {
            return Err(Error::BadSparsity { m: self.m, max: self.n.min(self.big_n) });
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma must be positive, got {}", self.sigma));
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.snr_grid.is_empty() {
            return bad("snr grid is empty".into());
        }
        if self.snr_grid.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return bad("snr grid values must be finite and >= 0".into());
        }
        if self.snr_grid.windows(2).any(|w| w[0] >= w[1]) {
            return bad("snr grid must be strictly increasing".into());
        }
        if let SolverSpec::OmpStar { alpha } = self.solver {
            if !(alpha >= 0.0) {
                return bad(format!("alpha must be >= 0, got {alpha}"));
            }
        }
        if let BetaRule::Explicit(b) = self.beta {
            if !(b > 0.0 && b < 1.0) {
                return bad(format!("beta must lie in (0, 1), got {b}"));
            }
        }
        if self.resample && self.dictionary != DictionarySpec::RandomSphere {
            return bad(format!("resampling applies to random-sphere, not {}", self.dictionary.kind()));
        }
        if self.dictionary == DictionarySpec::TwoOrtho && self.big_n != 2 * self.n {
            return bad(format!("two-ortho needs N = 2n, got ({}, {})", self.n, self.big_n));
        }
        Ok(())
    }

    /// Key/value echo of every field, in a stable order.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = Vec::new();
        let mut put = |k: &str, v: String| out.push((k.to_string(), v));
        put("dictionary", self.dictionary.kind().to_string());
        match &self.dictionary {
            DictionarySpec::Adversarial(a) => {
                put("adversarial_mu", a.mu.map_or("midpoint".to_string(), |m| m.to_string()));
                put("tail_source", a.tail.to_string());
                put("design_iters", a.design_iters.to_string());
            }
            DictionarySpec::File(p) => put("dict_file", p.display().to_string()),
            _ => {}
        }
        put("n", self.n.to_string());
        put("N", self.big_n.to_string());
        put("m", self.m.to_string());
        put("sigma", self.sigma.to_string());
        put("trials", self.trials.to_string());
        put("seed", self.base_seed.to_string());
        put("solver", self.solver.name().to_string());
        if let SolverSpec::OmpStar { alpha } = self.solver {
            put("alpha", alpha.to_string());
        }
        put("beta_rule", self.beta.to_string());
        put("signs", self.signs.to_string());
        put("resample", self.resample.to_string());
        put("include_reference", self.include_reference.to_string());
        put(
            "snr_grid",
            self.snr_grid.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";"),
        );
        out
    }
}

/// The adversarial dictionary with its tail drawn per `spec`.
///
/// A designed tail targets `L_max(mu) - tol` when `mu` is given, so the
/// feasible interval contains `mu`, and `1.35` times the tail Welch bound
/// otherwise.
pub fn build_adversarial_dictionary(
    n: usize,
    big_n: usize,
    m: usize,
    spec: &AdversarialSpec,
    seed: u64,
) -> Result<Adversarial> {
    if m == 0 || m >= n || m >= big_n {
        return Err(Error::BadSparsity { m, max: n.min(big_n).saturating_sub(1) });
    }
    let (nt, bt) = (n - m, big_n - m);
    if let Some(mu) = spec.mu {
        if !mip_holds(m, mu) {
            return Err(Error::ConditionViolated {
                condition: Condition::Mip,
                detail: format!("mu = {mu} is not below 1/(2m-1) = {}", mip_limit(m)),
            });
        }
    }
    let tail = match spec.tail {
        TailSource::RandomSphere => build_random_sphere(nt, bt, seed),
        TailSource::Designed => {
            let target = match spec.mu {
                Some(mu) => {
                    let mt = mu_tilde(m, mu)?;
                    (mu - mt) / (1.0 - mt) - TAIL_DESIGN_TOL
                }
                None => TAIL_WELCH_FACTOR * welch_bound(nt, bt),
            };
            let opts = DesignOptions::new(target, seed)
                .max_iters(spec.design_iters)
                .tol(TAIL_DESIGN_TOL);
            design_incoherent(nt, bt, opts)?.dictionary
        }
    };
    let mu = match spec.mu {
        Some(mu) => mu,
        None => {
            let l = tail.coherence();
            if m as f64 > sparsity_bound(l) {
                return Err(Error::ConditionViolated {
                    condition: Condition::SparsityVsTail,
                    detail: format!("m = {m} exceeds {} for tail coherence {l}", sparsity_bound(l)),
                });
            }
            let (lo, hi) = mu_feasible_interval(m, l).ok_or_else(|| Error::ConditionViolated {
                condition: Condition::MuInterval,
                detail: format!("no feasible mu for m = {m}, L = {l}"),
            })?;
            0.5 * (lo + hi)
        }
    };
    build_adversarial(n, big_n, m, mu, &tail, TailBound::Measured)
}

/// Dictionary and support template shared by every trial of a curve.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub dictionary: Dictionary,
    pub mu: f64,
    /// Fixed unit-coefficient vector; `None` means a fresh random support per trial.
    pub template: Option<SparseVector>,
    pub notes: Vec<(String, String)>,
}

pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    cfg.validate()?;
    let seed = derive_seed(cfg.base_seed, &[STREAM_DICT]);
    let (dictionary, template, notes) = match &cfg.dictionary {
        DictionarySpec::TwoOrtho => (build_two_ortho(cfg.n)?, None, Vec::new()),
        DictionarySpec::RandomSphere => (build_random_sphere(cfg.n, cfg.big_n, seed), None, Vec::new()),
        DictionarySpec::File(path) => {
            let d = Dictionary::load(path)?;
            if d.rows() != cfg.n {
                return Err(Error::DimensionMismatch { expected: cfg.n, actual: d.rows() });
            }
            if d.cols() != cfg.big_n {
                return Err(Error::DimensionMismatch { expected: cfg.big_n, actual: d.cols() });
            }
            (d, None, Vec::new())
        }
        DictionarySpec::Adversarial(spec) => {
            let adv = build_adversarial_dictionary(cfg.n, cfg.big_n, cfg.m, spec, seed)?;
            let notes = vec![
                ("adversarial_mu_value".to_string(), adv.mu.to_string()),
                ("mu_tilde".to_string(), adv.mu_tilde.to_string()),
                ("tail_coherence".to_string(), adv.tail_coherence.to_string()),
            ];
            (adv.dictionary, Some(adv.template), notes)
        }
    };
    let mu = dictionary.coherence();
    Ok(Prepared { dictionary, mu, template, notes })
}

/// Per-point tallies beyond the success count.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSummary {
    pub snr_norm: f64,
    pub trials: usize,
    pub successes: usize,
    /// First selected atom outside the support (or no atom selected).
    pub first_step_failures: usize,
    /// Iterations at stop -> number of trials.
    pub stop_histogram: BTreeMap<usize, usize>,
    /// Stopped after exactly `m` iterations with the correct support.
    pub exact_stops_recovered: usize,
}

impl PointSummary {
    pub fn first_step_failure_rate(&self) -> f64 {
        self.first_step_failures as f64 / self.trials as f64
    }

    pub fn exact_stop_fraction(&self, m: usize) -> f64 {
        self.stop_histogram.get(&m).copied().unwrap_or(0) as f64 / self.trials as f64
    }

    pub fn exact_stop_recovered_fraction(&self) -> f64 {
        self.exact_stops_recovered as f64 / self.trials as f64
    }
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub curve: RecoveryCurve,
    pub points: Vec<PointSummary>,
    pub mu: f64,
    pub beta: f64,
    pub sigma_eff: f64,
}

struct TrialOutcome {
    success: bool,
    first_step_failure: bool,
    iterations: usize,
    exact_stop_recovered: bool,
}

fn effective_grid(cfg: &ExperimentConfig, reference: &ReferenceLines) -> Vec<f64> {
    let mut grid = cfg.snr_grid.clone();
    if cfg.include_reference {
        grid.extend([reference.benhaim, reference.sharp]);
        if reference.approx_lower >= 0.0 {
            grid.push(reference.approx_lower);
        }
        grid.sort_by(f64::total_cmp);
        grid.dedup();
    }
    grid
}

fn run_trial(
    cfg: &ExperimentConfig,
    prepared: &Prepared,
    snr: f64,
    point: usize,
    trial: usize,
) -> Result<TrialOutcome> {
    let path = |stream: u64| derive_seed(cfg.base_seed, &[stream, point as u64, trial as u64]);
    let redrawn;
    let (d, mu) = if cfg.resample {
        redrawn = build_random_sphere(cfg.n, cfg.big_n, path(STREAM_DICT));
        let mu = redrawn.coherence();
        (&redrawn, mu)
    } else {
        (&prepared.dictionary, prepared.mu)
    };
    let x = match &prepared.template {
        Some(t) => t.clone(),
        None => random_support_vector(cfg.big_n, cfg.m, 1.0, cfg.signs, path(STREAM_SUPPORT))?,
    };
    let nu = snr * sigma_eff(cfg.sigma, cfg.m, mu)? * (2.0 * (cfg.big_n as f64).ln()).sqrt();
    // y = nu A x + sigma w keeps the support defined when nu = 0.
    let mut y = apply(d, &x)?;
    y.iter_mut().for_each(|v| *v *= nu);
    axpy(cfg.sigma, &noise(cfg.n, path(STREAM_NOISE)), &mut y);
    let trace = match cfg.solver {
        SolverSpec::Omp => omp(d, &y, cfg.m)?,
        SolverSpec::OmpStar { alpha } => {
            let tau = omp_star_threshold(cfg.sigma, alpha, cfg.big_n);
            omp_star(d, &y, tau, cfg.n.min(cfg.big_n))?
        }
    };
    let success = support_recovered(&trace, &x);
    let first_step_failure =
        trace.selected.first().is_none_or(|j| x.support().binary_search(j).is_err());
    let iterations = trace.iterations();
    Ok(TrialOutcome {
        success,
        first_step_failure,
        iterations,
        exact_stop_recovered: success
            && iterations == cfg.m
            && trace.stop_reason != StopReason::IterationsExhausted,
    })
}

/// Runs every grid point with a dictionary prepared once.
pub fn simulate_with(cfg: &ExperimentConfig, prepared: &Prepared) -> Result<Simulation> {
    cfg.validate()?;
    let beta = cfg.beta.resolve(cfg.m, cfg.big_n);
    let mu = if cfg.resample {
        let draws: Vec<f64> = (0..cfg.trials.min(16))
            .into_par_iter()
            .map(|t| build_random_sphere(cfg.n, cfg.big_n, derive_seed(cfg.base_seed, &[STREAM_DICT, 0, t as u64])).coherence())
            .collect();
        draws.iter().sum::<f64>() / draws.len() as f64
    } else {
        prepared.mu
    };
    let s_eff = sigma_eff(cfg.sigma, cfg.m, mu)?;
    let params = ProblemParams::new(cfg.n, cfg.big_n, cfg.m, mu, cfg.sigma).with_beta(beta);
    let reference = ReferenceLines::new(mu, beta);
    let grid = effective_grid(cfg, &reference);

    let mut points = Vec::with_capacity(grid.len());
    let mut summaries = Vec::with_capacity(grid.len());
    for (k, &snr) in grid.iter().enumerate() {
        let outcomes: Vec<TrialOutcome> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| run_trial(cfg, prepared, snr, k, t))
            .collect::<Result<_>>()?;
        let mut summary = PointSummary {
            snr_norm: snr,
            trials: cfg.trials,
            successes: 0,
            first_step_failures: 0,
            stop_histogram: BTreeMap::new(),
            exact_stops_recovered: 0,
        };
        for o in &outcomes {
            summary.successes += o.success as usize;
            summary.first_step_failures += o.first_step_failure as usize;
            summary.exact_stops_recovered += o.exact_stop_recovered as usize;
            *summary.stop_histogram.entry(o.iterations).or_default() += 1;
        }
        points.push(CurvePoint::from_counts(snr, summary.successes, cfg.trials));
        summaries.push(summary);
    }

    let mut meta = cfg.echo();
    meta.retain(|(k, _)| k != "dictionary" && k != "m");
    meta.push(("dict_label".into(), prepared.dictionary.label().to_string()));
    meta.push((
        if cfg.resample { "mu_mean" } else { "mu" }.into(),
        mu.to_string(),
    ));
    meta.extend(prepared.notes.iter().cloned());
    meta.push(("beta".into(), beta.to_string()));
    meta.push(("sigma_eff".into(), s_eff.to_string()));
    meta.push(("snr_norm_definition".into(), "x_min/(sigma_eff*sqrt(2*ln(N)))".into()));
    meta.push(("benhaim_prob".into(), benhaim_prob(&params)?.to_string()));
    meta.push(("sharp_prob".into(), sharp_prob(&params)?.to_string()));
    meta.push(("wilson_z".into(), WILSON_Z.to_string()));

    Ok(Simulation {
        curve: RecoveryCurve {
            dictionary: cfg.dictionary.kind().to_string(),
            m: cfg.m,
            meta,
            reference,
            points,
        },
        points: summaries,
        mu,
        beta,
        sigma_eff: s_eff,
    })
}

pub fn simulate(cfg: &ExperimentConfig) -> Result<Simulation> {
    let prepared = prepare(cfg)?;
    simulate_with(cfg, &prepared)
}

/// Empirical probability of exact support recovery over the SNR grid.
///
/// Fails as a whole if the dictionary cannot be built or violates the
/// incoherence condition needed to define the normalization.
pub fn recovery_curve(cfg: &ExperimentConfig) -> Result<RecoveryCurve> {
    Ok(simulate(cfg)?.curve)
}

/// Per grid point, the fraction of trials whose first selection missed the
/// support. Requires the adversarial dictionary and its fixed vector.
pub fn first_step_failure_rate(cfg: &ExperimentConfig) -> Result<Vec<(f64, f64)>> {
    if !matches!(cfg.dictionary, DictionarySpec::Adversarial(_)) {
        return Err(Error::InvalidParameter(
            "first-step failure rate needs the adversarial dictionary".into(),
        ));
    }
    Ok(simulate(cfg)?
        .points
        .iter()
        .map(|p| (p.snr_norm, p.first_step_failure_rate()))
        .collect())
}

/// Histogram of OMP* iteration counts at each grid point.
pub fn omp_star_stop_stats(cfg: &ExperimentConfig) -> Result<Vec<PointSummary>> {
    if !matches!(cfg.solver, SolverSpec::OmpStar { .. }) {
        return Err(Error::InvalidParameter("stop statistics need the omp-star solver".into()));
    }
    Ok(simulate(cfg)?.points)
}
