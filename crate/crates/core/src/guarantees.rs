//! Closed-form recovery guarantees, failure thresholds and probability bounds.
//!
//! All logarithms are natural. Values that can turn negative or vacuous are
//! returned as computed; the report carries flags instead of clamping.

use std::fmt;

use crate::error::{Error, Result};

/// Parameter bundle shared by the guarantee formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemParams {
    pub n: usize,
    pub big_n: usize,
    pub m: usize,
    pub mu: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl ProblemParams {
    /// Builds a bundle with `alpha = 0` and the automatic `beta`.
    pub fn new(n: usize, big_n: usize, m: usize, mu: f64, sigma: f64) -> Self {
        Self { n, big_n, m, mu, sigma, alpha: 0.0, beta: auto_beta(m, big_n) }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    fn ln_n(&self) -> f64 {
        (self.big_n as f64).ln()
    }

    fn sigma_eff(&self) -> Result<f64> {
        sigma_eff(self.sigma, self.m, self.mu)
    }

    fn check_alpha(&self) -> Result<()> {
        if !(self.alpha >= 0.0) {
            return Err(Error::InvalidParameter(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        if self.big_n < 2 {
            return Err(Error::InvalidParameter("N must be at least 2".into()));
        }
        Ok(())
    }

    fn check_beta(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "beta must lie in (0, 1), got {}",
                self.beta
            )));
        }
        Ok(())
    }
}

/// `1 / (2m - 1)`.
pub fn mip_limit(m: usize) -> f64 {
    1.0 / (2.0 * m as f64 - 1.0)
}

/// Mutual incoherence property: `mu < 1/(2m-1)`, strict.
pub fn mip_holds(m: usize, mu: f64) -> bool {
    m >= 1 && mu < mip_limit(m)
}

fn require_mip(m: usize, mu: f64) -> Result<()> {
    if mip_holds(m, mu) {
        Ok(())
    } else {
        Err(Error::MipViolated { m, mu, limit: mip_limit(m) })
    }
}

/// Effective noise level `sigma / (1 - (2m-1) mu)`.
pub fn sigma_eff(sigma: f64, m: usize, mu: f64) -> Result<f64> {
    require_mip(m, mu)?;
    Ok(sigma / (1.0 - (2.0 * m as f64 - 1.0) * mu))
}

/// Smallest exponent with `m <= N^beta`: `ln m / ln N`.
pub fn auto_beta(m: usize, big_n: usize) -> f64 {
    (m as f64).ln() / (big_n as f64).ln()
}

/// `2 sigma_eff sqrt(2(1+alpha) ln N)`.
pub fn benhaim_threshold(p: &ProblemParams) -> Result<f64> {
    p.check_alpha()?;
    Ok(2.0 * p.sigma_eff()? * (2.0 * (1.0 + p.alpha) * p.ln_n()).sqrt())
}

/// `1 - N^-alpha / sqrt(pi (1+alpha) ln N)`.
pub fn benhaim_prob(p: &ProblemParams) -> Result<f64> {
    p.check_alpha()?;
    require_mip(p.m, p.mu)?;
    let n = p.big_n as f64;
    Ok(1.0 - n.powf(-p.alpha) / (std::f64::consts::PI * (1.0 + p.alpha) * p.ln_n()).sqrt())
}

fn check_sharp(p: &ProblemParams) -> Result<()> {
    p.check_alpha()?;
    p.check_beta()?;
    require_mip(p.m, p.mu)?;
    let bound = (p.big_n as f64).powf(p.beta);
    // auto beta reproduces m only up to rounding
    if p.m as f64 > bound * (1.0 + 1e-12) {
        return Err(Error::BetaInconsistent { m: p.m, beta: p.beta, bound });
    }
    Ok(())
}

/// `sigma_eff (1 + sqrt(beta)) sqrt(2(1+alpha) ln N)`.
pub fn sharp_threshold(p: &ProblemParams) -> Result<f64> {
    check_sharp(p)?;
    Ok(p.sigma_eff()? * (1.0 + p.beta.sqrt()) * (2.0 * (1.0 + p.alpha) * p.ln_n()).sqrt())
}

/// `1 - (N^-alpha + N^-(alpha beta) / sqrt(beta)) / sqrt(pi (1+alpha) ln N)`.
pub fn sharp_prob(p: &ProblemParams) -> Result<f64> {
    check_sharp(p)?;
    let n = p.big_n as f64;
    let head = 1.0 / (std::f64::consts::PI * (1.0 + p.alpha) * p.ln_n()).sqrt();
    Ok(1.0 - head * (n.powf(-p.alpha) + n.powf(-p.alpha * p.beta) / p.beta.sqrt()))
}

/// Weakest sufficient condition: `sigma_eff (1 + sqrt(beta)) sqrt(2 ln N)`.
pub fn approx_sufficient(p: &ProblemParams) -> Result<f64> {
    p.check_beta()?;
    Ok(p.sigma_eff()? * (1.0 + p.beta.sqrt()) * (2.0 * p.ln_n()).sqrt())
}

/// Approximate failure level: `sigma_eff (1 - mu - sqrt(beta)) sqrt(2 ln N)`.
pub fn approx_lower(p: &ProblemParams) -> Result<f64> {
    p.check_beta()?;
    Ok(p.sigma_eff()? * (1.0 - p.mu - p.beta.sqrt()) * (2.0 * p.ln_n()).sqrt())
}

fn require_well_defined(m: usize, mu: f64) -> Result<f64> {
    let slack = 1.0 - (m as f64 - 1.0) * mu;
    if m == 0 || !(slack > 0.0) {
        return Err(Error::Degenerate(format!("1 - (m-1) mu = {slack} is not positive")));
    }
    Ok(slack)
}

/// `sqrt((1 - (m-1) mu) / m)`.
pub fn rho(m: usize, mu: f64) -> Result<f64> {
    Ok((require_well_defined(m, mu)? / m as f64).sqrt())
}

/// `mu^2 m / (1 - (m-1) mu)`.
pub fn mu_tilde(m: usize, mu: f64) -> Result<f64> {
    Ok(mu * mu * m as f64 / require_well_defined(m, mu)?)
}

/// Largest admissible sparsity against a tail of coherence `l`:
/// `(3 - L - sqrt(8 - 8L)) / L`.
pub fn sparsity_bound(l: f64) -> f64 {
    (3.0 - l - (8.0 - 8.0 * l).sqrt()) / l
}

/// Coefficients `(a, b, c)` of `a mu^2 - b mu + c <= 0`, the condition that the
/// tail-tail inner products of the adversarial dictionary stay below `mu`.
pub fn mu_quadratic(m: usize, l: f64) -> (f64, f64, f64) {
    let mf = m as f64;
    (2.0 * mf - 1.0 - l * mf, l * (mf - 1.0) + 1.0, l)
}

/// Closed interval of coherences compatible with a tail of coherence `l`,
/// or `None` when the discriminant is negative.
pub fn mu_feasible_interval(m: usize, l: f64) -> Option<(f64, f64)> {
    let (a, b, c) = mu_quadratic(m, l);
    let disc = 1.0 - 4.0 * c * a / (b * b);
    if !(disc >= 0.0) || a <= 0.0 {
        return None;
    }
    let root = disc.sqrt();
    Some((b * (1.0 - root) / (2.0 * a), b * (1.0 + root) / (2.0 * a)))
}

/// Pass/fail of each hypothesis of the adversarial lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConditionFlags {
    pub mip: bool,
    pub sparsity: bool,
    pub sparsity_vs_tail: bool,
    pub mu_interval: bool,
}

impl ConditionFlags {
    pub fn all(&self) -> bool {
        self.mip && self.sparsity && self.sparsity_vs_tail && self.mu_interval
    }

    pub fn entries(&self) -> [(&'static str, bool); 4] {
        [
            ("MIP", self.mip),
            ("sparsity", self.sparsity),
            ("sparsity_vs_tail", self.sparsity_vs_tail),
            ("mu_interval", self.mu_interval),
        ]
    }
}

impl fmt::Display for ConditionFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .entries()
            .iter()
            .map(|(k, v)| format!("{k}={}", if *v { "pass" } else { "fail" }))
            .collect();
        f.write_str(&parts.join(" "))
    }
}

pub fn tightness_conditions(
    m: usize,
    mu: f64,
    l: f64,
    beta: f64,
    n: usize,
    big_n: usize,
) -> ConditionFlags {
    let sparsity = (m as f64) <= (big_n as f64).powf(beta) * (1.0 + 1e-12) && m <= n;
    let mu_interval = match mu_feasible_interval(m, l) {
        Some((lo, hi)) => lo <= mu && mu <= hi,
        None => false,
    };
    ConditionFlags {
        mip: mip_holds(m, mu),
        sparsity,
        sparsity_vs_tail: m as f64 <= sparsity_bound(l),
        mu_interval,
    }
}

fn ln_ln(x: usize, what: &str) -> Result<f64> {
    if x < 3 {
        return Err(Error::Degenerate(format!("{what} = {x} must be at least 3 for log log")));
    }
    Ok((x as f64).ln().ln())
}

/// Coefficient level below which OMP fails on the adversarial dictionary.
///
/// `sigma_eff { sqrt(2(1-mu)(1-mu~) ln N~) - sqrt(2 beta (1-rho^2) ln N)
///   - c0 sqrt((1-mu~) ln ln N~) - (rho + sqrt(mu~)) sqrt(2 ln ln N) }`
pub fn xmin_thm3(p: &ProblemParams, n_tail: usize, c0: f64) -> Result<f64> {
    let lln_tail = ln_ln(n_tail, "N~")?;
    let lln = ln_ln(p.big_n, "N")?;
    if !(c0 > 0.0) {
        return Err(Error::InvalidParameter(format!("c0 must be positive, got {c0}")));
    }
    let s = p.sigma_eff()?;
    let r = rho(p.m, p.mu)?;
    let mt = mu_tilde(p.m, p.mu)?;
    let ln_tail = (n_tail as f64).ln();
    let t1 = (2.0 * (1.0 - p.mu) * (1.0 - mt) * ln_tail).sqrt();
    let t2 = (2.0 * p.beta * (1.0 - r * r) * p.ln_n()).sqrt();
    let t3 = c0 * ((1.0 - mt) * lln_tail).sqrt();
    let t4 = (r + mt.sqrt()) * (2.0 * lln).sqrt();
    Ok(s * (t1 - t2 - t3 - t4))
}

/// Probability lower bound for the adversarial failure event.
pub fn failure_prob_p0(n_tail: usize, big_n: usize, mu: f64, beta: f64, c: f64) -> Result<f64> {
    let lln_tail = ln_ln(n_tail, "N~")?;
    let lln = ln_ln(big_n, "N")?;
    if !(mu > 0.0 && beta > 0.0 && c > 0.0) {
        return Err(Error::InvalidParameter("mu, beta and C must be positive".into()));
    }
    let ln_tail = (n_tail as f64).ln();
    let ln = (big_n as f64).ln();
    let pi = std::f64::consts::PI;
    let concentration = 6.0 * (-c * (lln_tail * (1.0 / mu).min(ln_tail)).sqrt()).exp();
    Ok(1.0 - concentration - 1.0 / (ln * (pi * lln).sqrt()) - 1.0 / (pi * beta * ln).sqrt())
}

/// Lower bound on `P[max_{i<=n1} |X_i| < sqrt(2 eta ln n2)]` for unit-variance
/// jointly Gaussian `X`: `1 - n1 / (n2^eta sqrt(pi eta ln n2))`.
pub fn sidak_bound(n1: usize, n2: f64, eta: f64) -> f64 {
    let ln = n2.ln();
    1.0 - n1 as f64 / (n2.powf(eta) * (std::f64::consts::PI * eta * ln).sqrt())
}

/// One row of the `(m, mu)` feasibility scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionRow {
    pub m: usize,
    pub mip_lo: f64,
    pub mip_hi: f64,
    pub interval: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub l: f64,
    pub rows: Vec<RegionRow>,
    /// `floor((3 - L - sqrt(8 - 8L)) / L)`.
    pub tail_max_m: usize,
}

impl Region {
    /// Largest `m` with a non-empty `[L, 1/(2m-1))`.
    pub fn max_m_mip(&self) -> usize {
        self.rows.iter().map(|r| r.m).max().unwrap_or(0)
    }

    /// Largest `m` with a non-empty interval and `m` admissible against the tail.
    pub fn max_m_interval(&self) -> usize {
        self.rows
            .iter()
            .filter(|r| r.interval.is_some() && r.m <= self.tail_max_m)
            .map(|r| r.m)
            .max()
            .unwrap_or(0)
    }

    pub fn ratio(&self) -> f64 {
        self.max_m_mip() as f64 / self.tail_max_m as f64
    }
}

/// Allowed `(m, mu)` pairs under MIP with `mu >= L`, and under the tail
/// interval condition, for each `m` where the MIP range is non-empty.
///
/// `l = None` uses the Welch bound of `(n_tail, big_n_tail)`.
pub fn region_scan(n_tail: usize, big_n_tail: usize, l: Option<f64>) -> Result<Region> {
    let l = match l {
        Some(l) => l,
        None => crate::dictionary::coherence_bounds(n_tail, big_n_tail)?.welch_lower,
    };
    if !(l > 0.0 && l < 1.0) {
        return Err(Error::InvalidParameter(format!("L must lie in (0, 1), got {l}")));
    }
    let mut rows = Vec::new();
    let mut m = 1;
    while l < mip_limit(m) {
        rows.push(RegionRow { m, mip_lo: l, mip_hi: mip_limit(m), interval: mu_feasible_interval(m, l) });
        m += 1;
    }
    Ok(Region { l, rows, tail_max_m: sparsity_bound(l).floor().max(0.0) as usize })
}

/// Tuning of [`GuaranteeReport::evaluate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportOptions {
    /// Tail coherence bound; `None` uses the Welch bound of `(n-m, N-m)`.
    pub l: Option<f64>,
    pub c0: f64,
    pub c: f64,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self { l: None, c0: 1.0, c: 1.0 }
    }
}

/// Every guarantee quantity for one parameter bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct GuaranteeReport {
    pub params: ProblemParams,
    pub mip_ok: bool,
    pub sigma_eff: f64,
    pub benhaim_threshold: f64,
    pub benhaim_prob: f64,
    pub sharp_threshold: f64,
    pub sharp_prob: f64,
    pub approx_sufficient: f64,
    pub approx_lower: f64,
    pub rho: f64,
    pub mu_tilde: f64,
    pub l: Option<f64>,
    pub mu_interval: Option<(f64, f64)>,
    pub xmin_thm3: Option<f64>,
    pub p0: Option<f64>,
    pub flags: ConditionFlags,
    pub c0: f64,
    pub c: f64,
}

impl GuaranteeReport {
    /// Column order of [`GuaranteeReport::csv_row`].
    pub const CSV_HEADER: &'static str = "n,N,m,mu,sigma,alpha,beta,c0,C,mip_ok,sigma_eff,\
benhaim_threshold,benhaim_prob,sharp_threshold,sharp_prob,approx_sufficient,approx_lower,\
rho,mu_tilde,L,mu_lo,mu_hi,xmin_thm3,p0,flag_mip,flag_sparsity,flag_sparsity_vs_tail,flag_mu_interval";

    pub fn evaluate(p: &ProblemParams, opts: &ReportOptions) -> Result<Self> {
        require_mip(p.m, p.mu)?;
        let tail = (p.n.saturating_sub(p.m), p.big_n.saturating_sub(p.m));
        let l = match opts.l {
            Some(l) => Some(l),
            None if tail.0 >= 1 && tail.0 < tail.1 => {
                Some(crate::dictionary::welch_bound(tail.0, tail.1))
            }
            None => None,
        };
        let flags = match l {
            Some(l) => tightness_conditions(p.m, p.mu, l, p.beta, p.n, p.big_n),
            None => ConditionFlags {
                mip: true,
                sparsity: false,
                sparsity_vs_tail: false,
                mu_interval: false,
            },
        };
        let xmin = if tail.1 >= 3 && p.big_n >= 3 {
            Some(xmin_thm3(p, tail.1, opts.c0)?)
        } else {
            None
        };
        let p0 = if tail.1 >= 3 && p.mu > 0.0 {
            Some(failure_prob_p0(tail.1, p.big_n, p.mu, p.beta, opts.c)?)
        } else {
            None
        };
        Ok(Self {
            params: *p,
            mip_ok: true,
            sigma_eff: sigma_eff(p.sigma, p.m, p.mu)?,
            benhaim_threshold: benhaim_threshold(p)?,
            benhaim_prob: benhaim_prob(p)?,
            sharp_threshold: sharp_threshold(p)?,
            sharp_prob: sharp_prob(p)?,
            approx_sufficient: approx_sufficient(p)?,
            approx_lower: approx_lower(p)?,
            rho: rho(p.m, p.mu)?,
            mu_tilde: mu_tilde(p.m, p.mu)?,
            l,
            mu_interval: l.and_then(|l| mu_feasible_interval(p.m, l)),
            xmin_thm3: xmin,
            p0,
            flags,
            c0: opts.c0,
            c: opts.c,
        })
    }

    pub fn approx_lower_positive(&self) -> bool {
        self.approx_lower > 0.0
    }

    pub fn p0_vacuous(&self) -> bool {
        self.p0.is_some_and(|p| p <= 0.0)
    }

    fn opt(v: Option<f64>) -> String {
        v.map(|x| x.to_string()).unwrap_or_default()
    }

    pub fn csv_row(&self) -> String {
        let p = &self.params;
        let (lo, hi) = match self.mu_interval {
            Some((a, b)) => (a.to_string(), b.to_string()),
            None => (String::new(), String::new()),
        };
        let f = |b: bool| if b { "pass" } else { "fail" };
        [
            p.n.to_string(),
            p.big_n.to_string(),
            p.m.to_string(),
            p.mu.to_string(),
            p.sigma.to_string(),
            p.alpha.to_string(),
            p.beta.to_string(),
            self.c0.to_string(),
            self.c.to_string(),
            self.mip_ok.to_string(),
            self.sigma_eff.to_string(),
            self.benhaim_threshold.to_string(),
            self.benhaim_prob.to_string(),
            self.sharp_threshold.to_string(),
            self.sharp_prob.to_string(),
            self.approx_sufficient.to_string(),
            self.approx_lower.to_string(),
            self.rho.to_string(),
            self.mu_tilde.to_string(),
            Self::opt(self.l),
            lo,
            hi,
            Self::opt(self.xmin_thm3),
            Self::opt(self.p0),
            f(self.flags.mip).into(),
            f(self.flags.sparsity).into(),
            f(self.flags.sparsity_vs_tail).into(),
            f(self.flags.mu_interval).into(),
        ]
        .join(",")
    }
}

impl fmt::Display for GuaranteeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = &self.params;
        let mut lines: Vec<(&str, String)> = vec![
            ("n", p.n.to_string()),
            ("N", p.big_n.to_string()),
            ("m", p.m.to_string()),
            ("mu", p.mu.to_string()),
            ("sigma", p.sigma.to_string()),
            ("alpha", p.alpha.to_string()),
            ("beta", p.beta.to_string()),
            ("c0 (assumed)", self.c0.to_string()),
            ("C (assumed)", self.c.to_string()),
            ("mip_ok", self.mip_ok.to_string()),
            ("sigma_eff", format!("{:.6}", self.sigma_eff)),
            ("benhaim_threshold", format!("{:.6}", self.benhaim_threshold)),
            ("benhaim_prob", format!("{:.6}", self.benhaim_prob)),
            ("sharp_threshold", format!("{:.6}", self.sharp_threshold)),
            ("sharp_prob", format!("{:.6}", self.sharp_prob)),
            ("approx_sufficient", format!("{:.6}", self.approx_sufficient)),
        ];
        let lower_note = if self.approx_lower_positive() { "" } else { "  [non-positive]" };
        lines.push(("approx_lower", format!("{:.6}{lower_note}", self.approx_lower)));
        lines.push(("rho", format!("{:.6}", self.rho)));
        lines.push(("mu_tilde", format!("{:.6}", self.mu_tilde)));
        lines.push(("L", self.l.map_or("n/a".into(), |l| format!("{l:.6}"))));
        lines.push((
            "mu_interval",
            match self.mu_interval {
                Some((a, b)) => format!("[{a:.6}, {b:.6}]"),
                None => "empty".into(),
            },
        ));
        lines.push((
            "xmin_thm3",
            match self.xmin_thm3 {
                Some(x) if x <= 0.0 => format!("{x:.6}  [non-positive]"),
                Some(x) => format!("{x:.6}"),
                None => "n/a".into(),
            },
        ));
        lines.push((
            "p0",
            match self.p0 {
                Some(x) if x <= 0.0 => format!("{x:.6}  [vacuous]"),
                Some(x) => format!("{x:.6}"),
                None => "n/a".into(),
            },
        ));
        lines.push(("conditions", self.flags.to_string()));
        let width = lines.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        for (k, v) in lines {
            writeln!(f, "{k:<width$} : {v}")?;
        }
        Ok(())
    }
}
