//! Recovery curves and their CSV form.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Two-sided 95% normal quantile used for the Wilson interval.
pub const WILSON_Z: f64 = 1.96;

pub const CSV_TITLE: &str = "# omplab recovery curve";
pub const CSV_COLUMNS: &str = "snr_norm,trials,successes,p_hat,ci_low,ci_high";

/// Wilson score interval for `successes` out of `trials` at quantile `z`.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Binomial standard error `sqrt(p (1 - p) / trials)`.
pub fn binomial_stderr(p: f64, trials: usize) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub snr_norm: f64,
    pub trials: usize,
    pub successes: usize,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl CurvePoint {
    pub fn from_counts(snr_norm: f64, successes: usize, trials: usize) -> Self {
        let (ci_low, ci_high) = wilson_interval(successes, trials, WILSON_Z);
        Self {
            snr_norm,
            trials,
            successes,
            p_hat: successes as f64 / trials as f64,
            ci_low,
            ci_high,
        }
    }

    pub fn ci_width(&self) -> f64 {
        self.ci_high - self.ci_low
    }

    pub fn stderr(&self) -> f64 {
        binomial_stderr(self.p_hat, self.trials)
    }
}

/// Guarantee lines in normalized SNR units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceLines {
    pub benhaim: f64,
    pub sharp: f64,
    pub approx_lower: f64,
}

impl ReferenceLines {
    /// `2`, `1 + sqrt(beta)` and `1 - mu - sqrt(beta)`.
    pub fn new(mu: f64, beta: f64) -> Self {
        Self { benhaim: 2.0, sharp: 1.0 + beta.sqrt(), approx_lower: 1.0 - mu - beta.sqrt() }
    }
}

/// Empirical support-recovery probability against normalized SNR.
///
/// `meta` echoes the configuration that produced the curve, in order.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryCurve {
    pub dictionary: String,
    pub m: usize,
    pub meta: Vec<(String, String)>,
    pub reference: ReferenceLines,
    pub points: Vec<CurvePoint>,
}

impl RecoveryCurve {
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Exact grid lookup.
    pub fn point_at(&self, snr_norm: f64) -> Option<&CurvePoint> {
        self.points.iter().find(|p| p.snr_norm == snr_norm)
    }

    pub fn file_name(&self) -> String {
        format!("curve_{}_{}.csv", self.dictionary, self.m)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        s.push_str(CSV_TITLE);
        s.push('\n');
        let _ = writeln!(s, "# dictionary={}", self.dictionary);
        let _ = writeln!(s, "# m={}", self.m);
        for (k, v) in &self.meta {
            let _ = writeln!(s, "# {k}={v}");
        }
        let _ = writeln!(s, "# ref_benhaim={}", self.reference.benhaim);
        let _ = writeln!(s, "# ref_sharp={}", self.reference.sharp);
        let _ = writeln!(s, "# ref_approx_lower={}", self.reference.approx_lower);
        s.push_str(CSV_COLUMNS);
        s.push('\n');
        for p in &self.points {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                p.snr_norm, p.trials, p.successes, p.p_hat, p.ci_low, p.ci_high
            );
        }
        s
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }

    /// Writes `curve_<dict>_<m>.csv` under `dir` and returns its path.
    pub fn save_in(&self, dir: impl AsRef<Path>) -> Result<std::path::PathBuf> {
        let path = dir.as_ref().join(self.file_name());
        std::fs::write(&path, self.to_csv())?;
        Ok(path)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let bad = |msg: String| Error::Format(msg);
        let mut lines = text.lines();
        if lines.next() != Some(CSV_TITLE) {
            return Err(bad("missing curve title line".into()));
        }
        let mut dictionary = None;
        let mut m = None;
        let (mut benhaim, mut sharp, mut approx_lower) = (None, None, None);
        let mut meta = Vec::new();
        let mut points = Vec::new();
        let mut in_body = false;
        for (lineno, line) in lines.enumerate() {
            let lineno = lineno + 2;
            if !in_body {
                if line == CSV_COLUMNS {
                    in_body = true;
                    continue;
                }
                let kv = line
                    .strip_prefix("# ")
                    .and_then(|l| l.split_once('='))
                    .ok_or_else(|| bad(format!("line {lineno}: expected '# key=value'")))?;
                let num = |v: &str| {
                    v.parse::<f64>().map_err(|_| bad(format!("line {lineno}: bad number {v:?}")))
                };
                match kv {
                    ("dictionary", v) => dictionary = Some(v.to_string()),
                    ("m", v) => {
                        m = Some(v.parse().map_err(|_| bad(format!("line {lineno}: bad m")))?)
                    }
                    ("ref_benhaim", v) => benhaim = Some(num(v)?),
                    ("ref_sharp", v) => sharp = Some(num(v)?),
                    ("ref_approx_lower", v) => approx_lower = Some(num(v)?),
                    (k, v) => meta.push((k.to_string(), v.to_string())),
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 6 {
                return Err(bad(format!("line {lineno}: expected 6 fields")));
            }
            let f = |i: usize| {
                fields[i].parse::<f64>().map_err(|_| bad(format!("line {lineno}: bad field {i}")))
            };
            let u = |i: usize| {
                fields[i].parse::<usize>().map_err(|_| bad(format!("line {lineno}: bad field {i}")))
            };
            points.push(CurvePoint {
                snr_norm: f(0)?,
                trials: u(1)?,
                successes: u(2)?,
                p_hat: f(3)?,
                ci_low: f(4)?,
                ci_high: f(5)?,
            });
        }
        if !in_body {
            return Err(bad("missing column header".into()));
        }
        let missing = |what: &str| bad(format!("missing header key {what}"));
        Ok(Self {
            dictionary: dictionary.ok_or_else(|| missing("dictionary"))?,
            m: m.ok_or_else(|| missing("m"))?,
            meta,
            reference: ReferenceLines {
                benhaim: benhaim.ok_or_else(|| missing("ref_benhaim"))?,
                sharp: sharp.ok_or_else(|| missing("ref_sharp"))?,
                approx_lower: approx_lower.ok_or_else(|| missing("ref_approx_lower"))?,
            },
            points,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}
