//! Sparse vectors and noisy observations `y = A x + sigma w`.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::Rng;

use crate::dictionary::Dictionary;
use crate::error::{Error, Result};
use crate::rng::{stream, Gaussian};

/// A vector of length `len` stored as a strictly increasing support with
/// non-zero values.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector {
    len: usize,
    support: Vec<usize>,
    values: Vec<f64>,
}

impl SparseVector {
    pub fn new(len: usize, support: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if support.len() != values.len() {
            return Err(Error::DimensionMismatch { expected: support.len(), actual: values.len() });
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("support must be strictly increasing".into()));
        }
        if support.last().is_some_and(|&i| i >= len) {
            return Err(Error::InvalidParameter(format!("support index out of range 0..{len}")));
        }
        if values.iter().any(|v| *v == 0.0 || !v.is_finite()) {
            return Err(Error::InvalidParameter("support values must be finite and non-zero".into()));
        }
        Ok(Self { len, support, values })
    }

    /// Collects the non-zero entries of a dense vector.
    pub fn from_dense(dense: &[f64]) -> Result<Self> {
        let (support, values) =
            dense.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, v)| (i, *v)).unzip();
        Self::new(dense.len(), support, values)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn sparsity(&self) -> usize {
        self.support.len()
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.support.iter().copied().zip(self.values.iter().copied())
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.len];
        for (i, v) in self.iter() {
            out[i] = v;
        }
        out
    }

    /// Multiplies every coefficient by `factor` (non-zero).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.len, self.support.clone(), self.values.iter().map(|v| v * factor).collect())
    }

    /// Smallest coefficient magnitude on the support.
    pub fn x_min(&self) -> Result<f64> {
        self.values.iter().map(|v| v.abs()).reduce(f64::min).ok_or(Error::EmptySupport)
    }
}

pub fn x_min(x: &SparseVector) -> Result<f64> {
    x.x_min()
}

/// Text form: header `# N=<len> m=<sparsity>`, then one `index value` per line.
impl fmt::Display for SparseVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# N={} m={}", self.len, self.sparsity())?;
        for (i, v) in self.iter() {
            writeln!(f, "{i} {v}")?;
        }
        Ok(())
    }
}

impl FromStr for SparseVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut lines = s.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| Error::Format("empty sparse vector".into()))?;
        let fields = header
            .strip_prefix('#')
            .ok_or_else(|| Error::Format(format!("expected '# N=.. m=..', got {header:?}")))?;
        let (mut len, mut m) = (None, None);
        for kv in fields.split_whitespace() {
            match kv.split_once('=') {
                Some(("N", v)) => len = v.parse::<usize>().ok(),
                Some(("m", v)) => m = v.parse::<usize>().ok(),
                _ => return Err(Error::Format(format!("unexpected header field {kv:?}"))),
            }
        }
        let (len, m) = len
            .zip(m)
            .ok_or_else(|| Error::Format("header must carry N and m".into()))?;
        let mut support = Vec::with_capacity(m);
        let mut values = Vec::with_capacity(m);
        for line in lines.filter(|l| !l.starts_with('#')) {
            let mut parts = line.split_whitespace();
            let (Some(i), Some(v), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::Format(format!("expected 'index value', got {line:?}")));
            };
            support.push(i.parse().map_err(|_| Error::Format(format!("bad index {i:?}")))?);
            values.push(v.parse().map_err(|_| Error::Format(format!("bad value {v:?}")))?);
        }
        if support.len() != m {
            return Err(Error::Format(format!("header says m={m}, found {}", support.len())));
        }
        Self::new(len, support, values)
    }
}

/// An observation with its generating parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalInstance {
    pub observation: Vec<f64>,
    pub sigma: f64,
    pub truth: Option<SparseVector>,
    pub noise_seed: u64,
}

/// `A x`.
pub fn apply(d: &Dictionary, x: &SparseVector) -> Result<Vec<f64>> {
    if x.len() != d.cols() {
        return Err(Error::DimensionMismatch { expected: d.cols(), actual: x.len() });
    }
    let mut y = vec![0.0; d.rows()];
    for (j, v) in x.iter() {
        crate::linalg::axpy(v, d.atom(j), &mut y);
    }
    Ok(y)
}

/// Noise vector `w ~ N(0, I_n)` for a given seed.
pub fn noise(n: usize, seed: u64) -> Vec<f64> {
    Gaussian::new(seed).vec(n)
}

/// `y = A x + sigma w`, with `w` drawn from `noise_seed`.
pub fn synthesize(
    d: &Dictionary,
    x: &SparseVector,
    sigma: f64,
    noise_seed: u64,
) -> Result<SignalInstance> {
    if !(sigma >= 0.0) {
        return Err(Error::InvalidParameter(format!("sigma must be >= 0, got {sigma}")));
    }
    let mut y = apply(d, x)?;
    if sigma > 0.0 {
        let w = noise(d.rows(), noise_seed);
        crate::linalg::axpy(sigma, &w, &mut y);
    }
    Ok(SignalInstance { observation: y, sigma, truth: Some(x.clone()), noise_seed })
}

/// Sign pattern of [`random_support_vector`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignMode {
    Positive,
    Random,
}

impl FromStr for SignMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "positive" | "all-positive" => Ok(Self::Positive),
            "random" | "random-sign" => Ok(Self::Random),
            other => Err(Error::InvalidParameter(format!("unknown sign mode {other:?}"))),
        }
    }
}

impl fmt::Display for SignMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Positive => "positive",
            Self::Random => "random",
        })
    }
}

/// `m` coefficients of magnitude `magnitude` on a uniformly random `m`-subset of `0..len`.
pub fn random_support_vector(
    len: usize,
    m: usize,
    magnitude: f64,
    signs: SignMode,
    seed: u64,
) -> Result<SparseVector> {
    if m == 0 || m > len {
        return Err(Error::BadSparsity { m, max: len });
    }
    if !(magnitude > 0.0 && magnitude.is_finite()) {
        return Err(Error::InvalidParameter(format!("magnitude must be positive, got {magnitude}")));
    }
    let mut rng = stream(seed);
    let mut support = sample(&mut rng, len, m).into_vec();
    support.sort_unstable();
    let values = support
        .iter()
        .map(|_| match signs {
            SignMode::Positive => magnitude,
            SignMode::Random if rng.random::<bool>() => magnitude,
            SignMode::Random => -magnitude,
        })
        .collect();
    SparseVector::new(len, support, values)
}
