use crate::error::{Error, Result};

/// Lower (Welch) and upper (random-frame) bounds on the smallest coherence
/// achievable by an `rows x cols` frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceBounds {
    pub welch_lower: f64,
    pub tropp_upper: f64,
    pub dims: (usize, usize),
}

/// `sqrt((N - n) / (n (N - 1)))`.
pub fn welch_bound(rows: usize, cols: usize) -> f64 {
    let (n, big_n) = (rows as f64, cols as f64);
    ((big_n - n) / (n * (big_n - 1.0))).max(0.0).sqrt()
}

pub fn coherence_bounds(rows: usize, cols: usize) -> Result<CoherenceBounds> {
    if rows == 0 || rows >= cols {
        return Err(Error::InvalidParameter(format!(
            "coherence bounds need 0 < n < N, got ({rows}, {cols})"
        )));
    }
    Ok(CoherenceBounds {
        welch_lower: welch_bound(rows, cols),
        tropp_upper: 2.0 * ((cols as f64).ln() / rows as f64).sqrt(),
        dims: (rows, cols),
    })
}
