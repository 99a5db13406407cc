use nalgebra::{DMatrix, DVector};

use super::Dictionary;
use crate::error::{Error, Result};
use crate::rng::Gaussian;

/// Sylvester-Hadamard matrix of order `n` (entries +-1, unnormalized).
pub fn sylvester_hadamard(n: usize) -> Result<DMatrix<f64>> {
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n));
    }
    let mut h = DMatrix::from_element(1, 1, 1.0);
    while h.nrows() < n {
        let k = h.nrows();
        let mut next = DMatrix::zeros(2 * k, 2 * k);
        next.view_mut((0, 0), (k, k)).copy_from(&h);
        next.view_mut((0, k), (k, k)).copy_from(&h);
        next.view_mut((k, 0), (k, k)).copy_from(&h);
        next.view_mut((k, k), (k, k)).copy_from(&(-&h));
        h = next;
    }
    Ok(h)
}

/// `[I H/sqrt(n)]`, an `n x 2n` dictionary with coherence `1/sqrt(n)`.
pub fn build_two_ortho(n: usize) -> Result<Dictionary> {
    let h = sylvester_hadamard(n)? / (n as f64).sqrt();
    let mut atoms = DMatrix::zeros(n, 2 * n);
    atoms.view_mut((0, 0), (n, n)).fill_with_identity();
    atoms.view_mut((0, n), (n, n)).copy_from(&h);
    Dictionary::new(atoms, format!("two-ortho n={n}"))
}

/// `cols` atoms drawn uniformly from the unit sphere in `R^rows`.
///
/// Each atom is a normalized vector of Box-Muller normals from the stream
/// seeded by `seed`.
pub fn build_random_sphere(rows: usize, cols: usize, seed: u64) -> Dictionary {
    let mut g = Gaussian::new(seed);
    let mut atoms = DMatrix::zeros(rows, cols);
    for mut col in atoms.column_iter_mut() {
        loop {
            for v in col.iter_mut() {
                *v = g.sample();
            }
            let norm = col.norm();
            if norm > 0.0 {
                col /= norm;
                break;
            }
        }
    }
    Dictionary::new(atoms, format!("random-sphere n={rows} N={cols} seed={seed}"))
        .expect("sphere sample is a valid dictionary")
}

/// `m` unit vectors in `R^m` with pairwise inner products `-mu`.
#[derive(Debug, Clone)]
pub struct EquiangularBlock {
    vectors: DMatrix<f64>,
    mu: f64,
}

impl EquiangularBlock {
    pub fn m(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Columns are the block vectors.
    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn gram(&self) -> DMatrix<f64> {
        self.vectors.tr_mul(&self.vectors)
    }

    /// Largest deviation of the Gram matrix from `(1+mu) I - mu 11^T`.
    pub fn gram_error(&self) -> f64 {
        let g = self.gram();
        let mut worst = 0.0f64;
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                let target = if i == j { 1.0 } else { -self.mu };
                worst = worst.max((g[(i, j)] - target).abs());
            }
        }
        worst
    }

    /// `sum_i e_i`.
    pub fn sum(&self) -> DVector<f64> {
        self.vectors.column_sum()
    }
}

/// Equiangular block via a Householder reflection.
///
/// `V` is the reflection mapping `e_1` to `1/sqrt(m)`; the block is
/// `Y = [sqrt((1-(m-1)mu)/m) 1^T ; sqrt(1+mu) v_2^T ; ... ; sqrt(1+mu) v_m^T]`
/// and its columns satisfy `<e_i, e_j> = -mu` for `i != j`.
pub fn build_equiangular_block(m: usize, mu: f64) -> Result<EquiangularBlock> {
    if m == 0 {
        return Err(Error::InvalidParameter("block size must be positive".into()));
    }
    if !(mu >= 0.0) {
        return Err(Error::InvalidParameter(format!("mu must be non-negative, got {mu}")));
    }
    let limit = if m > 1 { 1.0 / (m - 1) as f64 } else { f64::INFINITY };
    if mu >= limit {
        return Err(Error::MuTooLarge { m, mu, limit });
    }
    let mf = m as f64;
    let u = 1.0 / mf.sqrt();
    // Householder vector w = e_1 - u*1; H = I - 2 w w^T / (w^T w).
    let mut w = DVector::from_element(m, -u);
    w[0] += 1.0;
    let ww = w.norm_squared();
    let mut v = DMatrix::<f64>::identity(m, m);
    if ww > 0.0 {
        v -= (&w * w.transpose()) * (2.0 / ww);
    }
    let head = ((1.0 - (mf - 1.0) * mu) / mf).sqrt();
    let scale = (1.0 + mu).sqrt();
    let vectors = DMatrix::from_fn(m, m, |k, i| if k == 0 { head } else { scale * v[(i, k)] });
    Ok(EquiangularBlock { vectors, mu })
}
