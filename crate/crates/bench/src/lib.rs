//! Fixtures shared by the benchmarks.

use omplab::dictionary::{build_random_sphere, build_two_ortho};
use omplab::signal::{random_support_vector, synthesize, SignMode};
use omplab::Dictionary;

/// A two-ortho dictionary of order `n` and a noisy `m`-sparse observation
/// whose coefficients sit well above the noise.
pub fn two_ortho_instance(n: usize, m: usize, seed: u64) -> (Dictionary, Vec<f64>) {
    let d = build_two_ortho(n).expect("n is a power of two");
    let x = random_support_vector(d.cols(), m, 10.0, SignMode::Random, seed).expect("valid sparsity");
    let y = synthesize(&d, &x, 1.0, seed ^ 1).expect("valid noise level").observation;
    (d, y)
}

pub fn random_instance(n: usize, big_n: usize, m: usize, seed: u64) -> (Dictionary, Vec<f64>) {
    let d = build_random_sphere(n, big_n, seed);
    let x = random_support_vector(big_n, m, 10.0, SignMode::Random, seed ^ 2).expect("valid sparsity");
    let y = synthesize(&d, &x, 1.0, seed ^ 3).expect("valid noise level").observation;
    (d, y)
}
