use omplab::dictionary::{build_random_sphere, Dictionary};
use omplab::guarantees::{
    benhaim_prob, benhaim_threshold, mip_limit, mu_tilde, rho, sharp_prob, ProblemParams,
};
use omplab::linalg::{dot, norm};
use omplab::rng::Gaussian;
use omplab::{omp, omp_star, StopReason};
use proptest::prelude::*;

fn instance(rows: usize, cols: usize, seed: u64) -> (Dictionary, Vec<f64>) {
    (build_random_sphere(rows, cols, seed), Gaussian::new(seed ^ 0xabc).vec(rows))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn residual_is_orthogonal_and_shrinks(seed in any::<u64>(), m in 1usize..=8) {
        let (d, y) = instance(16, 24, seed);
        let trace = omp(&d, &y, m).unwrap();
        let y_norm = norm(&y);
        for &j in &trace.selected {
            prop_assert!(dot(d.atom(j), &trace.residual).abs() <= 1e-9 * y_norm);
        }
        let mut last = y_norm;
        for &r in &trace.residual_norm {
            prop_assert!(r <= last * (1.0 + 1e-12));
            last = r;
        }
        let mut s = trace.selected.clone();
        s.sort_unstable();
        s.dedup();
        prop_assert_eq!(s.len(), trace.selected.len());
    }

    #[test]
    fn zero_threshold_omp_star_follows_omp(seed in any::<u64>(), k in 1usize..=10) {
        let (d, y) = instance(12, 20, seed);
        let a = omp(&d, &y, k).unwrap();
        let b = omp_star(&d, &y, 0.0, k).unwrap();
        prop_assert_eq!(&a.selected, &b.selected);
        prop_assert_eq!(b.stop_reason, StopReason::IterationsExhausted);
    }

    #[test]
    fn column_permutation_relabels_selection(seed in any::<u64>(), shift in 1usize..24) {
        let (d, y) = instance(10, 24, seed);
        let perm: Vec<usize> = (0..24).map(|j| (j + shift) % 24).collect();
        let p = d.permuted(&perm).unwrap();
        let a = omp(&d, &y, 4).unwrap();
        let b = omp(&p, &y, 4).unwrap();
        let mapped: Vec<usize> = b.selected.iter().map(|&j| perm[j]).collect();
        prop_assert_eq!(a.selected, mapped);
    }

    #[test]
    fn square_dictionary_fits_exactly(seed in any::<u64>()) {
        let (d, y) = instance(8, 8, seed);
        let trace = omp(&d, &y, 8).unwrap();
        prop_assert!(norm(&trace.residual) <= 1e-9 * norm(&y));
    }

    #[test]
    fn coherence_geometry(m in 1usize..=20, frac in 0.001f64..0.999) {
        let mu = frac * mip_limit(m);
        let r = rho(m, mu).unwrap();
        prop_assert!(mu_tilde(m, mu).unwrap() < mu);
        prop_assert!(mu.sqrt() < r);
        prop_assert!(r <= 1.0 / (m as f64).sqrt() + 1e-15);
    }

    #[test]
    fn bounds_are_monotone(k in 6u32..16, alpha in 0.0f64..2.0, frac in 0.05f64..0.9) {
        let big_n = 1usize << k;
        // Keep m <= N^beta.
        let floor = 3f64.ln() / (big_n as f64).ln();
        let beta = floor + frac * (1.0 - floor);
        let p = ProblemParams::new(big_n / 2, big_n, 3, 0.05, 1.0).with_alpha(alpha).with_beta(beta);
        let wider = ProblemParams { big_n: 2 * big_n, n: big_n, ..p };
        let bolder = p.with_alpha(alpha + 0.25);
        prop_assert!(benhaim_threshold(&wider).unwrap() > benhaim_threshold(&p).unwrap());
        prop_assert!(benhaim_threshold(&bolder).unwrap() > benhaim_threshold(&p).unwrap());
        prop_assert!(benhaim_prob(&wider).unwrap() > benhaim_prob(&p).unwrap());
        prop_assert!(benhaim_prob(&bolder).unwrap() > benhaim_prob(&p).unwrap());
        prop_assert!(sharp_prob(&bolder).unwrap() > sharp_prob(&p).unwrap());
    }
}
