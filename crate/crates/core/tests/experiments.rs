use std::sync::OnceLock;

use omplab::experiments::{
    first_step_failure_rate, omp_star_stop_stats, recovery_curve, simulate,
    validate_random_coherence, validate_sidak, AdversarialSpec, DictionarySpec, ExperimentConfig,
    RecoveryCurve, Simulation, SolverSpec,
};
use omplab::guarantees::{auto_beta, sharp_prob, ProblemParams};

fn adversarial_desk() -> &'static Simulation {
    static SIM: OnceLock<Simulation> = OnceLock::new();
    SIM.get_or_init(|| {
        let mut cfg = ExperimentConfig::new(
            DictionarySpec::Adversarial(AdversarialSpec::default()),
            256,
            512,
            3,
        );
        cfg.trials = 300;
        cfg.base_seed = 41;
        simulate(&cfg).unwrap()
    })
}

#[test]
fn sidak_single_variable_matches_gaussian_tail() {
    // erf(x / sqrt 2) with x = sqrt(2 eta ln n2), from scipy.
    for (n2, eta, exact) in [
        (100, 0.5, 0.968_124_310_693_197),
        (1000, 1.0, 0.999_798_335_481_284_6),
        (100, 2.0, 0.999_982_287_484_487_5),
    ] {
        let c = validate_sidak(1, n2, eta, 0.0, 10_000, 17).unwrap();
        let stderr = (exact * (1.0 - exact) / 10_000.0f64).sqrt();
        assert!((c.empirical - exact).abs() <= 3.0 * stderr.max(1e-4), "{c:?} vs {exact}");
        assert!(c.bound <= exact);
    }
}

#[test]
fn sidak_independent_cell_clears_bound() {
    let c = validate_sidak(100, 1000, 1.0, 0.0, 10_000, 5).unwrap();
    assert!((c.bound - 0.978_53).abs() < 1e-5);
    assert!(c.empirical >= 0.978_53 - 3.0 * c.stderr, "{c:?}");
}

#[test]
fn sidak_positive_correlation_clears_bound() {
    for (n1, n2, eta) in [(100, 1000, 1.0), (10, 100, 0.5), (100, 100, 2.0)] {
        let c = validate_sidak(n1, n2, eta, 0.3, 10_000, 6).unwrap();
        assert!(c.empirical >= c.bound, "{c:?}");
    }
}

#[test]
fn random_coherence_limit_value() {
    let c = validate_random_coherence(1020, 2040, 1, 1).unwrap();
    assert!((c.asymptotic - 0.930_291_382_903_763).abs() < 1e-12);
    assert!((c.asymptotic - 0.929).abs() < 2e-3);
    assert!((0.0..=1.0).contains(&c.fraction()));
}

#[test]
fn random_coherence_at_full_size() {
    let c = validate_random_coherence(1020, 2040, 100, 2024).unwrap();
    println!(
        "fraction {} within {} (limit {})",
        c.fraction(),
        c.threshold,
        c.asymptotic
    );
    assert!((0.0..=1.0).contains(&c.fraction()));
}

#[test]
fn random_coherence_fraction_increases_with_dimension() {
    let fractions: Vec<f64> = [256, 512, 1024]
        .iter()
        .map(|&n| validate_random_coherence(n, 2 * n, 100, 77).unwrap().fraction())
        .collect();
    println!("fractions {fractions:?}");
    assert!(fractions.windows(2).all(|w| w[1] >= w[0]), "{fractions:?}");
}

#[test]
fn pure_noise_is_undetectable() {
    let sim = adversarial_desk();
    let p = sim.curve.point_at(0.0).unwrap();
    assert!(p.p_hat <= 0.02, "{p:?}");
}

#[test]
fn first_step_failures_bound_overall_failures() {
    let sim = adversarial_desk();
    for (summary, point) in sim.points.iter().zip(&sim.curve.points) {
        let rate = summary.first_step_failure_rate();
        assert!((0.0..=1.0).contains(&rate));
        assert!(rate <= 1.0 - point.p_hat + 1e-12, "{summary:?}");
    }
}

#[test]
fn first_step_failures_fall_with_snr() {
    let sim = adversarial_desk();
    let r = sim.curve.reference;
    let idx = |v: f64| sim.points.iter().position(|p| p.snr_norm == v).unwrap();
    let (low, high) = (&sim.points[idx(r.approx_lower)], &sim.points[idx(r.benhaim)]);
    let width = sim.curve.points[idx(r.approx_lower)].ci_width();
    assert!(
        low.first_step_failure_rate() >= high.first_step_failure_rate() - 2.0 * width,
        "{low:?} {high:?}"
    );
}

#[test]
fn first_step_rate_needs_adversarial() {
    let cfg = ExperimentConfig::new(DictionarySpec::TwoOrtho, 64, 128, 2);
    assert!(first_step_failure_rate(&cfg).is_err());
    let mut cfg = ExperimentConfig::new(
        DictionarySpec::Adversarial(AdversarialSpec::default()),
        256,
        512,
        3,
    );
    cfg.trials = 50;
    cfg.snr_grid = vec![0.0];
    cfg.include_reference = false;
    let rates = first_step_failure_rate(&cfg).unwrap();
    assert_eq!(rates.len(), 1);
    assert!((0.0..=1.0).contains(&rates[0].1));
}

#[test]
fn adversarial_transition_sits_between_the_lines() {
    let sim = adversarial_desk();
    let r = sim.curve.reference;
    let low = sim.curve.point_at(r.approx_lower).unwrap();
    let sharp = sim.curve.point_at(r.sharp).unwrap();
    assert!(low.p_hat < 0.5, "{low:?}");
    assert!(sharp.p_hat > low.p_hat + 0.15, "{sharp:?}");
}

fn omp_star_config(snr: Vec<f64>) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(DictionarySpec::TwoOrtho, 256, 512, 3);
    cfg.solver = SolverSpec::OmpStar { alpha: 0.0 };
    cfg.trials = 400;
    cfg.snr_grid = snr;
    cfg.include_reference = false;
    cfg.base_seed = 8;
    cfg
}

#[test]
fn omp_star_stops_at_m_above_the_sharp_line() {
    let beta = auto_beta(3, 512);
    let stats = omp_star_stop_stats(&omp_star_config(vec![0.0, 1.0 + beta.sqrt(), 2.0])).unwrap();
    // The two-ortho dictionary of order 256 has coherence 1/16.
    let floor = sharp_prob(&ProblemParams::new(256, 512, 3, 1.0 / 16.0, 1.0)).unwrap().max(0.0);
    for s in &stats {
        assert_eq!(s.stop_histogram.values().sum::<usize>(), s.trials);
    }
    let noise = &stats[0];
    let early: usize = noise.stop_histogram.range(..3).map(|(_, c)| c).sum();
    assert!(early as f64 >= 0.9 * noise.trials as f64, "{:?}", noise.stop_histogram);
    for s in &stats[1..] {
        let stderr = (floor * (1.0 - floor) / s.trials as f64).sqrt();
        assert!(s.exact_stop_fraction(3) >= floor - 3.0 * stderr, "{s:?}");
    }
    assert!(omp_star_stop_stats(&ExperimentConfig::new(DictionarySpec::TwoOrtho, 64, 128, 2)).is_err());
}

#[test]
fn curve_file_round_trips() {
    let mut cfg = ExperimentConfig::new(DictionarySpec::TwoOrtho, 128, 256, 2);
    cfg.trials = 60;
    cfg.base_seed = 3;
    let curve = recovery_curve(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = curve.save_in(dir.path()).unwrap();
    assert!(path.ends_with("curve_two-ortho_2.csv"));
    assert_eq!(RecoveryCurve::load(&path).unwrap(), curve);
    assert_eq!(curve.meta("trials"), Some("60"));
    assert!(curve.points.iter().all(|p| p.successes <= p.trials && (0.0..=1.0).contains(&p.p_hat)));
}

#[test]
fn two_line_at_full_size() {
    // (1024, 2048, 3) with mu = 0.06: recovery is near certain at the
    // two-sigma_eff line.
    let spec = AdversarialSpec { mu: Some(0.06), ..Default::default() };
    let mut cfg = ExperimentConfig::new(DictionarySpec::Adversarial(spec), 1024, 2048, 3);
    cfg.snr_grid = vec![2.0];
    cfg.include_reference = false;
    cfg.base_seed = 1;
    let curve = recovery_curve(&cfg).unwrap();
    let p = curve.point_at(2.0).unwrap();
    assert!((curve.meta("mu").unwrap().parse::<f64>().unwrap() - 0.06).abs() < 1e-8);
    assert!(p.p_hat >= 0.95, "{p:?}");
}
