use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use omplab::dictionary::{
    build_random_sphere, build_two_ortho, design_incoherent, welch_bound, DesignOptions,
};
use omplab::experiments::{
    build_adversarial_dictionary, incoherent_dictionary, omp_star_threshold, prepare, simulate_with,
    validate_random_coherence, validate_sidak, validate_solver, AdversarialSpec, BetaRule,
    DictionarySpec, ExperimentConfig, SolverSpec, TailSource,
};
use omplab::guarantees::{region_scan, sigma_eff, GuaranteeReport, ProblemParams, ReportOptions};
use omplab::rng::derive_seed;
use omplab::signal::{apply, random_support_vector, synthesize, SignMode};
use omplab::{omp, omp_star, support_recovered, Dictionary, SparseVector};

use crate::config::{parse_grid, RunConfig};
use crate::CliError;

type Out<'a> = &'a mut dyn Write;

pub fn analyze(cfg: &RunConfig, out: Out) -> Result<(), CliError> {
    let m: usize = cfg.require("m")?;
    let (n, big_n, mu) = match cfg.raw("dict") {
        Some(path) => {
            if cfg.is_set("mu") {
                return Err(CliError::Usage("--mu and --dict are exclusive".into()));
            }
            let d = Dictionary::load(path)?;
            for (key, actual) in [("n", d.rows()), ("N", d.cols())] {
                if let Some(given) = cfg.get::<usize>(key)? {
                    if given != actual {
                        return Err(CliError::Domain(format!(
                            "--{key} {given} disagrees with the dictionary ({actual})"
                        )));
                    }
                }
            }
            (d.rows(), d.cols(), d.coherence())
        }
        None => (cfg.require("n")?, cfg.require("N")?, cfg.require("mu")?),
    };
    let mut p = ProblemParams::new(n, big_n, m, mu, cfg.require("sigma")?)
        .with_alpha(cfg.require("alpha")?);
    if let Some(beta) = cfg.auto_or::<f64>("beta")? {
        p = p.with_beta(beta);
    }
    let opts = ReportOptions { l: cfg.auto_or("L")?, c0: cfg.require("c0")?, c: cfg.require("C")? };
    let report = GuaranteeReport::evaluate(&p, &opts)?;
    write!(out, "{report}")?;
    if cfg.flag("csv")? {
        writeln!(out, "{}", GuaranteeReport::CSV_HEADER)?;
        writeln!(out, "{}", report.csv_row())?;
    }
    Ok(())
}

fn adversarial_spec(cfg: &RunConfig) -> Result<AdversarialSpec, CliError> {
    Ok(AdversarialSpec {
        mu: cfg.auto_or("mu")?,
        tail: cfg.require::<TailSource>("tail")?,
        design_iters: cfg.require("design_iters")?,
    })
}

pub fn build_dict(cfg: &RunConfig, out: Out) -> Result<(), CliError> {
    let kind: String = cfg.require("kind")?;
    let n: usize = cfg.require("n")?;
    let seed: u64 = cfg.require("seed")?;
    let mut extra = Vec::new();
    let dictionary = match kind.as_str() {
        "two-ortho" => {
            if let Some(big_n) = cfg.get::<usize>("N")? {
                if big_n != 2 * n {
                    return Err(CliError::Domain(format!("two-ortho needs N = 2n = {}, got {big_n}", 2 * n)));
                }
            }
            build_two_ortho(n)?
        }
        "random-sphere" => build_random_sphere(n, cfg.require("N")?, seed),
        "designed" => {
            let target: f64 = cfg
                .auto_or("mu")?
                .ok_or_else(|| CliError::Usage("designed dictionaries need --mu (the target)".into()))?;
            let opts = DesignOptions::new(target, seed).max_iters(cfg.require("design_iters")?);
            let design = design_incoherent(n, cfg.require("N")?, opts)?;
            extra.push(format!("iterations={}", design.iterations));
            design.require_converged()?.dictionary
        }
        "adversarial" => {
            let spec = adversarial_spec(cfg)?;
            let adv = build_adversarial_dictionary(n, cfg.require("N")?, cfg.require("m")?, &spec, seed)?;
            extra.push(format!("mu={} mu_tilde={} L={}", adv.mu, adv.mu_tilde, adv.l));
            adv.dictionary
        }
        other => return Err(CliError::Usage(format!("unknown kind {other:?}"))),
    };
    let (rows, cols) = (dictionary.rows(), dictionary.cols());
    let path = match cfg.raw("out") {
        Some(p) => PathBuf::from(p),
        None => PathBuf::from(format!("dict_{kind}_{rows}x{cols}.bin")),
    };
    dictionary.save(&path)?;
    let mut line = format!(
        "kind={kind} n={rows} N={cols} coherence={} welch={}",
        dictionary.coherence(),
        welch_bound(rows, cols)
    );
    for e in extra {
        line.push(' ');
        line.push_str(&e);
    }
    writeln!(out, "{line} out={}", path.display())?;
    Ok(())
}

pub fn solve(cfg: &RunConfig, out: Out) -> Result<(), CliError> {
    let seed: u64 = cfg.require("seed")?;
    let d = match cfg.raw("dict") {
        Some(path) => Dictionary::load(path)?,
        None => {
            let n: usize = cfg.require("n")?;
            match cfg.require::<String>("kind")?.as_str() {
                "two-ortho" => build_two_ortho(n)?,
                "random-sphere" => build_random_sphere(n, cfg.require("N")?, derive_seed(seed, &[1])),
                other => return Err(CliError::Usage(format!("solve builds two-ortho or random-sphere, not {other:?}"))),
            }
        }
    };
    let sigma: f64 = cfg.require("sigma")?;
    let x = match cfg.raw("x") {
        Some(path) => std::fs::read_to_string(path)?.parse::<SparseVector>()?,
        None => {
            let m: usize = cfg.require("m")?;
            let magnitude = match cfg.get::<f64>("magnitude")? {
                Some(v) => v,
                None => {
                    let snr: f64 = cfg.require("snr")?;
                    snr * sigma_eff(sigma, m, d.coherence())? * (2.0 * (d.cols() as f64).ln()).sqrt()
                }
            };
            let signs: SignMode = cfg.require("signs")?;
            random_support_vector(d.cols(), m, magnitude, signs, derive_seed(seed, &[2]))?
        }
    };
    let instance = synthesize(&d, &x, sigma, derive_seed(seed, &[3]))?;
    let y = &instance.observation;
    let trace = match cfg.require::<String>("solver")?.as_str() {
        "omp" => omp(&d, y, x.sparsity())?,
        "omp-star" => {
            let tau = match cfg.get::<f64>("tau")? {
                Some(t) => t,
                None => omp_star_threshold(sigma, cfg.require("alpha")?, d.cols()),
            };
            let cap = cfg.get::<usize>("max_iters")?.unwrap_or(d.rows().min(d.cols()));
            writeln!(out, "tau            : {tau}")?;
            omp_star(&d, y, tau, cap)?
        }
        other => return Err(CliError::Usage(format!("unknown solver {other:?}"))),
    };
    writeln!(out, "dictionary     : {} ({} x {}, coherence {})", d.label(), d.rows(), d.cols(), d.coherence())?;
    writeln!(out, "true support   : {:?}", x.support())?;
    writeln!(out, "selected       : {:?}", trace.selected)?;
    writeln!(out, "iterations     : {}", trace.iterations())?;
    writeln!(out, "stop reason    : {}", trace.stop_reason)?;
    writeln!(out, "residual norm  : {}", omplab::linalg::norm(&trace.residual))?;
    writeln!(out, "recovered      : {}", support_recovered(&trace, &x))?;
    if let Some(path) = cfg.raw("trace") {
        let mut w = BufWriter::new(File::create(path)?);
        trace.write_csv(&mut w)?;
        w.flush()?;
        writeln!(out, "trace          : {path}")?;
    }
    Ok(())
}

fn dictionary_spec(kind: &str, cfg: &RunConfig) -> Result<DictionarySpec, CliError> {
    Ok(match kind {
        "two-ortho" => DictionarySpec::TwoOrtho,
        "random-sphere" => DictionarySpec::RandomSphere,
        "adversarial" => DictionarySpec::Adversarial(adversarial_spec(cfg)?),
        "file" => DictionarySpec::File(
            cfg.raw("dict_file")
                .ok_or_else(|| CliError::Usage("dict=file needs --dict_file".into()))?
                .into(),
        ),
        other => return Err(CliError::Usage(format!("unknown dictionary {other:?}"))),
    })
}

pub fn curve(cfg: &RunConfig, out: Out) -> Result<(), CliError> {
    let kinds: Vec<String> = cfg.list("dict")?;
    let ms: Vec<usize> = cfg.list("m")?;
    let grid = parse_grid(cfg.raw("snr_grid").unwrap_or_default())?;
    let solver = match cfg.require::<String>("solver")?.as_str() {
        "omp" => SolverSpec::Omp,
        "omp-star" => SolverSpec::OmpStar { alpha: cfg.require("alpha")? },
        other => return Err(CliError::Usage(format!("unknown solver {other:?}"))),
    };
    let beta = match cfg.auto_or::<f64>("beta")? {
        None => BetaRule::Auto,
        Some(b) => BetaRule::Explicit(b),
    };
    let out_dir = PathBuf::from(cfg.require::<String>("out_dir")?);

    // Validate every (dictionary, m) pair before any Monte Carlo run starts.
    let mut configs = Vec::new();
    for kind in &kinds {
        for &m in &ms {
            let mut c = ExperimentConfig::new(dictionary_spec(kind, cfg)?, cfg.require("n")?, cfg.require("N")?, m);
            c.sigma = cfg.require("sigma")?;
            c.snr_grid = grid.clone();
            c.include_reference = cfg.flag("reference")?;
            c.trials = cfg.require("trials")?;
            c.base_seed = cfg.require("seed")?;
            c.solver = solver;
            c.beta = beta;
            c.signs = cfg.require("signs")?;
            c.resample = cfg.flag("resample")?;
            c.validate()?;
            configs.push(c);
        }
    }
    // Files are written only once every curve has been computed.
    let mut sims = Vec::new();
    for c in &configs {
        let prepared = prepare(c)?;
        sims.push(simulate_with(c, &prepared)?);
    }
    std::fs::create_dir_all(&out_dir)?;
    for (c, sim) in configs.iter().zip(&sims) {
        let path = sim.curve.save_in(&out_dir)?;
        writeln!(out, "{}", path.display())?;
        writeln!(out, "#   mu={} beta={} sigma_eff={}", sim.mu, sim.beta, sim.sigma_eff)?;
        writeln!(out, "#   snr_norm  p_hat   first_step_fail  stop_at_m")?;
        for (s, p) in sim.points.iter().zip(&sim.curve.points) {
            writeln!(
                out,
                "#   {:<9.4} {:<7.4} {:<16.4} {:.4}",
                p.snr_norm,
                p.p_hat,
                s.first_step_failure_rate(),
                s.exact_stop_fraction(c.m)
            )?;
        }
    }
    Ok(())
}

pub fn region(cfg: &RunConfig, out: Out) -> Result<(), CliError> {
    let (nn, big_nn): (usize, usize) = (cfg.require("nn")?, cfg.require("NN")?);
    let region = region_scan(nn, big_nn, cfg.auto_or("L")?)?;
    let mut text = String::new();
    text.push_str("# omplab region\n");
    text.push_str(&format!("# nn={nn}\n# NN={big_nn}\n# L={}\n", region.l));
    text.push_str(&format!(
        "# max_m_mip={}\n# tail_max_m={}\n# ratio={}\n",
        region.max_m_mip(),
        region.tail_max_m,
        region.ratio()
    ));
    text.push_str("m,mip_lo,mip_hi,mu_lo,mu_hi,tail_max_m\n");
    // Rows whose interval condition has no solution are left out.
    for r in &region.rows {
        if let Some((lo, hi)) = r.interval {
            text.push_str(&format!("{},{},{},{lo},{hi},{}\n", r.m, r.mip_lo, r.mip_hi, region.tail_max_m));
        }
    }
    match cfg.raw("out") {
        Some(path) => {
            std::fs::write(path, &text)?;
            writeln!(out, "{path}")?;
        }
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Noiseless OMP* at threshold `tau` on incoherent dictionaries: recovers the support.
fn omp_star_suite(instances: usize, tau: f64, seed: u64) -> Result<usize, CliError> {
    let (rows, cols, m) = (64, 128, 3);
    let mut recovered = 0;
    for i in 0..instances {
        let d = incoherent_dictionary(rows, cols, m, derive_seed(seed, &[1, i as u64]))?;
        let x = random_support_vector(cols, m, 1.0, SignMode::Random, derive_seed(seed, &[2, i as u64]))?;
        let y = apply(&d, &x)?;
        let trace = omp_star(&d, &y, tau, m)?;
        recovered += usize::from(support_recovered(&trace, &x));
    }
    Ok(recovered)
}

pub fn validate(cfg: &RunConfig, out: Out) -> Result<bool, CliError> {
    let suite: String = cfg.require("suite")?;
    let seed: u64 = cfg.require("seed")?;
    let tau: f64 = cfg.require("tau")?;
    let run = |name: &str| suite == "all" || suite == name;
    if !["all", "sidak", "coherence", "solver"].contains(&suite.as_str()) {
        return Err(CliError::Usage(format!("unknown suite {suite:?}")));
    }
    let mut all_pass = true;
    let mut verdict = |out: Out, name: &str, pass: bool| -> std::io::Result<()> {
        all_pass &= pass;
        writeln!(out, "suite {name}: {}", if pass { "PASS" } else { "FAIL" })
    };

    if run("sidak") {
        let trials: usize = cfg.require("trials")?;
        let mut pass = true;
        writeln!(out, "n1    n2    eta  corr  empirical  bound      stderr")?;
        let mut cell = 0u64;
        for n1 in [10, 100] {
            for n2 in [100, 1000] {
                for eta in [0.5, 1.0, 2.0] {
                    for corr in [0.0, 0.3] {
                        let c = validate_sidak(n1, n2, eta, corr, trials, derive_seed(seed, &[10, cell]))?;
                        cell += 1;
                        pass &= c.passes(3.0);
                        writeln!(
                            out,
                            "{n1:<5} {n2:<5} {eta:<4} {corr:<5} {:<10.6} {:<10.6} {:.2e}{}",
                            c.empirical,
                            c.bound,
                            c.stderr,
                            if c.passes(3.0) { "" } else { "  below" }
                        )?;
                    }
                }
            }
        }
        verdict(out, "sidak", pass)?;
    }
    if run("coherence") {
        let c = validate_random_coherence(
            cfg.require("nn")?,
            cfg.require("NN")?,
            cfg.require("coherence_trials")?,
            derive_seed(seed, &[20]),
        )?;
        writeln!(
            out,
            "random coherence {} x {}: {}/{} within {:.6} (fraction {:.4}, large-dimension limit {:.6})",
            c.rows,
            c.cols,
            c.within,
            c.trials,
            c.threshold,
            c.fraction(),
            c.asymptotic
        )?;
        verdict(out, "coherence", (0.0..=1.0).contains(&c.fraction()))?;
    }
    if run("solver") {
        let instances: usize = cfg.require("instances")?;
        let c = validate_solver(64, 128, 3, instances, derive_seed(seed, &[30]))?;
        writeln!(
            out,
            "omp: {}/{} recovered, max |<a_j, r>|/||y|| = {:.2e}, repeats {}, max coherence {:.4}",
            c.recovered, c.instances, c.max_orthogonality, c.repeated_selections, c.max_coherence
        )?;
        let star_instances = instances.min(50);
        let star = omp_star_suite(star_instances, tau, derive_seed(seed, &[31]))?;
        writeln!(out, "omp* (tau = {tau}): {star}/{star_instances} recovered")?;
        verdict(out, "solver", c.passes() && star == star_instances)?;
    }
    Ok(all_pass)
}
