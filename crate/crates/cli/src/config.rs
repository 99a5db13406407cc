//! Flat key=value run configuration shared by flags and config files.
//!
//! Resolution order, lowest first: built-in defaults, preset, config file,
//! command-line flags.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use clap::{Arg, ArgMatches};

use crate::CliError;

/// One accepted key of a subcommand.
pub struct Key {
    pub name: &'static str,
    pub default: Option<&'static str>,
    pub help: &'static str,
}

const fn key(name: &'static str, default: Option<&'static str>, help: &'static str) -> Key {
    Key { name, default, help }
}

pub struct Command {
    pub name: &'static str,
    pub about: &'static str,
    pub keys: &'static [Key],
    /// Preset name -> overrides of the defaults.
    pub presets: &'static [(&'static str, &'static [(&'static str, &'static str)])],
}

pub const ANALYZE: Command = Command {
    name: "analyze",
    about: "print the guarantee report for one parameter set",
    keys: &[
        key("n", None, "signal dimension"),
        key("N", None, "number of atoms"),
        key("m", None, "sparsity"),
        key("mu", None, "dictionary coherence"),
        key("dict", None, "dictionary file; supplies n, N and mu"),
        key("sigma", Some("1"), "noise level"),
        key("alpha", Some("0"), "probability exponent alpha >= 0"),
        key("beta", Some("auto"), "auto (ln m / ln N) or a value in (0, 1)"),
        key("L", Some("welch"), "tail coherence bound: welch or a value"),
        key("c0", Some("1"), "assumed constant c0"),
        key("C", Some("1"), "assumed constant C"),
        key("csv", Some("false"), "also print the header and a CSV row"),
    ],
    presets: &[],
};

pub const BUILD_DICT: Command = Command {
    name: "build-dict",
    about: "construct a dictionary and save it",
    keys: &[
        key("kind", None, "two-ortho | random-sphere | designed | adversarial"),
        key("n", None, "signal dimension"),
        key("N", None, "number of atoms (two-ortho: 2n)"),
        key("m", None, "sparsity (adversarial)"),
        key("mu", Some("auto"), "target coherence (designed) or support coherence (adversarial)"),
        key("tail", Some("designed"), "adversarial tail source: designed | random-sphere"),
        key("design_iters", Some("2000"), "alternating projection iterations"),
        key("seed", Some("0"), "random seed"),
        key("out", None, "output file (default dict_<kind>_<n>x<N>.bin)"),
    ],
    presets: &[],
};

pub const SOLVE: Command = Command {
    name: "solve",
    about: "run OMP or OMP* on one observation",
    keys: &[
        key("dict", None, "dictionary file"),
        key("kind", Some("two-ortho"), "dictionary when no file is given: two-ortho | random-sphere"),
        key("n", Some("256"), "signal dimension (generated dictionary)"),
        key("N", Some("512"), "number of atoms (generated dictionary)"),
        key("x", None, "sparse vector file ('# N=.. m=..' then 'index value' lines)"),
        key("m", Some("3"), "sparsity of the random vector when no file is given"),
        key("snr", Some("2"), "normalized SNR of the random vector"),
        key("magnitude", None, "coefficient magnitude; overrides snr"),
        key("signs", Some("positive"), "positive | random"),
        key("sigma", Some("1"), "noise level"),
        key("solver", Some("omp"), "omp | omp-star"),
        key("alpha", Some("0"), "OMP* threshold exponent"),
        key("tau", None, "OMP* threshold; overrides alpha"),
        key("max_iters", None, "OMP* iteration cap (default min(n, N))"),
        key("seed", Some("0"), "random seed"),
        key("trace", None, "write the per-iteration trace CSV here"),
    ],
    presets: &[],
};

pub const CURVE: Command = Command {
    name: "curve",
    about: "Monte Carlo recovery curves, one CSV per (dictionary, m)",
    keys: &[
        key("preset", None, "setting-1 | setting-2 | setting-2-desk"),
        key("dict", Some("two-ortho"), "comma list of two-ortho | random-sphere | adversarial | file"),
        key("dict_file", None, "dictionary file for dict=file"),
        key("n", Some("256"), "signal dimension"),
        key("N", Some("512"), "number of atoms"),
        key("m", Some("3"), "comma list of sparsities"),
        key("mu", Some("auto"), "adversarial coherence, or auto for the interval midpoint"),
        key("tail", Some("designed"), "adversarial tail source: designed | random-sphere"),
        key("design_iters", Some("2000"), "alternating projection iterations"),
        key("sigma", Some("1"), "noise level"),
        key("snr_grid", Some("0:0.25:2.5"), "comma list or start:step:stop"),
        key("reference", Some("true"), "add the reference-line SNR values to the grid"),
        key("trials", Some("500"), "trials per grid point"),
        key("seed", Some("0"), "base seed"),
        key("solver", Some("omp"), "omp | omp-star"),
        key("alpha", Some("0"), "OMP* threshold exponent"),
        key("beta", Some("auto"), "auto or a value in (0, 1)"),
        key("signs", Some("positive"), "positive | random"),
        key("resample", Some("false"), "redraw random-sphere dictionaries per trial"),
        key("out_dir", Some("."), "directory for curve_<dict>_<m>.csv"),
    ],
    presets: &[
        (
            "setting-1",
            &[("dict", "two-ortho,random-sphere,adversarial"), ("n", "4096"), ("N", "8192"), ("m", "3")],
        ),
        ("setting-2", &[("dict", "adversarial"), ("n", "1024"), ("N", "2048"), ("m", "2,3,4"), ("mu", "0.06")]),
        // The smallest power-of-two size whose designed tails admit m = 4.
        ("setting-2-desk", &[("dict", "adversarial"), ("n", "512"), ("N", "1024"), ("m", "2,3,4")]),
    ],
};

pub const REGION: Command = Command {
    name: "region",
    about: "allowed (m, mu) pairs for a tail of size nn x NN",
    keys: &[
        key("nn", None, "tail dimension"),
        key("NN", None, "tail atom count"),
        key("L", Some("welch"), "tail coherence bound: welch or a value"),
        key("out", None, "write the CSV here instead of stdout"),
    ],
    presets: &[],
};

pub const VALIDATE: Command = Command {
    name: "validate",
    about: "Monte Carlo checks of the Sidak bound, random coherence and solver invariants",
    keys: &[
        key("suite", Some("all"), "all | sidak | coherence | solver"),
        key("trials", Some("10000"), "draws per Sidak cell"),
        key("coherence_trials", Some("100"), "random dictionaries for the coherence suite"),
        key("nn", Some("256"), "coherence suite dimension"),
        key("NN", Some("512"), "coherence suite atom count"),
        key("instances", Some("200"), "solver suite instances"),
        key("tau", Some("0"), "OMP* threshold used in the solver suite"),
        key("seed", Some("0"), "base seed"),
    ],
    presets: &[],
};

pub const COMMANDS: [&Command; 6] = [&ANALYZE, &BUILD_DICT, &SOLVE, &CURVE, &REGION, &VALIDATE];

pub fn find(name: &str) -> Option<&'static Command> {
    COMMANDS.into_iter().find(|c| c.name == name)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Source {
    Default,
    Preset,
    File,
    Flag,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Default => "default",
            Source::Preset => "preset",
            Source::File => "file",
            Source::Flag => "flag",
        })
    }
}

/// Fully resolved parameters of one run.
pub struct RunConfig {
    pub command: &'static Command,
    values: BTreeMap<&'static str, (String, Source)>,
    pub config_file: Option<String>,
}

fn lookup(command: &'static Command, name: &str) -> Result<&'static str, CliError> {
    command
        .keys
        .iter()
        .find(|k| k.name == name)
        .map(|k| k.name)
        .ok_or_else(|| CliError::Usage(format!("unknown key {name:?} for {}", command.name)))
}

/// Parses a config file: one `key=value` per line, `#` starts a comment.
pub fn parse_file(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value", i + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// The clap definition of one subcommand: a `--<key> <value>` option per key.
///
/// A bare `--flag` means `true`. Defaults are applied by [`RunConfig`], not
/// clap, so the printed config can tell explicit values from defaults.
pub fn clap_command(c: &'static Command) -> clap::Command {
    let mut cmd = clap::Command::new(c.name)
        .about(c.about)
        .arg(Arg::new("config").long("config").value_name("FILE").help("key=value config file; flags override it"));
    for k in c.keys {
        let help = match k.default {
            Some(d) => format!("{} [default: {d}]", k.help),
            None => k.help.to_string(),
        };
        cmd = cmd.arg(
            Arg::new(k.name)
                .long(k.name)
                .value_name("VALUE")
                .help(help)
                .num_args(0..=1)
                .default_missing_value("true")
                .allow_negative_numbers(true),
        );
    }
    if !c.presets.is_empty() {
        let mut after = String::from("Presets:\n");
        for (name, table) in c.presets {
            let kv: Vec<String> = table.iter().map(|(k, v)| format!("{k}={v}")).collect();
            let _ = writeln!(after, "  {name:<15} {}", kv.join(" "));
        }
        cmd = cmd.after_help(after);
    }
    cmd
}

/// The top-level parser with every subcommand.
pub fn cli() -> clap::Command {
    clap::Command::new("omplab")
        .about("Orthogonal Matching Pursuit: dictionaries, guarantees and recovery experiments")
        .after_help("OMPLAB_THREADS caps the worker count (default: available parallelism).")
        .subcommand_required(true)
        .subcommands(COMMANDS.map(clap_command))
}

impl RunConfig {
    pub fn resolve(command: &'static Command, matches: &ArgMatches) -> Result<Self, CliError> {
        let flags: Vec<(String, String)> = command
            .keys
            .iter()
            .filter_map(|k| matches.get_one::<String>(k.name).map(|v| (k.name.to_string(), v.clone())))
            .collect();
        let mut config_file = None;
        let mut file = Vec::new();
        if let Some(path) = matches.get_one::<String>("config").cloned() {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| CliError::Usage(format!("cannot read config file {path}: {e}")))?;
            file = parse_file(&text)?;
            config_file = Some(path);
        }
        let mut values = BTreeMap::new();
        for k in command.keys {
            if let Some(d) = k.default {
                values.insert(k.name, (d.to_string(), Source::Default));
            }
        }
        let mut explicit = BTreeMap::new();
        for (pairs, source) in [(file, Source::File), (flags, Source::Flag)] {
            for (k, v) in pairs {
                explicit.insert(lookup(command, &k)?, (v, source));
            }
        }
        if let Some((preset, _)) = explicit.get("preset") {
            let table = command
                .presets
                .iter()
                .find(|(name, _)| name == preset)
                .ok_or_else(|| CliError::Usage(format!("unknown preset {preset:?}")))?;
            for (k, v) in table.1 {
                values.insert(lookup(command, k)?, (v.to_string(), Source::Preset));
            }
        }
        values.extend(explicit);
        Ok(Self { command, values, config_file })
    }

    pub fn raw(&self, name: &str) -> Option<&str> {
        debug_assert!(self.command.keys.iter().any(|k| k.name == name), "undeclared key {name}");
        self.values.get(name).map(|(v, _)| v.as_str())
    }

    pub fn is_set(&self, name: &str) -> bool {
        self.raw(name).is_some()
    }

    pub fn get<T: FromStr>(&self, name: &str) -> Result<Option<T>, CliError>
    where
        T::Err: fmt::Display,
    {
        self.raw(name)
            .map(|v| v.parse::<T>().map_err(|e| CliError::Usage(format!("bad value for {name}: {v:?} ({e})"))))
            .transpose()
    }

    pub fn require<T: FromStr>(&self, name: &str) -> Result<T, CliError>
    where
        T::Err: fmt::Display,
    {
        self.get(name)?.ok_or_else(|| CliError::Usage(format!("missing required --{name}")))
    }

    pub fn flag(&self, name: &str) -> Result<bool, CliError> {
        match self.raw(name) {
            None => Ok(false),
            Some(v) => parse_bool(v).ok_or_else(|| CliError::Usage(format!("bad boolean for {name}: {v:?}"))),
        }
    }

    /// `auto` or absent maps to `None`.
    pub fn auto_or<T: FromStr>(&self, name: &str) -> Result<Option<T>, CliError>
    where
        T::Err: fmt::Display,
    {
        match self.raw(name) {
            None | Some("auto") | Some("welch") => Ok(None),
            Some(_) => self.get(name),
        }
    }

    pub fn list<T: FromStr>(&self, name: &str) -> Result<Vec<T>, CliError>
    where
        T::Err: fmt::Display,
    {
        let raw = self.raw(name).ok_or_else(|| CliError::Usage(format!("missing required --{name}")))?;
        raw.split(',')
            .map(|s| {
                s.trim()
                    .parse::<T>()
                    .map_err(|e| CliError::Usage(format!("bad entry in {name}: {s:?} ({e})")))
            })
            .collect()
    }

    /// The resolved configuration as `# key = value  (source)` lines.
    pub fn render(&self) -> String {
        let mut s = format!("# omplab {}\n", self.command.name);
        if let Some(path) = &self.config_file {
            let _ = writeln!(s, "# config_file = {path}");
        }
        let width = self.command.keys.iter().map(|k| k.name.len()).max().unwrap_or(0);
        for k in self.command.keys {
            let (v, src) = match self.values.get(k.name) {
                Some((v, src)) => (v.as_str(), src.to_string()),
                None => ("-", "unset".to_string()),
            };
            let _ = writeln!(s, "# {:<width$} = {v}  ({src})", k.name);
        }
        s
    }
}

pub fn parse_bool(v: &str) -> Option<bool> {
    match v {
        "true" | "yes" | "on" | "1" => Some(true),
        "false" | "no" | "off" | "0" => Some(false),
        _ => None,
    }
}

/// `a,b,c` or `start:step:stop` (inclusive).
pub fn parse_grid(v: &str) -> Result<Vec<f64>, CliError> {
    let bad = |msg: &str| CliError::Usage(format!("bad snr_grid {v:?}: {msg}"));
    if v.contains(':') {
        let parts: Vec<f64> = v
            .split(':')
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad("expected numbers")))
            .collect::<Result<_, _>>()?;
        let [start, step, stop] = parts[..] else {
            return Err(bad("expected start:step:stop"));
        };
        if !(step > 0.0) || !(stop >= start) {
            return Err(bad("need step > 0 and stop >= start"));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        Ok((0..count).map(|k| start + k as f64 * step).collect())
    } else {
        v.split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad("expected numbers")))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolve(c: &'static Command, line: &str) -> Result<RunConfig, CliError> {
        let argv = std::iter::once("omplab").chain(std::iter::once(c.name)).chain(line.split_whitespace());
        let matches = cli().try_get_matches_from(argv).map_err(|e| CliError::Usage(e.to_string()))?;
        let (_, sub) = matches.subcommand().unwrap();
        RunConfig::resolve(c, sub)
    }

    #[test]
    fn flags_and_bare_booleans() {
        let cfg = resolve(&ANALYZE, "--n 8 --csv --N=16 --alpha -1").unwrap();
        assert_eq!(cfg.raw("n"), Some("8"));
        assert_eq!(cfg.raw("csv"), Some("true"));
        assert_eq!(cfg.raw("N"), Some("16"));
        assert_eq!(cfg.raw("alpha"), Some("-1"));
        assert_eq!(cfg.raw("beta"), Some("auto"));
        assert!(resolve(&ANALYZE, "stray").is_err());
    }

    #[test]
    fn file_comments_and_blank_lines() {
        let kv = parse_file("# header\n\nn = 8   # dimension\nm=2\n").unwrap();
        assert_eq!(kv, vec![("n".into(), "8".into()), ("m".into(), "2".into())]);
        assert!(parse_file("just words\n").is_err());
    }

    #[test]
    fn unknown_key_is_usage_error() {
        let err = resolve(&ANALYZE, "--bogus 1").err().unwrap();
        assert!(matches!(err, CliError::Usage(_)));
    }

    #[test]
    fn preset_under_flags() {
        let cfg = resolve(&CURVE, "--preset setting-2 --n 256 --N 512").unwrap();
        assert_eq!(cfg.raw("m"), Some("2,3,4"));
        assert_eq!(cfg.raw("n"), Some("256"));
        assert_eq!(cfg.raw("mu"), Some("0.06"));
        assert!(cfg.render().contains("(preset)"));
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0:0.5:2").unwrap(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(parse_grid("1, 2,3").unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(parse_grid("0:0.25:2.5").unwrap().len(), 11);
        assert!(parse_grid("0:0:1").is_err());
    }
}
