//! Command-line runner: argument and config parsing, artifact rendering and
//! exit codes (0 pass, 1 criterion failure, 2 configuration error, 3
//! numerical failure).

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Parser;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiments::{self, Check, Experiment, Outcome, RunConfig};

pub const CSV_SCHEMA: &str = "dpp-linstat table v1";
pub const JSON_SCHEMA: &str = "dpp-linstat summary v1";

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CRITERION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "dpp-linstat", version, about = "Variance asymptotics of DPP linear statistics")]
pub struct Args {
    /// Experiment to run.
    #[arg(value_enum)]
    pub command: Option<Experiment>,
    /// Same as the positional experiment name.
    #[arg(long, value_enum)]
    pub experiment: Option<Experiment>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated increasing scales.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub scales: Option<Vec<f64>>,
    #[arg(long)]
    pub replicas: Option<usize>,
    /// Output directory for the CSV table and JSON summary.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Override of the experiment's headline tolerance.
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub dim: Option<usize>,
    /// JSON file with a run configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Print the experiment to criterion mapping and exit.
    #[arg(long)]
    pub list: bool,
}

/// Merge the JSON config (if any) with the flags.
pub fn resolve_config(args: &Args) -> Result<RunConfig> {
    let from_file = match &args.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            Some(serde_json::from_str::<RunConfig>(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?)
        }
        None => None,
    };
    let exp = match (args.command, args.experiment) {
        (Some(a), Some(b)) if a != b => {
            return Err(Error::Config(format!("conflicting experiments {} and {}", a.name(), b.name())))
        }
        (Some(a), _) | (None, Some(a)) => Some(a),
        (None, None) => None,
    };
    let mut cfg = match (from_file, exp) {
        (Some(mut c), Some(e)) => {
            c.experiment = e;
            c
        }
        (Some(c), None) => c,
        (None, Some(e)) => RunConfig::new(e),
        (None, None) => return Err(Error::Config("no experiment given (see --list)".into())),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(s) = &args.scales {
        cfg.scales = Some(s.clone());
    }
    if let Some(r) = args.replicas {
        cfg.replicas = Some(r);
    }
    if let Some(t) = args.tolerance {
        cfg.tolerance = Some(t);
    }
    if let Some(d) = args.dim {
        cfg.dim = Some(d);
    }
    if let Some(o) = &args.out {
        cfg.out = Some(o.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn list_text() -> String {
    let mut s = String::from("experiment        criteria  scales\n");
    for e in Experiment::ALL {
        let crit: Vec<String> = e.criteria().iter().map(|c| c.to_string()).collect();
        s.push_str(&format!("{:<17} {:<9} {}\n", e.name(), crit.join(","), e.scale_doc()));
    }
    s
}

/// CSV table: '#' metadata line, then series,scale,raw,normalized,diagnostic.
pub fn render_csv(cfg: &RunConfig, out: &Outcome) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    for r in &out.rows {
        w.serialize(r).map_err(|e| Error::Config(e.to_string()))?;
    }
    let body = String::from_utf8(w.into_inner().map_err(|e| Error::Config(e.to_string()))?)
        .map_err(|e| Error::Config(e.to_string()))?;
    let meta = serde_json::to_string(cfg).map_err(|e| Error::Config(e.to_string()))?;
    Ok(format!("# {CSV_SCHEMA} experiment={} config={meta}\n{body}", out.experiment.name()))
}

#[derive(Serialize)]
struct Summary<'a> {
    schema: &'static str,
    version: &'static str,
    config: &'a RunConfig,
    passed: bool,
    values: &'a std::collections::BTreeMap<String, f64>,
    checks: &'a [Check],
    #[serde(skip_serializing_if = "<[Vec<f64>]>::is_empty")]
    points: &'a [Vec<f64>],
}

pub fn render_json(cfg: &RunConfig, out: &Outcome) -> Result<String> {
    let s = Summary {
        schema: JSON_SCHEMA,
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        passed: out.passed(),
        values: &out.values,
        checks: &out.checks,
        points: &out.points,
    };
    let mut text = serde_json::to_string_pretty(&s).map_err(|e| Error::Config(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

/// Run the experiment and write `<name>.csv` and `<name>.json` to `dir`.
pub fn execute(cfg: &RunConfig, dir: &Path) -> Result<Outcome> {
    let out = experiments::run(cfg)?;
    let csv = render_csv(cfg, &out)?;
    let json = render_json(cfg, &out)?;
    let io = |e: std::io::Error| Error::Resolution(format!("writing artifacts to {}: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(io)?;
    fs::write(dir.join(format!("{}.csv", cfg.experiment.name())), csv).map_err(io)?;
    fs::write(dir.join(format!("{}.json", cfg.experiment.name())), json).map_err(io)?;
    Ok(out)
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS };
        }
    };
    if args.list {
        print!("{}", list_text());
        return EXIT_PASS;
    }
    let cfg = match resolve_config(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("results"));
    match execute(&cfg, &dir) {
        Ok(out) => {
            for c in &out.checks {
                let tag = match (c.asserted, c.pass) {
                    (true, true) => "PASS",
                    (true, false) => "FAIL",
                    (false, _) => "INFO",
                };
                println!("{tag} [{}] {}: {} (reference {})", c.criterion, c.name, c.value, c.reference);
            }
            println!("wrote {}/{}.{{csv,json}}", dir.display(), cfg.experiment.name());
            if out.passed() {
                EXIT_PASS
            } else {
                EXIT_CRITERION
            }
        }
        Err(Error::Config(m)) => {
            eprintln!("error: configuration error: {m}");
            EXIT_CONFIG
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_NUMERICAL
        }
    }
}
