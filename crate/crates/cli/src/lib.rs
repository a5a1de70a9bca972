//! Library half of the `homolag` binary: configuration, report formatting
//! and the subcommand runners. [`cli_main`] is the whole program.

pub mod config;
pub mod output;
pub mod run;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::Serialize;

use config::{ConfigError, RunConfig};
use output::{digest, to_json, Report, VERSION};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PHYSICS: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Subcommand {
    /// Classify the metric's signature and causality regime.
    Signature,
    /// Run the seeded identity sweeps over random Lagrangians.
    Check,
    /// Integrate a world line.
    Simulate,
    /// Find a stationary discrete path between fixed endpoints.
    Extremize,
    /// Integrate a brane action over an embedding.
    Brane,
    /// Solve for quadratic gamma generators and check the Dirac determinant.
    Clifford,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Signature => "signature",
            Subcommand::Check => "check",
            Subcommand::Simulate => "simulate",
            Subcommand::Extremize => "extremize",
            Subcommand::Brane => "brane",
            Subcommand::Clifford => "clifford",
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "homolag",
    version,
    about = "Reparametrization-invariant mechanics toolkit"
)]
pub struct Args {
    pub subcommand: Subcommand,
    /// TOML run configuration; repeat to run a batch concurrently.
    #[arg(long = "config", value_name = "PATH")]
    pub configs: Vec<PathBuf>,
    /// Directory for JSON reports and CSV tables.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Overrides the config's `seed` (default 0).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Print the JSON report(s) to stdout.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug)]
pub enum Failure {
    Config(ConfigError),
    Physics(String),
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Physics(_) => EXIT_PHYSICS,
            Failure::Config(_) | Failure::Io(_) => EXIT_CONFIG,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(e) => write!(f, "config error: {e}"),
            Failure::Physics(e) => write!(f, "error: {e}"),
            Failure::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

/// A finished run: the JSON report and the CSV tables `(suffix, contents)`.
#[derive(Debug)]
pub struct Outcome {
    pub json: String,
    pub tables: Vec<(&'static str, String)>,
    /// `false` when the run completed but its checks failed (exit 1).
    pub ok: bool,
}

fn envelope<T: Serialize>(
    sub: Subcommand,
    text: &str,
    cfg: &RunConfig,
    a: run::Artifacts<T>,
) -> Outcome {
    let report = Report {
        subcommand: sub.name(),
        version: VERSION,
        config_digest: digest(text.as_bytes()),
        seed: cfg.seed,
        warnings: cfg.warnings.clone(),
        result: a.payload,
    };
    Outcome {
        json: to_json(&report),
        tables: a.tables,
        ok: a.ok,
    }
}

/// Parses `text` and runs `sub`; `seed` overrides the config value.
pub fn execute(
    sub: Subcommand,
    text: &str,
    base_dir: &Path,
    seed: Option<u64>,
) -> Result<Outcome, Failure> {
    let mut cfg = RunConfig::parse(text, base_dir).map_err(Failure::Config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.require(sub).map_err(Failure::Config)?;
    let out = match sub {
        Subcommand::Signature => envelope(
            sub,
            text,
            &cfg,
            run::signature(&cfg).map_err(Failure::Physics)?,
        ),
        Subcommand::Check => envelope(sub, text, &cfg, run::check(&cfg)),
        Subcommand::Simulate => envelope(
            sub,
            text,
            &cfg,
            run::simulate(&cfg).map_err(Failure::Physics)?,
        ),
        Subcommand::Extremize => envelope(
            sub,
            text,
            &cfg,
            run::extremize_path(&cfg).map_err(Failure::Physics)?,
        ),
        Subcommand::Brane => envelope(sub, text, &cfg, run::brane(&cfg).map_err(Failure::Physics)?),
        Subcommand::Clifford => envelope(
            sub,
            text,
            &cfg,
            run::clifford(&cfg).map_err(Failure::Physics)?,
        ),
    };
    Ok(out)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into())
}

/// Reads, runs and writes one config; returns the outcome and files written.
fn run_one(args: &Args, path: Option<&Path>) -> Result<(Outcome, Vec<PathBuf>), Failure> {
    let (text, base) = match path {
        Some(p) => (
            std::fs::read_to_string(p).map_err(|e| Failure::Io(format!("{}: {e}", p.display())))?,
            p.parent().map(Path::to_path_buf).unwrap_or_default(),
        ),
        None => (String::new(), PathBuf::from(".")),
    };
    let outcome = execute(args.subcommand, &text, &base, args.seed)?;
    let mut written = Vec::new();
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
        let stem = path
            .map(stem)
            .unwrap_or_else(|| args.subcommand.name().to_string());
        let mut files = vec![(
            format!("{stem}.{}.json", args.subcommand.name()),
            outcome.json.clone(),
        )];
        files.extend(
            outcome
                .tables
                .iter()
                .map(|(suffix, t)| (format!("{stem}.{suffix}"), t.clone())),
        );
        for (name, contents) in files {
            let full = dir.join(name);
            std::fs::write(&full, contents)
                .map_err(|e| Failure::Io(format!("{}: {e}", full.display())))?;
            written.push(full);
        }
    }
    Ok((outcome, written))
}

/// Runs the program on `argv` and returns the exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let paths: Vec<Option<&Path>> = if args.configs.is_empty() {
        if args.subcommand != Subcommand::Check {
            eprintln!(
                "config error: `--config` is required for `{}`",
                args.subcommand.name()
            );
            return EXIT_CONFIG;
        }
        vec![None]
    } else {
        args.configs.iter().map(|p| Some(p.as_path())).collect()
    };
    if args.out.is_some() {
        let mut stems: Vec<String> = paths.iter().flatten().map(|p| stem(p)).collect();
        stems.sort();
        if let Some(w) = stems.windows(2).find(|w| w[0] == w[1]) {
            eprintln!(
                "config error: two configs share the file stem `{}`; their outputs would collide",
                w[0]
            );
            return EXIT_CONFIG;
        }
    }

    // each config is isolated; results come back in command-line order
    let results: Vec<_> = std::thread::scope(|s| {
        let handles: Vec<_> = paths
            .iter()
            .map(|p| s.spawn(|| run_one(&args, *p)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("run thread"))
            .collect()
    });

    let mut code = EXIT_OK;
    let mut reports = Vec::new();
    for (path, result) in paths.iter().zip(results) {
        let label = path
            .map(|p| p.display().to_string())
            .unwrap_or_else(|| "<defaults>".into());
        match result {
            Ok((outcome, written)) => {
                for w in serde_json::from_str::<serde_json::Value>(&outcome.json)
                    .ok()
                    .and_then(|v| v["warnings"].as_array().cloned())
                    .unwrap_or_default()
                {
                    eprintln!("warning: {label}: {}", w.as_str().unwrap_or_default());
                }
                if !outcome.ok {
                    eprintln!(
                        "{label}: {} completed but its checks failed",
                        args.subcommand.name()
                    );
                    code = code.max(EXIT_PHYSICS);
                }
                if !args.json {
                    let status = if outcome.ok { "ok" } else { "FAILED" };
                    println!("{label}: {} {status}", args.subcommand.name());
                    for w in &written {
                        println!("  wrote {}", w.display());
                    }
                }
                reports.push(outcome.json);
            }
            Err(f) => {
                eprintln!("{label}: {f}");
                code = code.max(f.exit_code());
            }
        }
    }
    if args.json {
        if paths.len() == 1 {
            print!("{}", reports.first().map(String::as_str).unwrap_or(""));
        } else {
            println!(
                "[{}]",
                reports
                    .iter()
                    .map(|r| r.trim_end())
                    .collect::<Vec<_>>()
                    .join(",\n")
            );
        }
    }
    code
}
