use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use abelcheck::config::Format;
use abelcheck::pipeline::{self, Command};
use abelcheck::ModelConfig;
use clap::{Parser, Subcommand, ValueEnum};

/// Necessary-condition checks for anisotropic spherical models.
///
/// Exit status: 0 all defined conditions hold, 2 violations found,
/// 3 only undefined entries, 1 execution error.
#[derive(Parser, Debug)]
#[command(name = "abelcheck", version)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,

    /// Model definition (JSON). Defaults to the built-in Plummer model.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory, or `-` for standard output.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    format: Option<OutFormat>,

    /// Quadrature node count.
    #[arg(long, global = true, value_name = "N")]
    nodes: Option<usize>,

    /// Tolerance for `invert` and `validate`.
    #[arg(long, global = true, value_name = "X")]
    tol: Option<f64>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Verb {
    /// Evaluate every applicable non-negativity condition.
    Check,
    /// Dump the transform field over the grid.
    Transform,
    /// Eddington inversion and forward round trip (isotropic models only).
    Invert,
    /// Identity suite against the built-in oracle distribution functions.
    Validate,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum OutFormat {
    Json,
    Csv,
    Text,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Self {
        match f {
            OutFormat::Json => Format::Json,
            OutFormat::Csv => Format::Csv,
            OutFormat::Text => Format::Text,
        }
    }
}

fn load_config(cli: &Cli) -> Result<ModelConfig, String> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let src = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            ModelConfig::from_json(&src).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => ModelConfig::default(),
    };
    if let Some(n) = cli.nodes {
        cfg.quadrature.node_count = n;
    }
    if let Some(tol) = cli.tol {
        cfg.tolerance = tol;
    }
    if let Some(format) = cli.format {
        cfg.output.format = format.into();
    }
    if let Some(out) = &cli.out {
        cfg.output.dir = Some(out.clone());
    }
    Ok(cfg)
}

/// Writes via a temporary file in the same directory, then renames.
fn write_atomic(dir: &Path, name: &str, contents: &str) -> io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.flush()?;
    let target = dir.join(name);
    tmp.persist(&target).map_err(|e| e.error)?;
    Ok(target)
}

fn run(cli: &Cli) -> Result<i32, String> {
    let cfg = load_config(cli)?;
    let command = match cli.verb {
        Verb::Check => Command::Check,
        Verb::Transform => Command::Transform,
        Verb::Invert => Command::Invert,
        Verb::Validate => Command::Validate,
    };
    let outcome = pipeline::run(command, &cfg, cfg.output.format).map_err(|e| e.to_string())?;
    for msg in &outcome.messages {
        eprintln!("{msg}");
    }
    match cfg.output.dir.as_deref() {
        Some(dir) if dir != Path::new("-") => {
            let path = write_atomic(dir, &outcome.file_name, &outcome.contents)
                .map_err(|e| format!("cannot write {}: {e}", dir.display()))?;
            eprintln!("wrote {}", path.display());
        }
        _ => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(outcome.contents.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| format!("cannot write to stdout: {e}"))?;
        }
    }
    Ok(outcome.status)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(status) => ExitCode::from(status as u8),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
