//! Command-line front end. Every subcommand writes one CSV table (or a JSON
//! document with `--format json`) and, when `--out` is given, a
//! `<out>.summary.json` file holding the run manifest and headline numbers.

mod commands;
mod output;
pub mod schema;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

pub use output::{format_number, Cell, RunManifest, Table};

use crate::channel::NoiseFamily;
use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Noise {
    Xyz,
    Xz,
}

impl From<Noise> for NoiseFamily {
    fn from(n: Noise) -> Self {
        match n {
            Noise::Xyz => NoiseFamily::Xyz,
            Noise::Xz => NoiseFamily::Xz,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EveMode {
    /// Both qubits intercepted.
    Both,
    /// Only the first qubit intercepted.
    One,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GateChoice {
    All,
    Identity,
    Cstar,
    U2star,
}

#[derive(Debug, Clone, PartialEq, Subcommand)]
pub enum Command {
    /// Eve's information and QBER for z-basis intercept-resend over a grid of
    /// canonical gates. Columns: c1,c2,c3,I,q.
    SweepC,
    /// Eve's maximal information as a function of QBER along the
    /// intercepted-fraction line. Columns: gate,q,I.
    InfoQber,
    /// Key rate against the error-inflation factor δ at --q-ref. Columns:
    /// delta,r_cstar,r_ideal,r_bb84.
    RateDelta,
    /// Key rate of U_2* under both noise families. Columns:
    /// q,r_bb84,r_u2star_xyz,r_u2star_xz.
    NoiseRate,
    /// Overall QBER with loss along c2 (c1 = c3 = 0). Columns:
    /// q,c2,q_e,q_loss.
    LossQber,
    /// Gate maximising the key rate for each --q. Columns:
    /// q,c1,c2,c3,r,r_bb84,s,q_e.
    OptimizeRate,
    /// Noise amplitude giving each BB84 QBER. Columns: q,n.
    TableNq,
    /// Branch-by-branch trace of the entanglement-enhanced attack. Columns:
    /// alpha,a,e,probability,fidelity.
    EeDemo,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::SweepC => "sweep-c",
            Command::InfoQber => "info-qber",
            Command::RateDelta => "rate-delta",
            Command::NoiseRate => "noise-rate",
            Command::LossQber => "loss-qber",
            Command::OptimizeRate => "optimize-rate",
            Command::TableNq => "table-nq",
            Command::EeDemo => "ee-demo",
        }
    }
}

/// Simulator for BB84 with entangled qubit groups.
#[derive(Debug, Clone, Parser)]
#[command(name = "eeqkd", version, args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Grid points per axis (sweep-c, loss-qber) or curve points.
    #[arg(long, global = true)]
    pub resolution: Option<usize>,

    /// BB84 QBER value(s), comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub q: Option<Vec<f64>>,

    /// Reference BB84 QBER for rate-delta.
    #[arg(long, global = true)]
    pub q_ref: Option<f64>,

    #[arg(long, global = true, value_enum)]
    pub noise: Option<Noise>,

    /// Per-qubit loss probability.
    #[arg(long, global = true)]
    pub loss: Option<f64>,

    /// Assume fully correlated errors within a group.
    #[arg(long, global = true)]
    pub corr: bool,

    /// RNG seeds for random optimisation starts, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub seed_list: Option<Vec<u64>>,

    /// Random starts drawn per seed.
    #[arg(long, global = true)]
    pub random_starts: Option<usize>,

    /// Which qubits Eve intercepts in sweep-c.
    #[arg(long, global = true, value_enum)]
    pub mode: Option<EveMode>,

    /// Gate(s) for info-qber.
    #[arg(long, global = true, value_enum)]
    pub gate: Option<GateChoice>,

    /// Group size for ee-demo.
    #[arg(long, global = true)]
    pub qubits: Option<usize>,

    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// key = value file mirroring the flags; flags given on the command line
    /// win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "error: {m}"),
            CliError::Numerical(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Numerical(_) | Error::Unnormalized { .. } => CliError::Numerical(e.to_string()),
            Error::InConfig { ref source, .. } if matches!(**source, Error::Numerical(_)) => {
                CliError::Numerical(e.to_string())
            }
            other => CliError::Usage(other.to_string()),
        }
    }
}

/// What a subcommand produced.
pub struct CommandOutput {
    pub table: Table,
    pub summary: Value,
}

/// Reads `key = value` lines into command-line arguments. Blank lines and
/// `#` comments are skipped; `corr = true` becomes a bare `--corr`.
pub fn config_args(text: &str) -> Result<Vec<String>, CliError> {
    let mut args = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!("config line {}: expected key = value", lineno + 1))
        })?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if key == "config" {
            return Err(CliError::Usage(
                "config files cannot include other config files".into(),
            ));
        }
        if key == "corr" {
            match value {
                "true" | "1" | "yes" => args.push("--corr".into()),
                "false" | "0" | "no" => {}
                other => {
                    return Err(CliError::Usage(format!(
                        "config: corr = {other:?} is not a boolean"
                    )))
                }
            }
            continue;
        }
        args.push(format!("--{key}"));
        args.push(value.to_owned());
    }
    Ok(args)
}

fn find_config(args: &[OsString]) -> Option<PathBuf> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

/// Parses `args` (program name first), merging a config file if one is
/// named. Config values are placed before the command-line flags so the
/// latter override them.
pub fn parse(args: Vec<OsString>) -> Result<Cli, clap::Error> {
    let mut merged = args.clone();
    if let Some(path) = find_config(&args[1.min(args.len())..]) {
        let text = std::fs::read_to_string(&path).map_err(|e| {
            clap::Error::raw(
                clap::error::ErrorKind::Io,
                format!("cannot read config {}: {e}\n", path.display()),
            )
        })?;
        let extra = config_args(&text).map_err(|e| {
            clap::Error::raw(clap::error::ErrorKind::InvalidValue, format!("{e}\n"))
        })?;
        let pos = 1.min(merged.len());
        merged.splice(pos..pos, extra.into_iter().map(OsString::from));
    }
    Cli::try_parse_from(merged)
}

fn parameters(cli: &Cli) -> BTreeMap<String, Value> {
    let mut p = BTreeMap::new();
    p.insert("resolution".into(), json!(cli.resolution));
    p.insert("q".into(), json!(cli.q));
    p.insert("q_ref".into(), json!(cli.q_ref));
    p.insert(
        "noise".into(),
        json!(cli.noise.map(|n| NoiseFamily::from(n).to_string())),
    );
    p.insert("loss".into(), json!(cli.loss));
    p.insert("corr".into(), json!(cli.corr));
    p.insert("seed_list".into(), json!(cli.seed_list));
    p.insert("random_starts".into(), json!(cli.random_starts));
    p.insert(
        "mode".into(),
        json!(cli.mode.map(|m| format!("{m:?}").to_lowercase())),
    );
    p.insert(
        "gate".into(),
        json!(cli.gate.map(|g| format!("{g:?}").to_lowercase())),
    );
    p.insert("qubits".into(), json!(cli.qubits));
    p.insert(
        "format".into(),
        json!(cli.format.map(|f| format!("{f:?}").to_lowercase())),
    );
    p.insert(
        "config".into(),
        json!(cli.config.as_ref().map(|c| c.display().to_string())),
    );
    p
}

fn summary_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".summary.json");
    PathBuf::from(s)
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

/// Runs a parsed command, writing to `stdout` when no `--out` is given.
pub fn execute(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let start = Instant::now();
    let CommandOutput { table, summary } = commands::dispatch(cli)?;
    let manifest = RunManifest {
        subcommand: cli.command.name().into(),
        parameters: parameters(cli),
        output: cli.out.as_ref().map(|p| p.display().to_string()),
        version: env!("CARGO_PKG_VERSION"),
        duration_seconds: start.elapsed().as_secs_f64(),
    };
    let io = |e: std::io::Error| CliError::Usage(format!("cannot write output: {e}"));
    let summary_doc = json!({ "manifest": manifest, "summary": summary });
    let pretty = |v: &Value| serde_json::to_string_pretty(v).expect("JSON values serialise") + "\n";
    match cli.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let csv = table.to_csv();
            match &cli.out {
                Some(path) => {
                    write_file(path, &csv)?;
                    write_file(&summary_path(path), &pretty(&summary_doc))?;
                }
                None => {
                    output::write_all(stdout, &csv).map_err(io)?;
                    output::write_all(
                        stderr,
                        &(serde_json::to_string(&summary_doc).expect("serialise") + "\n"),
                    )
                    .map_err(io)?;
                }
            }
        }
        Format::Json => {
            let doc = json!({
                "manifest": manifest,
                "columns": table.columns,
                "rows": table.rows_json(),
                "summary": summary,
            });
            match &cli.out {
                Some(path) => write_file(path, &pretty(&doc))?,
                None => output::write_all(stdout, &pretty(&doc)).map_err(io)?,
            }
        }
    }
    Ok(())
}

/// Full entry point; returns the process exit code.
pub fn run(args: Vec<OsString>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let cli = match parse(args) {
        Ok(c) => c,
        Err(e) => {
            // help and version requests are not errors
            if e.use_stderr() {
                let _ = write!(stderr, "{}", e.render());
                return 2;
            }
            let _ = write!(stdout, "{}", e.render());
            return 0;
        }
    };
    match execute(&cli, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "{e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_lines() {
        let args =
            config_args("# comment\nresolution = 5\nseed_list=1,2\ncorr = true\n\n").unwrap();
        assert_eq!(
            args,
            vec!["--resolution", "5", "--seed-list", "1,2", "--corr"]
        );
        assert!(config_args("nonsense").is_err());
        assert!(config_args("corr = maybe").is_err());
    }

    #[test]
    fn flags_override_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(&path, "resolution = 5\nloss = 0.5\n").unwrap();
        let args: Vec<OsString> = [
            "eeqkd",
            "loss-qber",
            "--config",
            path.to_str().unwrap(),
            "--resolution",
            "3",
        ]
        .iter()
        .map(OsString::from)
        .collect();
        let cli = parse(args).unwrap();
        assert_eq!(cli.resolution, Some(3));
        assert_eq!(cli.loss, Some(0.5));
    }
}
