//! `llt`: reproducible experiment driver. Every command writes one CSV or
//! JSON artifact with a provenance line.

mod commands;
mod table;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use llt_core::Error;

use table::Provenance;

#[derive(Parser, Debug)]
#[command(name = "llt", version, about = "Lattice local limit theorem laboratory", args_override_self = true)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug)]
pub struct Global {
    /// JSON object of options; explicit flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Output file; standard output when absent.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Mode::Float)]
    pub mode: Mode,
    /// Worker threads; LLT_THREADS overrides.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Exact,
    Float,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RefArg {
    Limit,
    VarianceMatched,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Block parameters p_k, d_k, alpha_k^2.
    Params {
        #[arg(long)]
        k: u32,
    },
    /// Law of the block variable X_k(1).
    BlockPmf {
        #[arg(long)]
        k: u32,
    },
    /// Index windows I_n and J_n.
    Index {
        #[arg(long)]
        n: u64,
    },
    /// Variance of U_n and the second-moment decomposition.
    VarianceScan {
        #[arg(long, value_delimiter = ',', required = true)]
        n_list: Vec<u64>,
    },
    /// Sup-norm local limit error of U_n.
    LltScan {
        #[arg(long, value_delimiter = ',', required = true)]
        n_list: Vec<u64>,
        #[arg(long, value_enum, default_value_t = RefArg::VarianceMatched)]
        reference: RefArg,
    },
    /// Characteristic function of U_n on an equispaced grid over [-pi, pi].
    Charfn {
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 257)]
        grid: usize,
    },
    /// |phi_n| against the aperiodicity product bound away from 0.
    LemmaAway {
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 2048)]
        grid: usize,
    },
    /// |phi_n| against exp(-L x^2) near 0.
    LemmaNear {
        #[arg(long)]
        n: u64,
    },
    /// Lindeberg functional of the row Y_1(n), ..., Y_{n-1}(n).
    Lindeberg {
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
    },
    /// Moments of Upsilon_n(j).
    Upsilon {
        #[arg(long)]
        j: u64,
        #[arg(long)]
        n: u64,
        #[arg(long = "J-override", value_delimiter = ',')]
        j_override: Option<Vec<u32>>,
    },
    /// Effect of a small independent perturbation on the local limit error.
    Noise {
        #[arg(long)]
        n: u64,
        /// `three-point:Z`, `delta`, or a path to a JSON lattice law.
        #[arg(long, default_value = "three-point:256")]
        noise_law: String,
    },
    /// Monte Carlo sample of U_n (or the truncated ergodic sum) with a
    /// chi-square fit.
    Simulate {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        samples: u64,
        /// Sample S_n(f_2 + ... + f_K) instead of U_n.
        #[arg(long)]
        truncate_k: Option<u32>,
        #[arg(long, default_value_t = 0)]
        stream: u64,
    },
    /// Exact castle coding with identity verification.
    Castle {
        /// Half height of the castle; required unless `--levels` is given.
        #[arg(long, required_unless_present = "levels")]
        l: Option<u32>,
        #[arg(long, default_value_t = 1)]
        xi_atoms: u32,
        #[arg(long, value_delimiter = ',', default_value = "0,1")]
        alphabet: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "1/2,1/2")]
        marginal: Vec<String>,
        /// Window lengths of a multi-level realization.
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<u32>>,
        /// Print counterexamples to standard error on failure.
        #[arg(long)]
        dump_witness: bool,
        /// Include the castle and assignment in JSON output.
        #[arg(long)]
        emit_model: bool,
        /// Add 10^-6 to the mass of this refined cell before verifying.
        #[arg(long, hide = true)]
        corrupt_cell: Option<usize>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Params { .. } => "params",
            Command::BlockPmf { .. } => "block-pmf",
            Command::Index { .. } => "index",
            Command::VarianceScan { .. } => "variance-scan",
            Command::LltScan { .. } => "llt-scan",
            Command::Charfn { .. } => "charfn",
            Command::LemmaAway { .. } => "lemma-away",
            Command::LemmaNear { .. } => "lemma-near",
            Command::Lindeberg { .. } => "lindeberg",
            Command::Upsilon { .. } => "upsilon",
            Command::Noise { .. } => "noise",
            Command::Simulate { .. } => "simulate",
            Command::Castle { .. } => "castle",
        }
    }
}

/// Failure of a run, mapped to the exit status.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Resource(String),
    Verification(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Resource(_) => 3,
            Failure::Verification(_) => 4,
            Failure::Io(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Resource(m) | Failure::Verification(m) | Failure::Io(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::SupportCap { .. } | Error::CellCap { .. } | Error::MemoryCap(_) => Failure::Resource(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

/// Reads a JSON config object into an optional subcommand and its flags.
fn config_args(path: &PathBuf) -> Result<(Option<OsString>, Vec<OsString>), Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("config {} is not JSON: {e}", path.display())))?;
    let obj = value
        .as_object()
        .ok_or_else(|| Failure::Usage("config must be a JSON object".into()))?;
    let command = obj.get("command").and_then(|c| c.as_str()).map(OsString::from);
    let mut flags = Vec::new();
    for (k, v) in obj {
        if k == "command" {
            continue;
        }
        let flag = format!("--{}", k.replace('_', "-"));
        match v {
            serde_json::Value::Bool(true) => flags.push(flag.into()),
            serde_json::Value::Bool(false) | serde_json::Value::Null => {}
            serde_json::Value::Array(items) => {
                let joined: Vec<String> = items.iter().map(scalar).collect();
                flags.push(flag.into());
                flags.push(joined.join(",").into());
            }
            other => {
                flags.push(flag.into());
                flags.push(scalar(other).into());
            }
        }
    }
    Ok((command, flags))
}

fn scalar(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Splices config-file options in front of the explicit flags; with
/// last-one-wins parsing the explicit flags take precedence.
fn expand_args(raw: Vec<OsString>) -> Result<Vec<OsString>, Failure> {
    let pos = raw.iter().position(|a| a == "--config" || a.to_string_lossy().starts_with("--config="));
    let Some(pos) = pos else { return Ok(raw) };
    let arg = raw[pos].to_string_lossy().into_owned();
    let (path, used) = match arg.strip_prefix("--config=") {
        Some(p) => (PathBuf::from(p), 1),
        None => match raw.get(pos + 1) {
            Some(p) => (PathBuf::from(p), 2),
            None => return Err(Failure::Usage("--config needs a path".into())),
        },
    };
    let mut rest: Vec<OsString> = raw[1..pos].to_vec();
    rest.extend_from_slice(&raw[pos + used..]);
    let (command, flags) = config_args(&path)?;
    let explicit = rest.first().is_some_and(|a| !a.to_string_lossy().starts_with('-'));
    let mut out = vec![raw[0].clone()];
    if explicit {
        out.push(rest.remove(0));
    } else if let Some(c) = command {
        out.push(c);
    }
    out.extend(flags);
    out.extend(rest);
    Ok(out)
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, Failure> {
    match std::env::var("LLT_THREADS") {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .map_err(|_| Failure::Usage(format!("LLT_THREADS must be a positive integer, got {v:?}")))?;
            if n == 0 {
                return Err(Failure::Usage("LLT_THREADS must be at least 1".into()));
            }
            Ok(Some(n))
        }
        Err(_) => match flag {
            Some(0) => Err(Failure::Usage("--threads must be at least 1".into())),
            other => Ok(other),
        },
    }
}

fn run() -> Result<(), Failure> {
    let args = expand_args(std::env::args_os().collect())?;
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            if code == 0 {
                return Ok(());
            }
            return Err(Failure::Usage(String::new()));
        }
    };
    if let Some(t) = thread_count(cli.global.threads)? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let outcome = commands::run(&cli.command, &cli.global)?;
    let provenance = Provenance {
        command: cli.command.name().to_string(),
        seed: cli.global.seed,
        mode: match cli.global.mode {
            Mode::Exact => "exact",
            Mode::Float => "float",
        }
        .to_string(),
    };
    let text = match cli.global.format {
        Format::Csv => outcome.table.to_csv(&provenance),
        Format::Json => outcome.table.to_json(&provenance),
    };
    match &cli.global.output {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))?,
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            if let Err(e) = out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
                // a closed pipe downstream is not an error of the run
                if e.kind() != std::io::ErrorKind::BrokenPipe {
                    return Err(Failure::Io(format!("cannot write to standard output: {e}")));
                }
            }
        }
    }
    match outcome.verification_failure {
        Some(msg) => Err(Failure::Verification(msg)),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if !f.message().is_empty() {
                eprintln!("llt: {}", f.message());
            }
            ExitCode::from(f.code())
        }
    }
}
