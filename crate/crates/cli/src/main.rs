//! `cwhom`: scenario files in, CSV and JSON artifacts out.
//!
//! Exit codes: 0 success, 2 invalid input, 3 numerical refusal (grid too
//! coarse, plateau unreliable and the like). Errors go to stderr as JSON.

mod commands;
mod docs;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Ctx, SourceId};
use docs::{ErrorBody, ErrorDoc};
use scenario::Scenario;

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numerical(String),
}

impl CliError {
    pub fn validation(msg: impl Into<String>) -> Self {
        CliError::Validation(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        CliError::Numerical(msg.into())
    }

    fn body(&self) -> ErrorBody {
        match self {
            CliError::Validation(m) => ErrorBody { kind: "validation".into(), exit_code: 2, message: m.clone() },
            CliError::Numerical(m) => ErrorBody { kind: "numerical".into(), exit_code: 3, message: m.clone() },
        }
    }
}

impl From<cwhom::Error> for CliError {
    fn from(e: cwhom::Error) -> Self {
        let numerical = e.is_numerical_refusal()
            || matches!(e, cwhom::Error::Unphysical(_) | cwhom::Error::FwhmNotBracketed(_) | cwhom::Error::ZeroPlateau);
        if numerical {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

#[derive(Parser)]
#[command(name = "cwhom", version, about = "Four-photon HOM interference of CW-pumped pair sources")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scenario JSON, durations in ps. Without it a reference scenario is used:
    /// identical rectangular 165 ps sources, windows (40, 2000) ps.
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// Artifact path; stdout if omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true, env = "CWHOM_THREADS")]
    threads: Option<usize>,
    /// Overrides the scenario's rng_seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Coherence function CSV (`tau_ps,value`) of one source.
    Coherence {
        #[arg(long, value_enum, default_value = "a")]
        source: SourceId,
    },
    /// HOM curve CSV (`tau_ps,normalized,raw`).
    Homdip,
    /// Visibility JSON with the inputs echoed.
    Visibility,
    /// Visibility matrix CSV over coherence time and heralding window.
    Vismap,
    /// Heralding window maximizing the fourfold rate at a target visibility.
    OptimizeRate,
    /// Fourfold rate of a pulsed source.
    PulsedRate,
    /// Expected fourfolds over a pass with time-varying channel loss.
    PassSwaps,
    /// Time-tag streams.
    #[command(subcommand)]
    Tags(TagsCommand),
    /// Fiber Bragg grating models.
    #[command(subcommand)]
    Fbg(FbgCommand),
    /// Spectral-domain engine against the time-domain integration.
    OracleCheck,
    /// Prints a JSON schema, or writes all of them into the `--out` directory.
    Schema { name: Option<String> },
}

#[derive(Subcommand)]
enum TagsCommand {
    /// Monte Carlo tag CSV (`channel,timestamp_fs`).
    Simulate,
    /// Fourfold and shifted-tag accidental counts.
    Count {
        /// Tag CSV `channel,timestamp_fs`.
        #[arg(long)]
        tags: PathBuf,
    },
}

#[derive(Subcommand)]
enum FbgCommand {
    /// Fits a grating model to a reflectance trace `wavelength_pm,reflectance`.
    Fit {
        #[arg(long)]
        trace: PathBuf,
    },
}

fn schema(name: Option<&str>, out: Option<&PathBuf>) -> Result<(), CliError> {
    let all = docs::schemas();
    match name {
        Some(n) => {
            let (_, s) = all
                .iter()
                .find(|(stem, _)| *stem == n)
                .ok_or_else(|| CliError::validation(format!("unknown schema `{n}`")))?;
            let bytes = commands::json_bytes(s)?;
            match out {
                Some(p) => std::fs::write(p, bytes).map_err(|e| CliError::validation(e.to_string())),
                None => {
                    use std::io::Write;
                    std::io::stdout().write_all(&bytes).map_err(|e| CliError::validation(e.to_string()))
                }
            }
        }
        None => {
            let dir = out.ok_or_else(|| CliError::validation("give a schema name or an --out directory"))?;
            std::fs::create_dir_all(dir).map_err(|e| CliError::validation(e.to_string()))?;
            for (stem, s) in &all {
                std::fs::write(dir.join(format!("{stem}.schema.json")), commands::json_bytes(s)?)
                    .map_err(|e| CliError::validation(e.to_string()))?;
            }
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::validation("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::validation(e.to_string()))?;
    }
    if let Command::Schema { name } = &cli.command {
        return schema(name.as_deref(), cli.out.as_ref());
    }
    let (scenario, base) = match &cli.scenario {
        Some(p) => Scenario::load(p)?,
        None => (Scenario::reference(), PathBuf::from(".")),
    };
    let ctx = Ctx { scenario, base, out: cli.out, seed: cli.seed };
    match cli.command {
        Command::Coherence { source } => commands::coherence(&ctx, source),
        Command::Homdip => commands::homdip(&ctx),
        Command::Visibility => commands::visibility_cmd(&ctx),
        Command::Vismap => commands::vismap(&ctx),
        Command::OptimizeRate => commands::optimize_rate(&ctx),
        Command::PulsedRate => commands::pulsed(&ctx),
        Command::PassSwaps => commands::swaps(&ctx),
        Command::Tags(TagsCommand::Simulate) => commands::tags_simulate(&ctx),
        Command::Tags(TagsCommand::Count { tags }) => commands::tags_count(&ctx, &tags),
        Command::Fbg(FbgCommand::Fit { trace }) => commands::fbg_fit(&ctx, &trace),
        Command::OracleCheck => commands::oracle_check(&ctx),
        Command::Schema { .. } => unreachable!("handled above"),
    }
}

fn fail(e: CliError) -> ExitCode {
    let body = e.body();
    let code = body.exit_code;
    let doc = ErrorDoc { error: body };
    eprintln!("{}", serde_json::to_string(&doc).unwrap_or_else(|_| "{\"error\":{}}".into()));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(CliError::validation(e.to_string())),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e),
    }
}
