use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nonanswer::config::RunConfig;
use nonanswer::error::{CliError, Result};
use nonanswer::pipeline::{self, Models};
use nonanswer::synth::SynthOptions;
use nonanswer_core::Quarter;

#[derive(Debug, Parser)]
#[command(name = "nonanswer", version, about = "Measure managers' non-responses in earnings-call Q&A")]
struct Cli {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a config value, e.g. `--set stats.permutations=500`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Worker threads for annotation and resampling.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModelArg {
    Primary,
    Alternative,
    Both,
}

impl From<ModelArg> for Models {
    fn from(m: ModelArg) -> Models {
        match m {
            ModelArg::Primary => Models::Primary,
            ModelArg::Alternative => Models::Alternative,
            ModelArg::Both => Models::Both,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and dedupe the transcript corpus.
    Ingest,
    /// Identify non-responses in every Q&A exchange.
    Annotate {
        #[arg(long, value_enum, default_value = "primary")]
        model: ModelArg,
    },
    /// Call, conversation and quarter measures; Table 1 style reports.
    Measure,
    /// Firm-quarter, analyst and conversation panels.
    Panel,
    /// Regression and summary-statistic reports.
    Regress,
    /// Bootstrap distributions of the quarterly ratios.
    Bootstrap,
    /// Repeated identifications of a sample against the baseline.
    Stability {
        #[arg(long, value_enum, default_value = "both")]
        model: ModelArg,
    },
    /// Overlap of the two models' non-response conversations.
    Overlap,
    /// Every stage in order.
    RunAll,
    /// Write the synthetic corpus and word lists to the configured paths.
    Synth {
        #[arg(long, default_value_t = 48)]
        firms: usize,
        #[arg(long, default_value_t = 8)]
        quarters: usize,
        /// First fiscal quarter, e.g. 2019Q1.
        #[arg(long, default_value = "2019Q1")]
        first_quarter: String,
    },
}

fn config(cli: &Cli) -> Result<RunConfig> {
    let mut overrides = cli.set.clone();
    if let Some(j) = cli.jobs {
        overrides.push(format!("backend.jobs={j}"));
    }
    if let Some(s) = cli.seed {
        overrides.push(format!("seeds.master={s}"));
    }
    RunConfig::load(cli.config.as_deref(), &overrides)
}

fn run(cli: Cli) -> Result<()> {
    let cfg = config(&cli)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.backend.jobs)
        .build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Ingest => pipeline::ingest(&cfg).map(drop),
        Command::Annotate { model } => pipeline::annotate(&cfg, model.into()).map(drop),
        Command::Measure => pipeline::measure(&cfg).map(drop),
        Command::Panel => pipeline::panel(&cfg).map(drop),
        Command::Regress => pipeline::regress(&cfg).map(drop),
        Command::Bootstrap => pipeline::bootstrap(&cfg).map(drop),
        Command::Stability { model } => pipeline::stability(&cfg, model.into()).map(drop),
        Command::Overlap => pipeline::overlap(&cfg).map(drop),
        Command::RunAll => pipeline::run_all(&cfg).map(drop),
        Command::Synth { firms, quarters, ref first_quarter } => {
            let first_quarter: Quarter = first_quarter
                .parse()
                .map_err(|_| CliError::Usage(format!("`{first_quarter}` is not a quarter like 2019Q1")))?;
            let opts = SynthOptions {
                firms,
                quarters,
                first_quarter,
                seed: cfg.seeds.master,
            };
            pipeline::synth(&cfg, &opts).map(drop)
        }
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
