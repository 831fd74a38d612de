use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use synworld::commands::{cmd_eval, cmd_init, cmd_optimize, cmd_report, cmd_synth};
use synworld::config::RunConfig;
use synworld::error::CliError;
use synworld_core::optimizer::OptimizeMode;

#[derive(Parser)]
#[command(name = "synworld", version, about = "Synthesize scenarios and refine tool-use action knowledge")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Both,
    DescriptionOnly,
    WorkflowOnly,
}

impl From<Mode> for OptimizeMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Both => OptimizeMode::Both,
            Mode::DescriptionOnly => OptimizeMode::DescriptionOnly,
            Mode::WorkflowOnly => OptimizeMode::WorkflowOnly,
        }
    }
}

#[derive(Args)]
struct Common {
    /// Run configuration (JSON)
    #[arg(long)]
    config: PathBuf,
    /// Overrides the synthesis and search seeds
    #[arg(long)]
    seed: Option<u64>,
    /// Which knowledge component the optimizer may rewrite
    #[arg(long, value_enum)]
    mode: Option<Mode>,
}

impl Common {
    fn load(&self) -> Result<RunConfig, CliError> {
        let mut config = RunConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            config.synthesis.seed = seed;
            config.search.seed = seed;
        }
        if let Some(mode) = self.mode {
            config.mode = mode.into();
        }
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate and deduplicate a scenario store
    Synth(Common),
    /// Search for better action knowledge over the scenario store
    Optimize {
        #[command(flatten)]
        common: Common,
        /// Continue from a saved checkpoint
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Evaluate a knowledge file over the scenario store
    Eval {
        #[command(flatten)]
        common: Common,
        /// Action knowledge to evaluate
        #[arg(long)]
        knowledge: PathBuf,
    },
    /// Summarize one or more checkpoints into CSV curves and a best-path text
    Report {
        /// Checkpoint files
        #[arg(required = true)]
        checkpoints: Vec<PathBuf>,
        /// Directory for the report files (defaults to the first checkpoint's directory)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the bundled offline fixture and a config into a directory
    Init {
        dir: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth(common) => {
            let config = common.load()?;
            let file = cmd_synth(&config)?;
            let r = &file.report;
            println!(
                "synthesized {} scenarios from {} subsets ({} generated, {} rejected as near-duplicates)",
                r.accepted, r.subsets, r.generated, r.rejected
            );
        }
        Command::Optimize { common, resume } => {
            let config = common.load()?;
            let s = cmd_optimize(&config, resume.as_deref())?;
            println!(
                "{} iterations over {} scenarios: score {:.4} -> {:.4} (best node {})",
                s.iterations, s.scenario_count, s.initial_score, s.best_score, s.best_node
            );
        }
        Command::Eval { common, knowledge } => {
            let config = common.load()?;
            let e = cmd_eval(&config, &knowledge)?;
            println!("pass_rate {:.4} ({}/{})", e.pass_rate, e.passed, e.total);
        }
        Command::Report { checkpoints, out } => {
            let out = out.unwrap_or_else(|| {
                checkpoints[0].parent().map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."))
            });
            let r = cmd_report(&checkpoints, &out)?;
            print!("{}", r.summary);
        }
        Command::Init { dir } => {
            let path = cmd_init(&dir)?;
            println!("wrote fixture and {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
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
