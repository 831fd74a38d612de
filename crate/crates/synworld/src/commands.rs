//! The pipeline commands behind the CLI.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use synworld_core::environment::evaluate;
use synworld_core::fixture;
use synworld_core::llm::{MeteredBackend, TokenBudget};
use synworld_core::mcts::{
    Checkpoint, ExpansionContext, IterationRecord, Search, SearchConfig, SearchError, SearchObserver,
    SimulationContext,
};
use synworld_core::optimizer::OptimizeMode;
use synworld_core::synthesis::{synthesize_store, ShingleJaccard, SynthesisReport};
use synworld_core::types::{ActionKnowledge, Scenario};

use crate::config::{BackendSettings, EnvironmentSettings, RunConfig};
use crate::error::CliError;
use crate::io::{self, OutputLock};

pub const SCENARIO_STORE_FILE: &str = "scenarios.json";
pub const SYNTHESIS_REPORT_FILE: &str = "synthesis_report.json";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const PROGRESS_FILE: &str = "progress.csv";
pub const BEST_KNOWLEDGE_FILE: &str = "best_knowledge.json";
pub const RUN_SUMMARY_FILE: &str = "run_summary.json";
pub const EVALUATION_FILE: &str = "evaluation.json";
pub const TRAJECTORIES_FILE: &str = "trajectories.json";
pub const ITERATIONS_CSV: &str = "iterations.csv";
pub const SCENARIO_COUNT_CSV: &str = "scenario_count.csv";
pub const BEST_PATH_FILE: &str = "best_path.txt";

pub const PROGRESS_HEADER: [&str; 5] = ["iteration", "node_id", "reward", "node_score", "best_score"];

fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisFile {
    pub report: SynthesisReport,
    pub budget: TokenBudget,
}

/// Generates, deduplicates and stores scenarios in the output directory.
pub fn cmd_synth(config: &RunConfig) -> Result<SynthesisFile, CliError> {
    let out = config.output_dir();
    let _lock = OutputLock::acquire(&out)?;
    let toolkit = config.load_toolkit()?;
    config.synthesis.validate(&toolkit).map_err(|e| CliError::input(e.to_string()))?;
    let llm = MeteredBackend::new(config.backend(&config.backends.synthesis)?);
    let outcome = synthesize_store(&toolkit, &config.synthesis, &llm, &ShingleJaccard::default())?;
    io::write_json(&out.join(SCENARIO_STORE_FILE), &outcome.scenarios)?;
    let file = SynthesisFile { report: outcome.report, budget: llm.budget() };
    io::write_json(&out.join(SYNTHESIS_REPORT_FILE), &file)?;
    Ok(file)
}

fn load_store(config: &RunConfig, toolkit: &synworld_core::types::Toolkit) -> Result<Vec<Scenario>, CliError> {
    let path = config.scenarios_path();
    let scenarios = io::read_scenarios(&path, toolkit)?;
    if scenarios.is_empty() {
        return Err(CliError::at(&path, "scenario store is empty"));
    }
    Ok(scenarios)
}

fn progress_rows(progress: &[IterationRecord]) -> Vec<(usize, usize, f64, f64, f64)> {
    progress.iter().map(|r| (r.iteration, r.node_id, r.reward, r.node_score, r.best_score)).collect()
}

/// Persists the checkpoint and progress CSV after every iteration and on failure.
struct Persist<'a> {
    dir: &'a Path,
    error: Option<CliError>,
}

impl Persist<'_> {
    fn save(&mut self, state: &Checkpoint) {
        let result = io::write_checkpoint(&self.dir.join(CHECKPOINT_FILE), state).and_then(|_| {
            io::write_csv(&self.dir.join(PROGRESS_FILE), &PROGRESS_HEADER, &progress_rows(&state.progress))
        });
        if let Err(e) = result {
            self.error.get_or_insert(e);
        }
    }
}

impl SearchObserver for Persist<'_> {
    fn on_iteration(&mut self, record: &IterationRecord, state: &Checkpoint) {
        log::info!(
            "iteration {}: node {} score {:.4} reward {:+.4} best {:.4}",
            record.iteration,
            record.node_id,
            record.node_score,
            record.reward,
            record.best_score
        );
        self.save(state);
    }

    fn on_failure(&mut self, state: &Checkpoint, error: &SearchError) {
        log::error!("iteration {} failed: {error}", state.tree.iteration + 1);
        self.save(state);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub mode: OptimizeMode,
    pub seed: u64,
    pub scenario_count: usize,
    pub iterations: usize,
    pub initial_score: f64,
    pub best_node: usize,
    pub best_score: f64,
    pub optimizer_budget: TokenBudget,
    pub agent_budget: TokenBudget,
}

/// Runs (or resumes) the knowledge search over the scenario store.
pub fn cmd_optimize(config: &RunConfig, resume: Option<&Path>) -> Result<RunSummary, CliError> {
    let out = config.output_dir();
    let _lock = OutputLock::acquire(&out)?;
    let toolkit = config.load_toolkit()?;
    let scenarios = load_store(config, &toolkit)?;
    let env = config.environment()?;
    if env.toolkit() != &toolkit {
        return Err(CliError::input("environment tools differ from the configured toolkit"));
    }
    let optimizer = config.knowledge_optimizer()?;
    let optimizer_llm = MeteredBackend::new(config.backend(&config.backends.optimizer)?);
    let agent_llm = MeteredBackend::new(config.backend(&config.backends.agent)?);
    let sim = SimulationContext {
        env: env.as_ref(),
        agent: &agent_llm,
        agent_settings: &config.agent,
        scenarios: &scenarios,
    };
    let expansion = ExpansionContext { optimizer: &optimizer, llm: &optimizer_llm };

    let mut search = match resume {
        Some(path) => {
            let mut checkpoint = io::read_checkpoint(path)?;
            if checkpoint.mode != config.mode {
                return Err(CliError::at(
                    path,
                    format!("checkpoint mode {:?} differs from requested mode {:?}", checkpoint.mode, config.mode),
                ));
            }
            // only the iteration budget may change between sessions
            let wanted = SearchConfig { max_iterations: checkpoint.config.max_iterations, ..config.search.clone() };
            if wanted != checkpoint.config {
                return Err(CliError::at(path, "checkpoint search settings differ from the configured ones"));
            }
            checkpoint.config.max_iterations = config.search.max_iterations;
            Search::resume(checkpoint)?
        }
        None => {
            let initial = match &config.initial_knowledge {
                Some(p) => io::read_knowledge(&config.resolve(p), &toolkit)?,
                None => ActionKnowledge::from_toolkit(&toolkit, ""),
            };
            Search::start(initial, config.search.clone(), config.mode, &sim)?
        }
    };
    let mut persist = Persist { dir: &out, error: None };
    persist.save(&search.state);
    let result = search.run(&expansion, &sim, &mut persist);
    if let Some(e) = persist.error {
        return Err(e);
    }
    result?;

    io::write_json(&out.join(BEST_KNOWLEDGE_FILE), search.best_knowledge())?;
    let tree = search.tree();
    let best = tree.best_node();
    let summary = RunSummary {
        mode: search.state.mode,
        seed: search.state.config.seed,
        scenario_count: scenarios.len(),
        iterations: tree.iteration,
        initial_score: tree.root_node().score.unwrap_or_default(),
        best_node: best,
        best_score: tree.nodes[best].score.unwrap_or_default(),
        optimizer_budget: optimizer_llm.budget(),
        agent_budget: agent_llm.budget(),
    };
    io::write_json(&out.join(RUN_SUMMARY_FILE), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub scenario_id: String,
    pub score: f64,
    pub steps: usize,
    pub tools: Vec<String>,
    pub finished: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationFile {
    pub knowledge: PathBuf,
    pub pass_rate: f64,
    pub passed: usize,
    pub total: usize,
    pub episode_errors: usize,
    pub results: Vec<ScenarioResult>,
    pub agent_budget: TokenBudget,
}

/// Evaluates a knowledge file over the whole scenario store.
pub fn cmd_eval(config: &RunConfig, knowledge: &Path) -> Result<EvaluationFile, CliError> {
    let out = config.output_dir();
    let _lock = OutputLock::acquire(&out)?;
    let toolkit = config.load_toolkit()?;
    let scenarios = load_store(config, &toolkit)?;
    let ak = io::read_knowledge(knowledge, &toolkit)?;
    let env = config.environment()?;
    let agent = MeteredBackend::new(config.backend(&config.backends.agent)?);
    let eval = evaluate(&ak, &scenarios, env.as_ref(), &agent, &config.agent)?;
    let results = eval
        .trajectories
        .iter()
        .map(|t| ScenarioResult {
            scenario_id: t.scenario_id.clone(),
            score: t.score,
            steps: t.steps.len(),
            tools: t.invoked_tools().into_iter().map(str::to_string).collect(),
            finished: t.finished(),
            error: t.error.clone(),
        })
        .collect();
    let file = EvaluationFile {
        knowledge: knowledge.to_path_buf(),
        pass_rate: round4(eval.pass_rate),
        passed: eval.passed,
        total: scenarios.len(),
        episode_errors: eval.episode_errors,
        results,
        agent_budget: agent.budget(),
    };
    io::write_json(&out.join(EVALUATION_FILE), &file)?;
    io::write_json(&out.join(TRAJECTORIES_FILE), &eval.trajectories)?;
    if eval.episode_errors == scenarios.len() {
        let first = eval.trajectories.iter().find_map(|t| t.error.clone()).unwrap_or_default();
        return Err(CliError::Backend(format!("every episode failed on the agent backend: {first}")));
    }
    Ok(file)
}

/// Root-to-best path of a checkpoint with scores, deltas and modifications.
pub fn best_path_summary(label: &str, checkpoint: &Checkpoint) -> String {
    let tree = &checkpoint.tree;
    let best = tree.best_node();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "run {label}: mode {:?}, {} iterations, best node {best}",
        checkpoint.mode, tree.iteration
    );
    for id in tree.path_to(best) {
        let node = &tree.nodes[id];
        let score = node.score.unwrap_or_default();
        match node.parent.and_then(|p| tree.nodes[p].score) {
            None => {
                let _ = writeln!(out, "  node {id}: score {score:.4} (initial knowledge)");
            }
            Some(parent) => {
                let _ = writeln!(
                    out,
                    "  node {id}: score {score:.4} (delta {:+.4}) {}",
                    score - parent,
                    node.modification
                );
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportOutput {
    pub iteration_rows: usize,
    pub scenario_count_rows: usize,
    pub summary: String,
}

/// Writes iteration curves, the scenario-count curve (for several runs)
/// and best-path summaries for the given checkpoints into `out`.
pub fn cmd_report(checkpoints: &[PathBuf], out: &Path) -> Result<ReportOutput, CliError> {
    if checkpoints.is_empty() {
        return Err(CliError::input("report needs at least one checkpoint"));
    }
    let _lock = OutputLock::acquire(out)?;
    let mut iteration_rows = Vec::new();
    let mut count_rows = Vec::new();
    let mut summary = String::new();
    for path in checkpoints {
        let checkpoint = io::read_checkpoint(path)?;
        let label = path.display().to_string();
        for r in &checkpoint.progress {
            iteration_rows.push((label.clone(), r.iteration, r.node_id, r.reward, r.node_score, r.best_score));
        }
        if checkpoints.len() > 1 {
            let run_file = path.with_file_name(RUN_SUMMARY_FILE);
            let run: RunSummary = io::read_json(&run_file)?;
            let best = checkpoint.tree.best_node();
            count_rows.push((label.clone(), run.scenario_count, checkpoint.tree.nodes[best].score.unwrap_or_default()));
        }
        summary.push_str(&best_path_summary(&label, &checkpoint));
    }
    io::write_csv(
        &out.join(ITERATIONS_CSV),
        &["run", "iteration", "node_id", "reward", "node_score", "best_score"],
        &iteration_rows,
    )?;
    if !count_rows.is_empty() {
        count_rows.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
        io::write_csv(&out.join(SCENARIO_COUNT_CSV), &["run", "scenario_count", "best_score"], &count_rows)?;
    }
    io::write_atomic(&out.join(BEST_PATH_FILE), summary.as_bytes())?;
    Ok(ReportOutput { iteration_rows: iteration_rows.len(), scenario_count_rows: count_rows.len(), summary })
}

/// Writes the bundled offline fixture and a matching config into `dir`.
pub fn cmd_init(dir: &Path) -> Result<PathBuf, CliError> {
    let files = [
        ("toolkit.json", fixture::TOOLKIT_JSON),
        ("simenv.json", fixture::SIMENV_JSON),
        ("scenarios.json", fixture::SCENARIOS_JSON),
        ("initial_knowledge.json", fixture::INITIAL_KNOWLEDGE_JSON),
        ("optimizer_rules.json", fixture::OPTIMIZER_RULES_JSON),
    ];
    for (name, _) in files.iter().chain([("config.json", "")].iter()) {
        if dir.join(name).exists() {
            return Err(CliError::input(format!("{} already exists", dir.join(name).display())));
        }
    }
    for (name, text) in files {
        io::write_atomic(&dir.join(name), text.as_bytes())?;
    }
    let config = RunConfig {
        scenarios: Some("scenarios.json".into()),
        initial_knowledge: Some("initial_knowledge.json".into()),
        environment: EnvironmentSettings::Sim { definition: "simenv.json".into() },
        backends: crate::config::Backends {
            synthesis: BackendSettings::Simulated,
            optimizer: BackendSettings::Scripted { rules: "optimizer_rules.json".into() },
            agent: BackendSettings::Simulated,
        },
        ..RunConfig::default()
    };
    let path = dir.join("config.json");
    io::write_json(&path, &config)?;
    Ok(path)
}

