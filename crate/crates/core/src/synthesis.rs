//! Scenario synthesis: tool-subset selection, LLM-driven (background, goal)
//! generation and near-duplicate filtering.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write as _;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::llm::{ChatBackend, ChatRequest, LlmError, Message};
use crate::types::{Scenario, Toolkit};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthesisConfig {
    pub scenarios_per_subset: usize,
    pub similarity_threshold: f64,
    pub target_scenario_count: usize,
    pub subset_size_range: (usize, usize),
    pub seed: u64,
    pub temperature: f64,
    pub model: String,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        Self {
            scenarios_per_subset: 3,
            similarity_threshold: 0.6,
            target_scenario_count: 200,
            subset_size_range: (1, 4),
            seed: 0,
            temperature: 0.7,
            model: "gpt-4-turbo".into(),
        }
    }
}

impl SynthesisConfig {
    pub fn validate(&self, toolkit: &Toolkit) -> Result<(), SynthesisError> {
        let (min, max) = self.subset_size_range;
        if !(2..=3).contains(&self.scenarios_per_subset) {
            return Err(SynthesisError::InvalidConfig(
                "scenarios_per_subset must be 2 or 3".into(),
            ));
        }
        if min < 1 || min > max {
            return Err(SynthesisError::InvalidConfig(format!(
                "subset_size_range ({min}, {max}) is not a valid range starting at >= 1"
            )));
        }
        if max > toolkit.len() {
            return Err(SynthesisError::InvalidConfig(format!(
                "subset_size_range max {max} exceeds toolkit size {}",
                toolkit.len()
            )));
        }
        let eps = self.similarity_threshold;
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(SynthesisError::InvalidConfig(
                "similarity_threshold must lie in (0, 1]".into(),
            ));
        }
        if self.target_scenario_count == 0 {
            return Err(SynthesisError::InvalidConfig("target_scenario_count must be >= 1".into()));
        }
        Ok(())
    }

    /// Number of subsets needed so that subsets * per-subset covers the target.
    pub fn subset_count(&self) -> usize {
        self.target_scenario_count.div_ceil(self.scenarios_per_subset)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthesisError {
    #[error("invalid synthesis config: {0}")]
    InvalidConfig(String),
    #[error("invalid tool subset: {0}")]
    InvalidSubset(String),
    #[error("backend failure during synthesis: {0}")]
    Backend(#[from] LlmError),
}

pub type ToolSubset = BTreeSet<String>;

fn tool_listing(toolkit: &Toolkit, only: Option<&ToolSubset>) -> String {
    let mut out = String::new();
    for t in toolkit.tools() {
        if only.is_some_and(|s| !s.contains(&t.tool_id)) {
            continue;
        }
        let _ = writeln!(out, "- {} ({}): {}", t.tool_id, t.name, t.description.trim());
    }
    out
}

pub fn render_subset_prompt(toolkit: &Toolkit, range: (usize, usize), request: usize) -> String {
    format!(
        "You are designing practice tasks for an agent that calls tools.\n\
         Available tools:\n{}\n\
         Pick between {} and {} tools that could plausibly be combined in one realistic task.\n\
         This is subset request #{request}; prefer combinations not chosen before.\n\
         Answer with a single line of the form:\n\
         tools: <tool_id>, <tool_id>\n",
        tool_listing(toolkit, None),
        range.0,
        range.1,
    )
}

/// Parses the first `tools: a, b` line whose ids all exist and whose size
/// falls inside `range`.
pub fn parse_subset(response: &str, toolkit: &Toolkit, range: (usize, usize)) -> Option<ToolSubset> {
    for line in response.lines() {
        let line = line.trim().trim_start_matches(['-', '*', ' ']);
        let Some(head) = line.get(..6) else { continue };
        if !head.eq_ignore_ascii_case("tools:") {
            continue;
        }
        let ids: Vec<&str> = line[6..]
            .split([',', ';'])
            .map(|s| s.trim().trim_matches(['`', '"', '\'', '.']))
            .filter(|s| !s.is_empty())
            .collect();
        if ids.is_empty() || ids.iter().any(|id| !toolkit.contains(id)) {
            continue;
        }
        let set: ToolSubset = ids.into_iter().map(String::from).collect();
        if (range.0..=range.1).contains(&set.len()) {
            return Some(set);
        }
    }
    None
}

fn random_subset(toolkit: &Toolkit, range: (usize, usize), rng: &mut ChaCha8Rng) -> ToolSubset {
    let size = rng.gen_range(range.0..=range.1);
    let tools = toolkit.tools();
    index::sample(rng, tools.len(), size)
        .into_iter()
        .map(|i| tools[i].tool_id.clone())
        .collect()
}

/// Subsets come from the model one request at a time; an unparseable answer
/// falls back to a seeded uniform draw.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetSelection {
    pub subsets: Vec<ToolSubset>,
    /// Indices of subsets drawn by the random fallback.
    pub fallbacks: Vec<usize>,
}

pub fn select_tool_subsets(
    toolkit: &Toolkit,
    config: &SynthesisConfig,
    llm: &dyn ChatBackend,
) -> Result<SubsetSelection, SynthesisError> {
    config.validate(toolkit)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut subsets = Vec::new();
    let mut fallbacks = Vec::new();
    for i in 0..config.subset_count() {
        let prompt = render_subset_prompt(toolkit, config.subset_size_range, i + 1);
        let request = ChatRequest::new(config.model.clone(), alloc::vec![Message::user(prompt)])
            .with_temperature(config.temperature);
        let response = llm.complete(&request)?;
        match parse_subset(&response, toolkit, config.subset_size_range) {
            Some(s) => subsets.push(s),
            None => {
                fallbacks.push(i);
                subsets.push(random_subset(toolkit, config.subset_size_range, &mut rng));
            }
        }
    }
    Ok(SubsetSelection { subsets, fallbacks })
}

const SCENARIO_EXAMPLE: &str = "BACKGROUND: A small bakery owner is planning a weekend stall at a farmers market in Lyon and keeps prices in euros.\n\
GOAL: Check whether it will rain in Lyon on Saturday and convert the stall fee of 40 USD into euros.";

pub fn render_scenario_prompt(subset: &ToolSubset, k: usize, toolkit: &Toolkit) -> String {
    format!(
        "Create {k} distinct, realistic task scenarios that can only be solved by using all of the following tools:\n\
         {}\n\
         Each scenario has a BACKGROUND (the contextual situation of the user) and a GOAL \
         (the concrete outcome the user wants, mentioning what each tool is needed for).\n\n\
         Here is an example:\n{SCENARIO_EXAMPLE}\n\n\
         Now write exactly {k} new scenarios in the same format, one BACKGROUND line followed by one GOAL line each.\n",
        tool_listing(toolkit, Some(subset)),
    )
}

fn strip_label<'a>(line: &'a str, label: &str) -> Option<&'a str> {
    let t = line
        .trim()
        .trim_start_matches(|c: char| c.is_ascii_digit() || matches!(c, '.' | ')' | '-' | '*' | '#' | ' '));
    let head = t.get(..label.len())?;
    if head.eq_ignore_ascii_case(label) {
        Some(t[label.len()..].trim_start_matches('*').trim())
    } else {
        None
    }
}

/// Extracts well-formed BACKGROUND/GOAL pairs, ignoring surrounding prose.
/// A background may span lines up to its GOAL line; the goal is that one
/// line. Blocks missing either half or with empty text are dropped.
pub fn parse_scenario_blocks(text: &str) -> Vec<(String, String)> {
    let mut out = Vec::new();
    let mut background: Option<String> = None;
    for line in text.lines() {
        if let Some(rest) = strip_label(line, "background:") {
            background = Some(rest.to_string());
        } else if let Some(rest) = strip_label(line, "goal:") {
            if let Some(b) = background.take() {
                let (b, g) = (b.trim().to_string(), rest.trim().to_string());
                if !b.is_empty() && !g.is_empty() {
                    out.push((b, g));
                }
            }
        } else if line.trim().is_empty() {
            background = None;
        } else if let Some(b) = background.as_mut() {
            b.push(' ');
            b.push_str(line.trim());
        }
    }
    out
}

/// Generates up to `k` candidates for one subset. Candidate ids are
/// `<id_prefix>-<n>` and are normally reassigned on acceptance.
pub fn synthesize_scenarios(
    subset: &ToolSubset,
    k: usize,
    toolkit: &Toolkit,
    llm: &dyn ChatBackend,
    config: &SynthesisConfig,
    id_prefix: &str,
) -> Result<Vec<Scenario>, SynthesisError> {
    if subset.is_empty() {
        return Err(SynthesisError::InvalidSubset("empty subset".into()));
    }
    if let Some(bad) = subset.iter().find(|t| !toolkit.contains(t)) {
        return Err(SynthesisError::InvalidSubset(format!("unknown tool {bad}")));
    }
    if !(2..=3).contains(&k) {
        return Err(SynthesisError::InvalidConfig(format!("k must be 2 or 3, got {k}")));
    }
    let prompt = render_scenario_prompt(subset, k, toolkit);
    let request = ChatRequest::new(config.model.clone(), alloc::vec![Message::user(prompt)])
        .with_temperature(config.temperature);
    let response = llm.complete(&request)?;
    Ok(parse_scenario_blocks(&response)
        .into_iter()
        .take(k)
        .enumerate()
        .map(|(n, (background, goal))| Scenario {
            scenario_id: format!("{id_prefix}-{}", n + 1),
            background,
            goal,
            gold_tools: subset.clone(),
            origin_subset: subset.clone(),
        })
        .collect())
}

/// A scenario similarity in [0, 1], split into a per-scenario fingerprint
/// and a comparison so batch filtering computes each fingerprint once.
pub trait SimilarityMetric {
    type Fingerprint;

    fn fingerprint(&self, scenario: &Scenario) -> Self::Fingerprint;

    fn compare(&self, a: &Self::Fingerprint, b: &Self::Fingerprint) -> f64;

    fn similarity(&self, a: &Scenario, b: &Scenario) -> f64 {
        self.compare(&self.fingerprint(a), &self.fingerprint(b))
    }
}

/// Lowercased alphanumeric tokens of the background followed by the goal.
pub fn normalized_tokens(scenario: &Scenario) -> Vec<String> {
    let mut tokens = Vec::new();
    for text in [&scenario.background, &scenario.goal] {
        let cleaned: String = text
            .chars()
            .map(|c| if c.is_alphanumeric() { c } else { ' ' })
            .flat_map(char::to_lowercase)
            .collect();
        tokens.extend(cleaned.split_whitespace().map(String::from));
    }
    tokens
}

/// Jaccard overlap of word shingles (3 tokens by default).
#[derive(Debug, Clone, Copy)]
pub struct ShingleJaccard {
    pub width: usize,
}

impl Default for ShingleJaccard {
    fn default() -> Self {
        Self { width: 3 }
    }
}

impl SimilarityMetric for ShingleJaccard {
    type Fingerprint = BTreeSet<String>;

    fn fingerprint(&self, scenario: &Scenario) -> BTreeSet<String> {
        let tokens = normalized_tokens(scenario);
        if tokens.is_empty() {
            return BTreeSet::new();
        }
        // texts shorter than one shingle collapse to a single shingle
        let w = self.width.clamp(1, tokens.len());
        tokens.windows(w).map(|win| win.join(" ")).collect()
    }

    fn compare(&self, a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
        match (a.is_empty(), b.is_empty()) {
            (true, true) => return 1.0,
            (true, false) | (false, true) => return 0.0,
            _ => {}
        }
        let inter = a.intersection(b).count();
        let union = a.len() + b.len() - inter;
        inter as f64 / union as f64
    }
}

/// Produces a dense vector for a text; backs [`EmbeddingCosine`].
pub trait Embedder {
    fn embed(&self, text: &str) -> Vec<f64>;
}

/// Cosine similarity between embeddings of `background goal`, clamped to [0, 1].
pub struct EmbeddingCosine<E> {
    pub embedder: E,
}

impl<E: Embedder> SimilarityMetric for EmbeddingCosine<E> {
    type Fingerprint = Vec<f64>;

    fn fingerprint(&self, scenario: &Scenario) -> Vec<f64> {
        let text = format!("{} {}", scenario.background, scenario.goal);
        self.embedder.embed(&text)
    }

    fn compare(&self, a: &Vec<f64>, b: &Vec<f64>) -> f64 {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let na = libm::sqrt(a.iter().map(|x| x * x).sum());
        let nb = libm::sqrt(b.iter().map(|x| x * x).sum());
        if na == 0.0 || nb == 0.0 {
            return 0.0;
        }
        (dot / (na * nb)).clamp(0.0, 1.0)
    }
}

pub fn similarity(a: &Scenario, b: &Scenario) -> f64 {
    ShingleJaccard::default().similarity(a, b)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DedupOutcome {
    pub accepted: Vec<Scenario>,
    /// Rejected candidates with their highest similarity to an accepted scenario.
    pub rejected: Vec<(Scenario, f64)>,
}

/// Greedy, order-preserving filter: a candidate is kept iff its maximum
/// similarity to everything accepted so far is at most `threshold`.
pub fn dedup_filter<M: SimilarityMetric>(
    candidates: Vec<Scenario>,
    accepted: &[Scenario],
    threshold: f64,
    metric: &M,
) -> DedupOutcome {
    let mut pool: Vec<M::Fingerprint> = accepted.iter().map(|s| metric.fingerprint(s)).collect();
    let mut out = DedupOutcome::default();
    for c in candidates {
        let fp = metric.fingerprint(&c);
        let max = pool
            .iter()
            .map(|p| metric.compare(&fp, p))
            .fold(0.0_f64, f64::max);
        if max <= threshold {
            pool.push(fp);
            out.accepted.push(c);
        } else {
            out.rejected.push((c, max));
        }
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SynthesisReport {
    pub subsets: usize,
    pub subset_fallbacks: usize,
    pub generated: usize,
    pub accepted: usize,
    pub rejected: usize,
    pub rejection_similarities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisOutcome {
    pub scenarios: Vec<Scenario>,
    pub report: SynthesisReport,
}

/// Full pipeline: subsets, per-subset generation, then serialized dedup
/// until `target_scenario_count` scenarios are accepted or subsets run out.
pub fn synthesize_store<M: SimilarityMetric>(
    toolkit: &Toolkit,
    config: &SynthesisConfig,
    llm: &dyn ChatBackend,
    metric: &M,
) -> Result<SynthesisOutcome, SynthesisError> {
    let selection = select_tool_subsets(toolkit, config, llm)?;
    let mut report = SynthesisReport {
        subsets: selection.subsets.len(),
        subset_fallbacks: selection.fallbacks.len(),
        ..Default::default()
    };
    let mut store: Vec<Scenario> = Vec::new();
    for (i, subset) in selection.subsets.iter().enumerate() {
        if store.len() >= config.target_scenario_count {
            break;
        }
        let candidates = synthesize_scenarios(
            subset,
            config.scenarios_per_subset,
            toolkit,
            llm,
            config,
            &format!("cand-{}", i + 1),
        )?;
        report.generated += candidates.len();
        let outcome = dedup_filter(candidates, &store, config.similarity_threshold, metric);
        report.rejected += outcome.rejected.len();
        report
            .rejection_similarities
            .extend(outcome.rejected.iter().map(|(_, s)| *s));
        for mut s in outcome.accepted {
            if store.len() >= config.target_scenario_count {
                break;
            }
            s.scenario_id = format!("scn-{:04}", store.len() + 1);
            store.push(s);
        }
    }
    report.accepted = store.len();
    Ok(SynthesisOutcome { scenarios: store, report })
}
