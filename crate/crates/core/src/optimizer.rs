//! LLM-driven refinement of action knowledge from exploration trajectories
//! and the experience path of prior edits.

use alloc::borrow::Cow;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::llm::{ChatBackend, ChatRequest, LlmError, Message};
use crate::mcts::SearchTree;
use crate::types::{
    validate_action_knowledge, word_count, ActionKnowledge, OptimizationExperience, ToolSpec,
    Toolkit, Trajectory, WORKFLOW_WORD_CAP,
};

/// Which part of the knowledge an optimizer may rewrite.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizeMode {
    #[default]
    Both,
    DescriptionOnly,
    WorkflowOnly,
}

impl OptimizeMode {
    pub fn rewrites_descriptions(self) -> bool {
        matches!(self, OptimizeMode::Both | OptimizeMode::DescriptionOnly)
    }

    pub fn rewrites_workflow(self) -> bool {
        matches!(self, OptimizeMode::Both | OptimizeMode::WorkflowOnly)
    }
}

impl core::str::FromStr for OptimizeMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "both" => Ok(OptimizeMode::Both),
            "description-only" => Ok(OptimizeMode::DescriptionOnly),
            "workflow-only" => Ok(OptimizeMode::WorkflowOnly),
            other => Err(format!("unknown mode {other:?}")),
        }
    }
}

/// Experience edges from the root down to `node_id`. Unscored nodes are
/// skipped; a scored node's `before` is its nearest scored ancestor.
pub fn collect_experience_path(tree: &SearchTree, node_id: usize) -> Vec<OptimizationExperience> {
    let mut chain = Vec::new();
    let mut cur = tree.node(node_id);
    while let Some(node) = cur {
        chain.push(node);
        cur = node.parent.and_then(|p| tree.node(p));
    }
    chain.reverse();
    let mut out = Vec::new();
    let mut last_score: Option<f64> = None;
    for node in chain {
        let Some(score) = node.score else { continue };
        if let (Some(before), Some(_)) = (last_score, node.parent) {
            out.push(OptimizationExperience {
                score_before: before,
                score_after: score,
                modification: node.modification.clone(),
            });
        }
        last_score = Some(score);
    }
    out
}

pub const OBSERVATION_CHAR_LIMIT: usize = 500;

fn truncate_chars(text: &str, limit: usize) -> Cow<'_, str> {
    match text.char_indices().nth(limit) {
        Some((cut, _)) => Cow::Owned(format!("{} [truncated]", &text[..cut])),
        None => Cow::Borrowed(text),
    }
}

/// Numbered Thought/Action/Args/Observation transcript of each trajectory.
pub fn serialize_trajectories(trajectories: &[Trajectory]) -> String {
    let mut out = String::new();
    for (i, t) in trajectories.iter().enumerate() {
        let _ = writeln!(
            out,
            "Trajectory {} (scenario {}, score {}):",
            i + 1,
            t.scenario_id,
            t.score
        );
        if let Some(e) = &t.error {
            let _ = writeln!(out, "Episode error: {}", truncate_chars(e, OBSERVATION_CHAR_LIMIT));
        }
        for (n, s) in t.steps.iter().enumerate() {
            let _ = writeln!(out, "Step {}", n + 1);
            let _ = writeln!(out, "Thought: {}", s.thought);
            let _ = writeln!(out, "Action: {}", s.tool_id);
            if !s.is_finish() {
                let args = serde_json::to_string(&s.arguments).unwrap_or_default();
                let _ = writeln!(out, "Args: {args}");
            }
            let _ = writeln!(
                out,
                "Observation: {}",
                truncate_chars(&s.observation, OBSERVATION_CHAR_LIMIT)
            );
        }
        if !t.final_answer.is_empty() {
            let _ = writeln!(out, "Final answer: {}", truncate_chars(&t.final_answer, OBSERVATION_CHAR_LIMIT));
        }
    }
    out
}

/// Replaces `{name}` slots in one left-to-right pass; inserted text is not
/// rescanned, unknown slots are kept verbatim.
pub fn fill_slots(template: &str, slots: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let hit = after.find('}').and_then(|close| {
            let name = &after[..close];
            slots
                .iter()
                .find(|(k, _)| *k == name)
                .map(|(_, v)| (close, *v))
        });
        match hit {
            Some((close, value)) => {
                out.push_str(value);
                rest = &after[close + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

pub const DEFAULT_TOOL_TEMPLATE: &str = include_str!("../templates/tool_description.txt");
pub const DEFAULT_WORKFLOW_TEMPLATE: &str = include_str!("../templates/workflow.txt");

/// Editable refinement prompts with `{tool_name}`, `{original_description}`,
/// `{trajectory}` and `{workflow}` slots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplates {
    pub tool: String,
    pub workflow: String,
}

impl Default for PromptTemplates {
    fn default() -> Self {
        Self {
            tool: DEFAULT_TOOL_TEMPLATE.to_string(),
            workflow: DEFAULT_WORKFLOW_TEMPLATE.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OptimizeError {
    #[error("refinement prompts need at least one trajectory")]
    NoTrajectories,
    #[error("invalid action knowledge: {0}")]
    InvalidKnowledge(String),
    #[error("optimizer backend failed: {0}")]
    Backend(#[from] LlmError),
}

impl PromptTemplates {
    pub fn render_tool_prompt(
        &self,
        tool: &ToolSpec,
        description: &str,
        trajectories: &[Trajectory],
    ) -> Result<String, OptimizeError> {
        if trajectories.is_empty() {
            return Err(OptimizeError::NoTrajectories);
        }
        let transcript = serialize_trajectories(trajectories);
        Ok(fill_slots(
            &self.tool,
            &[
                ("tool_name", &tool.tool_id),
                ("original_description", description),
                ("trajectory", transcript.trim_end()),
            ],
        ))
    }

    pub fn render_workflow_prompt(
        &self,
        workflow: &str,
        trajectories: &[Trajectory],
    ) -> Result<String, OptimizeError> {
        if trajectories.is_empty() {
            return Err(OptimizeError::NoTrajectories);
        }
        let workflow = if workflow.trim().is_empty() { "(none)" } else { workflow.trim() };
        let transcript = serialize_trajectories(trajectories);
        Ok(fill_slots(
            &self.workflow,
            &[("workflow", workflow), ("trajectory", transcript.trim_end())],
        ))
    }
}

/// Default-template rendering of the tool-description prompt.
pub fn render_tool_prompt(tool: &ToolSpec, trajectories: &[Trajectory]) -> Result<String, OptimizeError> {
    PromptTemplates::default().render_tool_prompt(tool, &tool.description, trajectories)
}

/// Default-template rendering of the workflow prompt.
pub fn render_workflow_prompt(workflow: &str, trajectories: &[Trajectory]) -> Result<String, OptimizeError> {
    PromptTemplates::default().render_workflow_prompt(workflow, trajectories)
}

/// Preamble listing prior edits (one line per edge) and, for sibling
/// expansions, the revisions already tried from the same parent.
pub fn render_preamble(experiences: &[OptimizationExperience], siblings: &[String]) -> String {
    let mut out = String::from("Prior edits and their score changes:\n");
    if experiences.is_empty() {
        out.push_str("(none)\n");
    }
    for e in experiences {
        let _ = writeln!(
            out,
            "before={:.4}, after={:.4}, change={}",
            e.score_before, e.score_after, e.modification
        );
    }
    if !siblings.is_empty() {
        out.push_str("Revisions already tried from this version (propose a different revision):\n");
        for s in siblings {
            let _ = writeln!(out, "- {s}");
        }
    }
    out
}

fn clean_response(text: &str, labels: &[&str]) -> String {
    let t = text.trim();
    for label in labels {
        if t.get(..label.len()).is_some_and(|h| h.eq_ignore_ascii_case(label)) {
            return t[label.len()..].trim().to_string();
        }
    }
    t.to_string()
}

const DESCRIPTION_LABELS: [&str; 3] =
    ["optimized description:", "optimize description:", "description:"];
const WORKFLOW_LABELS: [&str; 3] = ["optimized workflow:", "optimize workflow:", "workflow:"];

/// Keeps the text up to the end of its `cap`-th whitespace-delimited word.
pub fn truncate_words(text: &str, cap: usize) -> &str {
    let mut end = 0;
    for (count, word) in text.split_whitespace().enumerate() {
        if count == cap {
            break;
        }
        let start = word.as_ptr() as usize - text.as_ptr() as usize;
        end = start + word.len();
    }
    &text[..end]
}

#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    pub knowledge: ActionKnowledge,
    pub modification: String,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KnowledgeOptimizer {
    pub mode: OptimizeMode,
    pub templates: PromptTemplates,
    pub temperature: f64,
    pub model: String,
}

impl Default for KnowledgeOptimizer {
    fn default() -> Self {
        Self {
            mode: OptimizeMode::Both,
            templates: PromptTemplates::default(),
            temperature: 0.7,
            model: "gpt-4-turbo".into(),
        }
    }
}

impl KnowledgeOptimizer {
    pub fn new(mode: OptimizeMode) -> Self {
        Self { mode, ..Self::default() }
    }

    fn ask(&self, llm: &dyn ChatBackend, preamble: &str, prompt: String) -> Result<String, LlmError> {
        let request = ChatRequest::new(
            self.model.clone(),
            alloc::vec![Message::system(preamble), Message::user(prompt)],
        )
        .with_temperature(self.temperature);
        llm.complete(&request)
    }

    /// Produces the next knowledge version. `siblings` carries modifications
    /// already produced from the same parent.
    pub fn optimize(
        &self,
        ak_old: &ActionKnowledge,
        experiences: &[OptimizationExperience],
        trajectories: &[Trajectory],
        siblings: &[String],
        toolkit: &Toolkit,
        llm: &dyn ChatBackend,
    ) -> Result<Refinement, OptimizeError> {
        let report = validate_action_knowledge(ak_old, toolkit);
        if !report.is_ok() {
            return Err(OptimizeError::InvalidKnowledge(report.messages().join("; ")));
        }
        let preamble = render_preamble(experiences, siblings);
        let mut ak = ak_old.clone();
        let mut warnings = Vec::new();
        let mut summary = Vec::new();

        if self.mode.rewrites_descriptions() {
            let mut parts = Vec::new();
            for tool in toolkit.tools() {
                let touching: Vec<Trajectory> = trajectories
                    .iter()
                    .filter(|t| t.invoked_tools().contains(&tool.tool_id.as_str()))
                    .cloned()
                    .collect();
                if touching.is_empty() {
                    continue;
                }
                let old = &ak_old.descriptions[&tool.tool_id];
                let prompt = self.templates.render_tool_prompt(tool, old, &touching)?;
                let new = clean_response(&self.ask(llm, &preamble, prompt)?, &DESCRIPTION_LABELS);
                if new.is_empty() {
                    warnings.push(format!("empty description for {}; kept previous", tool.tool_id));
                    parts.push(format!("{} unchanged", tool.tool_id));
                    continue;
                }
                let changed = &new != old;
                ak.descriptions.insert(tool.tool_id.clone(), new);
                parts.push(format!(
                    "{} {}",
                    tool.tool_id,
                    if changed { "changed" } else { "unchanged" }
                ));
            }
            if parts.is_empty() {
                summary.push("descriptions: no invoked tools".to_string());
            } else {
                summary.push(format!("descriptions: {}", parts.join(", ")));
            }
        } else {
            summary.push("descriptions: unchanged".to_string());
        }

        let old_words = word_count(&ak_old.workflow);
        if self.mode.rewrites_workflow() {
            let prompt = self.templates.render_workflow_prompt(&ak_old.workflow, trajectories)?;
            let mut new = clean_response(&self.ask(llm, &preamble, prompt.clone())?, &WORKFLOW_LABELS);
            if word_count(&new) > WORKFLOW_WORD_CAP {
                let retry = format!(
                    "{prompt}\nYour previous answer had {} words. Answer again in at most 200 words.",
                    word_count(&new)
                );
                new = clean_response(&self.ask(llm, &preamble, retry)?, &WORKFLOW_LABELS);
                if word_count(&new) > WORKFLOW_WORD_CAP {
                    warnings.push(format!(
                        "workflow of {} words truncated to {WORKFLOW_WORD_CAP}",
                        word_count(&new)
                    ));
                    new = truncate_words(&new, WORKFLOW_WORD_CAP).to_string();
                }
            }
            let changed = new != ak_old.workflow;
            summary.push(format!(
                "workflow: {} ({old_words} -> {} words)",
                if changed { "changed" } else { "unchanged" },
                word_count(&new)
            ));
            ak.workflow = new;
        } else {
            summary.push(format!("workflow: unchanged ({old_words} words)"));
        }

        ak.version = ak_old.version + 1;
        Ok(Refinement { knowledge: ak, modification: summary.join("; "), warnings })
    }
}
