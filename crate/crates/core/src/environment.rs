//! Agent episodes against a tool environment, and the deterministic
//! simulated environment used for offline runs.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::llm::{ChatBackend, ChatRequest, LlmError, Message};
use crate::types::{
    canonical_args, validate_action_knowledge, ActionKnowledge, ArgValue, Arguments, ParamType,
    Scenario, ToolSpec, Toolkit, Trajectory, TrajectoryStep, FINISH,
};

pub const UNPARSEABLE_ACTION: &str = "unparseable action";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolResponse {
    pub observation: String,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("environment failure: {0}")]
pub struct EnvError(pub String);

/// What an agent can act on: a toolkit, tool invocation and a goal check.
pub trait Environment {
    fn toolkit(&self) -> &Toolkit;

    fn invoke_tool(
        &self,
        tool_id: &str,
        arguments: &Arguments,
        scenario: &Scenario,
    ) -> Result<ToolResponse, EnvError>;

    fn check_goal(&self, scenario: &Scenario, trajectory: &Trajectory) -> bool {
        gold_tool_coverage(scenario, trajectory)
    }
}

/// Pass iff every gold tool was invoked successfully at least once and the
/// episode ended with FINISH and a non-empty answer.
pub fn gold_tool_coverage(scenario: &Scenario, trajectory: &Trajectory) -> bool {
    let covered = scenario.gold_tools.iter().all(|gold| {
        trajectory
            .steps
            .iter()
            .any(|s| s.ok && &s.tool_id == gold)
    });
    covered && trajectory.finished() && !trajectory.final_answer.trim().is_empty()
}

pub fn score_trajectory(scenario: &Scenario, trajectory: &Trajectory, env: &dyn Environment) -> f64 {
    if env.check_goal(scenario, trajectory) {
        1.0
    } else {
        0.0
    }
}

/// Checks `arguments` against the declared parameter schema plus any
/// additional parameters the environment silently requires.
pub fn check_arguments(tool: &ToolSpec, arguments: &Arguments, also_required: &[String]) -> Vec<String> {
    let mut problems = Vec::new();
    for (name, value) in arguments {
        let Some(param) = tool.param(name) else {
            problems.push(format!("unexpected parameter {name}"));
            continue;
        };
        let fits = matches!(
            (param.kind, value),
            (ParamType::String | ParamType::Enum, ArgValue::String(_) | ArgValue::Number(_))
                | (ParamType::Number, ArgValue::Number(_))
                | (ParamType::Boolean, ArgValue::Bool(_))
        );
        if !fits {
            problems.push(format!("parameter {name} expects a {}", param.kind));
        }
    }
    let declared = tool.parameters.iter().filter(|p| p.required).map(|p| &p.name);
    for name in declared.chain(also_required) {
        if !arguments.contains_key(name) {
            problems.push(format!("missing required parameter: {name}"));
        }
    }
    problems
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Responder {
    pub tool_id: String,
    /// Exact canonical argument form, see [`canonical_args`].
    pub args: String,
    pub observation: String,
}

/// File form of a simulated environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimEnvDefinition {
    pub tools: Vec<ToolSpec>,
    #[serde(default)]
    pub responders: Vec<Responder>,
    /// Observation for valid calls with no exact responder, per tool.
    #[serde(default)]
    pub default_responses: BTreeMap<String, String>,
    /// Parameters the environment requires but the schema does not mark required.
    #[serde(default)]
    pub hidden_required: BTreeMap<String, Vec<String>>,
}

/// Deterministic scripted environment. Immutable after construction.
#[derive(Debug, Clone)]
pub struct SimEnv {
    toolkit: Toolkit,
    responders: BTreeMap<(String, String), String>,
    default_responses: BTreeMap<String, String>,
    hidden_required: BTreeMap<String, Vec<String>>,
}

impl SimEnv {
    pub fn new(def: SimEnvDefinition) -> Result<Self, EnvError> {
        let toolkit = Toolkit::new(def.tools).map_err(|e| EnvError(e.to_string()))?;
        let mut responders = BTreeMap::new();
        for r in def.responders {
            if !toolkit.contains(&r.tool_id) {
                return Err(EnvError(format!("responder for unknown tool {}", r.tool_id)));
            }
            responders.insert((r.tool_id, r.args), r.observation);
        }
        for (tool, params) in &def.hidden_required {
            let spec = toolkit
                .get(tool)
                .ok_or_else(|| EnvError(format!("hidden requirement for unknown tool {tool}")))?;
            if let Some(p) = params.iter().find(|p| spec.param(p).is_none()) {
                return Err(EnvError(format!(
                    "hidden requirement {p} is not a declared parameter of {tool}"
                )));
            }
        }
        for tool in def.default_responses.keys() {
            if !toolkit.contains(tool) {
                return Err(EnvError(format!("default response for unknown tool {tool}")));
            }
        }
        Ok(Self {
            toolkit,
            responders,
            default_responses: def.default_responses,
            hidden_required: def.hidden_required,
        })
    }

    pub fn hidden_required(&self, tool_id: &str) -> &[String] {
        self.hidden_required.get(tool_id).map(Vec::as_slice).unwrap_or(&[])
    }
}

impl Environment for SimEnv {
    fn toolkit(&self) -> &Toolkit {
        &self.toolkit
    }

    fn invoke_tool(
        &self,
        tool_id: &str,
        arguments: &Arguments,
        _scenario: &Scenario,
    ) -> Result<ToolResponse, EnvError> {
        let Some(tool) = self.toolkit.get(tool_id) else {
            return Ok(ToolResponse {
                observation: format!("error: unknown tool {tool_id}"),
                ok: false,
            });
        };
        let problems = check_arguments(tool, arguments, self.hidden_required(tool_id));
        if !problems.is_empty() {
            return Ok(ToolResponse {
                observation: format!("invalid parameters: {}", problems.join("; ")),
                ok: false,
            });
        }
        let canonical = canonical_args(arguments);
        let observation = match self.responders.get(&(tool_id.to_string(), canonical.clone())) {
            Some(o) => o.clone(),
            None => match self.default_responses.get(tool_id) {
                Some(o) => o.replace("{args}", &canonical),
                None => format!("{tool_id} returned a result for {canonical}"),
            },
        };
        Ok(ToolResponse { observation, ok: true })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentSettings {
    pub max_steps: usize,
    pub temperature: f64,
    pub model: String,
}

impl Default for AgentSettings {
    fn default() -> Self {
        Self { max_steps: 8, temperature: 0.0, model: "gpt-4-turbo".into() }
    }
}

pub const AGENT_SYSTEM_PROMPT: &str = "You are an agent that solves tasks by calling tools, one call per turn.\n\
Respond in exactly this format:\n\
Thought: <your reasoning>\n\
Action: <tool_id>\n\
Args: <JSON object or key=value pairs separated by commas>\n\
When the task is complete respond with:\n\
Thought: <your reasoning>\n\
Action: FINISH\n\
Answer: <final answer>";

fn render_step(out: &mut String, n: usize, step: &TrajectoryStep) {
    let _ = writeln!(out, "Step {n}:");
    let _ = writeln!(out, "Thought: {}", step.thought);
    let _ = writeln!(out, "Action: {}", step.tool_id);
    if !step.is_finish() {
        let args = serde_json::to_string(&step.arguments).unwrap_or_default();
        let _ = writeln!(out, "Args: {args}");
    }
    let _ = writeln!(out, "Observation: {}", step.observation);
}

/// User message for the next agent turn.
pub fn render_agent_prompt(
    ak: &ActionKnowledge,
    toolkit: &Toolkit,
    scenario: &Scenario,
    steps: &[TrajectoryStep],
) -> String {
    let mut out = String::from("## Tools\n");
    for tool in toolkit.tools() {
        let desc = ak.description(&tool.tool_id).unwrap_or(&tool.description);
        let desc = desc.split_whitespace().collect::<Vec<_>>().join(" ");
        let _ = writeln!(out, "- tool_id: {}", tool.tool_id);
        let _ = writeln!(out, "  name: {}", tool.name);
        let _ = writeln!(out, "  description: {desc}");
        let params: Vec<String> = tool
            .parameters
            .iter()
            .map(|p| {
                let req = if p.required { "required" } else { "optional" };
                format!("{} ({}, {req}): {}", p.name, p.kind, p.description)
            })
            .collect();
        let params = if params.is_empty() { "(none)".into() } else { params.join("; ") };
        let _ = writeln!(out, "  parameters: {params}");
    }
    out.push_str("## Workflow\n");
    if ak.workflow.trim().is_empty() {
        out.push_str("(none)\n");
    } else {
        out.push_str(ak.workflow.trim());
        out.push('\n');
    }
    let _ = write!(
        out,
        "## Task\nBackground: {}\nGoal: {}\n## Transcript\n",
        scenario.background, scenario.goal
    );
    if steps.is_empty() {
        out.push_str("(no steps yet)\n");
    }
    for (i, s) in steps.iter().enumerate() {
        render_step(&mut out, i + 1, s);
    }
    out.push_str("Give your next step.\n");
    out
}

#[derive(Debug, Clone, PartialEq)]
pub enum AgentAction {
    Call { thought: String, tool_id: String, arguments: Arguments },
    Finish { thought: String, answer: String },
}

fn keyword(line: &str) -> Option<(&'static str, &str)> {
    const KEYS: [(&str, &str); 6] = [
        ("thought:", "thought"),
        ("action input:", "args"),
        ("action:", "action"),
        ("arguments:", "args"),
        ("args:", "args"),
        ("answer:", "answer"),
    ];
    let t = line.trim_start();
    for (prefix, key) in KEYS {
        if t.get(..prefix.len()).is_some_and(|h| h.eq_ignore_ascii_case(prefix)) {
            return Some((key, &t[prefix.len()..]));
        }
    }
    None
}

fn parse_arguments(raw: &str) -> Option<Arguments> {
    let raw = raw.trim();
    if raw.is_empty() || raw == "{}" {
        return Some(Arguments::new());
    }
    if raw.starts_with('{') {
        let map: BTreeMap<String, serde_json::Value> = serde_json::from_str(raw).ok()?;
        return Some(
            map.into_iter()
                .map(|(k, v)| {
                    let v = match v {
                        serde_json::Value::Bool(b) => ArgValue::Bool(b),
                        serde_json::Value::Number(n) => match n.as_f64() {
                            Some(f) => ArgValue::Number(f),
                            None => ArgValue::String(n.to_string()),
                        },
                        serde_json::Value::String(s) => ArgValue::String(s),
                        other => ArgValue::String(other.to_string()),
                    };
                    (k, v)
                })
                .collect(),
        );
    }
    let mut args = Arguments::new();
    for pair in raw.split([',', ';', '\n']).map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = pair.split_once('=')?;
        let k = k.trim();
        if k.is_empty() {
            return None;
        }
        args.insert(k.to_string(), ArgValue::parse_loose(v));
    }
    Some(args)
}

/// Parses the plain-text agent grammar; keywords are case-insensitive.
pub fn parse_agent_action(text: &str) -> Option<AgentAction> {
    let mut fields: BTreeMap<&str, String> = BTreeMap::new();
    let mut current: Option<&str> = None;
    for line in text.lines() {
        if let Some((key, rest)) = keyword(line) {
            current = Some(key);
            fields.entry(key).or_insert_with(|| rest.trim().to_string());
        } else if let Some(key) = current {
            let entry = fields.entry(key).or_default();
            if !line.trim().is_empty() {
                if !entry.is_empty() {
                    entry.push('\n');
                }
                entry.push_str(line.trim());
            }
        }
    }
    let action = fields.get("action")?.trim().trim_matches(['`', '[', ']', '"', '\'']).to_string();
    if action.is_empty() {
        return None;
    }
    let thought = fields.get("thought").cloned().unwrap_or_default();
    if action.eq_ignore_ascii_case(FINISH) {
        let answer = fields.get("answer").cloned().unwrap_or_default();
        return Some(AgentAction::Finish { thought, answer });
    }
    let arguments = parse_arguments(fields.get("args").map(String::as_str).unwrap_or(""))?;
    Some(AgentAction::Call { thought, tool_id: action, arguments })
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EpisodeError {
    #[error("agent backend failed: {0}")]
    Transport(#[from] LlmError),
    #[error(transparent)]
    Environment(#[from] EnvError),
    #[error("invalid action knowledge: {0}")]
    InvalidKnowledge(String),
}

/// One ReAct-style episode. The trajectory score is left at 0; see [`evaluate`].
pub fn run_episode(
    ak: &ActionKnowledge,
    scenario: &Scenario,
    env: &dyn Environment,
    llm: &dyn ChatBackend,
    settings: &AgentSettings,
) -> Result<Trajectory, EpisodeError> {
    let toolkit = env.toolkit();
    let report = validate_action_knowledge(ak, toolkit);
    if !report.is_ok() {
        return Err(EpisodeError::InvalidKnowledge(report.messages().join("; ")));
    }
    let max_steps = settings.max_steps.max(1);
    let mut steps: Vec<TrajectoryStep> = Vec::new();
    let mut final_answer = String::new();
    while steps.len() < max_steps {
        let prompt = render_agent_prompt(ak, toolkit, scenario, &steps);
        let request = ChatRequest::new(
            settings.model.clone(),
            alloc::vec![Message::system(AGENT_SYSTEM_PROMPT), Message::user(prompt)],
        )
        .with_temperature(settings.temperature);
        let reply = llm.complete(&request)?;
        match parse_agent_action(&reply) {
            None => steps.push(TrajectoryStep {
                thought: String::new(),
                tool_id: String::new(),
                arguments: Arguments::new(),
                observation: UNPARSEABLE_ACTION.into(),
                ok: false,
            }),
            Some(AgentAction::Finish { thought, answer }) => {
                final_answer = answer.clone();
                steps.push(TrajectoryStep {
                    thought,
                    tool_id: FINISH.into(),
                    arguments: Arguments::new(),
                    observation: answer,
                    ok: true,
                });
                break;
            }
            Some(AgentAction::Call { thought, tool_id, arguments }) => {
                let response = env.invoke_tool(&tool_id, &arguments, scenario)?;
                steps.push(TrajectoryStep {
                    thought,
                    tool_id,
                    arguments,
                    observation: response.observation,
                    ok: response.ok,
                });
            }
        }
    }
    Ok(Trajectory {
        scenario_id: scenario.scenario_id.clone(),
        steps,
        final_answer,
        score: 0.0,
        error: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub trajectories: Vec<Trajectory>,
    pub pass_rate: f64,
    pub passed: usize,
    pub episode_errors: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("no scenarios to evaluate")]
    EmptyScenarios,
    #[error("invalid action knowledge: {0}")]
    InvalidKnowledge(String),
    #[error(transparent)]
    Environment(#[from] EnvError),
}

/// Runs one episode per scenario, in order. Backend failures score the
/// scenario 0 and are recorded on its trajectory; environment failures abort.
pub fn evaluate(
    ak: &ActionKnowledge,
    scenarios: &[Scenario],
    env: &dyn Environment,
    llm: &dyn ChatBackend,
    settings: &AgentSettings,
) -> Result<Evaluation, EvalError> {
    if scenarios.is_empty() {
        return Err(EvalError::EmptyScenarios);
    }
    let report = validate_action_knowledge(ak, env.toolkit());
    if !report.is_ok() {
        return Err(EvalError::InvalidKnowledge(report.messages().join("; ")));
    }
    let mut trajectories = Vec::with_capacity(scenarios.len());
    let mut passed = 0;
    let mut episode_errors = 0;
    for scenario in scenarios {
        let trajectory = match run_episode(ak, scenario, env, llm, settings) {
            Ok(mut t) => {
                t.score = score_trajectory(scenario, &t, env);
                t
            }
            Err(EpisodeError::Environment(e)) => return Err(EvalError::Environment(e)),
            Err(e) => {
                episode_errors += 1;
                Trajectory::failed(&scenario.scenario_id, e.to_string())
            }
        };
        if trajectory.score == 1.0 {
            passed += 1;
        }
        trajectories.push(trajectory);
    }
    Ok(Evaluation {
        pass_rate: passed as f64 / scenarios.len() as f64,
        trajectories,
        passed,
        episode_errors,
    })
}
