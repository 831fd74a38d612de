//! Shared domain types: tools, toolkits, action knowledge, scenarios and
//! agent trajectories.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

/// Hard cap on workflow length, in whitespace-delimited words.
pub const WORKFLOW_WORD_CAP: usize = 250;

/// Soft workflow length requested from the model in prompts.
pub const WORKFLOW_WORD_TARGET: usize = 200;

/// Tool id used by an agent step that terminates the episode.
pub const FINISH: &str = "FINISH";

/// Number of whitespace-delimited tokens in `text`.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamType {
    String,
    Number,
    Boolean,
    Enum,
}

impl fmt::Display for ParamType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ParamType::String => "string",
            ParamType::Number => "number",
            ParamType::Boolean => "boolean",
            ParamType::Enum => "enum",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    #[serde(rename = "type")]
    pub kind: ParamType,
    #[serde(default)]
    pub required: bool,
    #[serde(default)]
    pub description: String,
}

/// A callable tool as presented to the agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolSpec {
    pub tool_id: String,
    pub name: String,
    pub description: String,
    #[serde(default)]
    pub parameters: Vec<ParamSpec>,
    #[serde(default)]
    pub response_description: String,
}

impl ToolSpec {
    pub fn param(&self, name: &str) -> Option<&ParamSpec> {
        self.parameters.iter().find(|p| p.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ToolkitError {
    #[error("toolkit has no tools")]
    Empty,
    #[error("duplicate tool id {0:?}")]
    DuplicateTool(String),
    #[error("tool {0:?} has an empty name or description")]
    MissingText(String),
    #[error("tool {tool:?} declares parameter {param:?} twice")]
    DuplicateParam { tool: String, param: String },
}

/// Ordered, validated collection of tools.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Toolkit {
    tools: Vec<ToolSpec>,
}

impl Toolkit {
    pub fn new(tools: Vec<ToolSpec>) -> Result<Self, ToolkitError> {
        if tools.is_empty() {
            return Err(ToolkitError::Empty);
        }
        let mut seen = BTreeSet::new();
        for tool in &tools {
            if !seen.insert(tool.tool_id.as_str()) {
                return Err(ToolkitError::DuplicateTool(tool.tool_id.clone()));
            }
            if tool.tool_id.trim().is_empty()
                || tool.name.trim().is_empty()
                || tool.description.trim().is_empty()
            {
                return Err(ToolkitError::MissingText(tool.tool_id.clone()));
            }
            let mut params = BTreeSet::new();
            for p in &tool.parameters {
                if !params.insert(p.name.as_str()) {
                    return Err(ToolkitError::DuplicateParam {
                        tool: tool.tool_id.clone(),
                        param: p.name.clone(),
                    });
                }
            }
        }
        Ok(Self { tools })
    }

    pub fn tools(&self) -> &[ToolSpec] {
        &self.tools
    }

    pub fn get(&self, tool_id: &str) -> Option<&ToolSpec> {
        self.tools.iter().find(|t| t.tool_id == tool_id)
    }

    pub fn contains(&self, tool_id: &str) -> bool {
        self.get(tool_id).is_some()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.tools.iter().map(|t| t.tool_id.as_str())
    }

    pub fn len(&self) -> usize {
        self.tools.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tools.is_empty()
    }

    /// Position of a tool in toolkit order.
    pub fn position(&self, tool_id: &str) -> Option<usize> {
        self.tools.iter().position(|t| t.tool_id == tool_id)
    }
}

impl<'de> Deserialize<'de> for Toolkit {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            tools: Vec<ToolSpec>,
        }
        let raw = Raw::deserialize(deserializer)?;
        Toolkit::new(raw.tools).map_err(serde::de::Error::custom)
    }
}

/// The optimizable artifact: one description per tool plus a global workflow.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionKnowledge {
    pub descriptions: BTreeMap<String, String>,
    pub workflow: String,
    #[serde(default)]
    pub version: u64,
}

impl ActionKnowledge {
    /// Knowledge seeded from the toolkit's own descriptions.
    pub fn from_toolkit(toolkit: &Toolkit, workflow: impl Into<String>) -> Self {
        let descriptions = toolkit
            .tools()
            .iter()
            .map(|t| (t.tool_id.clone(), t.description.clone()))
            .collect();
        Self {
            descriptions,
            workflow: workflow.into(),
            version: 0,
        }
    }

    pub fn description(&self, tool_id: &str) -> Option<&str> {
        self.descriptions.get(tool_id).map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    MissingDescription(String),
    UnknownTool(String),
    EmptyDescription(String),
    WorkflowTooLong(usize),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MissingDescription(id) => write!(f, "missing description for {id}"),
            Violation::UnknownTool(id) => write!(f, "description for unknown tool {id}"),
            Violation::EmptyDescription(id) => write!(f, "empty description for {id}"),
            Violation::WorkflowTooLong(n) => {
                write!(f, "workflow exceeds {WORKFLOW_WORD_CAP} words ({n})")
            }
        }
    }
}

/// Outcome of [`validate_action_knowledge`]; empty means valid.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn messages(&self) -> Vec<String> {
        self.violations.iter().map(|v| v.to_string()).collect()
    }
}

pub fn validate_action_knowledge(ak: &ActionKnowledge, toolkit: &Toolkit) -> ValidationReport {
    let mut violations = Vec::new();
    for id in toolkit.ids() {
        match ak.descriptions.get(id) {
            None => violations.push(Violation::MissingDescription(id.to_string())),
            Some(d) if d.trim().is_empty() => {
                violations.push(Violation::EmptyDescription(id.to_string()))
            }
            Some(_) => {}
        }
    }
    for id in ak.descriptions.keys() {
        if !toolkit.contains(id) {
            violations.push(Violation::UnknownTool(id.clone()));
        }
    }
    let words = word_count(&ak.workflow);
    if words > WORKFLOW_WORD_CAP {
        violations.push(Violation::WorkflowTooLong(words));
    }
    ValidationReport { violations }
}

/// A synthesized task: background context, goal and the tools it was built from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub scenario_id: String,
    pub background: String,
    pub goal: String,
    pub gold_tools: BTreeSet<String>,
    #[serde(default)]
    pub origin_subset: BTreeSet<String>,
}

impl Scenario {
    pub fn check(&self, toolkit: &Toolkit) -> Result<(), String> {
        if self.gold_tools.is_empty() {
            return Err(format!("scenario {} has no gold tools", self.scenario_id));
        }
        if let Some(bad) = self.gold_tools.iter().find(|t| !toolkit.contains(t)) {
            return Err(format!(
                "scenario {} references unknown tool {bad}",
                self.scenario_id
            ));
        }
        if self.background.trim().is_empty() || self.goal.trim().is_empty() {
            return Err(format!(
                "scenario {} has empty background or goal",
                self.scenario_id
            ));
        }
        Ok(())
    }
}

/// Scalar argument value passed to a tool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ArgValue {
    Bool(bool),
    Number(f64),
    String(String),
}

impl ArgValue {
    /// Parses a bare `key=value` token: booleans, then numbers, else text.
    pub fn parse_loose(raw: &str) -> Self {
        let t = raw.trim();
        let unquoted = t
            .strip_prefix('"')
            .and_then(|s| s.strip_suffix('"'))
            .or_else(|| t.strip_prefix('\'').and_then(|s| s.strip_suffix('\'')));
        if let Some(s) = unquoted {
            return ArgValue::String(s.to_string());
        }
        match t.to_ascii_lowercase().as_str() {
            "true" => return ArgValue::Bool(true),
            "false" => return ArgValue::Bool(false),
            _ => {}
        }
        match t.parse::<f64>() {
            Ok(n) if n.is_finite() => ArgValue::Number(n),
            _ => ArgValue::String(t.to_string()),
        }
    }
}

impl fmt::Display for ArgValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArgValue::Bool(b) => write!(f, "{b}"),
            ArgValue::Number(n) => write!(f, "{n}"),
            ArgValue::String(s) => f.write_str(s),
        }
    }
}

pub type Arguments = BTreeMap<String, ArgValue>;

/// Canonical `k=v&k=v` form with keys in sorted order.
pub fn canonical_args(args: &Arguments) -> String {
    let mut out = String::new();
    for (i, (k, v)) in args.iter().enumerate() {
        if i > 0 {
            out.push('&');
        }
        out.push_str(k);
        out.push('=');
        out.push_str(&v.to_string());
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStep {
    pub thought: String,
    pub tool_id: String,
    #[serde(default)]
    pub arguments: Arguments,
    pub observation: String,
    pub ok: bool,
}

impl TrajectoryStep {
    pub fn is_finish(&self) -> bool {
        self.tool_id == FINISH
    }
}

/// One agent episode on one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub scenario_id: String,
    pub steps: Vec<TrajectoryStep>,
    pub final_answer: String,
    pub score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Trajectory {
    pub fn failed(scenario_id: &str, error: String) -> Self {
        Self {
            scenario_id: scenario_id.to_string(),
            steps: Vec::new(),
            final_answer: String::new(),
            score: 0.0,
            error: Some(error),
        }
    }

    pub fn finished(&self) -> bool {
        self.steps.last().is_some_and(TrajectoryStep::is_finish)
    }

    /// Distinct tools invoked (excluding FINISH), in first-use order.
    pub fn invoked_tools(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for s in &self.steps {
            if !s.is_finish() && !out.contains(&s.tool_id.as_str()) {
                out.push(&s.tool_id);
            }
        }
        out
    }
}

/// One edge of an experience path: scores around a modification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationExperience {
    pub score_before: f64,
    pub score_after: f64,
    pub modification: String,
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn tool(id: &str) -> ToolSpec {
        ToolSpec {
            tool_id: id.into(),
            name: id.into(),
            description: format!("{id} does things"),
            parameters: vec![],
            response_description: String::new(),
        }
    }

    fn five() -> Toolkit {
        Toolkit::new(["a", "b", "c", "d", "e"].iter().map(|i| tool(i)).collect()).unwrap()
    }

    fn words(n: usize) -> String {
        vec!["step"; n].join(" ")
    }

    #[test]
    fn valid_knowledge_passes() {
        let tk = five();
        let ak = ActionKnowledge::from_toolkit(&tk, words(120));
        assert!(validate_action_knowledge(&ak, &tk).is_ok());
    }

    #[test]
    fn missing_key_is_reported() {
        let tk = five();
        let mut ak = ActionKnowledge::from_toolkit(&tk, "w");
        ak.descriptions.remove("c");
        let r = validate_action_knowledge(&ak, &tk);
        assert_eq!(r.messages(), vec!["missing description for c".to_string()]);
    }

    #[test]
    fn extra_key_is_reported() {
        let tk = five();
        let mut ak = ActionKnowledge::from_toolkit(&tk, "w");
        ak.descriptions.insert("zz".into(), "x".into());
        let r = validate_action_knowledge(&ak, &tk);
        assert_eq!(r.violations, vec![Violation::UnknownTool("zz".into())]);
    }

    #[test]
    fn workflow_cap_boundary() {
        let tk = five();
        // the oracle here is the plain whitespace split, independent of word_count
        let text = words(251);
        assert_eq!(text.split(' ').filter(|s| !s.is_empty()).count(), 251);
        let ak = ActionKnowledge::from_toolkit(&tk, text);
        let r = validate_action_knowledge(&ak, &tk);
        assert_eq!(r.violations, vec![Violation::WorkflowTooLong(251)]);
        assert!(r.messages()[0].starts_with("workflow exceeds 250 words"));

        let ak = ActionKnowledge::from_toolkit(&tk, words(250));
        assert!(validate_action_knowledge(&ak, &tk).is_ok());
    }

    #[test]
    fn toolkit_rejects_duplicates() {
        assert_eq!(Toolkit::new(vec![]), Err(ToolkitError::Empty));
        assert_eq!(
            Toolkit::new(vec![tool("a"), tool("a")]),
            Err(ToolkitError::DuplicateTool("a".into()))
        );
        let mut t = tool("a");
        t.parameters = vec![
            ParamSpec {
                name: "x".into(),
                kind: ParamType::String,
                required: true,
                description: String::new(),
            };
            2
        ];
        assert!(matches!(
            Toolkit::new(vec![t]),
            Err(ToolkitError::DuplicateParam { .. })
        ));
    }

    #[test]
    fn toolkit_json_validates_on_load() {
        let ok = r#"{"tools":[{"tool_id":"a","name":"A","description":"d",
            "parameters":[{"name":"q","type":"string","required":true,"description":""}]}]}"#;
        let tk: Toolkit = serde_json::from_str(ok).unwrap();
        assert_eq!(tk.get("a").unwrap().parameters[0].kind, ParamType::String);
        let dup = r#"{"tools":[{"tool_id":"a","name":"A","description":"d"},
            {"tool_id":"a","name":"A","description":"d"}]}"#;
        assert!(serde_json::from_str::<Toolkit>(dup).is_err());
    }

    #[test]
    fn loose_arg_parsing() {
        assert_eq!(ArgValue::parse_loose("3.5"), ArgValue::Number(3.5));
        assert_eq!(ArgValue::parse_loose("TRUE"), ArgValue::Bool(true));
        assert_eq!(ArgValue::parse_loose("\"12\""), ArgValue::String("12".into()));
        assert_eq!(ArgValue::parse_loose(" Paris "), ArgValue::String("Paris".into()));
        assert_eq!(ArgValue::parse_loose("inf"), ArgValue::String("inf".into()));
    }

    #[test]
    fn canonical_args_sorted() {
        let mut a = Arguments::new();
        a.insert("z".into(), ArgValue::Number(1.0));
        a.insert("a".into(), ArgValue::String("x".into()));
        assert_eq!(canonical_args(&a), "a=x&z=1");
    }
}
