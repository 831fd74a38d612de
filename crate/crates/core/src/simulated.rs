//! Deterministic stand-ins for the model side of the pipeline, used for
//! offline runs and tests.
//!
//! [`RuleFollowingAgent`] reads the rendered agent prompt and acts only on
//! what the action knowledge tells it, so better descriptions and workflows
//! measurably change its pass rate:
//! - a tool is relevant when the first word of its name occurs in the goal;
//! - it passes every schema-required parameter, plus any parameter the
//!   tool description names in backticks;
//! - it calls every relevant tool only when the workflow says to use
//!   "every relevant tool", otherwise just the first one;
//! - failed calls are not retried.
//!
//! [`TemplateScenarioWriter`] answers subset-selection and scenario prompts
//! with template text chosen by hashing the prompt.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::format;
use core::hash::Hasher;

use fnv::FnvHasher;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::llm::{ChatBackend, ChatRequest, LlmError, Role};

fn last_user_message(request: &ChatRequest) -> Result<&str, LlmError> {
    request
        .messages
        .iter()
        .rev()
        .find(|m| m.role == Role::User)
        .map(|m| m.content.as_str())
        .ok_or_else(|| LlmError::InvalidRequest("no user message".into()))
}

fn words_lower(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(|w| w.to_lowercase())
        .collect()
}

#[derive(Debug, Default)]
struct ToolView {
    id: String,
    name: String,
    description: String,
    /// (name, type tag, required, parameter description)
    params: Vec<(String, String, bool, String)>,
}

#[derive(Debug, Default)]
struct AgentView {
    tools: Vec<ToolView>,
    workflow: String,
    goal: String,
    called: Vec<String>,
}

fn parse_params(spec: &str) -> Vec<(String, String, bool, String)> {
    if spec.trim() == "(none)" {
        return Vec::new();
    }
    spec.split("; ")
        .filter_map(|p| {
            let (name, rest) = p.split_once(" (")?;
            let (meta, desc) = rest.split_once("): ").unwrap_or((rest.trim_end_matches(')'), ""));
            let (kind, req) = meta.split_once(", ")?;
            Some((name.trim().into(), kind.into(), req == "required", desc.into()))
        })
        .collect()
}

fn parse_agent_prompt(prompt: &str) -> AgentView {
    #[derive(PartialEq)]
    enum Section {
        None,
        Tools,
        Workflow,
        Task,
        Transcript,
    }
    let mut view = AgentView::default();
    let mut section = Section::None;
    for line in prompt.lines() {
        match line {
            "## Tools" => section = Section::Tools,
            "## Workflow" => section = Section::Workflow,
            "## Task" => section = Section::Task,
            "## Transcript" => section = Section::Transcript,
            _ => match section {
                Section::Tools => {
                    if let Some(id) = line.strip_prefix("- tool_id: ") {
                        view.tools.push(ToolView { id: id.trim().into(), ..Default::default() });
                    } else if let Some(tool) = view.tools.last_mut() {
                        if let Some(v) = line.strip_prefix("  name: ") {
                            tool.name = v.trim().into();
                        } else if let Some(v) = line.strip_prefix("  description: ") {
                            tool.description = v.trim().into();
                        } else if let Some(v) = line.strip_prefix("  parameters: ") {
                            tool.params = parse_params(v);
                        }
                    }
                }
                Section::Workflow => {
                    view.workflow.push_str(line);
                    view.workflow.push('\n');
                }
                Section::Task => {
                    if let Some(g) = line.strip_prefix("Goal: ") {
                        view.goal = g.trim().into();
                    }
                }
                Section::Transcript => {
                    if let Some(a) = line.strip_prefix("Action: ") {
                        view.called.push(a.trim().into());
                    }
                }
                Section::None => {}
            },
        }
    }
    view
}

/// Capitalized words of the goal after its first word, and its numbers.
fn goal_values(goal: &str) -> (Vec<String>, Vec<String>) {
    let mut names = Vec::new();
    let mut numbers = Vec::new();
    for (i, raw) in goal.split_whitespace().enumerate() {
        let w = raw.trim_matches(|c: char| !c.is_alphanumeric() && c != '.');
        let w = w.trim_end_matches('.');
        if w.is_empty() {
            continue;
        }
        if w.parse::<f64>().is_ok() {
            numbers.push(w.to_string());
        } else if i > 0 && w.chars().next().is_some_and(char::is_uppercase) {
            names.push(w.to_string());
        }
    }
    (names, numbers)
}

/// Deterministic agent policy driven by the knowledge rendered in its prompt.
#[derive(Debug, Default, Clone, Copy)]
pub struct RuleFollowingAgent;

impl RuleFollowingAgent {
    fn act(&self, prompt: &str) -> String {
        let view = parse_agent_prompt(prompt);
        let goal_words = words_lower(&view.goal);
        let relevant: Vec<&ToolView> = view
            .tools
            .iter()
            .filter(|t| {
                words_lower(&t.name)
                    .first()
                    .is_some_and(|k| goal_words.contains(k))
            })
            .collect();
        let exhaustive = view.workflow.to_lowercase().contains("every relevant tool");
        let targets: &[&ToolView] = if exhaustive {
            &relevant
        } else {
            &relevant[..relevant.len().min(1)]
        };
        let next = targets.iter().find(|t| !view.called.contains(&t.id));
        let Some(tool) = next else {
            let answer = if view.called.is_empty() {
                "No tool was needed for this request.".to_string()
            } else {
                format!("Completed the request using {}.", view.called.join(", "))
            };
            return format!("Thought: I have what I need.\nAction: FINISH\nAnswer: {answer}");
        };
        let (names, numbers) = goal_values(&view.goal);
        let (mut next_name, mut next_number) = (0usize, 0usize);
        let mut args = Vec::new();
        for (name, kind, required, pdesc) in &tool.params {
            let documented = tool.description.contains(&format!("`{name}`"));
            if !(*required || documented) {
                continue;
            }
            let value = match kind.as_str() {
                "number" => {
                    let v = numbers.get(next_number).cloned().unwrap_or_else(|| "1".into());
                    next_number += 1;
                    v
                }
                "boolean" => "true".into(),
                "enum" => pdesc
                    .strip_prefix("one of ")
                    .and_then(|v| v.split('|').next())
                    .unwrap_or("default")
                    .trim()
                    .to_string(),
                _ => {
                    let v = if names.is_empty() {
                        "unspecified".to_string()
                    } else {
                        names[next_name % names.len()].clone()
                    };
                    next_name += 1;
                    v
                }
            };
            args.push(format!("{name}={value}"));
        }
        format!(
            "Thought: The goal needs {}.\nAction: {}\nArgs: {}",
            tool.name,
            tool.id,
            args.join(", ")
        )
    }
}

impl ChatBackend for RuleFollowingAgent {
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        request.validate()?;
        Ok(self.act(last_user_message(request)?))
    }
}

fn prompt_rng(prompt: &str, salt: u64) -> ChaCha8Rng {
    let mut h = FnvHasher::default();
    h.write(prompt.as_bytes());
    h.write_u64(salt);
    ChaCha8Rng::seed_from_u64(h.finish())
}

/// `- id (Name): description` lines of a synthesis prompt.
fn listed_tools(prompt: &str) -> Vec<(String, String)> {
    prompt
        .lines()
        .filter_map(|l| {
            let rest = l.strip_prefix("- ")?;
            let (id, rest) = rest.split_once(" (")?;
            let (name, _) = rest.split_once("): ")?;
            Some((id.to_string(), name.to_string()))
        })
        .collect()
}

const PERSONAS: [&str; 10] = [
    "A graduate student",
    "A retired teacher",
    "A startup founder",
    "A travel blogger",
    "A nurse between night shifts",
    "A family of four",
    "A software consultant",
    "A wedding planner",
    "A marathon runner",
    "A museum curator",
];
const SITUATIONS: [&str; 6] = [
    "is planning a long weekend in",
    "has a work trip coming up to",
    "is organizing a reunion in",
    "is moving for a semester to",
    "is preparing a surprise visit to",
    "is writing a neighbourhood guide about",
];
const CITIES: [&str; 16] = [
    "Paris", "Rome", "Oslo", "Lisbon", "Prague", "Kyoto", "Vienna", "Denver", "Toronto", "Madrid",
    "Boston", "Seoul", "Dublin", "Cairo", "Lima", "Hanoi",
];
const DAYS: [&str; 5] = ["Monday", "Wednesday", "Friday", "Saturday", "Sunday"];
const CODES: [&str; 5] = ["EUR", "JPY", "GBP", "CAD", "KRW"];

/// Template-based scenario generator answering the synthesis prompts.
#[derive(Debug, Default, Clone, Copy)]
pub struct TemplateScenarioWriter;

impl TemplateScenarioWriter {
    fn clause(keyword: &str, name: &str, city: &str, rng: &mut ChaCha8Rng) -> String {
        match keyword {
            "weather" => format!("check the weather in {city} for {}", DAYS.choose(rng).unwrap()),
            "currency" => format!(
                "convert {} USD to {} with the currency converter",
                rng.gen_range(2..60) * 10,
                CODES.choose(rng).unwrap()
            ),
            "flight" => {
                let from = CITIES.iter().filter(|c| **c != city).collect::<Vec<_>>();
                format!("find a flight from {} to {city}", from.choose(rng).unwrap())
            }
            "hotel" => format!("book a hotel in {city} for {} nights", rng.gen_range(1..8)),
            "wiki" => format!("look up the history of {city} on the wiki"),
            _ => format!("use the {} for the {city} plans", name.to_lowercase()),
        }
    }

    fn subset(&self, prompt: &str) -> String {
        let tools = listed_tools(prompt);
        let range = prompt
            .lines()
            .find_map(|l| {
                let rest = l.strip_prefix("Pick between ")?;
                let mut it = rest.split_whitespace();
                let lo = it.next()?.parse::<usize>().ok()?;
                let _and = it.next()?;
                let hi = it.next()?.parse::<usize>().ok()?;
                Some((lo, hi))
            })
            .unwrap_or((1, 1));
        let mut rng = prompt_rng(prompt, 0);
        let hi = range.1.min(tools.len()).max(1);
        let size = rng.gen_range(range.0.min(hi)..=hi);
        let mut picked: Vec<&(String, String)> = tools.choose_multiple(&mut rng, size).collect();
        picked.sort_by_key(|(id, _)| tools.iter().position(|(t, _)| t == id));
        let ids: Vec<&str> = picked.iter().map(|(id, _)| id.as_str()).collect();
        format!("tools: {}", ids.join(", "))
    }

    fn scenarios(&self, prompt: &str) -> String {
        let k = prompt
            .strip_prefix("Create ")
            .and_then(|r| r.split_whitespace().next())
            .and_then(|n| n.parse::<usize>().ok())
            .unwrap_or(2);
        let tools = listed_tools(prompt);
        let mut out = String::from("Here are the scenarios.\n");
        for block in 0..k {
            let mut rng = prompt_rng(prompt, block as u64 + 1);
            let city = *CITIES.choose(&mut rng).unwrap();
            let persona = *PERSONAS.choose(&mut rng).unwrap();
            let situation = *SITUATIONS.choose(&mut rng).unwrap();
            let clauses: Vec<String> = tools
                .iter()
                .map(|(_, name)| {
                    let keyword = words_lower(name).into_iter().next().unwrap_or_default();
                    Self::clause(&keyword, name, city, &mut rng)
                })
                .collect();
            let goal = match clauses.as_slice() {
                [] => "Plan the trip.".to_string(),
                [one] => format!("Please {one}."),
                [init @ .., last] => format!("Please {} and {last}.", init.join(", ")),
            };
            out.push_str(&format!("BACKGROUND: {persona} {situation} {city}.\nGOAL: {goal}\n\n"));
        }
        out
    }
}

impl ChatBackend for TemplateScenarioWriter {
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        request.validate()?;
        let prompt = last_user_message(request)?;
        if prompt.contains("subset request #") {
            Ok(self.subset(prompt))
        } else if prompt.starts_with("Create ") {
            Ok(self.scenarios(prompt))
        } else {
            Err(LlmError::Configuration("template writer got an unknown prompt".into()))
        }
    }
}

/// Shorthand for both simulated roles when a single backend is required.
#[derive(Debug, Default, Clone, Copy)]
pub struct SimulatedBackend;

impl ChatBackend for SimulatedBackend {
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        let prompt = last_user_message(request)?;
        if prompt.starts_with("## Tools") {
            RuleFollowingAgent.complete(request)
        } else {
            TemplateScenarioWriter.complete(request)
        }
    }
}
