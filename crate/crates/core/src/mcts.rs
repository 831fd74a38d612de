//! Monte Carlo tree search over action-knowledge versions.
//!
//! Each iteration selects a node by UCT, expands it with one optimizer
//! rewrite, scores the new knowledge in the environment and backpropagates
//! the score delta against the parent. Node statistics accumulate delta
//! rewards; the returned best knowledge is ranked by absolute score.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::environment::{evaluate, AgentSettings, Environment, EvalError};
use crate::llm::ChatBackend;
use crate::optimizer::{collect_experience_path, KnowledgeOptimizer, OptimizeError, OptimizeMode};
use crate::types::{validate_action_knowledge, ActionKnowledge, Scenario, Trajectory};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub width: usize,
    pub max_iterations: usize,
    pub exploration_c: f64,
    /// Scenarios sampled per simulation; ignored when `full_evaluation` is set.
    pub eval_sample_size: usize,
    pub full_evaluation: bool,
    pub trajectory_cap: usize,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            width: 3,
            max_iterations: 15,
            exploration_c: core::f64::consts::SQRT_2,
            eval_sample_size: 20,
            full_evaluation: false,
            trajectory_cap: 5,
            seed: 0,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        if self.width == 0 {
            return Err(SearchError::InvalidArgument("width must be >= 1".into()));
        }
        if self.max_iterations == 0 {
            return Err(SearchError::InvalidArgument("max_iterations must be >= 1".into()));
        }
        if self.eval_sample_size == 0 {
            return Err(SearchError::InvalidArgument("eval_sample_size must be >= 1".into()));
        }
        if self.trajectory_cap == 0 {
            return Err(SearchError::InvalidArgument("trajectory_cap must be >= 1".into()));
        }
        if !(self.exploration_c >= 0.0 && self.exploration_c.is_finite()) {
            return Err(SearchError::InvalidArgument("exploration_c must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MctsNode {
    pub node_id: usize,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub visits: u64,
    /// Sum of backpropagated delta rewards.
    pub total_reward: f64,
    /// Absolute evaluation score; `None` until simulated.
    pub score: Option<f64>,
    pub knowledge: ActionKnowledge,
    pub modification: String,
    pub trajectories: Vec<Trajectory>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchTree {
    pub nodes: Vec<MctsNode>,
    pub root: usize,
    pub iteration: usize,
}

impl SearchTree {
    pub fn node(&self, id: usize) -> Option<&MctsNode> {
        self.nodes.get(id)
    }

    pub fn root_node(&self) -> &MctsNode {
        &self.nodes[self.root]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn depth(&self, id: usize) -> usize {
        let mut d = 0;
        let mut cur = self.nodes[id].parent;
        while let Some(p) = cur {
            d += 1;
            cur = self.nodes[p].parent;
        }
        d
    }

    /// Node ids from the root down to `id`.
    pub fn path_to(&self, id: usize) -> Vec<usize> {
        let mut path = alloc::vec![id];
        let mut cur = self.nodes[id].parent;
        while let Some(p) = cur {
            path.push(p);
            cur = self.nodes[p].parent;
        }
        path.reverse();
        path
    }

    /// Highest absolute score, ties to the lowest node id.
    pub fn best_node(&self) -> usize {
        let mut best = self.root;
        let mut best_score = f64::NEG_INFINITY;
        for n in &self.nodes {
            if let Some(s) = n.score {
                if s > best_score {
                    best = n.node_id;
                    best_score = s;
                }
            }
        }
        best
    }

    /// Structural checks: dense ids, a single root, consistent links.
    pub fn check(&self) -> Result<(), String> {
        if self.nodes.is_empty() {
            return Err("tree has no nodes".into());
        }
        if self.root >= self.nodes.len() {
            return Err(format!("root {} out of range", self.root));
        }
        for (i, n) in self.nodes.iter().enumerate() {
            if n.node_id != i {
                return Err(format!("node at position {i} has id {}", n.node_id));
            }
            match n.parent {
                None if i != self.root => return Err(format!("node {i} has no parent")),
                Some(_) if i == self.root => return Err("root has a parent".into()),
                Some(p) => {
                    let parent = self
                        .nodes
                        .get(p)
                        .ok_or_else(|| format!("node {i} has missing parent {p}"))?;
                    if !parent.children.contains(&i) {
                        return Err(format!("node {p} does not list child {i}"));
                    }
                }
                None => {}
            }
            for &c in &n.children {
                if self.nodes.get(c).and_then(|c| c.parent) != Some(i) {
                    return Err(format!("child {c} of node {i} does not point back"));
                }
            }
            if let Some(s) = n.score {
                if !(0.0..=1.0).contains(&s) {
                    return Err(format!("node {i} score {s} outside [0, 1]"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SearchError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("expansion failed: {0}")]
    Expansion(#[from] OptimizeError),
    #[error("simulation failed: {0}")]
    Simulation(#[from] EvalError),
}

pub fn init_tree(initial: ActionKnowledge, baseline_score: f64) -> Result<SearchTree, SearchError> {
    if !(0.0..=1.0).contains(&baseline_score) {
        return Err(SearchError::InvalidArgument(format!(
            "baseline score {baseline_score} outside [0, 1]"
        )));
    }
    Ok(SearchTree {
        nodes: alloc::vec![MctsNode {
            node_id: 0,
            parent: None,
            children: Vec::new(),
            visits: 1,
            total_reward: 0.0,
            score: Some(baseline_score),
            knowledge: initial,
            modification: String::new(),
            trajectories: Vec::new(),
        }],
        root: 0,
        iteration: 0,
    })
}

/// UCT value; unvisited children get `f64::INFINITY`.
pub fn ucb_value(child: &MctsNode, parent_visits: u64, c: f64) -> f64 {
    if child.visits == 0 {
        return f64::INFINITY;
    }
    let n = child.visits as f64;
    let exploit = child.total_reward / n;
    exploit + c * libm::sqrt(libm::log(parent_visits.max(1) as f64) / n)
}

/// Descends from the root through fully expanded nodes by maximal UCB
/// (ties to the lowest id) and returns the first node with spare width.
pub fn select_node(tree: &SearchTree, c: f64, width: usize) -> usize {
    let mut cur = tree.root;
    loop {
        let node = &tree.nodes[cur];
        if node.children.len() < width {
            return cur;
        }
        let mut best = node.children[0];
        let mut best_value = f64::NEG_INFINITY;
        for &child in &node.children {
            let v = ucb_value(&tree.nodes[child], node.visits, c);
            if v > best_value || (v == best_value && child < best) {
                best = child;
                best_value = v;
            }
        }
        cur = best;
    }
}

/// Adds one child holding the optimizer's rewrite of `node_id`'s knowledge.
/// The tree is untouched on error.
pub fn expand(
    tree: &mut SearchTree,
    node_id: usize,
    optimizer: &KnowledgeOptimizer,
    llm: &dyn ChatBackend,
    env: &dyn Environment,
    width: usize,
) -> Result<usize, SearchError> {
    let node = tree
        .node(node_id)
        .ok_or_else(|| SearchError::InvalidArgument(format!("no node {node_id}")))?;
    if node.children.len() >= width {
        return Err(SearchError::Precondition(format!(
            "node {node_id} already has {} children (width {width})",
            node.children.len()
        )));
    }
    let experiences = collect_experience_path(tree, node_id);
    let siblings: Vec<String> = node
        .children
        .iter()
        .map(|&c| tree.nodes[c].modification.clone())
        .collect();
    let refinement = optimizer.optimize(
        &node.knowledge,
        &experiences,
        &node.trajectories,
        &siblings,
        env.toolkit(),
        llm,
    )?;
    let id = tree.nodes.len();
    tree.nodes.push(MctsNode {
        node_id: id,
        parent: Some(node_id),
        children: Vec::new(),
        visits: 0,
        total_reward: 0.0,
        score: None,
        knowledge: refinement.knowledge,
        modification: refinement.modification,
        trajectories: Vec::new(),
    });
    tree.nodes[node_id].children.push(id);
    Ok(id)
}

/// Scenario indices for one evaluation, in scenario order.
pub fn sample_scenarios(rng: &mut ChaCha8Rng, total: usize, config: &SearchConfig) -> Vec<usize> {
    if config.full_evaluation || config.eval_sample_size >= total {
        return (0..total).collect();
    }
    let mut picked = index::sample(rng, total, config.eval_sample_size).into_vec();
    picked.sort_unstable();
    picked
}

/// Failing trajectories first, then passing ones, each in scenario order.
pub fn retain_trajectories(trajectories: Vec<Trajectory>, cap: usize) -> Vec<Trajectory> {
    let (mut fails, passes): (Vec<_>, Vec<_>) = trajectories.into_iter().partition(|t| t.score < 1.0);
    fails.extend(passes);
    fails.truncate(cap);
    fails
}

/// Everything a simulation needs besides the tree.
pub struct SimulationContext<'a> {
    pub env: &'a dyn Environment,
    pub agent: &'a dyn ChatBackend,
    pub agent_settings: &'a AgentSettings,
    pub scenarios: &'a [Scenario],
}

fn score_knowledge(
    knowledge: &ActionKnowledge,
    ctx: &SimulationContext<'_>,
    config: &SearchConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, Vec<Trajectory>), SearchError> {
    if ctx.scenarios.is_empty() {
        return Err(SearchError::InvalidArgument("no scenarios to simulate on".into()));
    }
    let sample: Vec<Scenario> = sample_scenarios(rng, ctx.scenarios.len(), config)
        .into_iter()
        .map(|i| ctx.scenarios[i].clone())
        .collect();
    let eval = evaluate(knowledge, &sample, ctx.env, ctx.agent, ctx.agent_settings)?;
    Ok((eval.pass_rate, retain_trajectories(eval.trajectories, config.trajectory_cap)))
}

/// Scores `node_id` on a fresh scenario sample and returns its delta reward
/// against the parent. Node statistics are untouched on error.
pub fn simulate(
    tree: &mut SearchTree,
    node_id: usize,
    ctx: &SimulationContext<'_>,
    config: &SearchConfig,
    rng: &mut ChaCha8Rng,
) -> Result<f64, SearchError> {
    let node = tree
        .node(node_id)
        .ok_or_else(|| SearchError::InvalidArgument(format!("no node {node_id}")))?;
    let parent_score = node
        .parent
        .and_then(|p| tree.nodes[p].score)
        .ok_or_else(|| SearchError::Precondition(format!("node {node_id} has no scored parent")))?;
    let (score, trajectories) = score_knowledge(&node.knowledge, ctx, config, rng)?;
    let node = &mut tree.nodes[node_id];
    node.score = Some(score);
    node.trajectories = trajectories;
    Ok(score - parent_score)
}

pub fn backpropagate(tree: &mut SearchTree, node_id: usize, reward: f64) {
    let mut cur = Some(node_id);
    while let Some(id) = cur {
        let node = &mut tree.nodes[id];
        node.visits += 1;
        node.total_reward += reward;
        cur = node.parent;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub selected: usize,
    pub node_id: usize,
    pub reward: f64,
    pub node_score: f64,
    pub parent_score: f64,
    pub best_score: f64,
    pub best_node: usize,
}

pub const CHECKPOINT_SCHEMA_VERSION: u32 = 1;

/// Complete resumable search state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub schema_version: u32,
    pub config: SearchConfig,
    pub mode: OptimizeMode,
    pub rng: ChaCha8Rng,
    pub tree: SearchTree,
    pub progress: Vec<IterationRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CheckpointError {
    #[error("malformed checkpoint: {0}")]
    Malformed(String),
    #[error("unsupported checkpoint schema_version {0}")]
    UnsupportedVersion(u64),
    #[error("inconsistent checkpoint: {0}")]
    Inconsistent(String),
}

impl Checkpoint {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("checkpoint serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, CheckpointError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CheckpointError::Malformed(e.to_string()))?;
        let version = value
            .get("schema_version")
            .ok_or_else(|| CheckpointError::Malformed("missing field `schema_version`".into()))?
            .as_u64()
            .ok_or_else(|| CheckpointError::Malformed("field `schema_version` is not an integer".into()))?;
        if version != u64::from(CHECKPOINT_SCHEMA_VERSION) {
            return Err(CheckpointError::UnsupportedVersion(version));
        }
        // typed parse from the text keeps float round-tripping exact
        let cp: Checkpoint =
            serde_json::from_str(text).map_err(|e| CheckpointError::Malformed(e.to_string()))?;
        cp.tree.check().map_err(CheckpointError::Inconsistent)?;
        if cp.progress.len() != cp.tree.iteration {
            return Err(CheckpointError::Inconsistent(format!(
                "field `progress` has {} records for iteration {}",
                cp.progress.len(),
                cp.tree.iteration
            )));
        }
        Ok(cp)
    }
}

/// Receives progress and failure notifications from [`Search::run`].
pub trait SearchObserver {
    fn on_iteration(&mut self, _record: &IterationRecord, _state: &Checkpoint) {}

    /// Called with the state as it was before the failing iteration.
    fn on_failure(&mut self, _state: &Checkpoint, _error: &SearchError) {}
}

impl SearchObserver for () {}

/// Optimizer-side inputs of a search.
pub struct ExpansionContext<'a> {
    pub optimizer: &'a KnowledgeOptimizer,
    pub llm: &'a dyn ChatBackend,
}

/// Resumable search driver. All randomness comes from the state's RNG.
#[derive(Debug, Clone, PartialEq)]
pub struct Search {
    pub state: Checkpoint,
}

impl Search {
    /// Scores the initial knowledge and builds a one-node tree.
    pub fn start(
        initial: ActionKnowledge,
        config: SearchConfig,
        mode: OptimizeMode,
        sim: &SimulationContext<'_>,
    ) -> Result<Self, SearchError> {
        config.validate()?;
        if sim.scenarios.is_empty() {
            return Err(SearchError::InvalidArgument("no scenarios to search on".into()));
        }
        let report = validate_action_knowledge(&initial, sim.env.toolkit());
        if !report.is_ok() {
            return Err(SearchError::InvalidArgument(report.messages().join("; ")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let (score, trajectories) = score_knowledge(&initial, sim, &config, &mut rng)?;
        let mut tree = init_tree(initial, score)?;
        tree.nodes[0].trajectories = trajectories;
        Ok(Self {
            state: Checkpoint {
                schema_version: CHECKPOINT_SCHEMA_VERSION,
                config,
                mode,
                rng,
                tree,
                progress: Vec::new(),
            },
        })
    }

    pub fn resume(checkpoint: Checkpoint) -> Result<Self, SearchError> {
        checkpoint.config.validate()?;
        checkpoint.tree.check().map_err(SearchError::InvalidArgument)?;
        Ok(Self { state: checkpoint })
    }

    pub fn tree(&self) -> &SearchTree {
        &self.state.tree
    }

    pub fn is_done(&self) -> bool {
        self.state.tree.iteration >= self.state.config.max_iterations
    }

    /// One select, expand, simulate, backpropagate round. On error the
    /// state is exactly what it was before the call.
    pub fn step(
        &mut self,
        expansion: &ExpansionContext<'_>,
        sim: &SimulationContext<'_>,
    ) -> Result<IterationRecord, SearchError> {
        if expansion.optimizer.mode != self.state.mode {
            return Err(SearchError::InvalidArgument(format!(
                "optimizer mode {:?} differs from search mode {:?}",
                expansion.optimizer.mode, self.state.mode
            )));
        }
        let config = self.state.config.clone();
        let selected = select_node(&self.state.tree, config.exploration_c, config.width);
        let new_node = expand(
            &mut self.state.tree,
            selected,
            expansion.optimizer,
            expansion.llm,
            sim.env,
            config.width,
        )?;
        let rng_before = self.state.rng.clone();
        let reward = match simulate(&mut self.state.tree, new_node, sim, &config, &mut self.state.rng) {
            Ok(r) => r,
            Err(e) => {
                let tree = &mut self.state.tree;
                tree.nodes.pop();
                tree.nodes[selected].children.pop();
                self.state.rng = rng_before;
                return Err(e);
            }
        };
        backpropagate(&mut self.state.tree, new_node, reward);
        let tree = &mut self.state.tree;
        tree.iteration += 1;
        let best = tree.best_node();
        let record = IterationRecord {
            iteration: tree.iteration,
            selected,
            node_id: new_node,
            reward,
            node_score: tree.nodes[new_node].score.unwrap_or_default(),
            parent_score: tree.nodes[selected].score.unwrap_or_default(),
            best_score: tree.nodes[best].score.unwrap_or_default(),
            best_node: best,
        };
        self.state.progress.push(record.clone());
        Ok(record)
    }

    /// Iterates until `max_iterations`, reporting each record to `observer`.
    pub fn run(
        &mut self,
        expansion: &ExpansionContext<'_>,
        sim: &SimulationContext<'_>,
        observer: &mut dyn SearchObserver,
    ) -> Result<(), SearchError> {
        while !self.is_done() {
            match self.step(expansion, sim) {
                Ok(record) => observer.on_iteration(&record, &self.state),
                Err(e) => {
                    observer.on_failure(&self.state, &e);
                    return Err(e);
                }
            }
        }
        Ok(())
    }

    pub fn best_knowledge(&self) -> &ActionKnowledge {
        &self.state.tree.nodes[self.state.tree.best_node()].knowledge
    }
}

/// Baseline evaluation followed by `max_iterations` search rounds.
pub fn run_search(
    initial: ActionKnowledge,
    config: SearchConfig,
    expansion: &ExpansionContext<'_>,
    sim: &SimulationContext<'_>,
    observer: &mut dyn SearchObserver,
) -> Result<(Search, ActionKnowledge), SearchError> {
    let mut search = Search::start(initial, config, expansion.optimizer.mode, sim)?;
    search.run(expansion, sim, observer)?;
    let best = search.best_knowledge().clone();
    Ok((search, best))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{ToolSpec, Toolkit};
    use alloc::vec;

    fn ak() -> ActionKnowledge {
        let tk = Toolkit::new(vec![ToolSpec {
            tool_id: "a".into(),
            name: "A".into(),
            description: "d".into(),
            parameters: vec![],
            response_description: String::new(),
        }])
        .unwrap();
        ActionKnowledge::from_toolkit(&tk, "w")
    }

    fn add_child(tree: &mut SearchTree, parent: usize, visits: u64, total: f64) -> usize {
        let id = tree.nodes.len();
        tree.nodes.push(MctsNode {
            node_id: id,
            parent: Some(parent),
            children: vec![],
            visits,
            total_reward: total,
            score: Some(0.5),
            knowledge: ak(),
            modification: "m".into(),
            trajectories: vec![],
        });
        tree.nodes[parent].children.push(id);
        id
    }

    #[test]
    fn init_tree_cases() {
        let t = init_tree(ak(), 0.40).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.root_node().score, Some(0.40));
        assert_eq!(t.root_node().visits, 1);
        assert!(init_tree(ak(), 0.0).is_ok());
        assert!(matches!(init_tree(ak(), 1.2), Err(SearchError::InvalidArgument(_))));
    }

    #[test]
    fn ucb_cases() {
        let mut t = init_tree(ak(), 0.4).unwrap();
        let c = add_child(&mut t, 0, 0, 0.0);
        assert_eq!(ucb_value(&t.nodes[c], 10, 1.0), f64::INFINITY);
        t.nodes[c].visits = 4;
        t.nodes[c].total_reward = 2.0;
        assert_eq!(ucb_value(&t.nodes[c], 10, 0.0), 0.5);
        let expected = 0.5 + core::f64::consts::SQRT_2 * libm::sqrt(core::f64::consts::LN_10 / 4.0);
        assert!((ucb_value(&t.nodes[c], 10, core::f64::consts::SQRT_2) - expected).abs() < 1e-12);
    }

    #[test]
    fn selection_cases() {
        let mut t = init_tree(ak(), 0.4).unwrap();
        assert_eq!(select_node(&t, 1.4, 3), 0);
        let a = add_child(&mut t, 0, 1, 0.1);
        let b = add_child(&mut t, 0, 1, 0.3);
        assert_eq!(select_node(&t, 1.4, 3), 0);
        let c = add_child(&mut t, 0, 1, 0.2);
        t.nodes[0].visits = 4;
        assert_eq!(select_node(&t, 1.4, 3), b);
        // equal statistics pick the lowest id
        t.nodes[b].total_reward = 0.1;
        t.nodes[c].total_reward = 0.1;
        assert_eq!(select_node(&t, 1.4, 3), a);
        // unvisited children are preferred
        t.nodes[c].visits = 0;
        assert_eq!(select_node(&t, 1.4, 3), c);
    }

    #[test]
    fn backprop_updates_path() {
        let mut t = init_tree(ak(), 0.4).unwrap();
        let a = add_child(&mut t, 0, 0, 0.0);
        let leaf = add_child(&mut t, a, 0, 0.0);
        let _other = add_child(&mut t, 0, 0, 0.0);
        backpropagate(&mut t, leaf, 0.15);
        let touched: Vec<usize> = t.nodes.iter().filter(|n| n.visits > 0 && n.total_reward != 0.0).map(|n| n.node_id).collect();
        assert_eq!(touched, vec![0, a, leaf]);
        assert_eq!(t.nodes[0].visits, 2);
        backpropagate(&mut t, leaf, 0.0);
        assert_eq!(t.nodes[leaf].visits, 2);
        assert_eq!(t.nodes[leaf].total_reward, 0.15);
    }

    #[test]
    fn tree_check_catches_bad_links() {
        let mut t = init_tree(ak(), 0.4).unwrap();
        let a = add_child(&mut t, 0, 0, 0.0);
        assert!(t.check().is_ok());
        t.nodes[0].children.clear();
        assert!(t.check().is_err());
        t.nodes[0].children.push(a);
        t.nodes[a].node_id = 7;
        assert!(t.check().is_err());
    }

    #[test]
    fn trajectory_retention_prefers_failures() {
        let t = |id: &str, score: f64| Trajectory {
            scenario_id: id.into(),
            steps: vec![],
            final_answer: String::new(),
            score,
            error: None,
        };
        let kept = retain_trajectories(vec![t("p1", 1.0), t("f1", 0.0), t("p2", 1.0), t("f2", 0.0)], 3);
        let ids: Vec<&str> = kept.iter().map(|t| t.scenario_id.as_str()).collect();
        assert_eq!(ids, ["f1", "f2", "p1"]);
    }

    #[test]
    fn sampling_is_sorted_and_seeded() {
        let cfg = SearchConfig { eval_sample_size: 5, ..Default::default() };
        let mut r1 = ChaCha8Rng::seed_from_u64(9);
        let mut r2 = ChaCha8Rng::seed_from_u64(9);
        let a = sample_scenarios(&mut r1, 40, &cfg);
        assert_eq!(a, sample_scenarios(&mut r2, 40, &cfg));
        assert_eq!(a.len(), 5);
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(sample_scenarios(&mut r1, 3, &cfg), vec![0, 1, 2]);
        let full = SearchConfig { full_evaluation: true, ..cfg };
        assert_eq!(sample_scenarios(&mut r1, 8, &full).len(), 8);
    }
}
