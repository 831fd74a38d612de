#![allow(dead_code)]

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use synworld_core::environment::{evaluate, AgentSettings, SimEnv};
use synworld_core::fixture;
use synworld_core::llm::ScriptedBackend;
use synworld_core::mcts::{backpropagate, init_tree, run_search, select_node, ExpansionContext, MctsNode, Search, SearchConfig, SearchTree, SimulationContext};
use synworld_core::optimizer::{KnowledgeOptimizer, OptimizeMode};
use synworld_core::simulated::RuleFollowingAgent;
use synworld_core::types::{ActionKnowledge, Scenario};

/// Everything needed to run a search against the bundled fixture.
pub struct Bench {
    pub env: SimEnv,
    pub scenarios: Vec<Scenario>,
    pub settings: AgentSettings,
    pub llm: ScriptedBackend,
}

impl Bench {
    pub fn new() -> Self {
        Self {
            env: fixture::sim_env(),
            scenarios: fixture::scenarios(),
            settings: AgentSettings::default(),
            llm: fixture::optimizer_backend(),
        }
    }

    pub fn with_scenarios(scenarios: Vec<Scenario>) -> Self {
        Self { scenarios, ..Self::new() }
    }

    pub fn sim(&self) -> SimulationContext<'_> {
        SimulationContext {
            env: &self.env,
            agent: &RuleFollowingAgent,
            agent_settings: &self.settings,
            scenarios: &self.scenarios,
        }
    }

    pub fn run(&self, mode: OptimizeMode, config: SearchConfig) -> (Search, ActionKnowledge) {
        let optimizer = KnowledgeOptimizer::new(mode);
        let expansion = ExpansionContext { optimizer: &optimizer, llm: &self.llm };
        run_search(fixture::initial_knowledge(), config, &expansion, &self.sim(), &mut ()).expect("search runs")
    }

    /// Pass rate of `knowledge` on the bundled fixture scenarios.
    pub fn fixture_pass_rate(&self, knowledge: &ActionKnowledge) -> f64 {
        evaluate(knowledge, &fixture::scenarios(), &self.env, &RuleFollowingAgent, &self.settings)
            .expect("evaluation runs")
            .pass_rate
    }
}

pub fn config(seed: u64) -> SearchConfig {
    SearchConfig { seed, ..SearchConfig::default() }
}

/// Selection by recursive re-walk: at each full node, score every child
/// directly from its statistics and follow the first maximum.
pub fn select_oracle(tree: &SearchTree, c: f64, width: usize) -> usize {
    fn walk(tree: &SearchTree, id: usize, c: f64, width: usize) -> usize {
        let node = &tree.nodes[id];
        if node.children.len() < width {
            return id;
        }
        let value = |n: &MctsNode| {
            if n.visits == 0 {
                f64::INFINITY
            } else {
                n.total_reward / n.visits as f64
                    + c * ((node.visits.max(1) as f64).ln() / n.visits as f64).sqrt()
            }
        };
        let mut children = node.children.clone();
        children.sort_unstable();
        let mut best = children[0];
        for &ch in &children[1..] {
            if value(&tree.nodes[ch]) > value(&tree.nodes[best]) {
                best = ch;
            }
        }
        walk(tree, best, c, width)
    }
    walk(tree, tree.root, c, width)
}

/// 3-token shingle Jaccard computed with hash sets.
pub fn jaccard_oracle(a: &Scenario, b: &Scenario) -> f64 {
    fn shingles(s: &Scenario) -> HashSet<String> {
        let text = format!("{} {}", s.background, s.goal).to_lowercase();
        let tokens: Vec<String> = text
            .split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .map(str::to_string)
            .collect();
        if tokens.is_empty() {
            return HashSet::new();
        }
        let w = tokens.len().min(3);
        (0..=tokens.len() - w).map(|i| tokens[i..i + w].join(" ")).collect()
    }
    let (sa, sb) = (shingles(a), shingles(b));
    if sa.is_empty() && sb.is_empty() {
        return 1.0;
    }
    if sa.is_empty() || sb.is_empty() {
        return 0.0;
    }
    let inter = sa.intersection(&sb).count() as f64;
    inter / sa.union(&sb).count() as f64
}

/// Brute-force greedy filter: rescans every accepted scenario per candidate.
pub fn dedup_oracle(candidates: &[Scenario], threshold: f64) -> Vec<usize> {
    let mut kept: Vec<usize> = Vec::new();
    for (i, c) in candidates.iter().enumerate() {
        if kept.iter().all(|&k| jaccard_oracle(c, &candidates[k]) <= threshold) {
            kept.push(i);
        }
    }
    kept
}

/// Sum of the rewards recorded for `id` and its descendants.
pub fn subtree_reward(tree: &SearchTree, rewards: &[f64], id: usize) -> f64 {
    let mut total = rewards[id];
    for &c in &tree.nodes[id].children {
        total += subtree_reward(tree, rewards, c);
    }
    total
}

pub fn scenario(id: &str, background: &str, goal: &str) -> Scenario {
    Scenario {
        scenario_id: id.into(),
        background: background.into(),
        goal: goal.into(),
        gold_tools: ["t".to_string()].into_iter().collect(),
        origin_subset: ["t".to_string()].into_iter().collect(),
    }
}

/// Grows a tree the way the search does: select, attach, backpropagate.
pub fn grow_tree(seed: u64, nodes: usize, width: usize) -> (SearchTree, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let knowledge = ActionKnowledge { descriptions: Default::default(), workflow: String::new(), version: 0 };
    let mut tree = init_tree(knowledge.clone(), 0.5).unwrap();
    let mut rewards = vec![0.0];
    while tree.len() < nodes {
        let parent = select_node(&tree, std::f64::consts::SQRT_2, width);
        assert_eq!(parent, select_oracle(&tree, std::f64::consts::SQRT_2, width));
        let id = tree.len();
        let reward: f64 = rng.gen_range(-1.0..1.0);
        tree.nodes.push(MctsNode {
            node_id: id,
            parent: Some(parent),
            children: Vec::new(),
            visits: 0,
            total_reward: 0.0,
            score: Some(rng.gen_range(0.0..1.0)),
            knowledge: knowledge.clone(),
            modification: String::new(),
            trajectories: Vec::new(),
        });
        tree.nodes[parent].children.push(id);
        backpropagate(&mut tree, id, reward);
        rewards.push(reward);
    }
    (tree, rewards)
}
