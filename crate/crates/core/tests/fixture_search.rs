mod common;

use common::{config, subtree_reward, Bench};
use synworld_core::fixture;
use synworld_core::llm::{ChatBackend, ChatRequest, LlmError};
use synworld_core::mcts::{Checkpoint, ExpansionContext, Search, SearchConfig, SearchError, SimulationContext};
use synworld_core::optimizer::{KnowledgeOptimizer, OptimizeMode};

#[test]
fn initial_knowledge_passes_a_quarter() {
    let bench = Bench::new();
    assert_eq!(bench.fixture_pass_rate(&fixture::initial_knowledge()), 0.25);
}

#[test]
fn full_search_reaches_perfect_score() {
    let bench = Bench::new();
    let (search, best) = bench.run(OptimizeMode::Both, config(7));
    assert_eq!(bench.fixture_pass_rate(&best), 1.0);
    assert_eq!(search.tree().len(), 16);
    let progress = &search.state.progress;
    assert_eq!(progress.len(), 15);
    for pair in progress.windows(2) {
        assert!(pair[1].best_score >= pair[0].best_score);
    }
}

#[test]
fn single_component_modes_plateau_below_both() {
    let bench = Bench::new();
    let (_, desc) = bench.run(OptimizeMode::DescriptionOnly, config(7));
    let (_, flow) = bench.run(OptimizeMode::WorkflowOnly, config(7));
    assert_eq!(bench.fixture_pass_rate(&desc), 5.0 / 12.0);
    assert_eq!(bench.fixture_pass_rate(&flow), 0.5);
}

#[test]
fn ablations_leave_the_other_component_untouched() {
    let bench = Bench::new();
    let initial = fixture::initial_knowledge();
    let (search, _) = bench.run(OptimizeMode::DescriptionOnly, config(3));
    for node in &search.tree().nodes {
        assert_eq!(node.knowledge.workflow.as_bytes(), initial.workflow.as_bytes());
    }
    let (search, _) = bench.run(OptimizeMode::WorkflowOnly, config(3));
    for node in &search.tree().nodes {
        assert_eq!(node.knowledge.descriptions, initial.descriptions);
    }
}

#[test]
fn rewards_are_score_deltas_and_visits_count_iterations() {
    let bench = Bench::new();
    let (search, _) = bench.run(OptimizeMode::Both, config(11));
    let tree = search.tree();
    let mut rewards = vec![0.0; tree.len()];
    for rec in &search.state.progress {
        let node = &tree.nodes[rec.node_id];
        let parent = &tree.nodes[node.parent.unwrap()];
        let expected = node.score.unwrap() - parent.score.unwrap();
        assert_eq!(rec.reward.to_bits(), expected.to_bits());
        rewards[rec.node_id] = rec.reward;
    }
    assert_eq!(tree.root_node().visits, 1 + search.state.progress.len() as u64);
    for node in &tree.nodes {
        assert!(node.children.len() <= 3);
        let replay = subtree_reward(tree, &rewards, node.node_id);
        assert!((node.total_reward - replay).abs() < 1e-12, "node {}", node.node_id);
    }
}

#[test]
fn one_iteration_adds_one_child() {
    let bench = Bench::new();
    let (search, _) = bench.run(OptimizeMode::Both, SearchConfig { max_iterations: 1, ..config(0) });
    let tree = search.tree();
    assert_eq!(tree.len(), 2);
    assert_eq!(tree.root_node().children, vec![1]);
    assert_eq!(tree.root_node().visits, 2);
}

#[test]
fn same_seed_gives_identical_checkpoints() {
    let bench = Bench::new();
    let a = bench.run(OptimizeMode::Both, config(5)).0.state.to_json();
    let b = Bench::new().run(OptimizeMode::Both, config(5)).0.state.to_json();
    assert_eq!(a, b);
}

#[test]
fn resume_matches_uninterrupted_run() {
    let bench = Bench::new();
    let optimizer = KnowledgeOptimizer::new(OptimizeMode::Both);
    let expansion = ExpansionContext { optimizer: &optimizer, llm: &bench.llm };
    let cfg = SearchConfig { eval_sample_size: 8, ..config(21) };
    let full = bench.run(OptimizeMode::Both, cfg.clone()).0;

    let mut partial = Search::start(fixture::initial_knowledge(), cfg, OptimizeMode::Both, &bench.sim()).unwrap();
    for _ in 0..6 {
        partial.step(&expansion, &bench.sim()).unwrap();
    }
    let saved = partial.state.to_json();
    let mut resumed = Search::resume(Checkpoint::from_json(&saved).unwrap()).unwrap();
    resumed.run(&expansion, &bench.sim(), &mut ()).unwrap();
    assert_eq!(resumed.state.to_json(), full.state.to_json());
}

struct FailingAgent;

impl ChatBackend for FailingAgent {
    fn complete(&self, _: &ChatRequest) -> Result<String, LlmError> {
        Err(LlmError::Transport { status: Some(500), body: "down".into() })
    }
}

#[test]
fn failed_expansion_leaves_state_unchanged() {
    let bench = Bench::new();
    let optimizer = KnowledgeOptimizer::new(OptimizeMode::Both);
    let mut search = Search::start(fixture::initial_knowledge(), config(2), OptimizeMode::Both, &bench.sim()).unwrap();
    let good = ExpansionContext { optimizer: &optimizer, llm: &bench.llm };
    search.step(&good, &bench.sim()).unwrap();
    let before = search.state.clone();
    let bad = ExpansionContext { optimizer: &optimizer, llm: &FailingAgent };
    let err = search.step(&bad, &bench.sim()).unwrap_err();
    assert!(matches!(err, SearchError::Expansion(_)));
    assert_eq!(search.state, before);
}

#[test]
fn broken_agent_scores_zero_but_search_continues() {
    let bench = Bench::new();
    let optimizer = KnowledgeOptimizer::new(OptimizeMode::Both);
    let expansion = ExpansionContext { optimizer: &optimizer, llm: &bench.llm };
    let mut search = Search::start(fixture::initial_knowledge(), config(2), OptimizeMode::Both, &bench.sim()).unwrap();
    let broken = SimulationContext { agent: &FailingAgent, ..bench.sim() };
    let rec = search.step(&expansion, &broken).unwrap();
    assert_eq!(rec.node_score, 0.0);
    assert_eq!(rec.reward, -0.25);
    let node = &search.tree().nodes[rec.node_id];
    assert!(node.trajectories.iter().all(|t| t.error.is_some()));
}
