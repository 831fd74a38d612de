//! The bundled offline fixture: a five-tool simulated environment with two
//! planted description/environment mismatches, twelve scenarios, the
//! initial knowledge and scripted optimizer rules that repair the
//! mismatches over successive rewrites.

use alloc::vec::Vec;

use crate::environment::{SimEnv, SimEnvDefinition};
use crate::llm::{ScriptedBackend, ScriptedRules};
use crate::types::{ActionKnowledge, Scenario, Toolkit};

pub const TOOLKIT_JSON: &str = include_str!("../fixtures/toolkit.json");
pub const SIMENV_JSON: &str = include_str!("../fixtures/simenv.json");
pub const SCENARIOS_JSON: &str = include_str!("../fixtures/scenarios.json");
pub const INITIAL_KNOWLEDGE_JSON: &str = include_str!("../fixtures/initial_knowledge.json");
pub const OPTIMIZER_RULES_JSON: &str = include_str!("../fixtures/optimizer_rules.json");

pub fn toolkit() -> Toolkit {
    serde_json::from_str(TOOLKIT_JSON).expect("bundled toolkit parses")
}

pub fn sim_env_definition() -> SimEnvDefinition {
    serde_json::from_str(SIMENV_JSON).expect("bundled simenv parses")
}

pub fn sim_env() -> SimEnv {
    SimEnv::new(sim_env_definition()).expect("bundled simenv is valid")
}

pub fn scenarios() -> Vec<Scenario> {
    serde_json::from_str(SCENARIOS_JSON).expect("bundled scenarios parse")
}

pub fn initial_knowledge() -> ActionKnowledge {
    serde_json::from_str(INITIAL_KNOWLEDGE_JSON).expect("bundled knowledge parses")
}

pub fn optimizer_rules() -> ScriptedRules {
    serde_json::from_str(OPTIMIZER_RULES_JSON).expect("bundled rules parse")
}

pub fn optimizer_backend() -> ScriptedBackend {
    ScriptedBackend::from_rules(&optimizer_rules()).expect("bundled rules compile")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::Environment;
    use crate::types::validate_action_knowledge;

    #[test]
    fn fixture_is_consistent() {
        let env = sim_env();
        assert_eq!(env.toolkit(), &toolkit());
        assert_eq!(env.toolkit().len(), 5);
        let scenarios = scenarios();
        assert_eq!(scenarios.len(), 12);
        for s in &scenarios {
            s.check(env.toolkit()).unwrap();
            assert_eq!(s.gold_tools, s.origin_subset);
        }
        assert!(validate_action_knowledge(&initial_knowledge(), env.toolkit()).is_ok());
        optimizer_backend();
    }
}
