//! Run configuration and the backends and environments it selects.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use synworld_core::environment::{AgentSettings, Environment, SimEnv, SimEnvDefinition};
use synworld_core::fixture;
use synworld_core::llm::{ChatBackend, ScriptedBackend, ScriptedRules};
use synworld_core::mcts::SearchConfig;
use synworld_core::optimizer::{KnowledgeOptimizer, OptimizeMode, PromptTemplates};
use synworld_core::simulated::SimulatedBackend;
use synworld_core::synthesis::SynthesisConfig;
use synworld_core::types::Toolkit;

use crate::error::CliError;
use crate::http::{HttpBackend, HttpSettings};
use crate::io;

/// Which chat backend serves a role.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BackendSettings {
    /// OpenAI-compatible HTTP endpoint.
    Http(HttpSettings),
    /// Rule table loaded from a JSON file.
    Scripted { rules: PathBuf },
    /// Built-in deterministic agent and scenario writer.
    #[default]
    Simulated,
}

impl BackendSettings {
    pub fn build(&self, base: &Path) -> Result<Box<dyn ChatBackend>, CliError> {
        Ok(match self {
            Self::Http(settings) => Box::new(HttpBackend::from_env(settings.clone())),
            Self::Scripted { rules } => {
                let rules: ScriptedRules = io::read_json(&base.join(rules))?;
                Box::new(ScriptedBackend::from_rules(&rules).map_err(|e| CliError::input(e.to_string()))?)
            }
            Self::Simulated => Box::new(SimulatedBackend),
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Backends {
    pub synthesis: BackendSettings,
    pub optimizer: BackendSettings,
    pub agent: BackendSettings,
}

/// Tool environment the agent acts in.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EnvironmentSettings {
    /// Simulated environment described by a definition file.
    Sim { definition: PathBuf },
    /// The bundled five-tool simulated environment.
    #[default]
    Fixture,
}

impl EnvironmentSettings {
    pub fn build(&self, base: &Path) -> Result<Box<dyn Environment>, CliError> {
        let def: SimEnvDefinition = match self {
            Self::Sim { definition } => io::read_json(&base.join(definition))?,
            Self::Fixture => fixture::sim_env_definition(),
        };
        Ok(Box::new(SimEnv::new(def).map_err(|e| CliError::input(e.to_string()))?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerSettings {
    pub temperature: f64,
    pub model: String,
    /// Replacement for the built-in tool-description prompt.
    pub tool_template: Option<PathBuf>,
    /// Replacement for the built-in workflow prompt.
    pub workflow_template: Option<PathBuf>,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        let d = KnowledgeOptimizer::default();
        Self { temperature: d.temperature, model: d.model, tool_template: None, workflow_template: None }
    }
}

/// Everything a command needs. Relative paths resolve against the
/// directory of the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub toolkit: PathBuf,
    /// Scenario store; defaults to `scenarios.json` in the output directory.
    pub scenarios: Option<PathBuf>,
    /// Starting knowledge; defaults to the toolkit's own descriptions and an empty workflow.
    pub initial_knowledge: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub synthesis: SynthesisConfig,
    pub search: SearchConfig,
    pub mode: OptimizeMode,
    pub agent: AgentSettings,
    pub optimizer: OptimizerSettings,
    pub environment: EnvironmentSettings,
    pub backends: Backends,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            toolkit: "toolkit.json".into(),
            scenarios: None,
            initial_knowledge: None,
            output_dir: "out".into(),
            synthesis: SynthesisConfig::default(),
            search: SearchConfig::default(),
            mode: OptimizeMode::Both,
            agent: AgentSettings::default(),
            optimizer: OptimizerSettings::default(),
            environment: EnvironmentSettings::default(),
            backends: Backends::default(),
            base_dir: PathBuf::new(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let mut config: RunConfig = io::read_json(path)?;
        config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        config.search.validate().map_err(|e| CliError::at(path, e))?;
        Ok(config)
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        self.base_dir.join(path)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.output_dir)
    }

    pub fn scenarios_path(&self) -> PathBuf {
        match &self.scenarios {
            Some(p) => self.resolve(p),
            None => self.output_dir().join("scenarios.json"),
        }
    }

    pub fn toolkit_path(&self) -> PathBuf {
        self.resolve(&self.toolkit)
    }

    pub fn load_toolkit(&self) -> Result<Toolkit, CliError> {
        io::read_toolkit(&self.toolkit_path())
    }

    pub fn knowledge_optimizer(&self) -> Result<KnowledgeOptimizer, CliError> {
        let mut templates = PromptTemplates::default();
        if let Some(p) = &self.optimizer.tool_template {
            templates.tool = io::read_text(&self.resolve(p))?;
        }
        if let Some(p) = &self.optimizer.workflow_template {
            templates.workflow = io::read_text(&self.resolve(p))?;
        }
        Ok(KnowledgeOptimizer {
            mode: self.mode,
            templates,
            temperature: self.optimizer.temperature,
            model: self.optimizer.model.clone(),
        })
    }

    pub fn backend(&self, settings: &BackendSettings) -> Result<Box<dyn ChatBackend>, CliError> {
        settings.build(&self.base_dir)
    }

    pub fn environment(&self) -> Result<Box<dyn Environment>, CliError> {
        self.environment.build(&self.base_dir)
    }
}
