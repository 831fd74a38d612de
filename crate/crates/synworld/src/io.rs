//! Reading and writing the on-disk artifacts: toolkits, scenario stores,
//! knowledge files, checkpoints and CSVs.

use std::collections::BTreeSet;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use synworld_core::mcts::Checkpoint;
use synworld_core::types::{validate_action_knowledge, ActionKnowledge, Scenario, Toolkit};

use crate::error::CliError;

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::at(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::at(path, e))
}

/// Writes via a temporary sibling and a rename so readers never see a torn file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::at(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(|e| CliError::at(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::at(path, e))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::at(path, e))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_toolkit(path: &Path) -> Result<Toolkit, CliError> {
    read_json(path)
}

/// Loads a scenario store and checks every scenario against the toolkit.
pub fn read_scenarios(path: &Path, toolkit: &Toolkit) -> Result<Vec<Scenario>, CliError> {
    let scenarios: Vec<Scenario> = read_json(path)?;
    let mut seen = BTreeSet::new();
    for s in &scenarios {
        s.check(toolkit).map_err(|e| CliError::at(path, e))?;
        if !seen.insert(s.scenario_id.as_str()) {
            return Err(CliError::at(path, format!("duplicate scenario_id {}", s.scenario_id)));
        }
    }
    Ok(scenarios)
}

/// Loads action knowledge and validates it against the toolkit.
pub fn read_knowledge(path: &Path, toolkit: &Toolkit) -> Result<ActionKnowledge, CliError> {
    let ak: ActionKnowledge = read_json(path)?;
    let report = validate_action_knowledge(&ak, toolkit);
    if !report.is_ok() {
        return Err(CliError::at(path, report.messages().join("; ")));
    }
    Ok(ak)
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint, CliError> {
    let text = read_text(path)?;
    Checkpoint::from_json(&text).map_err(|e| CliError::at(path, e))
}

pub fn write_checkpoint(path: &Path, checkpoint: &Checkpoint) -> Result<(), CliError> {
    write_atomic(path, checkpoint.to_json().as_bytes())
}

/// Writes a CSV with `header` followed by `rows`.
pub fn write_csv<R: Serialize>(path: &Path, header: &[&str], rows: &[R]) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header).map_err(|e| CliError::at(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| CliError::at(path, e))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::at(path, e))?;
    write_atomic(path, &bytes)
}

pub const LOCK_FILE: &str = ".synworld.lock";

/// Exclusive claim on an output directory, released on drop.
#[derive(Debug)]
pub struct OutputLock {
    path: PathBuf,
}

impl OutputLock {
    pub fn acquire(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::at(dir, e))?;
        let path = dir.join(LOCK_FILE);
        let mut file = OpenOptions::new().write(true).create_new(true).open(&path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::AlreadyExists {
                CliError::input(format!(
                    "{} is locked by another run (remove {} if that run is gone)",
                    dir.display(),
                    path.display()
                ))
            } else {
                CliError::at(&path, e)
            }
        })?;
        let _ = writeln!(file, "{}", std::process::id());
        Ok(Self { path })
    }
}

impl Drop for OutputLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}
