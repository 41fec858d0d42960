//! Agent roster files: the structured config listing specialist and
//! generalist agent specs for a debate run.
//!
//! Relative fixture paths inside `backend_params` resolve against the
//! roster file's directory, so a roster and its fixtures travel together.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{CalibError, Result};

use super::http::HttpAgent;
use super::scripted::{ScriptedAgent, ScriptedStore};
use super::simulated::SimulatedAgent;
use super::{Agent, AgentSpec, Backend};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Roster {
    pub specialists: Vec<AgentSpec>,
    pub generalists: Vec<AgentSpec>,
}

pub fn load_roster(path: &Path) -> Result<Roster> {
    let text = std::fs::read_to_string(path)?;
    let roster: Roster = serde_json::from_str(&text)?;
    if roster.specialists.is_empty() {
        return Err(CalibError::InvalidParam(format!(
            "roster {} lists no specialists",
            path.display()
        )));
    }
    Ok(roster)
}

/// Builds agent instances from specs, sharing scripted fixture files that
/// several agents reference.
#[derive(Default)]
pub struct AgentBuilder {
    base_dir: PathBuf,
    stores: HashMap<PathBuf, Arc<ScriptedStore>>,
}

impl AgentBuilder {
    pub fn new(base_dir: impl Into<PathBuf>) -> Self {
        Self { base_dir: base_dir.into(), stores: HashMap::new() }
    }

    pub fn build(&mut self, spec: &AgentSpec) -> Result<Box<dyn Agent>> {
        match spec.backend {
            Backend::Scripted => {
                let rel = spec.backend_params.get("fixtures").ok_or_else(|| {
                    CalibError::InvalidParam(format!(
                        "scripted agent '{}' needs a 'fixtures' backend param",
                        spec.name
                    ))
                })?;
                let mut path = PathBuf::from(rel);
                if path.is_relative() {
                    path = self.base_dir.join(path);
                }
                let store = match self.stores.get(&path) {
                    Some(store) => Arc::clone(store),
                    None => {
                        let store = Arc::new(ScriptedStore::load(&path)?);
                        self.stores.insert(path, Arc::clone(&store));
                        store
                    }
                };
                Ok(Box::new(ScriptedAgent::new(spec.clone(), store)))
            }
            Backend::Simulated => Ok(Box::new(SimulatedAgent::from_spec(spec.clone())?)),
            Backend::Http => Ok(Box::new(HttpAgent::from_spec(spec.clone())?)),
        }
    }

    pub fn build_all(&mut self, specs: &[AgentSpec]) -> Result<Vec<Box<dyn Agent>>> {
        specs.iter().map(|s| self.build(s)).collect()
    }
}
