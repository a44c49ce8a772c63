//! The per-tick global workspace and its assemblies.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symbols::SymbolSeq;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssemblyRole {
    Observation,
    Predicted,
    Retrieved,
    Action,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assembly {
    pub content: SymbolSeq,
    pub role: AssemblyRole,
    /// Which framing function, memory or context produced this entry.
    pub provenance: String,
    pub stage_index: usize,
}

/// Transient workspace `(o, z1..zK, a)` for one tick.
///
/// Appends are checked: the observation sits at stage 0, stage indices
/// strictly increase, and a single action entry closes the workspace.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlobalWorkspace {
    tick: u64,
    entries: Vec<Assembly>,
}

impl GlobalWorkspace {
    pub fn new(tick: u64, observation: SymbolSeq) -> Self {
        Self {
            tick,
            entries: vec![Assembly {
                content: observation,
                role: AssemblyRole::Observation,
                provenance: "environment".into(),
                stage_index: 0,
            }],
        }
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn entries(&self) -> &[Assembly] {
        &self.entries
    }

    pub fn observation(&self) -> &SymbolSeq {
        &self.entries[0].content
    }

    /// Entries strictly between observation and action.
    pub fn intermediate(&self) -> impl Iterator<Item = &Assembly> {
        self.entries
            .iter()
            .filter(|e| matches!(e.role, AssemblyRole::Predicted | AssemblyRole::Retrieved))
    }

    pub fn action(&self) -> Option<&Assembly> {
        self.entries
            .last()
            .filter(|e| e.role == AssemblyRole::Action)
    }

    pub fn is_closed(&self) -> bool {
        self.action().is_some()
    }

    fn next_stage(&self) -> usize {
        self.entries.last().map_or(0, |e| e.stage_index + 1)
    }

    /// Append an intermediate or action assembly at the next stage index.
    pub fn append(
        &mut self,
        content: SymbolSeq,
        role: AssemblyRole,
        provenance: impl Into<String>,
    ) -> Result<&Assembly> {
        if self.is_closed() {
            return Err(Error::Workspace("workspace already holds an action".into()));
        }
        if role == AssemblyRole::Observation {
            return Err(Error::Workspace(
                "observation is only valid at stage 0".into(),
            ));
        }
        let stage_index = self.next_stage();
        self.entries.push(Assembly {
            content,
            role,
            provenance: provenance.into(),
            stage_index,
        });
        debug_assert!(self.check().is_ok());
        Ok(self.entries.last().expect("just pushed"))
    }

    /// Validate the role/position constraints.
    pub fn check(&self) -> Result<()> {
        let first = self
            .entries
            .first()
            .ok_or_else(|| Error::Workspace("empty workspace".into()))?;
        if first.role != AssemblyRole::Observation || first.stage_index != 0 {
            return Err(Error::Workspace("entry 0 must be the observation".into()));
        }
        for (i, pair) in self.entries.windows(2).enumerate() {
            if pair[1].stage_index <= pair[0].stage_index {
                return Err(Error::Workspace(format!(
                    "stage index not increasing at {}",
                    i + 1
                )));
            }
            if pair[1].role == AssemblyRole::Observation {
                return Err(Error::Workspace("second observation".into()));
            }
            if pair[0].role == AssemblyRole::Action {
                return Err(Error::Workspace(
                    "action must terminate the workspace".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Number of intermediate assemblies (K): predicted plus retrieved entries.
pub fn chain_length(ws: &GlobalWorkspace) -> usize {
    ws.intermediate().count()
}
