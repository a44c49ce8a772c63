//! Generative actors: framing functions, decision logics and the act cycle.

mod framing;
mod logic;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use framing::{FrameVars, Framing};
pub use logic::{
    DecisionLogic, LogicStep, StepKind, DEFAULT_ACTION_SET, DEFAULT_POLICY_FRAMING,
    DEFAULT_RETRIEVE_FRAMING, DEFAULT_SUMMARIZE_FRAMING,
};

use crate::error::{Error, Result};
use crate::memory::{MemoryBank, SimilarityMetric};
use crate::pcn::{CompletionDistribution, Pcn};
use crate::record::MemoryRecord;
use crate::scalar::Scalar;
use crate::seed::SeedStream;
use crate::symbols::{normalize, SymbolSeq};
use crate::workspace::{Assembly, AssemblyRole, GlobalWorkspace};

const SELECTOR_PROVENANCE: &str = "logic-selector";
pub const CONTEXT_PROVENANCE: &str = "context";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionMode {
    /// Draw from the distribution.
    #[default]
    Sample,
    /// Take the most probable candidate.
    Argmax,
}

/// Optional meta step that picks one of several logics by name before acting.
#[derive(Clone, Debug, PartialEq)]
pub struct LogicSelector {
    pub alternatives: Vec<DecisionLogic>,
    pub framing: Framing,
}

impl LogicSelector {
    pub const DEFAULT_FRAMING: &'static str =
        "{observation}\nquestion: what decision logic should {persona} follow?\nanswer:";

    pub fn new(alternatives: Vec<DecisionLogic>) -> Result<Self> {
        if alternatives.is_empty() {
            return Err(Error::InvalidLogic("selector has no alternatives".into()));
        }
        Ok(Self {
            alternatives,
            framing: Framing::new(Self::DEFAULT_FRAMING)?,
        })
    }

    fn names(&self) -> Vec<SymbolSeq> {
        self.alternatives
            .iter()
            .map(|l| normalize(l.name()))
            .collect()
    }
}

/// Result of one act cycle.
#[derive(Clone, Debug, PartialEq)]
pub struct ActOutcome {
    pub action: SymbolSeq,
    pub workspace: GlobalWorkspace,
    pub record: MemoryRecord,
}

#[derive(Clone, Debug)]
pub struct Actor<S: Scalar = f64> {
    pub id: String,
    pub role: String,
    pub persona: SymbolSeq,
    pub pcn: Arc<dyn Pcn<S>>,
    pub bank: MemoryBank,
    pub logic: DecisionLogic,
    pub selector: Option<LogicSelector>,
    pub candidates: BTreeMap<String, Vec<SymbolSeq>>,
    pub retrieval_enabled: bool,
    /// Receives sanction records for events it witnesses.
    pub witness: bool,
    pub mode: ActionMode,
    pub metric: SimilarityMetric,
    pub seed: SeedStream,
}

/// Ids are single lowercase tokens so they render unchanged in memories.
pub fn check_id(id: &str) -> Result<()> {
    let ok =
        !id.is_empty() && normalize(id).tokens() == [id.to_string()] && !id.contains(['{', '}']);
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "actor id {id:?} must be one lowercase token"
        )))
    }
}

impl<S: Scalar> Actor<S> {
    pub fn new(id: &str, pcn: Arc<dyn Pcn<S>>) -> Result<Self> {
        check_id(id)?;
        Ok(Self {
            id: id.to_string(),
            role: "actor".into(),
            persona: normalize(id),
            pcn,
            bank: MemoryBank::new(),
            logic: DecisionLogic::direct(),
            selector: None,
            candidates: BTreeMap::new(),
            retrieval_enabled: true,
            witness: true,
            mode: ActionMode::Sample,
            metric: SimilarityMetric::default(),
            seed: SeedStream::new(0).child("actor").child(id),
        })
    }

    pub fn with_role(mut self, role: &str) -> Self {
        self.role = role.to_string();
        self
    }

    pub fn with_persona(mut self, persona: &str) -> Self {
        self.persona = normalize(persona);
        self
    }

    pub fn with_logic(mut self, logic: DecisionLogic) -> Self {
        self.logic = logic;
        self
    }

    pub fn with_selector(mut self, selector: LogicSelector) -> Self {
        self.selector = Some(selector);
        self
    }

    pub fn with_candidates<I, T>(mut self, name: &str, candidates: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: AsRef<str>,
    {
        let set = candidates
            .into_iter()
            .map(|c| normalize(c.as_ref()))
            .collect();
        self.candidates.insert(name.to_string(), set);
        self
    }

    pub fn with_bank(mut self, bank: MemoryBank) -> Self {
        self.bank = bank;
        self
    }

    pub fn with_mode(mut self, mode: ActionMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_seed(mut self, seed: SeedStream) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_retrieval(mut self, enabled: bool) -> Self {
        self.retrieval_enabled = enabled;
        self
    }

    pub fn with_witness(mut self, witness: bool) -> Self {
        self.witness = witness;
        self
    }

    pub fn with_metric(mut self, metric: SimilarityMetric) -> Self {
        self.metric = metric;
        self
    }

    pub fn candidate_set(&self, name: &str) -> Result<&[SymbolSeq]> {
        self.candidates
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::UnknownCandidateSet(name.to_string()))
    }

    /// Candidates of the active logic's policy step.
    pub fn action_candidates(&self) -> Result<&[SymbolSeq]> {
        let set = self
            .logic
            .policy()
            .candidate_set()
            .expect("policy always has a set");
        self.candidate_set(set)
    }

    fn vars<'a>(&'a self, step: &'a LogicStep) -> FrameVars<'a> {
        FrameVars {
            persona: &self.persona,
            question: &step.question,
        }
    }

    fn choose(&self, dist: &CompletionDistribution<S>, seed: &SeedStream) -> SymbolSeq {
        match self.mode {
            ActionMode::Argmax => dist.argmax().clone(),
            ActionMode::Sample => dist.draw(&mut seed.rng()).clone(),
        }
    }

    /// Run one non-policy step against `bank`; returns the appended entries.
    fn step_with_bank(
        &self,
        bank: &MemoryBank,
        ws: &mut GlobalWorkspace,
        step: &LogicStep,
        seed: &SeedStream,
    ) -> Result<Vec<Assembly>> {
        if ws.is_closed() {
            return Err(Error::Workspace("step after action".into()));
        }
        match step.kind {
            StepKind::Summarize => {
                let ctx = step.framing.render(ws, self.vars(step));
                let content = match step.candidate_set() {
                    Some(set) => {
                        let cands = self.candidate_set(set)?;
                        let dist = self.pcn.score(&ctx, cands)?;
                        self.choose(&dist, seed)
                    }
                    None => self.pcn.generate(&ctx, 1.0, seed.derive())?,
                };
                let a = ws.append(
                    content,
                    AssemblyRole::Predicted,
                    format!("summarize:{}", step.question),
                )?;
                Ok(vec![a.clone()])
            }
            StepKind::Retrieve => {
                if !self.retrieval_enabled {
                    return Ok(Vec::new());
                }
                let query = step.framing.render(ws, self.vars(step));
                let hits: Vec<MemoryRecord> = bank
                    .retrieve_top_k(&query, &self.metric, step.k.unwrap_or(1))
                    .into_iter()
                    .cloned()
                    .collect();
                hits.into_iter()
                    .map(|r| {
                        ws.append(
                            r.rendering,
                            AssemblyRole::Retrieved,
                            format!("memory@{}", r.time),
                        )
                        .cloned()
                    })
                    .collect()
            }
            StepKind::Policy => Err(Error::InvalidLogic(
                "policy step run as a summary step".into(),
            )),
        }
    }

    /// Execute `step` on the workspace using the actor's own bank.
    pub fn step_assembly(
        &self,
        ws: &mut GlobalWorkspace,
        step: &LogicStep,
        seed: &SeedStream,
    ) -> Result<Vec<Assembly>> {
        self.step_with_bank(&self.bank, ws, step, seed)
    }

    fn active_logic(&self, ws: &GlobalWorkspace) -> &DecisionLogic {
        let Some(sel) = &self.selector else {
            return &self.logic;
        };
        ws.entries()
            .iter()
            .find(|e| e.provenance == SELECTOR_PROVENANCE)
            .and_then(|e| {
                sel.alternatives
                    .iter()
                    .find(|l| normalize(l.name()) == e.content)
            })
            .unwrap_or(&self.logic)
    }

    /// Build a workspace for `observation`, append `context` (if nonempty) and
    /// run every pre-policy step.
    pub fn prepare(
        &self,
        bank: &MemoryBank,
        observation: &SymbolSeq,
        context: &SymbolSeq,
        tick: u64,
        seed: &SeedStream,
    ) -> Result<GlobalWorkspace> {
        let mut ws = GlobalWorkspace::new(tick, observation.clone());
        if !context.is_empty() {
            ws.append(context.clone(), AssemblyRole::Predicted, CONTEXT_PROVENANCE)?;
        }
        if let Some(sel) = &self.selector {
            let ctx = sel.framing.render(
                &ws,
                FrameVars {
                    persona: &self.persona,
                    question: &SymbolSeq::new(),
                },
            );
            let dist = self.pcn.score(&ctx, &sel.names())?;
            let pick = self.choose(&dist, &seed.child("select"));
            ws.append(pick, AssemblyRole::Predicted, SELECTOR_PROVENANCE)?;
        }
        let logic = self.active_logic(&ws).clone();
        for (i, step) in logic.preamble().iter().enumerate() {
            self.step_with_bank(bank, &mut ws, step, &seed.child(i))?;
        }
        Ok(ws)
    }

    /// `φ^π` applied to the workspace.
    pub fn policy_context(&self, ws: &GlobalWorkspace) -> SymbolSeq {
        let step = self.active_logic(ws).policy();
        step.framing.render(ws, self.vars(step))
    }

    pub fn policy_distribution(&self, ws: &GlobalWorkspace) -> Result<CompletionDistribution<S>> {
        let step = self.active_logic(ws).policy();
        let set = step.candidate_set().expect("policy always has a set");
        self.pcn
            .score(&self.policy_context(ws), self.candidate_set(set)?)
    }

    /// Choose and append the action.
    pub fn decide(&self, ws: &mut GlobalWorkspace, seed: &SeedStream) -> Result<Assembly> {
        let dist = self.policy_distribution(ws)?;
        let action = self.choose(&dist, &seed.child("policy"));
        ws.append(action, AssemblyRole::Action, "policy").cloned()
    }

    /// One full cycle without touching the bank.
    pub fn act(&self, observation: &SymbolSeq, tick: u64) -> Result<ActOutcome> {
        let seed = self.seed.child(tick);
        let mut ws = self.prepare(&self.bank, observation, &SymbolSeq::new(), tick, &seed)?;
        let action = self.decide(&mut ws, &seed)?.content;
        let record = MemoryRecord::new(
            tick,
            &self.id,
            &self.id,
            observation.clone(),
            action.clone(),
        );
        Ok(ActOutcome {
            action,
            workspace: ws,
            record,
        })
    }

    /// Act, then store the trace in memory.
    pub fn act_cycle(&mut self, observation: &SymbolSeq, tick: u64) -> Result<ActOutcome> {
        let out = self.act(observation, tick)?;
        self.bank.write(out.record.clone())?;
        Ok(out)
    }

    /// Policy distribution of the whole pipeline run against `bank`, with a
    /// fixed probe seed so repeated calls are comparable.
    pub fn pipeline_distribution(
        &self,
        bank: &MemoryBank,
        observation: &SymbolSeq,
        context: &SymbolSeq,
    ) -> Result<CompletionDistribution<S>> {
        let tick = bank.last_time().map_or(0, |t| t + 1);
        let ws = self.prepare(bank, observation, context, tick, &self.seed.child("probe"))?;
        self.policy_distribution(&ws)
    }
}
