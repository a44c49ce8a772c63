use serde::{Deserialize, Serialize};

use super::framing::Framing;
use crate::error::{Error, Result};
use crate::symbols::{normalize, SymbolSeq};

pub const DEFAULT_SUMMARIZE_FRAMING: &str =
    "{observation}\n{assemblies}\nquestion: {question}\nanswer:";
pub const DEFAULT_RETRIEVE_FRAMING: &str = "{observation}";
pub const DEFAULT_POLICY_FRAMING: &str =
    "{observation}\n{assemblies}\nquestion: what does {persona} do next?\nanswer:";
pub const QUESTION_POLICY_FRAMING: &str =
    "{observation}\n{assemblies}\nquestion: {question}\nanswer:";

/// Candidate set used by a policy step that names none.
pub const DEFAULT_ACTION_SET: &str = "actions";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepKind {
    Summarize,
    Retrieve,
    Policy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogicStep {
    pub kind: StepKind,
    pub framing: Framing,
    /// Fills `{question}`.
    #[serde(default)]
    pub question: SymbolSeq,
    /// Named candidate set; a summarize step without one is open-ended.
    #[serde(default)]
    pub candidates: Option<String>,
    /// Retrieval depth.
    #[serde(default)]
    pub k: Option<usize>,
}

impl LogicStep {
    pub fn summarize(question: &str, candidates: &str) -> Self {
        Self {
            kind: StepKind::Summarize,
            framing: Framing::new(DEFAULT_SUMMARIZE_FRAMING).expect("builtin template"),
            question: normalize(question),
            candidates: Some(candidates.to_string()),
            k: None,
        }
    }

    pub fn retrieve(k: usize) -> Self {
        Self {
            kind: StepKind::Retrieve,
            framing: Framing::new(DEFAULT_RETRIEVE_FRAMING).expect("builtin template"),
            question: SymbolSeq::new(),
            candidates: None,
            k: Some(k),
        }
    }

    pub fn policy() -> Self {
        Self {
            kind: StepKind::Policy,
            framing: Framing::new(DEFAULT_POLICY_FRAMING).expect("builtin template"),
            question: SymbolSeq::new(),
            candidates: None,
            k: None,
        }
    }

    pub fn policy_asking(question: &str) -> Self {
        Self {
            framing: Framing::new(QUESTION_POLICY_FRAMING).expect("builtin template"),
            question: normalize(question),
            ..Self::policy()
        }
    }

    pub fn with_framing(mut self, framing: Framing) -> Self {
        self.framing = framing;
        self
    }

    pub fn with_candidates(mut self, set: &str) -> Self {
        self.candidates = Some(set.to_string());
        self
    }

    /// Candidate set name the step scores over.
    pub fn candidate_set(&self) -> Option<&str> {
        match (self.kind, &self.candidates) {
            (_, Some(c)) => Some(c),
            (StepKind::Policy, None) => Some(DEFAULT_ACTION_SET),
            _ => None,
        }
    }
}

/// Ordered summary/retrieval program ending in exactly one policy step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLogic", into = "RawLogic")]
pub struct DecisionLogic {
    name: String,
    steps: Vec<LogicStep>,
}

#[derive(Serialize, Deserialize)]
struct RawLogic {
    name: String,
    steps: Vec<LogicStep>,
}

impl TryFrom<RawLogic> for DecisionLogic {
    type Error = Error;
    fn try_from(r: RawLogic) -> Result<Self> {
        DecisionLogic::new(r.name, r.steps)
    }
}

impl From<DecisionLogic> for RawLogic {
    fn from(l: DecisionLogic) -> Self {
        RawLogic {
            name: l.name,
            steps: l.steps,
        }
    }
}

impl DecisionLogic {
    pub fn new(name: impl Into<String>, steps: Vec<LogicStep>) -> Result<Self> {
        let name = name.into();
        let policies = steps.iter().filter(|s| s.kind == StepKind::Policy).count();
        if steps.is_empty() {
            return Err(Error::InvalidLogic(format!("{name}: no steps")));
        }
        if policies != 1 || steps.last().map(|s| s.kind) != Some(StepKind::Policy) {
            return Err(Error::InvalidLogic(format!(
                "{name}: needs exactly one policy step, in last position"
            )));
        }
        for (i, s) in steps.iter().enumerate() {
            if s.kind == StepKind::Retrieve && s.k == Some(0) {
                return Err(Error::InvalidLogic(format!(
                    "{name}: step {i} retrieves k=0"
                )));
            }
        }
        Ok(Self { name, steps })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn steps(&self) -> &[LogicStep] {
        &self.steps
    }

    pub fn policy(&self) -> &LogicStep {
        self.steps.last().expect("validated nonempty")
    }

    /// Every step before the policy.
    pub fn preamble(&self) -> &[LogicStep] {
        &self.steps[..self.steps.len() - 1]
    }

    pub fn has_retrieval(&self) -> bool {
        self.steps.iter().any(|s| s.kind == StepKind::Retrieve)
    }

    /// Policy only.
    pub fn direct() -> Self {
        Self::new("direct", vec![LogicStep::policy()]).expect("valid")
    }

    /// Retrieve `k` memories, then act.
    pub fn recall(k: usize) -> Self {
        Self::new("recall", vec![LogicStep::retrieve(k), LogicStep::policy()]).expect("valid")
    }

    /// Rational-choice script. Candidate sets `options` and `consequences`
    /// must be declared by the scenario.
    pub fn logic_a() -> Self {
        Self::new(
            "logic-a",
            vec![
                LogicStep::summarize("What are my options in this situation?", "options"),
                LogicStep::summarize(
                    "For each option, what consequences would follow if I were to select it?",
                    "consequences",
                ),
                LogicStep::policy_asking("Which option has the highest expected value?"),
            ],
        )
        .expect("valid")
    }

    /// Appropriateness script. Candidate sets `situation` and `person` must be
    /// declared by the scenario.
    pub fn logic_b() -> Self {
        Self::new(
            "logic-b",
            vec![
                LogicStep::summarize("What kind of situation is this?", "situation"),
                LogicStep::summarize("What kind of person am I?", "person"),
                LogicStep::policy_asking(
                    "What does a person such as I do in a situation such as this?",
                ),
            ],
        )
        .expect("valid")
    }

    /// Builtin logic by name.
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "direct" => Some(Self::direct()),
            "logic-a" => Some(Self::logic_a()),
            "logic-b" => Some(Self::logic_b()),
            _ => name
                .strip_prefix("recall-")
                .and_then(|k| k.parse().ok())
                .filter(|k| *k > 0)
                .map(Self::recall),
        }
    }
}
