//! Structured episodic memory records and their canonical rendering.

use serde::{Deserialize, Serialize};

use crate::symbols::{normalize, SymbolSeq};

/// Subject used when the actor behind a remembered action is not known.
pub const UNKNOWN_SUBJECT: &str = "unknown";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Valence {
    Approve,
    Disapprove,
    Unlabeled,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sanction {
    pub by: String,
    pub signal: SymbolSeq,
    pub valence: Valence,
}

/// One remembered episode: `subject` did `action` after `observation`,
/// optionally followed by a sanction.
///
/// `rendering` is always the output of [`render_record`] over the other
/// fields; constructors and deserialization keep it in sync.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemoryRecord {
    pub time: u64,
    pub observer: String,
    pub subject: String,
    pub observation: SymbolSeq,
    pub action: SymbolSeq,
    #[serde(default)]
    pub sanction: Option<Sanction>,
    #[serde(default)]
    pub rendering: SymbolSeq,
}

impl MemoryRecord {
    pub fn new(
        time: u64,
        observer: impl Into<String>,
        subject: impl Into<String>,
        observation: SymbolSeq,
        action: SymbolSeq,
    ) -> Self {
        let mut r = Self {
            time,
            observer: observer.into(),
            subject: subject.into(),
            observation,
            action,
            sanction: None,
            rendering: SymbolSeq::new(),
        };
        r.rerender();
        r
    }

    pub fn with_sanction(mut self, sanction: Sanction) -> Self {
        self.sanction = Some(sanction);
        self.rerender();
        self
    }

    pub fn set_action(&mut self, action: SymbolSeq) {
        self.action = action;
        self.rerender();
    }

    pub fn rerender(&mut self) {
        self.rendering = render_record(self);
    }

    /// True when `rendering` agrees with the structured fields.
    pub fn is_consistent(&self) -> bool {
        self.rendering == render_record(self)
    }
}

/// Canonical single-assembly form of a record:
/// `at <time> <subject> did <action> after <observation>[ ; <by> sanctioned with <signal>]`.
///
/// The `after <observation>` clause is dropped when the observation is empty
/// (standing facts such as "alice is hungry").
pub fn render_record(r: &MemoryRecord) -> SymbolSeq {
    let mut out = SymbolSeq::from_tokens(["at".to_string(), r.time.to_string()]);
    out.extend_from(&normalize(&r.subject));
    out.push("did");
    out.extend_from(&r.action);
    if !r.observation.is_empty() {
        out.push("after");
        out.extend_from(&r.observation);
    }
    if let Some(s) = &r.sanction {
        out.push(";");
        out.extend_from(&normalize(&s.by));
        out.push("sanctioned");
        out.push("with");
        out.extend_from(&s.signal);
    }
    out
}

/// Fields recovered from a rendering.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParsedRendering {
    pub time: u64,
    pub subject: String,
    pub action: SymbolSeq,
    pub observation: SymbolSeq,
    pub sanction: Option<(String, SymbolSeq)>,
}

/// Inverse of [`render_record`] for single-token subjects and sanctioners.
///
/// The action runs up to the first bare `after` token, so an action that
/// itself contains `after` is split there.
pub fn parse_rendering(rendering: &SymbolSeq) -> Option<ParsedRendering> {
    let t = rendering.tokens();
    if t.len() < 4 || t[0] != "at" || t[3] != "did" {
        return None;
    }
    let time = t[1].parse().ok()?;
    let subject = t[2].clone();
    let rest = &t[4..];
    let sanction_at = (0..rest.len()).find(|&i| {
        rest[i] == ";" && i + 3 < rest.len() && rest[i + 2] == "sanctioned" && rest[i + 3] == "with"
    });
    let (body, sanction) = match sanction_at {
        Some(i) => (
            &rest[..i],
            Some((
                rest[i + 1].clone(),
                SymbolSeq::from_tokens(rest[i + 4..].iter().cloned()),
            )),
        ),
        None => (rest, None),
    };
    let (action, observation) = match body.iter().position(|tok| tok == "after") {
        Some(i) => (&body[..i], &body[i + 1..]),
        None => (body, &body[body.len()..]),
    };
    Some(ParsedRendering {
        time,
        subject,
        action: SymbolSeq::from_tokens(action.iter().cloned()),
        observation: SymbolSeq::from_tokens(observation.iter().cloned()),
        sanction,
    })
}
