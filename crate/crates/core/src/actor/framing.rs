use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::symbols::{normalize, SymbolSeq};
use crate::workspace::GlobalWorkspace;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Slot {
    Observation,
    Assemblies,
    Persona,
    Query,
    Question,
}

impl Slot {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "observation" => Slot::Observation,
            "assemblies" => Slot::Assemblies,
            "persona" => Slot::Persona,
            "query" => Slot::Query,
            "question" => Slot::Question,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Segment {
    Text(String),
    Slot(Slot),
}

/// Prompt template over the workspace.
///
/// Slots: `{observation}`, `{assemblies}` (intermediate entries as `- ` lines
/// in stage order), `{persona}`, `{query}` (latest entry) and `{question}`.
/// Output is normalized, so layout whitespace does not reach the model.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Framing {
    template: String,
    segments: Vec<Segment>,
}

/// Values for the non-workspace slots.
#[derive(Clone, Copy, Debug)]
pub struct FrameVars<'a> {
    pub persona: &'a SymbolSeq,
    pub question: &'a SymbolSeq,
}

impl Framing {
    pub fn new(template: impl Into<String>) -> Result<Self> {
        let template = template.into();
        let mut segments = Vec::new();
        let mut rest = template.as_str();
        while let Some(open) = rest.find('{') {
            if open > 0 {
                segments.push(Segment::Text(rest[..open].to_string()));
            }
            let close = rest[open..]
                .find('}')
                .ok_or_else(|| Error::InvalidLogic(format!("unclosed slot in {template:?}")))?;
            let name = &rest[open + 1..open + close];
            let slot = Slot::parse(name)
                .ok_or_else(|| Error::InvalidLogic(format!("unknown slot {{{name}}}")))?;
            segments.push(Segment::Slot(slot));
            rest = &rest[open + close + 1..];
        }
        if rest.contains('}') {
            return Err(Error::InvalidLogic(format!("stray '}}' in {template:?}")));
        }
        if !rest.is_empty() {
            segments.push(Segment::Text(rest.to_string()));
        }
        Ok(Self { template, segments })
    }

    pub fn template(&self) -> &str {
        &self.template
    }

    pub fn uses_question(&self) -> bool {
        self.segments.contains(&Segment::Slot(Slot::Question))
    }

    pub fn render(&self, ws: &GlobalWorkspace, vars: FrameVars<'_>) -> SymbolSeq {
        let mut text = String::new();
        for seg in &self.segments {
            match seg {
                Segment::Text(t) => text.push_str(t),
                Segment::Slot(Slot::Observation) => text.push_str(&ws.observation().render()),
                Segment::Slot(Slot::Assemblies) => {
                    for (i, a) in ws.intermediate().enumerate() {
                        if i > 0 {
                            text.push('\n');
                        }
                        text.push_str("- ");
                        text.push_str(&a.content.render());
                    }
                }
                Segment::Slot(Slot::Persona) => text.push_str(&vars.persona.render()),
                Segment::Slot(Slot::Query) => {
                    let last = ws.entries().last().expect("workspace holds an observation");
                    text.push_str(&last.content.render());
                }
                Segment::Slot(Slot::Question) => text.push_str(&vars.question.render()),
            }
            text.push(' ');
        }
        normalize(&text)
    }
}

impl Serialize for Framing {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.template)
    }
}

impl<'de> Deserialize<'de> for Framing {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let t = String::deserialize(d)?;
        Framing::new(t).map_err(serde::de::Error::custom)
    }
}
