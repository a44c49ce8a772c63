use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::pattern::TokenPattern;
use crate::record::Valence;
use crate::symbols::{normalize, SymbolSeq};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantifier {
    #[default]
    Any,
    All,
    None,
}

/// Constraint on the joint action profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Condition {
    /// Restrict to actors in this role; all actors when absent.
    #[serde(default)]
    pub role: Option<String>,
    #[serde(default)]
    pub quantifier: Quantifier,
    pub action: TokenPattern,
}

impl Condition {
    pub fn holds<'a>(&self, profile: impl Iterator<Item = (&'a str, &'a SymbolSeq)>) -> bool {
        let mut hits = profile
            .filter(|(role, _)| self.role.as_deref().is_none_or(|r| r == *role))
            .map(|(_, a)| self.action.matches(a));
        match self.quantifier {
            Quantifier::Any => hits.any(|h| h),
            Quantifier::All => hits.all(|h| h),
            Quantifier::None => !hits.any(|h| h),
        }
    }
}

/// Emit a sanction for each actor whose action matches `trigger`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SanctionClause {
    pub trigger: TokenPattern,
    #[serde(default)]
    pub target_role: Option<String>,
    pub sanctioner_role: String,
    /// Only sanctioners whose own action this tick matches are eligible.
    #[serde(default)]
    pub sanctioner_action: Option<TokenPattern>,
    /// Slots: `{action}`, `{target}`, `{sanctioner}`.
    pub signal: String,
    #[serde(default = "disapprove")]
    pub valence: Valence,
}

fn disapprove() -> Valence {
    Valence::Disapprove
}

/// First-match transition over `(scene, joint action)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionRule {
    pub name: String,
    #[serde(default = "TokenPattern::any")]
    pub scene: TokenPattern,
    #[serde(default)]
    pub when: Vec<Condition>,
    /// Scene rewrite; slot `{scene}` is the current scene. Unchanged when absent.
    #[serde(default)]
    pub effect: Option<String>,
    /// Per-role observation templates from the next tick on.
    #[serde(default)]
    pub views: BTreeMap<String, String>,
    #[serde(default)]
    pub sanction: Option<SanctionClause>,
}

impl TransitionRule {
    /// Matches everything and changes nothing.
    pub fn identity() -> Self {
        Self {
            name: "default".into(),
            scene: TokenPattern::any(),
            when: Vec::new(),
            effect: None,
            views: BTreeMap::new(),
            sanction: None,
        }
    }

    pub fn is_catch_all(&self) -> bool {
        self.when.is_empty() && self.scene == TokenPattern::any()
    }

    pub fn matches<'a>(&self, scene: &SymbolSeq, profile: &[(&'a str, &'a SymbolSeq)]) -> bool {
        self.scene.matches(scene) && self.when.iter().all(|c| c.holds(profile.iter().copied()))
    }
}

/// Substitute `{key}` slots and normalize.
pub fn fill(template: &str, slots: &[(&str, &str)]) -> SymbolSeq {
    let mut text = template.to_string();
    for (k, v) in slots {
        text = text.replace(&format!("{{{k}}}"), v);
    }
    normalize(&text)
}
