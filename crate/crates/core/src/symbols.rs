//! Normalized symbol sequences.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// An ordered sequence of lowercase, whitespace-free tokens.
///
/// Observations, assemblies, actions, contexts and memory renderings all use
/// this type. The empty sequence is valid and distinct from a sequence holding
/// one empty token (which [`normalize`] never produces, but [`SymbolSeq::from_tokens`]
/// permits).
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymbolSeq {
    tokens: Vec<String>,
}

/// Lowercase, trim and split on any run of whitespace.
pub fn normalize(text: &str) -> SymbolSeq {
    SymbolSeq {
        tokens: text.split_whitespace().map(str::to_lowercase).collect(),
    }
}

impl SymbolSeq {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_tokens<I, T>(tokens: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: Into<String>,
    {
        Self {
            tokens: tokens.into_iter().map(Into::into).collect(),
        }
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Space-joined text form.
    pub fn render(&self) -> String {
        self.tokens.join(" ")
    }

    pub fn push(&mut self, token: impl Into<String>) {
        self.tokens.push(token.into());
    }

    pub fn extend_from(&mut self, other: &SymbolSeq) {
        self.tokens.extend(other.tokens.iter().cloned());
    }

    pub fn concat(&self, other: &SymbolSeq) -> SymbolSeq {
        let mut out = self.clone();
        out.extend_from(other);
        out
    }

    /// `self` followed by `line` as an extra bulleted workspace line.
    ///
    /// An empty `line` leaves the sequence unchanged.
    pub fn with_line(&self, line: &SymbolSeq) -> SymbolSeq {
        if line.is_empty() {
            return self.clone();
        }
        let mut out = self.clone();
        out.push("-");
        out.extend_from(line);
        out
    }

    /// Index of the first occurrence of `needle` as a contiguous token run.
    pub fn find(&self, needle: &SymbolSeq) -> Option<usize> {
        find_run(&self.tokens, &needle.tokens, 0)
    }

    pub fn contains(&self, needle: &SymbolSeq) -> bool {
        self.find(needle).is_some()
    }

    pub fn starts_with(&self, prefix: &SymbolSeq) -> bool {
        self.tokens.starts_with(&prefix.tokens)
    }

    pub fn ends_with(&self, suffix: &SymbolSeq) -> bool {
        self.tokens.ends_with(&suffix.tokens)
    }
}

pub(crate) fn find_run(hay: &[String], needle: &[String], from: usize) -> Option<usize> {
    if needle.is_empty() || needle.len() > hay.len() {
        return None;
    }
    (from..=hay.len() - needle.len()).find(|&i| hay[i..i + needle.len()] == *needle)
}

impl fmt::Display for SymbolSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl From<&str> for SymbolSeq {
    fn from(s: &str) -> Self {
        normalize(s)
    }
}

impl From<String> for SymbolSeq {
    fn from(s: String) -> Self {
        normalize(&s)
    }
}

// Serialized as its rendered text; deserialization re-normalizes.
impl Serialize for SymbolSeq {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.render())
    }
}

impl<'de> Deserialize<'de> for SymbolSeq {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Ok(normalize(&s))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normalizes_case_and_spacing() {
        assert_eq!(
            normalize("Alice  Eats the Apple").tokens(),
            ["alice", "eats", "the", "apple"]
        );
        assert!(normalize("").is_empty());
        assert!(normalize("  \t\n ").is_empty());
        assert_eq!(
            normalize("It is forbidden to eat apples").tokens(),
            ["it", "is", "forbidden", "to", "eat", "apples"]
        );
    }

    #[test]
    fn empty_differs_from_single_empty_token() {
        let empty = SymbolSeq::new();
        let one = SymbolSeq::from_tokens([""]);
        assert_ne!(empty, one);
        assert_eq!(one.len(), 1);
    }

    #[test]
    fn with_line_is_identity_for_empty() {
        let c = normalize("a b");
        assert_eq!(c.with_line(&SymbolSeq::new()), c);
        assert_eq!(c.with_line(&normalize("x")).render(), "a b - x");
    }

    proptest! {
        #[test]
        fn render_parse_roundtrip(s in "\\PC{0,40}") {
            let n = normalize(&s);
            prop_assert_eq!(normalize(&n.render()), n);
        }
    }
}
