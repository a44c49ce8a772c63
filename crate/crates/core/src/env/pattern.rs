use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::symbols::{normalize, SymbolSeq};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Lit(String),
    /// `?`: exactly one token.
    One,
    /// `*`: any run of tokens, including none.
    Many,
}

/// Token-level glob over a [`SymbolSeq`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenPattern {
    source: String,
    toks: Vec<Tok>,
}

impl TokenPattern {
    pub fn new(source: &str) -> Self {
        let toks = normalize(source)
            .tokens()
            .iter()
            .map(|t| match t.as_str() {
                "*" => Tok::Many,
                "?" => Tok::One,
                _ => Tok::Lit(t.clone()),
            })
            .collect();
        Self {
            source: source.to_string(),
            toks,
        }
    }

    pub fn any() -> Self {
        Self::new("*")
    }

    pub fn matches(&self, seq: &SymbolSeq) -> bool {
        let s = seq.tokens();
        // reach[j]: pattern prefix consumed so far can end at s[..j]
        let mut reach = vec![false; s.len() + 1];
        reach[0] = true;
        for tok in &self.toks {
            let mut next = vec![false; s.len() + 1];
            match tok {
                Tok::Many => {
                    let mut on = false;
                    for j in 0..=s.len() {
                        on |= reach[j];
                        next[j] = on;
                    }
                }
                Tok::One => {
                    next[1..=s.len()].copy_from_slice(&reach[..s.len()]);
                }
                Tok::Lit(l) => {
                    for j in 0..s.len() {
                        next[j + 1] = reach[j] && s[j] == *l;
                    }
                }
            }
            reach = next;
        }
        reach[s.len()]
    }
}

impl fmt::Display for TokenPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl Serialize for TokenPattern {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.source)
    }
}

impl<'de> Deserialize<'de> for TokenPattern {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(TokenPattern::new(&String::deserialize(d)?))
    }
}
