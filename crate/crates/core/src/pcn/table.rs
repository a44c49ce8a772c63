//! Deterministic feature-table model.
//!
//! `score(c, a) = Σ_{f ∈ features(c)} w[f, a]` with features counted as a
//! bag, followed by a temperature softmax over the queried candidates.
//! Weights are nonnegative, so raising `w[f, a]` for a feature present in the
//! context can only raise the probability of `a`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{check_candidates, CompletionDistribution, Pcn};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::symbols::{find_run, SymbolSeq};

/// A named phrase; each occurrence in a context fires feature `@<tag>`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SlotTag {
    pub tag: String,
    pub phrase: SymbolSeq,
}

/// Unigrams, space-joined bigrams and declared slot tags.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FeatureExtractor {
    slots: Vec<SlotTag>,
}

impl FeatureExtractor {
    pub fn with_slots(slots: Vec<SlotTag>) -> Self {
        Self { slots }
    }

    pub fn slots(&self) -> &[SlotTag] {
        &self.slots
    }

    /// Every feature occurrence in `context`, repeats included.
    pub fn features(&self, context: &SymbolSeq) -> Vec<String> {
        let mut out = Vec::new();
        self.for_each_feature(context, |f| out.push(f.to_string()));
        out
    }

    fn for_each_feature(&self, context: &SymbolSeq, mut visit: impl FnMut(&str)) {
        let toks = context.tokens();
        for t in toks {
            visit(t);
        }
        let mut buf = String::new();
        for pair in toks.windows(2) {
            buf.clear();
            buf.push_str(&pair[0]);
            buf.push(' ');
            buf.push_str(&pair[1]);
            visit(&buf);
        }
        for slot in &self.slots {
            let mut from = 0;
            while let Some(i) = find_run(toks, slot.phrase.tokens(), from) {
                buf.clear();
                buf.push('@');
                buf.push_str(&slot.tag);
                visit(&buf);
                from = i + slot.phrase.len();
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TablePcn<S: Scalar> {
    version: u32,
    temperature: S,
    extractor: FeatureExtractor,
    // feature -> completion text -> weight
    weights: BTreeMap<String, BTreeMap<String, S>>,
}

const HEADER_TAG: &str = "tablepcn";

impl<S: Scalar> TablePcn<S> {
    pub fn new(temperature: S) -> Self {
        Self {
            version: 1,
            temperature,
            extractor: FeatureExtractor::default(),
            weights: BTreeMap::new(),
        }
    }

    pub fn with_slots(mut self, slots: Vec<SlotTag>) -> Self {
        self.extractor = FeatureExtractor::with_slots(slots);
        self
    }

    pub fn version(&self) -> u32 {
        self.version
    }

    pub fn temperature(&self) -> S {
        self.temperature
    }

    pub fn set_temperature(&mut self, temperature: S) -> Result<()> {
        if !temperature.is_finite() || temperature <= S::zero() {
            return Err(Error::InvalidArgument(
                "temperature must be positive".into(),
            ));
        }
        self.temperature = temperature;
        Ok(())
    }

    pub fn extractor(&self) -> &FeatureExtractor {
        &self.extractor
    }

    /// Successor version (used when consolidation writes a new table).
    pub fn next_version(&self) -> Self {
        let mut t = self.clone();
        t.version += 1;
        t
    }

    pub fn weight(&self, feature: &str, completion: &str) -> S {
        self.weights
            .get(feature)
            .and_then(|row| row.get(completion))
            .copied()
            .unwrap_or_else(S::zero)
    }

    pub fn set_weight(
        &mut self,
        feature: &str,
        completion: impl Into<String>,
        weight: S,
    ) -> Result<()> {
        let completion = completion.into();
        if !weight.is_finite() || weight < S::zero() {
            return Err(Error::NegativeWeight {
                feature: feature.to_string(),
                completion,
                weight: weight.as_f64(),
            });
        }
        self.weights
            .entry(feature.to_string())
            .or_default()
            .insert(completion, weight);
        Ok(())
    }

    pub fn add_weight(&mut self, feature: &str, completion: &str, delta: S) -> Result<()> {
        let w = self.weight(feature, completion) + delta;
        self.set_weight(feature, completion.to_string(), w)
    }

    /// `(feature, completion, weight)` in lexicographic order.
    pub fn entries(&self) -> impl Iterator<Item = (&str, &str, S)> {
        self.weights
            .iter()
            .flat_map(|(f, row)| row.iter().map(move |(c, w)| (f.as_str(), c.as_str(), *w)))
    }

    pub fn entry_count(&self) -> usize {
        self.weights.values().map(BTreeMap::len).sum()
    }

    /// Raw additive scores, one per candidate.
    pub fn raw_scores(&self, context: &SymbolSeq, candidates: &[SymbolSeq]) -> Vec<S> {
        let keys: Vec<String> = candidates.iter().map(SymbolSeq::render).collect();
        let mut scores = vec![S::zero(); candidates.len()];
        self.extractor.for_each_feature(context, |f| {
            if let Some(row) = self.weights.get(f) {
                for (s, k) in scores.iter_mut().zip(&keys) {
                    if let Some(w) = row.get(k) {
                        *s = *s + *w;
                    }
                }
            }
        });
        scores
    }

    /// Flat-file form: header line then one `feature\tcompletion\tweight` line per entry.
    pub fn to_flat(&self) -> String {
        let mut out = format!(
            "{HEADER_TAG} v{} tau={}\n",
            self.version,
            self.temperature.as_f64()
        );
        for (f, c, w) in self.entries() {
            let _ = writeln!(out, "{f}\t{c}\t{}", w.as_f64());
        }
        out
    }

    pub fn parse_flat(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::TableFormat {
            line: 1,
            message: "missing header".into(),
        })?;
        let bad_header = || Error::TableFormat {
            line: 1,
            message: format!("expected `{HEADER_TAG} v<N> tau=<float>`, got {header:?}"),
        };
        let mut parts = header.split_whitespace();
        if parts.next() != Some(HEADER_TAG) {
            return Err(bad_header());
        }
        let version: u32 = parts
            .next()
            .and_then(|v| v.strip_prefix('v'))
            .and_then(|v| v.parse().ok())
            .filter(|v| *v >= 1)
            .ok_or_else(bad_header)?;
        let tau: f64 = parts
            .next()
            .and_then(|t| t.strip_prefix("tau="))
            .and_then(|t| t.parse().ok())
            .ok_or_else(bad_header)?;
        if parts.next().is_some() {
            return Err(bad_header());
        }
        let mut table = Self::new(S::one());
        table.version = version;
        table
            .set_temperature(S::lit(tau))
            .map_err(|_| bad_header())?;
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let err = |message: String| Error::TableFormat {
                line: i + 1,
                message,
            };
            if fields.len() != 3 {
                return Err(err(format!(
                    "expected 3 tab-separated fields, got {}",
                    fields.len()
                )));
            }
            let w: f64 = fields[2]
                .trim()
                .parse()
                .map_err(|_| err(format!("bad weight {:?}", fields[2])))?;
            table
                .set_weight(fields[0], fields[1], S::lit(w))
                .map_err(|e| err(e.to_string()))?;
        }
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse_flat(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_flat())?;
        Ok(())
    }
}

impl<S: Scalar> Pcn<S> for TablePcn<S> {
    fn score(
        &self,
        context: &SymbolSeq,
        candidates: &[SymbolSeq],
    ) -> Result<CompletionDistribution<S>> {
        check_candidates(candidates)?;
        let scores = self.raw_scores(context, candidates);
        CompletionDistribution::from_scores(candidates.to_vec(), &scores, self.temperature)
    }

    fn as_table(&self) -> Option<&TablePcn<S>> {
        Some(self)
    }
}
