//! Per-actor associative memory: append, similarity retrieval, JSON-lines dump.

use std::cmp::Ordering;
use std::collections::{BTreeMap, VecDeque};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::record::MemoryRecord;
use crate::symbols::SymbolSeq;

/// Similarity between a query and a record rendering, always in `[0, 1]`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SimilarityMetric {
    /// `|A ∩ B| / |A ∪ B|` over token sets.
    #[default]
    TokenJaccard,
    /// Weighted overlap coefficient `w(A ∩ B) / min(w(A), w(B))`, with
    /// per-token weights (unlisted tokens weigh `default_weight`).
    WeightedOverlap {
        #[serde(default)]
        weights: BTreeMap<String, f64>,
        #[serde(default = "one")]
        default_weight: f64,
    },
}

fn one() -> f64 {
    1.0
}

fn token_set(s: &SymbolSeq) -> Vec<&str> {
    let mut v: Vec<&str> = s.tokens().iter().map(String::as_str).collect();
    v.sort_unstable();
    v.dedup();
    v
}

fn intersect<'a>(a: &[&'a str], b: &[&'a str], mut hit: impl FnMut(&'a str)) {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(b[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                hit(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
}

impl SimilarityMetric {
    pub fn similarity(&self, x: &SymbolSeq, y: &SymbolSeq) -> f64 {
        let a = token_set(x);
        let b = token_set(y);
        self.similarity_sets(&a, &b)
    }

    fn similarity_sets(&self, a: &[&str], b: &[&str]) -> f64 {
        if a.is_empty() && b.is_empty() {
            return 1.0;
        }
        match self {
            SimilarityMetric::TokenJaccard => {
                let mut common = 0usize;
                intersect(a, b, |_| common += 1);
                common as f64 / (a.len() + b.len() - common) as f64
            }
            SimilarityMetric::WeightedOverlap {
                weights,
                default_weight,
            } => {
                let w = |t: &str| weights.get(t).copied().unwrap_or(*default_weight).max(0.0);
                let wa: f64 = a.iter().map(|t| w(t)).sum();
                let wb: f64 = b.iter().map(|t| w(t)).sum();
                let mut common = 0.0;
                intersect(a, b, |t| common += w(t));
                let denom = wa.min(wb);
                if denom <= 0.0 {
                    return if common > 0.0 { 1.0 } else { 0.0 };
                }
                (common / denom).clamp(0.0, 1.0)
            }
        }
    }
}

/// Ordered episodic memory owned by one actor.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct MemoryBank {
    records: VecDeque<MemoryRecord>,
    capacity: Option<usize>,
    evictions: u64,
}

impl MemoryBank {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity_limit(capacity: usize) -> Self {
        Self {
            capacity: Some(capacity.max(1)),
            ..Self::default()
        }
    }

    pub fn from_records(records: impl IntoIterator<Item = MemoryRecord>) -> Result<Self> {
        let mut bank = Self::new();
        for r in records {
            bank.write(r)?;
        }
        Ok(bank)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn capacity(&self) -> Option<usize> {
        self.capacity
    }

    pub fn set_capacity(&mut self, capacity: Option<usize>) {
        self.capacity = capacity.map(|c| c.max(1));
        self.enforce_capacity();
    }

    pub fn evictions(&self) -> u64 {
        self.evictions
    }

    pub fn records(&self) -> impl DoubleEndedIterator<Item = &MemoryRecord> + ExactSizeIterator {
        self.records.iter()
    }

    pub fn get(&self, index: usize) -> Option<&MemoryRecord> {
        self.records.get(index)
    }

    pub(crate) fn get_mut(&mut self, index: usize) -> Option<&mut MemoryRecord> {
        self.records.get_mut(index)
    }

    pub fn last_time(&self) -> Option<u64> {
        self.records.back().map(|r| r.time)
    }

    /// Append `record` (re-rendered), evicting the oldest entries past capacity.
    pub fn write(&mut self, mut record: MemoryRecord) -> Result<()> {
        if let Some(last) = self.last_time() {
            if record.time < last {
                return Err(Error::TimeRegression {
                    last,
                    got: record.time,
                });
            }
        }
        record.rerender();
        self.records.push_back(record);
        self.enforce_capacity();
        Ok(())
    }

    /// Pure form of [`MemoryBank::write`].
    pub fn with_record(&self, record: MemoryRecord) -> Result<Self> {
        let mut next = self.clone();
        next.write(record)?;
        Ok(next)
    }

    fn enforce_capacity(&mut self) {
        if let Some(cap) = self.capacity {
            while self.records.len() > cap {
                self.records.pop_front();
                self.evictions += 1;
            }
        }
    }

    /// Most similar record; ties go to the latest time, then the latest append.
    pub fn retrieve(&self, query: &SymbolSeq, metric: &SimilarityMetric) -> Option<&MemoryRecord> {
        self.retrieve_top_k(query, metric, 1).into_iter().next()
    }

    /// Up to `k` records in descending similarity with the same tie-break.
    pub fn retrieve_top_k(
        &self,
        query: &SymbolSeq,
        metric: &SimilarityMetric,
        k: usize,
    ) -> Vec<&MemoryRecord> {
        if k == 0 || self.records.is_empty() {
            return Vec::new();
        }
        let q = token_set(query);
        let mut scored: Vec<(f64, u64, usize)> = self
            .records
            .iter()
            .enumerate()
            .map(|(i, r)| {
                (
                    metric.similarity_sets(&q, &token_set(&r.rendering)),
                    r.time,
                    i,
                )
            })
            .collect();
        scored.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap_or(Ordering::Equal)
                .then(b.1.cmp(&a.1))
                .then(b.2.cmp(&a.2))
        });
        scored
            .into_iter()
            .take(k)
            .map(|(_, _, i)| &self.records[i])
            .collect()
    }

    /// One JSON object per line, in append order.
    pub fn dump_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn load_jsonl<R: BufRead>(input: R) -> Result<Self> {
        let mut bank = Self::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: MemoryRecord = serde_json::from_str(&line)
                .map_err(|e| Error::Parse(format!("memory line {}: {e}", i + 1)))?;
            bank.write(rec)?;
        }
        Ok(bank)
    }
}
