//! Offline replay of memory records into table weights.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::actor::Actor;
use crate::error::{Error, Result};
use crate::memory::MemoryBank;
use crate::pcn::{CompletionDistribution, Pcn, TablePcn};
use crate::probes::Mass;
use crate::record::MemoryRecord;
use crate::scalar::Scalar;
use crate::symbols::SymbolSeq;

/// Which records are replayed.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecordFilter {
    #[default]
    All,
    Unsanctioned,
    Sanctioned,
    Subject(String),
    /// Records of the observer's own actions.
    Own,
}

impl RecordFilter {
    pub fn admits(&self, r: &MemoryRecord) -> bool {
        match self {
            RecordFilter::All => true,
            RecordFilter::Unsanctioned => r.sanction.is_none(),
            RecordFilter::Sanctioned => r.sanction.is_some(),
            RecordFilter::Subject(s) => r.subject == *s,
            RecordFilter::Own => r.subject == r.observer,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConsolidationConfig {
    #[serde(default = "default_passes")]
    pub replay_passes: u32,
    #[serde(default = "default_rate")]
    pub learning_rate: f64,
    #[serde(default)]
    pub filter: RecordFilter,
}

fn default_passes() -> u32 {
    10
}

fn default_rate() -> f64 {
    0.1
}

/// Upper bound on `learning_rate · replay_passes`.
pub const MAX_TOTAL_RATE: f64 = 100.0;

impl Default for ConsolidationConfig {
    fn default() -> Self {
        Self {
            replay_passes: default_passes(),
            learning_rate: default_rate(),
            filter: RecordFilter::All,
        }
    }
}

impl ConsolidationConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(Error::InvalidArgument(
                "learning rate must be positive".into(),
            ));
        }
        if self.learning_rate * f64::from(self.replay_passes) > MAX_TOTAL_RATE {
            return Err(Error::InvalidArgument(format!(
                "learning_rate * replay_passes exceeds {MAX_TOTAL_RATE}"
            )));
        }
        Ok(())
    }
}

/// Replay `records` into a copy of `table`:
/// `w[f, action] += η` for every feature `f` of each admitted record's
/// observation, once per pass.
pub fn consolidate_records<'a, S: Scalar>(
    table: &TablePcn<S>,
    records: impl IntoIterator<Item = &'a MemoryRecord>,
    cfg: &ConsolidationConfig,
) -> Result<TablePcn<S>> {
    cfg.validate()?;
    let records: Vec<&MemoryRecord> = records
        .into_iter()
        .filter(|r| cfg.filter.admits(r))
        .collect();
    let mut out = table.next_version();
    let eta = S::lit(cfg.learning_rate);
    for _ in 0..cfg.replay_passes {
        for r in &records {
            let key = r.action.render();
            for f in table.extractor().features(&r.observation) {
                out.add_weight(&f, &key, eta)?;
            }
        }
    }
    Ok(out)
}

/// Replay a bank into a table model. Remote models are read-only.
pub fn consolidate<S: Scalar>(
    pcn: &dyn Pcn<S>,
    bank: &MemoryBank,
    cfg: &ConsolidationConfig,
) -> Result<TablePcn<S>> {
    let table = pcn
        .as_table()
        .ok_or_else(|| Error::BackendUnsupported("consolidation of a non-table model".into()))?;
    consolidate_records(table, bank.records(), cfg)
}

fn masses<S: Scalar>(d: &CompletionDistribution<S>) -> Vec<Mass> {
    d.iter()
        .map(|(c, p)| Mass {
            candidate: c.render(),
            prob: p.as_f64(),
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    /// Total variation between the explicit (retrieval on) and implicit
    /// (retrieval off) policies before consolidation.
    pub pre_gap: f64,
    pub post_gap: f64,
    pub pre_explicit: Vec<Mass>,
    pub pre_implicit: Vec<Mass>,
    pub post_explicit: Vec<Mass>,
    pub post_implicit: Vec<Mass>,
    pub table_version: u32,
}

fn with_pcn<S: Scalar>(actor: &Actor<S>, pcn: TablePcn<S>) -> Actor<S> {
    let mut a = actor.clone();
    a.pcn = Arc::new(pcn);
    a
}

/// Explicit-versus-implicit policy gap on `observation`, before and after
/// consolidating the actor's own bank.
pub fn implicit_explicit_gap<S: Scalar>(
    actor: &Actor<S>,
    observation: &SymbolSeq,
    cfg: &ConsolidationConfig,
) -> Result<GapReport> {
    let empty = SymbolSeq::new();
    let paths = |a: &Actor<S>| -> Result<(CompletionDistribution<S>, CompletionDistribution<S>)> {
        let explicit = a.clone().with_retrieval(true);
        let implicit = a.clone().with_retrieval(false);
        Ok((
            explicit.pipeline_distribution(&a.bank, observation, &empty)?,
            implicit.pipeline_distribution(&a.bank, observation, &empty)?,
        ))
    };
    let (pre_e, pre_i) = paths(actor)?;
    let table = consolidate(actor.pcn.as_ref(), &actor.bank, cfg)?;
    let version = table.version();
    let post = with_pcn(actor, table);
    let (post_e, post_i) = paths(&post)?;
    Ok(GapReport {
        pre_gap: pre_e.total_variation(&pre_i)?.as_f64(),
        post_gap: post_e.total_variation(&post_i)?.as_f64(),
        pre_explicit: masses(&pre_e),
        pre_implicit: masses(&pre_i),
        post_explicit: masses(&post_e),
        post_implicit: masses(&post_i),
        table_version: version,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrecedenceReport {
    /// `p(a|c) − p(a|c⊕s)` on the original table.
    pub delta_pre: f64,
    /// The same on the consolidated table.
    pub delta_post: f64,
    pub verdict: bool,
}

/// Does an in-context contradiction `s` move the consolidated model strictly
/// less than the original one?
pub fn precedence_test<S: Scalar>(
    table: &TablePcn<S>,
    bank: &MemoryBank,
    s: &SymbolSeq,
    c: &SymbolSeq,
    a: &SymbolSeq,
    candidates: &[SymbolSeq],
    cfg: &ConsolidationConfig,
) -> Result<PrecedenceReport> {
    if !candidates.contains(a) {
        return Err(Error::InvalidCandidates(format!(
            "{:?} not among candidates",
            a.render()
        )));
    }
    let post = consolidate_records(table, bank.records(), cfg)?;
    let cs = c.with_line(s);
    let delta = |t: &TablePcn<S>| -> Result<S> {
        let before = t.score(c, candidates)?.prob(a).expect("candidate present");
        let after = t
            .score(&cs, candidates)?
            .prob(a)
            .expect("candidate present");
        Ok(before - after)
    };
    let pre = delta(table)?;
    let post = delta(&post)?;
    Ok(PrecedenceReport {
        delta_pre: pre.as_f64(),
        delta_post: post.as_f64(),
        verdict: post < pre,
    })
}
