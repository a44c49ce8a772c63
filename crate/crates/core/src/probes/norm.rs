use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::kl_divergence;
use super::sensitivity::{convention_sensitivity_contextual, ProbeOptions};
use crate::actor::Actor;
use crate::env::Event;
use crate::error::{Error, Result};
use crate::record::Valence;
use crate::scalar::Scalar;
use crate::symbols::SymbolSeq;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    /// Minimum sanction-rate gap.
    pub rate: f64,
    /// Minimum fraction of sampled sanctioners whose sanctioning is conventional.
    pub conv: f64,
    /// Minimum fraction of sanctions between strangers.
    pub scope: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            rate: 0.3,
            conv: 0.6,
            scope: 0.5,
        }
    }
}

#[derive(Clone, Debug)]
pub struct NormQuery<S: Scalar> {
    pub context: SymbolSeq,
    pub action: SymbolSeq,
    pub alternative: SymbolSeq,
    pub thresholds: Thresholds,
    pub min_ticks: u64,
    /// Sanctioners checked for conventional sanctioning.
    pub sample: usize,
    /// What a sanctioner could do instead of sanctioning; otherwise another
    /// of its action candidates.
    pub sanction_alternative: Option<SymbolSeq>,
    pub grid: Vec<f64>,
    /// `probe` (if set) decides which observations are ε-similar to the
    /// context; otherwise observations must equal it.
    pub options: ProbeOptions<S>,
}

impl<S: Scalar> NormQuery<S> {
    pub fn new(context: SymbolSeq, action: SymbolSeq, alternative: SymbolSeq) -> Self {
        Self {
            context,
            action,
            alternative,
            thresholds: Thresholds::default(),
            min_ticks: 1,
            sample: 5,
            sanction_alternative: None,
            grid: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            options: ProbeOptions::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormVerdict {
    NormativeProA,
    NormativeProAlternative,
    NotNormative,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SanctionerCheck {
    pub id: String,
    pub conventional: bool,
    pub note: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NormEvidence {
    pub occurrences_action: usize,
    pub occurrences_alternative: usize,
    pub disapproved_action: usize,
    pub disapproved_alternative: usize,
    pub approved_action: usize,
    pub approved_alternative: usize,
    /// Positive favors the action, negative the alternative.
    pub rate_gap: f64,
    pub sanction_events: usize,
    pub sanctioners: Vec<SanctionerCheck>,
    pub conventional_fraction: f64,
    pub stranger_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub verdict: NormVerdict,
    pub thresholds: Thresholds,
    pub evidence: NormEvidence,
}

fn rate(k: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        k as f64 / n as f64
    }
}

/// Whether actors `x` and `y` have any memory of each other before `tick`.
fn acquainted<S: Scalar>(x: &Actor<S>, y: &Actor<S>, tick: u64) -> bool {
    let knows = |owner: &Actor<S>, other: &str| {
        owner.bank.records().any(|r| {
            r.time < tick
                && match &r.sanction {
                    Some(s) => {
                        (r.subject == other && s.by == owner.id)
                            || (r.subject == owner.id && s.by == other)
                    }
                    None => r.subject == other,
                }
        })
    };
    knows(x, &y.id) || knows(y, &x.id)
}

/// Three-stage norm classification over an event log.
///
/// 1. Sanction rates following the action and the alternative in contexts
///    matching `query.context`.
/// 2. For a seeded sample of sanctioners, whether their sanctioning is itself
///    reproduced from precedent (contextual convention sensitivity).
/// 3. The share of sanctions between actors with no prior interaction.
pub fn classify_norm<S: Scalar>(
    log: &[Event],
    population: &[Actor<S>],
    query: &NormQuery<S>,
) -> Result<NormReport> {
    let span = log.iter().map(|e| e.tick() + 1).max().unwrap_or(0);
    if span < query.min_ticks {
        return Err(Error::InsufficientData(format!(
            "log covers {span} ticks, need {}",
            query.min_ticks
        )));
    }
    let pair = [query.action.clone(), query.alternative.clone()];
    let mut similar_cache: HashMap<SymbolSeq, bool> = HashMap::new();
    let base = match &query.options.probe {
        Some(p) => Some(p.score(&query.context, &pair)?),
        None => None,
    };
    let mut relevant = |obs: &SymbolSeq| -> Result<bool> {
        if let Some(&hit) = similar_cache.get(obs) {
            return Ok(hit);
        }
        let hit = match (&query.options.probe, &base) {
            (Some(p), Some(b)) => {
                kl_divergence(b, &p.score(obs, &pair)?)? < S::lit(query.options.epsilon)
            }
            _ => *obs == query.context,
        };
        similar_cache.insert(obs.clone(), hit);
        Ok(hit)
    };

    let mut observed: HashMap<(u64, &str), &SymbolSeq> = HashMap::new();
    let mut acted: HashMap<(u64, &str), &SymbolSeq> = HashMap::new();
    for e in log {
        match e {
            Event::Observe {
                tick,
                actor,
                observation,
            } => {
                observed.insert((*tick, actor.as_str()), observation);
            }
            Event::Act {
                tick,
                actor,
                action,
                ..
            } => {
                acted.insert((*tick, actor.as_str()), action);
            }
            _ => {}
        }
    }

    let mut ev = NormEvidence::default();
    // (tick, actor) of relevant acts -> true for the action, false for the alternative
    let mut focal: HashMap<(u64, &str), bool> = HashMap::new();
    for e in log {
        if let Event::Act {
            tick,
            actor,
            action,
            ..
        } = e
        {
            let is_a = *action == query.action;
            if !is_a && *action != query.alternative {
                continue;
            }
            let Some(obs) = observed.get(&(*tick, actor.as_str())) else {
                continue;
            };
            if !relevant(obs)? {
                continue;
            }
            focal.insert((*tick, actor.as_str()), is_a);
            if is_a {
                ev.occurrences_action += 1;
            } else {
                ev.occurrences_alternative += 1;
            }
        }
    }

    let mut sanctions = Vec::new();
    for e in log {
        if let Event::Sanction {
            tick,
            target,
            by,
            valence,
            ..
        } = e
        {
            let Some(&is_a) = focal.get(&(*tick, target.as_str())) else {
                continue;
            };
            match (valence, is_a) {
                (Valence::Disapprove, true) => ev.disapproved_action += 1,
                (Valence::Disapprove, false) => ev.disapproved_alternative += 1,
                (Valence::Approve, true) => ev.approved_action += 1,
                (Valence::Approve, false) => ev.approved_alternative += 1,
                (Valence::Unlabeled, _) => {}
            }
            sanctions.push((*tick, target.as_str(), by.as_str()));
        }
    }
    ev.sanction_events = sanctions.len();
    let (na, nb) = (ev.occurrences_action, ev.occurrences_alternative);
    ev.rate_gap = (rate(ev.disapproved_alternative, nb) - rate(ev.disapproved_action, na))
        + (rate(ev.approved_action, na) - rate(ev.approved_alternative, nb));

    let find = |id: &str| population.iter().find(|a| a.id == id);

    // Stage 2: conventional sanctioning.
    let mut first_sanction: BTreeMap<&str, u64> = BTreeMap::new();
    for &(tick, _, by) in &sanctions {
        first_sanction.entry(by).or_insert(tick);
    }
    let mut ids: Vec<&str> = first_sanction.keys().copied().collect();
    ids.shuffle(&mut query.options.seed.child("sanctioners").rng());
    ids.truncate(query.sample);
    ids.sort_unstable();
    for id in ids {
        let tick = first_sanction[id];
        let mut check = SanctionerCheck {
            id: id.to_string(),
            ..SanctionerCheck::default()
        };
        let outcome = (|| -> Result<bool> {
            let actor = find(id).ok_or_else(|| Error::UnknownActor(id.to_string()))?;
            let o = observed.get(&(tick, id)).ok_or_else(|| {
                Error::InsufficientData(format!("no observation of {id} at {tick}"))
            })?;
            let a = acted
                .get(&(tick, id))
                .ok_or_else(|| Error::InsufficientData(format!("no action of {id} at {tick}")))?;
            let alt = match &query.sanction_alternative {
                Some(s) => s.clone(),
                None => actor
                    .action_candidates()?
                    .iter()
                    .find(|c| c != a)
                    .cloned()
                    .ok_or_else(|| Error::InvalidCandidates(format!("{id} has a single action")))?,
            };
            let r = convention_sensitivity_contextual(
                actor,
                &SymbolSeq::new(),
                o,
                a,
                &alt,
                &query.grid,
                &query.options,
            )?;
            Ok(r.verdict)
        })();
        match outcome {
            Ok(v) => check.conventional = v,
            Err(e) if e.is_backend() => return Err(e),
            Err(e) => check.note = Some(e.to_string()),
        }
        ev.sanctioners.push(check);
    }
    ev.conventional_fraction = rate(
        ev.sanctioners.iter().filter(|c| c.conventional).count(),
        ev.sanctioners.len(),
    );

    // Stage 3: scope.
    let mut strangers = 0;
    for &(tick, target, by) in &sanctions {
        let stranger = match (find(target), find(by)) {
            (Some(x), Some(y)) => !acquainted(x, y, tick),
            _ => true,
        };
        strangers += usize::from(stranger);
    }
    ev.stranger_fraction = rate(strangers, sanctions.len());

    let th = query.thresholds;
    let scoped = ev.conventional_fraction >= th.conv && ev.stranger_fraction >= th.scope;
    let verdict = if !scoped || sanctions.is_empty() {
        NormVerdict::NotNormative
    } else if ev.rate_gap >= th.rate {
        NormVerdict::NormativeProA
    } else if ev.rate_gap <= -th.rate {
        NormVerdict::NormativeProAlternative
    } else {
        NormVerdict::NotNormative
    };
    Ok(NormReport {
        verdict,
        thresholds: th,
        evidence: ev,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::normalize;

    fn act(tick: u64, actor: &str, action: &str) -> [Event; 2] {
        [
            Event::Observe {
                tick,
                actor: actor.into(),
                observation: normalize("a path"),
            },
            Event::Act {
                tick,
                actor: actor.into(),
                role: "walker".into(),
                action: normalize(action),
            },
        ]
    }

    fn sanction(tick: u64, target: &str, action: &str) -> Event {
        Event::Sanction {
            tick,
            target: target.into(),
            by: "e".into(),
            action: normalize(action),
            signal: normalize("rude"),
            valence: Valence::Disapprove,
            witnesses: vec![],
        }
    }

    fn query() -> NormQuery<f64> {
        NormQuery::new(
            normalize("a path"),
            normalize("keep right"),
            normalize("keep left"),
        )
    }

    #[test]
    fn no_sanctions_is_not_normative() {
        let log: Vec<Event> = (0..4).flat_map(|t| act(t, "w", "keep right")).collect();
        let r = classify_norm::<f64>(&log, &[], &query()).unwrap();
        assert_eq!(r.verdict, NormVerdict::NotNormative);
        assert_eq!(r.evidence.occurrences_action, 4);
    }

    #[test]
    fn symmetric_sanctioning_has_no_gap() {
        let mut log: Vec<Event> = Vec::new();
        for t in 0..4 {
            let a = if t % 2 == 0 {
                "keep right"
            } else {
                "keep left"
            };
            log.extend(act(t, "w", a));
            log.push(sanction(t, "w", a));
        }
        let r = classify_norm::<f64>(&log, &[], &query()).unwrap();
        assert_eq!(r.evidence.rate_gap, 0.0);
        assert_eq!(r.verdict, NormVerdict::NotNormative);
    }

    #[test]
    fn short_log_is_insufficient() {
        let q = NormQuery {
            min_ticks: 10,
            ..query()
        };
        assert!(matches!(
            classify_norm::<f64>(&[], &[], &q),
            Err(Error::InsufficientData(_))
        ));
    }
}
