//! The linguistic multi-actor environment: a turn-based controlled process
//! over symbol sequences.

mod pattern;
mod rules;

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::sync::Arc;

use rand::seq::IndexedRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use pattern::TokenPattern;
pub use rules::{fill, Condition, Quantifier, SanctionClause, TransitionRule};

use crate::actor::{check_id, ActOutcome, Actor};
use crate::error::{Error, Result};
use crate::pcn::{CompletionDistribution, Pcn};
use crate::record::{MemoryRecord, Sanction, Valence};
use crate::scalar::Scalar;
use crate::seed::SeedStream;
use crate::symbols::SymbolSeq;
use crate::workspace::GlobalWorkspace;

/// One log entry. Serialized as a JSON object tagged by `kind`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Event {
    Insert {
        tick: u64,
        actor: String,
    },
    Observe {
        tick: u64,
        actor: String,
        observation: SymbolSeq,
    },
    Act {
        tick: u64,
        actor: String,
        role: String,
        action: SymbolSeq,
    },
    Transition {
        tick: u64,
        rule: String,
        scene: SymbolSeq,
    },
    Sanction {
        tick: u64,
        target: String,
        by: String,
        action: SymbolSeq,
        signal: SymbolSeq,
        valence: Valence,
        witnesses: Vec<String>,
    },
}

impl Event {
    pub fn tick(&self) -> u64 {
        match self {
            Event::Insert { tick, .. }
            | Event::Observe { tick, .. }
            | Event::Act { tick, .. }
            | Event::Transition { tick, .. }
            | Event::Sanction { tick, .. } => *tick,
        }
    }
}

pub fn write_events<W: Write>(events: &[Event], mut out: W) -> Result<()> {
    for e in events {
        serde_json::to_writer(&mut out, e)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_events<R: BufRead>(input: R) -> Result<Vec<Event>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| Error::Parse(format!("event line {}: {e}", i + 1)))?,
        );
    }
    Ok(out)
}

/// Who receives a memory record of a sanction event.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WitnessPolicy {
    #[default]
    All,
    Roles(Vec<String>),
    None,
}

impl WitnessPolicy {
    fn admits(&self, role: &str) -> bool {
        match self {
            WitnessPolicy::All => true,
            WitnessPolicy::Roles(rs) => rs.iter().any(|r| r == role),
            WitnessPolicy::None => false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Lmae<S: Scalar = f64> {
    tick: u64,
    scene: SymbolSeq,
    actors: Vec<Actor<S>>,
    pending: Vec<(u64, Actor<S>)>,
    rules: Vec<TransitionRule>,
    views: BTreeMap<String, String>,
    witness: WitnessPolicy,
    narrator: Option<Arc<dyn Pcn<S>>>,
    seed: SeedStream,
    log: Vec<Event>,
}

impl<S: Scalar> Lmae<S> {
    pub fn new(scene: SymbolSeq, root_seed: u64) -> Self {
        Self {
            tick: 0,
            scene,
            actors: Vec::new(),
            pending: Vec::new(),
            rules: Vec::new(),
            views: BTreeMap::new(),
            witness: WitnessPolicy::All,
            narrator: None,
            seed: SeedStream::new(root_seed),
            log: Vec::new(),
        }
    }

    /// Rules in priority order; a catch-all identity rule is appended when
    /// the last rule is not already one.
    pub fn with_rules(mut self, mut rules: Vec<TransitionRule>) -> Self {
        if !rules.last().is_some_and(TransitionRule::is_catch_all) {
            rules.push(TransitionRule::identity());
        }
        self.rules = rules;
        self
    }

    /// Observation template for actors of `role`; slots `{scene}`, `{id}`, `{role}`.
    pub fn with_view(mut self, role: &str, template: &str) -> Self {
        self.views.insert(role.to_string(), template.to_string());
        self
    }

    pub fn with_witness_policy(mut self, policy: WitnessPolicy) -> Self {
        self.witness = policy;
        self
    }

    /// Scene updates produced by a generative model after each transition.
    pub fn with_narrator(mut self, narrator: Arc<dyn Pcn<S>>) -> Self {
        self.narrator = Some(narrator);
        self
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn scene(&self) -> &SymbolSeq {
        &self.scene
    }

    pub fn actors(&self) -> &[Actor<S>] {
        &self.actors
    }

    pub fn actor(&self, id: &str) -> Option<&Actor<S>> {
        self.actors.iter().find(|a| a.id == id)
    }

    pub fn actor_mut(&mut self, id: &str) -> Option<&mut Actor<S>> {
        self.actors.iter_mut().find(|a| a.id == id)
    }

    pub fn rules(&self) -> &[TransitionRule] {
        &self.rules
    }

    pub fn log(&self) -> &[Event] {
        &self.log
    }

    fn id_taken(&self, id: &str) -> bool {
        self.actors.iter().any(|a| a.id == id) || self.pending.iter().any(|(_, a)| a.id == id)
    }

    fn seat(&self, actor: Actor<S>) -> Actor<S> {
        let seed = self.seed.child("actor").child(&actor.id);
        actor.with_seed(seed)
    }

    /// Add an actor present from the current tick.
    pub fn add_actor(&mut self, actor: Actor<S>) -> Result<()> {
        check_id(&actor.id)?;
        if self.id_taken(&actor.id) {
            return Err(Error::DuplicateId(actor.id));
        }
        let a = self.seat(actor);
        self.actors.push(a);
        Ok(())
    }

    /// Schedule `actor` to join at the start of tick `at_tick`.
    pub fn insert_actor(&mut self, actor: Actor<S>, at_tick: u64) -> Result<()> {
        check_id(&actor.id)?;
        if at_tick < self.tick {
            return Err(Error::InvalidArgument(format!(
                "insertion tick {at_tick} is before current tick {}",
                self.tick
            )));
        }
        if self.id_taken(&actor.id) {
            return Err(Error::DuplicateId(actor.id));
        }
        let a = self.seat(actor);
        self.pending.push((at_tick, a));
        Ok(())
    }

    /// What `actor` observes this tick.
    pub fn observation_for(&self, actor: &Actor<S>) -> SymbolSeq {
        let scene = self.scene.render();
        match self.views.get(&actor.role) {
            Some(t) => fill(
                t,
                &[("scene", &scene), ("id", &actor.id), ("role", &actor.role)],
            ),
            None => self.scene.clone(),
        }
    }

    /// One full turn: join, observe, act (in parallel), transition, sanction.
    pub fn step(&mut self) -> Result<()> {
        let t = self.tick;
        let (joining, later): (Vec<_>, Vec<_>) = std::mem::take(&mut self.pending)
            .into_iter()
            .partition(|(at, _)| *at <= t);
        self.pending = later;
        for (_, a) in joining {
            self.log.push(Event::Insert {
                tick: t,
                actor: a.id.clone(),
            });
            self.actors.push(a);
        }

        let observations: Vec<SymbolSeq> = self
            .actors
            .iter()
            .map(|a| self.observation_for(a))
            .collect();
        for (a, o) in self.actors.iter().zip(&observations) {
            self.log.push(Event::Observe {
                tick: t,
                actor: a.id.clone(),
                observation: o.clone(),
            });
        }

        let outcomes: Vec<ActOutcome> = self
            .actors
            .par_iter_mut()
            .zip(observations.par_iter())
            .map(|(a, o)| a.act_cycle(o, t))
            .collect::<Result<_>>()?;
        for (a, out) in self.actors.iter().zip(&outcomes) {
            self.log.push(Event::Act {
                tick: t,
                actor: a.id.clone(),
                role: a.role.clone(),
                action: out.action.clone(),
            });
        }

        let profile: Vec<(&str, &SymbolSeq)> = self
            .actors
            .iter()
            .zip(&outcomes)
            .map(|(a, o)| (a.role.as_str(), &o.action))
            .collect();
        let rule = self
            .rules
            .iter()
            .find(|r| r.matches(&self.scene, &profile))
            .cloned()
            .ok_or(Error::RuleGap { tick: t })?;

        let mut scene = match &rule.effect {
            Some(e) => fill(e, &[("scene", &self.scene.render())]),
            None => self.scene.clone(),
        };
        if let Some(n) = &self.narrator {
            scene = n.generate(&scene, 1.0, self.seed.child("narrate").child(t).derive())?;
        }
        self.scene = scene;
        for (role, view) in &rule.views {
            self.views.insert(role.clone(), view.clone());
        }
        self.log.push(Event::Transition {
            tick: t,
            rule: rule.name.clone(),
            scene: self.scene.clone(),
        });

        if let Some(clause) = &rule.sanction {
            self.apply_sanctions(clause, t, &observations, &outcomes)?;
        }
        self.tick += 1;
        Ok(())
    }

    fn apply_sanctions(
        &mut self,
        clause: &SanctionClause,
        t: u64,
        observations: &[SymbolSeq],
        outcomes: &[ActOutcome],
    ) -> Result<()> {
        let n = self.actors.len();
        for target in 0..n {
            let ta = &self.actors[target];
            if clause.target_role.as_deref().is_some_and(|r| r != ta.role)
                || !clause.trigger.matches(&outcomes[target].action)
            {
                continue;
            }
            let eligible: Vec<usize> = (0..n)
                .filter(|&j| {
                    j != target
                        && self.actors[j].role == clause.sanctioner_role
                        && clause
                            .sanctioner_action
                            .as_ref()
                            .is_none_or(|p| p.matches(&outcomes[j].action))
                })
                .collect();
            let mut rng = self.seed.child("sanction").child(t).child(&ta.id).rng();
            let Some(&by) = eligible.choose(&mut rng) else {
                continue;
            };
            let target_id = ta.id.clone();
            let by_id = self.actors[by].id.clone();
            let action = outcomes[target].action.clone();
            let signal = fill(
                &clause.signal,
                &[
                    ("action", &action.render()),
                    ("target", &target_id),
                    ("sanctioner", &by_id),
                ],
            );
            let base = MemoryRecord::new(
                t,
                "",
                target_id.clone(),
                observations[target].clone(),
                action.clone(),
            )
            .with_sanction(Sanction {
                by: by_id.clone(),
                signal: signal.clone(),
                valence: clause.valence,
            });
            let mut witnesses = Vec::new();
            for w in self.actors.iter_mut() {
                if w.witness && self.witness.admits(&w.role) {
                    let mut r = base.clone();
                    r.observer = w.id.clone();
                    w.bank.write(r)?;
                    witnesses.push(w.id.clone());
                }
            }
            self.log.push(Event::Sanction {
                tick: t,
                target: target_id,
                by: by_id,
                action,
                signal,
                valence: clause.valence,
                witnesses,
            });
        }
        Ok(())
    }

    /// `ticks` applications of [`Lmae::step`].
    pub fn run(&mut self, ticks: u64) -> Result<()> {
        for _ in 0..ticks {
            self.step()?;
        }
        Ok(())
    }
}

/// Product distribution over joint action tuples.
#[derive(Clone, Debug, PartialEq)]
pub struct JointDistribution<S: Scalar> {
    pub members: Vec<CompletionDistribution<S>>,
}

impl<S: Scalar> JointDistribution<S> {
    /// Every joint tuple (first actor varies slowest) with its probability.
    pub fn tuples(&self) -> Vec<(Vec<SymbolSeq>, S)> {
        let mut out: Vec<(Vec<SymbolSeq>, S)> = vec![(Vec::new(), S::one())];
        for d in &self.members {
            let mut next = Vec::with_capacity(out.len() * d.len());
            for (prefix, p) in &out {
                for (c, q) in d.iter() {
                    let mut tup = prefix.clone();
                    tup.push(c.clone());
                    next.push((tup, *p * q));
                }
            }
            out = next;
        }
        out
    }

    pub fn prob(&self, tuple: &[SymbolSeq]) -> Option<S> {
        if tuple.len() != self.members.len() {
            return None;
        }
        self.members
            .iter()
            .zip(tuple)
            .try_fold(S::one(), |acc, (d, c)| d.prob(c).map(|p| acc * p))
    }

    pub fn marginal(&self, i: usize) -> Option<&CompletionDistribution<S>> {
        self.members.get(i)
    }
}

/// Joint policy of a collective: each actor's policy on its own workspace,
/// combined as a product.
pub fn collective_policy<S: Scalar>(
    actors: &[&Actor<S>],
    workspaces: &[GlobalWorkspace],
) -> Result<JointDistribution<S>> {
    if actors.len() != workspaces.len() {
        return Err(Error::InvalidArgument(format!(
            "{} actors but {} workspaces",
            actors.len(),
            workspaces.len()
        )));
    }
    let members = actors
        .iter()
        .zip(workspaces)
        .map(|(a, ws)| a.policy_distribution(ws))
        .collect::<Result<_>>()?;
    Ok(JointDistribution { members })
}
