use std::sync::Arc;

use itertools::Itertools;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{edit_count, matching_records, rewrite, EditSpec, Matcher, DEFAULT_EPSILON};
use crate::actor::Actor;
use crate::error::{Error, Result};
use crate::memory::MemoryBank;
use crate::pcn::{CompletionDistribution, Pcn};
use crate::record::{MemoryRecord, Sanction, Valence, UNKNOWN_SUBJECT};
use crate::scalar::Scalar;
use crate::seed::SeedStream;
use crate::symbols::SymbolSeq;

/// Knobs shared by the actor-level probes.
#[derive(Clone, Debug)]
pub struct ProbeOptions<S: Scalar> {
    pub matcher: Matcher,
    pub epsilon: f64,
    /// Model for ε checks; the actor's own model when absent.
    pub probe: Option<Arc<dyn Pcn<S>>>,
    pub seed: SeedStream,
    /// Monte Carlo shuffles per intermediate grid point.
    pub shuffles: usize,
    /// Enumerate every edit subset when at most this many records match.
    pub exact_limit: usize,
    pub force_monte_carlo: bool,
    /// Records injected by the sanction-sensitivity probe.
    pub injected: usize,
}

impl<S: Scalar> Default for ProbeOptions<S> {
    fn default() -> Self {
        Self {
            matcher: Matcher::ExactField,
            epsilon: DEFAULT_EPSILON,
            probe: None,
            seed: SeedStream::new(0).child("probe"),
            shuffles: 32,
            exact_limit: 8,
            force_monte_carlo: false,
            injected: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mass {
    pub candidate: String,
    pub prob: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub fraction: f64,
    /// Records rewritten at this fraction.
    pub edited: usize,
    /// Expected policy distribution over edit draws.
    pub distribution: Vec<Mass>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub probe: String,
    pub action: String,
    pub alternative: Option<String>,
    pub matches: usize,
    pub baseline: Vec<Mass>,
    pub points: Vec<GridPoint>,
    pub delta_action: f64,
    pub delta_alternative: Option<f64>,
    pub monotone: Option<bool>,
    /// Whether intermediate points were enumerated exactly.
    pub exact: bool,
    pub verdict: bool,
}

impl SensitivityReport {
    pub fn prob_at(&self, point: usize, candidate: &str) -> Option<f64> {
        self.points
            .get(point)?
            .distribution
            .iter()
            .find(|m| m.candidate == candidate)
            .map(|m| m.prob)
    }
}

fn masses<S: Scalar>(cands: &[SymbolSeq], probs: &[S]) -> Vec<Mass> {
    cands
        .iter()
        .zip(probs)
        .map(|(c, p)| Mass {
            candidate: c.render(),
            prob: p.as_f64(),
        })
        .collect()
}

fn probe_model<'a, S: Scalar>(actor: &'a Actor<S>, opts: &'a ProbeOptions<S>) -> &'a dyn Pcn<S> {
    opts.probe.as_deref().unwrap_or(actor.pcn.as_ref())
}

fn require_candidates<S: Scalar>(
    actor: &Actor<S>,
    needed: &[&SymbolSeq],
) -> Result<Vec<SymbolSeq>> {
    let cands = actor.action_candidates()?.to_vec();
    for n in needed {
        if !cands.contains(n) {
            return Err(Error::InvalidCandidates(format!(
                "{:?} is not an action candidate of {}",
                n.render(),
                actor.id
            )));
        }
    }
    Ok(cands)
}

fn aligned<S: Scalar>(cands: &[SymbolSeq], d: &CompletionDistribution<S>) -> Result<Vec<S>> {
    cands
        .iter()
        .map(|c| d.prob(c).ok_or(Error::CandidateMismatch))
        .collect()
}

/// Expected pipeline distribution (in `actor.action_candidates()` order) after
/// `R_f` with `spec.fraction`, plus the edit size and whether the expectation
/// was enumerated exactly.
pub fn expected_edit_distribution<S: Scalar>(
    actor: &Actor<S>,
    bank: &MemoryBank,
    spec: &EditSpec,
    opts: &ProbeOptions<S>,
) -> Result<(Vec<S>, usize, bool)> {
    let cands = actor.action_candidates()?.to_vec();
    let h = matching_records(bank, spec, Some(probe_model(actor, opts)))?;
    let n = edit_count(spec.fraction, h.len());
    let eval = |subset: &[usize]| -> Result<Vec<S>> {
        let edited = rewrite(bank, subset, &spec.to);
        aligned(
            &cands,
            &actor.pipeline_distribution(&edited, &spec.observation, &spec.context)?,
        )
    };
    let mean = |rows: Vec<Vec<S>>| -> Vec<S> {
        let k = S::from_usize(rows.len()).expect("count fits scalar");
        (0..cands.len())
            .map(|j| rows.iter().map(|r| r[j]).sum::<S>() / k)
            .collect()
    };
    if n == 0 || n == h.len() {
        return Ok((eval(&h[..n])?, n, true));
    }
    if h.len() <= opts.exact_limit && !opts.force_monte_carlo {
        let rows = h
            .iter()
            .copied()
            .combinations(n)
            .map(|sub| eval(&sub))
            .collect::<Result<Vec<_>>>()?;
        return Ok((mean(rows), n, true));
    }
    let rows = (0..opts.shuffles.max(1))
        .map(|i| {
            let mut order = h.clone();
            order.shuffle(&mut spec.seed.child(i).rng());
            eval(&order[..n])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((mean(rows), n, false))
}

fn edit_spec<S: Scalar>(
    c: &SymbolSeq,
    o: &SymbolSeq,
    a: &SymbolSeq,
    alt: &SymbolSeq,
    cands: Vec<SymbolSeq>,
    opts: &ProbeOptions<S>,
) -> EditSpec {
    EditSpec {
        observation: o.clone(),
        context: c.clone(),
        from: a.clone(),
        to: alt.clone(),
        fraction: 1.0,
        matcher: opts.matcher,
        epsilon: opts.epsilon,
        candidates: cands,
        seed: opts.seed.clone(),
    }
}

#[allow(clippy::too_many_arguments)]
fn grid_report<S: Scalar>(
    name: &str,
    actor: &Actor<S>,
    c: &SymbolSeq,
    o: &SymbolSeq,
    a: &SymbolSeq,
    alt: &SymbolSeq,
    grid: &[f64],
    opts: &ProbeOptions<S>,
) -> Result<SensitivityReport> {
    let cands = require_candidates(actor, &[a, alt])?;
    let ia = cands.iter().position(|x| x == a).expect("checked");
    let ib = cands.iter().position(|x| x == alt).expect("checked");
    let base_spec = edit_spec(c, o, a, alt, cands.clone(), opts);
    let h = matching_records(&actor.bank, &base_spec, Some(probe_model(actor, opts)))?;
    let baseline = aligned(&cands, &actor.pipeline_distribution(&actor.bank, o, c)?)?;
    let mut points = Vec::with_capacity(grid.len());
    let mut exact = true;
    for (i, &f) in grid.iter().enumerate() {
        let spec = base_spec.at(f, opts.seed.child("grid").child(i));
        let (probs, edited, ex) = expected_edit_distribution(actor, &actor.bank, &spec, opts)?;
        exact &= ex;
        points.push((f, edited, probs));
    }
    let first = &points.first().expect("grid nonempty").2;
    let last = &points.last().expect("grid nonempty").2;
    let delta_a = (last[ia] - first[ia]).as_f64();
    let delta_b = (last[ib] - first[ib]).as_f64();
    let tol = S::lit(1e-9);
    let monotone = points.windows(2).all(|w| w[1].2[ib] >= w[0].2[ib] - tol);
    let strict = last[ia] < first[ia] && last[ib] > first[ib];
    let verdict = strict && monotone;
    Ok(SensitivityReport {
        probe: name.to_string(),
        action: a.render(),
        alternative: Some(alt.render()),
        matches: h.len(),
        baseline: masses(&cands, &baseline),
        points: points
            .into_iter()
            .map(|(fraction, edited, probs)| GridPoint {
                fraction,
                edited,
                distribution: masses(&cands, &probs),
            })
            .collect(),
        delta_action: delta_a,
        delta_alternative: Some(delta_b),
        monotone: Some(monotone),
        exact,
        verdict,
    })
}

/// Does rewriting every relevant precedent of `a` into `alt` make `a` less
/// and `alt` more probable for the actor on observation `o`?
pub fn convention_sensitivity_contextfree<S: Scalar>(
    actor: &Actor<S>,
    o: &SymbolSeq,
    a: &SymbolSeq,
    alt: &SymbolSeq,
    opts: &ProbeOptions<S>,
) -> Result<SensitivityReport> {
    let mut r = grid_report(
        "convention-contextfree",
        actor,
        &SymbolSeq::new(),
        o,
        a,
        alt,
        &[0.0, 1.0],
        opts,
    )?;
    r.monotone = None;
    Ok(r)
}

/// Contextual form: the pipeline runs on `o` with `c` as an extra workspace
/// line, and the expected probability of `alt` must not decrease along
/// `grid`. `grid` must be sorted within `[0, 1]` and contain both ends.
pub fn convention_sensitivity_contextual<S: Scalar>(
    actor: &Actor<S>,
    c: &SymbolSeq,
    o: &SymbolSeq,
    a: &SymbolSeq,
    alt: &SymbolSeq,
    grid: &[f64],
    opts: &ProbeOptions<S>,
) -> Result<SensitivityReport> {
    let sorted = grid.windows(2).all(|w| w[0] < w[1]);
    let ends = grid.first() == Some(&0.0) && grid.last() == Some(&1.0);
    if !sorted || !ends || grid.iter().any(|f| !(0.0..=1.0).contains(f)) {
        return Err(Error::InvalidArgument(format!(
            "grid {grid:?} must be strictly increasing from 0 to 1"
        )));
    }
    grid_report("convention-contextual", actor, c, o, a, alt, grid, opts)
}

fn four_scores<S: Scalar>(
    p: &dyn Pcn<S>,
    c: &SymbolSeq,
    cs: &SymbolSeq,
    a: &SymbolSeq,
    alt: &SymbolSeq,
) -> Result<bool> {
    let pair = [a.clone(), alt.clone()];
    let before = p.score(c, &pair)?;
    let after = p.score(cs, &pair)?;
    let pa = before.prob(a).expect("scored");
    let pb = before.prob(alt).expect("scored");
    let qa = after.prob(a).expect("scored");
    let qb = after.prob(alt).expect("scored");
    Ok(pb > pa && qb < qa)
}

/// True iff `alt` beats `a` in context `c` but loses once `s` is appended as
/// a workspace line.
pub fn sanction_test<S: Scalar>(
    p: &dyn Pcn<S>,
    c: &SymbolSeq,
    s: &SymbolSeq,
    a: &SymbolSeq,
    alt: &SymbolSeq,
) -> Result<bool> {
    if a == alt {
        return Ok(false);
    }
    let cs = c.with_line(s);
    let cands = [alt.clone(), a.clone()];
    let before = p.score(c, &cands)?;
    let after = p.score(&cs, &cands)?;
    let verdict = before.probs()[0] > before.probs()[1] && after.probs()[0] < after.probs()[1];
    debug_assert_eq!(Some(verdict), four_scores(p, c, &cs, a, alt).ok());
    Ok(verdict)
}

/// Inject `opts.injected` memories of an unknown actor doing `a` in `c` and
/// being sanctioned with `s`; true iff the actor's probability of `a` in `c`
/// strictly drops.
pub fn sanction_sensitivity<S: Scalar>(
    actor: &Actor<S>,
    c: &SymbolSeq,
    s: &SymbolSeq,
    a: &SymbolSeq,
    opts: &ProbeOptions<S>,
) -> Result<SensitivityReport> {
    let cands = require_candidates(actor, &[a])?;
    let ia = cands.iter().position(|x| x == a).expect("checked");
    let empty = SymbolSeq::new();
    let before = aligned(
        &cands,
        &actor.pipeline_distribution(&actor.bank, c, &empty)?,
    )?;
    let mut bank = actor.bank.clone();
    let time = bank.last_time().unwrap_or(0);
    for _ in 0..opts.injected {
        let r = MemoryRecord::new(time, &actor.id, UNKNOWN_SUBJECT, c.clone(), a.clone())
            .with_sanction(Sanction {
                by: actor.id.clone(),
                signal: s.clone(),
                valence: Valence::Unlabeled,
            });
        bank.write(r)?;
    }
    let after = aligned(&cands, &actor.pipeline_distribution(&bank, c, &empty)?)?;
    let delta = (after[ia] - before[ia]).as_f64();
    Ok(SensitivityReport {
        probe: "sanction".into(),
        action: a.render(),
        alternative: None,
        matches: opts.injected,
        baseline: masses(&cands, &before),
        points: vec![
            GridPoint {
                fraction: 0.0,
                edited: 0,
                distribution: masses(&cands, &before),
            },
            GridPoint {
                fraction: 1.0,
                edited: opts.injected,
                distribution: masses(&cands, &after),
            },
        ],
        delta_action: delta,
        delta_alternative: None,
        monotone: None,
        exact: true,
        verdict: after[ia] < before[ia],
    })
}
