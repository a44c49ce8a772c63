//! Experiment runners: plain runs, the stability and adoption tests, probes
//! and consolidation.

use std::fs;
use std::io::BufWriter;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;
use serde_json::{json, Value};

use super::build::build_environment;
use super::config::{ConventionMode, ExperimentKind, ProbeKind, ScenarioConfig};
use super::metrics::{compute_metrics, emit_metrics, window_mean, MetricsRow};
use crate::actor::Actor;
use crate::consolidation::{consolidate, implicit_explicit_gap, precedence_test};
use crate::env::{write_events, Event, Lmae};
use crate::error::{Error, Result};
use crate::probes::{
    classify_norm, convention_sensitivity_contextfree, convention_sensitivity_contextual,
    epsilon_similar, sanction_sensitivity, sanction_test, NormQuery, NormVerdict, ProbeOptions,
};
use crate::seed::SeedStream;
use crate::symbols::{normalize, SymbolSeq};

pub const DEFAULT_GRID: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

/// Command-line overrides applied on top of a scenario.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub ticks: Option<u64>,
    pub grid: Option<Vec<f64>>,
    pub passes: Option<u32>,
}

impl Overrides {
    pub fn apply(&self, cfg: &ScenarioConfig) -> ScenarioConfig {
        let mut c = cfg.clone();
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(t) = self.ticks {
            c.experiment.ticks = t;
        }
        if let Some(p) = self.passes {
            if let Some(k) = c.consolidation.as_mut() {
                k.replay_passes = p;
            }
        }
        c
    }
}

/// Everything an experiment produces.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub scenario: String,
    pub kind: String,
    pub verdict: Option<bool>,
    pub events: Vec<Event>,
    pub rows: Vec<MetricsRow>,
    pub report: Value,
    /// Extra files as `(file name, contents)`.
    pub artifacts: Vec<(String, String)>,
}

pub type Progress<'a> = &'a mut dyn FnMut(u64, u64);

fn verdict_word(v: bool) -> String {
    if v { "pass" } else { "fail" }.into()
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

/// Run `ticks` steps, consolidating actors that ask for it.
pub fn simulate(cfg: &ScenarioConfig, ticks: u64, progress: Progress<'_>) -> Result<Lmae<f64>> {
    let mut env = build_environment(cfg)?;
    let periodic: Vec<(String, u64)> = cfg
        .actors
        .iter()
        .filter_map(|a| a.consolidate_every.map(|k| (a, k)))
        .flat_map(|(a, k)| a.ids().into_iter().map(move |id| (id, k)))
        .collect();
    let ccfg = cfg
        .consolidation
        .as_ref()
        .map(|c| c.config())
        .unwrap_or_default();
    for t in 0..ticks {
        env.step()?;
        for (id, every) in &periodic {
            if (t + 1) % every != 0 {
                continue;
            }
            if let Some(a) = env.actor_mut(id) {
                let table = consolidate(a.pcn.as_ref(), &a.bank, &ccfg)?;
                a.pcn = Arc::new(table);
            }
        }
        progress(t + 1, ticks);
    }
    Ok(env)
}

fn actor_of(env: &Lmae<f64>, cfg: &ScenarioConfig, id: &Option<String>) -> Result<Actor<f64>> {
    let id = id
        .clone()
        .or_else(|| cfg.default_actor())
        .ok_or(Error::UnknownActor(String::new()))?;
    env.actor(&id).cloned().ok_or(Error::UnknownActor(id))
}

/// The policy context the actor would see on `o` with its current bank.
pub fn explicit_context(actor: &Actor<f64>, o: &SymbolSeq, tick: u64) -> Result<SymbolSeq> {
    let ws = actor.prepare(
        &actor.bank,
        o,
        &SymbolSeq::new(),
        tick,
        &actor.seed.child("probe"),
    )?;
    Ok(actor.policy_context(&ws))
}

fn observation(env: &Lmae<f64>, actor: &Actor<f64>, given: &Option<String>) -> SymbolSeq {
    given
        .as_deref()
        .map(normalize)
        .unwrap_or_else(|| env.observation_for(actor))
}

fn finish(
    cfg: &ScenarioConfig,
    kind: String,
    env: &Lmae<f64>,
    mut rows: Vec<MetricsRow>,
    verdict: Option<bool>,
    details: Value,
) -> Outcome {
    if let (Some(v), Some(last)) = (verdict, rows.last_mut()) {
        last.verdict = Some(verdict_word(v));
    }
    let report = json!({
        "scenario": cfg.name,
        "kind": kind,
        "seed": cfg.seed,
        "ticks": env.tick(),
        "verdict": verdict.map(verdict_word),
        "details": details,
    });
    Outcome {
        scenario: cfg.name.clone(),
        kind,
        verdict,
        events: env.log().to_vec(),
        rows,
        report,
        artifacts: Vec::new(),
    }
}

/// Metrics rows for a warmup followed by one verdict row at the probe tick.
fn probe_rows(cfg: &ScenarioConfig, env: &Lmae<f64>) -> Vec<MetricsRow> {
    compute_metrics(env.log(), env.tick() + 1, &cfg.experiment)
}

/// Dispatch on the scenario's experiment kind.
pub fn run_experiment(cfg: &ScenarioConfig, progress: Progress<'_>) -> Result<Outcome> {
    match cfg.experiment.kind {
        ExperimentKind::Run => run_plain(cfg, progress),
        ExperimentKind::Stability => run_stability(cfg, progress),
        ExperimentKind::Adoption => run_adoption(cfg, progress),
        ExperimentKind::Probe => {
            let kind = cfg.experiment.probe.ok_or_else(|| {
                Error::InvalidArgument("probe experiment without a probe kind".into())
            })?;
            run_probe(cfg, kind, None, progress)
        }
        ExperimentKind::Consolidation => run_consolidation(cfg, progress),
    }
}

fn need_ticks(cfg: &ScenarioConfig) -> Result<u64> {
    match cfg.experiment.ticks {
        0 => Err(Error::InsufficientData("zero ticks requested".into())),
        t => Ok(t),
    }
}

pub fn run_plain(cfg: &ScenarioConfig, progress: Progress<'_>) -> Result<Outcome> {
    let ticks = need_ticks(cfg)?;
    let env = simulate(cfg, ticks, progress)?;
    let rows = compute_metrics(env.log(), ticks, &cfg.experiment);
    let actions: Vec<Value> = env
        .log()
        .iter()
        .filter_map(|e| match e {
            Event::Act {
                tick,
                actor,
                action,
                ..
            } if *tick + 1 == ticks => Some(json!({ "actor": actor, "action": action.render() })),
            _ => None,
        })
        .collect();
    Ok(finish(
        cfg,
        "run".into(),
        &env,
        rows,
        None,
        json!({ "final_actions": actions }),
    ))
}

fn final_window(cfg: &ScenarioConfig, ticks: u64) -> (u64, u64) {
    let w = cfg.experiment.final_window_len().clamp(1, ticks);
    (ticks - w, ticks)
}

/// Does the focal convention persist? Pass iff mean compliance over the
/// final window reaches the stability threshold.
pub fn run_stability(cfg: &ScenarioConfig, progress: Progress<'_>) -> Result<Outcome> {
    let ticks = need_ticks(cfg)?;
    let env = simulate(cfg, ticks, progress)?;
    let rows = compute_metrics(env.log(), ticks, &cfg.experiment);
    let (from, to) = final_window(cfg, ticks);
    let final_rate = window_mean(&rows, from, to, |r| r.compliance)
        .ok_or_else(|| Error::InsufficientData("no focal acts in the final window".into()))?;
    let theta = cfg.experiment.stable_threshold;
    let verdict = final_rate >= theta;
    let details = json!({
        "window": [from, to],
        "final_compliance": final_rate,
        "threshold": theta,
        "sanctions": rows.iter().filter_map(|r| r.sanction_count).sum::<u64>(),
    });
    Ok(finish(
        cfg,
        "stability".into(),
        &env,
        rows,
        Some(verdict),
        details,
    ))
}

/// Do newcomers take up the convention? Pass iff their compliance starts
/// below the naive threshold and ends at or above the adopted threshold.
pub fn run_adoption(cfg: &ScenarioConfig, progress: Progress<'_>) -> Result<Outcome> {
    let ticks = need_ticks(cfg)?;
    let e = &cfg.experiment;
    let env = simulate(cfg, ticks, progress)?;
    let rows = compute_metrics(env.log(), ticks, e);
    let join = e.insertion_tick();
    let naive_to = (join + e.naive_window).min(ticks);
    let (from, to) = final_window(cfg, ticks);
    let field = |r: &MetricsRow| r.newcomer_compliance;
    let (Some(naive), Some(adopted)) = (
        window_mean(&rows, join, naive_to, field),
        window_mean(&rows, from, to, field),
    ) else {
        return Err(Error::InsufficientData(
            "no newcomer focal acts in a window".into(),
        ));
    };
    let verdict = naive < e.naive_threshold && adopted >= e.adopted_threshold;
    let details = json!({
        "insert_at": join,
        "naive_window": [join, naive_to],
        "final_window": [from, to],
        "naive_compliance": naive,
        "final_compliance": adopted,
        "naive_threshold": e.naive_threshold,
        "adopted_threshold": e.adopted_threshold,
        "incumbent_compliance": window_mean(&rows, from, to, |r| r.compliance),
    });
    Ok(finish(
        cfg,
        "adoption".into(),
        &env,
        rows,
        Some(verdict),
        details,
    ))
}

fn probe_options(cfg: &ScenarioConfig, label: &str) -> ProbeOptions<f64> {
    ProbeOptions {
        seed: SeedStream::new(cfg.seed).child("probe").child(label),
        ..ProbeOptions::default()
    }
}

/// Run one configured probe after its warmup ticks.
pub fn run_probe(
    cfg: &ScenarioConfig,
    kind: ProbeKind,
    grid: Option<Vec<f64>>,
    progress: Progress<'_>,
) -> Result<Outcome> {
    let missing = || {
        Error::InvalidArgument(format!(
            "scenario {:?} has no {kind:?} probe block",
            cfg.name
        ))
    };
    let (env, verdict, details) = match kind {
        ProbeKind::Convention => {
            let p = cfg.probes.convention.as_ref().ok_or_else(missing)?;
            let env = simulate(cfg, p.warmup_ticks, progress)?;
            let actor = actor_of(&env, cfg, &p.actor)?;
            let o = observation(&env, &actor, &p.observation);
            let mut opts = probe_options(cfg, "convention");
            opts.matcher = p.matcher;
            opts.epsilon = p.epsilon;
            if let Some(n) = p.shuffles {
                opts.shuffles = n;
            }
            if let Some(n) = p.exact_limit {
                opts.exact_limit = n;
            }
            let (a, alt) = (normalize(&p.action), normalize(&p.alternative));
            let report = match p.mode {
                ConventionMode::ContextFree => {
                    convention_sensitivity_contextfree(&actor, &o, &a, &alt, &opts)?
                }
                ConventionMode::Contextual => {
                    let grid = grid
                        .or_else(|| p.grid.clone())
                        .unwrap_or_else(|| DEFAULT_GRID.to_vec());
                    let c = p.context.as_deref().map(normalize).unwrap_or_default();
                    convention_sensitivity_contextual(&actor, &c, &o, &a, &alt, &grid, &opts)?
                }
            };
            let v = report.verdict;
            (
                env,
                v,
                json!({ "actor": actor.id, "observation": o.render(), "report": to_value(&report) }),
            )
        }
        ProbeKind::Sanction => {
            let p = cfg.probes.sanction.as_ref().ok_or_else(missing)?;
            let env = simulate(cfg, p.warmup_ticks, progress)?;
            let actor = actor_of(&env, cfg, &p.actor)?;
            let o = observation(&env, &actor, &p.observation);
            let c = match &p.context {
                Some(c) => normalize(c),
                None => explicit_context(&actor, &o, env.tick())?,
            };
            let (s, a, alt) = (
                normalize(&p.signal),
                normalize(&p.action),
                normalize(&p.alternative),
            );
            let flip = sanction_test(actor.pcn.as_ref(), &c, &s, &a, &alt)?;
            let mut opts = probe_options(cfg, "sanction");
            if let Some(n) = p.injected {
                opts.injected = n;
            }
            let sens = sanction_sensitivity(&actor, &o, &s, &alt, &opts)?;
            let details = json!({
                "actor": actor.id,
                "context": c.render(),
                "signal": s.render(),
                "flips_preference": flip,
                "sensitivity": to_value(&sens),
            });
            (env, flip, details)
        }
        ProbeKind::Norm => {
            let p = cfg.probes.norm.as_ref().ok_or_else(missing)?;
            let env = simulate(cfg, p.warmup_ticks, progress)?;
            let mut q = NormQuery::new(
                normalize(&p.context),
                normalize(&p.action),
                normalize(&p.alternative),
            );
            q.thresholds = p.thresholds;
            if let Some(m) = p.min_ticks {
                q.min_ticks = m;
            }
            if let Some(n) = p.sample {
                q.sample = n;
            }
            q.sanction_alternative = p.sanction_alternative.as_deref().map(normalize);
            if let Some(g) = grid.or_else(|| p.grid.clone()) {
                q.grid = g;
            }
            q.options = probe_options(cfg, "norm");
            let report = classify_norm(env.log(), env.actors(), &q)?;
            let v = report.verdict != NormVerdict::NotNormative;
            (env, v, to_value(&report))
        }
        ProbeKind::Epsilon => {
            let p = cfg.probes.epsilon.as_ref().ok_or_else(missing)?;
            let env = simulate(cfg, 0, progress)?;
            let actor = actor_of(&env, cfg, &p.actor)?;
            let o = observation(&env, &actor, &p.observation);
            let c = match &p.context {
                Some(c) => normalize(c),
                None => explicit_context(&actor, &o, 0)?,
            };
            let cands = match &p.candidates {
                Some(cs) => cs.iter().map(|c| normalize(c)).collect(),
                None => actor.action_candidates()?.to_vec(),
            };
            let (u, v) = (normalize(&p.u), normalize(&p.v));
            let (similar, kl) = epsilon_similar(actor.pcn.as_ref(), &c, &u, &v, p.epsilon, &cands)?;
            let details = json!({
                "context": c.render(),
                "u": u.render(),
                "v": v.render(),
                "kl": kl,
                "epsilon": p.epsilon,
                "similar": similar,
            });
            (env, similar, details)
        }
    };
    let rows = probe_rows(cfg, &env);
    let name = format!("probe-{}", to_value(&kind).as_str().unwrap_or_default());
    Ok(finish(cfg, name, &env, rows, Some(verdict), details))
}

/// Consolidate one actor's bank after warmup and measure the explicit and
/// implicit routes before and after.
pub fn run_consolidation(cfg: &ScenarioConfig, progress: Progress<'_>) -> Result<Outcome> {
    let spec = cfg.consolidation.as_ref().ok_or_else(|| {
        Error::InvalidArgument(format!(
            "scenario {:?} has no consolidation block",
            cfg.name
        ))
    })?;
    let ccfg = spec.config();
    let env = simulate(cfg, spec.warmup_ticks, progress)?;
    let actor = actor_of(&env, cfg, &spec.actor)?;
    let o = observation(&env, &actor, &spec.observation);
    let gap = implicit_explicit_gap(&actor, &o, &ccfg)?;
    let table = consolidate(actor.pcn.as_ref(), &actor.bank, &ccfg)?;
    let precedence = match &spec.precedence {
        Some(p) => {
            let base = actor.pcn.as_table().ok_or_else(|| {
                Error::BackendUnsupported("consolidation of a non-table model".into())
            })?;
            let c = match &p.context {
                Some(c) => normalize(c),
                None => explicit_context(&actor, &o, env.tick())?,
            };
            Some(precedence_test(
                base,
                &actor.bank,
                &normalize(&p.signal),
                &c,
                &normalize(&p.action),
                actor.action_candidates()?,
                &ccfg,
            )?)
        }
        None => None,
    };
    let verdict = gap.post_gap <= spec.max_gap && precedence.as_ref().is_none_or(|p| p.verdict);
    let details = json!({
        "actor": actor.id,
        "observation": o.render(),
        "config": to_value(&ccfg),
        "max_gap": spec.max_gap,
        "gap": to_value(&gap),
        "precedence": precedence.as_ref().map(to_value),
    });
    let rows = probe_rows(cfg, &env);
    let mut out = finish(
        cfg,
        "consolidation".into(),
        &env,
        rows,
        Some(verdict),
        details,
    );
    out.artifacts.push((
        format!("{}.v{}.table", actor.id, table.version()),
        table.to_flat(),
    ));
    Ok(out)
}

/// Write events, metrics, report and artifacts under `dir`.
pub fn write_outcome(cfg: &ScenarioConfig, outcome: &Outcome, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let o = &cfg.output;
    write_events(
        &outcome.events,
        BufWriter::new(fs::File::create(dir.join(&o.events))?),
    )?;
    if !outcome.rows.is_empty() {
        emit_metrics(&outcome.rows, &dir.join(&o.metrics), o.metrics_format())?;
    }
    let mut report = serde_json::to_string_pretty(&outcome.report)?;
    report.push('\n');
    fs::write(dir.join(&o.report), report)?;
    for (name, body) in &outcome.artifacts {
        fs::write(dir.join(name), body)?;
    }
    Ok(())
}
