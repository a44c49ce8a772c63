//! Turning a validated scenario into a live environment.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::sync::Arc;
use std::time::Duration;

use super::config::{ActorSpec, BackendSpec, ScenarioConfig};
use crate::actor::{Actor, LogicSelector};
use crate::env::Lmae;
use crate::error::{Error, Result};
use crate::memory::MemoryBank;
use crate::pcn::{Pcn, RemoteConfig, RemotePcn, SlotTag, TablePcn};
use crate::symbols::normalize;

/// Shares one model instance between actors that name the same backend.
#[derive(Default)]
pub struct BackendCache {
    tables: BTreeMap<String, Arc<dyn Pcn<f64>>>,
}

impl BackendCache {
    pub fn get(&mut self, cfg: &ScenarioConfig, spec: &BackendSpec) -> Result<Arc<dyn Pcn<f64>>> {
        match spec {
            BackendSpec::Table {
                path,
                slots,
                temperature,
            } => {
                let key = format!("{path}|{slots:?}|{temperature:?}");
                if let Some(p) = self.tables.get(&key) {
                    return Ok(p.clone());
                }
                let mut t = TablePcn::<f64>::load(&cfg.resolve(path))?;
                if !slots.is_empty() {
                    let tags = slots
                        .iter()
                        .map(|(tag, phrase)| SlotTag {
                            tag: tag.clone(),
                            phrase: normalize(phrase),
                        })
                        .collect();
                    t = t.with_slots(tags);
                }
                if let Some(tau) = temperature {
                    t.set_temperature(*tau)?;
                }
                let p: Arc<dyn Pcn<f64>> = Arc::new(t);
                self.tables.insert(key, p.clone());
                Ok(p)
            }
            BackendSpec::Remote {
                endpoint,
                timeout_ms,
                max_retries,
                token_env,
            } => {
                let mut rc = RemoteConfig::new(endpoint.clone().unwrap_or_default());
                if let Some(ms) = timeout_ms {
                    rc.timeout = Duration::from_millis(*ms);
                }
                if let Some(n) = max_retries {
                    rc.max_retries = *n;
                }
                if let Some(v) = token_env {
                    rc.token_env = v.clone();
                }
                let remote = RemotePcn::new(rc);
                if remote.endpoint().is_empty() {
                    return Err(Error::RemoteUnavailable("no endpoint configured".into()));
                }
                Ok(Arc::new(remote))
            }
        }
    }
}

/// Initial memories from a JSON-lines file, re-owned by `id`.
pub fn load_memories(cfg: &ScenarioConfig, spec: &ActorSpec, id: &str) -> Result<MemoryBank> {
    let mut bank = match &spec.memory {
        Some(m) => MemoryBank::load_jsonl(BufReader::new(File::open(cfg.resolve(m))?))?,
        None => MemoryBank::new(),
    };
    let records: Vec<_> = bank
        .records()
        .cloned()
        .map(|mut r| {
            r.observer = id.to_string();
            r
        })
        .collect();
    bank = MemoryBank::from_records(records)?;
    if let Some(c) = spec.capacity {
        bank.set_capacity(Some(c));
    }
    Ok(bank)
}

pub fn build_actor(
    cfg: &ScenarioConfig,
    spec: &ActorSpec,
    id: &str,
    cache: &mut BackendCache,
) -> Result<Actor<f64>> {
    let pcn = cache.get(cfg, &spec.backend)?;
    let mut a = Actor::new(id, pcn)?
        .with_role(spec.role.as_deref().unwrap_or("actor"))
        .with_persona(spec.persona.as_deref().unwrap_or(id))
        .with_logic(cfg.logic(&spec.logic)?)
        .with_bank(load_memories(cfg, spec, id)?)
        .with_mode(spec.mode)
        .with_retrieval(spec.retrieval)
        .with_witness(spec.witness)
        .with_metric(spec.metric.clone());
    for (name, cands) in &spec.candidates {
        a = a.with_candidates(name, cands.iter().map(String::as_str));
    }
    if let Some(names) = &spec.selector {
        let logics = names
            .iter()
            .map(|n| cfg.logic(n))
            .collect::<Result<Vec<_>>>()?;
        a = a.with_selector(LogicSelector::new(logics)?);
    }
    Ok(a)
}

/// Environment with every actor seated and newcomers scheduled at the
/// insertion tick.
pub fn build_environment(cfg: &ScenarioConfig) -> Result<Lmae<f64>> {
    let mut cache = BackendCache::default();
    let env_spec = &cfg.environment;
    let mut env = Lmae::new(normalize(&env_spec.scene), cfg.seed)
        .with_rules(env_spec.rules.clone())
        .with_witness_policy(env_spec.witness_policy.clone());
    for (role, view) in &env_spec.views {
        env = env.with_view(role, view);
    }
    if let Some(n) = &env_spec.narrator {
        env = env.with_narrator(cache.get(cfg, n)?);
    }
    let insert_at = cfg.experiment.insertion_tick();
    for spec in &cfg.actors {
        for id in spec.ids() {
            let a = build_actor(cfg, spec, &id, &mut cache)?;
            if spec.newcomer {
                env.insert_actor(a, insert_at)?;
            } else {
                env.add_actor(a)?;
            }
        }
    }
    Ok(env)
}
