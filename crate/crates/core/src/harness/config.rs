//! Typed scenario configuration, loading and reference checks.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::schema::{self, pointer, SCENARIO};
use crate::actor::{ActionMode, DecisionLogic, Framing, LogicStep, StepKind};
use crate::consolidation::ConsolidationConfig;
use crate::consolidation::RecordFilter;
use crate::env::{TransitionRule, WitnessPolicy};
use crate::error::{Error, Result, SchemaIssue};
use crate::memory::SimilarityMetric;
use crate::probes::{Matcher, Thresholds, DEFAULT_EPSILON};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub logics: BTreeMap<String, LogicSpec>,
    pub actors: Vec<ActorSpec>,
    pub environment: EnvironmentSpec,
    #[serde(default)]
    pub experiment: ExperimentSpec,
    #[serde(default)]
    pub probes: ProbesSpec,
    #[serde(default)]
    pub consolidation: Option<ConsolidationSpec>,
    #[serde(default)]
    pub output: OutputSpec,
    /// Directory of the scenario file; relative paths resolve against it.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum BackendSpec {
    Table {
        path: String,
        #[serde(default)]
        slots: BTreeMap<String, String>,
        #[serde(default)]
        temperature: Option<f64>,
    },
    Remote {
        #[serde(default)]
        endpoint: Option<String>,
        #[serde(default)]
        timeout_ms: Option<u64>,
        #[serde(default)]
        max_retries: Option<u32>,
        #[serde(default)]
        token_env: Option<String>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActorSpec {
    /// Actor id, or an id prefix when `count` is set.
    pub id: String,
    #[serde(default)]
    pub count: Option<usize>,
    #[serde(default)]
    pub role: Option<String>,
    #[serde(default)]
    pub persona: Option<String>,
    #[serde(default = "direct")]
    pub logic: String,
    #[serde(default)]
    pub selector: Option<Vec<String>>,
    pub backend: BackendSpec,
    #[serde(default)]
    pub memory: Option<String>,
    #[serde(default)]
    pub capacity: Option<usize>,
    pub candidates: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub mode: ActionMode,
    #[serde(default = "yes")]
    pub retrieval: bool,
    #[serde(default = "yes")]
    pub witness: bool,
    #[serde(default)]
    pub metric: SimilarityMetric,
    /// Joins at the experiment's insertion tick instead of tick 0.
    #[serde(default)]
    pub newcomer: bool,
    /// Consolidate the actor's own bank into its table every N ticks, with
    /// the `[consolidation]` replay settings or their defaults.
    #[serde(default)]
    pub consolidate_every: Option<u64>,
}

fn direct() -> String {
    "direct".into()
}

fn yes() -> bool {
    true
}

impl ActorSpec {
    /// Concrete ids this entry expands to.
    pub fn ids(&self) -> Vec<String> {
        match self.count {
            None => vec![self.id.clone()],
            Some(n) => {
                let width = n.to_string().len().max(2);
                (1..=n).map(|i| format!("{}{i:0width$}", self.id)).collect()
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogicSpec {
    pub steps: Vec<StepSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepSpec {
    pub kind: StepKind,
    #[serde(default)]
    pub question: Option<String>,
    #[serde(default)]
    pub candidates: Option<String>,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub framing: Option<String>,
}

impl StepSpec {
    fn build(&self) -> Result<LogicStep> {
        let mut step = match self.kind {
            StepKind::Retrieve => LogicStep::retrieve(self.k.unwrap_or(1)),
            StepKind::Summarize => {
                let mut s = LogicStep::summarize(self.question.as_deref().unwrap_or(""), "");
                s.candidates = None;
                s
            }
            StepKind::Policy => match &self.question {
                Some(q) => LogicStep::policy_asking(q),
                None => LogicStep::policy(),
            },
        };
        if let Some(c) = &self.candidates {
            step = step.with_candidates(c);
        }
        if let Some(f) = &self.framing {
            step = step.with_framing(Framing::new(f.clone())?);
        }
        Ok(step)
    }
}

impl LogicSpec {
    pub fn build(&self, name: &str) -> Result<DecisionLogic> {
        let steps = self
            .steps
            .iter()
            .map(StepSpec::build)
            .collect::<Result<Vec<_>>>()?;
        DecisionLogic::new(name, steps)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentSpec {
    pub scene: String,
    #[serde(default)]
    pub rules: Vec<TransitionRule>,
    #[serde(default)]
    pub views: BTreeMap<String, String>,
    #[serde(default)]
    pub witness_policy: WitnessPolicy,
    #[serde(default)]
    pub narrator: Option<BackendSpec>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    #[default]
    Run,
    Stability,
    Adoption,
    Probe,
    Consolidation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeKind {
    Convention,
    Sanction,
    Norm,
    Epsilon,
}

impl std::str::FromStr for ProbeKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "convention" => Ok(ProbeKind::Convention),
            "sanction" => Ok(ProbeKind::Sanction),
            "norm" => Ok(ProbeKind::Norm),
            "epsilon" => Ok(ProbeKind::Epsilon),
            _ => Err(Error::InvalidArgument(format!("unknown probe kind {s:?}"))),
        }
    }
}

/// Which acts count toward compliance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FocalSpec {
    #[serde(default)]
    pub role: Option<String>,
    pub observation: String,
    pub convention: String,
}

pub const METRIC_NAMES: [&str; 4] = [
    "compliance",
    "sanction_count",
    "newcomer_compliance",
    "verdict",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default)]
    pub kind: ExperimentKind,
    #[serde(default = "one_tick")]
    pub ticks: u64,
    /// Columns to fill; the others are left empty.
    #[serde(default = "all_metrics")]
    pub metrics: Vec<String>,
    #[serde(default)]
    pub focal: Option<FocalSpec>,
    /// Newcomer insertion tick; half the run when absent.
    #[serde(default)]
    pub insert_at: Option<u64>,
    #[serde(default = "stable")]
    pub stable_threshold: f64,
    #[serde(default = "naive")]
    pub naive_threshold: f64,
    #[serde(default = "adopted")]
    pub adopted_threshold: f64,
    #[serde(default = "ten")]
    pub naive_window: u64,
    /// Final window length; a quarter of the run when absent.
    #[serde(default)]
    pub final_window: Option<u64>,
    /// Probe run by the `probe` kind.
    #[serde(default)]
    pub probe: Option<ProbeKind>,
}

fn one_tick() -> u64 {
    1
}

fn all_metrics() -> Vec<String> {
    METRIC_NAMES.iter().map(|s| s.to_string()).collect()
}

fn stable() -> f64 {
    0.9
}

fn naive() -> f64 {
    0.6
}

fn adopted() -> f64 {
    0.8
}

fn ten() -> u64 {
    10
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            kind: ExperimentKind::Run,
            ticks: one_tick(),
            metrics: all_metrics(),
            focal: None,
            insert_at: None,
            stable_threshold: stable(),
            naive_threshold: naive(),
            adopted_threshold: adopted(),
            naive_window: ten(),
            final_window: None,
            probe: None,
        }
    }
}

impl ExperimentSpec {
    pub fn insertion_tick(&self) -> u64 {
        self.insert_at.unwrap_or(self.ticks / 2)
    }

    pub fn final_window_len(&self) -> u64 {
        self.final_window.unwrap_or(self.ticks / 4)
    }

    pub fn wants(&self, metric: &str) -> bool {
        self.metrics.iter().any(|m| m == metric)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConventionMode {
    #[default]
    Contextual,
    ContextFree,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConventionProbeSpec {
    #[serde(default)]
    pub actor: Option<String>,
    #[serde(default)]
    pub mode: ConventionMode,
    /// Observation `o`; the actor's current view when absent.
    #[serde(default)]
    pub observation: Option<String>,
    #[serde(default)]
    pub context: Option<String>,
    pub action: String,
    pub alternative: String,
    #[serde(default)]
    pub grid: Option<Vec<f64>>,
    #[serde(default)]
    pub warmup_ticks: u64,
    #[serde(default)]
    pub matcher: Matcher,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub shuffles: Option<usize>,
    #[serde(default)]
    pub exact_limit: Option<usize>,
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SanctionProbeSpec {
    #[serde(default)]
    pub actor: Option<String>,
    #[serde(default)]
    pub observation: Option<String>,
    /// Context `c`; the actor's policy context on the observation when absent.
    #[serde(default)]
    pub context: Option<String>,
    pub signal: String,
    /// The action the signal should favor.
    pub action: String,
    /// The action the signal should disfavor.
    pub alternative: String,
    #[serde(default)]
    pub warmup_ticks: u64,
    #[serde(default)]
    pub injected: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormProbeSpec {
    pub context: String,
    pub action: String,
    pub alternative: String,
    #[serde(default)]
    pub sanction_alternative: Option<String>,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub min_ticks: Option<u64>,
    #[serde(default)]
    pub sample: Option<usize>,
    #[serde(default)]
    pub grid: Option<Vec<f64>>,
    #[serde(default)]
    pub warmup_ticks: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsilonProbeSpec {
    #[serde(default)]
    pub actor: Option<String>,
    #[serde(default)]
    pub observation: Option<String>,
    #[serde(default)]
    pub context: Option<String>,
    pub u: String,
    pub v: String,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// The actor's action candidates when absent.
    #[serde(default)]
    pub candidates: Option<Vec<String>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbesSpec {
    #[serde(default)]
    pub convention: Option<ConventionProbeSpec>,
    #[serde(default)]
    pub sanction: Option<SanctionProbeSpec>,
    #[serde(default)]
    pub norm: Option<NormProbeSpec>,
    #[serde(default)]
    pub epsilon: Option<EpsilonProbeSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrecedenceSpec {
    #[serde(default)]
    pub context: Option<String>,
    pub signal: String,
    pub action: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConsolidationSpec {
    #[serde(default)]
    pub actor: Option<String>,
    #[serde(default = "passes")]
    pub replay_passes: u32,
    #[serde(default = "rate")]
    pub learning_rate: f64,
    #[serde(default)]
    pub filter: RecordFilter,
    #[serde(default)]
    pub observation: Option<String>,
    #[serde(default)]
    pub warmup_ticks: u64,
    #[serde(default = "max_gap")]
    pub max_gap: f64,
    #[serde(default)]
    pub precedence: Option<PrecedenceSpec>,
}

fn passes() -> u32 {
    ConsolidationConfig::default().replay_passes
}

fn rate() -> f64 {
    ConsolidationConfig::default().learning_rate
}

fn max_gap() -> f64 {
    0.05
}

impl ConsolidationSpec {
    pub fn config(&self) -> ConsolidationConfig {
        ConsolidationConfig {
            replay_passes: self.replay_passes,
            learning_rate: self.learning_rate,
            filter: self.filter.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricsFormat {
    Csv,
    Jsonl,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// `out/<scenario name>` when absent.
    #[serde(default)]
    pub dir: Option<String>,
    #[serde(default = "events_file")]
    pub events: String,
    #[serde(default = "metrics_file")]
    pub metrics: String,
    /// Inferred from the metrics file extension when absent.
    #[serde(default)]
    pub format: Option<MetricsFormat>,
    #[serde(default = "report_file")]
    pub report: String,
}

fn events_file() -> String {
    "events.jsonl".into()
}

fn metrics_file() -> String {
    "metrics.csv".into()
}

fn report_file() -> String {
    "report.json".into()
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: None,
            events: events_file(),
            metrics: metrics_file(),
            format: None,
            report: report_file(),
        }
    }
}

impl OutputSpec {
    pub fn metrics_format(&self) -> MetricsFormat {
        match self.format {
            Some(f) => f,
            None if self.metrics.ends_with(".jsonl") => MetricsFormat::Jsonl,
            None => MetricsFormat::Csv,
        }
    }
}

impl ScenarioConfig {
    pub fn resolve(&self, rel: &str) -> PathBuf {
        self.base_dir.join(rel)
    }

    pub fn output_dir(&self) -> PathBuf {
        match &self.output.dir {
            Some(d) => self.resolve(d),
            None => self.resolve("out").join(&self.name),
        }
    }

    /// Named logic: scenario definitions shadow builtins.
    pub fn logic(&self, name: &str) -> Result<DecisionLogic> {
        match self.logics.get(name) {
            Some(spec) => spec.build(name),
            None => DecisionLogic::builtin(name)
                .ok_or_else(|| Error::InvalidLogic(format!("unknown logic {name:?}"))),
        }
    }

    pub fn all_ids(&self) -> Vec<String> {
        self.actors.iter().flat_map(ActorSpec::ids).collect()
    }

    /// Spec and index of the actor entry that owns `id`.
    pub fn actor_spec(&self, id: &str) -> Option<&ActorSpec> {
        self.actors.iter().find(|a| a.ids().iter().any(|i| i == id))
    }

    /// First non-newcomer actor id.
    pub fn default_actor(&self) -> Option<String> {
        self.actors
            .iter()
            .find(|a| !a.newcomer)
            .or(self.actors.first())
            .and_then(|a| a.ids().into_iter().next())
    }

    pub fn roles(&self) -> BTreeSet<String> {
        self.actors
            .iter()
            .map(|a| a.role.clone().unwrap_or_else(|| "actor".into()))
            .collect()
    }

    /// Reference and value checks beyond the structural schema.
    pub fn validate(&self) -> Vec<SchemaIssue> {
        let mut out = Vec::new();
        let mut push = |at: String, message: String| {
            out.push(SchemaIssue {
                pointer: at,
                message,
            })
        };

        for (name, spec) in &self.logics {
            if let Err(e) = spec.build(name) {
                push(pointer("/logics", name), e.to_string());
            }
        }

        let mut seen = BTreeSet::new();
        for (i, a) in self.actors.iter().enumerate() {
            let at = format!("/actors/{i}");
            if a.count == Some(0) {
                push(pointer(&at, "count"), "count must be positive".into());
            }
            for id in a.ids() {
                if let Err(e) = crate::actor::check_id(&id) {
                    push(pointer(&at, "id"), e.to_string());
                } else if !seen.insert(id.clone()) {
                    push(pointer(&at, "id"), format!("duplicate actor id {id:?}"));
                }
            }
            match self.logic(&a.logic) {
                Ok(l) => {
                    for (j, step) in l.steps().iter().enumerate() {
                        if let Some(set) = step.candidate_set() {
                            if !a.candidates.contains_key(set) {
                                push(
                                    pointer(&at, "candidates"),
                                    format!(
                                        "logic {:?} step {j} needs candidate set {set:?}",
                                        a.logic
                                    ),
                                );
                            }
                        }
                    }
                }
                Err(_) => push(
                    pointer(&at, "logic"),
                    format!("unknown logic {:?}", a.logic),
                ),
            }
            for (j, name) in a.selector.iter().flatten().enumerate() {
                if self.logic(name).is_err() {
                    push(
                        pointer(&pointer(&at, "selector"), &j.to_string()),
                        format!("unknown logic {name:?}"),
                    );
                }
            }
            for (set, cands) in &a.candidates {
                if let Err(e) = crate::pcn::check_candidates(
                    &cands
                        .iter()
                        .map(|c| crate::symbols::normalize(c))
                        .collect::<Vec<_>>(),
                ) {
                    push(pointer(&pointer(&at, "candidates"), set), e.to_string());
                }
            }
            self.check_backend(&a.backend, &pointer(&at, "backend"), &mut push);
            if let Some(m) = &a.memory {
                if !self.resolve(m).is_file() {
                    push(
                        pointer(&at, "memory"),
                        format!("memory file {m:?} not found"),
                    );
                }
            }
            if a.consolidate_every == Some(0) {
                push(pointer(&at, "consolidate_every"), "must be positive".into());
            }
        }

        let roles = self.roles();
        let ids = self.all_ids();
        for (i, r) in self.environment.rules.iter().enumerate() {
            if let Some(s) = &r.sanction {
                if !roles.contains(&s.sanctioner_role) {
                    push(
                        format!("/environment/rules/{i}/sanction/sanctioner_role"),
                        format!("no actor has role {:?}", s.sanctioner_role),
                    );
                }
            }
        }
        if let Some(n) = &self.environment.narrator {
            self.check_backend(n, "/environment/narrator", &mut push);
        }

        let e = &self.experiment;
        if let Some(f) = &e.focal {
            if let Some(r) = &f.role {
                if !roles.contains(r) {
                    push(
                        "/experiment/focal/role".into(),
                        format!("no actor has role {r:?}"),
                    );
                }
            }
        }
        for (j, m) in e.metrics.iter().enumerate() {
            if !METRIC_NAMES.contains(&m.as_str()) {
                push(
                    format!("/experiment/metrics/{j}"),
                    format!("unknown metric {m:?}"),
                );
            }
        }
        for (name, v) in [
            ("stable_threshold", e.stable_threshold),
            ("naive_threshold", e.naive_threshold),
            ("adopted_threshold", e.adopted_threshold),
        ] {
            if !(0.0..=1.0).contains(&v) {
                push(pointer("/experiment", name), format!("{v} outside [0, 1]"));
            }
        }
        match e.kind {
            ExperimentKind::Stability | ExperimentKind::Adoption if e.focal.is_none() => {
                push(
                    "/experiment/focal".into(),
                    "required for this experiment kind".into(),
                );
            }
            ExperimentKind::Adoption if !self.actors.iter().any(|a| a.newcomer) => {
                push(
                    "/actors".into(),
                    "adoption needs at least one newcomer actor".into(),
                );
            }
            ExperimentKind::Probe => match e.probe {
                None => push(
                    "/experiment/probe".into(),
                    "required for probe experiments".into(),
                ),
                Some(k) if !self.has_probe(k) => push(
                    "/experiment/probe".into(),
                    format!(
                        "no [probes.{}] block",
                        serde_json::to_value(k).unwrap().as_str().unwrap()
                    ),
                ),
                _ => {}
            },
            ExperimentKind::Consolidation if self.consolidation.is_none() => {
                push(
                    "/consolidation".into(),
                    "required for consolidation experiments".into(),
                );
            }
            _ => {}
        }

        let mut check_actor = |at: &str, a: &Option<String>| {
            if let Some(a) = a {
                if !ids.contains(a) {
                    push(at.into(), format!("unknown actor {a:?}"));
                }
            }
        };
        if let Some(p) = &self.probes.convention {
            check_actor("/probes/convention/actor", &p.actor);
        }
        if let Some(p) = &self.probes.sanction {
            check_actor("/probes/sanction/actor", &p.actor);
        }
        if let Some(p) = &self.probes.epsilon {
            check_actor("/probes/epsilon/actor", &p.actor);
        }
        if let Some(c) = &self.consolidation {
            check_actor("/consolidation/actor", &c.actor);
            if let Err(e) = c.config().validate() {
                out.push(SchemaIssue {
                    pointer: "/consolidation".into(),
                    message: e.to_string(),
                });
            }
        }
        out
    }

    fn check_backend(&self, b: &BackendSpec, at: &str, push: &mut impl FnMut(String, String)) {
        if let BackendSpec::Table {
            path, temperature, ..
        } = b
        {
            if !self.resolve(path).is_file() {
                push(
                    pointer(at, "path"),
                    format!("table file {path:?} not found"),
                );
            }
            if temperature.is_some_and(|t| t.is_nan() || t <= 0.0) {
                push(
                    pointer(at, "temperature"),
                    "temperature must be positive".into(),
                );
            }
        }
    }

    pub fn has_probe(&self, kind: ProbeKind) -> bool {
        match kind {
            ProbeKind::Convention => self.probes.convention.is_some(),
            ProbeKind::Sanction => self.probes.sanction.is_some(),
            ProbeKind::Norm => self.probes.norm.is_some(),
            ProbeKind::Epsilon => self.probes.epsilon.is_some(),
        }
    }
}

/// Parse and validate scenario text; `base_dir` anchors relative paths.
pub fn parse_scenario(text: &str, base_dir: &Path) -> Result<ScenarioConfig> {
    if text.trim().is_empty() {
        return Err(Error::Parse("scenario file is empty".into()));
    }
    let value: toml::Value = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let mut issues = Vec::new();
    schema::check(&value, &SCENARIO, "", &mut issues);
    if !issues.is_empty() {
        return Err(Error::Schema(issues));
    }
    let mut cfg: ScenarioConfig = value.try_into().map_err(|e: toml::de::Error| {
        Error::Schema(vec![SchemaIssue {
            pointer: String::new(),
            message: e.to_string(),
        }])
    })?;
    cfg.base_dir = base_dir.to_path_buf();
    let issues = cfg.validate();
    if !issues.is_empty() {
        return Err(Error::Schema(issues));
    }
    Ok(cfg)
}

/// Read, parse and validate a scenario file.
pub fn load_scenario(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_scenario(&text, &base)
}
