//! Scenario files, experiment runners and metrics output.

mod build;
mod config;
mod experiment;
mod metrics;
mod schema;

pub use build::{build_actor, build_environment, load_memories, BackendCache};
pub use config::{
    load_scenario, parse_scenario, ActorSpec, BackendSpec, ConsolidationSpec, ConventionMode,
    ConventionProbeSpec, EnvironmentSpec, EpsilonProbeSpec, ExperimentKind, ExperimentSpec,
    FocalSpec, LogicSpec, MetricsFormat, NormProbeSpec, OutputSpec, PrecedenceSpec, ProbeKind,
    ProbesSpec, SanctionProbeSpec, ScenarioConfig, StepSpec, METRIC_NAMES,
};
pub use experiment::{
    explicit_context, run_adoption, run_consolidation, run_experiment, run_plain, run_probe,
    run_stability, simulate, write_outcome, Outcome, Overrides, Progress, DEFAULT_GRID,
};
pub use metrics::{
    compute_metrics, emit_metrics, read_metrics, window_mean, write_metrics, MetricsRow,
    METRICS_HEADER,
};
