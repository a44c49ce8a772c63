use std::path::PathBuf;

use normlab::harness::{build_actor, load_scenario, BackendCache, ScenarioConfig};
use normlab::{chain_length, normalize};

fn config() -> ScenarioConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/crt.scenario");
    load_scenario(&path).unwrap()
}

#[test]
fn short_chain_answers_the_prior_long_chain_computes() {
    let cfg = config();
    let mut cache = BackendCache::default();
    let scene = normalize(&cfg.environment.scene);
    let act = |id: &str, cache: &mut BackendCache| {
        let a = build_actor(&cfg, cfg.actor_spec(id).unwrap(), id, cache).unwrap();
        a.act(&scene, 0).unwrap()
    };
    let fast = act("fast", &mut cache);
    let slow = act("slow", &mut cache);
    assert_eq!(fast.action, normalize("10 cents"));
    assert_eq!(slow.action, normalize("5 cents"));
    let (kf, ks) = (chain_length(&fast.workspace), chain_length(&slow.workspace));
    assert_eq!(kf, 0);
    assert!(ks >= 3, "long chain has {ks} assemblies");
    assert!(ks > kf);
}

#[test]
fn long_chain_carries_the_worked_steps() {
    let cfg = config();
    let id = "slow";
    let a = build_actor(
        &cfg,
        cfg.actor_spec(id).unwrap(),
        id,
        &mut BackendCache::default(),
    )
    .unwrap();
    let out = a.act(&normalize(&cfg.environment.scene), 0).unwrap();
    let steps: Vec<String> = out
        .workspace
        .intermediate()
        .map(|s| s.content.render())
        .collect();
    assert_eq!(steps.last().map(String::as_str), Some("so x equals 5"));
}
