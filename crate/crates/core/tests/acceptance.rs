//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs without the libtest harness so every line is printed.

use std::collections::BTreeSet;
use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use normlab::actor::{Actor, DecisionLogic};
use normlab::consolidation::{consolidate_records, ConsolidationConfig};
use normlab::env::collective_policy;
use normlab::harness::{
    build_actor, load_scenario, run_adoption, run_consolidation, run_experiment, run_stability,
    write_outcome, BackendCache, ScenarioConfig,
};
use normlab::pcn::{CompletionDistribution, TablePcn};
use normlab::probes::{
    expected_edit_distribution, kl_divergence, sanction_test, EditSpec, ProbeOptions,
};
use normlab::scalar::MASS_FLOOR;
use normlab::{
    normalize, MemoryBank, MemoryRecord, Sanction, SeedStream, SimilarityMetric, SymbolSeq, Valence,
};

type Check = std::result::Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)*) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)*));
        }
    };
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

fn load(name: &str) -> std::result::Result<ScenarioConfig, String> {
    load_scenario(&scenario(name)).map_err(err)
}

fn no_progress() -> impl FnMut(u64, u64) {
    |_, _| {}
}

fn detail_f64(v: &serde_json::Value, path: &str) -> std::result::Result<f64, String> {
    v.pointer(path)
        .and_then(serde_json::Value::as_f64)
        .ok_or_else(|| format!("report has no number at {path}"))
}

// Golden apple/banana reproduction.

fn fact(text: &str) -> MemoryRecord {
    MemoryRecord::new(0, "alice", "alice", SymbolSeq::new(), normalize(text))
}

fn golden() -> Check {
    let cfg = load("golden.scenario")?;
    let spec = cfg.actor_spec("alice").ok_or("no actor alice")?;
    let alice = build_actor(&cfg, spec, "alice", &mut BackendCache::default()).map_err(err)?;
    let scene = normalize(&cfg.environment.scene);
    let apple = normalize("alice eats the apple");
    let banana = normalize("alice eats the banana");
    ensure!(
        alice.bank.len() == 2,
        "golden bank holds {} records, expected 2",
        alice.bank.len()
    );

    let base = alice.act(&scene, 1).map_err(err)?.action;
    ensure!(base == apple, "base action {:?}", base.render());

    let bob = alice
        .bank
        .with_record(fact(
            "a few minutes ago, alice's friend bob said to save the apple for him",
        ))
        .map_err(err)?;
    let with_bob = alice
        .clone()
        .with_bank(bob)
        .act(&scene, 1)
        .map_err(err)?
        .action;
    ensure!(
        with_bob == banana,
        "with the request, action {:?}",
        with_bob.render()
    );

    let prob_apple = |bank: &MemoryBank| -> std::result::Result<f64, String> {
        let d = alice
            .pipeline_distribution(bank, &scene, &SymbolSeq::new())
            .map_err(err)?;
        d.prob(&apple).ok_or_else(|| "apple not scored".to_string())
    };
    let before = prob_apple(&alice.bank)?;
    let forbidden = alice
        .bank
        .with_record(fact("It is forbidden to eat apples"))
        .map_err(err)?;
    let after = prob_apple(&forbidden)?;
    ensure!(
        after < before,
        "p(apple) {before:.4} -> {after:.4} did not drop"
    );
    Ok(format!(
        "apple -> banana with request; p(apple) {before:.4} -> {after:.4} with prohibition"
    ))
}

// KL divergence suite.

fn random_dist(rng: &mut ChaCha8Rng, n: usize) -> CompletionDistribution<f64> {
    let cands = (0..n).map(|i| normalize(&format!("c{i}"))).collect();
    let w = (0..n).map(|_| rng.random_range(1e-3..1.0)).collect();
    CompletionDistribution::from_weights(cands, w).expect("valid weights")
}

fn pair(p: &[f64]) -> CompletionDistribution<f64> {
    let cands = (0..p.len()).map(|i| normalize(&format!("c{i}"))).collect();
    CompletionDistribution::from_weights(cands, p.to_vec()).expect("valid weights")
}

fn kl_suite() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut min_distinct = f64::INFINITY;
    for i in 0..10_000 {
        let n = rng.random_range(2..=8);
        let p = random_dist(&mut rng, n);
        let q = random_dist(&mut rng, n);
        let pq = kl_divergence(&p, &q).map_err(err)?;
        let qp = kl_divergence(&q, &p).map_err(err)?;
        ensure!(
            pq >= 0.0 && qp >= 0.0,
            "pair {i}: negative divergence {pq} / {qp}"
        );
        let pp = kl_divergence(&p, &p).map_err(err)?;
        ensure!(pp.abs() <= 1e-12, "pair {i}: KL(P||P) = {pp}");
        let differ = p
            .probs()
            .iter()
            .zip(q.probs())
            .any(|(a, b)| (a - b).abs() > 1e-12);
        if differ {
            ensure!(pq > 1e-12, "pair {i}: distinct distributions with KL {pq}");
            min_distinct = min_distinct.min(pq);
        }
    }
    let p = pair(&[0.9, 0.1]);
    let q = pair(&[0.5, 0.5]);
    let pq = kl_divergence(&p, &q).map_err(err)?;
    let qp = kl_divergence(&q, &p).map_err(err)?;
    let r4 = |x: f64| (x * 1e4).round() / 1e4;
    ensure!(
        r4(pq) == 0.3681 && r4(qp) == 0.5108,
        "asymmetry example gave {pq:.6} / {qp:.6}"
    );
    Ok(format!(
        "10^4 pairs; min distinct KL {min_distinct:.3e}; KL(P||Q)={pq:.4}, KL(Q||P)={qp:.4}"
    ))
}

// Counterfactual precedent edits.

const GRID: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

struct EditFixture {
    actor: Actor<f64>,
    observation: SymbolSeq,
    a: SymbolSeq,
    alt: SymbolSeq,
}

fn edit_fixture(rng: &mut ChaCha8Rng) -> EditFixture {
    let obs_pool = [
        "you pass a stranger on the narrow path",
        "a cart blocks the lane",
        "two walkers meet at the bridge",
    ];
    let observation = normalize(obs_pool[rng.random_range(0..obs_pool.len())]);
    let other_obs = normalize("the square is empty at dawn");
    let a = normalize("keep left");
    let alt = normalize("keep right");
    let still = normalize("stand still");

    let mut t = TablePcn::<f64>::new(rng.random_range(0.5..2.0));
    let w = |rng: &mut ChaCha8Rng| (rng.random_range(1..=8) as f64) * 0.125;
    for f in ["left", "keep left", "left after"] {
        t.set_weight(f, "keep left", w(rng)).unwrap();
    }
    for f in ["right", "keep right", "right after"] {
        t.set_weight(f, "keep right", w(rng)).unwrap();
    }
    for f in ["keep", "path", "bridge", "lane", "did keep", "rude"] {
        let c = ["keep left", "keep right", "stand still"][rng.random_range(0..3)];
        t.set_weight(f, c, w(rng)).unwrap();
    }
    t.set_weight("still", "stand still", w(rng)).unwrap();

    let h = rng.random_range(1..=6);
    let extra = rng.random_range(0..=4);
    let mut records = Vec::new();
    for _ in 0..h {
        records.push((observation.clone(), a.clone()));
    }
    for _ in 0..extra {
        let o = if rng.random_bool(0.5) {
            observation.clone()
        } else {
            other_obs.clone()
        };
        let act = [&a, &alt, &still][rng.random_range(0..3)].clone();
        if o == observation && act == a {
            continue;
        }
        records.push((o, act));
    }
    for i in (1..records.len()).rev() {
        records.swap(i, rng.random_range(0..=i));
    }
    let mut bank = MemoryBank::new();
    for (i, (o, act)) in records.into_iter().enumerate() {
        let subject = ["ana", "ben", "cy"][rng.random_range(0..3)];
        let mut r = MemoryRecord::new(i as u64, "w", subject, o, act.clone());
        if act == a && rng.random_bool(0.3) {
            r = r.with_sanction(Sanction {
                by: "dee".into(),
                signal: normalize("that is rude"),
                valence: Valence::Disapprove,
            });
        }
        bank.write(r).unwrap();
    }
    // Every record containing the query ties at similarity 1, so the window
    // is the k most recent of them and which records get edited matters.
    let k = rng.random_range(1..=bank.len() + 2);
    let actor = Actor::new("w", Arc::new(t))
        .unwrap()
        .with_logic(DecisionLogic::recall(k))
        .with_metric(SimilarityMetric::WeightedOverlap {
            weights: Default::default(),
            default_weight: 1.0,
        })
        .with_candidates("actions", [a.render(), alt.render(), still.render()])
        .with_bank(bank);
    EditFixture {
        actor,
        observation,
        a,
        alt,
    }
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

/// Exact `E[p(alt)]` over all equally likely edit subsets at fraction `f`.
fn oracle_prob_alt(fx: &EditFixture, f: f64) -> f64 {
    let records: Vec<MemoryRecord> = fx.actor.bank.records().cloned().collect();
    let matching: Vec<usize> = records
        .iter()
        .enumerate()
        .filter(|(_, r)| r.observation == fx.observation && r.action == fx.a)
        .map(|(i, _)| i)
        .collect();
    let n = (f * matching.len() as f64 + 0.5).floor() as usize;
    let subsets = combinations(matching.len(), n);
    let total: f64 = subsets
        .iter()
        .map(|sub| {
            let mut edited = records.clone();
            for &j in sub {
                edited[matching[j]].set_action(fx.alt.clone());
            }
            let bank = MemoryBank::from_records(edited).unwrap();
            let d = fx
                .actor
                .pipeline_distribution(&bank, &fx.observation, &SymbolSeq::new())
                .unwrap();
            d.prob(&fx.alt).unwrap()
        })
        .sum();
    total / subsets.len() as f64
}

fn rf_monotonicity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut worst_mc = 0.0f64;
    let mut worst_exact = 0.0f64;
    for i in 0..100 {
        let fx = edit_fixture(&mut rng);
        let alt_idx = fx
            .actor
            .action_candidates()
            .map_err(err)?
            .iter()
            .position(|c| *c == fx.alt)
            .unwrap();
        let base = EditSpec {
            candidates: fx.actor.action_candidates().map_err(err)?.to_vec(),
            ..EditSpec::new(fx.observation.clone(), fx.a.clone(), fx.alt.clone(), 0.0)
        };
        let exact_opts = ProbeOptions::<f64>::default();
        let mc_opts = ProbeOptions::<f64> {
            force_monte_carlo: true,
            shuffles: 2048,
            ..ProbeOptions::default()
        };
        let mut prev = f64::NEG_INFINITY;
        for (g, &f) in GRID.iter().enumerate() {
            let oracle = oracle_prob_alt(&fx, f);
            ensure!(
                oracle >= prev - 1e-9,
                "fixture {i}: oracle p(alt) fell from {prev} to {oracle} at f={f}"
            );
            prev = oracle;
            let spec = base.at(f, SeedStream::new(i).child("grid").child(g));
            let (exact, _, was_exact) =
                expected_edit_distribution(&fx.actor, &fx.actor.bank, &spec, &exact_opts)
                    .map_err(err)?;
            ensure!(was_exact, "fixture {i}: engine did not enumerate");
            worst_exact = worst_exact.max((exact[alt_idx] - oracle).abs());
            let (mc, _, _) = expected_edit_distribution(&fx.actor, &fx.actor.bank, &spec, &mc_opts)
                .map_err(err)?;
            worst_mc = worst_mc.max((mc[alt_idx] - oracle).abs());
        }
    }
    ensure!(
        worst_exact <= 1e-9,
        "engine enumeration off the oracle by {worst_exact:.3e}"
    );
    ensure!(
        worst_mc <= 0.02,
        "Monte Carlo off the oracle by {worst_mc:.4}"
    );
    Ok(format!(
        "100 fixtures monotone; |exact-oracle| <= {worst_exact:.1e}, |MC-oracle| <= {worst_mc:.4}"
    ))
}

// Sanction definition identity.

fn sanction_identity() -> Check {
    let vocab = [
        "eat",
        "the",
        "apple",
        "banana",
        "is",
        "forbidden",
        "rude",
        "now",
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    let phrase = |rng: &mut ChaCha8Rng, lo: usize, hi: usize| -> SymbolSeq {
        let n = rng.random_range(lo..=hi);
        let words: Vec<&str> = (0..n)
            .map(|_| vocab[rng.random_range(0..vocab.len())])
            .collect();
        normalize(&words.join(" "))
    };
    let (mut trues, mut disagreements) = (0, 0);
    for _ in 0..1_000 {
        let a = normalize("eat the banana");
        let alt = normalize("eat the apple");
        let tau = [0.5, 1.0, 2.0][rng.random_range(0..3)];
        let mut t = TablePcn::<f64>::new(tau);
        for _ in 0..rng.random_range(1..=12) {
            let f = if rng.random_bool(0.5) {
                vocab[rng.random_range(0..vocab.len())].to_string()
            } else {
                format!(
                    "{} {}",
                    vocab[rng.random_range(0..vocab.len())],
                    vocab[rng.random_range(0..vocab.len())]
                )
            };
            let target = if rng.random_bool(0.5) { &a } else { &alt };
            t.set_weight(&f, target.render(), rng.random_range(0..=8) as f64 * 0.25)
                .unwrap();
        }
        let c = phrase(&mut rng, 1, 6);
        let s = phrase(&mut rng, 1, 4);
        let cs = c.with_line(&s);
        let got = sanction_test(&t, &c, &s, &a, &alt).map_err(err)?;
        let raw = |ctx: &SymbolSeq| {
            let r = t.raw_scores(ctx, &[a.clone(), alt.clone()]);
            (r[0], r[1])
        };
        let (sa, salt) = raw(&c);
        let (sa_s, salt_s) = raw(&cs);
        let brute = salt > sa && salt_s < sa_s;
        trues += usize::from(brute);
        disagreements += usize::from(brute != got);
    }
    ensure!(
        disagreements == 0,
        "{disagreements} disagreements in 10^3 instances"
    );
    ensure!(trues > 0, "no instance exercised a true verdict");
    Ok(format!(
        "10^3 instances, 0 disagreements ({trues} true verdicts)"
    ))
}

// Collective policy factorization.

fn softmax_floored(raw: &[f64], tau: f64) -> Vec<f64> {
    let max = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = raw.iter().map(|s| ((s - max) / tau).exp()).collect();
    let z: f64 = e.iter().sum();
    let n = raw.len() as f64;
    e.iter()
        .map(|x| (1.0 - n * MASS_FLOOR) * x / z + MASS_FLOOR)
        .collect()
}

fn factorization() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let words = ["red", "blue", "go", "stop", "wait", "turn", "left", "right"];
    let mut worst = 0.0f64;
    for trial in 0..200 {
        let mut actors = Vec::new();
        let mut tables = Vec::new();
        let mut workspaces = Vec::new();
        for i in 0..3 {
            let m = rng.random_range(1..=4);
            let cands: Vec<String> = words[..m + 2]
                .iter()
                .skip(rng.random_range(0..=2))
                .take(m)
                .map(|w| format!("{w} now"))
                .collect();
            let mut t = TablePcn::<f64>::new(rng.random_range(0.5..2.0));
            for f in words {
                let c = &cands[rng.random_range(0..cands.len())];
                t.set_weight(f, c.clone(), rng.random_range(0.0..3.0))
                    .unwrap();
            }
            let actor = Actor::new(&format!("a{i}"), Arc::new(t.clone()))
                .unwrap()
                .with_candidates("actions", cands.clone());
            let o = normalize(&format!(
                "{} {} {}",
                words[rng.random_range(0..8)],
                words[rng.random_range(0..8)],
                words[rng.random_range(0..8)]
            ));
            let ws = actor
                .prepare(
                    &actor.bank,
                    &o,
                    &SymbolSeq::new(),
                    0,
                    &SeedStream::new(trial),
                )
                .map_err(err)?;
            actors.push(actor);
            tables.push(t);
            workspaces.push(ws);
        }
        let refs: Vec<&Actor<f64>> = actors.iter().collect();
        let joint = collective_policy(&refs, &workspaces).map_err(err)?;
        let marginals: Vec<(Vec<SymbolSeq>, Vec<f64>)> = (0..3)
            .map(|i| {
                let cands = actors[i].action_candidates().unwrap().to_vec();
                let ctx = actors[i].policy_context(&workspaces[i]);
                let raw = tables[i].raw_scores(&ctx, &cands);
                (cands, softmax_floored(&raw, tables[i].temperature()))
            })
            .collect();
        let mut total = 0.0;
        let mut count = 0;
        for (i0, c0) in marginals[0].0.iter().enumerate() {
            for (i1, c1) in marginals[1].0.iter().enumerate() {
                for (i2, c2) in marginals[2].0.iter().enumerate() {
                    let expect = marginals[0].1[i0] * marginals[1].1[i1] * marginals[2].1[i2];
                    let got = joint
                        .prob(&[c0.clone(), c1.clone(), c2.clone()])
                        .ok_or("tuple missing from joint")?;
                    worst = worst.max((got - expect).abs());
                    total += got;
                    count += 1;
                }
            }
        }
        ensure!(
            joint.tuples().len() == count,
            "trial {trial}: tuple count mismatch"
        );
        ensure!(
            (total - 1.0).abs() <= 1e-12,
            "trial {trial}: joint mass {total}"
        );
    }
    ensure!(worst <= 1e-12, "joint off the enumeration by {worst:.3e}");
    Ok(format!(
        "200 trials of 3 actors x <= 4 candidates; max deviation {worst:.1e}"
    ))
}

// Population experiments.

fn stability() -> Check {
    let cfg = load("stability.scenario")?;
    let out = run_stability(&cfg, &mut no_progress()).map_err(err)?;
    let c = detail_f64(&out.report, "/details/final_compliance")?;
    ensure!(
        cfg.actors
            .iter()
            .map(|a| a.count.unwrap_or(1))
            .sum::<usize>()
            == 20,
        "fixture is not 20 actors"
    );
    ensure!(
        out.verdict == Some(true),
        "final compliance {c:.3} below threshold"
    );
    let abl = load("stability-ablation.scenario")?;
    ensure!(
        abl.environment.rules.iter().all(|r| r.sanction.is_none()),
        "ablation still sanctions"
    );
    let ab = run_stability(&abl, &mut no_progress()).map_err(err)?;
    let ca = detail_f64(&ab.report, "/details/final_compliance")?;
    ensure!(ca < 0.6, "ablation compliance {ca:.3} not below 0.6");
    Ok(format!(
        "compliance {c:.3} over final 50 ticks; ablation {ca:.3}"
    ))
}

fn adoption() -> Check {
    let cfg = load("adoption.scenario")?;
    let out = run_adoption(&cfg, &mut no_progress()).map_err(err)?;
    let naive = detail_f64(&out.report, "/details/naive_compliance")?;
    let fin = detail_f64(&out.report, "/details/final_compliance")?;
    ensure!(
        naive < 0.6 && fin >= 0.8 && out.verdict == Some(true),
        "newcomer {naive:.2} -> {fin:.2}"
    );
    let abl = load("adoption-ablation.scenario")?;
    let ab = run_adoption(&abl, &mut no_progress()).map_err(err)?;
    let an = detail_f64(&ab.report, "/details/naive_compliance")?;
    let af = detail_f64(&ab.report, "/details/final_compliance")?;
    ensure!(
        ab.verdict == Some(false),
        "witness-disabled newcomer still adopted ({an:.2} -> {af:.2})"
    );
    Ok(format!(
        "newcomer {naive:.2} -> {fin:.2}; witness-disabled {an:.2} -> {af:.2} fails"
    ))
}

// Consolidation.

fn random_records(rng: &mut ChaCha8Rng, n: usize, t0: u64) -> Vec<MemoryRecord> {
    let obs = [
        "a path",
        "the narrow path",
        "a busy bridge",
        "an apple on the table",
    ];
    let acts = ["keep left", "keep right", "eat the apple"];
    (0..n)
        .map(|i| {
            MemoryRecord::new(
                t0 + i as u64,
                "x",
                "x",
                normalize(obs[rng.random_range(0..obs.len())]),
                normalize(acts[rng.random_range(0..acts.len())]),
            )
        })
        .collect()
}

fn weight_keys(a: &TablePcn<f64>, b: &TablePcn<f64>) -> BTreeSet<(String, String)> {
    a.entries()
        .chain(b.entries())
        .map(|(f, c, _)| (f.to_string(), c.to_string()))
        .collect()
}

fn consolidation() -> Check {
    let cfg = load("golden.scenario")?;
    let out = run_consolidation(&cfg, &mut no_progress()).map_err(err)?;
    let gap = detail_f64(&out.report, "/details/gap/post_gap")?;
    let pre = detail_f64(&out.report, "/details/precedence/delta_pre")?;
    let post = detail_f64(&out.report, "/details/precedence/delta_post")?;
    ensure!(gap <= 0.05, "post-consolidation gap {gap:.4}");
    ensure!(post < pre, "precedence delta {pre:.4} -> {post:.4}");

    let mut rng = ChaCha8Rng::seed_from_u64(53);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let mut t = TablePcn::<f64>::new(1.0);
        for f in ["path", "apple", "keep"] {
            t.set_weight(f, "keep left", rng.random_range(0.0..2.0))
                .unwrap();
        }
        let (n1, n2) = (rng.random_range(0..6), rng.random_range(0..6));
        let b1 = random_records(&mut rng, n1, 0);
        let b2 = random_records(&mut rng, n2, 10);
        let c = ConsolidationConfig {
            replay_passes: rng.random_range(1..=10),
            learning_rate: rng.random_range(0.01..0.5),
            ..ConsolidationConfig::default()
        };
        let seq = consolidate_records(&consolidate_records(&t, &b1, &c).map_err(err)?, &b2, &c)
            .map_err(err)?;
        let joint = consolidate_records(&t, b1.iter().chain(&b2), &c).map_err(err)?;
        for (f, k) in weight_keys(&seq, &joint) {
            worst = worst.max((seq.weight(&f, &k) - joint.weight(&f, &k)).abs());
        }
    }
    ensure!(worst <= 1e-12, "additivity off by {worst:.3e}");
    Ok(format!(
        "post gap {gap:.2e}; delta {pre:.4} -> {post:.4}; additivity within {worst:.1e}"
    ))
}

// Determinism of shipped scenarios.

const SHIPPED: [&str; 7] = [
    "golden.scenario",
    "crt.scenario",
    "stability.scenario",
    "stability-ablation.scenario",
    "adoption.scenario",
    "adoption-ablation.scenario",
    "minority.scenario",
];

fn determinism() -> Check {
    let tmp = tempfile::tempdir().map_err(err)?;
    for name in SHIPPED {
        let cfg = load(name)?;
        let mut files = Vec::new();
        for run in 0..2 {
            let dir = tmp.path().join(format!("{name}.{run}"));
            let out = run_experiment(&cfg, &mut no_progress()).map_err(err)?;
            write_outcome(&cfg, &out, &dir).map_err(err)?;
            let read = |f: &str| std::fs::read(dir.join(f)).unwrap_or_default();
            files.push((read(&cfg.output.events), read(&cfg.output.metrics)));
        }
        ensure!(!files[0].0.is_empty(), "{name}: empty event log");
        ensure!(files[0].0 == files[1].0, "{name}: event logs differ");
        ensure!(files[0].1 == files[1].1, "{name}: metrics differ");
    }
    Ok(format!(
        "{} scenarios byte-identical across runs",
        SHIPPED.len()
    ))
}

type Criterion = (&'static str, Option<Duration>, fn() -> Check);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("golden apple/banana", Some(Duration::from_secs(1)), golden),
        ("KL suite", Some(Duration::from_secs(5)), kl_suite),
        (
            "R_f monotonicity",
            Some(Duration::from_secs(120)),
            rf_monotonicity,
        ),
        ("sanction identity", None, sanction_identity),
        ("policy factorization", None, factorization),
        ("stability", Some(Duration::from_secs(60)), stability),
        ("adoption", Some(Duration::from_secs(60)), adoption),
        ("consolidation", None, consolidation),
        ("determinism", None, determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, limit, check) in criteria {
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|p| Err(format!("panicked: {}", panic_message(&p))));
        let took = start.elapsed();
        let result = match (result, limit) {
            (Ok(_), Some(l)) if took > l => Err(format!("took {took:.2?}, limit {l:?}")),
            (r, _) => r,
        };
        let (word, detail) = match &result {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        failed += usize::from(result.is_err());
        println!("{word}  {name:<22} {detail} [{took:.2?}]");
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}

fn panic_message(p: &Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| p.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "unknown".into())
}
