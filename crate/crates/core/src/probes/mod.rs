//! Operators for measuring conventions, sanctions and norms.

mod norm;
mod sensitivity;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

pub use norm::{classify_norm, NormEvidence, NormQuery, NormReport, NormVerdict, Thresholds};
pub use sensitivity::{
    convention_sensitivity_contextfree, convention_sensitivity_contextual,
    expected_edit_distribution, sanction_sensitivity, sanction_test, GridPoint, Mass, ProbeOptions,
    SensitivityReport,
};

use crate::error::{Error, Result};
use crate::memory::MemoryBank;
use crate::pcn::{CompletionDistribution, Pcn};
use crate::scalar::Scalar;
use crate::seed::SeedStream;
use crate::symbols::SymbolSeq;

/// `Σ P_i ln(P_i / Q_i)` in nats over a shared candidate set.
pub fn kl_divergence<S: Scalar>(
    p: &CompletionDistribution<S>,
    q: &CompletionDistribution<S>,
) -> Result<S> {
    let q = p.aligned(q)?;
    let kl = p
        .probs()
        .iter()
        .zip(q)
        .map(|(&pi, qi)| pi * (pi / qi).ln())
        .sum::<S>();
    // Rounding can leave a tiny negative residue when P == Q.
    Ok(kl.max(S::zero()))
}

/// Replace every non-overlapping run of `u` in `c` by `v`, left to right.
pub fn substitute(c: &SymbolSeq, u: &SymbolSeq, v: &SymbolSeq) -> SymbolSeq {
    if u.is_empty() {
        return c.clone();
    }
    let toks = c.tokens();
    let pat = u.tokens();
    let mut out = Vec::with_capacity(toks.len());
    let mut i = 0;
    while i < toks.len() {
        if toks[i..].starts_with(pat) {
            out.extend(v.tokens().iter().cloned());
            i += pat.len();
        } else {
            out.push(toks[i].clone());
            i += 1;
        }
    }
    SymbolSeq::from_tokens(out)
}

/// Whether substituting `v` for `u` in `c` moves `p` by less than `epsilon`
/// nats, with the divergence itself.
pub fn epsilon_similar<S: Scalar>(
    p: &dyn Pcn<S>,
    c: &SymbolSeq,
    u: &SymbolSeq,
    v: &SymbolSeq,
    epsilon: f64,
    candidates: &[SymbolSeq],
) -> Result<(bool, S)> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::InvalidArgument("epsilon must be positive".into()));
    }
    let before = p.score(c, candidates)?;
    let after = p.score(&substitute(c, u, v), candidates)?;
    let kl = kl_divergence(&before, &after)?;
    Ok((kl < S::lit(epsilon), kl))
}

/// How records are judged "contextually relevant" to an edit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Matcher {
    /// Normalized observation and action equal the edit's.
    #[default]
    ExactField,
    /// Observation and action are each ε-similar under a probe model.
    EpsilonSimilar,
}

pub const DEFAULT_EPSILON: f64 = 1e-6;

/// Parameters of a counterfactual precedent edit `R_f^{a→a'}`.
#[derive(Clone, Debug, PartialEq)]
pub struct EditSpec {
    pub observation: SymbolSeq,
    pub context: SymbolSeq,
    pub from: SymbolSeq,
    pub to: SymbolSeq,
    pub fraction: f64,
    pub matcher: Matcher,
    pub epsilon: f64,
    /// Candidate set for the ε checks; `[from, to]` when empty.
    pub candidates: Vec<SymbolSeq>,
    pub seed: SeedStream,
}

impl EditSpec {
    pub fn new(observation: SymbolSeq, from: SymbolSeq, to: SymbolSeq, fraction: f64) -> Self {
        Self {
            observation,
            context: SymbolSeq::new(),
            from,
            to,
            fraction,
            matcher: Matcher::ExactField,
            epsilon: DEFAULT_EPSILON,
            candidates: Vec::new(),
            seed: SeedStream::new(0).child("edit"),
        }
    }

    fn check_candidates(&self) -> Vec<SymbolSeq> {
        if self.candidates.is_empty() {
            vec![self.from.clone(), self.to.clone()]
        } else {
            self.candidates.clone()
        }
    }

    /// Swap in a new fraction and seed.
    pub fn at(&self, fraction: f64, seed: SeedStream) -> Self {
        Self {
            fraction,
            seed,
            ..self.clone()
        }
    }
}

/// `round-half-up(f · h)`.
pub fn edit_count(fraction: f64, matches: usize) -> usize {
    (fraction * matches as f64 + 0.5).floor() as usize
}

fn context_kl<S: Scalar>(
    probe: &dyn Pcn<S>,
    a: &SymbolSeq,
    b: &SymbolSeq,
    candidates: &[SymbolSeq],
) -> Result<S> {
    let pa = probe.score(a, candidates)?;
    let pb = probe.score(b, candidates)?;
    kl_divergence(&pa, &pb)
}

/// Validate `spec` and list the indices of matching records in `bank`.
pub fn matching_records<S: Scalar>(
    bank: &MemoryBank,
    spec: &EditSpec,
    probe: Option<&dyn Pcn<S>>,
) -> Result<Vec<usize>> {
    if !(0.0..=1.0).contains(&spec.fraction) {
        return Err(Error::InvalidEdit(format!(
            "fraction {} outside [0, 1]",
            spec.fraction
        )));
    }
    if spec.from == spec.to {
        return Err(Error::InvalidEdit(
            "replacement action equals the original".into(),
        ));
    }
    let cands = spec.check_candidates();
    let eps = S::lit(spec.epsilon);
    if let Some(p) = probe {
        let kl = context_kl(
            p,
            &spec.context.with_line(&spec.from),
            &spec.context.with_line(&spec.to),
            &cands,
        )?;
        if kl < eps {
            return Err(Error::InvalidEdit(format!(
                "replacement is ε-similar to the original (KL {kl})"
            )));
        }
    }
    match spec.matcher {
        Matcher::ExactField => Ok(bank
            .records()
            .enumerate()
            .filter(|(_, r)| r.observation == spec.observation && r.action == spec.from)
            .map(|(i, _)| i)
            .collect()),
        Matcher::EpsilonSimilar => {
            let p = probe.ok_or(Error::SimilarityBackendMissing)?;
            let from_ctx = spec.context.with_line(&spec.from);
            let mut out = Vec::new();
            for (i, r) in bank.records().enumerate() {
                let obs_kl = context_kl(p, &spec.observation, &r.observation, &cands)?;
                if obs_kl >= eps {
                    continue;
                }
                let act_kl = context_kl(p, &from_ctx, &spec.context.with_line(&r.action), &cands)?;
                if act_kl < eps {
                    out.push(i);
                }
            }
            Ok(out)
        }
    }
}

/// Rewrite `to` into `n` of `indices` on a copy of `bank`.
pub fn rewrite(bank: &MemoryBank, indices: &[usize], to: &SymbolSeq) -> MemoryBank {
    let mut out = bank.clone();
    for &i in indices {
        out.get_mut(i)
            .expect("index from this bank")
            .set_action(to.clone());
    }
    out
}

/// `R_f^{a→a'}`: rewrite `round-half-up(f·|H|)` of the matching records `H`,
/// chosen by seeded shuffle. The input bank is left untouched.
pub fn counterfactual_edit<S: Scalar>(
    bank: &MemoryBank,
    spec: &EditSpec,
    probe: Option<&dyn Pcn<S>>,
) -> Result<MemoryBank> {
    let mut h = matching_records(bank, spec, probe)?;
    let n = edit_count(spec.fraction, h.len());
    h.shuffle(&mut spec.seed.rng());
    Ok(rewrite(bank, &h[..n], &spec.to))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pcn::TablePcn;
    use crate::record::MemoryRecord;
    use crate::symbols::normalize;
    use proptest::prelude::*;
    use std::collections::hash_map::DefaultHasher;
    use std::hash::{Hash, Hasher};

    fn dist(ps: &[f64]) -> CompletionDistribution<f64> {
        let c = (0..ps.len()).map(|i| normalize(&format!("c{i}"))).collect();
        CompletionDistribution::from_weights(c, ps.to_vec()).unwrap()
    }

    #[test]
    fn kl_hand_values() {
        let p = dist(&[0.9, 0.1]);
        let q = dist(&[0.5, 0.5]);
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
        // 0.9 ln 1.8 + 0.1 ln 0.2 and 0.5 ln(5/9) + 0.5 ln 5
        let pq = 0.9 * 1.8f64.ln() + 0.1 * 0.2f64.ln();
        let qp = 0.5 * (0.5f64 / 0.9).ln() + 0.5 * 5f64.ln();
        assert!((kl_divergence(&p, &q).unwrap() - pq).abs() < 1e-9);
        assert!((kl_divergence(&q, &p).unwrap() - qp).abs() < 1e-9);
        assert!((pq - 0.3681).abs() < 5e-5 && (qp - 0.5108).abs() < 5e-5);
        assert!(matches!(
            kl_divergence(&p, &dist(&[0.2, 0.3, 0.5])),
            Err(Error::CandidateMismatch)
        ));
    }

    #[test]
    fn substitution() {
        let c = normalize("eat the apple");
        assert_eq!(
            substitute(&c, &normalize("apple"), &normalize("banana")),
            normalize("eat the banana")
        );
        assert_eq!(substitute(&c, &normalize("pear"), &normalize("banana")), c);
        assert_eq!(
            substitute(&normalize("a a a"), &normalize("a a"), &normalize("b")),
            normalize("b a")
        );
        assert_eq!(substitute(&c, &SymbolSeq::new(), &normalize("x")), c);
    }

    #[test]
    fn epsilon_similarity() {
        let mut t = TablePcn::<f64>::new(1.0);
        for syn in ["sofa", "couch"] {
            t.set_weight(syn, "sit", 2.0).unwrap();
        }
        t.set_weight("floor", "stand", 2.0).unwrap();
        let cands = [normalize("sit"), normalize("stand")];
        let c = normalize("there is a sofa");
        let (same, kl) =
            epsilon_similar(&t, &c, &normalize("sofa"), &normalize("sofa"), 1e-9, &cands).unwrap();
        assert!(same && kl == 0.0);
        let (syn, kl) = epsilon_similar(
            &t,
            &c,
            &normalize("sofa"),
            &normalize("couch"),
            0.01,
            &cands,
        )
        .unwrap();
        assert!(syn && kl == 0.0);
        let (diff, _) =
            epsilon_similar(&t, &c, &normalize("sofa"), &normalize("floor"), 0.1, &cands).unwrap();
        assert!(!diff);
    }

    fn bank(actions: &[&str]) -> MemoryBank {
        MemoryBank::from_records(
            actions
                .iter()
                .enumerate()
                .map(|(t, a)| MemoryRecord::new(t as u64, "x", "x", normalize("o"), normalize(a))),
        )
        .unwrap()
    }

    fn hash(b: &MemoryBank) -> u64 {
        let mut h = DefaultHasher::new();
        b.hash(&mut h);
        h.finish()
    }

    fn spec(f: f64) -> EditSpec {
        EditSpec::new(normalize("o"), normalize("a"), normalize("b"), f)
    }

    #[test]
    fn edit_counts() {
        let b = bank(&["a", "a", "c", "a"]);
        assert_eq!(counterfactual_edit::<f64>(&b, &spec(0.0), None).unwrap(), b);
        let all = counterfactual_edit::<f64>(&b, &spec(1.0), None).unwrap();
        assert_eq!(
            all.records().filter(|r| r.action == normalize("b")).count(),
            3
        );
        assert!(all.records().all(|r| r.is_consistent()));
        let b4 = bank(&["a", "a", "a", "a"]);
        let s = EditSpec {
            seed: SeedStream::new(7),
            ..spec(0.5)
        };
        let half = counterfactual_edit::<f64>(&b4, &s, None).unwrap();
        assert_eq!(
            half.records()
                .filter(|r| r.action == normalize("b"))
                .count(),
            2
        );
        assert_eq!(edit_count(0.5, 3), 2);
        assert_eq!(edit_count(0.25, 2), 1);
    }

    #[test]
    fn edit_errors() {
        let b = bank(&["a"]);
        let s = EditSpec {
            matcher: Matcher::EpsilonSimilar,
            ..spec(1.0)
        };
        assert!(matches!(
            counterfactual_edit::<f64>(&b, &s, None),
            Err(Error::SimilarityBackendMissing)
        ));
        assert!(counterfactual_edit::<f64>(&b, &spec(1.5), None).is_err());
        let same = EditSpec::new(normalize("o"), normalize("a"), normalize("a"), 1.0);
        assert!(counterfactual_edit::<f64>(&b, &same, None).is_err());
        // A probe that cannot tell a from b rejects the edit.
        let blind = TablePcn::<f64>::new(1.0);
        assert!(counterfactual_edit::<f64>(&b, &spec(1.0), Some(&blind)).is_err());
    }

    #[test]
    fn epsilon_matcher_groups_synonyms() {
        let mut t = TablePcn::<f64>::new(1.0);
        t.set_weight("a", "a", 3.0).unwrap();
        t.set_weight("aa", "a", 3.0).unwrap();
        t.set_weight("b", "b", 3.0).unwrap();
        let b = bank(&["a", "aa", "c"]);
        let s = EditSpec {
            matcher: Matcher::EpsilonSimilar,
            ..spec(1.0)
        };
        let out = counterfactual_edit::<f64>(&b, &s, Some(&t)).unwrap();
        assert_eq!(
            out.records().filter(|r| r.action == normalize("b")).count(),
            2
        );
    }

    proptest! {
        #[test]
        fn kl_nonnegative(
            p in proptest::collection::vec(0.0..1.0f64, 2..6),
            q in proptest::collection::vec(0.0..1.0f64, 6),
        ) {
            let n = p.len();
            let dp = dist(&p);
            let dq = dist(&q[..n]);
            prop_assert!(kl_divergence(&dp, &dq).unwrap() >= 0.0);
        }

        #[test]
        fn edit_is_pure_and_exact(
            actions in proptest::collection::vec(prop_oneof!["a", "c"], 0..10),
            f in 0.0..=1.0f64,
            seed in any::<u64>(),
        ) {
            let refs: Vec<&str> = actions.iter().map(String::as_str).collect();
            let b = bank(&refs);
            let before = hash(&b);
            let s = EditSpec { seed: SeedStream::new(seed), ..spec(f) };
            let out = counterfactual_edit::<f64>(&b, &s, None).unwrap();
            prop_assert_eq!(hash(&b), before);
            let h = refs.iter().filter(|a| **a == "a").count();
            let flipped = out.records().filter(|r| r.action == normalize("b")).count();
            prop_assert_eq!(flipped, edit_count(f, h));
        }

        #[test]
        fn epsilon_reflexive(eps in 1e-12..10.0f64, w in 0.0..3.0f64) {
            let mut t = TablePcn::<f64>::new(1.0);
            t.set_weight("u", "x", w).unwrap();
            let cands = [normalize("x"), normalize("y")];
            let c = normalize("a u b");
            let (ok, _) = epsilon_similar(&t, &c, &normalize("u"), &normalize("u"), eps, &cands).unwrap();
            prop_assert!(ok);
        }
    }
}
