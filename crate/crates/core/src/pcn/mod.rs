//! Pattern-completion networks: the behavioral interface `p(· | context)`
//! restricted to an explicit candidate set.

mod distribution;
pub mod remote;
pub mod table;

use std::fmt::Debug;

pub use distribution::CompletionDistribution;
pub use remote::{RemoteConfig, RemotePcn};
pub use table::{FeatureExtractor, SlotTag, TablePcn};

use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seed::SeedStream;
use crate::symbols::SymbolSeq;

/// A model that scores completions of a context.
pub trait Pcn<S: Scalar>: Send + Sync + Debug {
    /// Normalized distribution over exactly `candidates`.
    fn score(
        &self,
        context: &SymbolSeq,
        candidates: &[SymbolSeq],
    ) -> Result<CompletionDistribution<S>>;

    /// Open-ended continuation. Only remote backends support this.
    fn generate(&self, _context: &SymbolSeq, _temperature: f64, _seed: u64) -> Result<SymbolSeq> {
        Err(Error::BackendUnsupported("open-ended generation".into()))
    }

    /// The inspectable table behind this model, if any.
    fn as_table(&self) -> Option<&TablePcn<S>> {
        None
    }
}

/// Reject empty or duplicated candidate lists.
pub fn check_candidates(candidates: &[SymbolSeq]) -> Result<()> {
    if candidates.is_empty() {
        return Err(Error::InvalidCandidates("empty".into()));
    }
    for (i, c) in candidates.iter().enumerate() {
        if candidates[..i].contains(c) {
            return Err(Error::InvalidCandidates(format!(
                "duplicate {:?}",
                c.render()
            )));
        }
    }
    Ok(())
}

/// Score, then draw one candidate with the RNG derived from `seed`.
pub fn sample<S: Scalar>(
    p: &dyn Pcn<S>,
    context: &SymbolSeq,
    candidates: &[SymbolSeq],
    seed: &SeedStream,
) -> Result<SymbolSeq> {
    let dist = p.score(context, candidates)?;
    let mut rng = seed.rng();
    Ok(dist.draw(&mut rng).clone())
}

/// Arithmetic mean of the members' distributions, `E_i p_i(· | c)`.
pub fn population_average<S: Scalar>(
    members: &[&dyn Pcn<S>],
    context: &SymbolSeq,
    candidates: &[SymbolSeq],
) -> Result<CompletionDistribution<S>> {
    if members.is_empty() {
        return Err(Error::InvalidArgument("population is empty".into()));
    }
    check_candidates(candidates)?;
    let mut acc = vec![S::zero(); candidates.len()];
    for m in members {
        let d = m.score(context, candidates)?;
        for (slot, c) in acc.iter_mut().zip(candidates) {
            *slot = *slot + d.prob(c).unwrap_or_else(S::zero);
        }
    }
    let n = S::from_usize(members.len()).expect("member count fits scalar");
    let mean: Vec<S> = acc.into_iter().map(|x| x / n).collect();
    CompletionDistribution::from_weights(candidates.to_vec(), mean)
}

pub(crate) fn uniform_draw<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::normalize;

    fn cands(xs: &[&str]) -> Vec<SymbolSeq> {
        xs.iter().map(|s| normalize(s)).collect()
    }

    fn two_way(w_x: f64, w_y: f64) -> TablePcn<f64> {
        let mut t = TablePcn::new(1.0);
        t.set_weight("go", "x", w_x).unwrap();
        t.set_weight("go", "y", w_y).unwrap();
        t
    }

    #[test]
    fn softmax_two_candidates_matches_hand_value() {
        let mut t = TablePcn::<f64>::new(1.0);
        t.set_weight("hungry", "eat apple", 2.0).unwrap();
        let d = t
            .score(&normalize("hungry"), &cands(&["eat apple", "eat banana"]))
            .unwrap();
        // e^2 / (e^2 + 1)
        let expected = 2f64.exp() / (2f64.exp() + 1.0);
        assert!((d.prob(&normalize("eat apple")).unwrap() - expected).abs() < 1e-9);
        assert!((expected - 0.8808).abs() < 1e-4);
    }

    #[test]
    fn single_candidate_is_certain() {
        let t = two_way(3.0, 0.0);
        let d = t.score(&normalize("go"), &cands(&["x"])).unwrap();
        assert!((d.prob(&normalize("x")).unwrap() - 1.0).abs() < 1e-12);
        let s = sample(&t, &normalize("go"), &cands(&["x"]), &SeedStream::new(9)).unwrap();
        assert_eq!(s, normalize("x"));
    }

    #[test]
    fn empty_or_duplicate_candidates_rejected() {
        let t = two_way(1.0, 1.0);
        assert!(t.score(&normalize("go"), &[]).is_err());
        assert!(t.score(&normalize("go"), &cands(&["x", "x"])).is_err());
    }

    #[test]
    fn fixed_seed_draws_identically() {
        let t = two_way(0.0, 0.0);
        let seed = SeedStream::new(42);
        let a = sample(&t, &normalize("go"), &cands(&["x", "y"]), &seed).unwrap();
        let b = sample(&t, &normalize("go"), &cands(&["x", "y"]), &seed).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sample_frequencies_track_scores() {
        let t = two_way(2.0, 0.0);
        let c = cands(&["x", "y"]);
        let d = t.score(&normalize("go"), &c).unwrap();
        let px = d.prob(&c[0]).unwrap();
        let n = 100_000;
        let root = SeedStream::new(5);
        let hits = (0..n)
            .filter(|i| sample(&t, &normalize("go"), &c, &root.child(i)).unwrap() == c[0])
            .count();
        let freq = hits as f64 / n as f64;
        assert!((freq - px).abs() < 0.01, "freq {freq} vs {px}");
    }

    #[test]
    fn population_of_identical_members() {
        let t = two_way(1.5, 0.2);
        let c = cands(&["x", "y"]);
        let single = t.score(&normalize("go"), &c).unwrap();
        let avg = population_average(&[&t, &t, &t], &normalize("go"), &c).unwrap();
        for cand in &c {
            assert!((single.prob(cand).unwrap() - avg.prob(cand).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn population_of_opposites_is_even() {
        // Large margins put all but the floor mass on one side.
        let a = two_way(60.0, 0.0);
        let b = two_way(0.0, 60.0);
        let c = cands(&["x", "y"]);
        let avg = population_average(&[&a, &b], &normalize("go"), &c).unwrap();
        assert!((avg.prob(&c[0]).unwrap() - 0.5).abs() < 1e-9);
        assert!((avg.prob(&c[1]).unwrap() - 0.5).abs() < 1e-9);
        assert!(population_average::<f64>(&[], &normalize("go"), &c).is_err());
    }
}
