use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_candidates, uniform_draw};
use crate::error::{Error, Result};
use crate::scalar::{Scalar, MASS_FLOOR};
use crate::symbols::SymbolSeq;

/// Normalized probability mass over a finite, duplicate-free candidate set.
///
/// Every probability is at least [`MASS_FLOOR`], so divergences between two
/// distributions over the same candidates are always finite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompletionDistribution<S: Scalar> {
    candidates: Vec<SymbolSeq>,
    probs: Vec<S>,
}

impl<S: Scalar> CompletionDistribution<S> {
    /// Normalize nonnegative weights and apply the mass floor.
    pub fn from_weights(candidates: Vec<SymbolSeq>, weights: Vec<S>) -> Result<Self> {
        check_candidates(&candidates)?;
        if weights.len() != candidates.len() {
            return Err(Error::InvalidArgument(format!(
                "{} weights for {} candidates",
                weights.len(),
                candidates.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < S::zero()) {
            return Err(Error::InvalidArgument(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let total: S = weights.iter().copied().sum();
        let probs = if total > S::zero() {
            weights.into_iter().map(|w| w / total).collect()
        } else {
            let u = S::one() / S::from_usize(candidates.len()).expect("len fits scalar");
            vec![u; candidates.len()]
        };
        Ok(Self::floored(candidates, probs))
    }

    /// Temperature softmax of real-valued scores (logits or log-probabilities).
    pub fn from_scores(candidates: Vec<SymbolSeq>, scores: &[S], temperature: S) -> Result<Self> {
        check_candidates(&candidates)?;
        if scores.len() != candidates.len() {
            return Err(Error::InvalidArgument("score count mismatch".into()));
        }
        if temperature.is_nan() || temperature <= S::zero() {
            return Err(Error::InvalidArgument(
                "temperature must be positive".into(),
            ));
        }
        if scores.iter().any(|s| s.is_nan() || *s == S::infinity()) {
            return Err(Error::InvalidArgument(
                "scores must be finite or -inf".into(),
            ));
        }
        let max = scores
            .iter()
            .copied()
            .fold(S::neg_infinity(), |m, s| if s > m { s } else { m });
        let exps: Vec<S> = if max == S::neg_infinity() {
            vec![S::one(); scores.len()]
        } else {
            scores
                .iter()
                .map(|&s| ((s - max) / temperature).exp())
                .collect()
        };
        let total: S = exps.iter().copied().sum();
        let probs = exps.into_iter().map(|e| e / total).collect();
        Ok(Self::floored(candidates, probs))
    }

    // (1 - n*eps) * p + eps keeps the total at 1 and every entry >= eps.
    fn floored(candidates: Vec<SymbolSeq>, probs: Vec<S>) -> Self {
        let eps = S::lit(MASS_FLOOR);
        let n = S::from_usize(probs.len()).expect("len fits scalar");
        let scale = S::one() - n * eps;
        let probs = probs.into_iter().map(|p| scale * p + eps).collect();
        let d = Self { candidates, probs };
        debug_assert!(d.check().is_ok(), "{:?}", d.check());
        d
    }

    pub fn candidates(&self) -> &[SymbolSeq] {
        &self.candidates
    }

    pub fn probs(&self) -> &[S] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&SymbolSeq, S)> {
        self.candidates.iter().zip(self.probs.iter().copied())
    }

    pub fn prob(&self, candidate: &SymbolSeq) -> Option<S> {
        self.candidates
            .iter()
            .position(|c| c == candidate)
            .map(|i| self.probs[i])
    }

    /// Highest-probability candidate; ties go to the earlier candidate.
    pub fn argmax(&self) -> &SymbolSeq {
        let mut best = 0;
        for (i, p) in self.probs.iter().enumerate() {
            if *p > self.probs[best] {
                best = i;
            }
        }
        &self.candidates[best]
    }

    /// Inverse-CDF draw.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> &SymbolSeq {
        let u = uniform_draw(rng);
        let mut acc = 0.0;
        for (c, p) in self.iter() {
            acc += p.as_f64();
            if u < acc {
                return c;
            }
        }
        self.candidates.last().expect("nonempty by construction")
    }

    pub fn same_support(&self, other: &Self) -> bool {
        self.len() == other.len() && self.candidates.iter().all(|c| other.prob(c).is_some())
    }

    /// `other`'s probabilities in `self`'s candidate order.
    pub fn aligned(&self, other: &Self) -> Result<Vec<S>> {
        if !self.same_support(other) {
            return Err(Error::CandidateMismatch);
        }
        Ok(self
            .candidates
            .iter()
            .map(|c| other.prob(c).expect("support checked"))
            .collect())
    }

    /// Half the L1 distance.
    pub fn total_variation(&self, other: &Self) -> Result<S> {
        let q = self.aligned(other)?;
        let half = S::lit(0.5);
        Ok(half
            * self
                .probs
                .iter()
                .zip(q)
                .map(|(&p, q)| (p - q).abs())
                .sum::<S>())
    }

    /// Invariant check: matching lengths, unit mass, floor respected.
    pub fn check(&self) -> Result<()> {
        check_candidates(&self.candidates)?;
        if self.probs.len() != self.candidates.len() {
            return Err(Error::InvalidArgument("length mismatch".into()));
        }
        let total: S = self.probs.iter().copied().sum();
        if (total - S::one()).abs() > S::mass_tolerance() {
            return Err(Error::InvalidArgument(format!("mass {total} != 1")));
        }
        // f32 rounding can land a hair under the floor.
        let floor = S::lit(MASS_FLOOR) * (S::one() - S::mass_tolerance());
        if self
            .probs
            .iter()
            .any(|p| *p < floor || *p > S::one() + S::mass_tolerance())
        {
            return Err(Error::InvalidArgument(
                "probability outside [floor, 1]".into(),
            ));
        }
        Ok(())
    }

    pub fn map_scalar<T: Scalar>(&self) -> CompletionDistribution<T> {
        CompletionDistribution {
            candidates: self.candidates.clone(),
            probs: self.probs.iter().map(|p| T::lit(p.as_f64())).collect(),
        }
    }
}
