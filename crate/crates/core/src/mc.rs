//! Seed-reproducible Monte Carlo estimation of equal-or-better probabilities.
//!
//! Every replicate owns a generator derived only from `(master, index)`, so
//! a run's success count is a pure function of its inputs no matter how the
//! replicates are scheduled across threads.
//!
//! Frozen algorithms (golden tests depend on them):
//!
//! * Replicate seed: `mix(master + GAMMA * (index + 1))` with the SplitMix64
//!   constants `GAMMA = 0x9E3779B97F4A7C15` and finalizer
//!   `z ^= z >> 30; z *= 0xBF58476D1CE4E5B9; z ^= z >> 27;
//!   z *= 0x94D049BB133111EB; z ^= z >> 31` (all arithmetic wrapping). This
//!   is the `(index + 1)`-th output of a SplitMix64 stream started at
//!   `master`.
//! * Replicate generator: xoshiro256++ whose 256-bit state is filled with the
//!   first four SplitMix64 outputs of the replicate seed (little-endian).
//! * Uniform draw: `(next_u64 >> 11) * 2^-53`, in `[0, 1)`.
//! * Bernoulli(p): success iff the uniform draw is `< p`. A fair coin is
//!   Bernoulli(0.5).

use rand_core::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{binom_sf, binom_sf_strict, wilson_interval, BinomialQuery, Interval, Probability};

const SPLITMIX_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Smallest replicate count accepted by the estimators.
pub const MIN_REPLICATES: u64 = 100;

fn splitmix_finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for replicate `index` of a run started from `master`.
pub fn derive_replicate_seed(master: u64, index: u64) -> u64 {
    splitmix_finalize(master.wrapping_add(SPLITMIX_GAMMA.wrapping_mul(index.wrapping_add(1))))
}

/// The frozen per-replicate generator.
#[derive(Debug, Clone)]
pub struct ReplicateRng(Xoshiro256PlusPlus);

impl ReplicateRng {
    pub fn from_seed(seed: u64) -> Self {
        ReplicateRng(Xoshiro256PlusPlus::seed_from_u64(seed))
    }

    pub fn for_replicate(master: u64, index: u64) -> Self {
        Self::from_seed(derive_replicate_seed(master, index))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    pub fn coin(&mut self) -> bool {
        self.bernoulli(0.5)
    }

    /// Uniform integer in `0..bound` (`bound > 0`).
    pub fn below(&mut self, bound: u64) -> u64 {
        ((self.uniform() * bound as f64) as u64).min(bound - 1)
    }
}

/// How a replicate's success total is compared with the observed threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// Equal or better: `total >= threshold`.
    AtLeast,
    /// Strictly better: `total > threshold`.
    Exceeds,
}

impl Comparison {
    pub fn holds<T: PartialOrd>(self, value: T, threshold: T) -> bool {
        match self {
            Comparison::AtLeast => value >= threshold,
            Comparison::Exceeds => value > threshold,
        }
    }
}

/// A random strategy: `trial_count` Bernoulli trials, compared against an
/// observed success count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicateModel {
    trial_count: u64,
    success_prob: Probability,
    threshold: u64,
    comparison: Comparison,
}

impl ReplicateModel {
    pub fn new(trial_count: u64, success_prob: Probability, threshold: u64, comparison: Comparison) -> Result<Self> {
        if threshold > trial_count {
            return Err(Error::domain(format!(
                "threshold {threshold} exceeds trial count {trial_count}"
            )));
        }
        Ok(ReplicateModel {
            trial_count,
            success_prob,
            threshold,
            comparison,
        })
    }

    pub fn trial_count(&self) -> u64 {
        self.trial_count
    }

    pub fn success_prob(&self) -> Probability {
        self.success_prob
    }

    pub fn threshold(&self) -> u64 {
        self.threshold
    }

    pub fn comparison(&self) -> Comparison {
        self.comparison
    }

    /// The exact binomial value the simulation estimates.
    pub fn exact(&self) -> Probability {
        let q = BinomialQuery::new(self.threshold, self.trial_count, self.success_prob.value())
            .expect("model invariants imply a valid query");
        match self.comparison {
            Comparison::AtLeast => binom_sf(&q),
            Comparison::Exceeds => binom_sf_strict(&q),
        }
    }

    fn simulate(&self, rng: &mut ReplicateRng) -> bool {
        let p = self.success_prob.value();
        let wins = (0..self.trial_count).filter(|_| rng.bernoulli(p)).count() as u64;
        self.comparison.holds(wins, self.threshold)
    }
}

/// Number of replicates whose success total satisfies the model's comparison.
pub fn run_replicates(model: &ReplicateModel, replicates: u64, master: u64) -> u64 {
    count_hits(replicates, master, |rng| model.simulate(rng))
}

/// Count replicates `i in 0..replicates` for which `trial` returns true, each
/// given `ReplicateRng::for_replicate(master, i)`. Runs on the current rayon
/// pool; the result does not depend on the pool size.
pub fn count_hits<F>(replicates: u64, master: u64, trial: F) -> u64
where
    F: Fn(&mut ReplicateRng) -> bool + Sync,
{
    (0..replicates)
        .into_par_iter()
        .filter(|&i| trial(&mut ReplicateRng::for_replicate(master, i)))
        .count() as u64
}

/// A Monte Carlo proportion with its Wilson interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub point: Probability,
    pub interval: Interval,
    pub confidence: f64,
    pub hits: u64,
    pub replicates: u64,
    pub master_seed: u64,
}

impl McEstimate {
    pub fn from_counts(hits: u64, replicates: u64, master_seed: u64, confidence: f64) -> Result<Self> {
        let interval = wilson_interval(hits, replicates, confidence)?;
        Ok(McEstimate {
            point: Probability::new(hits as f64 / replicates as f64)?,
            interval,
            confidence,
            hits,
            replicates,
            master_seed,
        })
    }
}

fn check_replicates(replicates: u64) -> Result<()> {
    if replicates < MIN_REPLICATES {
        return Err(Error::domain(format!(
            "at least {MIN_REPLICATES} replicates are required, got {replicates}"
        )));
    }
    Ok(())
}

/// Estimate the probability that a random strategy does as well as the
/// model's threshold.
pub fn estimate_equal_or_better(
    model: &ReplicateModel,
    replicates: u64,
    master: u64,
    confidence: f64,
) -> Result<McEstimate> {
    check_replicates(replicates)?;
    let hits = run_replicates(model, replicates, master);
    McEstimate::from_counts(hits, replicates, master, confidence)
}

/// Generic estimator: the fraction of seeded replicates for which `trial`
/// succeeds.
pub fn estimate_fraction<F>(replicates: u64, master: u64, confidence: f64, trial: F) -> Result<McEstimate>
where
    F: Fn(&mut ReplicateRng) -> bool + Sync,
{
    check_replicates(replicates)?;
    let hits = count_hits(replicates, master, trial);
    McEstimate::from_counts(hits, replicates, master, confidence)
}
