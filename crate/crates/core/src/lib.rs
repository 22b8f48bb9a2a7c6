//! Probability that a result could have been reached by chance.
//!
//! The central quantity is the probability that a purely random strategy
//! does as well as (or better than) an observed result. Everything else
//! builds on it: multiple-attempt corrections, an attempts ledger, hypothesis
//! complexity counts, non-stationary forecast sequences and trading-strategy
//! checks.

pub mod cli;
pub mod error;
pub mod ledger;
pub mod mc;
pub mod occam;
pub mod prob;
mod quoted;
pub mod sequence;
pub mod strategy;

pub use error::{Error, Result};
pub use ledger::{AttemptRecord, KnowledgeScope, Ledger, LedgerFile};
pub use mc::{Comparison, McEstimate, ReplicateModel, ReplicateRng};
pub use occam::{Hypothesis, HypothesisHistory, SequenceSpace};
pub use prob::{
    best_of_m, binom_cdf, binom_pmf, binom_sf, binom_sf_strict, combine_results, wilson_interval, BinomialQuery,
    Interval, Probability,
};
pub use sequence::{PredictionEvent, SystemTrace};
pub use strategy::{ControlState, Direction, Mode, Outcome, PriceSeries, TradeRecord};
