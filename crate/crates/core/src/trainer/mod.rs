//! End-to-end training: per labeled timestamp, run exact inference over the
//! network's current beliefs, take the negative log-likelihood of the label
//! against the eleven-way outcome distribution, and push the gradient back
//! through circuit and network.
//!
//! Training is single-threaded and fully determined by the seed.

pub mod metrics;
pub mod query_cache;
pub mod train;

pub use metrics::{evaluate, evaluate_balanced, Metrics};
pub use query_cache::QueryCache;
pub use train::{train, EpochStats, TrainHistory, TrainOutcome};

use crate::circuit::CircuitError;
use crate::datagen::DataError;
use crate::engine::EngineError;
use crate::neural::NeuralError;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use thiserror::Error;

/// Number of complex-event classes; the outcome space adds a null class.
pub const CE_CLASSES: usize = 10;
/// Outcome probabilities are clamped here before any logarithm.
pub const PROB_EPSILON: f64 = 1e-12;
/// Slack allowed on the mutual-exclusivity check.
pub const EXCLUSIVITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(
        "complex-event probabilities at t={timestamp} sum to {sum}; the rule base does not \
         keep outcomes mutually exclusive"
    )]
    MutualExclusivity { timestamp: i64, sum: f64 },
    #[error("non-finite loss at epoch {epoch}, point {point} (t={timestamp}); beliefs: {snapshot:?}")]
    NonFiniteLoss {
        epoch: u32,
        point: usize,
        timestamp: i64,
        snapshot: Option<PathBuf>,
    },
}

/// Training hyperparameters. Defaults follow the shipped protocol: at most
/// 100 epochs with early stopping at patience 10, Adam at 1e-3, one
/// optimizer step per training example.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub max_epochs: u32,
    pub patience: u32,
    pub learning_rate: f64,
    pub seed: u64,
    pub batch_size: u32,
    pub window: u32,
    /// Resolution budget per query.
    pub step_limit: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_epochs: 100,
            patience: 10,
            learning_rate: 1e-3,
            seed: 0,
            batch_size: 1,
            window: 2,
            step_limit: 10_000,
        }
    }
}

/// Probabilities over the eleven outcomes: ten complex events plus null.
/// Null carries the complement mass, so the vector always sums to one.
#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeDistribution {
    pub ce: [f64; CE_CLASSES],
    pub null: f64,
}

impl OutcomeDistribution {
    /// Builds the distribution from raw query probabilities, enforcing
    /// mutual exclusivity within [`EXCLUSIVITY_TOLERANCE`].
    pub fn from_query_probs(
        probs: [f64; CE_CLASSES],
        timestamp: i64,
    ) -> Result<Self, TrainError> {
        let mut ce = probs;
        for p in &mut ce {
            *p = p.clamp(0.0, 1.0);
        }
        let sum: f64 = ce.iter().sum();
        if sum > 1.0 + EXCLUSIVITY_TOLERANCE {
            return Err(TrainError::MutualExclusivity { timestamp, sum });
        }
        Ok(OutcomeDistribution {
            ce,
            null: (1.0 - sum).max(0.0),
        })
    }

    /// Most likely outcome; `None` is the null class. Ties prefer null,
    /// then the lowest class index, so the result is deterministic.
    pub fn argmax(&self) -> Option<u8> {
        let (mut best, mut best_p) = (None, self.null);
        for (i, &p) in self.ce.iter().enumerate() {
            if p > best_p {
                best = Some(i as u8);
                best_p = p;
            }
        }
        best
    }

    /// The eleven probabilities, complex events first, null last.
    pub fn as_vec(&self) -> Vec<f64> {
        let mut v = self.ce.to_vec();
        v.push(self.null);
        v
    }
}

/// Negative log-likelihood of `label` under `dist`, with the gradient with
/// respect to the ten query probabilities. For a null label the gradient is
/// `1 / P(null)` on every query, pushing all complex-event mass down.
#[derive(Clone, Debug, PartialEq)]
pub struct Loss {
    pub value: f64,
    pub grad_ce: [f64; CE_CLASSES],
}

pub fn nll_loss(dist: &OutcomeDistribution, label: Option<u8>) -> Loss {
    let mut grad_ce = [0.0; CE_CLASSES];
    match label {
        Some(k) => {
            let p = dist.ce[k as usize].clamp(PROB_EPSILON, 1.0);
            grad_ce[k as usize] = -1.0 / p;
            Loss {
                value: -p.ln(),
                grad_ce,
            }
        }
        None => {
            let p = dist.null.clamp(PROB_EPSILON, 1.0);
            grad_ce = [1.0 / p; CE_CLASSES];
            Loss {
                value: -p.ln(),
                grad_ce,
            }
        }
    }
}

/// One-off convenience wrapper around [`QueryCache::distribution`].
pub fn ce_distribution(
    program: &crate::rulelang::Program,
    ctx: &crate::engine::StreamContext,
    beliefs: &crate::circuit::BeliefTable,
    t: i64,
) -> Result<OutcomeDistribution, TrainError> {
    let mut cache = QueryCache::new(program, ctx.window(), 10_000);
    cache.distribution(program, ctx, beliefs, t)
}
