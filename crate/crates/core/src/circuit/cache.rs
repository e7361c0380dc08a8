//! Circuit reuse across timestamps.
//!
//! Two queries whose proof sets have the same shape relative to their query
//! timestamp (same rule base, same window) compile to isomorphic circuits,
//! so a circuit compiled once in offset space can be evaluated at any anchor
//! via [`super::evaluate_shifted`]. The key captures exactly that shape, so
//! a hit is semantically identical to a fresh compilation.

use super::compile::compile;
use super::{Circuit, CircuitError};
use crate::engine::{ChoiceId, Literal, Proof};
use crate::rulelang::Term;
use std::collections::HashMap;
use std::sync::Arc;

/// Canonical identity of a compiled query: rule-base fingerprint, window,
/// query class, and the proof literals as offsets from the query timestamp.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CircuitKey {
    program: u64,
    window: u32,
    class: u32,
    shape: Vec<Vec<(RelChoice, usize)>>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum RelChoice {
    Network { network: String, offset: i64 },
    Ad { index: usize },
}

/// Builds the cache key for `proofs` of a query anchored at `anchor`.
pub fn circuit_key(
    program: u64,
    window: u32,
    class: u32,
    proofs: &[Proof],
    anchor: i64,
) -> Result<CircuitKey, CircuitError> {
    let mut shape = Vec::with_capacity(proofs.len());
    for p in proofs {
        let mut lits = Vec::with_capacity(p.literals.len());
        for l in &p.literals {
            let rel = match &l.choice {
                ChoiceId::Network { network, input } => match input {
                    Term::Int(t) => RelChoice::Network {
                        network: network.as_str().to_string(),
                        offset: t - anchor,
                    },
                    other => {
                        return Err(CircuitError::NonTimestampLeaf {
                            input: other.to_string(),
                        })
                    }
                },
                ChoiceId::Ad { index, .. } => RelChoice::Ad { index: *index },
            };
            lits.push((rel, l.outcome));
        }
        lits.sort();
        shape.push(lits);
    }
    shape.sort();
    Ok(CircuitKey {
        program,
        window,
        class,
        shape,
    })
}

/// Compiles `proofs` with every network timestamp rebased to its offset
/// from `anchor`; evaluate the result with `evaluate_shifted(_, _, anchor)`.
pub fn compile_rel(proofs: &[Proof], anchor: i64) -> Result<Circuit, CircuitError> {
    let shifted: Vec<Proof> = proofs
        .iter()
        .map(|p| {
            let literals = p
                .literals
                .iter()
                .map(|l| match &l.choice {
                    ChoiceId::Network { network, input } => {
                        let input = match input {
                            Term::Int(t) => Term::Int(t - anchor),
                            other => other.clone(),
                        };
                        Literal {
                            choice: ChoiceId::Network {
                                network: network.clone(),
                                input,
                            },
                            outcome: l.outcome,
                            outcome_name: l.outcome_name.clone(),
                        }
                    }
                    ChoiceId::Ad { .. } => l.clone(),
                })
                .collect();
            Proof { literals }
        })
        .collect();
    compile(&shifted)
}

/// Memo from query shape to offset-space circuit. Single-threaded by
/// design: confine one cache to one training or evaluation thread.
#[derive(Default)]
pub struct CircuitCache {
    map: HashMap<CircuitKey, Arc<Circuit>>,
    hits: u64,
    misses: u64,
}

impl CircuitCache {
    pub fn new() -> Self {
        CircuitCache::default()
    }

    pub fn lookup(&mut self, key: &CircuitKey) -> Option<Arc<Circuit>> {
        let found = self.map.get(key).cloned();
        if found.is_some() {
            self.hits += 1;
        } else {
            self.misses += 1;
        }
        found
    }

    pub fn store(&mut self, key: CircuitKey, circuit: Arc<Circuit>) {
        self.map.insert(key, circuit);
    }

    /// Compile-through lookup: returns the cached offset-space circuit for
    /// the proofs' shape, compiling and storing it on a miss.
    pub fn get_or_compile(
        &mut self,
        program: u64,
        window: u32,
        class: u32,
        proofs: &[Proof],
        anchor: i64,
    ) -> Result<Arc<Circuit>, CircuitError> {
        let key = circuit_key(program, window, class, proofs, anchor)?;
        if let Some(c) = self.lookup(&key) {
            return Ok(c);
        }
        let circuit = Arc::new(compile_rel(proofs, anchor)?);
        self.store(key, circuit.clone());
        Ok(circuit)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn stats(&self) -> (u64, u64) {
        (self.hits, self.misses)
    }
}
