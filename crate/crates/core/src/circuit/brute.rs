//! Enumeration oracle: the exact satisfaction probability by summing over
//! every joint outcome assignment of the choice variables a proof set
//! mentions. Exponential in the number of variables, so guarded; this is
//! the reference the compiled circuits are checked against.

use super::{BeliefTable, CircuitError};
use crate::engine::{ChoiceId, Proof};
use crate::rulelang::Term;

/// Most distinct network timestamps the enumeration accepts.
pub const ENUMERATION_GUARD: usize = 7;

pub fn brute_force_prob(proofs: &[Proof], beliefs: &BeliefTable) -> Result<f64, CircuitError> {
    if proofs.is_empty() {
        return Ok(0.0);
    }

    // Distinct choice variables, with their outcome-space probabilities.
    let mut vars: Vec<(ChoiceId, Vec<f64>)> = Vec::new();
    let mut network_timestamps = 0usize;
    for proof in proofs {
        for lit in &proof.literals {
            if vars.iter().any(|(v, _)| *v == lit.choice) {
                continue;
            }
            let probs = match &lit.choice {
                ChoiceId::Network { input, .. } => {
                    let t = match input {
                        Term::Int(t) => *t,
                        other => {
                            return Err(CircuitError::NonTimestampLeaf {
                                input: other.to_string(),
                            })
                        }
                    };
                    network_timestamps += 1;
                    beliefs
                        .get(t)
                        .ok_or(CircuitError::MissingBelief { timestamp: t })?
                        .to_vec()
                }
                ChoiceId::Ad { probs, .. } => {
                    // Alternatives plus the implicit "no alternative" mass of
                    // a Bernoulli-style fact.
                    let mut p = probs.to_vec();
                    let rest = 1.0 - p.iter().sum::<f64>();
                    if rest > 1e-12 {
                        p.push(rest);
                    }
                    p
                }
            };
            vars.push((lit.choice.clone(), probs));
        }
    }
    if network_timestamps > ENUMERATION_GUARD {
        return Err(CircuitError::EnumerationGuard {
            timestamps: network_timestamps,
            limit: ENUMERATION_GUARD,
        });
    }

    // Proofs as (variable slot, outcome) requirement lists.
    let requirement_sets: Vec<Vec<(usize, usize)>> = proofs
        .iter()
        .map(|p| {
            p.literals
                .iter()
                .map(|l| {
                    let slot = vars.iter().position(|(v, _)| *v == l.choice).unwrap();
                    (slot, l.outcome)
                })
                .collect()
        })
        .collect();

    let mut assignment = vec![0usize; vars.len()];
    let mut total = 0.0;
    loop {
        let satisfied = requirement_sets
            .iter()
            .any(|reqs| reqs.iter().all(|&(slot, y)| assignment[slot] == y));
        if satisfied {
            let weight: f64 = assignment
                .iter()
                .zip(vars.iter())
                .map(|(&a, (_, probs))| probs[a])
                .product();
            total += weight;
        }
        // Odometer increment.
        let mut i = 0;
        loop {
            if i == vars.len() {
                return Ok(total);
            }
            assignment[i] += 1;
            if assignment[i] < vars[i].1.len() {
                break;
            }
            assignment[i] = 0;
            i += 1;
        }
    }
}
