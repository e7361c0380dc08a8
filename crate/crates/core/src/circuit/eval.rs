//! Circuit evaluation and the reverse-mode gradient pass.

use super::{BeliefTable, Circuit, CircuitError, Node};
use std::collections::BTreeMap;

/// Partial derivatives of the root with respect to each belief entry; same
/// row shape as the table the circuit was evaluated under, zero where no
/// leaf exists.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BeliefGradients {
    rows: BTreeMap<i64, Vec<f64>>,
}

impl BeliefGradients {
    pub fn get(&self, timestamp: i64) -> Option<&[f64]> {
        self.rows.get(&timestamp).map(|r| r.as_slice())
    }

    pub fn rows(&self) -> impl Iterator<Item = (i64, &[f64])> {
        self.rows.iter().map(|(t, r)| (*t, r.as_slice()))
    }

    /// Adds `scale` times `other` into `self`, unioning rows.
    pub fn accumulate(&mut self, other: &BeliefGradients, scale: f64) {
        for (t, row) in &other.rows {
            let dst = self
                .rows
                .entry(*t)
                .or_insert_with(|| vec![0.0; row.len()]);
            for (d, s) in dst.iter_mut().zip(row.iter()) {
                *d += scale * s;
            }
        }
    }
}

/// Root value under `beliefs`.
pub fn evaluate(circuit: &Circuit, beliefs: &BeliefTable) -> Result<f64, CircuitError> {
    evaluate_shifted(circuit, beliefs, 0)
}

/// Root value with every leaf timestamp shifted by `shift`; lets circuits
/// compiled in offset space be evaluated at an absolute anchor.
pub fn evaluate_shifted(
    circuit: &Circuit,
    beliefs: &BeliefTable,
    shift: i64,
) -> Result<f64, CircuitError> {
    let values = forward(circuit, beliefs, shift)?;
    Ok(values[circuit.root as usize])
}

fn forward(circuit: &Circuit, beliefs: &BeliefTable, shift: i64) -> Result<Vec<f64>, CircuitError> {
    let mut values = vec![0.0; circuit.nodes.len()];
    for (i, node) in circuit.nodes.iter().enumerate() {
        values[i] = match node {
            Node::Leaf { timestamp, class } => {
                let t = timestamp + shift;
                let row = beliefs
                    .get(t)
                    .ok_or(CircuitError::MissingBelief { timestamp: t })?;
                *row.get(*class).ok_or(CircuitError::ClassOutOfRange {
                    timestamp: t,
                    class: *class,
                })?
            }
            Node::Const(v) => *v,
            Node::Sum(children) => children.iter().map(|&c| values[c as usize]).sum(),
            Node::Product(children) => children.iter().map(|&c| values[c as usize]).product(),
            Node::Complement(child) => 1.0 - values[*child as usize],
        };
    }
    Ok(values)
}

/// One reverse pass: `∂root/∂belief[t][c]` for every leaf, `O(|nodes|)`.
pub fn gradient(circuit: &Circuit, beliefs: &BeliefTable) -> Result<BeliefGradients, CircuitError> {
    gradient_shifted(circuit, beliefs, 0)
}

pub fn gradient_shifted(
    circuit: &Circuit,
    beliefs: &BeliefTable,
    shift: i64,
) -> Result<BeliefGradients, CircuitError> {
    let values = forward(circuit, beliefs, shift)?;
    let mut adjoints = vec![0.0; circuit.nodes.len()];
    adjoints[circuit.root as usize] = 1.0;

    let mut grads = BeliefGradients::default();
    // Zero rows for the full table shape.
    for (t, row) in beliefs.rows() {
        grads.rows.insert(t, vec![0.0; row.len()]);
    }

    for (i, node) in circuit.nodes.iter().enumerate().rev() {
        let adj = adjoints[i];
        if adj == 0.0 {
            continue;
        }
        match node {
            Node::Leaf { timestamp, class } => {
                let t = timestamp + shift;
                grads.rows.get_mut(&t).expect("row exists after forward")[*class] += adj;
            }
            Node::Const(_) => {}
            Node::Sum(children) => {
                for &c in children {
                    adjoints[c as usize] += adj;
                }
            }
            Node::Product(children) => {
                // prefix[i] * suffix[i] is the product of all siblings of i.
                let k = children.len();
                let mut prefix = vec![1.0; k];
                for j in 1..k {
                    prefix[j] = prefix[j - 1] * values[children[j - 1] as usize];
                }
                let mut suffix = 1.0;
                for j in (0..k).rev() {
                    adjoints[children[j] as usize] += adj * prefix[j] * suffix;
                    suffix *= values[children[j] as usize];
                }
            }
            Node::Complement(child) => {
                adjoints[*child as usize] -= adj;
            }
        }
    }
    Ok(grads)
}
