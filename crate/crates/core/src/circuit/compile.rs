//! Proof-set compilation by Shannon expansion.
//!
//! At each step one choice variable is picked (the network call with the
//! latest timestamp, falling back to AD choices) and the proof set splits by
//! its outcome: branches for each outcome that some proof requires, plus a
//! residual branch for "none of those outcomes" weighted by a complement
//! node. Every variable is eliminated exactly once along any path, which
//! keeps the circuit multilinear and the sum over branches disjoint — so the
//! root value is the exact satisfaction probability.

use crate::engine::{ChoiceId, Literal, Proof};
use crate::rulelang::Term;
use std::collections::HashMap;

use super::{Circuit, CircuitError, Node, NodeId};

/// Compiles a set of mutually-consistent proofs into a circuit. The empty
/// set compiles to the constant-zero circuit.
pub fn compile(proofs: &[Proof]) -> Result<Circuit, CircuitError> {
    let mut builder = Builder::default();
    let sets: Vec<Vec<Literal>> = proofs.iter().map(|p| p.literals.clone()).collect();
    let mut memo = HashMap::new();
    let root = builder.compile_set(&sets, &mut memo)?;
    Ok(Circuit {
        nodes: builder.nodes,
        root,
    })
}

/// Hash-consing key mirroring [`Node`] with the constant stored by bits.
#[derive(Clone, PartialEq, Eq, Hash)]
enum NodeKey {
    Leaf(i64, usize),
    Const(u64),
    Sum(Vec<NodeId>),
    Product(Vec<NodeId>),
    Complement(NodeId),
}

#[derive(Default)]
struct Builder {
    nodes: Vec<Node>,
    interned: HashMap<NodeKey, NodeId>,
}

impl Builder {
    fn intern(&mut self, key: NodeKey, node: Node) -> NodeId {
        if let Some(&id) = self.interned.get(&key) {
            return id;
        }
        let id = self.nodes.len() as NodeId;
        self.nodes.push(node);
        self.interned.insert(key, id);
        id
    }

    fn constant(&mut self, v: f64) -> NodeId {
        self.intern(NodeKey::Const(v.to_bits()), Node::Const(v))
    }

    fn leaf(&mut self, choice: &ChoiceId, outcome: usize) -> Result<NodeId, CircuitError> {
        match choice {
            ChoiceId::Network { input, .. } => match input {
                Term::Int(t) => Ok(self.intern(
                    NodeKey::Leaf(*t, outcome),
                    Node::Leaf {
                        timestamp: *t,
                        class: outcome,
                    },
                )),
                other => Err(CircuitError::NonTimestampLeaf {
                    input: other.to_string(),
                }),
            },
            // Plain disjunction alternatives carry fixed probabilities.
            ChoiceId::Ad { probs, .. } => Ok(self.constant(probs[outcome])),
        }
    }

    fn sum(&mut self, mut children: Vec<NodeId>) -> NodeId {
        children.retain(|&c| !matches!(self.nodes[c as usize], Node::Const(v) if v == 0.0));
        match children.len() {
            0 => self.constant(0.0),
            1 => children[0],
            _ => {
                if children
                    .iter()
                    .all(|&c| matches!(self.nodes[c as usize], Node::Const(_)))
                {
                    let total: f64 = children
                        .iter()
                        .map(|&c| match self.nodes[c as usize] {
                            Node::Const(v) => v,
                            _ => unreachable!(),
                        })
                        .sum();
                    return self.constant(total);
                }
                self.intern(NodeKey::Sum(children.clone()), Node::Sum(children))
            }
        }
    }

    fn product(&mut self, mut children: Vec<NodeId>) -> NodeId {
        if children
            .iter()
            .any(|&c| matches!(self.nodes[c as usize], Node::Const(v) if v == 0.0))
        {
            return self.constant(0.0);
        }
        children.retain(|&c| !matches!(self.nodes[c as usize], Node::Const(v) if v == 1.0));
        match children.len() {
            0 => self.constant(1.0),
            1 => children[0],
            _ => self.intern(NodeKey::Product(children.clone()), Node::Product(children)),
        }
    }

    fn complement(&mut self, child: NodeId) -> NodeId {
        if let Node::Const(v) = self.nodes[child as usize] {
            return self.constant(1.0 - v);
        }
        self.intern(NodeKey::Complement(child), Node::Complement(child))
    }

    fn compile_set(
        &mut self,
        proofs: &[Vec<Literal>],
        memo: &mut HashMap<Vec<Vec<Literal>>, NodeId>,
    ) -> Result<NodeId, CircuitError> {
        if proofs.is_empty() {
            return Ok(self.constant(0.0));
        }
        if proofs.iter().any(|p| p.is_empty()) {
            return Ok(self.constant(1.0));
        }
        let key: Vec<Vec<Literal>> = proofs.to_vec();
        if let Some(&id) = memo.get(&key) {
            return Ok(id);
        }

        let pivot = proofs
            .iter()
            .flat_map(|p| p.iter().map(|l| &l.choice))
            .max_by(|a, b| pivot_order(a, b))
            .expect("non-empty proofs have literals")
            .clone();

        // Outcomes some proof requires of the pivot, in a stable order.
        let mut outcomes: Vec<usize> = proofs
            .iter()
            .flat_map(|p| p.iter())
            .filter(|l| l.choice == pivot)
            .map(|l| l.outcome)
            .collect();
        outcomes.sort_unstable();
        outcomes.dedup();

        let mut terms = Vec::with_capacity(outcomes.len() + 1);
        for &y in &outcomes {
            let mut branch: Vec<Vec<Literal>> = Vec::new();
            for p in proofs {
                match p.iter().position(|l| l.choice == pivot) {
                    Some(i) if p[i].outcome == y => {
                        let mut q = p.clone();
                        q.remove(i);
                        branch.push(q);
                    }
                    Some(_) => {} // requires a different outcome: excluded
                    None => branch.push(p.clone()),
                }
            }
            let sub = self.compile_set(&branch, memo)?;
            let leaf = self.leaf(&pivot, y)?;
            terms.push(self.product(vec![leaf, sub]));
        }

        // Residual branch: the pivot takes none of the required outcomes.
        // Only proofs that never mention the pivot can still be satisfied.
        let residual: Vec<Vec<Literal>> = proofs
            .iter()
            .filter(|p| p.iter().all(|l| l.choice != pivot))
            .cloned()
            .collect();
        if !residual.is_empty() {
            let sub = self.compile_set(&residual, memo)?;
            let mut leaves = Vec::with_capacity(outcomes.len());
            for &y in &outcomes {
                leaves.push(self.leaf(&pivot, y)?);
            }
            let used_mass = self.sum(leaves);
            let rest_mass = self.complement(used_mass);
            terms.push(self.product(vec![rest_mass, sub]));
        }

        let id = self.sum(terms);
        memo.insert(key, id);
        Ok(id)
    }
}

/// Expansion order: network calls by timestamp, latest first; AD choices
/// after all timestamped calls.
fn pivot_order(a: &ChoiceId, b: &ChoiceId) -> std::cmp::Ordering {
    use std::cmp::Ordering;
    match (a.timestamp(), b.timestamp()) {
        (Some(x), Some(y)) => x.cmp(&y),
        (Some(_), None) => Ordering::Greater,
        (None, Some(_)) => Ordering::Less,
        (None, None) => a.cmp(b),
    }
}
