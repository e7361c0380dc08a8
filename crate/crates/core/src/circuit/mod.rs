//! Arithmetic circuits: exact, differentiable aggregation of proof sets.
//!
//! A circuit computes the probability that at least one proof of a query is
//! satisfied when every timestamp's class is drawn independently from a
//! [`BeliefTable`]. Compilation handles the disjoint-sum problem exactly by
//! Shannon expansion over one choice variable at a time (latest timestamp
//! first), so the result is multilinear in the leaf probabilities.
//!
//! Circuits are immutable after compilation; `evaluate` and `gradient` are
//! pure. The [`cache::CircuitCache`] is not synchronized and is meant to be
//! confined to a single training thread.

pub mod brute;
pub mod cache;
pub mod compile;
pub mod eval;

pub use brute::brute_force_prob;
pub use cache::{circuit_key, compile_rel, CircuitCache, CircuitKey};
pub use compile::compile;
pub use eval::{evaluate, evaluate_shifted, gradient, gradient_shifted, BeliefGradients};

use std::collections::BTreeMap;
use thiserror::Error;

/// Row sums of a belief table may deviate from one by at most this much.
pub const BELIEF_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum CircuitError {
    #[error("no belief distribution bound for timestamp {timestamp}")]
    MissingBelief { timestamp: i64 },
    #[error("class index {class} out of range for timestamp {timestamp}")]
    ClassOutOfRange { timestamp: i64, class: usize },
    #[error("belief row for timestamp {timestamp} is invalid: {message}")]
    InvalidBelief { timestamp: i64, message: String },
    #[error("literal input is not an integer timestamp: {input}")]
    NonTimestampLeaf { input: String },
    #[error("enumeration guard exceeded: {timestamps} distinct timestamps (limit {limit})")]
    EnumerationGuard { timestamps: usize, limit: usize },
}

/// Per-timestamp class distributions produced by the perception network.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BeliefTable {
    rows: BTreeMap<i64, Vec<f64>>,
}

impl BeliefTable {
    pub fn new() -> Self {
        BeliefTable::default()
    }

    /// Inserts a validated probability row: entries in [0, 1], summing to
    /// one within [`BELIEF_SUM_TOLERANCE`].
    pub fn insert(&mut self, timestamp: i64, probs: Vec<f64>) -> Result<(), CircuitError> {
        if probs.iter().any(|p| !(0.0..=1.0).contains(p) || !p.is_finite()) {
            return Err(CircuitError::InvalidBelief {
                timestamp,
                message: "entries must lie in [0, 1]".into(),
            });
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > BELIEF_SUM_TOLERANCE {
            return Err(CircuitError::InvalidBelief {
                timestamp,
                message: format!("row sums to {sum}, expected 1"),
            });
        }
        self.rows.insert(timestamp, probs);
        Ok(())
    }

    /// Inserts without the normalization check. Finite-difference tooling
    /// perturbs single entries and legitimately leaves rows unnormalized.
    pub fn insert_raw(&mut self, timestamp: i64, probs: Vec<f64>) {
        self.rows.insert(timestamp, probs);
    }

    pub fn get(&self, timestamp: i64) -> Option<&[f64]> {
        self.rows.get(&timestamp).map(|r| r.as_slice())
    }

    pub fn get_mut(&mut self, timestamp: i64) -> Option<&mut Vec<f64>> {
        self.rows.get_mut(&timestamp)
    }

    pub fn rows(&self) -> impl Iterator<Item = (i64, &[f64])> {
        self.rows.iter().map(|(t, r)| (*t, r.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Fully confident table: row `t` puts all mass on `assignment[t]`.
    pub fn one_hot(assignment: &[u8], classes: usize) -> Self {
        let mut table = BeliefTable::new();
        for (t, &c) in assignment.iter().enumerate() {
            let mut row = vec![0.0; classes];
            row[c as usize] = 1.0;
            table.rows.insert(t as i64, row);
        }
        table
    }

    /// Uniform table over `classes` for every listed timestamp.
    pub fn uniform(timestamps: &[i64], classes: usize) -> Self {
        let mut table = BeliefTable::new();
        for &t in timestamps {
            table.rows.insert(t, vec![1.0 / classes as f64; classes]);
        }
        table
    }
}

pub type NodeId = u32;

/// One circuit node. Children always have smaller ids than their parent, so
/// a single forward sweep over the node vector evaluates the circuit.
#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    /// Probability that `timestamp` is perceived as `class`.
    Leaf { timestamp: i64, class: usize },
    Const(f64),
    Sum(Vec<NodeId>),
    Product(Vec<NodeId>),
    /// `1 - child`, used for the residual mass of an expansion.
    Complement(NodeId),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    pub(crate) nodes: Vec<Node>,
    pub(crate) root: NodeId,
}

impl Circuit {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// JSON view of the DAG for the `inspect-circuit` command.
    pub fn to_json(&self) -> serde_json::Value {
        use serde_json::json;
        let nodes: Vec<serde_json::Value> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(id, n)| match n {
                Node::Leaf { timestamp, class } => {
                    json!({"id": id, "kind": "leaf", "timestamp": timestamp, "class": class})
                }
                Node::Const(v) => json!({"id": id, "kind": "const", "value": v}),
                Node::Sum(cs) => json!({"id": id, "kind": "sum", "children": cs}),
                Node::Product(cs) => json!({"id": id, "kind": "product", "children": cs}),
                Node::Complement(c) => json!({"id": id, "kind": "complement", "children": [c]}),
            })
            .collect();
        json!({"root": self.root, "nodes": nodes})
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{label_oracle, solve, ChoiceId, Literal, Proof, StreamContext};
    use crate::rulelang::ast::{Atom, Symbol, Term};
    use crate::rulelang::stdlib::{ce_constant, default_program, QUERY_PREDICATE};
    use rand::Rng;
    use rand_chacha::ChaCha8Rng;
    use rand_chacha::rand_core::SeedableRng;

    fn lit(t: i64, class: usize) -> Literal {
        Literal {
            choice: ChoiceId::Network {
                network: Symbol::new("audioNN"),
                input: Term::Int(t),
            },
            outcome: class,
            outcome_name: Symbol::new(&format!("c{class}")),
        }
    }

    fn proof(lits: Vec<Literal>) -> Proof {
        let mut literals = lits;
        literals.sort();
        Proof { literals }
    }

    fn query(class: usize, t: i64) -> Atom {
        Atom::new(
            QUERY_PREDICATE,
            vec![Term::constant(&ce_constant(class)), Term::Int(t)],
        )
    }

    fn random_row(rng: &mut ChaCha8Rng, classes: usize) -> Vec<f64> {
        let mut row: Vec<f64> = (0..classes).map(|_| rng.random_range(1e-3..1.0)).collect();
        let sum: f64 = row.iter().sum();
        for p in &mut row {
            *p /= sum;
        }
        row
    }

    fn random_table(rng: &mut ChaCha8Rng, len: usize, classes: usize) -> BeliefTable {
        let mut table = BeliefTable::new();
        for t in 0..len as i64 {
            table.insert(t, random_row(rng, classes)).unwrap();
        }
        table
    }

    #[test]
    fn empty_proof_set_is_constant_zero() {
        let c = compile(&[]).unwrap();
        let beliefs = BeliefTable::uniform(&[0, 1, 2], 10);
        assert_eq!(evaluate(&c, &beliefs).unwrap(), 0.0);
        let g = gradient(&c, &beliefs).unwrap();
        for (_, row) in g.rows() {
            assert!(row.iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn single_conjunction_multiplies() {
        let c = compile(&[proof(vec![lit(5, 8), lit(4, 8)])]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let beliefs = random_table(&mut rng, 6, 10);
        let expected = beliefs.get(5).unwrap()[8] * beliefs.get(4).unwrap()[8];
        assert!((evaluate(&c, &beliefs).unwrap() - expected).abs() < 1e-12);
        // Product rule: d/dB[5][8] = B[4][8].
        let g = gradient(&c, &beliefs).unwrap();
        assert!((g.get(5).unwrap()[8] - beliefs.get(4).unwrap()[8]).abs() < 1e-12);
    }

    #[test]
    fn two_proof_disjoint_sum() {
        // p5 * (1 - (1 - p4)(1 - p3)) with p5=0.5, p4=0.2, p3=0.3 → 0.22.
        let proofs = vec![
            proof(vec![lit(5, 0), lit(4, 0)]),
            proof(vec![lit(5, 0), lit(3, 0)]),
        ];
        let mut beliefs = BeliefTable::new();
        for (t, p) in [(5, 0.5), (4, 0.2), (3, 0.3)] {
            let mut row = vec![(1.0 - p) / 9.0; 10];
            row[0] = p;
            beliefs.insert(t, row).unwrap();
        }
        let c = compile(&proofs).unwrap();
        assert!((evaluate(&c, &beliefs).unwrap() - 0.22).abs() < 1e-12);
        assert!((brute_force_prob(&proofs, &beliefs).unwrap() - 0.22).abs() < 1e-12);
    }

    #[test]
    fn one_hot_matches_oracle() {
        let program = default_program();
        let ctx = StreamContext::contiguous(8, 3).unwrap();
        let classes: Vec<u8> = vec![1, 4, 4, 2, 9, 2, 2, 0];
        let beliefs = BeliefTable::one_hot(&classes, 10);
        for t in 0..8usize {
            for class in 0..10usize {
                let proofs = solve(&program, &ctx, &query(class, t as i64)).unwrap();
                let c = compile(&proofs).unwrap();
                let v = evaluate(&c, &beliefs).unwrap();
                let expected = if label_oracle(&classes, 3, t) == Some(class as u8) {
                    1.0
                } else {
                    0.0
                };
                assert_eq!(v, expected, "class {class} t {t}");
            }
        }
    }

    #[test]
    fn uniform_beliefs_window_two() {
        let program = default_program();
        let ctx = StreamContext::contiguous(8, 2).unwrap();
        let beliefs = BeliefTable::uniform(&[0, 1, 2, 3, 4, 5, 6, 7], 10);
        let proofs = solve(&program, &ctx, &query(3, 5)).unwrap();
        let c = compile(&proofs).unwrap();
        assert!((evaluate(&c, &beliefs).unwrap() - 0.01).abs() < 1e-12);
    }

    #[test]
    fn matches_brute_force_on_solved_queries() {
        let program = default_program();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut cases = 0;
        for window in [2u32, 3, 4, 5] {
            let len = window as usize + 2;
            let ctx = StreamContext::contiguous(len, window).unwrap();
            for _ in 0..25 {
                let beliefs = random_table(&mut rng, len, 10);
                let class = rng.random_range(0..10);
                let t = rng.random_range(0..len) as i64;
                let proofs = solve(&program, &ctx, &query(class, t)).unwrap();
                let c = compile(&proofs).unwrap();
                let fast = evaluate(&c, &beliefs).unwrap();
                let slow = brute_force_prob(&proofs, &beliefs).unwrap();
                assert!(
                    (fast - slow).abs() <= 1e-9,
                    "window {window} class {class} t {t}: {fast} vs {slow}"
                );
                cases += 1;
            }
        }
        assert_eq!(cases, 100);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let program = default_program();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let ctx = StreamContext::contiguous(7, 5).unwrap();
        let h = 1e-5;
        for round in 0..100 {
            let beliefs = random_table(&mut rng, 7, 10);
            let class = rng.random_range(0..10);
            let t = rng.random_range(1..7) as i64;
            let proofs = solve(&program, &ctx, &query(class, t)).unwrap();
            if proofs.is_empty() {
                continue;
            }
            let c = compile(&proofs).unwrap();
            let g = gradient(&c, &beliefs).unwrap();
            // Check a few random entries per round.
            for _ in 0..5 {
                let ts = rng.random_range(0..7) as i64;
                let cl = rng.random_range(0..10);
                let mut up = beliefs.clone();
                up.get_mut(ts).unwrap()[cl] += h;
                let mut down = beliefs.clone();
                down.get_mut(ts).unwrap()[cl] -= h;
                let fd =
                    (evaluate(&c, &up).unwrap() - evaluate(&c, &down).unwrap()) / (2.0 * h);
                let an = g.get(ts).unwrap()[cl];
                let denom = an.abs().max(fd.abs()).max(1e-8);
                assert!(
                    (an - fd).abs() / denom <= 1e-4,
                    "round {round}: analytic {an} vs fd {fd}"
                );
            }
        }
    }

    #[test]
    fn multilinear_in_each_leaf() {
        let proofs = vec![
            proof(vec![lit(5, 0), lit(4, 0)]),
            proof(vec![lit(5, 0), lit(3, 0)]),
            proof(vec![lit(4, 1), lit(3, 1)]),
        ];
        let c = compile(&proofs).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let beliefs = random_table(&mut rng, 6, 10);
        let h = 1e-3;
        for t in 3..6i64 {
            for cl in 0..2usize {
                let mut up = beliefs.clone();
                up.get_mut(t).unwrap()[cl] += h;
                let mut down = beliefs.clone();
                down.get_mut(t).unwrap()[cl] -= h;
                let second = evaluate(&c, &up).unwrap() + evaluate(&c, &down).unwrap()
                    - 2.0 * evaluate(&c, &beliefs).unwrap();
                assert!(second.abs() < 1e-9, "t {t} class {cl}: {second}");
            }
        }
    }

    #[test]
    fn monotone_in_leaf_probabilities() {
        let proofs = vec![
            proof(vec![lit(5, 0), lit(4, 0)]),
            proof(vec![lit(5, 0), lit(3, 2)]),
            proof(vec![lit(4, 1)]),
        ];
        let c = compile(&proofs).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let beliefs = random_table(&mut rng, 6, 10);
        let base = evaluate(&c, &beliefs).unwrap();
        for t in 0..6i64 {
            for cl in 0..10usize {
                let mut up = beliefs.clone();
                up.get_mut(t).unwrap()[cl] += 1e-3;
                assert!(
                    evaluate(&c, &up).unwrap() >= base - 1e-15,
                    "raising B[{t}][{cl}] lowered the root"
                );
            }
        }
    }

    #[test]
    fn ad_alternatives_become_constants() {
        use crate::rulelang::{parse_atom_str, parse_program};
        let program = parse_program(
            "0.3::mode(fast); 0.7::mode(slow).\n\
             0.5::coin.\n\
             p :- mode(fast).\n\
             p :- coin.",
        )
        .unwrap();
        let ctx = StreamContext::contiguous(2, 2).unwrap();
        let proofs = solve(&program, &ctx, &parse_atom_str("p").unwrap()).unwrap();
        assert_eq!(proofs.len(), 2);
        let c = compile(&proofs).unwrap();
        let beliefs = BeliefTable::new();
        // P(fast or coin) with independent choices: 0.3 + 0.5 - 0.15.
        let expected = 0.3 + 0.5 - 0.3 * 0.5;
        assert!((evaluate(&c, &beliefs).unwrap() - expected).abs() < 1e-12);
        assert!(
            (brute_force_prob(&proofs, &beliefs).unwrap() - expected).abs() < 1e-12
        );
    }

    #[test]
    fn cached_circuit_translates_across_timestamps() {
        let program = default_program();
        let fingerprint = program.fingerprint();
        let window = 5u32;
        let ctx = StreamContext::contiguous(30, window).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let beliefs = random_table(&mut rng, 30, 10);
        let mut cache = CircuitCache::new();

        let proofs5 = solve(&program, &ctx, &query(8, 5)).unwrap();
        let circ5 = cache
            .get_or_compile(fingerprint, window, 8, &proofs5, 5)
            .unwrap();
        let v5 = evaluate_shifted(&circ5, &beliefs, 5).unwrap();
        let fresh5 = evaluate(&compile(&proofs5).unwrap(), &beliefs).unwrap();
        assert_eq!(v5, fresh5);

        // Interior timestamp 17 shares the key and the circuit.
        let proofs17 = solve(&program, &ctx, &query(8, 17)).unwrap();
        let circ17 = cache
            .get_or_compile(fingerprint, window, 8, &proofs17, 17)
            .unwrap();
        assert_eq!(cache.len(), 1, "interior timestamps share one circuit");
        let v17 = evaluate_shifted(&circ17, &beliefs, 17).unwrap();
        let fresh17 = evaluate(&compile(&proofs17).unwrap(), &beliefs).unwrap();
        assert!((v17 - fresh17).abs() < 1e-15);

        // Boundary timestamps have smaller proof sets and distinct keys.
        let proofs2 = solve(&program, &ctx, &query(8, 2)).unwrap();
        let key_interior = circuit_key(fingerprint, window, 8, &proofs17, 17).unwrap();
        let key_boundary = circuit_key(fingerprint, window, 8, &proofs2, 2).unwrap();
        assert_ne!(key_interior, key_boundary);
    }

    #[test]
    fn cache_is_semantically_invisible() {
        let program = default_program();
        let fingerprint = program.fingerprint();
        let window = 3u32;
        let ctx = StreamContext::contiguous(12, window).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let beliefs = random_table(&mut rng, 12, 10);
        let mut cache = CircuitCache::new();
        for t in 0..12i64 {
            for class in 0..10 {
                let proofs = solve(&program, &ctx, &query(class, t)).unwrap();
                let cached = cache
                    .get_or_compile(fingerprint, window, class as u32, &proofs, t)
                    .unwrap();
                let with_cache = evaluate_shifted(&cached, &beliefs, t).unwrap();
                let without = evaluate(&compile(&proofs).unwrap(), &beliefs).unwrap();
                assert_eq!(
                    with_cache.to_bits(),
                    without.to_bits(),
                    "t {t} class {class}"
                );
            }
        }
    }

    #[test]
    fn missing_belief_row_names_the_timestamp() {
        let c = compile(&[proof(vec![lit(5, 0)])]).unwrap();
        let beliefs = BeliefTable::uniform(&[0, 1], 10);
        match evaluate(&c, &beliefs) {
            Err(CircuitError::MissingBelief { timestamp: 5 }) => {}
            other => panic!("unexpected result {other:?}"),
        }
    }

    #[test]
    fn brute_force_guard_and_edges() {
        let beliefs = BeliefTable::uniform(&(0..10i64).collect::<Vec<_>>(), 4);
        assert_eq!(brute_force_prob(&[], &beliefs).unwrap(), 0.0);
        let certain = proof(vec![lit(0, 1)]);
        let mut one_hot = BeliefTable::new();
        let mut row = vec![0.0; 4];
        row[1] = 1.0;
        one_hot.insert(0, row).unwrap();
        assert_eq!(brute_force_prob(&[certain], &one_hot).unwrap(), 1.0);
        let wide: Vec<Proof> = (0..8).map(|t| proof(vec![lit(t, 0)])).collect();
        assert!(matches!(
            brute_force_prob(&wide, &beliefs),
            Err(CircuitError::EnumerationGuard { timestamps: 8, .. })
        ));
    }
}
