//! SLD proof search. Given a validated program, a stream context and a
//! ground query, enumerates every minimal consistent proof as a conjunction
//! of choice literals (neural outcomes, plus categorical alternatives of any
//! plain annotated disjunctions).
//!
//! Builtins (`>`, `>=`, `<`, `=<`, `is`, `reverse/2`, `previousTimeStamp/3`)
//! and the context facts (`allTimeStamps/1`, `window/1`) evaluate natively
//! and never appear in proofs; they shadow user clauses of the same
//! indicator.

use super::subst::BindingStore;
use super::EngineError;
use crate::rulelang::ast::{Atom, NeuralDecl, Program, Symbol, Term};
use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

/// Timestamp universe and window a query is asked against.
#[derive(Clone, Debug)]
pub struct StreamContext {
    timestamps: Vec<i64>,
    window: u32,
    timestamps_term: Term,
}

impl StreamContext {
    pub fn new(timestamps: Vec<i64>, window: u32) -> Result<Self, EngineError> {
        if window < 1 {
            return Err(EngineError::InvalidContext {
                message: "window must be at least 1".into(),
            });
        }
        if timestamps.windows(2).any(|w| w[0] >= w[1]) {
            return Err(EngineError::InvalidContext {
                message: "timestamps must be strictly increasing".into(),
            });
        }
        let timestamps_term = Term::list(timestamps.iter().map(|&t| Term::Int(t)).collect());
        Ok(StreamContext {
            timestamps,
            window,
            timestamps_term,
        })
    }

    /// Contiguous timestamps `0..len`, the shape every ingested stream has.
    pub fn contiguous(len: usize, window: u32) -> Result<Self, EngineError> {
        StreamContext::new((0..len as i64).collect(), window)
    }

    pub fn timestamps(&self) -> &[i64] {
        &self.timestamps
    }

    pub fn window(&self) -> u32 {
        self.window
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }
}

/// Identity of one categorical choice variable.
#[derive(Clone, Debug)]
pub enum ChoiceId {
    /// A neural predicate call on a ground input (a timestamp here).
    Network { network: Symbol, input: Term },
    /// A plain annotated disjunction; `probs` carries the declared
    /// alternative probabilities for downstream circuit construction and is
    /// not part of the identity.
    Ad { index: usize, probs: Arc<[f64]> },
}

impl ChoiceId {
    /// The timestamp when the choice is a network call on an integer input.
    pub fn timestamp(&self) -> Option<i64> {
        match self {
            ChoiceId::Network {
                input: Term::Int(t),
                ..
            } => Some(*t),
            _ => None,
        }
    }
}

impl PartialEq for ChoiceId {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (
                ChoiceId::Network {
                    network: n1,
                    input: i1,
                },
                ChoiceId::Network {
                    network: n2,
                    input: i2,
                },
            ) => n1 == n2 && i1 == i2,
            (ChoiceId::Ad { index: a, .. }, ChoiceId::Ad { index: b, .. }) => a == b,
            _ => false,
        }
    }
}

impl Eq for ChoiceId {}

impl PartialOrd for ChoiceId {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ChoiceId {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        use std::cmp::Ordering;
        match (self, other) {
            (
                ChoiceId::Network {
                    network: n1,
                    input: i1,
                },
                ChoiceId::Network {
                    network: n2,
                    input: i2,
                },
            ) => n1.cmp(n2).then_with(|| i1.cmp(i2)),
            (ChoiceId::Ad { index: a, .. }, ChoiceId::Ad { index: b, .. }) => a.cmp(b),
            (ChoiceId::Network { .. }, ChoiceId::Ad { .. }) => Ordering::Less,
            (ChoiceId::Ad { .. }, ChoiceId::Network { .. }) => Ordering::Greater,
        }
    }
}

impl std::hash::Hash for ChoiceId {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        match self {
            ChoiceId::Network { network, input } => {
                0u8.hash(state);
                network.hash(state);
                input.hash(state);
            }
            ChoiceId::Ad { index, .. } => {
                1u8.hash(state);
                index.hash(state);
            }
        }
    }
}

/// One ground choice-outcome pair, e.g. "the network classifies timestamp 5
/// as `siren`".
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub choice: ChoiceId,
    /// Index of the outcome inside the declared domain (or the alternative
    /// index of an AD).
    pub outcome: usize,
    /// Display name of the outcome.
    pub outcome_name: Symbol,
}

/// A conjunction of literals justifying the query; consistent by
/// construction (one outcome per choice).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Proof {
    pub literals: Vec<Literal>,
}

impl Proof {
    /// True when `other`'s literal set contains this proof's.
    fn subset_of(&self, other: &Proof) -> bool {
        // Both literal vectors are sorted.
        let mut it = other.literals.iter();
        'outer: for lit in &self.literals {
            for cand in it.by_ref() {
                if cand == lit {
                    continue 'outer;
                }
                if cand > lit {
                    return false;
                }
            }
            return false;
        }
        true
    }
}

/// Search limits; `step_limit` counts goal resolutions per query.
#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    pub step_limit: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { step_limit: 10_000 }
    }
}

/// Enumerates all minimal consistent proofs of a ground `query`.
pub fn solve(
    program: &Program,
    ctx: &StreamContext,
    query: &Atom,
) -> Result<Vec<Proof>, EngineError> {
    solve_with_options(program, ctx, query, SolveOptions::default())
}

pub fn solve_with_options(
    program: &Program,
    ctx: &StreamContext,
    query: &Atom,
    options: SolveOptions,
) -> Result<Vec<Proof>, EngineError> {
    if !query.is_ground() {
        return Err(EngineError::NonGroundQuery {
            query: query.to_string(),
        });
    }
    let mut solver = Solver::new(program, ctx, options);
    let goals = Arc::new(Goals::Cons(
        Goal {
            atom: query.clone(),
            origin: Arc::from("the query"),
        },
        Arc::new(Goals::Nil),
    ));
    solver.run(&goals)?;
    let mut proofs: Vec<Proof> = solver
        .proofs
        .into_iter()
        .map(|literals| Proof { literals })
        .collect();
    // Keep only minimal proofs: a strict superset is absorbed by its subset
    // and would never change the query probability.
    let keep: Vec<bool> = proofs
        .iter()
        .map(|p| {
            !proofs
                .iter()
                .any(|q| q.literals.len() < p.literals.len() && q.subset_of(p))
        })
        .collect();
    let mut it = keep.iter();
    proofs.retain(|_| *it.next().unwrap());
    Ok(proofs)
}

#[derive(Clone)]
struct Goal {
    atom: Atom,
    /// Where the goal came from, for arithmetic error messages.
    origin: Arc<str>,
}

enum Goals {
    Nil,
    Cons(Goal, Arc<Goals>),
}

struct Solver<'a> {
    program: &'a Program,
    ctx: &'a StreamContext,
    clause_index: HashMap<(Symbol, usize), Vec<usize>>,
    ad_index: HashMap<(Symbol, usize), Vec<(usize, usize)>>,
    neural_index: HashMap<(Symbol, usize), &'a NeuralDecl>,
    ad_probs: Vec<Arc<[f64]>>,
    store: BindingStore,
    proof: Vec<Literal>,
    proofs: BTreeSet<Vec<Literal>>,
    steps: u64,
    options: SolveOptions,
    rename_counter: u64,
}

impl<'a> Solver<'a> {
    fn new(program: &'a Program, ctx: &'a StreamContext, options: SolveOptions) -> Self {
        let mut clause_index: HashMap<(Symbol, usize), Vec<usize>> = HashMap::new();
        for (i, c) in program.clauses.iter().enumerate() {
            clause_index.entry(c.head.functor()).or_default().push(i);
        }
        let mut ad_index: HashMap<(Symbol, usize), Vec<(usize, usize)>> = HashMap::new();
        for (i, ad) in program.ads.iter().enumerate() {
            for (j, (_, head)) in ad.alternatives.iter().enumerate() {
                ad_index.entry(head.functor()).or_default().push((i, j));
            }
        }
        let mut neural_index = HashMap::new();
        for d in &program.neural_decls {
            neural_index.insert((d.predicate.clone(), d.arity()), d);
        }
        let ad_probs = program
            .ads
            .iter()
            .map(|ad| ad.alternatives.iter().map(|(p, _)| *p).collect())
            .collect();
        Solver {
            program,
            ctx,
            clause_index,
            ad_index,
            neural_index,
            ad_probs,
            store: BindingStore::new(),
            proof: Vec::new(),
            proofs: BTreeSet::new(),
            steps: 0,
            options,
            rename_counter: 0,
        }
    }

    fn run(&mut self, goals: &Arc<Goals>) -> Result<(), EngineError> {
        let (goal, rest) = match goals.as_ref() {
            Goals::Nil => {
                let mut literals = self.proof.clone();
                literals.sort();
                self.proofs.insert(literals);
                return Ok(());
            }
            Goals::Cons(goal, rest) => (goal.clone(), rest.clone()),
        };
        self.steps += 1;
        if self.steps > self.options.step_limit {
            return Err(EngineError::StepLimit {
                limit: self.options.step_limit,
            });
        }

        let key = goal.atom.functor();
        if self.is_builtin(&key) {
            return self.solve_builtin(&goal, &rest);
        }
        if self.neural_index.contains_key(&key) {
            return self.solve_neural(&goal, &rest);
        }

        if let Some(clauses) = self.clause_index.get(&key).cloned() {
            for ci in clauses {
                let mark = self.store.mark();
                let (head, body) = self.rename_clause(ci);
                if self.store.unify_atoms(&goal.atom, &head) {
                    let clause = &self.program.clauses[ci];
                    let origin: Arc<str> = Arc::from(format!(
                        "{}/{}",
                        clause.head.predicate,
                        clause.head.arity()
                    ));
                    let mut new_goals = rest.clone();
                    for b in body.into_iter().rev() {
                        new_goals = Arc::new(Goals::Cons(
                            Goal {
                                atom: b,
                                origin: origin.clone(),
                            },
                            new_goals,
                        ));
                    }
                    self.run(&new_goals)?;
                }
                self.store.undo_to(mark);
            }
        }

        if let Some(alts) = self.ad_index.get(&key).cloned() {
            for (ad_idx, alt_idx) in alts {
                self.solve_ad_alternative(&goal, &rest, ad_idx, alt_idx)?;
            }
        }

        Ok(())
    }

    fn is_builtin(&self, key: &(Symbol, usize)) -> bool {
        matches!(
            (key.0.as_str(), key.1),
            (">" | ">=" | "<" | "=<" | "is", 2)
                | ("reverse", 2)
                | ("previousTimeStamp", 3)
                | ("allTimeStamps" | "window", 1)
        )
    }

    fn solve_builtin(&mut self, goal: &Goal, rest: &Arc<Goals>) -> Result<(), EngineError> {
        let name = goal.atom.predicate.as_str();
        match (name, goal.atom.arity()) {
            (">" | ">=" | "<" | "=<", 2) => {
                let l = self.eval_arith(&goal.atom.args[0], goal)?;
                let r = self.eval_arith(&goal.atom.args[1], goal)?;
                let holds = match name {
                    ">" => l > r,
                    ">=" => l >= r,
                    "<" => l < r,
                    _ => l <= r,
                };
                if holds {
                    self.run(rest)?;
                }
                Ok(())
            }
            ("is", 2) => {
                let value = self.eval_arith(&goal.atom.args[1], goal)?;
                let mark = self.store.mark();
                if self.store.unify(&goal.atom.args[0], &Term::Int(value)) {
                    self.run(rest)?;
                }
                self.store.undo_to(mark);
                Ok(())
            }
            ("reverse", 2) => {
                let a = self.store.resolve(&goal.atom.args[0]);
                let b = self.store.resolve(&goal.atom.args[1]);
                let reversed_of = |t: &Term| {
                    t.as_proper_list().map(|items| {
                        Term::list(items.into_iter().rev().cloned().collect())
                    })
                };
                let (target, reversed) = if let Some(r) = reversed_of(&a) {
                    (goal.atom.args[1].clone(), r)
                } else if let Some(r) = reversed_of(&b) {
                    (goal.atom.args[0].clone(), r)
                } else {
                    return Err(self.eval_error(goal, "reverse/2 requires a proper list"));
                };
                let mark = self.store.mark();
                if self.store.unify(&target, &reversed) {
                    self.run(rest)?;
                }
                self.store.undo_to(mark);
                Ok(())
            }
            ("previousTimeStamp", 3) => {
                let t = self.eval_arith(&goal.atom.args[0], goal)?;
                let list = self.store.resolve(&goal.atom.args[1]);
                let items = list.as_proper_list().ok_or_else(|| {
                    self.eval_error(goal, "previousTimeStamp/3 requires a timestamp list")
                })?;
                let mut prev: Option<i64> = None;
                let mut min: Option<i64> = None;
                for item in items {
                    match item {
                        Term::Int(v) => {
                            if *v < t {
                                prev = Some(prev.map_or(*v, |p| p.max(*v)));
                            }
                            min = Some(min.map_or(*v, |m| m.min(*v)));
                        }
                        _ => {
                            return Err(self.eval_error(
                                goal,
                                "previousTimeStamp/3 requires integer timestamps",
                            ))
                        }
                    }
                }
                // With no element before `t`, answer with a before-the-stream
                // sentinel instead of failing: the sequence library's
                // `T >= 0` guards stop all recursion there, while its
                // empty-pattern base case may still close a match whose
                // earliest element sits on the first timestamp.
                let p = prev.unwrap_or_else(|| min.map_or(-1, |m| m - 1));
                let mark = self.store.mark();
                if self.store.unify(&goal.atom.args[2], &Term::Int(p)) {
                    self.run(rest)?;
                }
                self.store.undo_to(mark);
                Ok(())
            }
            ("allTimeStamps", 1) => {
                let mark = self.store.mark();
                if self
                    .store
                    .unify(&goal.atom.args[0], &self.ctx.timestamps_term.clone())
                {
                    self.run(rest)?;
                }
                self.store.undo_to(mark);
                Ok(())
            }
            ("window", 1) => {
                let mark = self.store.mark();
                if self
                    .store
                    .unify(&goal.atom.args[0], &Term::Int(self.ctx.window as i64))
                {
                    self.run(rest)?;
                }
                self.store.undo_to(mark);
                Ok(())
            }
            _ => unreachable!("builtin dispatch out of sync"),
        }
    }

    fn solve_neural(&mut self, goal: &Goal, rest: &Arc<Goals>) -> Result<(), EngineError> {
        let decl = self.neural_index[&goal.atom.functor()];
        let n_inputs = decl.input_vars.len();
        let mut inputs = Vec::with_capacity(n_inputs);
        for arg in &goal.atom.args[..n_inputs] {
            let resolved = self.store.resolve(arg);
            if !resolved.is_ground() {
                return Err(self.eval_error(goal, "neural predicate input is not ground"));
            }
            inputs.push(resolved);
        }
        let input = if inputs.len() == 1 {
            inputs.pop().unwrap()
        } else {
            Term::Compound(Symbol::new("inputs"), inputs.into())
        };
        let choice = ChoiceId::Network {
            network: decl.network.clone(),
            input,
        };

        let outcome_arg = goal.atom.args[n_inputs].clone();
        match self.store.walk(&outcome_arg).clone() {
            Term::Const(c) => {
                if let Some(idx) = decl.domain_index(&c) {
                    self.with_literal(choice, idx, c, rest)?;
                }
                Ok(())
            }
            Term::Var(_) => {
                for (idx, c) in decl.domain.clone().into_iter().enumerate() {
                    let mark = self.store.mark();
                    if self.store.unify(&outcome_arg, &Term::Const(c.clone())) {
                        self.with_literal(choice.clone(), idx, c, rest)?;
                    }
                    self.store.undo_to(mark);
                }
                Ok(())
            }
            // Outcomes are domain constants; anything else cannot match.
            _ => Ok(()),
        }
    }

    fn solve_ad_alternative(
        &mut self,
        goal: &Goal,
        rest: &Arc<Goals>,
        ad_idx: usize,
        alt_idx: usize,
    ) -> Result<(), EngineError> {
        let ad = &self.program.ads[ad_idx];
        if !ad.is_ground() {
            return Err(EngineError::NonGroundAd { index: ad_idx });
        }
        let (_, head) = &ad.alternatives[alt_idx];
        let head = head.clone();
        let mark = self.store.mark();
        if self.store.unify_atoms(&goal.atom, &head) {
            let origin: Arc<str> = Arc::from(format!("annotated disjunction #{ad_idx}"));
            let mut new_goals = rest.clone();
            for b in ad.body.clone().into_iter().rev() {
                new_goals = Arc::new(Goals::Cons(
                    Goal {
                        atom: b,
                        origin: origin.clone(),
                    },
                    new_goals,
                ));
            }
            let choice = ChoiceId::Ad {
                index: ad_idx,
                probs: self.ad_probs[ad_idx].clone(),
            };
            self.with_literal(choice, alt_idx, head.predicate.clone(), &new_goals)?;
        }
        self.store.undo_to(mark);
        Ok(())
    }

    /// Extends the partial proof with `choice = outcome` (pruning the branch
    /// on conflict, skipping the push when already present) and continues.
    fn with_literal(
        &mut self,
        choice: ChoiceId,
        outcome: usize,
        outcome_name: Symbol,
        rest: &Arc<Goals>,
    ) -> Result<(), EngineError> {
        for lit in &self.proof {
            if lit.choice == choice {
                if lit.outcome == outcome {
                    return self.run(rest);
                }
                return Ok(()); // conflicting outcome: inconsistent branch
            }
        }
        self.proof.push(Literal {
            choice,
            outcome,
            outcome_name,
        });
        let result = self.run(rest);
        self.proof.pop();
        result
    }

    fn rename_clause(&mut self, clause_idx: usize) -> (Atom, Vec<Atom>) {
        self.rename_counter += 1;
        let inst = self.rename_counter;
        let clause = &self.program.clauses[clause_idx];
        let mut map: Vec<(Symbol, Symbol)> = Vec::new();
        let head = rename_atom_fresh(&clause.head, inst, &mut map);
        let body = clause
            .body
            .iter()
            .map(|b| rename_atom_fresh(b, inst, &mut map))
            .collect();
        (head, body)
    }

    fn eval_arith(&self, term: &Term, goal: &Goal) -> Result<i64, EngineError> {
        let t = self.store.walk(term);
        match t {
            Term::Int(n) => Ok(*n),
            Term::Var(_) => Err(self.eval_error(goal, "unbound variable in arithmetic")),
            Term::Compound(f, args) if args.len() == 2 => {
                let l = self.eval_arith(&args[0], goal)?;
                let r = self.eval_arith(&args[1], goal)?;
                match f.as_str() {
                    "+" => Ok(l.wrapping_add(r)),
                    "-" => Ok(l.wrapping_sub(r)),
                    "*" => Ok(l.wrapping_mul(r)),
                    other => Err(self.eval_error(goal, &format!("unknown operator '{other}'"))),
                }
            }
            other => Err(self.eval_error(goal, &format!("non-numeric term {other}"))),
        }
    }

    fn eval_error(&self, goal: &Goal, message: &str) -> EngineError {
        EngineError::Evaluation {
            goal: goal.atom.to_string(),
            origin: goal.origin.to_string(),
            message: message.to_string(),
        }
    }
}

fn rename_term_fresh(t: &Term, inst: u64, map: &mut Vec<(Symbol, Symbol)>) -> Term {
    match t {
        Term::Var(v) => {
            if let Some((_, fresh)) = map.iter().find(|(orig, _)| orig == v) {
                return Term::Var(fresh.clone());
            }
            let fresh = Symbol::new(&format!("{v}@{inst}"));
            map.push((v.clone(), fresh.clone()));
            Term::Var(fresh)
        }
        Term::Const(_) | Term::Int(_) | Term::Nil => t.clone(),
        Term::Cons(h, tl) => Term::Cons(
            rename_term_fresh(h, inst, map).into(),
            rename_term_fresh(tl, inst, map).into(),
        ),
        Term::Compound(f, args) => Term::Compound(
            f.clone(),
            args.iter()
                .map(|a| rename_term_fresh(a, inst, map))
                .collect(),
        ),
    }
}

fn rename_atom_fresh(a: &Atom, inst: u64, map: &mut Vec<(Symbol, Symbol)>) -> Atom {
    Atom {
        predicate: a.predicate.clone(),
        args: a
            .args
            .iter()
            .map(|t| rename_term_fresh(t, inst, map))
            .collect(),
    }
}
