//! Unification. The public [`Substitution`] is a fully resolved,
//! idempotent binding map; the solver works on a trail-backed store so
//! backtracking undoes bindings without cloning.

use crate::rulelang::{Symbol, Term};
use std::collections::HashMap;
use std::sync::Arc;

/// An idempotent mapping from variables to terms: applying it twice gives
/// the same result as applying it once.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Substitution {
    bindings: HashMap<Symbol, Term>,
}

impl Substitution {
    pub fn get(&self, var: &Symbol) -> Option<&Term> {
        self.bindings.get(var)
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Symbol, &Term)> {
        self.bindings.iter()
    }

    /// Replaces every bound variable in `term`, recursively.
    pub fn apply(&self, term: &Term) -> Term {
        match term {
            Term::Var(v) => match self.bindings.get(v) {
                Some(t) => t.clone(),
                None => term.clone(),
            },
            Term::Const(_) | Term::Int(_) | Term::Nil => term.clone(),
            Term::Cons(h, t) => Term::Cons(self.apply(h).into(), self.apply(t).into()),
            Term::Compound(f, args) => Term::Compound(
                f.clone(),
                args.iter().map(|a| self.apply(a)).collect(),
            ),
        }
    }
}

/// Most general unifier of `a` and `b`, if one exists. Runs an occurs
/// check, so cyclic bindings are rejected rather than constructed.
pub fn unify(a: &Term, b: &Term) -> Option<Substitution> {
    let mut store = BindingStore::new();
    if !store.unify(a, b) {
        return None;
    }
    // Resolve every binding fully so the public map is idempotent.
    let mut bindings = HashMap::new();
    for var in store.bound_vars() {
        let resolved = store.resolve(&Term::Var(var.clone()));
        bindings.insert(var, resolved);
    }
    Some(Substitution { bindings })
}

/// Trail-backed binding store used by the solver. Bindings are triangular:
/// a bound term may itself contain variables bound elsewhere, so readers go
/// through [`BindingStore::walk`] or [`BindingStore::resolve`].
pub(crate) struct BindingStore {
    map: HashMap<Symbol, Term>,
    trail: Vec<Symbol>,
}

impl BindingStore {
    pub fn new() -> Self {
        BindingStore {
            map: HashMap::new(),
            trail: Vec::new(),
        }
    }

    pub fn mark(&self) -> usize {
        self.trail.len()
    }

    pub fn undo_to(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let v = self.trail.pop().unwrap();
            self.map.remove(&v);
        }
    }

    pub fn bound_vars(&self) -> Vec<Symbol> {
        self.map.keys().cloned().collect()
    }

    fn bind(&mut self, var: Symbol, term: Term) {
        self.trail.push(var.clone());
        self.map.insert(var, term);
    }

    /// Follows variable chains one level at a time; the result is either a
    /// non-variable term or an unbound variable.
    pub fn walk<'a>(&'a self, mut term: &'a Term) -> &'a Term {
        while let Term::Var(v) = term {
            match self.map.get(v) {
                Some(t) => term = t,
                None => break,
            }
        }
        term
    }

    /// Fully substitutes bindings into `term`.
    pub fn resolve(&self, term: &Term) -> Term {
        let t = self.walk(term);
        match t {
            Term::Var(_) | Term::Const(_) | Term::Int(_) | Term::Nil => t.clone(),
            Term::Cons(h, tl) => Term::Cons(
                Arc::new(self.resolve(h)),
                Arc::new(self.resolve(tl)),
            ),
            Term::Compound(f, args) => Term::Compound(
                f.clone(),
                args.iter().map(|a| self.resolve(a)).collect(),
            ),
        }
    }

    fn occurs(&self, var: &Symbol, term: &Term) -> bool {
        match self.walk(term) {
            Term::Var(v) => v == var,
            Term::Const(_) | Term::Int(_) | Term::Nil => false,
            Term::Cons(h, t) => self.occurs(var, h) || self.occurs(var, t),
            Term::Compound(_, args) => args.iter().any(|a| self.occurs(var, a)),
        }
    }

    pub fn unify(&mut self, a: &Term, b: &Term) -> bool {
        let a = self.walk(a).clone();
        let b = self.walk(b).clone();
        match (&a, &b) {
            (Term::Var(x), Term::Var(y)) if x == y => true,
            (Term::Var(x), t) => {
                if self.occurs(x, t) {
                    return false;
                }
                self.bind(x.clone(), t.clone());
                true
            }
            (t, Term::Var(y)) => {
                if self.occurs(y, t) {
                    return false;
                }
                self.bind(y.clone(), t.clone());
                true
            }
            (Term::Const(x), Term::Const(y)) => x == y,
            (Term::Int(x), Term::Int(y)) => x == y,
            (Term::Nil, Term::Nil) => true,
            (Term::Cons(h1, t1), Term::Cons(h2, t2)) => {
                self.unify(h1, h2) && self.unify(t1, t2)
            }
            (Term::Compound(f, xs), Term::Compound(g, ys)) => {
                f == g
                    && xs.len() == ys.len()
                    && xs.iter().zip(ys.iter()).all(|(x, y)| self.unify(x, y))
            }
            _ => false,
        }
    }

    /// Unifies two atoms argument-wise.
    pub fn unify_atoms(&mut self, a: &crate::rulelang::Atom, b: &crate::rulelang::Atom) -> bool {
        a.predicate == b.predicate
            && a.args.len() == b.args.len()
            && a.args
                .iter()
                .zip(b.args.iter())
                .all(|(x, y)| self.unify(x, y))
    }
}
