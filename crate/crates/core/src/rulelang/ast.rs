//! Abstract syntax for the probabilistic rule language.
//!
//! A [`Program`] holds plain clauses, annotated disjunctions, neural
//! declarations and directives. All pieces are immutable after parsing and
//! cheap to share across threads.

use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

/// Interned-ish identifier: a shared string with pointer-equality fast path.
#[derive(Clone, Eq)]
pub struct Symbol(Arc<str>);

impl Symbol {
    pub fn new(s: &str) -> Self {
        Symbol(Arc::from(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl PartialEq for Symbol {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0
    }
}

impl PartialOrd for Symbol {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Symbol {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.cmp(&other.0)
    }
}

impl Hash for Symbol {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.hash(state)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl From<&str> for Symbol {
    fn from(s: &str) -> Self {
        Symbol::new(s)
    }
}

impl From<String> for Symbol {
    fn from(s: String) -> Self {
        Symbol(Arc::from(s))
    }
}

/// First-order term. Lists are kept as cons cells so partial lists
/// (`[H | T]` with a variable tail) unify without special cases; the parser
/// only ever produces proper, nil-terminated lists.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    /// Uppercase- or underscore-initial identifier.
    Var(Symbol),
    /// Lowercase-initial identifier.
    Const(Symbol),
    Int(i64),
    /// The empty list `[]`.
    Nil,
    /// A cons cell `[Head | Tail]`.
    Cons(Arc<Term>, Arc<Term>),
    Compound(Symbol, Arc<[Term]>),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(Symbol::new(name))
    }

    pub fn constant(name: &str) -> Term {
        Term::Const(Symbol::new(name))
    }

    pub fn compound(functor: &str, args: Vec<Term>) -> Term {
        Term::Compound(Symbol::new(functor), args.into())
    }

    /// Builds a proper list from `elements`.
    pub fn list(elements: Vec<Term>) -> Term {
        let mut tail = Term::Nil;
        for e in elements.into_iter().rev() {
            tail = Term::Cons(Arc::new(e), Arc::new(tail));
        }
        tail
    }

    /// Returns the elements when `self` is a proper (nil-terminated) list.
    pub fn as_proper_list(&self) -> Option<Vec<&Term>> {
        let mut out = Vec::new();
        let mut cur = self;
        loop {
            match cur {
                Term::Nil => return Some(out),
                Term::Cons(h, t) => {
                    out.push(h.as_ref());
                    cur = t.as_ref();
                }
                _ => return None,
            }
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Const(_) | Term::Int(_) | Term::Nil => true,
            Term::Cons(h, t) => h.is_ground() && t.is_ground(),
            Term::Compound(_, args) => args.iter().all(|a| a.is_ground()),
        }
    }

    /// Collects every variable name occurring in the term.
    pub fn collect_vars(&self, out: &mut Vec<Symbol>) {
        match self {
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Term::Const(_) | Term::Int(_) | Term::Nil => {}
            Term::Cons(h, t) => {
                h.collect_vars(out);
                t.collect_vars(out);
            }
            Term::Compound(_, args) => {
                for a in args.iter() {
                    a.collect_vars(out);
                }
            }
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::rulelang::pretty::term_to_string(self))
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Predicate application `p(t1, ..., tn)`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub predicate: Symbol,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: &str, args: Vec<Term>) -> Atom {
        Atom {
            predicate: Symbol::new(predicate),
            args,
        }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    /// Predicate indicator, e.g. `digit/2`.
    pub fn functor(&self) -> (Symbol, usize) {
        (self.predicate.clone(), self.args.len())
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(|a| a.is_ground())
    }

    pub fn collect_vars(&self, out: &mut Vec<Symbol>) {
        for a in &self.args {
            a.collect_vars(out);
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::rulelang::pretty::atom_to_string(self))
    }
}

impl fmt::Debug for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// `head :- b1, ..., bn.` An empty body makes the clause a fact.
#[derive(Clone, Debug, PartialEq)]
pub struct Clause {
    pub head: Atom,
    pub body: Vec<Atom>,
}

impl Clause {
    pub fn is_fact(&self) -> bool {
        self.body.is_empty()
    }
}

/// `p1::h1; ...; pn::hn :- body.`
///
/// A single-alternative disjunction with probability below one is a plain
/// probabilistic fact `p::f`; only multi-alternative disjunctions must have
/// probabilities summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct AnnotatedDisjunction {
    pub alternatives: Vec<(f64, Atom)>,
    pub body: Vec<Atom>,
}

impl AnnotatedDisjunction {
    pub fn probability_sum(&self) -> f64 {
        self.alternatives.iter().map(|(p, _)| p).sum()
    }

    pub fn is_ground(&self) -> bool {
        self.alternatives.iter().all(|(_, a)| a.is_ground())
            && self.body.iter().all(|a| a.is_ground())
    }
}

/// `nn(net, [X1, ..., Xk], O, [y1, ..., yn]) :: pred(X1, ..., Xk, O).`
#[derive(Clone, Debug, PartialEq)]
pub struct NeuralDecl {
    pub network: Symbol,
    pub input_vars: Vec<Symbol>,
    pub output_var: Symbol,
    pub domain: Vec<Symbol>,
    pub predicate: Symbol,
}

impl NeuralDecl {
    /// Declared predicate arity: the inputs plus the outcome position.
    pub fn arity(&self) -> usize {
        self.input_vars.len() + 1
    }

    pub fn domain_index(&self, c: &Symbol) -> Option<usize> {
        self.domain.iter().position(|d| d == c)
    }
}

/// A parsed rule base. Construction goes through the parser or explicit
/// builders; the struct itself carries no hidden state.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Program {
    pub clauses: Vec<Clause>,
    pub ads: Vec<AnnotatedDisjunction>,
    pub neural_decls: Vec<NeuralDecl>,
    pub directives: BTreeMap<String, Term>,
}

impl Program {
    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
            && self.ads.is_empty()
            && self.neural_decls.is_empty()
            && self.directives.is_empty()
    }

    /// Appends every item of `other` onto `self` (library composition).
    pub fn extend(&mut self, other: Program) {
        self.clauses.extend(other.clauses);
        self.ads.extend(other.ads);
        self.neural_decls.extend(other.neural_decls);
        self.directives.extend(other.directives);
    }

    pub fn neural_decl_for(&self, predicate: &Symbol, arity: usize) -> Option<&NeuralDecl> {
        self.neural_decls
            .iter()
            .find(|d| &d.predicate == predicate && d.arity() == arity)
    }

    /// Stable in-process fingerprint of the canonical source text, used as a
    /// circuit-cache key component.
    pub fn fingerprint(&self) -> u64 {
        use std::collections::hash_map::DefaultHasher;
        let mut h = DefaultHasher::new();
        crate::rulelang::pretty::pretty_print(self).hash(&mut h);
        h.finish()
    }
}
