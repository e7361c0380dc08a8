//! Static checks over a parsed [`Program`].

use super::ast::{Program, Symbol};
use std::collections::BTreeSet;
use std::fmt;

/// Probability mass of a multi-alternative disjunction may deviate from one
/// by at most this much.
pub const AD_SUM_TOLERANCE: f64 = 1e-9;

/// Predicates the evaluator resolves natively. Calls to these never need a
/// clause definition; user clauses with the same indicator are shadowed.
#[derive(Clone, Debug)]
pub struct BuiltinRegistry {
    entries: BTreeSet<(String, usize)>,
}

impl BuiltinRegistry {
    pub fn empty() -> Self {
        BuiltinRegistry {
            entries: BTreeSet::new(),
        }
    }

    /// Everything the stream engine provides: arithmetic comparison, `is`,
    /// list reversal and timestamp lookup, plus the two context facts the
    /// engine asserts at query time (`allTimeStamps/1`, `window/1`).
    pub fn standard() -> Self {
        let mut r = BuiltinRegistry::empty();
        for (name, arity) in [
            (">", 2),
            (">=", 2),
            ("<", 2),
            ("=<", 2),
            ("is", 2),
            ("reverse", 2),
            ("previousTimeStamp", 3),
            ("allTimeStamps", 1),
            ("window", 1),
        ] {
            r.register(name, arity);
        }
        r
    }

    pub fn register(&mut self, name: &str, arity: usize) {
        self.entries.insert((name.to_string(), arity));
    }

    pub fn contains(&self, name: &str, arity: usize) -> bool {
        self.entries.contains(&(name.to_string(), arity))
    }
}

impl Default for BuiltinRegistry {
    fn default() -> Self {
        BuiltinRegistry::standard()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DiagnosticKind {
    AdProbabilitySum,
    AdProbabilityRange,
    DuplicateNeuralDecl,
    DuplicateNeuralDomain,
    NeuralHeadClash,
    UndefinedPredicate,
}

/// One validation finding; an empty diagnostic list means the program is
/// well-formed with respect to the registered builtins.
#[derive(Clone, Debug)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

pub fn validate(program: &Program, builtins: &BuiltinRegistry) -> Vec<Diagnostic> {
    let mut out = Vec::new();

    // Annotated disjunctions: probabilities in range; multi-alternative
    // disjunctions must sum to one. A singleton is a plain probabilistic
    // fact and only needs p within [0, 1].
    for (i, ad) in program.ads.iter().enumerate() {
        for (p, head) in &ad.alternatives {
            if !(0.0..=1.0).contains(p) || !p.is_finite() {
                out.push(Diagnostic {
                    kind: DiagnosticKind::AdProbabilityRange,
                    message: format!(
                        "AD #{i}: probability {p} of alternative {head} outside [0, 1]"
                    ),
                });
            }
        }
        if ad.alternatives.len() >= 2 {
            let sum = ad.probability_sum();
            if (sum - 1.0).abs() > AD_SUM_TOLERANCE {
                out.push(Diagnostic {
                    kind: DiagnosticKind::AdProbabilitySum,
                    message: format!("AD #{i}: AD probabilities sum to {sum:.4}, expected 1"),
                });
            }
        }
    }

    // One declaration per neural predicate; distinct domain constants.
    let mut seen_neural: BTreeSet<(Symbol, usize)> = BTreeSet::new();
    for d in &program.neural_decls {
        if !seen_neural.insert((d.predicate.clone(), d.arity())) {
            out.push(Diagnostic {
                kind: DiagnosticKind::DuplicateNeuralDecl,
                message: format!(
                    "duplicate neural declaration for {}/{}",
                    d.predicate,
                    d.arity()
                ),
            });
        }
        let distinct: BTreeSet<_> = d.domain.iter().collect();
        if distinct.len() != d.domain.len() {
            out.push(Diagnostic {
                kind: DiagnosticKind::DuplicateNeuralDomain,
                message: format!("neural declaration {}: repeated domain constant", d.network),
            });
        }
    }

    // No ordinary clause may share its head with a neural predicate.
    for c in &program.clauses {
        let (p, n) = c.head.functor();
        if program.neural_decl_for(&p, n).is_some() {
            out.push(Diagnostic {
                kind: DiagnosticKind::NeuralHeadClash,
                message: format!("clause head {p}/{n} shares a predicate with a neural predicate"),
            });
        }
    }

    // Closure check: every body predicate must be a clause head, an AD
    // alternative head, a neural predicate, or a builtin.
    let mut defined: BTreeSet<(Symbol, usize)> = BTreeSet::new();
    for c in &program.clauses {
        defined.insert(c.head.functor());
    }
    for ad in &program.ads {
        for (_, a) in &ad.alternatives {
            defined.insert(a.functor());
        }
    }
    for d in &program.neural_decls {
        defined.insert((d.predicate.clone(), d.arity()));
    }
    let bodies = program
        .clauses
        .iter()
        .map(|c| &c.body)
        .chain(program.ads.iter().map(|ad| &ad.body));
    let mut reported: BTreeSet<(Symbol, usize)> = BTreeSet::new();
    for body in bodies {
        for goal in body {
            let key = goal.functor();
            if defined.contains(&key)
                || builtins.contains(key.0.as_str(), key.1)
                || reported.contains(&key)
            {
                continue;
            }
            reported.insert(key.clone());
            out.push(Diagnostic {
                kind: DiagnosticKind::UndefinedPredicate,
                message: format!("undefined predicate {}/{} used in a body", key.0, key.1),
            });
        }
    }

    out
}

/// Convenience check used by callers that only care about pass/fail.
pub fn is_valid(program: &Program, builtins: &BuiltinRegistry) -> bool {
    validate(program, builtins).is_empty()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rulelang::parser::parse_program;

    #[test]
    fn bad_ad_sum_is_diagnosed() {
        let p = parse_program("0.5::a; 0.6::b.").unwrap();
        let diags = validate(&p, &BuiltinRegistry::standard());
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].kind, DiagnosticKind::AdProbabilitySum);
        assert!(diags[0].message.contains("1.1"), "{}", diags[0].message);
    }

    #[test]
    fn undefined_predicate_is_diagnosed() {
        let p = parse_program("f(T) :- previousTimeStamp(T, Ts, Tp), mystery(Tp).").unwrap();
        let diags = validate(&p, &BuiltinRegistry::standard());
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].kind, DiagnosticKind::UndefinedPredicate);
        assert!(diags[0].message.contains("mystery"));
        // Without the registry the builtin itself is undefined too.
        let diags = validate(&p, &BuiltinRegistry::empty());
        assert_eq!(diags.len(), 2);
    }

    #[test]
    fn neural_head_clash() {
        let p = parse_program("nn(m, [X], O, [a, b])::digit(X, O). digit(1, a).").unwrap();
        let diags = validate(&p, &BuiltinRegistry::standard());
        assert!(diags
            .iter()
            .any(|d| d.kind == DiagnosticKind::NeuralHeadClash));
    }

    #[test]
    fn singleton_fact_needs_no_sum() {
        let p = parse_program("0.5::coin.").unwrap();
        assert!(validate(&p, &BuiltinRegistry::standard()).is_empty());
    }
}
