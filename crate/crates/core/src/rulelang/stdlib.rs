//! Bundled rule library: the sequence-matching framework plus the default
//! complex-event rule base used by the CLI and the trainer.
//!
//! `sequence(S, W, T)` holds when the pattern `S` of perceived classes occurs
//! in order, ending exactly at timestamp `T`, with all elements within the
//! last `W` timestamps. `reverse/2` and `previousTimeStamp/3` are engine
//! builtins (see [`crate::rulelang::BuiltinRegistry::standard`]), as are the
//! context facts `allTimeStamps/1` and `window/1`.

use super::ast::Program;
use super::parser::parse_program;

/// Source text of the sequence framework: five clauses defining
/// `sequence/3`, `sequenceWithin/3` and `sequenceEndingAt/3` over the
/// perception predicate `digit/2`.
pub const SEQUENCE_FRAMEWORK: &str = "\
sequence(S, W, T) :-
    reverse(S, S2),
    sequenceEndingAt(S2, W, T).
sequenceWithin([], _, _).
sequenceWithin(S, W, T) :-
    sequenceEndingAt(S, W, T).
sequenceWithin(S, W, T) :-
    W > 0, T >= 0,
    NextW is W - 1,
    allTimeStamps(Timestamps),
    previousTimeStamp(T, Timestamps, Tprev),
    sequenceWithin(S, NextW, Tprev).
sequenceEndingAt([X | L], W, T) :-
    W > 0, T >= 0,
    digit(T, X),
    NextW is W - 1,
    allTimeStamps(Timestamps),
    previousTimeStamp(T, Timestamps, Tprev),
    sequenceWithin(L, NextW, Tprev).
";

/// Predicate queried for complex events: `happensAt(ce_i, T)`.
pub const QUERY_PREDICATE: &str = "happensAt";

/// Network identifier of the default perception model.
pub const DEFAULT_NETWORK: &str = "audioNN";

/// Perception predicate the framework calls, kept declarable for custom
/// rule bases.
pub const PERCEPTION_PREDICATE: &str = "digit";

/// The ten event classes of the shipped configuration.
pub const CLASS_NAMES: [&str; 10] = [
    "air_conditioner",
    "car_horn",
    "children_playing",
    "dog_bark",
    "drilling",
    "enginge_idling",
    "gun_shot",
    "jackhammer",
    "siren",
    "street_music",
];

/// Complex-event constant for class index `i`, e.g. `ce_3`.
pub fn ce_constant(i: usize) -> String {
    format!("ce_{i}")
}

/// Parses the complex-event label written in dataset files back to a class
/// index; `null` maps to `None`.
pub fn parse_ce_label(s: &str) -> Option<Option<u8>> {
    if s == "null" {
        return Some(None);
    }
    let rest = s.strip_prefix("ce_")?;
    let i: u8 = rest.parse().ok()?;
    if i < 10 {
        Some(Some(i))
    } else {
        None
    }
}

/// The sequence framework alone.
pub fn stdlib() -> Program {
    parse_program(SEQUENCE_FRAMEWORK).expect("bundled framework parses")
}

/// Full default rule base: a neural declaration over the ten classes, one
/// `happensAt(ce_i, T)` rule per class looking for a same-class repeat
/// within the window, and the sequence framework.
pub fn default_program() -> Program {
    default_program_for(&CLASS_NAMES)
}

/// Same construction over caller-supplied class names.
pub fn default_program_for(classes: &[&str]) -> Program {
    let mut src = String::new();
    src.push_str(&format!(
        "nn({DEFAULT_NETWORK}, [T], C, [{}])::{PERCEPTION_PREDICATE}(T, C).\n",
        classes.join(", ")
    ));
    for (i, class) in classes.iter().enumerate() {
        src.push_str(&format!(
            "{QUERY_PREDICATE}({}, T) :- window(W), sequence([{class}, {class}], W, T).\n",
            ce_constant(i)
        ));
    }
    src.push_str(SEQUENCE_FRAMEWORK);
    parse_program(&src).expect("default rule base parses")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rulelang::validate::{validate, BuiltinRegistry};

    #[test]
    fn framework_has_five_clauses() {
        let p = stdlib();
        assert_eq!(p.clauses.len(), 5);
        let count = |name: &str| {
            p.clauses
                .iter()
                .filter(|c| c.head.predicate.as_str() == name && c.head.arity() == 3)
                .count()
        };
        assert_eq!(count("sequence"), 1);
        assert_eq!(count("sequenceWithin"), 3);
        assert_eq!(count("sequenceEndingAt"), 1);
    }

    #[test]
    fn default_program_validates_cleanly() {
        let p = default_program();
        let diags = validate(&p, &BuiltinRegistry::standard());
        assert!(diags.is_empty(), "{diags:?}");
        assert_eq!(p.neural_decls.len(), 1);
        assert_eq!(p.neural_decls[0].domain.len(), 10);
        assert_eq!(p.clauses.len(), 10 + 5);
    }

    #[test]
    fn framework_alone_validates_with_perception_registered() {
        let p = stdlib();
        let mut builtins = BuiltinRegistry::standard();
        builtins.register(PERCEPTION_PREDICATE, 2);
        assert!(validate(&p, &builtins).is_empty());
    }

    #[test]
    fn ce_labels_roundtrip() {
        assert_eq!(parse_ce_label("ce_7"), Some(Some(7)));
        assert_eq!(parse_ce_label("null"), Some(None));
        assert_eq!(parse_ce_label("ce_11"), None);
        assert_eq!(parse_ce_label("bogus"), None);
    }
}
