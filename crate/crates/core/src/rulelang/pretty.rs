//! Canonical source rendering. `parse_program(pretty_print(p))` yields a
//! structurally identical program; the section order is directives, neural
//! declarations, annotated disjunctions, clauses.

use super::ast::{AnnotatedDisjunction, Atom, Clause, NeuralDecl, Program, Term};
use std::fmt::Write;

const PREC_ADD: u8 = 5; // '+', '-' (left associative)
const PREC_MUL: u8 = 4; // '*'      (left associative)

pub fn pretty_print(program: &Program) -> String {
    let mut out = String::new();
    for (key, value) in &program.directives {
        let _ = writeln!(out, ":- {key}({}).", term_to_string(value));
    }
    for d in &program.neural_decls {
        let _ = writeln!(out, "{}", neural_decl_to_string(d));
    }
    for ad in &program.ads {
        let _ = writeln!(out, "{}", ad_to_string(ad));
    }
    for c in &program.clauses {
        let _ = writeln!(out, "{}", clause_to_string(c));
    }
    out
}

pub fn clause_to_string(c: &Clause) -> String {
    if c.body.is_empty() {
        format!("{}.", atom_to_string(&c.head))
    } else {
        format!("{} :- {}.", atom_to_string(&c.head), body_to_string(&c.body))
    }
}

pub fn ad_to_string(ad: &AnnotatedDisjunction) -> String {
    let alts: Vec<String> = ad
        .alternatives
        .iter()
        .map(|(p, a)| format!("{p}::{}", atom_to_string(a)))
        .collect();
    if ad.body.is_empty() {
        format!("{}.", alts.join("; "))
    } else {
        format!("{} :- {}.", alts.join("; "), body_to_string(&ad.body))
    }
}

pub fn neural_decl_to_string(d: &NeuralDecl) -> String {
    let inputs: Vec<&str> = d.input_vars.iter().map(|v| v.as_str()).collect();
    let domain: Vec<&str> = d.domain.iter().map(|c| c.as_str()).collect();
    let mut head_args: Vec<String> = inputs.iter().map(|s| s.to_string()).collect();
    head_args.push(d.output_var.as_str().to_string());
    format!(
        "nn({}, [{}], {}, [{}])::{}({}).",
        d.network,
        inputs.join(", "),
        d.output_var,
        domain.join(", "),
        d.predicate,
        head_args.join(", ")
    )
}

fn body_to_string(body: &[Atom]) -> String {
    let goals: Vec<String> = body.iter().map(atom_to_string).collect();
    goals.join(", ")
}

/// Goal-position rendering: comparisons and `is` print infix.
pub fn atom_to_string(a: &Atom) -> String {
    if a.args.len() == 2 {
        if let ">" | ">=" | "<" | "=<" | "is" = a.predicate.as_str() {
            return format!(
                "{} {} {}",
                term_to_string(&a.args[0]),
                a.predicate,
                term_to_string(&a.args[1])
            );
        }
    }
    if a.args.is_empty() {
        a.predicate.to_string()
    } else {
        let args: Vec<String> = a.args.iter().map(term_to_string).collect();
        format!("{}({})", a.predicate, args.join(", "))
    }
}

pub fn term_to_string(t: &Term) -> String {
    let mut s = String::new();
    write_term(&mut s, t, u8::MAX);
    s
}

fn op_prec(name: &str) -> Option<u8> {
    match name {
        "+" | "-" => Some(PREC_ADD),
        "*" => Some(PREC_MUL),
        _ => None,
    }
}

fn write_term(out: &mut String, t: &Term, max_prec: u8) {
    match t {
        Term::Var(v) => out.push_str(v.as_str()),
        Term::Const(c) => out.push_str(c.as_str()),
        Term::Int(n) => {
            let _ = write!(out, "{n}");
        }
        Term::Nil => out.push_str("[]"),
        Term::Cons(_, _) => write_list(out, t),
        Term::Compound(f, args) => {
            if args.len() == 2 {
                if let Some(prec) = op_prec(f.as_str()) {
                    let parens = prec > max_prec;
                    if parens {
                        out.push('(');
                    }
                    write_term(out, &args[0], prec);
                    let _ = write!(out, " {f} ");
                    // Left-associative: the right operand binds tighter.
                    write_term(out, &args[1], prec - 1);
                    if parens {
                        out.push(')');
                    }
                    return;
                }
            }
            out.push_str(f.as_str());
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_term(out, a, u8::MAX);
            }
            out.push(')');
        }
    }
}

fn write_list(out: &mut String, t: &Term) {
    out.push('[');
    let mut cur = t;
    let mut first = true;
    loop {
        match cur {
            Term::Cons(h, tail) => {
                if !first {
                    out.push_str(", ");
                }
                write_term(out, h, u8::MAX);
                first = false;
                cur = tail.as_ref();
            }
            Term::Nil => break,
            other => {
                out.push_str(" | ");
                write_term(out, other, u8::MAX);
                break;
            }
        }
    }
    out.push(']');
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rulelang::parser::{parse_program, parse_term_str};

    fn roundtrip(src: &str) {
        let p1 = parse_program(src).unwrap();
        let text = pretty_print(&p1);
        let p2 = parse_program(&text).unwrap_or_else(|e| panic!("reparse of {text:?}: {e}"));
        assert_eq!(p1, p2, "round-trip mismatch for {text:?}");
    }

    #[test]
    fn roundtrips() {
        roundtrip("f(a, [1, 2 | T], g(X)) :- X > 0, Y is X - 1 - 2, h(Y).");
        roundtrip("0.25::a(1); 0.75::b(c) :- g, h(2).");
        roundtrip("nn(m, [X], O, [u, v, w])::p(X, O).");
        roundtrip(":- window(3). f. g(_, _).");
        roundtrip("f(-2) :- g(3 * (4 + -1)).");
    }

    #[test]
    fn operator_parentheses() {
        let t = parse_term_str("1 - (2 - 3)").unwrap();
        assert_eq!(term_to_string(&t), "1 - (2 - 3)");
        let t = parse_term_str("(1 + 2) * 3").unwrap();
        assert_eq!(term_to_string(&t), "(1 + 2) * 3");
        let t = parse_term_str("1 - 2 - 3").unwrap();
        assert_eq!(term_to_string(&t), "1 - 2 - 3");
    }

    #[test]
    fn probability_one_prints_reparsable() {
        roundtrip("1::sure.");
    }
}
