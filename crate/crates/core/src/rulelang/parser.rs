//! Recursive-descent parser for the rule language.
//!
//! Grammar sketch (items end with `.`):
//!
//! ```text
//! item   := ':-' atom '.'                                   directive
//!         | 'nn' '(' ... ')' '::' atom '.'                  neural declaration
//!         | prob '::' atom (';' prob '::' atom)* rest '.'   annotated disjunction
//!         | atom rest '.'                                   clause
//! rest   := (':-' goal (',' goal)*)?
//! goal   := expr (('>' | '>=' | '<' | '=<' | 'is') expr)?
//! expr   := mul (('+' | '-') mul)*
//! mul    := primary ('*' primary)*
//! ```
//!
//! Comparisons and `is` bind at the goal level; `+`, `-`, `*` are ordinary
//! infix term constructors usable in any argument position.

use super::ast::{AnnotatedDisjunction, Atom, Clause, NeuralDecl, Program, Symbol, Term};
use super::lexer::{tokenize, Spanned, Token};
use super::RuleError;

/// Parses a complete source text into a [`Program`].
pub fn parse_program(text: &str) -> Result<Program, RuleError> {
    let tokens = tokenize(text)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        anon: 0,
    };
    let mut program = Program::default();
    while !p.at_eof() {
        p.parse_item(&mut program)?;
    }
    Ok(program)
}

/// Parses a single term, mainly for tests and tooling.
pub fn parse_term_str(text: &str) -> Result<Term, RuleError> {
    let tokens = tokenize(text)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        anon: 0,
    };
    let t = p.parse_expr()?;
    p.expect_eof()?;
    Ok(p.finish_vars_term(t))
}

/// Parses a single atom, e.g. a query literal.
pub fn parse_atom_str(text: &str) -> Result<Atom, RuleError> {
    let tokens = tokenize(text)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        anon: 0,
    };
    let t = p.parse_goal()?;
    p.expect_eof()?;
    let t = Atom {
        predicate: t.predicate,
        args: t.args.into_iter().map(|a| p.finish_vars_term(a)).collect(),
    };
    Ok(t)
}

// Placeholder prefix for anonymous variables while an item is being parsed;
// \u{1} cannot appear in identifiers, so it never collides with user names.
const ANON_PLACEHOLDER: char = '\u{1}';

struct Parser {
    tokens: Vec<Spanned>,
    pos: usize,
    anon: usize,
}

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Spanned {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn at_eof(&self) -> bool {
        matches!(self.peek().token, Token::Eof)
    }

    fn error_here(&self, expected: &str) -> RuleError {
        let s = self.peek();
        RuleError::syntax(
            s.line,
            s.col,
            &format!("expected {expected}, found {}", s.token.describe()),
        )
    }

    fn expect(&mut self, tok: &Token, expected: &str) -> Result<(), RuleError> {
        if &self.peek().token == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error_here(expected))
        }
    }

    fn expect_eof(&self) -> Result<(), RuleError> {
        if self.at_eof() {
            Ok(())
        } else {
            Err(self.error_here("end of input"))
        }
    }

    fn parse_item(&mut self, program: &mut Program) -> Result<(), RuleError> {
        self.anon = 0;
        match &self.peek().token {
            Token::Neck => {
                self.bump();
                let atom = self.parse_goal()?;
                self.expect(&Token::Dot, "'.' after directive")?;
                if atom.args.len() != 1 {
                    return Err(self.error_here("directive with exactly one argument"));
                }
                let atom = self.finish_vars_atom(atom);
                program
                    .directives
                    .insert(atom.predicate.as_str().to_string(), atom.args[0].clone());
                Ok(())
            }
            Token::Int(_) | Token::Float(_) => {
                let ad = self.parse_annotated_disjunction(None)?;
                program.ads.push(ad);
                Ok(())
            }
            Token::Lower(_) => {
                let head = self.parse_callable()?;
                if head.predicate.as_str() == "nn" && self.peek().token == Token::DoubleColon {
                    let decl = self.neural_decl_from(head)?;
                    program.neural_decls.push(decl);
                    return Ok(());
                }
                match &self.peek().token {
                    Token::Dot => {
                        self.bump();
                        program.clauses.push(self.finish_vars_clause(Clause {
                            head,
                            body: Vec::new(),
                        }));
                        Ok(())
                    }
                    Token::Neck => {
                        self.bump();
                        let body = self.parse_body()?;
                        self.expect(&Token::Dot, "'.' after clause body")?;
                        program
                            .clauses
                            .push(self.finish_vars_clause(Clause { head, body }));
                        Ok(())
                    }
                    _ => Err(self.error_here("'.', ':-' or '::' after clause head")),
                }
            }
            _ => Err(self.error_here("a clause, annotated disjunction or directive")),
        }
    }

    /// Parses `p::h; ...` once the leading probability is known to follow.
    fn parse_annotated_disjunction(
        &mut self,
        _hint: Option<()>,
    ) -> Result<AnnotatedDisjunction, RuleError> {
        let mut alternatives = Vec::new();
        loop {
            let prob = match self.bump().token {
                Token::Float(p) => p,
                Token::Int(n) => n as f64,
                _ => return Err(self.error_here("a probability")),
            };
            self.expect(&Token::DoubleColon, "'::' after probability")?;
            let head = self.parse_callable()?;
            alternatives.push((prob, head));
            match &self.peek().token {
                Token::Semicolon => {
                    self.bump();
                }
                _ => break,
            }
        }
        let body = match &self.peek().token {
            Token::Neck => {
                self.bump();
                self.parse_body()?
            }
            _ => Vec::new(),
        };
        self.expect(&Token::Dot, "'.' after annotated disjunction")?;
        let mut ad = AnnotatedDisjunction { alternatives, body };
        self.finish_vars_ad(&mut ad);
        Ok(ad)
    }

    /// `nn(net, [V...], O, [c...]) :: pred(args)` — the `nn(...)` part has
    /// already been parsed as a callable.
    fn neural_decl_from(&mut self, nn: Atom) -> Result<NeuralDecl, RuleError> {
        self.expect(&Token::DoubleColon, "'::'")?;
        let head = self.parse_callable()?;
        self.expect(&Token::Dot, "'.' after neural declaration")?;
        if nn.args.len() != 4 {
            return Err(self.error_here("nn/4 with (network, inputs, output, domain)"));
        }
        let network = match &nn.args[0] {
            Term::Const(c) => c.clone(),
            _ => return Err(self.error_here("a network identifier constant")),
        };
        let input_vars = match nn.args[1].as_proper_list() {
            Some(items) => {
                let mut vs = Vec::new();
                for it in items {
                    match it {
                        Term::Var(v) => vs.push(v.clone()),
                        _ => return Err(self.error_here("a list of input variables")),
                    }
                }
                vs
            }
            None => return Err(self.error_here("a list of input variables")),
        };
        let output_var = match &nn.args[2] {
            Term::Var(v) => v.clone(),
            _ => return Err(self.error_here("an output variable")),
        };
        let domain = match nn.args[3].as_proper_list() {
            Some(items) => {
                let mut cs = Vec::new();
                for it in items {
                    match it {
                        Term::Const(c) => cs.push(c.clone()),
                        _ => return Err(self.error_here("a list of domain constants")),
                    }
                }
                cs
            }
            None => return Err(self.error_here("a list of domain constants")),
        };
        // The declared head must spell out the inputs followed by the outcome.
        let mut expected: Vec<Term> = input_vars.iter().cloned().map(Term::Var).collect();
        expected.push(Term::Var(output_var.clone()));
        if head.args != expected {
            return Err(self.error_here(
                "a declared head whose arguments are the input variables then the output variable",
            ));
        }
        Ok(NeuralDecl {
            network,
            input_vars,
            output_var,
            domain,
            predicate: head.predicate,
        })
    }

    fn parse_body(&mut self) -> Result<Vec<Atom>, RuleError> {
        let mut goals = vec![self.parse_goal()?];
        while self.peek().token == Token::Comma {
            self.bump();
            goals.push(self.parse_goal()?);
        }
        Ok(goals)
    }

    /// A goal: a predicate call, or an infix comparison / `is`.
    fn parse_goal(&mut self) -> Result<Atom, RuleError> {
        let left = self.parse_expr()?;
        let op = match &self.peek().token {
            Token::Op(o @ (">" | ">=" | "<" | "=<")) => Some(*o),
            Token::Lower(s) if s == "is" => Some("is"),
            _ => None,
        };
        if let Some(op) = op {
            self.bump();
            let right = self.parse_expr()?;
            return Ok(Atom::new(op, vec![left, right]));
        }
        match left {
            Term::Const(c) => Ok(Atom {
                predicate: c,
                args: Vec::new(),
            }),
            Term::Compound(f, args) => Ok(Atom {
                predicate: f,
                args: args.to_vec(),
            }),
            _ => Err(self.error_here("a goal")),
        }
    }

    /// A callable head position: `name` or `name(args)` only.
    fn parse_callable(&mut self) -> Result<Atom, RuleError> {
        let name = match &self.peek().token {
            Token::Lower(s) => s.clone(),
            _ => return Err(self.error_here("a predicate name")),
        };
        self.bump();
        if self.peek().token == Token::LParen {
            self.bump();
            let mut args = vec![self.parse_expr()?];
            while self.peek().token == Token::Comma {
                self.bump();
                args.push(self.parse_expr()?);
            }
            self.expect(&Token::RParen, "')'")?;
            Ok(Atom::new(&name, args))
        } else {
            Ok(Atom::new(&name, Vec::new()))
        }
    }

    fn parse_expr(&mut self) -> Result<Term, RuleError> {
        let mut left = self.parse_mul()?;
        loop {
            let op = match &self.peek().token {
                Token::Op(o @ ("+" | "-")) => *o,
                _ => break,
            };
            self.bump();
            let right = self.parse_mul()?;
            left = Term::compound(op, vec![left, right]);
        }
        Ok(left)
    }

    fn parse_mul(&mut self) -> Result<Term, RuleError> {
        let mut left = self.parse_primary()?;
        while let Token::Op("*") = &self.peek().token {
            self.bump();
            let right = self.parse_primary()?;
            left = Term::compound("*", vec![left, right]);
        }
        Ok(left)
    }

    fn parse_primary(&mut self) -> Result<Term, RuleError> {
        match self.peek().token.clone() {
            Token::Int(n) => {
                self.bump();
                Ok(Term::Int(n))
            }
            Token::Op("-") => {
                // Unary minus: only immediately before an integer literal.
                self.bump();
                match self.peek().token {
                    Token::Int(n) => {
                        self.bump();
                        Ok(Term::Int(-n))
                    }
                    _ => Err(self.error_here("an integer after unary '-'")),
                }
            }
            Token::Upper(name) => {
                self.bump();
                if name == "_" {
                    let t = Term::var(&format!("{ANON_PLACEHOLDER}{}", self.anon));
                    self.anon += 1;
                    Ok(t)
                } else {
                    Ok(Term::var(&name))
                }
            }
            Token::Lower(name) => {
                self.bump();
                if self.peek().token == Token::LParen {
                    self.bump();
                    let mut args = vec![self.parse_expr()?];
                    while self.peek().token == Token::Comma {
                        self.bump();
                        args.push(self.parse_expr()?);
                    }
                    self.expect(&Token::RParen, "')'")?;
                    Ok(Term::compound(&name, args))
                } else {
                    Ok(Term::constant(&name))
                }
            }
            Token::LBracket => {
                self.bump();
                if self.peek().token == Token::RBracket {
                    self.bump();
                    return Ok(Term::Nil);
                }
                let mut elems = vec![self.parse_expr()?];
                while self.peek().token == Token::Comma {
                    self.bump();
                    elems.push(self.parse_expr()?);
                }
                let tail = if self.peek().token == Token::Bar {
                    self.bump();
                    Some(self.parse_expr()?)
                } else {
                    None
                };
                self.expect(&Token::RBracket, "']'")?;
                let mut t = tail.unwrap_or(Term::Nil);
                for e in elems.into_iter().rev() {
                    t = Term::Cons(e.into(), t.into());
                }
                Ok(t)
            }
            Token::LParen => {
                self.bump();
                let t = self.parse_expr()?;
                self.expect(&Token::RParen, "')'")?;
                Ok(t)
            }
            _ => Err(self.error_here("a term")),
        }
    }

    // ---- anonymous-variable finalization -------------------------------

    /// Renames `_` placeholders to fresh `_Ak` names not used elsewhere in
    /// the item, so each anonymous occurrence stays distinct and printable.
    fn finish_vars_clause(&mut self, mut clause: Clause) -> Clause {
        let mut used = Vec::new();
        clause.head.collect_vars(&mut used);
        for b in &clause.body {
            b.collect_vars(&mut used);
        }
        let map = anon_renaming(&used);
        if map.is_empty() {
            return clause;
        }
        clause.head = rename_atom(&clause.head, &map);
        clause.body = clause.body.iter().map(|b| rename_atom(b, &map)).collect();
        clause
    }

    fn finish_vars_ad(&mut self, ad: &mut AnnotatedDisjunction) {
        let mut used = Vec::new();
        for (_, a) in &ad.alternatives {
            a.collect_vars(&mut used);
        }
        for b in &ad.body {
            b.collect_vars(&mut used);
        }
        let map = anon_renaming(&used);
        if map.is_empty() {
            return;
        }
        for (_, a) in ad.alternatives.iter_mut() {
            *a = rename_atom(a, &map);
        }
        for b in ad.body.iter_mut() {
            *b = rename_atom(b, &map);
        }
    }

    fn finish_vars_atom(&mut self, atom: Atom) -> Atom {
        let mut used = Vec::new();
        atom.collect_vars(&mut used);
        let map = anon_renaming(&used);
        if map.is_empty() {
            atom
        } else {
            rename_atom(&atom, &map)
        }
    }

    fn finish_vars_term(&mut self, term: Term) -> Term {
        let mut used = Vec::new();
        term.collect_vars(&mut used);
        let map = anon_renaming(&used);
        if map.is_empty() {
            term
        } else {
            rename_term(&term, &map)
        }
    }
}

fn anon_renaming(used: &[Symbol]) -> Vec<(Symbol, Symbol)> {
    let mut map = Vec::new();
    let mut next = 0usize;
    for v in used {
        if !v.as_str().starts_with(ANON_PLACEHOLDER) {
            continue;
        }
        let fresh = loop {
            let cand = format!("_A{next}");
            next += 1;
            if !used.iter().any(|u| u.as_str() == cand) {
                break Symbol::new(&cand);
            }
        };
        map.push((v.clone(), fresh));
    }
    map
}

fn rename_term(t: &Term, map: &[(Symbol, Symbol)]) -> Term {
    match t {
        Term::Var(v) => match map.iter().find(|(from, _)| from == v) {
            Some((_, to)) => Term::Var(to.clone()),
            None => t.clone(),
        },
        Term::Const(_) | Term::Int(_) | Term::Nil => t.clone(),
        Term::Cons(h, tl) => Term::Cons(
            rename_term(h, map).into(),
            rename_term(tl, map).into(),
        ),
        Term::Compound(f, args) => Term::Compound(
            f.clone(),
            args.iter().map(|a| rename_term(a, map)).collect(),
        ),
    }
}

fn rename_atom(a: &Atom, map: &[(Symbol, Symbol)]) -> Atom {
    Atom {
        predicate: a.predicate.clone(),
        args: a.args.iter().map(|t| rename_term(t, map)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_is_empty_program() {
        let p = parse_program("").unwrap();
        assert!(p.clauses.is_empty());
        assert!(p.ads.is_empty());
        assert!(p.neural_decls.is_empty());
    }

    #[test]
    fn neural_declaration() {
        let p =
            parse_program("nn(audioNN,[T],C,[air_conditioner,car_horn])::digit(T,C).").unwrap();
        assert_eq!(p.neural_decls.len(), 1);
        let d = &p.neural_decls[0];
        assert_eq!(d.network.as_str(), "audioNN");
        assert_eq!(d.domain.len(), 2);
        assert_eq!(d.predicate.as_str(), "digit");
        assert_eq!(d.arity(), 2);
    }

    #[test]
    fn clause_with_arithmetic_body() {
        let p = parse_program("f(T) :- T >= 0, N is T - 1, g(N).").unwrap();
        assert_eq!(p.clauses.len(), 1);
        let c = &p.clauses[0];
        assert_eq!(c.body.len(), 3);
        assert_eq!(c.body[0].predicate.as_str(), ">=");
        assert_eq!(c.body[1].predicate.as_str(), "is");
        assert_eq!(
            c.body[1].args[1],
            Term::compound("-", vec![Term::var("T"), Term::Int(1)])
        );
    }

    #[test]
    fn annotated_disjunction_with_body() {
        let p = parse_program("0.3::a; 0.7::b :- g.").unwrap();
        assert_eq!(p.ads.len(), 1);
        assert_eq!(p.ads[0].alternatives.len(), 2);
        assert_eq!(p.ads[0].body.len(), 1);
        assert!((p.ads[0].probability_sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn probabilistic_fact_is_singleton_ad() {
        let p = parse_program("0.5::coin.").unwrap();
        assert_eq!(p.ads.len(), 1);
        assert_eq!(p.ads[0].alternatives.len(), 1);
    }

    #[test]
    fn anonymous_variables_are_distinct() {
        let p = parse_program("f(_, _).").unwrap();
        let args = &p.clauses[0].head.args;
        assert_ne!(args[0], args[1]);
        // And they avoid user names.
        let p = parse_program("g(_A0, _).").unwrap();
        let args = &p.clauses[0].head.args;
        assert_eq!(args[0], Term::var("_A0"));
        assert_ne!(args[0], args[1]);
    }

    #[test]
    fn list_patterns() {
        let p = parse_program("f([X | L], [a, b]).").unwrap();
        let args = &p.clauses[0].head.args;
        assert!(matches!(args[0], Term::Cons(_, _)));
        assert_eq!(
            args[1],
            Term::list(vec![Term::constant("a"), Term::constant("b")])
        );
    }

    #[test]
    fn directive_goes_to_map() {
        let p = parse_program(":- window(5).").unwrap();
        assert_eq!(p.directives.get("window"), Some(&Term::Int(5)));
    }

    #[test]
    fn error_has_position_and_hint() {
        let err = parse_program("f(a) g.").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("1:6"), "{msg}");
        assert!(msg.contains("expected"), "{msg}");
    }

    #[test]
    fn negative_integers() {
        let p = parse_program("f(-3).").unwrap();
        assert_eq!(p.clauses[0].head.args[0], Term::Int(-3));
    }
}
