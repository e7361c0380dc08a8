//! Tokenizer for the rule language. Tracks line/column for error reporting.

use super::RuleError;

#[derive(Clone, Debug, PartialEq)]
pub enum Token {
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Dot,
    Semicolon,
    Bar,
    /// `:-`
    Neck,
    /// `::`
    DoubleColon,
    /// Infix operator: one of `>` `>=` `<` `=<` `+` `-` `*`.
    Op(&'static str),
    /// Lowercase-initial identifier (constants, functors, `is`).
    Lower(String),
    /// Uppercase- or underscore-initial identifier.
    Upper(String),
    Int(i64),
    Float(f64),
    Eof,
}

impl Token {
    pub fn describe(&self) -> String {
        match self {
            Token::LParen => "'('".into(),
            Token::RParen => "')'".into(),
            Token::LBracket => "'['".into(),
            Token::RBracket => "']'".into(),
            Token::Comma => "','".into(),
            Token::Dot => "'.'".into(),
            Token::Semicolon => "';'".into(),
            Token::Bar => "'|'".into(),
            Token::Neck => "':-'".into(),
            Token::DoubleColon => "'::'".into(),
            Token::Op(o) => format!("'{o}'"),
            Token::Lower(s) => format!("identifier '{s}'"),
            Token::Upper(s) => format!("variable '{s}'"),
            Token::Int(n) => format!("integer {n}"),
            Token::Float(x) => format!("number {x}"),
            Token::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Spanned {
    pub token: Token,
    pub line: usize,
    pub col: usize,
}

pub fn tokenize(text: &str) -> Result<Vec<Spanned>, RuleError> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    let mut line = 1;
    let mut col = 1;

    macro_rules! push {
        ($tok:expr, $l:expr, $c:expr) => {
            out.push(Spanned {
                token: $tok,
                line: $l,
                col: $c,
            })
        };
    }

    while i < bytes.len() {
        let c = bytes[i] as char;
        let (tl, tc) = (line, col);
        match c {
            ' ' | '\t' | '\r' => {
                i += 1;
                col += 1;
            }
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            '%' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            '(' => {
                push!(Token::LParen, tl, tc);
                i += 1;
                col += 1;
            }
            ')' => {
                push!(Token::RParen, tl, tc);
                i += 1;
                col += 1;
            }
            '[' => {
                push!(Token::LBracket, tl, tc);
                i += 1;
                col += 1;
            }
            ']' => {
                push!(Token::RBracket, tl, tc);
                i += 1;
                col += 1;
            }
            ',' => {
                push!(Token::Comma, tl, tc);
                i += 1;
                col += 1;
            }
            ';' => {
                push!(Token::Semicolon, tl, tc);
                i += 1;
                col += 1;
            }
            '|' => {
                push!(Token::Bar, tl, tc);
                i += 1;
                col += 1;
            }
            '.' => {
                push!(Token::Dot, tl, tc);
                i += 1;
                col += 1;
            }
            ':' => {
                if i + 1 < bytes.len() && bytes[i + 1] == b'-' {
                    push!(Token::Neck, tl, tc);
                    i += 2;
                    col += 2;
                } else if i + 1 < bytes.len() && bytes[i + 1] == b':' {
                    push!(Token::DoubleColon, tl, tc);
                    i += 2;
                    col += 2;
                } else {
                    return Err(RuleError::syntax(tl, tc, "expected ':-' or '::' after ':'"));
                }
            }
            '>' => {
                if i + 1 < bytes.len() && bytes[i + 1] == b'=' {
                    push!(Token::Op(">="), tl, tc);
                    i += 2;
                    col += 2;
                } else {
                    push!(Token::Op(">"), tl, tc);
                    i += 1;
                    col += 1;
                }
            }
            '<' => {
                push!(Token::Op("<"), tl, tc);
                i += 1;
                col += 1;
            }
            '=' => {
                if i + 1 < bytes.len() && bytes[i + 1] == b'<' {
                    push!(Token::Op("=<"), tl, tc);
                    i += 2;
                    col += 2;
                } else {
                    return Err(RuleError::syntax(tl, tc, "expected '=<' after '='"));
                }
            }
            '+' => {
                push!(Token::Op("+"), tl, tc);
                i += 1;
                col += 1;
            }
            '-' => {
                push!(Token::Op("-"), tl, tc);
                i += 1;
                col += 1;
            }
            '*' => {
                push!(Token::Op("*"), tl, tc);
                i += 1;
                col += 1;
            }
            '0'..='9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let mut is_float = false;
                // '.' continues a number only when a digit follows; otherwise
                // it terminates the item.
                if i + 1 < bytes.len() && bytes[i] == b'.' && bytes[i + 1].is_ascii_digit() {
                    is_float = true;
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        is_float = true;
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text = &text[start..i];
                col += i - start;
                if is_float {
                    let v: f64 = text
                        .parse()
                        .map_err(|_| RuleError::syntax(tl, tc, "malformed number"))?;
                    push!(Token::Float(v), tl, tc);
                } else {
                    let v: i64 = text
                        .parse()
                        .map_err(|_| RuleError::syntax(tl, tc, "integer literal out of range"))?;
                    push!(Token::Int(v), tl, tc);
                }
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                let word = &text[start..i];
                col += i - start;
                if c.is_ascii_uppercase() || c == '_' {
                    push!(Token::Upper(word.to_string()), tl, tc);
                } else {
                    push!(Token::Lower(word.to_string()), tl, tc);
                }
            }
            other => {
                return Err(RuleError::syntax(
                    tl,
                    tc,
                    &format!("unexpected character '{other}'"),
                ));
            }
        }
    }
    out.push(Spanned {
        token: Token::Eof,
        line,
        col,
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_and_clause_dot() {
        let toks = tokenize("0.5::a. f(1).").unwrap();
        assert_eq!(toks[0].token, Token::Float(0.5));
        assert_eq!(toks[1].token, Token::DoubleColon);
        assert_eq!(toks[3].token, Token::Dot);
        assert!(toks.iter().any(|t| t.token == Token::Int(1)));
    }

    #[test]
    fn comments_are_skipped() {
        let toks = tokenize("a. % trailing words :- ::\nb.").unwrap();
        let idents: Vec<_> = toks
            .iter()
            .filter_map(|t| match &t.token {
                Token::Lower(s) => Some(s.clone()),
                _ => None,
            })
            .collect();
        assert_eq!(idents, vec!["a", "b"]);
    }

    #[test]
    fn positions_track_lines() {
        let toks = tokenize("a.\n  bad(X)").unwrap();
        let bad = toks
            .iter()
            .find(|t| matches!(&t.token, Token::Lower(s) if s == "bad"))
            .unwrap();
        assert_eq!((bad.line, bad.col), (2, 3));
    }

    #[test]
    fn exponent_floats() {
        let toks = tokenize("1e-9::x.").unwrap();
        assert_eq!(toks[0].token, Token::Float(1e-9));
    }
}
