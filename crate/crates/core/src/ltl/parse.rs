//! Infix LTL grammar.
//!
//! Precedence, tightest first: unary `!`, `X`, `G`, `F`; then `U`, `R`;
//! `&`; `|`; `->`; `<->`. `U`, `R` and `->` associate to the right, `&`,
//! `|` and `<->` to the left.

use std::collections::BTreeSet;

use super::formula::Ltl;
use super::LtlError;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    True,
    False,
    Not,
    And,
    Or,
    Implies,
    Equiv,
    Next,
    Until,
    Release,
    Globally,
    Finally,
    LParen,
    RParen,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, LtlError> {
    let mut out = Vec::new();
    for (line_idx, line) in text.lines().enumerate() {
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let line = line_idx + 1;
            let col = i + 1;
            let push = |out: &mut Vec<Spanned>, tok| out.push(Spanned { tok, line, col });
            if c.is_whitespace() {
                i += 1;
            } else if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                let tok = match word.as_str() {
                    "true" => Tok::True,
                    "false" => Tok::False,
                    "X" => Tok::Next,
                    "U" => Tok::Until,
                    "R" => Tok::Release,
                    "G" => Tok::Globally,
                    "F" => Tok::Finally,
                    _ => Tok::Ident(word),
                };
                push(&mut out, tok);
            } else {
                let rest: String = chars[i..].iter().take(3).collect();
                let (tok, len) = if rest.starts_with("<->") {
                    (Tok::Equiv, 3)
                } else if rest.starts_with("->") {
                    (Tok::Implies, 2)
                } else {
                    match c {
                        '!' => (Tok::Not, 1),
                        '&' => (Tok::And, 1),
                        '|' => (Tok::Or, 1),
                        '(' => (Tok::LParen, 1),
                        ')' => (Tok::RParen, 1),
                        _ => {
                            return Err(LtlError::Syntax {
                                line,
                                col,
                                msg: format!("unexpected character '{c}'"),
                            })
                        }
                    }
                };
                push(&mut out, tok);
                i += len;
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Spanned>,
    pos: usize,
    alphabet: Option<&'a BTreeSet<String>>,
    end: (usize, usize),
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks.get(self.pos).map(|s| (s.line, s.col)).unwrap_or(self.end)
    }

    fn error(&self, msg: impl Into<String>) -> LtlError {
        let (line, col) = self.here();
        LtlError::Syntax { line, col, msg: msg.into() }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn equiv(&mut self) -> Result<Ltl, LtlError> {
        let mut lhs = self.implies()?;
        while self.eat(&Tok::Equiv) {
            let rhs = self.implies()?;
            lhs = Ltl::equiv(lhs, rhs);
        }
        Ok(lhs)
    }

    fn implies(&mut self) -> Result<Ltl, LtlError> {
        let lhs = self.or()?;
        if self.eat(&Tok::Implies) {
            let rhs = self.implies()?;
            return Ok(Ltl::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Ltl, LtlError> {
        let mut lhs = self.and()?;
        while self.eat(&Tok::Or) {
            let rhs = self.and()?;
            lhs = Ltl::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Ltl, LtlError> {
        let mut lhs = self.binary_temporal()?;
        while self.eat(&Tok::And) {
            let rhs = self.binary_temporal()?;
            lhs = Ltl::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn binary_temporal(&mut self) -> Result<Ltl, LtlError> {
        let lhs = self.unary()?;
        if self.eat(&Tok::Until) {
            let rhs = self.binary_temporal()?;
            return Ok(Ltl::until(lhs, rhs));
        }
        if self.eat(&Tok::Release) {
            let rhs = self.binary_temporal()?;
            return Ok(Ltl::release(lhs, rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Ltl, LtlError> {
        let Some(tok) = self.peek().cloned() else {
            return Err(self.error("unexpected end of input, expected a formula"));
        };
        let wrap: fn(Ltl) -> Ltl = match tok {
            Tok::Not => Ltl::not,
            Tok::Next => Ltl::next,
            Tok::Globally => Ltl::globally,
            Tok::Finally => Ltl::finally,
            _ => return self.primary(),
        };
        self.pos += 1;
        Ok(wrap(self.unary()?))
    }

    fn primary(&mut self) -> Result<Ltl, LtlError> {
        let here = self.here();
        let Some(tok) = self.peek().cloned() else {
            return Err(self.error("unexpected end of input, expected a formula"));
        };
        self.pos += 1;
        match tok {
            Tok::True => Ok(Ltl::True),
            Tok::False => Ok(Ltl::False),
            Tok::Ident(name) => {
                if let Some(alphabet) = self.alphabet {
                    if !alphabet.contains(&name) {
                        return Err(LtlError::UnknownAtom { name, line: here.0, col: here.1 });
                    }
                }
                Ok(Ltl::Atom(name))
            }
            Tok::LParen => {
                let inner = self.equiv()?;
                if !self.eat(&Tok::RParen) {
                    return Err(self.error("expected ')'"));
                }
                Ok(inner)
            }
            other => {
                self.pos -= 1;
                Err(self.error(format!("unexpected token {other:?}, expected a formula")))
            }
        }
    }
}

/// Parses `text`. When `alphabet` is given, every atom must be a member.
pub fn parse_ltl(text: &str, alphabet: Option<&BTreeSet<String>>) -> Result<Ltl, LtlError> {
    let toks = lex(text)?;
    let last_line = text.lines().count().max(1);
    let last_col = text.lines().last().map(|l| l.chars().count() + 1).unwrap_or(1);
    let mut parser = Parser { toks, pos: 0, alphabet, end: (last_line, last_col) };
    let formula = parser.equiv()?;
    if parser.pos != parser.toks.len() {
        let tok = parser.toks[parser.pos].tok.clone();
        return Err(parser.error(format!("unexpected trailing token {tok:?}")));
    }
    Ok(formula)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Ltl {
        parse_ltl(s, None).unwrap()
    }

    #[test]
    fn response_pattern() {
        assert_eq!(
            p("G (i0 -> F o0)"),
            Ltl::globally(Ltl::implies(Ltl::atom("i0"), Ltl::finally(Ltl::atom("o0"))))
        );
    }

    #[test]
    fn mutual_exclusion() {
        assert_eq!(
            p("G ((! o0) | (! o1))"),
            Ltl::globally(Ltl::or(Ltl::not(Ltl::atom("o0")), Ltl::not(Ltl::atom("o1"))))
        );
    }

    #[test]
    fn missing_operand_is_syntax_error() {
        match parse_ltl("i0 U", None) {
            Err(LtlError::Syntax { line: 1, col: 5, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn precedence_and_associativity() {
        let a = || Ltl::atom("a");
        let b = || Ltl::atom("b");
        let c = || Ltl::atom("c");
        assert_eq!(p("a -> b -> c"), Ltl::implies(a(), Ltl::implies(b(), c())));
        assert_eq!(p("a U b U c"), Ltl::until(a(), Ltl::until(b(), c())));
        assert_eq!(p("a & b & c"), Ltl::and(Ltl::and(a(), b()), c()));
        assert_eq!(p("a | b & c"), Ltl::or(a(), Ltl::and(b(), c())));
        assert_eq!(p("!a U b"), Ltl::until(Ltl::not(a()), b()));
        assert_eq!(p("a & b U c"), Ltl::and(a(), Ltl::until(b(), c())));
        assert_eq!(p("a <-> b -> c"), Ltl::equiv(a(), Ltl::implies(b(), c())));
        assert_eq!(p("G F a"), Ltl::globally(Ltl::finally(a())));
    }

    #[test]
    fn unknown_atom_with_alphabet() {
        let alphabet: BTreeSet<String> = ["i0".to_string()].into();
        assert!(parse_ltl("G i0", Some(&alphabet)).is_ok());
        assert!(matches!(
            parse_ltl("G o7", Some(&alphabet)),
            Err(LtlError::UnknownAtom { .. })
        ));
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_ltl("", None).is_err());
        assert!(parse_ltl("a b", None).is_err());
        assert!(parse_ltl("(a", None).is_err());
        assert!(parse_ltl("a $ b", None).is_err());
    }
}
