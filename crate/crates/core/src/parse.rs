//! Formula parser for the ASCII grammar.
//!
//! Atoms are identifiers, `true`, `false`, `eps`; unary `!`, `X`, `F`, `G`;
//! postfix `*`; binary `.`, `+`, `&`, `|`, `U`, `->`, `<->`; triggers are
//! written `{REGEX} |-> FORMULA`. Precedence, tight to loose:
//! `*`/`!`/`X`/`F`/`G`, `.`, `+`, `&`, `|`, `U`, `->`, `<->`, `|->`.

use crate::error::{Error, Result};
use crate::formula::Formula;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    True,
    False,
    Eps,
    Bang,
    Star,
    Plus,
    Dot,
    Amp,
    Pipe,
    Arrow,
    DArrow,
    MapsTo,
    Next,
    Finally,
    Globally,
    Until,
    LParen,
    RParen,
    LBrace,
    RBrace,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(input: &str) -> Result<Vec<Spanned>> {
    let mut out = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let bytes: Vec<char> = input.chars().collect();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let (l, co) = (line, col);
        let advance = |n: usize, col: &mut usize, i: &mut usize| {
            *col += n;
            *i += n;
        };
        match c {
            '\n' => {
                line += 1;
                col = 1;
                i += 1;
            }
            c if c.is_whitespace() => advance(1, &mut col, &mut i),
            '!' => {
                out.push(Spanned { tok: Tok::Bang, line: l, col: co });
                advance(1, &mut col, &mut i);
            }
            '*' => {
                out.push(Spanned { tok: Tok::Star, line: l, col: co });
                advance(1, &mut col, &mut i);
            }
            '+' => {
                out.push(Spanned { tok: Tok::Plus, line: l, col: co });
                advance(1, &mut col, &mut i);
            }
            '.' => {
                out.push(Spanned { tok: Tok::Dot, line: l, col: co });
                advance(1, &mut col, &mut i);
            }
            '&' => {
                out.push(Spanned { tok: Tok::Amp, line: l, col: co });
                advance(1, &mut col, &mut i);
            }
            '(' => {
                out.push(Spanned { tok: Tok::LParen, line: l, col: co });
                advance(1, &mut col, &mut i);
            }
            ')' => {
                out.push(Spanned { tok: Tok::RParen, line: l, col: co });
                advance(1, &mut col, &mut i);
            }
            '{' => {
                out.push(Spanned { tok: Tok::LBrace, line: l, col: co });
                advance(1, &mut col, &mut i);
            }
            '}' => {
                out.push(Spanned { tok: Tok::RBrace, line: l, col: co });
                advance(1, &mut col, &mut i);
            }
            '|' => {
                if bytes[i + 1..].starts_with(&['-', '>']) {
                    out.push(Spanned { tok: Tok::MapsTo, line: l, col: co });
                    advance(3, &mut col, &mut i);
                } else {
                    out.push(Spanned { tok: Tok::Pipe, line: l, col: co });
                    advance(1, &mut col, &mut i);
                }
            }
            '-' => {
                if bytes.get(i + 1) == Some(&'>') {
                    out.push(Spanned { tok: Tok::Arrow, line: l, col: co });
                    advance(2, &mut col, &mut i);
                } else {
                    return Err(Error::Syntax { line: l, col: co, msg: "expected `->`".into() });
                }
            }
            '<' => {
                if bytes[i + 1..].starts_with(&['-', '>']) {
                    out.push(Spanned { tok: Tok::DArrow, line: l, col: co });
                    advance(3, &mut col, &mut i);
                } else {
                    return Err(Error::Syntax { line: l, col: co, msg: "expected `<->`".into() });
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == '_') {
                    i += 1;
                }
                let word: String = bytes[start..i].iter().collect();
                col += i - start;
                let tok = match word.as_str() {
                    "true" => Tok::True,
                    "false" => Tok::False,
                    "eps" => Tok::Eps,
                    "X" => Tok::Next,
                    "F" => Tok::Finally,
                    "G" => Tok::Globally,
                    "U" => Tok::Until,
                    _ => Tok::Ident(word),
                };
                out.push(Spanned { tok, line: l, col: co });
            }
            other => {
                return Err(Error::Syntax {
                    line: l,
                    col: co,
                    msg: format!("unexpected character `{other}`"),
                });
            }
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn next(&mut self) -> Option<Spanned> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn err_here(&self, msg: impl Into<String>) -> Error {
        let (line, col) = self
            .toks
            .get(self.pos.min(self.toks.len().saturating_sub(1)))
            .map(|s| (s.line, s.col))
            .unwrap_or((1, 1));
        Error::Syntax { line, col, msg: msg.into() }
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
        match self.next() {
            Some(s) if s.tok == want => Ok(()),
            Some(s) => Err(Error::Syntax {
                line: s.line,
                col: s.col,
                msg: format!("expected {what}, found {:?}", s.tok),
            }),
            None => Err(self.err_here(format!("expected {what}, found end of input"))),
        }
    }

    // binding powers; (left, right): right-associative ops use equal powers
    fn binary_power(tok: &Tok) -> Option<(u8, u8)> {
        Some(match tok {
            Tok::Dot => (80, 81),
            Tok::Plus => (70, 71),
            Tok::Amp => (60, 61),
            Tok::Pipe => (50, 51),
            Tok::Until => (40, 40),
            Tok::Arrow => (30, 30),
            Tok::DArrow => (20, 20),
            Tok::MapsTo => (10, 10),
            _ => return None,
        })
    }

    fn parse_expr(&mut self, min_bp: u8) -> Result<Formula> {
        let mut lhs = self.parse_unary()?;
        while let Some(op) = self.peek() {
            let Some((l_bp, r_bp)) = Self::binary_power(op) else { break };
            if l_bp < min_bp {
                break;
            }
            let op = self.next().unwrap().tok;
            let rhs = self.parse_expr(r_bp)?;
            lhs = match op {
                Tok::Dot => Formula::concat(lhs, rhs),
                Tok::Plus => Formula::choice(lhs, rhs),
                Tok::Amp => Formula::and(lhs, rhs),
                Tok::Pipe => Formula::or(lhs, rhs),
                Tok::Until => Formula::until(lhs, rhs),
                Tok::Arrow => Formula::implies(lhs, rhs),
                Tok::DArrow => Formula::iff(lhs, rhs),
                Tok::MapsTo => Formula::triggers(lhs, rhs),
                _ => unreachable!(),
            };
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> Result<Formula> {
        match self.peek() {
            Some(Tok::Bang) => {
                self.next();
                Ok(Formula::not(self.parse_unary()?))
            }
            Some(Tok::Next) => {
                self.next();
                Ok(Formula::next(self.parse_unary()?))
            }
            Some(Tok::Finally) => {
                self.next();
                Ok(Formula::finally(self.parse_unary()?))
            }
            Some(Tok::Globally) => {
                self.next();
                Ok(Formula::globally(self.parse_unary()?))
            }
            _ => {
                let mut f = self.parse_primary()?;
                while self.peek() == Some(&Tok::Star) {
                    self.next();
                    f = Formula::star(f);
                }
                Ok(f)
            }
        }
    }

    fn parse_primary(&mut self) -> Result<Formula> {
        match self.next() {
            Some(Spanned { tok: Tok::Ident(name), .. }) => Ok(Formula::prop(name)),
            Some(Spanned { tok: Tok::True, .. }) => Ok(Formula::tt()),
            Some(Spanned { tok: Tok::False, .. }) => Ok(Formula::ff()),
            Some(Spanned { tok: Tok::Eps, .. }) => Ok(Formula::eps()),
            Some(Spanned { tok: Tok::LParen, .. }) => {
                let f = self.parse_expr(0)?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            Some(Spanned { tok: Tok::LBrace, .. }) => {
                let f = self.parse_expr(0)?;
                self.expect(Tok::RBrace, "`}`")?;
                Ok(f)
            }
            Some(s) => Err(Error::Syntax {
                line: s.line,
                col: s.col,
                msg: format!("expected a formula, found {:?}", s.tok),
            }),
            None => Err(self.err_here("unexpected end of input")),
        }
    }
}

/// Parses a formula from text. Typing is not checked here; use
/// [`Formula::typecheck`] for the context rules.
pub fn parse_formula(text: &str) -> Result<Formula> {
    let toks = lex(text)?;
    if toks.is_empty() {
        return Err(Error::Syntax { line: 1, col: 1, msg: "empty formula".into() });
    }
    let mut p = Parser { toks, pos: 0 };
    let f = p.parse_expr(0)?;
    if let Some(s) = p.next() {
        return Err(Error::Syntax {
            line: s.line,
            col: s.col,
            msg: format!("unexpected trailing {:?}", s.tok),
        });
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::TypeCtx;

    #[test]
    fn parse_triggers() {
        let f = parse_formula("{(p . p)*} |-> X p").unwrap();
        assert_eq!(
            f,
            Formula::triggers(
                Formula::star(Formula::concat(Formula::prop("p"), Formula::prop("p"))),
                Formula::next(Formula::prop("p")),
            )
        );
        assert!(f.typecheck(TypeCtx::Psl).is_ok());
    }

    #[test]
    fn parse_until_over_disjunction() {
        let f = parse_formula("p U (q | !p)").unwrap();
        assert_eq!(
            f,
            Formula::until(
                Formula::prop("p"),
                Formula::or(Formula::prop("q"), Formula::not(Formula::prop("p"))),
            )
        );
    }

    #[test]
    fn until_in_regex_is_type_error_not_parse_error() {
        let f = parse_formula("{p U q} |-> p").unwrap();
        assert!(f.typecheck(TypeCtx::Psl).is_err());
    }

    #[test]
    fn precedence() {
        assert_eq!(
            parse_formula("p . q + r").unwrap(),
            Formula::choice(Formula::concat(Formula::prop("p"), Formula::prop("q")), Formula::prop("r"))
        );
        assert_eq!(
            parse_formula("!p*").unwrap(),
            Formula::not(Formula::star(Formula::prop("p")))
        );
        assert_eq!(
            parse_formula("p -> q -> r").unwrap(),
            Formula::implies(Formula::prop("p"), Formula::implies(Formula::prop("q"), Formula::prop("r")))
        );
        assert_eq!(
            parse_formula("p & q | r").unwrap(),
            Formula::or(Formula::and(Formula::prop("p"), Formula::prop("q")), Formula::prop("r"))
        );
    }

    #[test]
    fn syntax_error_has_position() {
        match parse_formula("p U ) q") {
            Err(Error::Syntax { line: 1, col, .. }) => assert_eq!(col, 5),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn reserved_words() {
        assert!(parse_formula("true | false").is_ok());
        assert!(parse_formula("eps").is_ok());
        // X alone is an operator, not a proposition
        assert!(parse_formula("X").is_err());
    }
}
