//! Reads the textual form produced by [`CanonicalExplanation::render`].

use super::canonical::{Connective, Literal, Part};
use super::{CanonicalExplanation, FormulaError};

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Ident(String),
    Open,
    Close,
    Op(Connective),
    Not,
}

fn tokenize(text: &str) -> Result<Vec<Token>, String> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            ' ' | '\t' => {
                chars.next();
            }
            '(' => {
                chars.next();
                out.push(Token::Open);
            }
            ')' => {
                chars.next();
                out.push(Token::Close);
            }
            '&' => {
                chars.next();
                out.push(Token::Op(Connective::And));
            }
            '|' => {
                chars.next();
                out.push(Token::Op(Connective::Or));
            }
            '!' => {
                chars.next();
                out.push(Token::Not);
            }
            c if c.is_ascii_alphanumeric() || c == '_' => {
                let mut ident = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        ident.push(c);
                        chars.next();
                    } else {
                        break;
                    }
                }
                out.push(Token::Ident(ident));
            }
            other => return Err(format!("unexpected character `{other}`")),
        }
    }
    Ok(out)
}

enum Item {
    Bare(Literal),
    Group(Vec<Literal>, Option<Connective>),
}

struct Parser<'a, S> {
    tokens: Vec<Token>,
    pos: usize,
    names: &'a [S],
}

impl<S: AsRef<str>> Parser<'_, S> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Token) -> Result<(), String> {
        match self.next() {
            Some(t) if t == want => Ok(()),
            other => Err(format!("expected {want:?}, found {other:?}")),
        }
    }

    fn literal(&mut self) -> Result<Literal, String> {
        let negated = if self.peek() == Some(&Token::Not) {
            self.next();
            true
        } else {
            false
        };
        match self.next() {
            Some(Token::Ident(name)) => self
                .names
                .iter()
                .position(|n| n.as_ref() == name)
                .map(|p| Literal::new(p, negated))
                .ok_or_else(|| format!("unknown predicate `{name}`")),
            other => Err(format!("expected a predicate, found {other:?}")),
        }
    }

    /// Literals joined by a single repeated connective.
    fn chain(&mut self) -> Result<(Vec<Literal>, Option<Connective>), String> {
        let mut lits = vec![self.literal()?];
        let mut conn = None;
        while let Some(Token::Op(c)) = self.peek().cloned() {
            // An operator followed by `(` belongs to the enclosing level.
            if self.tokens.get(self.pos + 1) == Some(&Token::Open) {
                break;
            }
            if conn.is_some_and(|k| k != c) {
                return Err("mixed connectives without parentheses".into());
            }
            conn = Some(c);
            self.next();
            lits.push(self.literal()?);
        }
        Ok((lits, conn))
    }

    fn item(&mut self) -> Result<Item, String> {
        if self.peek() == Some(&Token::Open) {
            self.next();
            let (lits, conn) = self.chain()?;
            self.expect(Token::Close)?;
            Ok(Item::Group(lits, conn))
        } else {
            let (mut lits, conn) = self.chain()?;
            if lits.len() == 1 {
                Ok(Item::Bare(lits.pop().unwrap()))
            } else {
                Ok(Item::Group(lits, conn))
            }
        }
    }

    fn part(&mut self) -> Result<Part, String> {
        let first = self.item()?;
        let outer = match self.peek() {
            Some(Token::Op(c)) => {
                let c = *c;
                self.next();
                Some(c)
            }
            _ => None,
        };
        let Some(outer) = outer else {
            return Ok(match first {
                Item::Bare(l) => Part::Literal(l),
                Item::Group(lits, conn) => single_clause(lits, conn),
            });
        };
        let second = self.item()?;
        if let Some(Token::Op(_)) = self.peek() {
            return Err("at most two clauses per temporal part".into());
        }
        let unwrap = |item: Item| -> Result<Vec<Literal>, String> {
            match item {
                Item::Bare(l) => Ok(vec![l]),
                Item::Group(_, Some(c)) if c != outer.dual() => Err(format!(
                    "clause connective {c:?} must be the dual of the outer connective {outer:?}"
                )),
                Item::Group(lits, _) => Ok(lits),
            }
        };
        Ok(Part::from_clauses(unwrap(first)?, unwrap(second)?, outer == Connective::Or))
    }
}

fn single_clause(lits: Vec<Literal>, conn: Option<Connective>) -> Part {
    // A lone disjunction is a one-clause CNF, a lone conjunction a one-clause DNF.
    Part::from_clauses(lits, Vec::new(), conn == Some(Connective::And))
}

/// Parses `F(...) & G(...)` using `names` for predicate lookup.
pub fn parse_explanation(
    text: &str,
    names: &[impl AsRef<str>],
) -> Result<CanonicalExplanation, FormulaError> {
    let err = |reason: String| FormulaError::Parse {
        text: text.to_string(),
        reason,
    };
    let tokens = tokenize(text).map_err(err)?;
    let mut p = Parser { tokens, pos: 0, names };
    let mut run = || -> Result<CanonicalExplanation, String> {
        p.expect(Token::Ident("F".into()))?;
        p.expect(Token::Open)?;
        let eventually = p.part()?;
        p.expect(Token::Close)?;
        p.expect(Token::Op(Connective::And))?;
        p.expect(Token::Ident("G".into()))?;
        p.expect(Token::Open)?;
        let globally = p.part()?;
        p.expect(Token::Close)?;
        if p.pos != p.tokens.len() {
            return Err("trailing input".into());
        }
        Ok(CanonicalExplanation { eventually, globally })
    };
    let c = run().map_err(err)?;
    c.encode(names.len()).map_err(|e| err(e.to_string()))?;
    Ok(c)
}
