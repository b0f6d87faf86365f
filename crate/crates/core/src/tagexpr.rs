//! Boolean tag expressions used to personalize a reel.
//!
//! ```text
//! expr := term (OR term)*
//! term := atom (AND atom)*
//! atom := [category ":"] label | "(" expr ")"
//! ```
//!
//! Keywords are case-insensitive; categories and labels are lowercased.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("tag expression error at position {position}: {message}")]
pub struct ExprParseError {
    pub position: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TagExpr {
    Atom { category: Option<String>, label: String },
    And(Vec<TagExpr>),
    Or(Vec<TagExpr>),
}

impl TagExpr {
    pub fn parse(input: &str) -> Result<Self, ExprParseError> {
        let tokens = lex(input)?;
        let mut parser = Parser {
            tokens: &tokens,
            pos: 0,
            end: input.len(),
        };
        let expr = parser.expr()?;
        if let Some(tok) = parser.peek() {
            return Err(parser.error_at(tok.offset, format!("unexpected {}", tok.kind)));
        }
        Ok(expr)
    }

    /// Evaluates the expression, deciding atoms with `atom`.
    pub fn eval(&self, atom: &mut impl FnMut(Option<&str>, &str) -> bool) -> bool {
        match self {
            Self::Atom { category, label } => atom(category.as_deref(), label),
            Self::And(items) => items.iter().all(|e| e.eval(atom)),
            Self::Or(items) => items.iter().any(|e| e.eval(atom)),
        }
    }
}

impl fmt::Display for TagExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |f: &mut fmt::Formatter<'_>, items: &[TagExpr], op: &str| {
            write!(f, "(")?;
            for (i, e) in items.iter().enumerate() {
                if i > 0 {
                    write!(f, " {op} ")?;
                }
                write!(f, "{e}")?;
            }
            write!(f, ")")
        };
        match self {
            Self::Atom { category: Some(c), label } => write!(f, "{c}:{label}"),
            Self::Atom { category: None, label } => write!(f, "{label}"),
            Self::And(items) => join(f, items, "AND"),
            Self::Or(items) => join(f, items, "OR"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Open,
    Close,
    And,
    Or,
    Word(String),
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kind::Open => write!(f, "`(`"),
            Kind::Close => write!(f, "`)`"),
            Kind::And => write!(f, "AND"),
            Kind::Or => write!(f, "OR"),
            Kind::Word(w) => write!(f, "`{w}`"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: Kind,
    offset: usize,
}

fn lex(input: &str) -> Result<Vec<Token>, ExprParseError> {
    let mut tokens = Vec::new();
    let mut chars = input.char_indices().peekable();
    while let Some(&(offset, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        if c == '(' || c == ')' {
            chars.next();
            let kind = if c == '(' { Kind::Open } else { Kind::Close };
            tokens.push(Token { kind, offset });
            continue;
        }
        let mut word = String::new();
        while let Some(&(_, c)) = chars.peek() {
            if c.is_whitespace() || c == '(' || c == ')' {
                break;
            }
            word.push(c);
            chars.next();
        }
        let kind = match word.to_ascii_lowercase().as_str() {
            "and" => Kind::And,
            "or" => Kind::Or,
            _ => Kind::Word(word),
        };
        tokens.push(Token { kind, offset });
    }
    Ok(tokens)
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn error_at(&self, position: usize, message: impl Into<String>) -> ExprParseError {
        ExprParseError {
            position,
            message: message.into(),
        }
    }

    fn expr(&mut self) -> Result<TagExpr, ExprParseError> {
        let mut terms = vec![self.term()?];
        while matches!(self.peek(), Some(Token { kind: Kind::Or, .. })) {
            self.pos += 1;
            terms.push(self.term()?);
        }
        Ok(if terms.len() == 1 { terms.pop().unwrap() } else { TagExpr::Or(terms) })
    }

    fn term(&mut self) -> Result<TagExpr, ExprParseError> {
        let mut atoms = vec![self.atom()?];
        while matches!(self.peek(), Some(Token { kind: Kind::And, .. })) {
            self.pos += 1;
            atoms.push(self.atom()?);
        }
        Ok(if atoms.len() == 1 { atoms.pop().unwrap() } else { TagExpr::And(atoms) })
    }

    fn atom(&mut self) -> Result<TagExpr, ExprParseError> {
        let Some(tok) = self.peek().cloned() else {
            return Err(self.error_at(self.end, "expected a tag or `(`"));
        };
        self.pos += 1;
        match tok.kind {
            Kind::Open => {
                let inner = self.expr()?;
                match self.peek() {
                    Some(Token { kind: Kind::Close, .. }) => {
                        self.pos += 1;
                        Ok(inner)
                    }
                    Some(t) => Err(self.error_at(t.offset, format!("expected `)`, found {}", t.kind))),
                    None => Err(self.error_at(self.end, "unclosed `(`")),
                }
            }
            Kind::Word(word) => parse_atom(&word, tok.offset),
            other => Err(self.error_at(tok.offset, format!("expected a tag, found {other}"))),
        }
    }
}

fn parse_atom(word: &str, offset: usize) -> Result<TagExpr, ExprParseError> {
    let (category, label) = match word.split_once(':') {
        Some((c, l)) => {
            if c.is_empty() {
                return Err(ExprParseError {
                    position: offset,
                    message: "empty category before `:`".into(),
                });
            }
            (Some(c.to_lowercase()), l)
        }
        None => (None, word),
    };
    if label.is_empty() {
        return Err(ExprParseError {
            position: offset + word.len(),
            message: "empty tag label".into(),
        });
    }
    Ok(TagExpr::Atom {
        category,
        label: label.to_lowercase(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atom(c: Option<&str>, l: &str) -> TagExpr {
        TagExpr::Atom {
            category: c.map(str::to_string),
            label: l.into(),
        }
    }

    #[test]
    fn and_binds_tighter_than_or() {
        let e = TagExpr::parse("actor:Warren and emotion:anger OR theme:economy").unwrap();
        assert_eq!(
            e,
            TagExpr::Or(vec![
                TagExpr::And(vec![atom(Some("actor"), "warren"), atom(Some("emotion"), "anger")]),
                atom(Some("theme"), "economy"),
            ])
        );
    }

    #[test]
    fn parentheses_group() {
        let e = TagExpr::parse("(a OR b) AND c").unwrap();
        assert_eq!(e.to_string(), "((a OR b) AND c)");
        let e = TagExpr::parse("(a)").unwrap();
        assert_eq!(e, atom(None, "a"));
    }

    #[test]
    fn errors_carry_positions() {
        assert_eq!(TagExpr::parse("").unwrap_err().position, 0);
        assert_eq!(TagExpr::parse("actor:x AND").unwrap_err().position, 11);
        assert_eq!(TagExpr::parse("(a OR b").unwrap_err().position, 7);
        assert_eq!(TagExpr::parse("a b").unwrap_err().position, 2);
        assert_eq!(TagExpr::parse(":x").unwrap_err().position, 0);
        assert_eq!(TagExpr::parse("actor:").unwrap_err().position, 6);
        assert_eq!(TagExpr::parse("a ) b").unwrap_err().position, 2);
    }
}
