//! Recursive-descent parser for policy text.
//!
//! ```text
//! expr    := term ( ("or" | "|") term )*
//! term    := factor ( ("and" | "&") factor )*
//! factor  := ("not" | "!") factor | IDENT | "(" expr ")"
//! ```

use std::fmt;

use super::{is_identifier, PolicyExpr, Universe};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnexpectedChar(char),
    Unexpected { found: String, expected: &'static str },
    UnexpectedEnd { expected: &'static str },
    UnknownIdentifier(String),
}

/// Parse failure with the character offset it occurred at.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub position: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ParseErrorKind::UnexpectedChar(c) => {
                write!(f, "syntax error at position {}: unexpected character {c:?}", self.position)
            }
            ParseErrorKind::Unexpected { found, expected } => write!(
                f,
                "syntax error at position {}: expected {expected}, found {found:?}",
                self.position
            ),
            ParseErrorKind::UnexpectedEnd { expected } => write!(
                f,
                "syntax error at position {}: expected {expected}, found end of input",
                self.position
            ),
            ParseErrorKind::UnknownIdentifier(name) => {
                write!(f, "unknown holder {name:?} at position {}", self.position)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    And,
    Or,
    Not,
    LParen,
    RParen,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => s.clone(),
            Tok::And => "and".into(),
            Tok::Or => "or".into(),
            Tok::Not => "not".into(),
            Tok::LParen => "(".into(),
            Tok::RParen => ")".into(),
        }
    }
}

fn lex(text: &str) -> Result<(Vec<(usize, Tok)>, usize), ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let tok = match c {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '&' => Tok::And,
            '|' => Tok::Or,
            '!' => Tok::Not,
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                let tok = match word.as_str() {
                    "and" => Tok::And,
                    "or" => Tok::Or,
                    "not" => Tok::Not,
                    _ => Tok::Ident(word),
                };
                tokens.push((start, tok));
                continue;
            }
            other => {
                return Err(ParseError {
                    position: i,
                    kind: ParseErrorKind::UnexpectedChar(other),
                })
            }
        };
        tokens.push((i, tok));
        i += 1;
    }
    Ok((tokens, chars.len()))
}

struct Parser<'a> {
    tokens: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    universe: &'a Universe,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn error(&self, expected: &'static str) -> ParseError {
        match self.tokens.get(self.pos) {
            Some((at, tok)) => ParseError {
                position: *at,
                kind: ParseErrorKind::Unexpected {
                    found: tok.describe(),
                    expected,
                },
            },
            None => ParseError {
                position: self.end,
                kind: ParseErrorKind::UnexpectedEnd { expected },
            },
        }
    }

    fn expr(&mut self) -> Result<PolicyExpr, ParseError> {
        let mut operands = vec![self.term()?];
        while self.peek() == Some(&Tok::Or) {
            self.pos += 1;
            operands.push(self.term()?);
        }
        Ok(PolicyExpr::or(operands))
    }

    fn term(&mut self) -> Result<PolicyExpr, ParseError> {
        let mut operands = vec![self.factor()?];
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            operands.push(self.factor()?);
        }
        Ok(PolicyExpr::and(operands))
    }

    fn factor(&mut self) -> Result<PolicyExpr, ParseError> {
        const EXPECTED: &str = "holder name, 'not' or '('";
        let Some((at, tok)) = self.tokens.get(self.pos).cloned() else {
            return Err(self.error(EXPECTED));
        };
        match tok {
            Tok::Not => {
                self.pos += 1;
                Ok(PolicyExpr::not(self.factor()?))
            }
            Tok::Ident(name) => {
                if self.universe.index_of(&name).is_none() {
                    return Err(ParseError {
                        position: at,
                        kind: ParseErrorKind::UnknownIdentifier(name),
                    });
                }
                self.pos += 1;
                Ok(PolicyExpr::Var(name))
            }
            Tok::LParen => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(&Tok::RParen) {
                    return Err(self.error("')'"));
                }
                self.pos += 1;
                Ok(inner)
            }
            _ => Err(self.error(EXPECTED)),
        }
    }
}

/// Parses policy text over `universe`. `and`/`&`, `or`/`|` and `not`/`!`
/// bind in the order not, and, or; chains of the same operator become one
/// n-ary node.
pub fn parse(text: &str, universe: &Universe) -> Result<PolicyExpr, ParseError> {
    let (tokens, end) = lex(text)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        end,
        universe,
    };
    let expr = parser.expr()?;
    if parser.pos < parser.tokens.len() {
        return Err(parser.error("'and', 'or' or end of input"));
    }
    debug_assert!(expr.variables().iter().all(|v| is_identifier(v)));
    Ok(expr)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(name: &str) -> PolicyExpr {
        PolicyExpr::var(name)
    }

    #[test]
    fn airplane_policy_shape() {
        let u = Universe::from_list("A,B,C,D,E").unwrap();
        let expr = parse("(A and B) or ((A or B) and (C or D or E))", &u).unwrap();
        assert_eq!(
            expr,
            PolicyExpr::Or(vec![
                PolicyExpr::And(vec![v("A"), v("B")]),
                PolicyExpr::And(vec![
                    PolicyExpr::Or(vec![v("A"), v("B")]),
                    PolicyExpr::Or(vec![v("C"), v("D"), v("E")]),
                ]),
            ])
        );
    }

    #[test]
    fn three_holder_policy_shape() {
        let u = Universe::from_list("A1,A2,A3").unwrap();
        let expr = parse("(A1 and A2) or (A1 and A3)", &u).unwrap();
        assert_eq!(
            expr,
            PolicyExpr::Or(vec![
                PolicyExpr::And(vec![v("A1"), v("A2")]),
                PolicyExpr::And(vec![v("A1"), v("A3")]),
            ])
        );
    }

    #[test]
    fn precedence_and_symbols() {
        let u = Universe::from_list("A,B,C").unwrap();
        assert_eq!(
            parse("A | B & !C", &u).unwrap(),
            PolicyExpr::Or(vec![
                v("A"),
                PolicyExpr::And(vec![v("B"), PolicyExpr::not(v("C"))])
            ])
        );
        assert_eq!(
            parse("A and B and C", &u).unwrap(),
            PolicyExpr::And(vec![v("A"), v("B"), v("C")])
        );
        assert_eq!(
            parse("(A and B) and C", &u).unwrap(),
            parse("A and (B and C)", &u).unwrap()
        );
        assert_eq!(parse("((A))", &u).unwrap(), v("A"));
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let u = Universe::from_list("A,B").unwrap();
        let err = parse("A and", &u).unwrap_err();
        assert_eq!(err.position, 5);
        assert!(matches!(err.kind, ParseErrorKind::UnexpectedEnd { .. }));
        assert!(err.to_string().contains("end of input"));

        let err = parse("A B", &u).unwrap_err();
        assert_eq!(err.position, 2);

        let err = parse("(A or B", &u).unwrap_err();
        assert_eq!(err.position, 7);

        let err = parse("A # B", &u).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnexpectedChar('#'));

        let err = parse("", &u).unwrap_err();
        assert_eq!(err.position, 0);

        let err = parse("A and )", &u).unwrap_err();
        assert_eq!(err.position, 6);
    }

    #[test]
    fn unknown_identifier() {
        let u = Universe::from_list("A,B").unwrap();
        let err = parse("A or Z", &u).unwrap_err();
        assert_eq!(err.position, 5);
        assert_eq!(err.kind, ParseErrorKind::UnknownIdentifier("Z".into()));
    }
}
