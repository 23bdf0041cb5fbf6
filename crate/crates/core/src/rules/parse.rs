//! Text form of alignment rules.
//!
//! ```text
//! rule := conj ('<->' | '->') conj
//! conj := atom ('&' atom)*
//! atom := NAME '(' term (',' term)? ')'
//! term := VAR | CONST        -- CONST only as the class of subClassOf
//! ```
//!
//! `∧`, `↔` and `→` are accepted as synonyms; `rdfs:subClassOf` is read as
//! the `subClassOf` builtin.

use super::model::{is_variable, AlignmentRule, Atom, Direction, Var, SUBCLASS_OF};
use super::RuleError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Name(String),
    LParen,
    RParen,
    Comma,
    And,
    Both,
    Forward,
    Eof,
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, RuleError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        match c {
            c if c.is_whitespace() => i += 1,
            '(' => {
                out.push((Tok::LParen, col));
                i += 1;
            }
            ')' => {
                out.push((Tok::RParen, col));
                i += 1;
            }
            ',' => {
                out.push((Tok::Comma, col));
                i += 1;
            }
            '&' | '∧' => {
                out.push((Tok::And, col));
                i += 1;
            }
            '↔' => {
                out.push((Tok::Both, col));
                i += 1;
            }
            '→' => {
                out.push((Tok::Forward, col));
                i += 1;
            }
            '<' if chars.get(i + 1) == Some(&'-') && chars.get(i + 2) == Some(&'>') => {
                out.push((Tok::Both, col));
                i += 3;
            }
            '-' if chars.get(i + 1) == Some(&'>') => {
                out.push((Tok::Forward, col));
                i += 2;
            }
            c if c.is_alphanumeric() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || matches!(chars[i], '_' | ':' | '-'))
                {
                    // '-' only continues a name when not starting an arrow.
                    if chars[i] == '-' && chars.get(i + 1) == Some(&'>') {
                        break;
                    }
                    i += 1;
                }
                out.push((Tok::Name(chars[start..i].iter().collect()), col));
            }
            other => {
                return Err(RuleError::Grammar { column: col, message: format!("unexpected character '{other}'") })
            }
        }
    }
    out.push((Tok::Eof, chars.len() + 1));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn column(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn grammar<T>(&self, message: impl Into<String>) -> Result<T, RuleError> {
        Err(RuleError::Grammar { column: self.column(), message: message.into() })
    }

    fn conjunction(&mut self, side: &'static str) -> Result<Vec<Atom>, RuleError> {
        if matches!(self.peek(), Tok::Both | Tok::Forward | Tok::Eof) {
            return Err(RuleError::EmptySide { side });
        }
        let mut atoms = vec![self.atom()?];
        while *self.peek() == Tok::And {
            self.bump();
            atoms.push(self.atom()?);
        }
        Ok(atoms)
    }

    fn atom(&mut self) -> Result<Atom, RuleError> {
        let (tok, col) = self.bump();
        let Tok::Name(name) = tok else {
            return Err(RuleError::Grammar { column: col, message: "expected predicate name".into() });
        };
        if *self.peek() != Tok::LParen {
            return self.grammar(format!("expected '(' after {name}"));
        }
        self.bump();
        let mut args: Vec<(String, usize)> = Vec::new();
        loop {
            let (tok, col) = self.bump();
            match tok {
                Tok::Name(arg) => args.push((arg, col)),
                _ => return Err(RuleError::Grammar { column: col, message: "expected argument".into() }),
            }
            match self.bump() {
                (Tok::Comma, _) => continue,
                (Tok::RParen, _) => break,
                (_, col) => {
                    return Err(RuleError::Grammar { column: col, message: "expected ',' or ')'".into() })
                }
            }
        }
        if args.len() > 2 {
            return Err(RuleError::Arity { predicate: name, arity: args.len(), column: col });
        }
        let builtin = name == SUBCLASS_OF || name == "rdfs:subClassOf";
        let var = |(arg, col): &(String, usize)| {
            if is_variable(arg) {
                Var::new(arg.clone())
            } else {
                Err(RuleError::Grammar { column: *col, message: format!("'{arg}' is not a variable") })
            }
        };
        if builtin {
            let [first, (class, ccol)] = args.as_slice() else {
                return Err(RuleError::Grammar { column: col, message: "subClassOf takes (variable, Class)".into() });
            };
            if !class.starts_with(|c: char| c.is_uppercase()) || class.contains(':') {
                return Err(RuleError::Grammar {
                    column: *ccol,
                    message: format!("subClassOf needs a class constant, found '{class}'"),
                });
            }
            return Ok(Atom::SubClassOf { var: var(first)?, class: class.clone() });
        }
        if name.contains(':') || name.contains('-') {
            return Err(RuleError::Grammar { column: col, message: format!("invalid predicate name '{name}'") });
        }
        match args.as_slice() {
            [a] => Ok(Atom::Unary { predicate: name, var: var(a)? }),
            [a, b] => Ok(Atom::Binary { predicate: name, subject: var(a)?, object: var(b)? }),
            _ => unreachable!("at least one argument was read"),
        }
    }
}

/// Parses one rule; the returned rule has an empty id.
pub fn parse_rule(text: &str) -> Result<AlignmentRule, RuleError> {
    let mut p = Parser { toks: tokenize(text)?, at: 0 };
    let lhs = p.conjunction("left")?;
    let direction = match p.bump() {
        (Tok::Both, _) => Direction::Bidirectional,
        (Tok::Forward, _) => Direction::LeftToRight,
        (_, col) => return Err(RuleError::Grammar { column: col, message: "expected '&', '<->' or '->'".into() }),
    };
    let rhs = p.conjunction("right")?;
    if *p.peek() != Tok::Eof {
        return p.grammar("trailing input after rule");
    }
    AlignmentRule::new(String::new(), direction, lhs, rhs)
}

/// Canonical text: atoms in order joined by ` & `.
pub fn serialize_rule(rule: &AlignmentRule) -> String {
    let side = |atoms: &[Atom]| atoms.iter().map(ToString::to_string).collect::<Vec<_>>().join(" & ");
    format!("{} {} {}", side(rule.lhs()), rule.direction().arrow(), side(rule.rhs()))
}
