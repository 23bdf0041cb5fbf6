//! Turtle reader for the subset used by OWL ontology serializations.
//!
//! Supported: `@prefix`/`PREFIX`, a single `@base`/`BASE`, IRIs, prefixed
//! names, labeled and anonymous blank nodes, predicate-object lists, object
//! lists, collections, string literals (short and long forms) with language
//! tags or datatypes, numeric and boolean literals, and the `a` keyword.
//! Named graphs and quoted triples are rejected with
//! [`ParseErrorKind::Unsupported`].
//!
//! Short string literals may contain raw line breaks. Hand-wrapped snippets
//! copied out of documentation do this and strict Turtle would reject them.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use super::graph::OntologyGraph;
use super::term::{BlankNode, Iri, Literal, Term, Triple};
use super::vocab;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax,
    UnresolvedPrefix,
    Unsupported,
}

impl ParseErrorKind {
    pub fn category(self) -> &'static str {
        match self {
            ParseErrorKind::Syntax => "syntax-error",
            ParseErrorKind::UnresolvedPrefix => "unresolved-prefix",
            ParseErrorKind::Unsupported => "unsupported-construct",
        }
    }
}

/// Rendered as `file:line:col: category: message`.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub source_name: String,
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}:{}: {}: {}",
            self.source_name,
            self.line,
            self.column,
            self.kind.category(),
            self.message
        )
    }
}

/// Parses `text` into a graph named `source_name`.
pub fn parse_turtle(text: &str, source_name: &str) -> Result<OntologyGraph, ParseError> {
    let mut parser = Parser::new(text, source_name);
    parser.document()?;
    Ok(OntologyGraph::from_parts(source_name, parser.triples, parser.prefixes))
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    IriRef(String),
    PName(String, String),
    BlankLabel(String),
    Str(String),
    LangTag(String),
    DoubleCaret,
    Number(String, &'static str),
    Dot,
    Semicolon,
    Comma,
    LBracket,
    RBracket,
    LParen,
    RParen,
    AtPrefix,
    AtBase,
    SparqlPrefix,
    SparqlBase,
    A,
    Bool(bool),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::IriRef(s) => format!("<{s}>"),
            Tok::PName(p, l) => format!("{p}:{l}"),
            Tok::BlankLabel(l) => format!("_:{l}"),
            Tok::Str(_) => "string literal".into(),
            Tok::LangTag(l) => format!("@{l}"),
            Tok::DoubleCaret => "'^^'".into(),
            Tok::Number(n, _) => n.clone(),
            Tok::Dot => "'.'".into(),
            Tok::Semicolon => "';'".into(),
            Tok::Comma => "','".into(),
            Tok::LBracket => "'['".into(),
            Tok::RBracket => "']'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::AtPrefix => "@prefix".into(),
            Tok::AtBase => "@base".into(),
            Tok::SparqlPrefix => "PREFIX".into(),
            Tok::SparqlBase => "BASE".into(),
            Tok::A => "'a'".into(),
            Tok::Bool(b) => b.to_string(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Pos {
    line: usize,
    column: usize,
}

struct Lexer<'a> {
    src: &'a str,
    offset: usize,
    line: usize,
    column: usize,
    after_string: bool,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Self { src, offset: 0, line: 1, column: 1, after_string: false }
    }

    fn pos(&self) -> Pos {
        Pos { line: self.line, column: self.column }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.offset..].chars().next()
    }

    fn peek_nth(&self, n: usize) -> Option<char> {
        self.src[self.offset..].chars().nth(n)
    }

    fn starts_with(&self, s: &str) -> bool {
        self.src[self.offset..].starts_with(s)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.offset += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == '#' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn next(&mut self) -> Result<(Tok, Pos), (Pos, ParseErrorKind, String)> {
        self.skip_trivia();
        let start = self.pos();
        let after_string = std::mem::replace(&mut self.after_string, false);
        let err = |kind, msg: String| Err((start, kind, msg));
        let Some(c) = self.peek() else {
            return Ok((Tok::Eof, start));
        };
        let tok = match c {
            '<' if self.starts_with("<<") => {
                return err(ParseErrorKind::Unsupported, "quoted triples ('<<') are not supported".into())
            }
            '{' | '}' => {
                return err(ParseErrorKind::Unsupported, "named graphs ('{ ... }') are not supported".into())
            }
            '<' => {
                self.bump();
                let mut iri = String::new();
                loop {
                    match self.bump() {
                        None => return err(ParseErrorKind::Syntax, "unterminated IRI".into()),
                        Some('>') => break,
                        Some('\\') => match self.read_unicode_escape() {
                            Some(ch) => iri.push(ch),
                            None => return err(ParseErrorKind::Syntax, "bad escape in IRI".into()),
                        },
                        Some(ch) if ch.is_whitespace() => {
                            return err(ParseErrorKind::Syntax, "whitespace in IRI".into())
                        }
                        Some(ch) => iri.push(ch),
                    }
                }
                Tok::IriRef(iri)
            }
            '"' | '\'' => {
                let s = self.read_string(c).map_err(|m| (start, ParseErrorKind::Syntax, m))?;
                self.after_string = true;
                Tok::Str(s)
            }
            '@' => {
                self.bump();
                let word = self.read_while(|c| c.is_ascii_alphanumeric() || c == '-');
                if after_string {
                    if word.is_empty() {
                        return err(ParseErrorKind::Syntax, "empty language tag".into());
                    }
                    Tok::LangTag(word)
                } else {
                    match word.as_str() {
                        "prefix" => Tok::AtPrefix,
                        "base" => Tok::AtBase,
                        _ => return err(ParseErrorKind::Syntax, format!("unknown directive @{word}")),
                    }
                }
            }
            '^' => {
                if self.starts_with("^^") {
                    self.bump();
                    self.bump();
                    Tok::DoubleCaret
                } else {
                    return err(ParseErrorKind::Syntax, "expected '^^'".into());
                }
            }
            '.' if self.peek_nth(1).is_some_and(|d| d.is_ascii_digit()) => self.read_number(),
            '+' | '-' | '0'..='9' => self.read_number(),
            '.' => {
                self.bump();
                Tok::Dot
            }
            ';' => {
                self.bump();
                Tok::Semicolon
            }
            ',' => {
                self.bump();
                Tok::Comma
            }
            '[' => {
                self.bump();
                Tok::LBracket
            }
            ']' => {
                self.bump();
                Tok::RBracket
            }
            '(' => {
                self.bump();
                Tok::LParen
            }
            ')' => {
                self.bump();
                Tok::RParen
            }
            '_' if self.peek_nth(1) == Some(':') => {
                self.bump();
                self.bump();
                let label = self.read_local();
                if label.is_empty() {
                    return err(ParseErrorKind::Syntax, "empty blank node label".into());
                }
                Tok::BlankLabel(label)
            }
            c if c == ':' || c.is_alphabetic() || c == '_' => {
                let prefix = self.read_while(|c| c.is_alphanumeric() || matches!(c, '_' | '-' | '.'));
                if self.peek() == Some(':') {
                    self.bump();
                    let local = self.read_local();
                    Tok::PName(prefix, local)
                } else {
                    match prefix.as_str() {
                        "a" => Tok::A,
                        "true" => Tok::Bool(true),
                        "false" => Tok::Bool(false),
                        w if w.eq_ignore_ascii_case("prefix") => Tok::SparqlPrefix,
                        w if w.eq_ignore_ascii_case("base") => Tok::SparqlBase,
                        w if w.eq_ignore_ascii_case("graph") => {
                            return err(ParseErrorKind::Unsupported, "named graphs (GRAPH) are not supported".into())
                        }
                        w => return err(ParseErrorKind::Syntax, format!("unexpected bare word '{w}'")),
                    }
                }
            }
            other => return err(ParseErrorKind::Syntax, format!("unexpected character '{other}'")),
        };
        Ok((tok, start))
    }

    fn read_while(&mut self, pred: impl Fn(char) -> bool) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if pred(c) {
                s.push(c);
                self.bump();
            } else {
                break;
            }
        }
        s
    }

    /// Local part of a prefixed name; trailing dots belong to the statement.
    fn read_local(&mut self) -> String {
        let mut s = String::new();
        loop {
            match self.peek() {
                Some('\\') => {
                    if let Some(next) = self.peek_nth(1) {
                        self.bump();
                        self.bump();
                        s.push(next);
                    } else {
                        break;
                    }
                }
                Some('.') => {
                    // A dot continues the name only when followed by a name char.
                    match self.peek_nth(1) {
                        Some(n) if n.is_alphanumeric() || matches!(n, '_' | '-' | ':' | '%') => {
                            self.bump();
                            s.push('.');
                        }
                        _ => break,
                    }
                }
                Some(c) if c.is_alphanumeric() || matches!(c, '_' | '-' | ':' | '%') => {
                    self.bump();
                    s.push(c);
                }
                _ => break,
            }
        }
        s
    }

    fn read_number(&mut self) -> Tok {
        let mut s = String::new();
        if let Some(c @ ('+' | '-')) = self.peek() {
            s.push(c);
            self.bump();
        }
        s.push_str(&self.read_while(|c| c.is_ascii_digit()));
        let mut kind = vocab::XSD_INTEGER;
        if self.peek() == Some('.') && self.peek_nth(1).is_some_and(|c| c.is_ascii_digit()) {
            self.bump();
            s.push('.');
            s.push_str(&self.read_while(|c| c.is_ascii_digit()));
            kind = vocab::XSD_DECIMAL;
        }
        if let Some(e @ ('e' | 'E')) = self.peek() {
            let sign = matches!(self.peek_nth(1), Some('+' | '-'));
            let digit_at = if sign { 2 } else { 1 };
            if self.peek_nth(digit_at).is_some_and(|c| c.is_ascii_digit()) {
                self.bump();
                s.push(e);
                if sign {
                    s.push(self.bump().unwrap());
                }
                s.push_str(&self.read_while(|c| c.is_ascii_digit()));
                kind = vocab::XSD_DOUBLE;
            }
        }
        Tok::Number(s, kind)
    }

    fn read_unicode_escape(&mut self) -> Option<char> {
        let width = match self.bump()? {
            'u' => 4,
            'U' => 8,
            _ => return None,
        };
        let mut hex = String::new();
        for _ in 0..width {
            hex.push(self.bump()?);
        }
        u32::from_str_radix(&hex, 16).ok().and_then(char::from_u32)
    }

    fn read_string(&mut self, quote: char) -> Result<String, String> {
        let triple: String = std::iter::repeat_n(quote, 3).collect();
        let long = self.starts_with(&triple);
        for _ in 0..if long { 3 } else { 1 } {
            self.bump();
        }
        let mut s = String::new();
        loop {
            if long && self.starts_with(&triple) {
                for _ in 0..3 {
                    self.bump();
                }
                return Ok(s);
            }
            match self.bump() {
                None => return Err("unterminated string literal".into()),
                Some(c) if c == quote && !long => return Ok(s),
                Some('\\') => {
                    let esc = match self.peek() {
                        Some('t') => '\t',
                        Some('b') => '\u{8}',
                        Some('n') => '\n',
                        Some('r') => '\r',
                        Some('f') => '\u{c}',
                        Some('"') => '"',
                        Some('\'') => '\'',
                        Some('\\') => '\\',
                        Some('u' | 'U') => {
                            s.push(self.read_unicode_escape().ok_or("bad unicode escape")?);
                            continue;
                        }
                        _ => return Err("bad escape sequence in string".into()),
                    };
                    self.bump();
                    s.push(esc);
                }
                Some(c) => s.push(c),
            }
        }
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    source_name: String,
    current: Tok,
    current_pos: Pos,
    lex_error: Option<(Pos, ParseErrorKind, String)>,
    prefixes: BTreeMap<String, String>,
    base: Option<String>,
    labels: HashMap<String, BlankNode>,
    next_blank: u32,
    triples: Vec<Triple>,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str, source_name: &str) -> Self {
        let mut p = Self {
            lexer: Lexer::new(text),
            source_name: source_name.to_string(),
            current: Tok::Eof,
            current_pos: Pos { line: 1, column: 1 },
            lex_error: None,
            prefixes: BTreeMap::new(),
            base: None,
            labels: HashMap::new(),
            next_blank: 0,
            triples: Vec::new(),
        };
        p.advance();
        p
    }

    fn advance(&mut self) {
        match self.lexer.next() {
            Ok((tok, pos)) => {
                self.current = tok;
                self.current_pos = pos;
            }
            Err((pos, kind, msg)) => {
                self.current = Tok::Eof;
                self.current_pos = pos;
                self.lex_error = Some((pos, kind, msg));
            }
        }
    }

    fn error_at(&self, pos: Pos, kind: ParseErrorKind, message: impl Into<String>) -> ParseError {
        ParseError {
            source_name: self.source_name.clone(),
            line: pos.line,
            column: pos.column,
            kind,
            message: message.into(),
        }
    }

    /// Current token, surfacing any pending lexer error.
    fn peek(&self) -> Result<&Tok, ParseError> {
        if let Some((pos, kind, msg)) = &self.lex_error {
            return Err(self.error_at(*pos, *kind, msg.clone()));
        }
        Ok(&self.current)
    }

    fn take(&mut self) -> Result<(Tok, Pos), ParseError> {
        self.peek()?;
        let tok = std::mem::replace(&mut self.current, Tok::Eof);
        let pos = self.current_pos;
        self.advance();
        Ok((tok, pos))
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        let (tok, pos) = self.take()?;
        if tok == want {
            Ok(())
        } else {
            Err(self.error_at(
                pos,
                ParseErrorKind::Syntax,
                format!("expected {}, found {}", want.describe(), tok.describe()),
            ))
        }
    }

    fn fresh_blank(&mut self) -> BlankNode {
        let b = BlankNode(self.next_blank);
        self.next_blank += 1;
        b
    }

    fn emit(&mut self, subject: Term, predicate: Iri, object: Term) {
        self.triples.push(Triple::new(subject, predicate, object));
    }

    fn document(&mut self) -> Result<(), ParseError> {
        loop {
            match self.peek()? {
                Tok::Eof => return Ok(()),
                Tok::AtPrefix | Tok::SparqlPrefix => self.prefix_directive()?,
                Tok::AtBase | Tok::SparqlBase => self.base_directive()?,
                _ => {
                    self.triples_statement()?;
                    self.expect(Tok::Dot)?;
                }
            }
        }
    }

    fn prefix_directive(&mut self) -> Result<(), ParseError> {
        let (kw, _) = self.take()?;
        let (tok, pos) = self.take()?;
        let prefix = match tok {
            Tok::PName(p, l) if l.is_empty() => p,
            other => {
                return Err(self.error_at(
                    pos,
                    ParseErrorKind::Syntax,
                    format!("expected prefix name, found {}", other.describe()),
                ))
            }
        };
        let (tok, pos) = self.take()?;
        let Tok::IriRef(raw) = tok else {
            return Err(self.error_at(pos, ParseErrorKind::Syntax, format!("expected IRI, found {}", tok.describe())));
        };
        let ns = self.resolve(&raw, pos)?;
        self.prefixes.insert(prefix, ns.as_str().to_string());
        if kw == Tok::AtPrefix {
            self.expect(Tok::Dot)?;
        }
        Ok(())
    }

    fn base_directive(&mut self) -> Result<(), ParseError> {
        let (kw, kw_pos) = self.take()?;
        if self.base.is_some() {
            return Err(self.error_at(
                kw_pos,
                ParseErrorKind::Unsupported,
                "more than one base directive is not supported",
            ));
        }
        let (tok, pos) = self.take()?;
        let Tok::IriRef(raw) = tok else {
            return Err(self.error_at(pos, ParseErrorKind::Syntax, format!("expected IRI, found {}", tok.describe())));
        };
        let base = self.resolve(&raw, pos)?;
        self.base = Some(base.as_str().to_string());
        if kw == Tok::AtBase {
            self.expect(Tok::Dot)?;
        }
        Ok(())
    }

    fn resolve(&self, raw: &str, pos: Pos) -> Result<Iri, ParseError> {
        let absolute = raw
            .find(':')
            .is_some_and(|i| raw[..i].chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.')) && i > 0);
        let resolved = if absolute {
            raw.to_string()
        } else {
            let Some(base) = &self.base else {
                return Err(self.error_at(
                    pos,
                    ParseErrorKind::Syntax,
                    format!("relative IRI <{raw}> without a base directive"),
                ));
            };
            resolve_relative(base, raw)
        };
        Iri::new(resolved).map_err(|e| self.error_at(pos, ParseErrorKind::Syntax, e.to_string()))
    }

    fn expand(&self, prefix: &str, local: &str, pos: Pos) -> Result<Iri, ParseError> {
        match self.prefixes.get(prefix) {
            Some(ns) => Iri::new(format!("{ns}{local}"))
                .map_err(|e| self.error_at(pos, ParseErrorKind::Syntax, e.to_string())),
            None => Err(self.error_at(
                pos,
                ParseErrorKind::UnresolvedPrefix,
                format!("prefix '{prefix}:' is not declared"),
            )),
        }
    }

    fn blank_for_label(&mut self, label: String) -> BlankNode {
        if let Some(b) = self.labels.get(&label) {
            return *b;
        }
        let b = self.fresh_blank();
        self.labels.insert(label, b);
        b
    }

    fn triples_statement(&mut self) -> Result<(), ParseError> {
        if *self.peek()? == Tok::LBracket {
            let subject = self.blank_property_list()?;
            if !matches!(self.peek()?, Tok::Dot) {
                self.predicate_object_list(&subject)?;
            }
            return Ok(());
        }
        let subject = self.subject()?;
        self.predicate_object_list(&subject)
    }

    fn subject(&mut self) -> Result<Term, ParseError> {
        let pos = self.current_pos;
        match self.peek()?.clone() {
            Tok::IriRef(_) | Tok::PName(..) => Ok(Term::Iri(self.iri()?)),
            Tok::BlankLabel(label) => {
                self.take()?;
                Ok(Term::Blank(self.blank_for_label(label)))
            }
            Tok::LParen => self.collection(),
            Tok::Str(_) | Tok::Number(..) | Tok::Bool(_) => {
                Err(self.error_at(pos, ParseErrorKind::Syntax, "literal in subject position"))
            }
            other => Err(self.error_at(pos, ParseErrorKind::Syntax, format!("expected subject, found {}", other.describe()))),
        }
    }

    fn iri(&mut self) -> Result<Iri, ParseError> {
        let (tok, pos) = self.take()?;
        match tok {
            Tok::IriRef(raw) => self.resolve(&raw, pos),
            Tok::PName(p, l) => self.expand(&p, &l, pos),
            other => Err(self.error_at(pos, ParseErrorKind::Syntax, format!("expected IRI, found {}", other.describe()))),
        }
    }

    fn predicate_object_list(&mut self, subject: &Term) -> Result<(), ParseError> {
        loop {
            let predicate = if *self.peek()? == Tok::A {
                self.take()?;
                vocab::iri(vocab::RDF_TYPE)
            } else {
                self.iri()?
            };
            loop {
                let object = self.object()?;
                self.emit(subject.clone(), predicate.clone(), object);
                if *self.peek()? == Tok::Comma {
                    self.take()?;
                } else {
                    break;
                }
            }
            if *self.peek()? != Tok::Semicolon {
                return Ok(());
            }
            while *self.peek()? == Tok::Semicolon {
                self.take()?;
            }
            if matches!(self.peek()?, Tok::Dot | Tok::RBracket | Tok::Eof) {
                return Ok(());
            }
        }
    }

    fn object(&mut self) -> Result<Term, ParseError> {
        let pos = self.current_pos;
        match self.peek()?.clone() {
            Tok::IriRef(_) | Tok::PName(..) => Ok(Term::Iri(self.iri()?)),
            Tok::BlankLabel(label) => {
                self.take()?;
                Ok(Term::Blank(self.blank_for_label(label)))
            }
            Tok::LBracket => self.blank_property_list(),
            Tok::LParen => self.collection(),
            Tok::Str(_) => self.string_literal(),
            Tok::Number(lexical, dt) => {
                self.take()?;
                Ok(Term::Literal(Literal { lexical, language: None, datatype: Some(vocab::iri(dt)) }))
            }
            Tok::Bool(b) => {
                self.take()?;
                Ok(Term::Literal(Literal {
                    lexical: b.to_string(),
                    language: None,
                    datatype: Some(vocab::iri(vocab::XSD_BOOLEAN)),
                }))
            }
            other => Err(self.error_at(pos, ParseErrorKind::Syntax, format!("expected object, found {}", other.describe()))),
        }
    }

    fn string_literal(&mut self) -> Result<Term, ParseError> {
        let (Tok::Str(lexical), _) = self.take()? else {
            unreachable!("caller checked for a string token");
        };
        let mut literal = Literal::plain(lexical);
        match self.peek()?.clone() {
            Tok::LangTag(tag) => {
                self.take()?;
                literal.language = Some(tag);
            }
            Tok::DoubleCaret => {
                self.take()?;
                literal.datatype = Some(self.iri()?);
            }
            _ => {}
        }
        Ok(Term::Literal(literal))
    }

    fn blank_property_list(&mut self) -> Result<Term, ParseError> {
        self.expect(Tok::LBracket)?;
        let node = Term::Blank(self.fresh_blank());
        if *self.peek()? != Tok::RBracket {
            self.predicate_object_list(&node)?;
        }
        self.expect(Tok::RBracket)?;
        Ok(node)
    }

    fn collection(&mut self) -> Result<Term, ParseError> {
        self.expect(Tok::LParen)?;
        let nil = Term::Iri(vocab::iri(vocab::RDF_NIL));
        let mut head: Option<Term> = None;
        let mut previous: Option<Term> = None;
        while *self.peek()? != Tok::RParen {
            let cell = Term::Blank(self.fresh_blank());
            let item = self.object()?;
            self.emit(cell.clone(), vocab::iri(vocab::RDF_FIRST), item);
            match &previous {
                Some(prev) => self.emit(prev.clone(), vocab::iri(vocab::RDF_REST), cell.clone()),
                None => head = Some(cell.clone()),
            }
            previous = Some(cell);
        }
        self.expect(Tok::RParen)?;
        if let Some(last) = previous {
            self.emit(last, vocab::iri(vocab::RDF_REST), nil.clone());
        }
        Ok(head.unwrap_or(nil))
    }
}

fn resolve_relative(base: &str, rel: &str) -> String {
    if rel.is_empty() {
        return base.to_string();
    }
    if rel.starts_with('#') {
        let stem = base.split('#').next().unwrap_or(base);
        return format!("{stem}{rel}");
    }
    if let Some(path) = rel.strip_prefix('/') {
        if let Some(scheme_end) = base.find("://") {
            let after = &base[scheme_end + 3..];
            let authority_end = after.find('/').map(|i| scheme_end + 3 + i).unwrap_or(base.len());
            return format!("{}/{path}", &base[..authority_end]);
        }
    }
    let stem = base.split('#').next().unwrap_or(base);
    match stem.rfind('/') {
        Some(i) => format!("{}{rel}", &stem[..=i]),
        None => format!("{stem}{rel}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iri(s: &str) -> Iri {
        Iri::new(s).unwrap()
    }

    #[test]
    fn empty_document() {
        let g = parse_turtle("", "empty.ttl").unwrap();
        assert_eq!(g.len(), 0);
        assert!(g.prefixes().is_empty());
    }

    #[test]
    fn five_line_document_matches_hand_enumeration() {
        let text = "@prefix ex: <http://ex.org/> .\n\
                    @prefix owl: <http://www.w3.org/2002/07/owl#> .\n\
                    @prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .\n\
                    ex:Cruise a owl:Class ;\n    rdfs:label \"Cruise\"@en .\n";
        let g = parse_turtle(text, "five.ttl").unwrap();
        let expected: std::collections::BTreeSet<Triple> = [
            Triple::new(iri("http://ex.org/Cruise"), iri(vocab::RDF_TYPE), iri(vocab::OWL_CLASS)),
            Triple::new(
                iri("http://ex.org/Cruise"),
                iri(vocab::RDFS_LABEL),
                Term::Literal(Literal { lexical: "Cruise".into(), language: Some("en".into()), datatype: None }),
            ),
        ]
        .into_iter()
        .collect();
        assert_eq!(g.triples(), &expected);
        assert_eq!(g.prefixes().len(), 3);
    }

    #[test]
    fn collections_expand_to_first_rest_nil() {
        let g = parse_turtle("@prefix : <http://x#> . :s :p ( :a :b ) .", "t").unwrap();
        // 1 link triple + 2 first + 2 rest
        assert_eq!(g.len(), 5);
        let head = g.objects(&Term::Iri(iri("http://x#s")), "http://x#p").next().unwrap().clone();
        let members = g.list_members(&head).unwrap();
        assert_eq!(members, vec![Term::Iri(iri("http://x#a")), Term::Iri(iri("http://x#b"))]);
    }

    #[test]
    fn empty_collection_is_nil() {
        let g = parse_turtle("@prefix : <http://x#> . :s :p () .", "t").unwrap();
        let o = g.objects(&Term::Iri(iri("http://x#s")), "http://x#p").next().unwrap();
        assert_eq!(o, &Term::Iri(iri(vocab::RDF_NIL)));
    }

    #[test]
    fn unresolved_prefix_is_its_own_category() {
        let err = parse_turtle("@prefix a: <http://a#> .\na:s b:p a:o .", "bad.ttl").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnresolvedPrefix);
        assert_eq!((err.line, err.column), (2, 5));
        assert_eq!(err.to_string(), "bad.ttl:2:5: unresolved-prefix: prefix 'b:' is not declared");
    }

    #[test]
    fn named_graphs_and_quoted_triples_are_unsupported() {
        let err = parse_turtle("@prefix : <http://x#> .\n:g { :a :b :c }", "t").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Unsupported);
        let err = parse_turtle("@prefix : <http://x#> .\n<< :a :b :c >> :d :e .", "t").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Unsupported);
        let err = parse_turtle("GRAPH <http://g> { }", "t").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Unsupported);
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = parse_turtle("@prefix : <http://x#> .\n:a :b .", "t").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Syntax);
        assert_eq!(err.line, 2);
        let err = parse_turtle("@prefix : <http://x#> .\n\"lit\" :b :c .", "t").unwrap_err();
        assert!(err.message.contains("subject"));
    }

    #[test]
    fn single_base_resolves_relative_iris() {
        let g = parse_turtle("@base <http://x.org/onto> .\n<#A> <#p> <B> .", "t").unwrap();
        let t = g.triples().iter().next().unwrap();
        assert_eq!(t.subject, Term::Iri(iri("http://x.org/onto#A")));
        assert_eq!(t.object, Term::Iri(iri("http://x.org/B")));
        let err = parse_turtle("@base <http://a/> .\n@base <http://b/> .", "t").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Unsupported);
        let err = parse_turtle("<rel> <http://p> <http://o> .", "t").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Syntax);
    }

    #[test]
    fn literals_numbers_and_escapes() {
        let text = r#"@prefix : <http://x#> .
:s :p 42, -1.5, 2e3, true, "a\"b\n", 'single', """long
text""", "typed"^^:T ."#;
        let g = parse_turtle(text, "t").unwrap();
        let lits: Vec<&Literal> = g.triples().iter().filter_map(|t| t.object.as_literal()).collect();
        assert_eq!(lits.len(), 8);
        assert!(lits.iter().any(|l| l.lexical == "a\"b\n"));
        assert!(lits.iter().any(|l| l.lexical == "long\ntext"));
        assert!(lits.iter().any(|l| l.lexical == "42" && l.datatype.as_ref().unwrap().as_str() == vocab::XSD_INTEGER));
        assert!(lits.iter().any(|l| l.lexical == "-1.5" && l.datatype.as_ref().unwrap().as_str() == vocab::XSD_DECIMAL));
        assert!(lits.iter().any(|l| l.lexical == "2e3" && l.datatype.as_ref().unwrap().as_str() == vocab::XSD_DOUBLE));
        assert!(lits.iter().any(|l| l.datatype.as_ref().is_some_and(|d| d.as_str() == "http://x#T")));
    }

    #[test]
    fn blank_labels_are_deterministic() {
        let text = "@prefix : <http://x#> . _:q :p [ :r _:q ] . :s :p _:z .";
        let a = parse_turtle(text, "t").unwrap();
        let b = parse_turtle(text, "t").unwrap();
        assert_eq!(a, b);
        let blanks: std::collections::BTreeSet<_> =
            a.triples().iter().flat_map(|t| [t.subject.as_blank(), t.object.as_blank()]).flatten().collect();
        assert_eq!(blanks.into_iter().collect::<Vec<_>>(), vec![BlankNode(0), BlankNode(1), BlankNode(2)]);
    }

    #[test]
    fn trailing_semicolons_and_sparql_prefix() {
        let g = parse_turtle("PREFIX x: <http://x#>\nx:a x:b x:c ; .", "t").unwrap();
        assert_eq!(g.len(), 1);
    }
}
