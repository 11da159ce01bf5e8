//! Turtle reader.
//!
//! Supported: `@prefix`/`PREFIX`, `@base`/`BASE`, `a`, predicate-object and
//! object lists, blank node labels and property lists, collections, quoted
//! string literals (short and long forms) with language tags or datatypes,
//! integer/decimal/double literals and booleans. The `rdf`, `rdfs`, `owl`
//! and `xsd` prefixes are pre-bound.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use thiserror::Error;

use super::vocab;
use super::{BlankNode, Iri, Literal, Ontology, Term, Triple};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct SyntaxError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Pos {
    line: usize,
    column: usize,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    IriRef(String),
    PName(String, String),
    BlankLabel(String),
    Str(String),
    LangTag(String),
    DoubleCaret,
    Integer(String),
    Decimal(String),
    Double(String),
    Bool(bool),
    A,
    Dot,
    Semi,
    Comma,
    LBracket,
    RBracket,
    LParen,
    RParen,
    AtPrefix,
    AtBase,
    SparqlPrefix,
    SparqlBase,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::IriRef(s) => write!(f, "<{s}>"),
            Tok::PName(p, l) => write!(f, "{p}:{l}"),
            Tok::BlankLabel(l) => write!(f, "_:{l}"),
            Tok::Str(_) => f.write_str("string literal"),
            Tok::LangTag(t) => write!(f, "@{t}"),
            Tok::DoubleCaret => f.write_str("^^"),
            Tok::Integer(s) | Tok::Decimal(s) | Tok::Double(s) => f.write_str(s),
            Tok::Bool(b) => write!(f, "{b}"),
            Tok::A => f.write_str("a"),
            Tok::Dot => f.write_str("."),
            Tok::Semi => f.write_str(";"),
            Tok::Comma => f.write_str(","),
            Tok::LBracket => f.write_str("["),
            Tok::RBracket => f.write_str("]"),
            Tok::LParen => f.write_str("("),
            Tok::RParen => f.write_str(")"),
            Tok::AtPrefix => f.write_str("@prefix"),
            Tok::AtBase => f.write_str("@base"),
            Tok::SparqlPrefix => f.write_str("PREFIX"),
            Tok::SparqlBase => f.write_str("BASE"),
        }
    }
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    lookahead: Vec<char>,
    line: usize,
    column: usize,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer {
            chars: text.chars().peekable(),
            lookahead: Vec::new(),
            line: 1,
            column: 1,
        }
    }

    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            column: self.column,
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.peek_nth(0)
    }

    fn peek_nth(&mut self, n: usize) -> Option<char> {
        while self.lookahead.len() <= n {
            let c = self.chars.next()?;
            self.lookahead.push(c);
        }
        Some(self.lookahead[n])
    }

    fn bump(&mut self) -> Option<char> {
        let c = if self.lookahead.is_empty() {
            self.chars.next()
        } else {
            Some(self.lookahead.remove(0))
        }?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn err(&self, pos: Pos, message: impl Into<String>) -> SyntaxError {
        SyntaxError {
            line: pos.line,
            column: pos.column,
            message: message.into(),
        }
    }

    fn tokens(mut self) -> Result<Vec<(Tok, Pos)>, SyntaxError> {
        let mut out = Vec::new();
        while let Some(tok) = self.next_token()? {
            out.push(tok);
        }
        Ok(out)
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

    fn next_token(&mut self) -> Result<Option<(Tok, Pos)>, SyntaxError> {
        self.skip_trivia();
        let pos = self.pos();
        let Some(c) = self.peek() else {
            return Ok(None);
        };
        let tok = match c {
            '<' => {
                self.bump();
                Tok::IriRef(self.iri_ref(pos)?)
            }
            '"' | '\'' => Tok::Str(self.string(pos)?),
            '@' => {
                self.bump();
                let mut tag = String::new();
                while let Some(c) = self.peek() {
                    if c.is_ascii_alphanumeric() || c == '-' {
                        tag.push(c);
                        self.bump();
                    } else {
                        break;
                    }
                }
                match tag.as_str() {
                    "prefix" => Tok::AtPrefix,
                    "base" => Tok::AtBase,
                    "" => return Err(self.err(pos, "expected a language tag or directive after `@`")),
                    _ => Tok::LangTag(tag.to_ascii_lowercase()),
                }
            }
            '^' => {
                self.bump();
                if self.peek() == Some('^') {
                    self.bump();
                    Tok::DoubleCaret
                } else {
                    return Err(self.err(pos, "expected `^^`"));
                }
            }
            '.' if !self.peek_nth(1).is_some_and(|d| d.is_ascii_digit()) => {
                self.bump();
                Tok::Dot
            }
            ';' => {
                self.bump();
                Tok::Semi
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
                let label = self.name_chars();
                if label.is_empty() {
                    return Err(self.err(pos, "empty blank node label"));
                }
                Tok::BlankLabel(label)
            }
            c if c.is_ascii_digit() || c == '+' || c == '-' || c == '.' => self.number(pos)?,
            c if c == ':' || c.is_alphabetic() || c == '_' => self.word(pos)?,
            other => return Err(self.err(pos, format!("unexpected character `{other}`"))),
        };
        Ok(Some((tok, pos)))
    }

    fn iri_ref(&mut self, start: Pos) -> Result<String, SyntaxError> {
        let mut s = String::new();
        loop {
            match self.bump() {
                Some('>') => return Ok(s),
                Some('\\') => s.push(self.unicode_escape(start)?),
                Some(c) if c.is_whitespace() => {
                    return Err(self.err(start, "whitespace inside IRI reference"))
                }
                Some(c) => s.push(c),
                None => return Err(self.err(start, "unterminated IRI reference")),
            }
        }
    }

    fn unicode_escape(&mut self, start: Pos) -> Result<char, SyntaxError> {
        let width = match self.bump() {
            Some('u') => 4,
            Some('U') => 8,
            _ => return Err(self.err(start, "invalid escape sequence")),
        };
        let mut hex = String::new();
        for _ in 0..width {
            match self.bump() {
                Some(c) if c.is_ascii_hexdigit() => hex.push(c),
                _ => return Err(self.err(start, "invalid unicode escape")),
            }
        }
        u32::from_str_radix(&hex, 16)
            .ok()
            .and_then(char::from_u32)
            .ok_or_else(|| self.err(start, "invalid unicode code point"))
    }

    fn string(&mut self, start: Pos) -> Result<String, SyntaxError> {
        let quote = self.bump().expect("caller peeked a quote");
        let long = self.peek() == Some(quote) && self.peek_nth(1) == Some(quote);
        if long {
            self.bump();
            self.bump();
        }
        let mut s = String::new();
        loop {
            let Some(c) = self.bump() else {
                return Err(self.err(start, "unterminated string literal"));
            };
            match c {
                '\\' => {
                    let escaped = match self.peek() {
                        Some('t') => '\t',
                        Some('b') => '\u{8}',
                        Some('n') => '\n',
                        Some('r') => '\r',
                        Some('f') => '\u{c}',
                        Some('"') => '"',
                        Some('\'') => '\'',
                        Some('\\') => '\\',
                        Some('u') | Some('U') => {
                            s.push(self.unicode_escape(start)?);
                            continue;
                        }
                        _ => return Err(self.err(self.pos(), "invalid escape sequence in string")),
                    };
                    self.bump();
                    s.push(escaped);
                }
                c if c == quote => {
                    if !long {
                        return Ok(s);
                    }
                    if self.peek() == Some(quote) && self.peek_nth(1) == Some(quote) {
                        // A long string may end with up to two extra quotes.
                        while self.peek_nth(2) == Some(quote) {
                            s.push(quote);
                            self.bump();
                        }
                        self.bump();
                        self.bump();
                        return Ok(s);
                    }
                    s.push(c);
                }
                '\n' | '\r' if !long => {
                    return Err(self.err(start, "line break in short string literal"))
                }
                c => s.push(c),
            }
        }
    }

    fn number(&mut self, start: Pos) -> Result<Tok, SyntaxError> {
        let mut s = String::new();
        if let Some(c @ ('+' | '-')) = self.peek() {
            s.push(c);
            self.bump();
        }
        let mut int_digits = 0;
        while let Some(c) = self.peek().filter(char::is_ascii_digit) {
            s.push(c);
            self.bump();
            int_digits += 1;
        }
        let mut frac_digits = 0;
        if self.peek() == Some('.') && self.peek_nth(1).is_some_and(|c| c.is_ascii_digit()) {
            s.push('.');
            self.bump();
            while let Some(c) = self.peek().filter(char::is_ascii_digit) {
                s.push(c);
                self.bump();
                frac_digits += 1;
            }
        }
        if int_digits + frac_digits == 0 {
            return Err(self.err(start, "malformed number"));
        }
        if let Some(e @ ('e' | 'E')) = self.peek() {
            s.push(e);
            self.bump();
            if let Some(c @ ('+' | '-')) = self.peek() {
                s.push(c);
                self.bump();
            }
            let mut exp_digits = 0;
            while let Some(c) = self.peek().filter(char::is_ascii_digit) {
                s.push(c);
                self.bump();
                exp_digits += 1;
            }
            if exp_digits == 0 {
                return Err(self.err(start, "malformed exponent"));
            }
            return Ok(Tok::Double(s));
        }
        Ok(if frac_digits > 0 || s.contains('.') {
            Tok::Decimal(s)
        } else {
            Tok::Integer(s)
        })
    }

    /// Name characters of a prefixed name or blank node label. Trailing dots
    /// are left in the input because they terminate statements.
    fn name_chars(&mut self) -> String {
        let mut s = String::new();
        let mut n = 0;
        while let Some(c) = self.peek_nth(n) {
            if c.is_alphanumeric() || matches!(c, '_' | '-' | ':' | '%' | '\u{b7}') {
                n += 1;
            } else if c == '.' {
                // Keep a dot only if more name characters follow it.
                let mut m = n;
                while self.peek_nth(m) == Some('.') {
                    m += 1;
                }
                match self.peek_nth(m) {
                    Some(d) if d.is_alphanumeric() || matches!(d, '_' | '-' | ':' | '%') => n = m,
                    _ => break,
                }
            } else if c == '\\' && self.peek_nth(n + 1).is_some_and(|d| "_~.-!$&'()*+,;=/?#@%".contains(d)) {
                n += 2;
            } else {
                break;
            }
        }
        let mut i = 0;
        while i < n {
            let c = self.bump().expect("peeked");
            if c == '\\' {
                s.push(self.bump().expect("peeked"));
                i += 2;
            } else {
                s.push(c);
                i += 1;
            }
        }
        s
    }

    fn word(&mut self, start: Pos) -> Result<Tok, SyntaxError> {
        let w = self.name_chars();
        if let Some((prefix, local)) = w.split_once(':') {
            return Ok(Tok::PName(prefix.to_string(), local.to_string()));
        }
        Ok(match w.as_str() {
            "a" => Tok::A,
            "true" => Tok::Bool(true),
            "false" => Tok::Bool(false),
            _ if w.eq_ignore_ascii_case("prefix") => Tok::SparqlPrefix,
            _ if w.eq_ignore_ascii_case("base") => Tok::SparqlBase,
            _ => return Err(self.err(start, format!("unexpected name `{w}` (missing prefix?)"))),
        })
    }
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    prefixes: BTreeMap<String, Iri>,
    base: Option<String>,
    triples: BTreeSet<Triple>,
    explicit_labels: HashSet<String>,
    next_blank: usize,
    end: Pos,
}

impl Parser {
    fn err(&self, pos: Pos, message: impl Into<String>) -> SyntaxError {
        SyntaxError {
            line: pos.line,
            column: pos.column,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(t, _)| t)
    }

    fn pos(&self) -> Pos {
        self.toks.get(self.at).map_or(self.end, |(_, p)| *p)
    }

    fn next(&mut self) -> Result<(Tok, Pos), SyntaxError> {
        match self.toks.get(self.at) {
            Some(t) => {
                self.at += 1;
                Ok(t.clone())
            }
            None => Err(self.err(self.end, "unexpected end of document")),
        }
    }

    fn expect(&mut self, want: Tok) -> Result<(), SyntaxError> {
        let (tok, pos) = self.next()?;
        if tok == want {
            Ok(())
        } else {
            Err(self.err(pos, format!("expected `{want}`, found `{tok}`")))
        }
    }

    fn fresh_blank(&mut self) -> Term {
        loop {
            let label = format!("b{}", self.next_blank);
            self.next_blank += 1;
            if !self.explicit_labels.contains(&label) {
                return Term::Blank(BlankNode(label));
            }
        }
    }

    fn resolve(&self, raw: &str, pos: Pos) -> Result<Iri, SyntaxError> {
        let absolute = match (Iri::new(raw), &self.base) {
            (Ok(iri), _) => return Ok(iri),
            (Err(_), Some(base)) => resolve_relative(base, raw),
            (Err(e), None) => return Err(self.err(pos, e.to_string())),
        };
        Iri::new(absolute).map_err(|e| self.err(pos, e.to_string()))
    }

    fn expand(&self, prefix: &str, local: &str, pos: Pos) -> Result<Iri, SyntaxError> {
        let ns = self
            .prefixes
            .get(prefix)
            .ok_or_else(|| self.err(pos, format!("undeclared prefix `{prefix}:`")))?;
        Iri::new(format!("{}{local}", ns.as_str())).map_err(|e| self.err(pos, e.to_string()))
    }

    fn document(&mut self) -> Result<(), SyntaxError> {
        while let Some(tok) = self.peek() {
            match tok {
                Tok::AtPrefix | Tok::SparqlPrefix => {
                    let at_form = *tok == Tok::AtPrefix;
                    self.next()?;
                    let (name, pos) = self.next()?;
                    let Tok::PName(prefix, local) = name else {
                        return Err(self.err(pos, format!("expected a prefix name, found `{name}`")));
                    };
                    if !local.is_empty() {
                        return Err(self.err(pos, "prefix name must end with `:`"));
                    }
                    let (iri, pos) = self.next()?;
                    let Tok::IriRef(raw) = iri else {
                        return Err(self.err(pos, format!("expected an IRI, found `{iri}`")));
                    };
                    let ns = self.resolve(&raw, pos)?;
                    self.prefixes.insert(prefix, ns);
                    if at_form {
                        self.expect(Tok::Dot)?;
                    }
                }
                Tok::AtBase | Tok::SparqlBase => {
                    let at_form = *tok == Tok::AtBase;
                    self.next()?;
                    let (iri, pos) = self.next()?;
                    let Tok::IriRef(raw) = iri else {
                        return Err(self.err(pos, format!("expected an IRI, found `{iri}`")));
                    };
                    self.base = Some(self.resolve(&raw, pos)?.as_str().to_string());
                    if at_form {
                        self.expect(Tok::Dot)?;
                    }
                }
                _ => {
                    self.statement()?;
                    self.expect(Tok::Dot)?;
                }
            }
        }
        Ok(())
    }

    fn statement(&mut self) -> Result<(), SyntaxError> {
        let pos = self.pos();
        match self.peek() {
            Some(Tok::LBracket) => {
                let subject = self.blank_property_list()?;
                if !matches!(self.peek(), Some(Tok::Dot)) {
                    self.predicate_object_list(&subject)?;
                }
            }
            _ => {
                let subject = self.subject()?;
                if matches!(self.peek(), Some(Tok::Dot) | None) {
                    return Err(self.err(pos, "subject without predicate"));
                }
                self.predicate_object_list(&subject)?;
            }
        }
        Ok(())
    }

    fn subject(&mut self) -> Result<Term, SyntaxError> {
        let (tok, pos) = self.next()?;
        match tok {
            Tok::IriRef(raw) => Ok(Term::Iri(self.resolve(&raw, pos)?)),
            Tok::PName(p, l) => Ok(Term::Iri(self.expand(&p, &l, pos)?)),
            Tok::BlankLabel(l) => Ok(Term::Blank(BlankNode(l))),
            Tok::LParen => self.collection(),
            other => Err(self.err(pos, format!("unexpected `{other}` in subject position"))),
        }
    }

    fn verb(&mut self) -> Result<Iri, SyntaxError> {
        let (tok, pos) = self.next()?;
        match tok {
            Tok::A => Ok(vocab::iri(vocab::RDF_TYPE)),
            Tok::IriRef(raw) => self.resolve(&raw, pos),
            Tok::PName(p, l) => self.expand(&p, &l, pos),
            other => Err(self.err(pos, format!("expected a predicate, found `{other}`"))),
        }
    }

    fn predicate_object_list(&mut self, subject: &Term) -> Result<(), SyntaxError> {
        loop {
            let predicate = self.verb()?;
            loop {
                let object = self.object()?;
                self.triples.insert(Triple {
                    subject: subject.clone(),
                    predicate: predicate.clone(),
                    object,
                });
                if matches!(self.peek(), Some(Tok::Comma)) {
                    self.next()?;
                } else {
                    break;
                }
            }
            // One or more `;`, optionally trailing.
            let mut saw_semi = false;
            while matches!(self.peek(), Some(Tok::Semi)) {
                self.next()?;
                saw_semi = true;
            }
            let more = matches!(
                self.peek(),
                Some(Tok::A | Tok::IriRef(_) | Tok::PName(..))
            );
            if !(saw_semi && more) {
                return Ok(());
            }
        }
    }

    fn object(&mut self) -> Result<Term, SyntaxError> {
        if matches!(self.peek(), Some(Tok::LBracket)) {
            return self.blank_property_list();
        }
        let (tok, pos) = self.next()?;
        Ok(match tok {
            Tok::IriRef(raw) => Term::Iri(self.resolve(&raw, pos)?),
            Tok::PName(p, l) => Term::Iri(self.expand(&p, &l, pos)?),
            Tok::BlankLabel(l) => Term::Blank(BlankNode(l)),
            Tok::LParen => self.collection()?,
            Tok::Str(s) => match self.peek() {
                Some(Tok::LangTag(_)) => {
                    let Ok((Tok::LangTag(tag), _)) = self.next() else { unreachable!() };
                    Term::Literal(Literal::lang(s, tag))
                }
                Some(Tok::DoubleCaret) => {
                    self.next()?;
                    let (dt, pos) = self.next()?;
                    let datatype = match dt {
                        Tok::IriRef(raw) => self.resolve(&raw, pos)?,
                        Tok::PName(p, l) => self.expand(&p, &l, pos)?,
                        other => {
                            return Err(self.err(pos, format!("expected a datatype IRI, found `{other}`")))
                        }
                    };
                    Term::Literal(Literal::typed(s, datatype))
                }
                _ => Term::Literal(Literal::string(s)),
            },
            Tok::Integer(s) => Term::Literal(Literal::typed(s, vocab::iri(vocab::XSD_INTEGER))),
            Tok::Decimal(s) => Term::Literal(Literal::typed(s, vocab::iri(vocab::XSD_DECIMAL))),
            Tok::Double(s) => Term::Literal(Literal::typed(s, vocab::iri(vocab::XSD_DOUBLE))),
            Tok::Bool(b) => Term::Literal(Literal::typed(b.to_string(), vocab::iri(vocab::XSD_BOOLEAN))),
            other => return Err(self.err(pos, format!("unexpected `{other}` in object position"))),
        })
    }

    fn blank_property_list(&mut self) -> Result<Term, SyntaxError> {
        self.expect(Tok::LBracket)?;
        let node = self.fresh_blank();
        if !matches!(self.peek(), Some(Tok::RBracket)) {
            self.predicate_object_list(&node)?;
        }
        self.expect(Tok::RBracket)?;
        Ok(node)
    }

    /// Called after the opening parenthesis has been consumed.
    fn collection(&mut self) -> Result<Term, SyntaxError> {
        let mut items = Vec::new();
        while !matches!(self.peek(), Some(Tok::RParen)) {
            if self.peek().is_none() {
                return Err(self.err(self.end, "unterminated collection"));
            }
            items.push(self.object()?);
        }
        self.next()?;
        let mut head = Term::Iri(vocab::iri(vocab::RDF_NIL));
        let nodes: Vec<Term> = items.iter().map(|_| self.fresh_blank()).collect();
        for (item, node) in items.into_iter().zip(nodes).rev() {
            self.triples.insert(Triple {
                subject: node.clone(),
                predicate: vocab::iri(vocab::RDF_FIRST),
                object: item,
            });
            self.triples.insert(Triple {
                subject: node.clone(),
                predicate: vocab::iri(vocab::RDF_REST),
                object: head,
            });
            head = node;
        }
        Ok(head)
    }
}

fn resolve_relative(base: &str, rel: &str) -> String {
    if rel.is_empty() {
        return base.split('#').next().unwrap_or(base).to_string();
    }
    if rel.starts_with('#') {
        return format!("{}{rel}", base.split('#').next().unwrap_or(base));
    }
    let authority_end = base
        .find("://")
        .map(|i| base[i + 3..].find('/').map_or(base.len(), |j| i + 3 + j))
        .unwrap_or(0);
    if let Some(stripped) = rel.strip_prefix("//") {
        let scheme_end = base.find(':').map_or(0, |i| i + 1);
        return format!("{}//{stripped}", &base[..scheme_end]);
    }
    if rel.starts_with('/') {
        return format!("{}{rel}", &base[..authority_end]);
    }
    let path_base = base.split(['#', '?']).next().unwrap_or(base);
    match path_base.rfind('/') {
        Some(i) if i >= authority_end => format!("{}{rel}", &path_base[..=i]),
        _ => format!("{path_base}/{rel}"),
    }
}

/// Parses a Turtle document.
pub fn parse_turtle(text: &str) -> Result<Ontology, SyntaxError> {
    parse_turtle_with_prefixes(text, &BTreeMap::new())
}

/// Parses a Turtle document with additional pre-bound prefixes. Prefixes
/// declared in the document take precedence.
pub fn parse_turtle_with_prefixes(
    text: &str,
    extra_prefixes: &BTreeMap<String, Iri>,
) -> Result<Ontology, SyntaxError> {
    let toks = Lexer::new(text).tokens()?;
    let explicit_labels = toks
        .iter()
        .filter_map(|(t, _)| match t {
            Tok::BlankLabel(l) => Some(l.clone()),
            _ => None,
        })
        .collect();
    let end = {
        let line = text.lines().count().max(1);
        let column = text.lines().last().map_or(0, |l| l.chars().count()) + 1;
        Pos { line, column }
    };
    let mut prefixes = vocab::standard_prefixes();
    prefixes.extend(extra_prefixes.iter().map(|(k, v)| (k.clone(), v.clone())));
    let mut parser = Parser {
        toks,
        at: 0,
        prefixes,
        base: None,
        triples: BTreeSet::new(),
        explicit_labels,
        next_blank: 0,
        end,
    };
    parser.document()?;
    Ok(Ontology::from_parts(parser.triples, parser.prefixes))
}
