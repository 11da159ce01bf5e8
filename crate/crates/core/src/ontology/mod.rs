//! RDF terms, triples and the [`Ontology`] container.
//!
//! Ontologies are read from and written to Turtle. Everything here is a
//! plain value type: once built, an [`Ontology`] is never mutated behind the
//! caller's back and can be shared freely between threads.

mod graph;
mod signature;
mod turtle;
pub mod vocab;
mod writer;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use graph::ClassGraph;
pub use signature::{Signature, TermKind, TermRef};
pub use turtle::{parse_turtle, parse_turtle_with_prefixes, SyntaxError};
pub use writer::serialize_turtle;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IriError {
    #[error("empty IRI")]
    Empty,
    #[error("IRI `{0}` is not absolute (expected `scheme://...` or `urn:...`)")]
    NotAbsolute(String),
    #[error("IRI `{0}` contains a forbidden character")]
    ForbiddenCharacter(String),
}

/// An absolute IRI.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Iri(String);

impl Iri {
    pub fn new(value: impl Into<String>) -> Result<Self, IriError> {
        let value = value.into();
        if value.is_empty() {
            return Err(IriError::Empty);
        }
        if value
            .chars()
            .any(|c| c.is_whitespace() || matches!(c, '<' | '>' | '"' | '{' | '}' | '|' | '^' | '`' | '\\'))
        {
            return Err(IriError::ForbiddenCharacter(value));
        }
        if !(has_authority_scheme(&value) || is_urn(&value)) {
            return Err(IriError::NotAbsolute(value));
        }
        Ok(Iri(value))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Splits at the last `#` or `/` into `(namespace, local name)`.
    ///
    /// URNs without either separator split at their last `:`.
    pub fn split(&self) -> (&str, &str) {
        let s = self.0.as_str();
        let cut = s.rfind(['#', '/']).or_else(|| s.rfind(':'));
        match cut {
            Some(i) => (&s[..=i], &s[i + 1..]),
            None => (s, ""),
        }
    }

    pub fn namespace(&self) -> &str {
        self.split().0
    }

    pub fn local_name(&self) -> &str {
        self.split().1
    }
}

fn has_authority_scheme(s: &str) -> bool {
    match s.find("://") {
        Some(i) if i > 0 => {
            let scheme = &s[..i];
            scheme.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
                && scheme
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
        }
        _ => false,
    }
}

fn is_urn(s: &str) -> bool {
    if s.len() < 4 || !s[..4].eq_ignore_ascii_case("urn:") {
        return false;
    }
    let rest = &s[4..];
    match rest.split_once(':') {
        Some((nid, nss)) => {
            !nid.is_empty()
                && !nss.is_empty()
                && nid.chars().all(|c| c.is_ascii_alphanumeric() || c == '-')
        }
        None => false,
    }
}

impl TryFrom<String> for Iri {
    type Error = IriError;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        Iri::new(value)
    }
}

impl From<Iri> for String {
    fn from(iri: Iri) -> Self {
        iri.0
    }
}

impl fmt::Display for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}>", self.0)
    }
}

/// A blank node label, unique within one parsed document.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BlankNode(pub String);

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub lexical: String,
    pub datatype: Iri,
    pub language: Option<String>,
}

impl Literal {
    pub fn string(lexical: impl Into<String>) -> Self {
        Literal {
            lexical: lexical.into(),
            datatype: vocab::iri(vocab::XSD_STRING),
            language: None,
        }
    }

    pub fn typed(lexical: impl Into<String>, datatype: Iri) -> Self {
        Literal {
            lexical: lexical.into(),
            datatype,
            language: None,
        }
    }

    pub fn lang(lexical: impl Into<String>, language: impl Into<String>) -> Self {
        Literal {
            lexical: lexical.into(),
            datatype: vocab::iri(vocab::RDF_LANG_STRING),
            language: Some(language.into().to_ascii_lowercase()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Iri(Iri),
    Blank(BlankNode),
    Literal(Literal),
}

impl Term {
    pub fn as_iri(&self) -> Option<&Iri> {
        match self {
            Term::Iri(iri) => Some(iri),
            _ => None,
        }
    }

    pub fn is_blank(&self) -> bool {
        matches!(self, Term::Blank(_))
    }
}

impl From<Iri> for Term {
    fn from(iri: Iri) -> Self {
        Term::Iri(iri)
    }
}

impl From<Literal> for Term {
    fn from(lit: Literal) -> Self {
        Term::Literal(lit)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub subject: Term,
    pub predicate: Iri,
    pub object: Term,
}

impl Triple {
    pub fn new(subject: impl Into<Term>, predicate: Iri, object: impl Into<Term>) -> Self {
        Triple {
            subject: subject.into(),
            predicate,
            object: object.into(),
        }
    }

    pub fn mentions(&self, iri: &Iri) -> bool {
        self.subject.as_iri() == Some(iri)
            || &self.predicate == iri
            || self.object.as_iri() == Some(iri)
    }
}

/// Non-fatal observations made while loading an ontology.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Diagnostic {
    MultipleOntologyHeaders(Vec<Term>),
    DualTypedProperty(Iri),
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::MultipleOntologyHeaders(subjects) => {
                write!(f, "{} owl:Ontology headers declared", subjects.len())
            }
            Diagnostic::DualTypedProperty(iri) => write!(
                f,
                "{iri} is typed both owl:ObjectProperty and owl:DatatypeProperty"
            ),
        }
    }
}

/// A set of triples plus the prefix bindings used to write it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ontology {
    triples: BTreeSet<Triple>,
    prefixes: BTreeMap<String, Iri>,
    ontology_iri: Option<Iri>,
    diagnostics: Vec<Diagnostic>,
}

impl Default for Ontology {
    fn default() -> Self {
        Ontology::new()
    }
}

impl Ontology {
    /// An empty ontology with the standard `rdf`, `rdfs`, `owl` and `xsd`
    /// prefixes bound.
    pub fn new() -> Self {
        Ontology {
            triples: BTreeSet::new(),
            prefixes: vocab::standard_prefixes(),
            ontology_iri: None,
            diagnostics: Vec::new(),
        }
    }

    /// Builds an ontology from triples, deriving the header IRI and
    /// diagnostics the same way the parser does.
    pub fn from_triples(triples: impl IntoIterator<Item = Triple>) -> Self {
        let mut o = Ontology::new();
        o.triples.extend(triples);
        o.refresh_derived();
        o
    }

    pub(crate) fn from_parts(triples: BTreeSet<Triple>, prefixes: BTreeMap<String, Iri>) -> Self {
        let mut o = Ontology {
            triples,
            prefixes,
            ontology_iri: None,
            diagnostics: Vec::new(),
        };
        o.refresh_derived();
        o
    }

    fn refresh_derived(&mut self) {
        let headers = self.header_subjects();
        self.ontology_iri = match headers.as_slice() {
            [Term::Iri(iri)] => Some(iri.clone()),
            _ => None,
        };
        self.diagnostics.clear();
        if headers.len() > 1 {
            self.diagnostics
                .push(Diagnostic::MultipleOntologyHeaders(headers));
        }
        let sig = self.signature();
        for iri in sig.object_properties.intersection(&sig.data_properties) {
            self.diagnostics
                .push(Diagnostic::DualTypedProperty(iri.clone()));
        }
    }

    /// Subjects of `rdf:type owl:Ontology` triples, in sorted order.
    pub fn header_subjects(&self) -> Vec<Term> {
        let rdf_type = vocab::iri(vocab::RDF_TYPE);
        let owl_ontology = Term::Iri(vocab::iri(vocab::OWL_ONTOLOGY));
        self.triples
            .iter()
            .filter(|t| t.predicate == rdf_type && t.object == owl_ontology)
            .map(|t| t.subject.clone())
            .collect()
    }

    pub fn triples(&self) -> &BTreeSet<Triple> {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn prefixes(&self) -> &BTreeMap<String, Iri> {
        &self.prefixes
    }

    pub fn ontology_iri(&self) -> Option<&Iri> {
        self.ontology_iri.as_ref()
    }

    pub fn diagnostics(&self) -> &[Diagnostic] {
        &self.diagnostics
    }

    pub fn contains(&self, triple: &Triple) -> bool {
        self.triples.contains(triple)
    }

    /// Returns a copy with `triple` added.
    pub fn with_triple(&self, triple: Triple) -> Ontology {
        let mut triples = self.triples.clone();
        triples.insert(triple);
        let mut o = Ontology::from_parts(triples, self.prefixes.clone());
        o.inherit_header(self);
        o
    }

    /// Returns a copy keeping only triples for which `keep` holds.
    pub fn filtered(&self, mut keep: impl FnMut(&Triple) -> bool) -> Ontology {
        let triples = self.triples.iter().filter(|t| keep(t)).cloned().collect();
        let mut o = Ontology::from_parts(triples, self.prefixes.clone());
        o.inherit_header(self);
        o
    }

    // Keeps an explicitly chosen header IRI (see `merge`) while its header
    // triple survives.
    fn inherit_header(&mut self, from: &Ontology) {
        if self.ontology_iri.is_some() {
            return;
        }
        if let Some(iri) = &from.ontology_iri {
            if self.header_subjects().contains(&Term::Iri(iri.clone())) {
                self.ontology_iri = Some(iri.clone());
            }
        }
    }

    /// Returns a copy with every IRI rewritten through `f`.
    pub fn map_iris(&self, mut f: impl FnMut(&Iri) -> Iri) -> Ontology {
        let mut map_term = |t: &Term| match t {
            Term::Iri(i) => Term::Iri(f(i)),
            other => other.clone(),
        };
        let triples: BTreeSet<Triple> = self
            .triples
            .iter()
            .map(|t| Triple {
                subject: map_term(&t.subject),
                predicate: match map_term(&Term::Iri(t.predicate.clone())) {
                    Term::Iri(i) => i,
                    _ => unreachable!(),
                },
                object: map_term(&t.object),
            })
            .collect();
        let mut o = Ontology::from_parts(triples, self.prefixes.clone());
        if o.ontology_iri.is_none() {
            if let Some(iri) = &self.ontology_iri {
                let mapped = f(iri);
                if o.header_subjects().contains(&Term::Iri(mapped.clone())) {
                    o.ontology_iri = Some(mapped);
                }
            }
        }
        o
    }

    /// Returns a copy whose blank node labels carry `prefix`.
    ///
    /// Used to keep blank nodes of independently produced documents apart
    /// before they are merged.
    pub fn prefix_blank_nodes(&self, prefix: &str) -> Ontology {
        let relabel = |t: &Term| match t {
            Term::Blank(BlankNode(label)) => Term::Blank(BlankNode(format!("{prefix}{label}"))),
            other => other.clone(),
        };
        let triples = self
            .triples
            .iter()
            .map(|t| Triple {
                subject: relabel(&t.subject),
                predicate: t.predicate.clone(),
                object: relabel(&t.object),
            })
            .collect();
        let mut o = Ontology::from_parts(triples, self.prefixes.clone());
        o.inherit_header(self);
        o
    }

    /// Binds `name` to `namespace`, replacing any previous binding.
    pub fn bind_prefix(&mut self, name: impl Into<String>, namespace: Iri) {
        self.prefixes.insert(name.into(), namespace);
    }

    pub fn unbind_prefix(&mut self, name: &str) {
        self.prefixes.remove(name);
    }

    pub fn signature(&self) -> Signature {
        Signature::of(self)
    }

    pub fn subclass_graph(&self) -> ClassGraph {
        ClassGraph::of(self)
    }

    /// Objects of `(subject, predicate, ?)` triples.
    pub fn objects<'a>(&'a self, subject: &'a Term, predicate: &'a Iri) -> impl Iterator<Item = &'a Term> + 'a {
        self.triples
            .iter()
            .filter(move |t| &t.subject == subject && &t.predicate == predicate)
            .map(|t| &t.object)
    }

    /// Union of two ontologies.
    ///
    /// Triples are united as sets. Prefixes of `other` that clash with a
    /// differently bound prefix of `self` are renamed with a numeric suffix.
    /// The header IRI is taken from `self` when present.
    pub fn merge(&self, other: &Ontology) -> Ontology {
        let mut triples = self.triples.clone();
        triples.extend(other.triples.iter().cloned());

        let mut prefixes = self.prefixes.clone();
        for (name, ns) in &other.prefixes {
            match prefixes.get(name) {
                None => {
                    prefixes.insert(name.clone(), ns.clone());
                }
                Some(existing) if existing == ns => {}
                Some(_) => {
                    if prefixes.values().any(|v| v == ns) {
                        continue;
                    }
                    let renamed = (1..)
                        .map(|n| format!("{name}{n}"))
                        .find(|candidate| !prefixes.contains_key(candidate))
                        .expect("unbounded suffix search");
                    prefixes.insert(renamed, ns.clone());
                }
            }
        }

        let mut merged = Ontology::from_parts(triples, prefixes);
        merged.ontology_iri = self
            .ontology_iri
            .clone()
            .or_else(|| other.ontology_iri.clone());
        merged
    }
}
