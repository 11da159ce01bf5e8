use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::vocab;
use super::{Iri, Ontology, Term};

/// The three kinds of named entity the evaluation works with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TermKind {
    Class,
    ObjectProperty,
    DataProperty,
}

impl TermKind {
    pub const ALL: [TermKind; 3] = [TermKind::Class, TermKind::ObjectProperty, TermKind::DataProperty];

    pub fn as_str(self) -> &'static str {
        match self {
            TermKind::Class => "class",
            TermKind::ObjectProperty => "object_property",
            TermKind::DataProperty => "data_property",
        }
    }

    pub fn is_property(self) -> bool {
        !matches!(self, TermKind::Class)
    }

    /// The `rdf:type` object that declares a term of this kind.
    pub fn declaring_type(self) -> Iri {
        vocab::iri(match self {
            TermKind::Class => vocab::OWL_CLASS,
            TermKind::ObjectProperty => vocab::OWL_OBJECT_PROPERTY,
            TermKind::DataProperty => vocab::OWL_DATATYPE_PROPERTY,
        })
    }
}

impl fmt::Display for TermKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for TermKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TermKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown term kind `{s}`"))
    }
}

/// A named term together with its kind.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TermRef {
    pub iri: Iri,
    pub kind: TermKind,
}

impl TermRef {
    pub fn new(iri: Iri, kind: TermKind) -> Self {
        TermRef { iri, kind }
    }
}

impl fmt::Display for TermRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.iri, self.kind)
    }
}

/// Named classes and properties of an ontology.
///
/// Classes are terms typed `owl:Class` or `rdfs:Class`, plus named
/// `rdfs:subClassOf` endpoints, domains of declared properties and ranges of
/// object properties. Standard vocabulary terms such as `owl:Thing` are not
/// counted. `declared_classes` keeps only the explicitly typed ones.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    pub classes: BTreeSet<Iri>,
    pub object_properties: BTreeSet<Iri>,
    pub data_properties: BTreeSet<Iri>,
    pub declared_classes: BTreeSet<Iri>,
}

impl Signature {
    pub fn of(o: &Ontology) -> Signature {
        let rdf_type = vocab::iri(vocab::RDF_TYPE);
        let owl_class = Term::Iri(vocab::iri(vocab::OWL_CLASS));
        let rdfs_class = Term::Iri(vocab::iri(vocab::RDFS_CLASS));
        let object_property = Term::Iri(vocab::iri(vocab::OWL_OBJECT_PROPERTY));
        let data_property = Term::Iri(vocab::iri(vocab::OWL_DATATYPE_PROPERTY));
        let sub_class_of = vocab::iri(vocab::RDFS_SUBCLASS_OF);
        let domain = vocab::iri(vocab::RDFS_DOMAIN);
        let range = vocab::iri(vocab::RDFS_RANGE);

        let mut sig = Signature::default();
        for t in o.triples() {
            let Term::Iri(subject) = &t.subject else { continue };
            if t.predicate == rdf_type {
                if t.object == owl_class || t.object == rdfs_class {
                    sig.declared_classes.insert(subject.clone());
                } else if t.object == object_property {
                    sig.object_properties.insert(subject.clone());
                } else if t.object == data_property {
                    sig.data_properties.insert(subject.clone());
                }
            }
        }
        sig.declared_classes.retain(|c| !vocab::is_standard(c));
        sig.classes = sig.declared_classes.clone();

        let mut add_class = |term: &Term| {
            if let Term::Iri(iri) = term {
                if !vocab::is_standard(iri) {
                    sig.classes.insert(iri.clone());
                }
            }
        };
        for t in o.triples() {
            if t.predicate == sub_class_of {
                add_class(&t.subject);
                add_class(&t.object);
            } else if t.predicate == domain {
                let declared = t.subject.as_iri().is_some_and(|s| {
                    sig.object_properties.contains(s) || sig.data_properties.contains(s)
                });
                if declared {
                    add_class(&t.object);
                }
            } else if t.predicate == range
                && t
                    .subject
                    .as_iri()
                    .is_some_and(|s| sig.object_properties.contains(s))
            {
                add_class(&t.object);
            }
        }
        sig
    }

    pub fn terms(&self, kind: TermKind) -> &BTreeSet<Iri> {
        match kind {
            TermKind::Class => &self.classes,
            TermKind::ObjectProperty => &self.object_properties,
            TermKind::DataProperty => &self.data_properties,
        }
    }

    pub fn contains(&self, term: &TermRef) -> bool {
        self.terms(term.kind).contains(&term.iri)
    }

    /// Every (term, kind) pair, ordered by kind then IRI.
    pub fn term_refs(&self) -> impl Iterator<Item = TermRef> + '_ {
        TermKind::ALL
            .into_iter()
            .flat_map(move |k| self.terms(k).iter().map(move |i| TermRef::new(i.clone(), k)))
    }

    /// Kinds under which `iri` appears.
    pub fn kinds_of(&self, iri: &Iri) -> Vec<TermKind> {
        TermKind::ALL
            .into_iter()
            .filter(|k| self.terms(*k).contains(iri))
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty() && self.object_properties.is_empty() && self.data_properties.is_empty()
    }

    pub fn len(&self) -> usize {
        self.classes.len() + self.object_properties.len() + self.data_properties.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::parse_turtle;

    fn iri(s: &str) -> Iri {
        Iri::new(s).unwrap()
    }

    #[test]
    fn book_signature() {
        let o = parse_turtle(
            "@prefix : <http://ex.org/book#> .
             :Book a owl:Class . :Author a owl:Class . :Person a owl:Class .
             :hasAuthor a owl:ObjectProperty ; rdfs:domain :Book ; rdfs:range :Author .
             :wrote a owl:ObjectProperty ; rdfs:domain :Person ; rdfs:range :Book .
             :name a owl:DatatypeProperty ; rdfs:domain :Person ; rdfs:range xsd:string .",
        )
        .unwrap();
        let sig = o.signature();
        assert_eq!(sig.classes.len(), 3);
        assert_eq!(sig.object_properties.len(), 2);
        assert_eq!(sig.data_properties.len(), 1);
    }

    #[test]
    fn inferred_classes_from_axioms() {
        let o = parse_turtle(
            "@prefix : <http://ex.org/#> .
             :A rdfs:subClassOf :B . :B rdfs:subClassOf owl:Thing .
             :p a owl:ObjectProperty ; rdfs:domain :C ; rdfs:range :D .
             :d a owl:DatatypeProperty ; rdfs:domain :E ; rdfs:range xsd:string .
             :untyped rdfs:domain :F ; rdfs:range :G .
             :X rdfs:subClassOf [ a owl:Restriction ] .",
        )
        .unwrap();
        let sig = o.signature();
        let names: Vec<_> = sig.classes.iter().map(|c| c.local_name().to_string()).collect();
        assert_eq!(names, ["A", "B", "C", "D", "E", "X"]);
        assert!(sig.declared_classes.is_empty());
    }

    #[test]
    fn dual_typed_property_in_both_sets() {
        let o = parse_turtle("<http://ex.org/p> a owl:ObjectProperty , owl:DatatypeProperty .").unwrap();
        let sig = o.signature();
        assert!(sig.object_properties.contains(&iri("http://ex.org/p")));
        assert!(sig.data_properties.contains(&iri("http://ex.org/p")));
        assert_eq!(o.diagnostics().len(), 1);
    }
}
