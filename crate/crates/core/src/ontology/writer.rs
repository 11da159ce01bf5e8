use std::fmt::Write as _;

use super::vocab;
use super::{Iri, Literal, Ontology, Term};

/// Writes `o` as Turtle.
///
/// Output is deterministic: prefixes in name order, then triples sorted by
/// subject, predicate and object, grouped per subject with `;`. Blank nodes
/// are written with their labels so a re-parse yields the same triple set.
pub fn serialize_turtle(o: &Ontology) -> String {
    let mut out = String::new();
    for (name, ns) in o.prefixes() {
        let _ = writeln!(out, "@prefix {name}: <{}> .", ns.as_str());
    }

    let mut current: Option<&Term> = None;
    for t in o.triples() {
        if current == Some(&t.subject) {
            out.push_str(" ;\n    ");
        } else {
            if current.is_some() {
                out.push_str(" .\n");
            }
            out.push('\n');
            write_term(&mut out, o, &t.subject);
            out.push(' ');
            current = Some(&t.subject);
        }
        if t.predicate.as_str() == vocab::RDF_TYPE {
            out.push('a');
        } else {
            write_iri(&mut out, o, &t.predicate);
        }
        out.push(' ');
        write_term(&mut out, o, &t.object);
    }
    if current.is_some() {
        out.push_str(" .\n");
    }
    out
}

fn write_term(out: &mut String, o: &Ontology, term: &Term) {
    match term {
        Term::Iri(iri) => write_iri(out, o, iri),
        Term::Blank(b) => {
            let _ = write!(out, "_:{}", b.0);
        }
        Term::Literal(lit) => write_literal(out, o, lit),
    }
}

fn write_iri(out: &mut String, o: &Ontology, iri: &Iri) {
    // Longest matching namespace wins; ties go to the first prefix name.
    let best = o
        .prefixes()
        .iter()
        .filter_map(|(name, ns)| {
            iri.as_str()
                .strip_prefix(ns.as_str())
                .filter(|local| is_plain_local(local))
                .map(|local| (ns.as_str().len(), name, local))
        })
        .max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(a.1)));
    match best {
        Some((_, name, local)) => {
            let _ = write!(out, "{name}:{local}");
        }
        None => {
            let _ = write!(out, "<{}>", iri.as_str());
        }
    }
}

// Conservative subset of PN_LOCAL that needs no escaping.
fn is_plain_local(local: &str) -> bool {
    let mut chars = local.chars();
    match chars.next() {
        None => true,
        Some(c) if c.is_ascii_alphanumeric() || c == '_' => {
            chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        }
        _ => false,
    }
}

fn write_literal(out: &mut String, o: &Ontology, lit: &Literal) {
    out.push('"');
    for c in lit.lexical.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04X}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    if let Some(lang) = &lit.language {
        let _ = write!(out, "@{lang}");
    } else if lit.datatype.as_str() != vocab::XSD_STRING {
        out.push_str("^^");
        write_iri(out, o, &lit.datatype);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::parse_turtle;

    #[test]
    fn empty_ontology_has_only_prefixes() {
        let text = serialize_turtle(&Ontology::new());
        assert!(text.lines().all(|l| l.starts_with("@prefix")));
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn round_trip_and_determinism() {
        let src = r#"@prefix : <http://ex.org/book#> .
            <http://ex.org/book> a owl:Ontology .
            :Book a owl:Class ; rdfs:label "Book"@en , "Li\"bro\n" .
            :A rdfs:subClassOf [ a owl:Restriction ; owl:onProperty :p ; owl:cardinality "1"^^xsd:nonNegativeInteger ] .
            :weird a owl:Class ; rdfs:seeAlso <http://other.org/x.y> , <http://ex.org/book#1-st> , <http://ex.org/book#a.b> .
            :list :p ( :A :Book ) ."#;
        let o = parse_turtle(src).unwrap();
        let text = serialize_turtle(&o);
        let again = parse_turtle(&text).unwrap();
        assert_eq!(o.triples(), again.triples(), "\n{text}");
        assert_eq!(text, serialize_turtle(&again));
    }
}
