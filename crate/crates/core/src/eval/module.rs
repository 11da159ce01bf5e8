use std::collections::BTreeSet;

use crate::ontology::{BlankNode, Iri, Ontology, Term};

use super::CoverageReport;

/// Strips every named class or property that `cr` did not match.
///
/// Triples that mention a removed term in any position go, and so does any
/// blank-node structure (restriction, list) that reaches a removed term.
/// Everything else, including the ontology header and the axioms between
/// matched terms, stays.
pub fn minimal_module(candidate: &Ontology, cr: &CoverageReport) -> Ontology {
    let keep: BTreeSet<Iri> = cr.matches.iter().map(|m| m.matched.clone()).collect();
    let removed: BTreeSet<Iri> = candidate
        .signature()
        .term_refs()
        .map(|t| t.iri)
        .filter(|i| !keep.contains(i))
        .collect();
    if removed.is_empty() {
        return candidate.clone();
    }

    let mentions_removed = |term: &Term| term.as_iri().is_some_and(|i| removed.contains(i));

    // Blank nodes that reach a removed term, closed under "subject points
    // to a tainted blank node".
    let mut tainted: BTreeSet<&BlankNode> = BTreeSet::new();
    loop {
        let before = tainted.len();
        for t in candidate.triples() {
            if let Term::Blank(b) = &t.subject {
                let reaches = mentions_removed(&t.object)
                    || removed.contains(&t.predicate)
                    || matches!(&t.object, Term::Blank(o) if tainted.contains(o));
                if reaches {
                    tainted.insert(b);
                }
            }
        }
        if tainted.len() == before {
            break;
        }
    }
    let is_tainted = |term: &Term| matches!(term, Term::Blank(b) if tainted.contains(b));

    candidate.filtered(|t| {
        !(mentions_removed(&t.subject)
            || removed.contains(&t.predicate)
            || mentions_removed(&t.object)
            || is_tainted(&t.subject)
            || is_tainted(&t.object))
    })
}
