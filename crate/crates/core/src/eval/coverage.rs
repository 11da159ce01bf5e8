use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dataset::{normalize_name, AliasMap, GoldEntry};
use crate::ontology::{Iri, Ontology, Signature, TermKind, TermRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMethod {
    Exact,
    Normalized,
    Alias,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermMatch {
    pub required: TermRef,
    pub matched: Iri,
    pub method: MatchMethod,
}

/// How the required terms of one CQ are covered by a candidate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub cq_id: String,
    pub matches: Vec<TermMatch>,
    pub missing: Vec<TermRef>,
    /// Candidate terms bound to more than one required term.
    pub duplicate_bindings: Vec<Iri>,
}

impl CoverageReport {
    /// Matched candidate terms, with the kind of the requirement they meet.
    pub fn matched_terms(&self) -> BTreeSet<TermRef> {
        self.matches
            .iter()
            .map(|m| TermRef::new(m.matched.clone(), m.required.kind))
            .collect()
    }
}

/// Matches every required term of `entry` against `candidate`.
///
/// Rules, first hit wins: exact IRI, normalized local name, alias. Kinds
/// must agree: a class only matches a class and a property only a property
/// of the same kind.
pub fn coverage(candidate: &Ontology, entry: &GoldEntry, aliases: &AliasMap) -> CoverageReport {
    coverage_with_signature(&candidate.signature(), &entry.cq_id, &entry.required_terms, aliases)
}

pub fn coverage_with_signature(
    sig: &Signature,
    cq_id: &str,
    required: &BTreeSet<TermRef>,
    aliases: &AliasMap,
) -> CoverageReport {
    let mut matches = Vec::new();
    let mut missing = Vec::new();
    for req in required {
        let pool = sig.terms(req.kind);
        let hit = if pool.contains(&req.iri) {
            Some((req.iri.clone(), MatchMethod::Exact))
        } else {
            let wanted = normalize_name(req.iri.local_name());
            pool.iter()
                .find(|c| !wanted.is_empty() && normalize_name(c.local_name()) == wanted)
                .map(|c| (c.clone(), MatchMethod::Normalized))
                .or_else(|| {
                    let names = aliases.get(&req.iri)?;
                    pool.iter()
                        .find(|c| names.contains(&normalize_name(c.local_name())))
                        .map(|c| (c.clone(), MatchMethod::Alias))
                })
        };
        match hit {
            Some((matched, method)) => matches.push(TermMatch {
                required: req.clone(),
                matched,
                method,
            }),
            None => missing.push(req.clone()),
        }
    }

    let mut bindings: BTreeMap<&Iri, usize> = BTreeMap::new();
    for m in &matches {
        *bindings.entry(&m.matched).or_default() += 1;
    }
    let duplicate_bindings = bindings
        .into_iter()
        .filter(|(_, n)| *n > 1)
        .map(|(i, _)| i.clone())
        .collect();

    CoverageReport {
        cq_id: cq_id.to_string(),
        matches,
        missing,
        duplicate_bindings,
    }
}

/// Union of matched candidate terms over several reports, used as the
/// "used" set for superfluous-element analysis.
pub fn used_terms<'a>(reports: impl IntoIterator<Item = &'a CoverageReport>) -> BTreeSet<TermRef> {
    reports.into_iter().flat_map(|r| r.matched_terms()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CqStatus {
    Modelled,
    MinorIssue,
    NotModelled,
}

impl CqStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CqStatus::Modelled => "Modelled",
            CqStatus::MinorIssue => "MinorIssue",
            CqStatus::NotModelled => "NotModelled",
        }
    }
}

impl fmt::Display for CqStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for CqStatus {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [CqStatus::Modelled, CqStatus::MinorIssue, CqStatus::NotModelled]
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown CQ status `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CqVerdict {
    pub cq_id: String,
    pub status: CqStatus,
    pub missing_count: usize,
    pub missing_kinds: Vec<TermKind>,
}

/// A CQ is modelled when nothing is missing, and has a minor issue when the
/// only gap is a single object or data property.
pub fn classify(cr: &CoverageReport) -> CqVerdict {
    let status = match cr.missing.as_slice() {
        [] => CqStatus::Modelled,
        [only] if only.kind.is_property() => CqStatus::MinorIssue,
        _ => CqStatus::NotModelled,
    };
    CqVerdict {
        cq_id: cr.cq_id.clone(),
        status,
        missing_count: cr.missing.len(),
        missing_kinds: cr.missing.iter().map(|t| t.kind).collect(),
    }
}
