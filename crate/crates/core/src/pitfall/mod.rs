//! Structural checks for six critical ontology pitfalls.
//!
//! Each rule is a decidable condition on the triple set:
//!
//! * **P05 wrong inverse**: `p owl:inverseOf q`, all of `domain(p)`,
//!   `range(p)`, `domain(q)`, `range(q)` are single named classes, and
//!   `domain(p) != range(q)` or `range(p) != domain(q)`. Pairs with a missing
//!   or multiple declaration are skipped.
//! * **P06 class hierarchy cycle**: a strongly connected component of the
//!   named `rdfs:subClassOf` graph with two or more classes, or a self-loop.
//! * **P19 multiple domains or ranges**: a property with more than one
//!   distinct `rdfs:domain` object or more than one distinct `rdfs:range`
//!   object (named or blank). One finding per property.
//! * **P29 wrong transitive**: an `owl:TransitiveProperty` with a single
//!   named domain `D` and range `R` where `D != R` and neither is a
//!   (reflexive-transitive) subclass of the other.
//! * **P37 ontology not available**: offline, no `owl:Ontology` header.
//!   Online, the header IRI is dereferenced with HEAD and anything other
//!   than 2xx/3xx is reported.
//! * **P39 ambiguous namespace**: no single ontology IRI, or the most common
//!   namespace of locally declared terms does not belong to it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::ontology::{vocab, Iri, Ontology, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PitfallCode {
    P05,
    P06,
    P19,
    P29,
    P37,
    P39,
}

impl PitfallCode {
    pub const ALL: [PitfallCode; 6] = [
        PitfallCode::P05,
        PitfallCode::P06,
        PitfallCode::P19,
        PitfallCode::P29,
        PitfallCode::P37,
        PitfallCode::P39,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PitfallCode::P05 => "P05",
            PitfallCode::P06 => "P06",
            PitfallCode::P19 => "P19",
            PitfallCode::P29 => "P29",
            PitfallCode::P37 => "P37",
            PitfallCode::P39 => "P39",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            PitfallCode::P05 => "Wrong inverse relationships",
            PitfallCode::P06 => "Cycles in a class hierarchy",
            PitfallCode::P19 => "Multiple domains or ranges",
            PitfallCode::P29 => "Wrong transitive relationship",
            PitfallCode::P37 => "Ontology not available",
            PitfallCode::P39 => "Ambiguous namespace",
        }
    }
}

impl fmt::Display for PitfallCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for PitfallCode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PitfallCode::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown pitfall code `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PitfallFinding {
    pub code: PitfallCode,
    pub subjects: Vec<Iri>,
    pub explanation: String,
}

/// Answers "what HTTP status does this IRI dereference to?".
pub trait OntologyProbe {
    fn status(&self, iri: &Iri) -> Result<u16, String>;
}

/// HEAD request over HTTP(S), redirects not followed.
pub struct HttpProbe {
    agent: ureq::Agent,
}

impl HttpProbe {
    pub fn new(timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .max_redirects(0)
            .build()
            .into();
        HttpProbe { agent }
    }
}

impl Default for HttpProbe {
    fn default() -> Self {
        HttpProbe::new(Duration::from_secs(10))
    }
}

impl OntologyProbe for HttpProbe {
    fn status(&self, iri: &Iri) -> Result<u16, String> {
        self.agent
            .head(iri.as_str())
            .call()
            .map(|r| r.status().as_u16())
            .map_err(|e| e.to_string())
    }
}

/// Findings plus notes about checks that could not run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ScanOutcome {
    pub findings: Vec<PitfallFinding>,
    pub notes: Vec<String>,
}

/// Runs all six detectors offline. Findings are ordered by code, then by
/// subject IRIs.
pub fn scan(o: &Ontology) -> Vec<PitfallFinding> {
    scan_with(o, None).findings
}

/// Like [`scan`], with P37 checked online through `probe` when given.
pub fn scan_with(o: &Ontology, probe: Option<&dyn OntologyProbe>) -> ScanOutcome {
    let mut out = ScanOutcome::default();
    out.findings.extend(detect_p05(o));
    out.findings.extend(detect_p06(o));
    out.findings.extend(detect_p19(o));
    out.findings.extend(detect_p29(o));
    match probe {
        Some(p) => {
            let (findings, notes) = detect_p37_online(o, p);
            out.findings.extend(findings);
            out.notes.extend(notes);
        }
        None => out.findings.extend(detect_p37(o)),
    }
    out.findings.extend(detect_p39(o));
    out.findings.sort();
    out
}

fn distinct_objects<'a>(o: &'a Ontology, subject: &'a Iri, predicate: &str) -> BTreeSet<&'a Term> {
    let predicate = vocab::iri(predicate);
    let subject = Term::Iri(subject.clone());
    o.triples()
        .iter()
        .filter(|t| t.subject == subject && t.predicate == predicate)
        .map(|t| &t.object)
        .collect()
}

fn single_named(o: &Ontology, subject: &Iri, predicate: &str) -> Option<Iri> {
    let objects = distinct_objects(o, subject, predicate);
    match objects.into_iter().collect::<Vec<_>>().as_slice() {
        [Term::Iri(iri)] => Some(iri.clone()),
        _ => None,
    }
}

fn typed_subjects(o: &Ontology, class: &str) -> BTreeSet<Iri> {
    let rdf_type = vocab::iri(vocab::RDF_TYPE);
    let class = Term::Iri(vocab::iri(class));
    o.triples()
        .iter()
        .filter(|t| t.predicate == rdf_type && t.object == class)
        .filter_map(|t| t.subject.as_iri().cloned())
        .collect()
}

fn short(iri: &Iri) -> &str {
    match iri.local_name() {
        "" => iri.as_str(),
        local => local,
    }
}

pub fn detect_p05(o: &Ontology) -> Vec<PitfallFinding> {
    let inverse_of = vocab::iri(vocab::OWL_INVERSE_OF);
    let pairs: BTreeSet<(Iri, Iri)> = o
        .triples()
        .iter()
        .filter(|t| t.predicate == inverse_of)
        .filter_map(|t| match (&t.subject, &t.object) {
            (Term::Iri(p), Term::Iri(q)) => Some(if p <= q { (p.clone(), q.clone()) } else { (q.clone(), p.clone()) }),
            _ => None,
        })
        .collect();

    let mut out = Vec::new();
    for (p, q) in pairs {
        let signature = (
            single_named(o, &p, vocab::RDFS_DOMAIN),
            single_named(o, &p, vocab::RDFS_RANGE),
            single_named(o, &q, vocab::RDFS_DOMAIN),
            single_named(o, &q, vocab::RDFS_RANGE),
        );
        let (Some(dp), Some(rp), Some(dq), Some(rq)) = signature else {
            continue;
        };
        if dp != rq || rp != dq {
            out.push(PitfallFinding {
                code: PitfallCode::P05,
                explanation: format!(
                    "{} ({} -> {}) is declared inverse of {} ({} -> {}) but the domains and ranges are not swapped",
                    short(&p),
                    short(&dp),
                    short(&rp),
                    short(&q),
                    short(&dq),
                    short(&rq)
                ),
                subjects: if p == q { vec![p] } else { vec![p, q] },
            });
        }
    }
    out
}

pub fn detect_p06(o: &Ontology) -> Vec<PitfallFinding> {
    o.subclass_graph()
        .cycles()
        .into_iter()
        .map(|cycle| PitfallFinding {
            code: PitfallCode::P06,
            explanation: format!(
                "subclass cycle through {}",
                cycle.iter().map(short).collect::<Vec<_>>().join(", ")
            ),
            subjects: cycle,
        })
        .collect()
}

pub fn detect_p19(o: &Ontology) -> Vec<PitfallFinding> {
    let domain = vocab::iri(vocab::RDFS_DOMAIN);
    let range = vocab::iri(vocab::RDFS_RANGE);
    let properties: BTreeSet<Iri> = o
        .triples()
        .iter()
        .filter(|t| t.predicate == domain || t.predicate == range)
        .filter_map(|t| t.subject.as_iri().cloned())
        .collect();

    let mut out = Vec::new();
    for p in properties {
        let domains = distinct_objects(o, &p, vocab::RDFS_DOMAIN).len();
        let ranges = distinct_objects(o, &p, vocab::RDFS_RANGE).len();
        let mut parts = Vec::new();
        if domains > 1 {
            parts.push(format!("{domains} domains"));
        }
        if ranges > 1 {
            parts.push(format!("{ranges} ranges"));
        }
        if !parts.is_empty() {
            out.push(PitfallFinding {
                code: PitfallCode::P19,
                explanation: format!("{} has {} (read as an intersection)", short(&p), parts.join(" and ")),
                subjects: vec![p],
            });
        }
    }
    out
}

pub fn detect_p29(o: &Ontology) -> Vec<PitfallFinding> {
    let graph = o.subclass_graph();
    let mut out = Vec::new();
    for p in typed_subjects(o, vocab::OWL_TRANSITIVE_PROPERTY) {
        let (Some(d), Some(r)) = (
            single_named(o, &p, vocab::RDFS_DOMAIN),
            single_named(o, &p, vocab::RDFS_RANGE),
        ) else {
            continue;
        };
        if d != r && !graph.reaches(&d, &r) && !graph.reaches(&r, &d) {
            out.push(PitfallFinding {
                code: PitfallCode::P29,
                explanation: format!(
                    "{} is transitive but links {} to the unrelated {}",
                    short(&p),
                    short(&d),
                    short(&r)
                ),
                subjects: vec![p],
            });
        }
    }
    out
}

pub fn detect_p37(o: &Ontology) -> Vec<PitfallFinding> {
    if o.header_subjects().is_empty() {
        vec![PitfallFinding {
            code: PitfallCode::P37,
            subjects: vec![],
            explanation: "no owl:Ontology header, so there is nothing to dereference".into(),
        }]
    } else {
        vec![]
    }
}

/// P37 with a dereference check. Probe failures become notes, never
/// findings.
pub fn detect_p37_online(o: &Ontology, probe: &dyn OntologyProbe) -> (Vec<PitfallFinding>, Vec<String>) {
    let offline = detect_p37(o);
    if !offline.is_empty() {
        return (offline, vec![]);
    }
    let Some(iri) = o.ontology_iri() else {
        return (vec![], vec!["P37 not checked: no single ontology IRI".into()]);
    };
    match probe.status(iri) {
        Ok(status) if (200..400).contains(&status) => (vec![], vec![]),
        Ok(status) => (
            vec![PitfallFinding {
                code: PitfallCode::P37,
                subjects: vec![iri.clone()],
                explanation: format!("{iri} answered HTTP {status}"),
            }],
            vec![],
        ),
        Err(e) => (vec![], vec![format!("P37 not checked for {iri}: {e}")]),
    }
}

fn namespace_matches(ns: &str, ontology_iri: &Iri) -> bool {
    let trim = |s: &str| s.trim_end_matches(['#', '/']).to_string();
    trim(ns) == trim(ontology_iri.as_str()) || ns == ontology_iri.namespace()
}

pub fn detect_p39(o: &Ontology) -> Vec<PitfallFinding> {
    let Some(onto) = o.ontology_iri() else {
        return vec![PitfallFinding {
            code: PitfallCode::P39,
            subjects: vec![],
            explanation: "no single ontology IRI declares the namespace".into(),
        }];
    };
    let rdf_type = vocab::iri(vocab::RDF_TYPE);
    let headers = o.header_subjects();
    let defined: BTreeSet<&Iri> = o
        .triples()
        .iter()
        .filter(|t| t.predicate == rdf_type && !headers.contains(&t.subject))
        .filter_map(|t| t.subject.as_iri())
        .filter(|i| !vocab::is_standard(i))
        .collect();
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for iri in &defined {
        *counts.entry(iri.namespace()).or_default() += 1;
    }
    let Some(&top) = counts.values().max() else {
        return vec![];
    };
    let majority: Vec<&str> = counts.iter().filter(|(_, n)| **n == top).map(|(ns, _)| *ns).collect();
    if majority.iter().any(|ns| namespace_matches(ns, onto)) {
        return vec![];
    }
    vec![PitfallFinding {
        code: PitfallCode::P39,
        subjects: vec![onto.clone()],
        explanation: format!(
            "{top} of {} declared terms live in {} rather than under {onto}",
            defined.len(),
            majority.join(" / ")
        ),
    }]
}

/// Number of findings per code, with every code present.
pub fn count_by_code(findings: &[PitfallFinding]) -> BTreeMap<PitfallCode, usize> {
    let mut counts: BTreeMap<PitfallCode, usize> = PitfallCode::ALL.into_iter().map(|c| (c, 0)).collect();
    for f in findings {
        *counts.entry(f.code).or_default() += 1;
    }
    counts
}

/// `code,subject,explanation` CSV with one row per finding; multiple
/// subjects are joined with spaces.
pub fn findings_csv(findings: &[PitfallFinding]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["code", "subject", "explanation"]).expect("in-memory write");
    for f in findings {
        let subjects = f.subjects.iter().map(Iri::as_str).collect::<Vec<_>>().join(" ");
        w.write_record([f.code.as_str(), &subjects, &f.explanation])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV is UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::parse_turtle;

    const HEAD: &str = "@prefix : <http://ex.org/o#> .\n<http://ex.org/o> a owl:Ontology .\n";

    fn onto(body: &str) -> Ontology {
        parse_turtle(&format!("{HEAD}{body}")).unwrap()
    }

    fn codes(o: &Ontology) -> Vec<PitfallCode> {
        scan(o).into_iter().map(|f| f.code).collect()
    }

    #[test]
    fn p19_rules() {
        assert_eq!(detect_p19(&onto(":p rdfs:domain :A , :B .")).len(), 1);
        assert!(detect_p19(&onto(":p rdfs:domain :A . :p rdfs:domain :A .")).is_empty());
        let both = detect_p19(&onto(":p rdfs:domain :A , :B ; rdfs:range :C , :D ."));
        assert_eq!(both.len(), 1);
        assert!(both[0].explanation.contains("2 domains and 2 ranges"));
        assert_eq!(detect_p19(&onto(":p rdfs:range [ owl:unionOf ( :A :B ) ] , :C .")).len(), 1);
    }

    #[test]
    fn p06_rules() {
        assert_eq!(detect_p06(&onto(":A rdfs:subClassOf :B . :B rdfs:subClassOf :A .")).len(), 1);
        assert_eq!(detect_p06(&onto(":A rdfs:subClassOf :A .")).len(), 1);
        assert!(detect_p06(&onto(":A rdfs:subClassOf :B . :B rdfs:subClassOf :C .")).is_empty());
    }

    #[test]
    fn p05_rules() {
        let props = |q_domain: &str| {
            format!(
                ":A a owl:Class . :B a owl:Class .\n:p rdfs:domain :A ; rdfs:range :B .\n{q_domain}\n:p owl:inverseOf :q ."
            )
        };
        assert!(detect_p05(&onto(&props(":q rdfs:domain :B ; rdfs:range :A ."))).is_empty());
        assert_eq!(detect_p05(&onto(&props(":q rdfs:domain :A ; rdfs:range :B ."))).len(), 1);
        assert!(detect_p05(&onto(&props(":q rdfs:range :B ."))).is_empty());
        // Declared in both directions: still one pair.
        let both = onto(&(props(":q rdfs:domain :A ; rdfs:range :B .") + "\n:q owl:inverseOf :p ."));
        assert_eq!(detect_p05(&both).len(), 1);
    }

    #[test]
    fn p29_rules() {
        let t = |body: &str| detect_p29(&onto(&format!(":p a owl:TransitiveProperty .\n{body}")));
        assert!(t(":p rdfs:domain :City ; rdfs:range :City .").is_empty());
        assert_eq!(t(":p rdfs:domain :Person ; rdfs:range :Event .").len(), 1);
        assert!(t(":p rdfs:domain :Manager ; rdfs:range :Employee . :Manager rdfs:subClassOf :Employee .").is_empty());
        assert!(t(":p rdfs:domain :A .").is_empty());
    }

    #[test]
    fn p37_and_p39_on_empty_ontology() {
        assert_eq!(codes(&Ontology::new()), [PitfallCode::P37, PitfallCode::P39]);
    }

    #[test]
    fn p39_rules() {
        let clean = parse_turtle(
            "<http://ex.org/onto> a owl:Ontology . <http://ex.org/onto#A> a owl:Class . <http://ex.org/onto#p> a owl:ObjectProperty .",
        )
        .unwrap();
        assert!(detect_p39(&clean).is_empty());

        let mut body = String::from("<http://a/> a owl:Ontology .\n<http://a/X> a owl:Class .\n");
        for i in 0..9 {
            body.push_str(&format!("<http://b/C{i}> a owl:Class .\n"));
        }
        assert_eq!(detect_p39(&parse_turtle(&body).unwrap()).len(), 1);
        assert_eq!(detect_p39(&parse_turtle("<http://ex.org/A> a owl:Class .").unwrap()).len(), 1);
    }

    struct Fixed(Result<u16, String>);
    impl OntologyProbe for Fixed {
        fn status(&self, _: &Iri) -> Result<u16, String> {
            self.0.clone()
        }
    }

    #[test]
    fn p37_online() {
        let o = onto(":A a owl:Class .");
        assert!(detect_p37(&o).is_empty());
        let (f, notes) = detect_p37_online(&o, &Fixed(Ok(404)));
        assert_eq!(f.len(), 1);
        assert!(notes.is_empty());
        assert!(detect_p37_online(&o, &Fixed(Ok(301))).0.is_empty());
        let (f, notes) = detect_p37_online(&o, &Fixed(Err("connection refused".into())));
        assert!(f.is_empty());
        assert_eq!(notes.len(), 1);
    }

    #[test]
    fn csv_output() {
        let csv = findings_csv(&detect_p19(&onto(":p rdfs:domain :A , :B .")));
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("code,subject,explanation"));
        assert!(lines.next().unwrap().starts_with("P19,http://ex.org/o#p,"));
    }
}
