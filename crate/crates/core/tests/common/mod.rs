//! Fixture paths, strategies and brute-force oracles shared by the
//! integration tests. Oracles are written from the rule definitions and do
//! not call the library code they check.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use ontodraft::dataset::{load_case, AliasMap, Case};
use ontodraft::eval::CqStatus;
use ontodraft::ontology::{parse_turtle, Iri, Literal, Ontology, Term, TermKind, TermRef, Triple};
use proptest::prelude::*;

pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
pub const OWL: &str = "http://www.w3.org/2002/07/owl#";
pub const RDFS: &str = "http://www.w3.org/2000/01/rdf-schema#";

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn case(name: &str) -> Case {
    load_case(&fixtures().join("cases").join(name)).expect("fixture case loads")
}

pub fn ttl(rel: &str) -> Ontology {
    let text = std::fs::read_to_string(fixtures().join(rel)).expect("fixture exists");
    parse_turtle(&text).expect("fixture parses")
}

pub fn iri(s: &str) -> Iri {
    Iri::new(s).unwrap()
}

/// Every `.ttl` under `dir`, sorted.
pub fn ttl_files(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|e| e == "ttl") {
                out.push(p);
            }
        }
    }
    out.sort();
    out
}

// ---------------------------------------------------------------- kappa

/// Cohen's kappa from an explicit confusion matrix.
pub fn kappa_oracle(a: &[&str], b: &[&str]) -> f64 {
    let labels: Vec<&str> = a.iter().chain(b).copied().collect::<BTreeSet<_>>().into_iter().collect();
    let k = labels.len();
    let idx = |x: &str| labels.iter().position(|l| *l == x).unwrap();
    let mut m = vec![vec![0f64; k]; k];
    for (x, y) in a.iter().zip(b) {
        m[idx(x)][idx(y)] += 1.0;
    }
    let n = a.len() as f64;
    let diag: f64 = (0..k).map(|i| m[i][i]).sum();
    let row = |i: usize| m[i].iter().sum::<f64>();
    let col = |j: usize| (0..k).map(|i| m[i][j]).sum::<f64>();
    let pe: f64 = (0..k).map(|i| row(i) * col(i)).sum::<f64>() / (n * n);
    let po = diag / n;
    if pe >= 1.0 {
        1.0
    } else {
        (po - pe) / (1.0 - pe)
    }
}

// ---------------------------------------------------------------- cycles

/// Nodes lying on a directed cycle, found by enumerating every simple path
/// of length at most `n` from each node and checking whether it can step
/// back to its start.
pub fn nodes_on_cycles(n: usize, edges: &BTreeSet<(usize, usize)>) -> BTreeSet<usize> {
    fn walk(start: usize, at: usize, depth: usize, n: usize, edges: &BTreeSet<(usize, usize)>, seen: &mut Vec<bool>) -> bool {
        for &(a, b) in edges {
            if a != at {
                continue;
            }
            if b == start {
                return true;
            }
            if depth < n && !seen[b] {
                seen[b] = true;
                let hit = walk(start, b, depth + 1, n, edges, seen);
                seen[b] = false;
                if hit {
                    return true;
                }
            }
        }
        false
    }
    (0..n)
        .filter(|&s| {
            let mut seen = vec![false; n];
            seen[s] = true;
            walk(s, s, 1, n, edges, &mut seen)
        })
        .collect()
}

pub fn class_iri(i: usize) -> Iri {
    iri(&format!("http://ex.org/g#C{i}"))
}

/// An ontology declaring classes `0..n` with the given subclass edges.
pub fn class_graph_ontology(n: usize, edges: &BTreeSet<(usize, usize)>) -> Ontology {
    let ty = iri(RDF_TYPE);
    let class = Term::Iri(iri(&format!("{OWL}Class")));
    let sub = iri(&format!("{RDFS}subClassOf"));
    let mut triples: Vec<Triple> = (0..n).map(|i| Triple::new(class_iri(i), ty.clone(), class.clone())).collect();
    triples.extend(edges.iter().map(|&(a, b)| Triple::new(class_iri(a), sub.clone(), class_iri(b))));
    Ontology::from_triples(triples)
}

/// Random graphs of up to 12 classes: a DAG part (edges only from lower to
/// higher index) plus up to three injected edges in any direction.
pub fn class_graph() -> impl Strategy<Value = (usize, BTreeSet<(usize, usize)>)> {
    (1usize..=12).prop_flat_map(|n| {
        let dag = prop::collection::vec((0..n, 0..n), 0..24)
            .prop_map(|v| v.into_iter().filter(|(a, b)| a < b).collect::<Vec<_>>());
        let injected = prop::collection::vec((0..n, 0..n), 0..=3);
        (Just(n), dag, injected, any::<bool>()).prop_map(|(n, dag, injected, inject)| {
            let mut edges: BTreeSet<(usize, usize)> = dag.into_iter().collect();
            if inject {
                edges.extend(injected);
            }
            (n, edges)
        })
    })
}

// ---------------------------------------------------------------- classification

fn typed(o: &Ontology, subject: &Iri, class: &str) -> bool {
    o.triples().iter().any(|t| {
        t.subject == Term::Iri(subject.clone()) && t.predicate.as_str() == RDF_TYPE && t.object == Term::Iri(iri(class))
    })
}

fn is_standard(i: &Iri) -> bool {
    ["http://www.w3.org/1999/02/22-rdf-syntax-ns#", RDFS, OWL, "http://www.w3.org/2001/XMLSchema#"]
        .iter()
        .any(|ns| i.as_str().starts_with(ns))
}

/// Named IRIs that `o` uses as `kind`: properties by explicit declaration;
/// classes by declaration, by either end of a subclass axiom, as the domain
/// of a declared property, or as the range of an object property.
pub fn oracle_terms(o: &Ontology, kind: TermKind) -> BTreeSet<Iri> {
    let object_property = format!("{OWL}ObjectProperty");
    let data_property = format!("{OWL}DatatypeProperty");
    let mut out = BTreeSet::new();
    for t in o.triples() {
        let subject = t.subject.as_iri();
        let object = t.object.as_iri();
        let p = t.predicate.as_str();
        match kind {
            TermKind::ObjectProperty | TermKind::DataProperty => {
                let wanted = if kind == TermKind::ObjectProperty { &object_property } else { &data_property };
                if p == RDF_TYPE && object.is_some_and(|c| c.as_str() == wanted) {
                    out.extend(subject.cloned());
                }
            }
            TermKind::Class => {
                let declared = p == RDF_TYPE
                    && object.is_some_and(|c| c.as_str() == format!("{OWL}Class") || c.as_str() == format!("{RDFS}Class"));
                if declared {
                    out.extend(subject.cloned());
                }
                if p == format!("{RDFS}subClassOf") {
                    out.extend(subject.cloned());
                    out.extend(object.cloned());
                }
                let owner_is = |class: &str| subject.is_some_and(|s| typed(o, s, class));
                if p == format!("{RDFS}domain") && (owner_is(&object_property) || owner_is(&data_property)) {
                    out.extend(object.cloned());
                }
                if p == format!("{RDFS}range") && owner_is(&object_property) {
                    out.extend(object.cloned());
                }
            }
        }
    }
    out.retain(|i| !is_standard(i));
    out
}

fn squash(name: &str) -> String {
    name.chars()
        .filter(|c| *c != '-' && *c != '_' && !c.is_whitespace())
        .collect::<String>()
        .to_lowercase()
}

fn local(i: &Iri) -> &str {
    let s = i.as_str();
    let cut = s.rfind(['#', '/']).or_else(|| s.rfind(':')).map_or(0, |p| p + 1);
    &s[cut..]
}

type Pools = BTreeMap<TermKind, BTreeSet<Iri>>;

fn pools(o: &Ontology) -> Pools {
    [TermKind::Class, TermKind::ObjectProperty, TermKind::DataProperty]
        .into_iter()
        .map(|k| (k, oracle_terms(o, k)))
        .collect()
}

/// Whether the pools provide `term`: the same IRI, a term of the same kind
/// whose local name squashes to the same string, or one named by an alias.
fn provides(pools: &Pools, term: &TermRef, aliases: &AliasMap) -> bool {
    let pool = &pools[&term.kind];
    let wanted = squash(local(&term.iri));
    pool.contains(&term.iri)
        || pool.iter().any(|c| !wanted.is_empty() && squash(local(c)) == wanted)
        || aliases
            .get(&term.iri)
            .is_some_and(|names| pool.iter().any(|c| names.contains(&squash(local(c)))))
}

pub fn oracle_has(o: &Ontology, term: &TermRef, aliases: &AliasMap) -> bool {
    provides(&pools(o), term, aliases)
}

/// Modelled if every required term is provided; a minor issue if adding a
/// single required property to the vocabulary makes it modelled; otherwise
/// not modelled.
pub fn oracle_classify(candidate: &Ontology, required: &BTreeSet<TermRef>, aliases: &AliasMap) -> CqStatus {
    let modelled = |p: &Pools| required.iter().all(|t| provides(p, t, aliases));
    let base = pools(candidate);
    if modelled(&base) {
        return CqStatus::Modelled;
    }
    let fixed_by_one = required
        .iter()
        .filter(|t| matches!(t.kind, TermKind::ObjectProperty | TermKind::DataProperty))
        .any(|t| {
            let mut p = base.clone();
            p.get_mut(&t.kind).unwrap().insert(t.iri.clone());
            modelled(&p)
        });
    if fixed_by_one {
        CqStatus::MinorIssue
    } else {
        CqStatus::NotModelled
    }
}

// ---------------------------------------------------------------- random ontologies

/// Small ontologies over a fixed vocabulary of five IRIs, two blank nodes
/// and two literals, with up to `max` triples.
pub fn small_ontology(max: usize) -> impl Strategy<Value = Ontology> {
    let names = ["A", "B", "C", "p", "q"];
    let node = prop_oneof![
        (0..names.len()).prop_map(move |i| Term::Iri(iri(&format!("http://ex.org/r#{}", names[i])))),
        (0..2usize).prop_map(|i| Term::Blank(ontodraft::ontology::BlankNode(format!("n{i}")))),
    ];
    let object = prop_oneof![
        4 => node.clone(),
        1 => prop_oneof![Just(Literal::string("x")), Just(Literal::lang("y", "en"))].prop_map(Term::Literal),
    ];
    let predicate = prop_oneof![
        Just(iri(RDF_TYPE)),
        Just(iri(&format!("{RDFS}subClassOf"))),
        Just(iri(&format!("{RDFS}domain"))),
        Just(iri("http://ex.org/r#p")),
    ];
    prop::collection::vec((node, predicate, object), 0..=max)
        .prop_map(|v| Ontology::from_triples(v.into_iter().map(|(s, p, o)| Triple::new(s, p, o))))
}

pub fn triple_set(o: &Ontology) -> BTreeSet<Triple> {
    o.triples().clone()
}

/// Count of verdict statuses, keyed by status name.
pub fn status_counts(statuses: &[CqStatus]) -> BTreeMap<&'static str, usize> {
    let mut m = BTreeMap::new();
    for s in statuses {
        *m.entry(s.as_str()).or_default() += 1;
    }
    m
}

// ---------------------------------------------------------------- local HTTP

/// Serves one canned `(status, body)` reply per connection, in order, on a
/// loopback port. Returns the base URL and a handle yielding the request
/// lines received.
pub fn serve(replies: Vec<(u16, String)>) -> (String, std::thread::JoinHandle<Vec<String>>) {
    use std::io::{BufRead, BufReader, Read, Write};
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    let handle = std::thread::spawn(move || {
        let mut seen = Vec::new();
        for (status, body) in replies {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut request_line = String::new();
            reader.read_line(&mut request_line).unwrap();
            let mut length = 0usize;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line.trim().is_empty() {
                    break;
                }
                if let Some((k, v)) = line.split_once(':') {
                    if k.eq_ignore_ascii_case("content-length") {
                        length = v.trim().parse().unwrap();
                    }
                }
            }
            let mut payload = vec![0; length];
            reader.read_exact(&mut payload).unwrap();
            seen.push(request_line.trim().to_string());
            let mut stream = stream;
            write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
            stream.flush().unwrap();
        }
        seen
    });
    (url, handle)
}
