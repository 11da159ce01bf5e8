//! Syntactic term extraction from validation SPARQL queries.
//!
//! This is a token walk, not a SPARQL algebra: every IRI or prefixed name
//! that appears after the prologue (triple patterns, FILTER and BIND
//! expressions alike) is collected.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::ontology::{vocab, Iri, Ontology, TermRef};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("query syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("query term {0} is neither in the gold signature nor standard vocabulary")]
    UnclassifiableTerm(Iri),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Iri(String),
    PName(String, String),
    Var,
    Word(String),
    Literal,
    Punct(char),
}

fn syntax(offset: usize, message: impl Into<String>) -> QueryError {
    QueryError::Syntax {
        offset,
        message: message.into(),
    }
}

fn tokenize(query: &str) -> Result<Vec<(Tok, usize)>, QueryError> {
    let chars: Vec<(usize, char)> = query.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (off, c) = chars[i];
        match c {
            c if c.is_whitespace() => i += 1,
            '#' => {
                while i < chars.len() && chars[i].1 != '\n' {
                    i += 1;
                }
            }
            '<' => {
                // An IRI reference has no whitespace before its closing `>`;
                // otherwise this is a comparison operator.
                let mut j = i + 1;
                while j < chars.len() && !chars[j].1.is_whitespace() && chars[j].1 != '>' && chars[j].1 != '<' {
                    j += 1;
                }
                if j < chars.len() && chars[j].1 == '>' && j > i + 1 {
                    let iri: String = chars[i + 1..j].iter().map(|(_, c)| c).collect();
                    out.push((Tok::Iri(iri), off));
                    i = j + 1;
                } else {
                    out.push((Tok::Punct('<'), off));
                    i += 1;
                }
            }
            '?' | '$' => {
                i += 1;
                while i < chars.len() && (chars[i].1.is_alphanumeric() || chars[i].1 == '_') {
                    i += 1;
                }
                out.push((Tok::Var, off));
            }
            '"' | '\'' => {
                let quote = c;
                let long = i + 2 < chars.len() && chars[i + 1].1 == quote && chars[i + 2].1 == quote;
                i += if long { 3 } else { 1 };
                loop {
                    if i >= chars.len() {
                        return Err(syntax(off, "unterminated string literal"));
                    }
                    let c = chars[i].1;
                    if c == '\\' {
                        i += 2;
                        continue;
                    }
                    if c == quote {
                        if !long {
                            i += 1;
                            break;
                        }
                        if i + 2 < chars.len() && chars[i + 1].1 == quote && chars[i + 2].1 == quote {
                            i += 3;
                            break;
                        }
                    }
                    i += 1;
                }
                // Language tag; a `^^` datatype is lexed as ordinary tokens.
                if i < chars.len() && chars[i].1 == '@' {
                    i += 1;
                    while i < chars.len() && (chars[i].1.is_ascii_alphanumeric() || chars[i].1 == '-') {
                        i += 1;
                    }
                }
                out.push((Tok::Literal, off));
            }
            c if c.is_alphanumeric() || c == '_' || c == ':' => {
                let mut j = i;
                while j < chars.len() {
                    let d = chars[j].1;
                    let inner_dot = d == '.'
                        && j + 1 < chars.len()
                        && (chars[j + 1].1.is_alphanumeric() || chars[j + 1].1 == '_');
                    if d.is_alphanumeric() || matches!(d, '_' | '-' | ':' | '%') || inner_dot {
                        j += 1;
                    } else {
                        break;
                    }
                }
                let word: String = chars[i..j].iter().map(|(_, c)| c).collect();
                i = j;
                if let Some((p, l)) = word.split_once(':') {
                    out.push((Tok::PName(p.to_string(), l.to_string()), off));
                } else if word.chars().next().is_some_and(|c| c.is_ascii_digit()) {
                    out.push((Tok::Literal, off));
                } else {
                    out.push((Tok::Word(word), off));
                }
            }
            c => {
                out.push((Tok::Punct(c), off));
                i += 1;
            }
        }
    }
    Ok(out)
}

/// Every IRI mentioned in the query body, resolved against the query's own
/// prologue first, then against `fallback` prefixes.
pub fn query_iris(query: &str, fallback: &BTreeMap<String, Iri>) -> Result<BTreeSet<Iri>, QueryError> {
    let toks = tokenize(query)?;
    let mut prefixes = vocab::standard_prefixes();
    prefixes.extend(fallback.iter().map(|(k, v)| (k.clone(), v.clone())));
    let mut base: Option<String> = None;

    let mut at = 0;
    loop {
        match toks.get(at) {
            Some((Tok::Word(w), off)) if w.eq_ignore_ascii_case("prefix") => {
                let off = *off;
                let (Some((Tok::PName(name, local), _)), Some((Tok::Iri(ns), _))) = (toks.get(at + 1), toks.get(at + 2)) else {
                    return Err(syntax(off, "malformed PREFIX declaration"));
                };
                if !local.is_empty() {
                    return Err(syntax(off, "prefix name must end with `:`"));
                }
                let ns = Iri::new(ns.clone()).map_err(|e| syntax(off, e.to_string()))?;
                prefixes.insert(name.clone(), ns);
                at += 3;
            }
            Some((Tok::Word(w), off)) if w.eq_ignore_ascii_case("base") => {
                let Some((Tok::Iri(b), _)) = toks.get(at + 1) else {
                    return Err(syntax(*off, "malformed BASE declaration"));
                };
                base = Some(b.clone());
                at += 2;
            }
            _ => break,
        }
    }

    match toks.get(at) {
        Some((Tok::Word(w), _))
            if ["select", "ask", "construct", "describe"]
                .iter()
                .any(|k| w.eq_ignore_ascii_case(k)) => {}
        Some((_, off)) => return Err(syntax(*off, "expected SELECT, ASK, CONSTRUCT or DESCRIBE")),
        None => return Err(syntax(query.len(), "empty query")),
    }

    let mut depth: Vec<char> = Vec::new();
    let mut saw_group = false;
    let mut iris = BTreeSet::new();
    for (tok, off) in &toks[at..] {
        match tok {
            Tok::Punct(open @ ('{' | '(' | '[')) => {
                if *open == '{' {
                    saw_group = true;
                }
                depth.push(*open);
            }
            Tok::Punct(close @ ('}' | ')' | ']')) => {
                let want = match close {
                    '}' => '{',
                    ')' => '(',
                    _ => '[',
                };
                if depth.pop() != Some(want) {
                    return Err(syntax(*off, format!("unbalanced `{close}`")));
                }
            }
            Tok::Iri(raw) => {
                let resolved = match (Iri::new(raw.clone()), &base) {
                    (Ok(iri), _) => iri,
                    (Err(_), Some(b)) => Iri::new(format!("{b}{raw}")).map_err(|e| syntax(*off, e.to_string()))?,
                    (Err(e), None) => return Err(syntax(*off, e.to_string())),
                };
                iris.insert(resolved);
            }
            Tok::PName(p, l) => {
                let ns = prefixes
                    .get(p)
                    .ok_or_else(|| syntax(*off, format!("undeclared prefix `{p}:`")))?;
                let iri = Iri::new(format!("{}{l}", ns.as_str())).map_err(|e| syntax(*off, e.to_string()))?;
                iris.insert(iri);
            }
            Tok::Word(_) | Tok::Var | Tok::Literal | Tok::Punct(_) => {}
        }
    }
    if let Some(open) = depth.last() {
        return Err(syntax(query.len(), format!("unclosed `{open}`")));
    }
    if !saw_group {
        return Err(syntax(query.len(), "query has no group graph pattern"));
    }
    Ok(iris)
}

/// Terms of `gold` that a validation query needs, classified by the kind
/// they carry in the gold signature. Standard vocabulary is ignored.
pub fn extract_required_terms(query: &str, gold: &Ontology) -> Result<BTreeSet<TermRef>, QueryError> {
    let sig = gold.signature();
    let mut out = BTreeSet::new();
    for iri in query_iris(query, gold.prefixes())? {
        if vocab::is_standard(&iri) {
            continue;
        }
        let kinds = sig.kinds_of(&iri);
        if kinds.is_empty() {
            return Err(QueryError::UnclassifiableTerm(iri));
        }
        out.extend(kinds.into_iter().map(|k| TermRef::new(iri.clone(), k)));
    }
    Ok(out)
}
