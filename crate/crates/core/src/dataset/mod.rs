//! Evaluation cases: a user story, its competency questions, and per-question
//! gold minimal modules with validation queries.
//!
//! A case directory looks like this:
//!
//! ```text
//! manifest.yaml     story file, ordered CQ list {id, text, category}, optional paths
//! story.txt         UTF-8 narrative
//! gold/<cq>.ttl     gold minimal module
//! queries/<cq>.rq   validation SPARQL query
//! aliases.tsv       optional: gold-iri <TAB> alias1,alias2
//! ```

mod sparql;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::superfluous;
use crate::ontology::{parse_turtle, Iri, Ontology, SyntaxError, TermKind, TermRef};

pub use sparql::{extract_required_terms, query_iris, QueryError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    DataProperty,
    ObjectProperty,
    Reification,
    Restriction,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::DataProperty,
        Category::ObjectProperty,
        Category::Reification,
        Category::Restriction,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::DataProperty => "DataProperty",
            Category::ObjectProperty => "ObjectProperty",
            Category::Reification => "Reification",
            Category::Restriction => "Restriction",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Category {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown CQ category `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserStory {
    pub id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompetencyQuestion {
    pub id: String,
    pub text: String,
    pub category: Category,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldEntry {
    pub cq_id: String,
    pub gold_module: Ontology,
    pub validation_query: String,
    pub required_terms: BTreeSet<TermRef>,
}

/// Gold IRI to acceptable normalized local names.
pub type AliasMap = BTreeMap<Iri, BTreeSet<String>>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Case {
    pub story: UserStory,
    pub cqs: Vec<CompetencyQuestion>,
    pub gold: BTreeMap<String, GoldEntry>,
    pub aliases: AliasMap,
    /// CQs explicitly marked as having no gold entry.
    pub gold_less: BTreeSet<String>,
}

impl Case {
    pub fn id(&self) -> &str {
        &self.story.id
    }

    pub fn cq(&self, id: &str) -> Option<&CompetencyQuestion> {
        self.cqs.iter().find(|c| c.id == id)
    }

    pub fn categories(&self) -> BTreeMap<String, Category> {
        self.cqs.iter().map(|c| (c.id.clone(), c.category)).collect()
    }

    /// A copy restricted to the first `n` CQs.
    pub fn truncated(&self, n: usize) -> Case {
        let cqs: Vec<_> = self.cqs.iter().take(n).cloned().collect();
        let keep: BTreeSet<_> = cqs.iter().map(|c| c.id.clone()).collect();
        Case {
            story: self.story.clone(),
            gold: self
                .gold
                .iter()
                .filter(|(k, _)| keep.contains(*k))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
            gold_less: self.gold_less.intersection(&keep).cloned().collect(),
            aliases: self.aliases.clone(),
            cqs,
        }
    }
}

#[derive(Debug, Error)]
pub enum CaseError {
    #[error("missing file {0}")]
    MissingFile(PathBuf),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Syntax {
        path: PathBuf,
        #[source]
        source: SyntaxError,
    },
    #[error("{path}: {source}")]
    Query {
        path: PathBuf,
        #[source]
        source: QueryError,
    },
    #[error("CQ `{0}` is listed in the manifest but has neither a gold module nor a query")]
    DanglingReference(String),
    #[error("duplicate CQ id `{0}` in manifest")]
    DuplicateCq(String),
    #[error("{path}:{line}: {message}")]
    Alias {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    id: Option<String>,
    #[serde(default = "default_story")]
    story: String,
    cqs: Vec<ManifestCq>,
}

fn default_story() -> String {
    "story.txt".into()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestCq {
    id: String,
    text: String,
    category: Category,
    gold: Option<String>,
    query: Option<String>,
    #[serde(default)]
    gold_less: bool,
}

fn read(path: &Path) -> Result<String, CaseError> {
    fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CaseError::MissingFile(path.to_path_buf()),
        _ => CaseError::Io {
            path: path.to_path_buf(),
            source: e,
        },
    })
}

/// Loads a case directory.
pub fn load_case(dir: &Path) -> Result<Case, CaseError> {
    let manifest_path = dir.join("manifest.yaml");
    let manifest: Manifest = serde_yaml::from_str(&read(&manifest_path)?).map_err(|e| CaseError::Manifest {
        path: manifest_path.clone(),
        message: e.to_string(),
    })?;

    let id = manifest.id.clone().unwrap_or_else(|| {
        dir.file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "case".into())
    });
    let story = UserStory {
        id,
        text: read(&dir.join(&manifest.story))?.trim_end().to_string(),
    };

    let mut seen = BTreeSet::new();
    let mut cqs = Vec::new();
    let mut gold = BTreeMap::new();
    let mut gold_less = BTreeSet::new();
    for entry in manifest.cqs {
        if !seen.insert(entry.id.clone()) {
            return Err(CaseError::DuplicateCq(entry.id));
        }
        cqs.push(CompetencyQuestion {
            id: entry.id.clone(),
            text: entry.text.clone(),
            category: entry.category,
        });
        if entry.gold_less {
            gold_less.insert(entry.id.clone());
            continue;
        }
        let gold_path = dir.join(entry.gold.clone().unwrap_or_else(|| format!("gold/{}.ttl", entry.id)));
        let query_path = dir.join(entry.query.clone().unwrap_or_else(|| format!("queries/{}.rq", entry.id)));
        match (gold_path.exists(), query_path.exists()) {
            (false, false) => return Err(CaseError::DanglingReference(entry.id)),
            (false, true) => return Err(CaseError::MissingFile(gold_path)),
            (true, false) => return Err(CaseError::MissingFile(query_path)),
            (true, true) => {}
        }
        let gold_module = parse_turtle(&read(&gold_path)?).map_err(|source| CaseError::Syntax {
            path: gold_path.clone(),
            source,
        })?;
        let validation_query = read(&query_path)?;
        let required_terms =
            extract_required_terms(&validation_query, &gold_module).map_err(|source| CaseError::Query {
                path: query_path.clone(),
                source,
            })?;
        gold.insert(
            entry.id.clone(),
            GoldEntry {
                cq_id: entry.id,
                gold_module,
                validation_query,
                required_terms,
            },
        );
    }

    let alias_path = dir.join("aliases.tsv");
    let aliases = if alias_path.exists() {
        parse_aliases(&read(&alias_path)?, &alias_path)?
    } else {
        AliasMap::new()
    };

    Ok(Case {
        story,
        cqs,
        gold,
        aliases,
        gold_less,
    })
}

/// Parses `gold-iri <TAB> alias1,alias2` lines. The IRI may be wrapped in
/// angle brackets; blank lines and `#` comments are skipped. Aliases are
/// stored normalized.
pub fn parse_aliases(text: &str, path: &Path) -> Result<AliasMap, CaseError> {
    let mut map = AliasMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let err = |message: String| CaseError::Alias {
            path: path.to_path_buf(),
            line: n + 1,
            message,
        };
        let (iri, names) = line
            .split_once('\t')
            .ok_or_else(|| err("expected `iri<TAB>alias,...`".into()))?;
        let iri = iri.trim().trim_start_matches('<').trim_end_matches('>');
        let iri = Iri::new(iri).map_err(|e| err(e.to_string()))?;
        let entry = map.entry(iri).or_default();
        entry.extend(
            names
                .split(',')
                .map(normalize_name)
                .filter(|n| !n.is_empty()),
        );
    }
    Ok(map)
}

/// Lexical normalization used for name matching: camelCase is split and
/// rejoined, `-`, `_` and whitespace are dropped, and everything is
/// lowercased. `hasAuthor`, `has_author` and `Has-Author` all become
/// `hasauthor`.
pub fn normalize_name(name: &str) -> String {
    name.chars()
        .filter(|c| !matches!(c, '-' | '_') && !c.is_whitespace())
        .flat_map(char::to_lowercase)
        .collect()
}

/// One problem found by [`validate_case`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseDiagnostic {
    pub cq: Option<String>,
    pub message: String,
}

impl fmt::Display for CaseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.cq {
            Some(cq) => write!(f, "{cq}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

fn plural(n: usize, kind: TermKind) -> String {
    let noun = match (kind, n == 1) {
        (TermKind::Class, true) => "class",
        (TermKind::Class, false) => "classes",
        (TermKind::ObjectProperty, true) => "object property",
        (TermKind::ObjectProperty, false) => "object properties",
        (TermKind::DataProperty, true) => "data property",
        (TermKind::DataProperty, false) => "data properties",
    };
    format!("{n} superfluous {noun}")
}

/// Checks a case's invariants, including that each gold module is minimal
/// with respect to its own validation query. An empty result means the case
/// is sound.
pub fn validate_case(case: &Case) -> Vec<CaseDiagnostic> {
    let mut out = Vec::new();
    let mut diag = |cq: Option<&str>, message: String| {
        out.push(CaseDiagnostic {
            cq: cq.map(str::to_string),
            message,
        })
    };

    if case.story.text.trim().is_empty() {
        diag(None, "story text is empty".into());
    }
    let mut seen = BTreeSet::new();
    for cq in &case.cqs {
        if !seen.insert(&cq.id) {
            diag(Some(&cq.id), "duplicate CQ id".into());
        }
        if cq.text.trim().is_empty() {
            diag(Some(&cq.id), "CQ text is empty".into());
        }
        if !case.gold.contains_key(&cq.id) && !case.gold_less.contains(&cq.id) {
            diag(Some(&cq.id), "no gold entry and not marked gold-less".into());
        }
    }
    for id in case.gold.keys() {
        if !seen.contains(id) {
            diag(Some(id), "gold entry for a CQ not in the manifest".into());
        }
    }

    for (id, entry) in &case.gold {
        let sig = entry.gold_module.signature();
        for d in entry.gold_module.diagnostics() {
            diag(Some(id), d.to_string());
        }
        if entry.required_terms.is_empty() {
            diag(Some(id), "validation query uses no gold terms".into());
        }
        for term in &entry.required_terms {
            if !sig.contains(term) {
                diag(Some(id), format!("required term {term} is not in the gold signature"));
            }
        }
        match extract_required_terms(&entry.validation_query, &entry.gold_module) {
            Ok(terms) if terms != entry.required_terms => {
                diag(Some(id), "required terms are stale with respect to the query".into())
            }
            Ok(_) => {}
            Err(e) => diag(Some(id), format!("validation query: {e}")),
        }
        let report = superfluous(&entry.gold_module, &entry.required_terms);
        let parts: Vec<String> = TermKind::ALL
            .into_iter()
            .map(|k| (k, report.kind(k).superfluous.len()))
            .filter(|(_, n)| *n > 0)
            .map(|(k, n)| plural(n, k))
            .collect();
        if !parts.is_empty() {
            diag(Some(id), format!("gold not minimal: {}", parts.join(", ")));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization() {
        assert_eq!(normalize_name("hasAuthor"), "hasauthor");
        assert_eq!(normalize_name("has_author"), "hasauthor");
        assert_eq!(normalize_name("Has-Author"), "hasauthor");
        assert_eq!(normalize_name("author_of"), "authorof");
    }

    #[test]
    fn alias_file() {
        let map = parse_aliases(
            "# comment\n<http://ex.org/hasAuthor>\tauthorOf, writtenBy\n\nhttp://ex.org/Book\tVolume\n",
            Path::new("aliases.tsv"),
        )
        .unwrap();
        let has_author = Iri::new("http://ex.org/hasAuthor").unwrap();
        assert_eq!(
            map[&has_author],
            ["authorof".to_string(), "writtenby".to_string()].into()
        );
        assert_eq!(map.len(), 2);
        assert!(matches!(
            parse_aliases("no tab here\n", Path::new("a.tsv")),
            Err(CaseError::Alias { line: 1, .. })
        ));
    }
}
