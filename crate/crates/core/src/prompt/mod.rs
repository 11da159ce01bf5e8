//! Prompt rendering for the Memoryless CQbyCQ and Ontogenia techniques.
//!
//! Wording lives in section files under `templates/<technique>/NN_label.txt`.
//! The bundled set is compiled in; [`PromptTemplates::load`] reads a
//! replacement directory with the same layout. Lines starting with `#!` are
//! template comments and are dropped.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Case, CompetencyQuestion, UserStory};
use crate::ontology::{parse_turtle, serialize_turtle, Ontology};

/// Namespace the bundled Turtle primer tells the model to use.
pub const PROMPT_NAMESPACE: &str = "http://example.org/ontology#";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Technique {
    #[serde(rename = "memoryless")]
    MemorylessCQbyCQ,
    #[serde(rename = "ontogenia")]
    Ontogenia,
}

impl Technique {
    pub const ALL: [Technique; 2] = [Technique::MemorylessCQbyCQ, Technique::Ontogenia];

    pub fn as_str(self) -> &'static str {
        match self {
            Technique::MemorylessCQbyCQ => "memoryless",
            Technique::Ontogenia => "ontogenia",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Technique::MemorylessCQbyCQ => "Memoryless CQbyCQ",
            Technique::Ontogenia => "Ontogenia",
        }
    }

    /// Fixed section order. Ontogenia's `prior` section is rendered only
    /// when a non-empty prior ontology is supplied.
    pub fn section_order(self) -> &'static [&'static str] {
        match self {
            Technique::MemorylessCQbyCQ => &["persona", "turtle_primer", "story", "cq", "pitfalls", "output_format"],
            Technique::Ontogenia => &[
                "persona_guidelines",
                "metacognitive_stages",
                "story",
                "cq",
                "odps",
                "prior",
                "extras",
                "output_format",
            ],
        }
    }

    fn placeholders(self) -> &'static [&'static str] {
        match self {
            Technique::MemorylessCQbyCQ => &["story", "cq"],
            Technique::Ontogenia => &["story", "cq", "odps", "prior"],
        }
    }
}

impl fmt::Display for Technique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Technique {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "memoryless" | "memorylesscqbycq" | "memoryless-cqbycq" => Ok(Technique::MemorylessCQbyCQ),
            "ontogenia" => Ok(Technique::Ontogenia),
            _ => Err(format!("unknown technique `{s}` (expected memoryless or ontogenia)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prompt {
    pub technique: Technique,
    pub cq_id: String,
    pub text: String,
    pub char_length: usize,
    pub sections: Vec<String>,
}

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("cannot read template {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{technique} templates: expected sections {expected:?}, found {found:?}")]
    SectionMismatch {
        technique: Technique,
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("{technique} templates: placeholder {{{{{name}}}}} is never used")]
    MissingPlaceholder { technique: Technique, name: String },
    #[error("{technique} template section `{section}`: unknown placeholder {{{{{name}}}}}")]
    UnknownPlaceholder {
        technique: Technique,
        section: String,
        name: String,
    },
    #[error("{technique} template section `{section}`: unclosed placeholder")]
    UnclosedPlaceholder { technique: Technique, section: String },
    #[error("duplicate design pattern name `{0}`")]
    DuplicatePattern(String),
    #[error("design pattern `{name}`: {message}")]
    BadPattern { name: String, message: String },
    #[error("CQ index {k} out of range: need 2 <= k <= {n}")]
    CqIndex { k: usize, n: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Section {
    label: String,
    body: String,
}

/// The section templates of one technique, in render order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TechniqueTemplate {
    technique: Technique,
    sections: Vec<Section>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplates {
    pub memoryless: TechniqueTemplate,
    pub ontogenia: TechniqueTemplate,
}

macro_rules! bundled {
    ($dir:literal, $($file:literal),+ $(,)?) => {
        &[$(($file, include_str!(concat!("../../templates/", $dir, "/", $file)))),+]
    };
}

const MEMORYLESS_FILES: &[(&str, &str)] = bundled!(
    "memoryless",
    "01_persona.txt",
    "02_turtle_primer.txt",
    "03_story.txt",
    "04_cq.txt",
    "05_pitfalls.txt",
    "06_output_format.txt",
);

const ONTOGENIA_FILES: &[(&str, &str)] = bundled!(
    "ontogenia",
    "01_persona_guidelines.txt",
    "02_metacognitive_stages.txt",
    "03_story.txt",
    "04_cq.txt",
    "05_odps.txt",
    "06_prior.txt",
    "07_extras.txt",
    "08_output_format.txt",
);

const ODP_FILES: &[(&str, &str)] = bundled!("odps", "01_agent_role.ttl", "02_part_of.ttl", "03_situation.ttl");

fn strip_comments(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with("#!"))
        .collect::<Vec<_>>()
        .join("\n")
        .trim()
        .to_string()
}

// `01_persona.txt` -> `persona`
fn section_label(file: &str) -> String {
    let stem = file.strip_suffix(".txt").unwrap_or(file);
    match stem.split_once('_') {
        Some((n, rest)) if n.chars().all(|c| c.is_ascii_digit()) => rest.to_string(),
        _ => stem.to_string(),
    }
}

fn placeholders_in(body: &str) -> Result<Vec<String>, ()> {
    let mut out = Vec::new();
    let mut rest = body;
    while let Some(start) = rest.find("{{") {
        let after = &rest[start + 2..];
        let end = after.find("}}").ok_or(())?;
        out.push(after[..end].trim().to_string());
        rest = &after[end + 2..];
    }
    Ok(out)
}

impl TechniqueTemplate {
    /// Validates `files` (name, content) against the technique's section
    /// order and placeholder set.
    pub fn from_files<'a>(
        technique: Technique,
        files: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<TechniqueTemplate, PromptError> {
        let mut files: Vec<(&str, &str)> = files.into_iter().collect();
        files.sort_by(|a, b| a.0.cmp(b.0));
        let sections: Vec<Section> = files
            .into_iter()
            .map(|(name, text)| Section {
                label: section_label(name),
                body: strip_comments(text),
            })
            .collect();

        let found: Vec<String> = sections.iter().map(|s| s.label.clone()).collect();
        let expected: Vec<String> = technique.section_order().iter().map(|s| s.to_string()).collect();
        if found != expected {
            return Err(PromptError::SectionMismatch {
                technique,
                expected,
                found,
            });
        }

        let allowed = technique.placeholders();
        let mut used = BTreeSet::new();
        for s in &sections {
            let names = placeholders_in(&s.body).map_err(|_| PromptError::UnclosedPlaceholder {
                technique,
                section: s.label.clone(),
            })?;
            for name in names {
                if !allowed.contains(&name.as_str()) {
                    return Err(PromptError::UnknownPlaceholder {
                        technique,
                        section: s.label.clone(),
                        name,
                    });
                }
                used.insert(name);
            }
        }
        if let Some(missing) = allowed.iter().find(|p| !used.contains(**p)) {
            return Err(PromptError::MissingPlaceholder {
                technique,
                name: missing.to_string(),
            });
        }
        Ok(TechniqueTemplate { technique, sections })
    }

    pub fn technique(&self) -> Technique {
        self.technique
    }

    /// Rendered body of one section with no substitutions applied.
    pub fn section(&self, label: &str) -> Option<&str> {
        self.sections.iter().find(|s| s.label == label).map(|s| s.body.as_str())
    }

    fn render(&self, cq_id: &str, values: &[(&str, &str)], skip: &[&str]) -> Prompt {
        let mut parts = Vec::new();
        let mut labels = Vec::new();
        for s in self.sections.iter().filter(|s| !skip.contains(&s.label.as_str())) {
            let mut body = s.body.clone();
            for (name, value) in values {
                body = body.replace(&format!("{{{{{name}}}}}"), value);
            }
            parts.push(body);
            labels.push(s.label.clone());
        }
        let text = parts.join("\n\n") + "\n";
        Prompt {
            technique: self.technique,
            cq_id: cq_id.to_string(),
            char_length: text.chars().count(),
            text,
            sections: labels,
        }
    }
}

impl PromptTemplates {
    pub fn bundled() -> PromptTemplates {
        PromptTemplates {
            memoryless: TechniqueTemplate::from_files(Technique::MemorylessCQbyCQ, MEMORYLESS_FILES.iter().copied())
                .expect("bundled memoryless templates are valid"),
            ontogenia: TechniqueTemplate::from_files(Technique::Ontogenia, ONTOGENIA_FILES.iter().copied())
                .expect("bundled ontogenia templates are valid"),
        }
    }

    /// Reads `dir/memoryless/*.txt` and `dir/ontogenia/*.txt`.
    pub fn load(dir: &Path) -> Result<PromptTemplates, PromptError> {
        let read = |technique: Technique| -> Result<TechniqueTemplate, PromptError> {
            let sub = dir.join(technique.as_str());
            let io = |source| PromptError::Io {
                path: sub.clone(),
                source,
            };
            let mut files = Vec::new();
            for entry in std::fs::read_dir(&sub).map_err(io)? {
                let path = entry.map_err(io)?.path();
                if path.extension().is_some_and(|e| e == "txt") {
                    let text = std::fs::read_to_string(&path).map_err(|source| PromptError::Io {
                        path: path.clone(),
                        source,
                    })?;
                    let name = path.file_name().unwrap_or_default().to_string_lossy().into_owned();
                    files.push((name, text));
                }
            }
            TechniqueTemplate::from_files(technique, files.iter().map(|(n, t)| (n.as_str(), t.as_str())))
        };
        Ok(PromptTemplates {
            memoryless: read(Technique::MemorylessCQbyCQ)?,
            ontogenia: read(Technique::Ontogenia)?,
        })
    }

    pub fn memoryless(&self, story: &UserStory, cq: &CompetencyQuestion) -> Prompt {
        self.memoryless
            .render(&cq.id, &[("story", story.text.trim()), ("cq", cq.text.trim())], &[])
    }

    pub fn ontogenia(
        &self,
        story: &UserStory,
        cq: &CompetencyQuestion,
        odps: &OdpCatalog,
        prior: Option<&Ontology>,
    ) -> Prompt {
        let odp_text = odps.render();
        match prior.filter(|p| !p.is_empty()) {
            Some(p) => {
                let prior_text = serialize_turtle(p);
                self.ontogenia.render(
                    &cq.id,
                    &[
                        ("story", story.text.trim()),
                        ("cq", cq.text.trim()),
                        ("odps", &odp_text),
                        ("prior", prior_text.trim()),
                    ],
                    &[],
                )
            }
            None => self.ontogenia.render(
                &cq.id,
                &[("story", story.text.trim()), ("cq", cq.text.trim()), ("odps", &odp_text)],
                &["prior"],
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OdpPattern {
    pub name: String,
    pub description: String,
    pub turtle: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OdpCatalog {
    patterns: Vec<OdpPattern>,
}

impl OdpCatalog {
    pub fn new(patterns: Vec<OdpPattern>) -> Result<OdpCatalog, PromptError> {
        let mut seen = BTreeSet::new();
        for p in &patterns {
            if !seen.insert(p.name.as_str()) {
                return Err(PromptError::DuplicatePattern(p.name.clone()));
            }
        }
        Ok(OdpCatalog { patterns })
    }

    /// AgentRole, PartOf and Situation.
    pub fn bundled() -> OdpCatalog {
        let patterns = ODP_FILES
            .iter()
            .map(|(file, text)| Self::parse_pattern(file, text).expect("bundled pattern is valid"))
            .collect();
        OdpCatalog::new(patterns).expect("bundled pattern names are unique")
    }

    /// Reads every `*.ttl` in `dir`, sorted by file name. The first line
    /// must be a `# Name: description` comment.
    pub fn load(dir: &Path) -> Result<OdpCatalog, PromptError> {
        let io = |source| PromptError::Io {
            path: dir.to_path_buf(),
            source,
        };
        let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(io)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "ttl"))
            .collect();
        paths.sort();
        let mut patterns = Vec::new();
        for path in paths {
            let text = std::fs::read_to_string(&path).map_err(|source| PromptError::Io {
                path: path.clone(),
                source,
            })?;
            patterns.push(Self::parse_pattern(&path.to_string_lossy(), &text)?);
        }
        OdpCatalog::new(patterns)
    }

    fn parse_pattern(file: &str, text: &str) -> Result<OdpPattern, PromptError> {
        let bad = |message: String| PromptError::BadPattern {
            name: file.to_string(),
            message,
        };
        let (first, rest) = text.split_once('\n').unwrap_or((text, ""));
        let (name, description) = first
            .strip_prefix('#')
            .and_then(|h| h.split_once(':'))
            .ok_or_else(|| bad("first line must be `# Name: description`".into()))?;
        parse_turtle(rest).map_err(|e| bad(e.to_string()))?;
        Ok(OdpPattern {
            name: name.trim().to_string(),
            description: description.trim().to_string(),
            turtle: rest.trim().to_string(),
        })
    }

    pub fn patterns(&self) -> &[OdpPattern] {
        &self.patterns
    }

    pub fn render(&self) -> String {
        self.patterns
            .iter()
            .map(|p| format!("Pattern {}: {}\n```turtle\n{}\n```", p.name, p.description, p.turtle))
            .collect::<Vec<_>>()
            .join("\n\n")
    }
}

pub fn build_memoryless_prompt(story: &UserStory, cq: &CompetencyQuestion) -> Prompt {
    PromptTemplates::bundled().memoryless(story, cq)
}

pub fn build_ontogenia_prompt(
    story: &UserStory,
    cq: &CompetencyQuestion,
    odps: &OdpCatalog,
    prior: Option<&Ontology>,
) -> Prompt {
    PromptTemplates::bundled().ontogenia(story, cq, odps, prior)
}

/// `1 - len(memoryless prompt) / len(ontogenia prompt with prior)` for the
/// `k`-th CQ (1-based), using the bundled templates and design patterns.
pub fn context_reduction(case: &Case, k: usize, prior: &Ontology) -> Result<f64, PromptError> {
    let n = case.cqs.len();
    if k < 2 || k > n {
        return Err(PromptError::CqIndex { k, n });
    }
    let templates = PromptTemplates::bundled();
    let cq = &case.cqs[k - 1];
    let memoryless = templates.memoryless(&case.story, cq);
    let ontogenia = templates.ontogenia(&case.story, cq, &OdpCatalog::bundled(), Some(prior));
    Ok(1.0 - memoryless.char_length as f64 / ontogenia.char_length as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Category;

    fn story() -> UserStory {
        UserStory {
            id: "book".into(),
            text: "A library keeps books and the people who wrote them.".into(),
        }
    }

    fn cq(id: &str, text: &str) -> CompetencyQuestion {
        CompetencyQuestion {
            id: id.into(),
            text: text.into(),
            category: Category::ObjectProperty,
        }
    }

    #[test]
    fn memoryless_structure() {
        let p = build_memoryless_prompt(&story(), &cq("cq01", "Who is the author of a book?"));
        assert_eq!(p.sections, Technique::MemorylessCQbyCQ.section_order());
        assert_eq!(p.char_length, p.text.chars().count());
        assert!(p.text.contains("Who is the author of a book?"));
        assert!(p.text.contains(story().text.as_str()));
        assert!(!p.text.contains("#!"));
        assert!(p.text.contains(PROMPT_NAMESPACE));
        let last = PromptTemplates::bundled().memoryless.section("output_format").unwrap().to_string();
        assert!(p.text.trim_end().ends_with(&last));
    }

    #[test]
    fn ontogenia_prior_section_only_when_present() {
        let odps = OdpCatalog::bundled();
        let q = cq("cq02", "What is the title of a book?");
        let none = build_ontogenia_prompt(&story(), &q, &odps, None);
        assert!(!none.sections.iter().any(|s| s == "prior"));
        assert_eq!(none.sections.len(), 7);
        let empty = build_ontogenia_prompt(&story(), &q, &odps, Some(&Ontology::new()));
        assert_eq!(none, empty);

        let prior = parse_turtle("@prefix ex: <http://ex.org/#> . ex:Book a owl:Class .").unwrap();
        let with = build_ontogenia_prompt(&story(), &q, &odps, Some(&prior));
        assert_eq!(with.sections, Technique::Ontogenia.section_order());
        assert!(with.text.contains(serialize_turtle(&prior).trim()));
        for p in odps.patterns() {
            assert_eq!(with.text.matches(&format!("Pattern {}:", p.name)).count(), 1);
        }
    }

    #[test]
    fn bundled_catalog() {
        let names: Vec<_> = OdpCatalog::bundled().patterns().iter().map(|p| p.name.clone()).collect();
        assert_eq!(names, ["AgentRole", "PartOf", "Situation"]);
    }

    #[test]
    fn duplicate_pattern_rejected() {
        let p = OdpPattern {
            name: "X".into(),
            description: String::new(),
            turtle: String::new(),
        };
        assert!(matches!(
            OdpCatalog::new(vec![p.clone(), p]),
            Err(PromptError::DuplicatePattern(_))
        ));
    }

    #[test]
    fn template_validation() {
        let good: Vec<(&str, &str)> = MEMORYLESS_FILES.to_vec();
        assert!(TechniqueTemplate::from_files(Technique::MemorylessCQbyCQ, good.clone()).is_ok());

        let mut missing = good.clone();
        missing[3].1 = "no placeholder here";
        assert!(matches!(
            TechniqueTemplate::from_files(Technique::MemorylessCQbyCQ, missing),
            Err(PromptError::MissingPlaceholder { name, .. }) if name == "cq"
        ));

        let mut unknown = good.clone();
        unknown[0].1 = "{{prior}}";
        assert!(matches!(
            TechniqueTemplate::from_files(Technique::MemorylessCQbyCQ, unknown),
            Err(PromptError::UnknownPlaceholder { .. })
        ));

        assert!(matches!(
            TechniqueTemplate::from_files(Technique::MemorylessCQbyCQ, good[..5].to_vec()),
            Err(PromptError::SectionMismatch { .. })
        ));
    }

    #[test]
    fn technique_names() {
        for t in Technique::ALL {
            assert_eq!(t.as_str().parse::<Technique>().unwrap(), t);
        }
    }
}
