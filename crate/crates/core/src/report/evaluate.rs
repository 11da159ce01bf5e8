use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{scores_csv, RunSummary};
use crate::dataset::Case;
use crate::eval::{classify, coverage, score, superfluous, used_terms, CoverageReport, CqVerdict, ScoreError, Scores, SuperfluousReport};
use crate::ontology::{Iri, Ontology};
use crate::pipeline::RunDirError;
use crate::pitfall::{count_by_code, findings_csv, scan_with, OntologyProbe, PitfallFinding};

/// What gets evaluated: one ontology for every CQ, or one partial per CQ
/// (independent runs) plus their merge for the whole-ontology checks.
#[derive(Debug, Clone, Copy)]
pub enum Candidate<'a> {
    Single(&'a Ontology),
    PerCq {
        partials: &'a BTreeMap<String, Ontology>,
        merged: &'a Ontology,
    },
}

impl<'a> Candidate<'a> {
    fn for_cq(&self, cq: &str, empty: &'a Ontology) -> &'a Ontology {
        match self {
            Candidate::Single(o) => o,
            Candidate::PerCq { partials, .. } => partials.get(cq).unwrap_or(empty),
        }
    }

    fn whole(&self) -> &'a Ontology {
        match self {
            Candidate::Single(o) => o,
            Candidate::PerCq { merged, .. } => merged,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub case_id: String,
    pub coverage: Vec<CoverageReport>,
    pub verdicts: Vec<CqVerdict>,
    pub scores: Scores,
    pub superfluous: SuperfluousReport,
    pub findings: Vec<PitfallFinding>,
    pub scan_notes: Vec<String>,
}

#[derive(Debug, Error)]
pub enum EvaluateError {
    #[error("no gold entry for CQ(s) {}", .0.join(", "))]
    MissingGold(Vec<String>),
    #[error("{0}")]
    Score(#[from] ScoreError),
}

/// Coverage, verdicts and scores for every CQ with a gold module, then the
/// superfluous-element analysis and pitfall scan on the whole candidate.
/// CQs marked gold-less are skipped; any other CQ without gold is an error.
pub fn evaluate(case: &Case, candidate: Candidate<'_>, probe: Option<&dyn OntologyProbe>) -> Result<Evaluation, EvaluateError> {
    let missing: Vec<String> = case
        .cqs
        .iter()
        .filter(|cq| !case.gold.contains_key(&cq.id) && !case.gold_less.contains(&cq.id))
        .map(|cq| cq.id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(EvaluateError::MissingGold(missing));
    }

    let empty = Ontology::new();
    let reports: Vec<CoverageReport> = case
        .cqs
        .iter()
        .filter_map(|cq| case.gold.get(&cq.id))
        .map(|entry| coverage(candidate.for_cq(&entry.cq_id, &empty), entry, &case.aliases))
        .collect();
    let verdicts: Vec<CqVerdict> = reports.iter().map(classify).collect();
    let scores = score(&verdicts, &case.categories())?;
    let superfluous = superfluous(candidate.whole(), &used_terms(&reports));
    let scan = scan_with(candidate.whole(), probe);
    Ok(Evaluation {
        case_id: case.id().to_string(),
        coverage: reports,
        verdicts,
        scores,
        superfluous,
        findings: scan.findings,
        scan_notes: scan.notes,
    })
}

impl Evaluation {
    pub fn summary(&self, run_id: &str, technique: &str, model_name: &str) -> RunSummary {
        RunSummary {
            run_id: run_id.to_string(),
            case_id: self.case_id.clone(),
            technique: technique.to_string(),
            model_name: model_name.to_string(),
            scores: self.scores.clone(),
            pitfall_counts: count_by_code(&self.findings),
            superfluous: self.superfluous.clone(),
        }
    }
}

fn terms(iris: impl IntoIterator<Item = impl AsRef<str>>) -> String {
    iris.into_iter().map(|i| i.as_ref().to_string()).collect::<Vec<_>>().join(" ")
}

/// `cq_id,category,status,missing_count,missing_terms`
pub fn verdicts_csv(case: &Case, eval: &Evaluation) -> String {
    let categories = case.categories();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["cq_id", "category", "status", "missing_count", "missing_terms"])
        .expect("in-memory write");
    for (v, cr) in eval.verdicts.iter().zip(&eval.coverage) {
        let category = categories.get(&v.cq_id).map_or("", |c| c.as_str());
        let missing = terms(cr.missing.iter().map(|t| format!("{}:{}", t.kind.as_str(), t.iri.as_str())));
        w.write_record([
            v.cq_id.as_str(),
            category,
            v.status.as_str(),
            &v.missing_count.to_string(),
            &missing,
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV is UTF-8")
}

/// `kind,superfluous,total,rate,terms`, with an empty rate when the kind
/// has no elements.
pub fn superfluous_csv(report: &SuperfluousReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["kind", "superfluous", "total", "rate", "terms"])
        .expect("in-memory write");
    for kind in crate::ontology::TermKind::ALL {
        let k = report.kind(kind);
        w.write_record([
            kind.as_str(),
            &k.count().to_string(),
            &k.total.to_string(),
            &k.rate().map_or(String::new(), |r| r.to_string()),
            &terms(k.superfluous.iter().map(Iri::as_str)),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV is UTF-8")
}

/// Writes `dir/{verdicts.csv, coverage.json, scores.csv, scores.json,
/// superfluous.csv, pitfalls.csv, summary.json}`. An existing directory is
/// replaced only with `force`.
pub fn write_eval_dir(dir: &Path, case: &Case, eval: &Evaluation, summary: &RunSummary, force: bool) -> Result<PathBuf, RunDirError> {
    crate::pipeline::prepare_output_dir(dir, "summary.json", force)?;
    let files: [(&str, String); 7] = [
        ("verdicts.csv", verdicts_csv(case, eval)),
        ("coverage.json", pretty(&eval.coverage)),
        ("scores.csv", scores_csv(std::slice::from_ref(summary))),
        ("scores.json", pretty(&eval.scores)),
        ("superfluous.csv", superfluous_csv(&eval.superfluous)),
        ("pitfalls.csv", findings_csv(&eval.findings)),
        ("summary.json", pretty(summary)),
    ];
    for (name, text) in files {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|source| RunDirError::Io { path, source })?;
    }
    Ok(dir.to_path_buf())
}

fn pretty<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("value serializes") + "\n"
}
