//! Run summaries and the rendered comparison tables: pitfall counts,
//! superfluous-element rates and score data.

mod evaluate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Category;
use crate::eval::{CategoryScore, Scores, SuperfluousReport};
use crate::ontology::TermKind;
use crate::pipeline::{prepare_output_dir, RunDirError};
use crate::pitfall::PitfallCode;

pub use evaluate::{evaluate, superfluous_csv, verdicts_csv, write_eval_dir, Candidate, EvaluateError, Evaluation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run_id: String,
    pub case_id: String,
    pub technique: String,
    pub model_name: String,
    pub scores: Scores,
    pub pitfall_counts: BTreeMap<PitfallCode, usize>,
    pub superfluous: SuperfluousReport,
}

impl RunSummary {
    fn column(&self) -> String {
        format!("{}/{}", self.technique, self.model_name)
    }
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("no run summaries to report")]
    EmptyInput,
    #[error("scores CSV line {line}: {message}")]
    ScoresCsv { line: usize, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// A labelled table of string cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matrix {
    pub corner: String,
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub cells: Vec<Vec<String>>,
}

impl Matrix {
    pub fn cell(&self, row: &str, col: &str) -> Option<&str> {
        let r = self.rows.iter().position(|x| x == row)?;
        let c = self.cols.iter().position(|x| x == col)?;
        Some(&self.cells[r][c])
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "| {} | {} |", self.corner, self.cols.join(" | "));
        let _ = writeln!(out, "|---|{}", "---:|".repeat(self.cols.len()));
        for (row, cells) in self.rows.iter().zip(&self.cells) {
            let _ = writeln!(out, "| {} | {} |", row, cells.join(" | "));
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let header: Vec<&str> = std::iter::once(self.corner.as_str())
            .chain(self.cols.iter().map(String::as_str))
            .collect();
        w.write_record(&header).expect("in-memory write");
        for (row, cells) in self.rows.iter().zip(&self.cells) {
            let record: Vec<&str> = std::iter::once(row.as_str()).chain(cells.iter().map(String::as_str)).collect();
            w.write_record(&record).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV is UTF-8")
    }
}

/// Pitfall counts: one row per code, one column per technique/model pair.
/// Counts of runs sharing a column are added up.
pub fn pitfall_matrix(summaries: &[RunSummary]) -> Result<Matrix, ReportError> {
    if summaries.is_empty() {
        return Err(ReportError::EmptyInput);
    }
    let cols: Vec<String> = summaries.iter().map(RunSummary::column).collect::<BTreeSet<_>>().into_iter().collect();
    let mut counts: BTreeMap<(PitfallCode, &str), usize> = BTreeMap::new();
    for s in summaries {
        let col = cols.iter().find(|c| **c == s.column()).expect("column exists");
        for (code, n) in &s.pitfall_counts {
            *counts.entry((*code, col.as_str())).or_default() += n;
        }
    }
    let cells = PitfallCode::ALL
        .iter()
        .map(|code| {
            cols.iter()
                .map(|c| counts.get(&(*code, c.as_str())).copied().unwrap_or(0).to_string())
                .collect()
        })
        .collect();
    Ok(Matrix {
        corner: "pitfall".into(),
        rows: PitfallCode::ALL.iter().map(|c| c.as_str().to_string()).collect(),
        cols,
        cells,
    })
}

/// Percentage with one decimal, or `n/a` for an empty total.
pub fn format_rate(superfluous: usize, total: usize) -> String {
    if total == 0 {
        "n/a".into()
    } else {
        format!("{:.1}", superfluous as f64 * 100.0 / total as f64)
    }
}

/// Superfluous-element rates: one row per technique/model pair, one column
/// per kind and case. Runs sharing a cell are pooled.
pub fn superfluous_matrix(summaries: &[RunSummary]) -> Result<Matrix, ReportError> {
    if summaries.is_empty() {
        return Err(ReportError::EmptyInput);
    }
    let rows: Vec<String> = summaries.iter().map(RunSummary::column).collect::<BTreeSet<_>>().into_iter().collect();
    let cases: BTreeSet<&str> = summaries.iter().map(|s| s.case_id.as_str()).collect();
    let mut pooled: BTreeMap<(String, TermKind, &str), (usize, usize)> = BTreeMap::new();
    for s in summaries {
        for kind in TermKind::ALL {
            let k = s.superfluous.kind(kind);
            let e = pooled.entry((s.column(), kind, s.case_id.as_str())).or_default();
            e.0 += k.count();
            e.1 += k.total;
        }
    }
    let keys: Vec<(TermKind, &str)> = TermKind::ALL
        .iter()
        .flat_map(|k| cases.iter().map(move |c| (*k, *c)))
        .collect();
    let cells = rows
        .iter()
        .map(|row| {
            keys.iter()
                .map(|(kind, case)| match pooled.get(&(row.clone(), *kind, *case)) {
                    Some(&(n, total)) => format_rate(n, total),
                    None => "n/a".into(),
                })
                .collect()
        })
        .collect();
    Ok(Matrix {
        corner: "technique/model".into(),
        rows,
        cols: keys.iter().map(|(k, c)| format!("{}:{}", k.as_str(), c)).collect(),
        cells,
    })
}

const SCORE_HEADER: [&str; 8] = ["run_id", "case_id", "technique", "model", "category", "n", "strict", "relaxed"];

/// Score data per run: an `all` row, then one row per CQ category present.
/// `relaxed` is the score when minor issues are ignored. Values are written
/// with full precision so the file parses back exactly.
pub fn scores_csv(summaries: &[RunSummary]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SCORE_HEADER).expect("in-memory write");
    for s in summaries {
        let overall = CategoryScore {
            n: s.scores.n,
            strict: s.scores.strict,
            relaxed: s.scores.relaxed,
        };
        let rows = std::iter::once(("all", &overall)).chain(s.scores.per_category.iter().map(|(c, v)| (c.as_str(), v)));
        for (category, v) in rows {
            w.write_record([
                s.run_id.as_str(),
                &s.case_id,
                &s.technique,
                &s.model_name,
                category,
                &v.n.to_string(),
                &v.strict.to_string(),
                &v.relaxed.to_string(),
            ])
            .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV is UTF-8")
}

/// Reads a file written by [`scores_csv`] back into per-run scores, in file
/// order.
pub fn parse_scores_csv(text: &str) -> Result<Vec<(String, Scores)>, ReportError> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != SCORE_HEADER {
        return Err(ReportError::ScoresCsv {
            line: 1,
            message: format!("unexpected header {header:?}"),
        });
    }
    let mut out: Vec<(String, Scores)> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let bad = |message: String| ReportError::ScoresCsv { line, message };
        let num = |idx: usize| -> Result<f64, ReportError> { rec[idx].parse().map_err(|e| bad(format!("{e}"))) };
        let n: usize = rec[5].parse().map_err(|e| bad(format!("{e}")))?;
        let value = CategoryScore {
            n,
            strict: num(6)?,
            relaxed: num(7)?,
        };
        let run = &rec[0];
        match &rec[4] {
            "all" => out.push((
                run.to_string(),
                Scores {
                    n,
                    strict: value.strict,
                    relaxed: value.relaxed,
                    per_category: BTreeMap::new(),
                },
            )),
            cat => {
                let cat: Category = cat.parse().map_err(bad)?;
                match out.last_mut() {
                    Some((id, scores)) if id == run => {
                        scores.per_category.insert(cat, value);
                    }
                    _ => return Err(bad(format!("category row for {run} before its `all` row"))),
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedTables {
    pub pitfalls: Matrix,
    pub superfluous: Matrix,
    pub scores_csv: String,
}

pub fn render_tables(summaries: &[RunSummary]) -> Result<RenderedTables, ReportError> {
    Ok(RenderedTables {
        pitfalls: pitfall_matrix(summaries)?,
        superfluous: superfluous_matrix(summaries)?,
        scores_csv: scores_csv(summaries),
    })
}

impl RenderedTables {
    pub fn markdown(&self) -> String {
        let mut out = String::new();
        out.push_str("# Evaluation report\n\n## Critical pitfalls\n\n");
        out.push_str("Counts come from the local structural scanner.\n\n");
        out.push_str(&self.pitfalls.to_markdown());
        out.push_str("\n## Superfluous elements\n\n");
        out.push_str("Percentage of elements of each kind not used by any validation query.\n\n");
        out.push_str(&self.superfluous.to_markdown());
        out
    }

    /// Writes `report.md`, `pitfalls.{md,csv}`, `superfluous.{md,csv}` and
    /// `scores.csv` into `dir`.
    pub fn write(&self, dir: &Path, force: bool) -> Result<PathBuf, RunDirError> {
        prepare_output_dir(dir, "report.md", force)?;
        let files = [
            ("pitfalls.md", self.pitfalls.to_markdown()),
            ("pitfalls.csv", self.pitfalls.to_csv()),
            ("superfluous.md", self.superfluous.to_markdown()),
            ("superfluous.csv", self.superfluous.to_csv()),
            ("scores.csv", self.scores_csv.clone()),
            ("report.md", self.markdown()),
        ];
        for (name, text) in files {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|source| RunDirError::Io { path, source })?;
        }
        Ok(dir.to_path_buf())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::KindReport;
    use crate::ontology::Iri;

    fn summary(technique: &str, p19: usize) -> RunSummary {
        let mut per_category = BTreeMap::new();
        per_category.insert(
            Category::ObjectProperty,
            CategoryScore {
                n: 3,
                strict: 1.0 / 3.0,
                relaxed: 2.0 / 3.0,
            },
        );
        let mut pitfall_counts: BTreeMap<PitfallCode, usize> = PitfallCode::ALL.into_iter().map(|c| (c, 0)).collect();
        pitfall_counts.insert(PitfallCode::P19, p19);
        RunSummary {
            run_id: format!("book-{technique}"),
            case_id: "book".into(),
            technique: technique.into(),
            model_name: "gpt-4".into(),
            scores: Scores {
                n: 3,
                strict: 1.0 / 3.0,
                relaxed: 2.0 / 3.0,
                per_category,
            },
            pitfall_counts,
            superfluous: SuperfluousReport {
                classes: KindReport {
                    superfluous: [Iri::new("http://ex.org/Person").unwrap()].into(),
                    total: 3,
                },
                ..Default::default()
            },
        }
    }

    #[test]
    fn pitfall_cell() {
        let m = pitfall_matrix(&[summary("memoryless", 23)]).unwrap();
        assert_eq!(m.cell("P19", "memoryless/gpt-4"), Some("23"));
        assert_eq!(m.cell("P05", "memoryless/gpt-4"), Some("0"));
        assert!(m.to_markdown().contains("| P19 | 23 |"));
    }

    #[test]
    fn superfluous_cells() {
        let m = superfluous_matrix(&[summary("memoryless", 0)]).unwrap();
        assert_eq!(m.cell("memoryless/gpt-4", "class:book"), Some("33.3"));
        assert_eq!(m.cell("memoryless/gpt-4", "data_property:book"), Some("n/a"));
    }

    #[test]
    fn empty_input() {
        assert!(matches!(render_tables(&[]), Err(ReportError::EmptyInput)));
    }

    #[test]
    fn deterministic() {
        let a = render_tables(&[summary("memoryless", 1), summary("ontogenia", 2)]).unwrap();
        let b = render_tables(&[summary("memoryless", 1), summary("ontogenia", 2)]).unwrap();
        assert_eq!(a.markdown(), b.markdown());
        assert_eq!(a.scores_csv, b.scores_csv);
    }

    #[test]
    fn scores_round_trip() {
        let runs = [summary("memoryless", 0), summary("ontogenia", 0)];
        let parsed = parse_scores_csv(&scores_csv(&runs)).unwrap();
        assert_eq!(parsed.len(), 2);
        for ((id, scores), s) in parsed.iter().zip(&runs) {
            assert_eq!(id, &s.run_id);
            assert_eq!(scores, &s.scores);
        }
    }

    #[test]
    fn rate_format() {
        assert_eq!(format_rate(1, 3), "33.3");
        assert_eq!(format_rate(1, 2), "50.0");
        assert_eq!(format_rate(0, 0), "n/a");
        assert_eq!(format_rate(2, 3), "66.7");
    }
}
