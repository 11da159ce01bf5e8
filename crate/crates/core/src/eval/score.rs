use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Category;

use super::{CqStatus, CqVerdict};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScoreError {
    #[error("no verdicts to score")]
    EmptyInput,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CategoryScore {
    pub n: usize,
    pub strict: f64,
    pub relaxed: f64,
}

/// Proportion of modelled CQs: `strict` counts only fully modelled CQs,
/// `relaxed` also accepts minor issues.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub n: usize,
    pub strict: f64,
    pub relaxed: f64,
    pub per_category: BTreeMap<Category, CategoryScore>,
}

fn proportions<'a>(verdicts: impl Iterator<Item = &'a CqVerdict>) -> CategoryScore {
    let (mut n, mut modelled, mut minor) = (0usize, 0usize, 0usize);
    for v in verdicts {
        n += 1;
        match v.status {
            CqStatus::Modelled => modelled += 1,
            CqStatus::MinorIssue => minor += 1,
            CqStatus::NotModelled => {}
        }
    }
    CategoryScore {
        n,
        strict: modelled as f64 / n as f64,
        relaxed: (modelled + minor) as f64 / n as f64,
    }
}

/// Scores a verdict list. CQs missing from `categories` count toward the
/// totals but not toward any category breakdown.
pub fn score(verdicts: &[CqVerdict], categories: &BTreeMap<String, Category>) -> Result<Scores, ScoreError> {
    if verdicts.is_empty() {
        return Err(ScoreError::EmptyInput);
    }
    let overall = proportions(verdicts.iter());
    let per_category = Category::ALL
        .into_iter()
        .filter_map(|cat| {
            let mut subset = verdicts
                .iter()
                .filter(|v| categories.get(&v.cq_id) == Some(&cat))
                .peekable();
            subset.peek()?;
            Some((cat, proportions(subset)))
        })
        .collect();
    Ok(Scores {
        n: overall.n,
        strict: overall.strict,
        relaxed: overall.relaxed,
        per_category,
    })
}
