//! Evaluation of candidate ontologies: competency-question coverage,
//! minor-issue classification, superfluous elements, minimal modules,
//! proportion scores and inter-rater agreement.

mod coverage;
mod kappa;
mod module;
mod score;
mod superfluous;

pub use coverage::{
    classify, coverage, coverage_with_signature, used_terms, CoverageReport, CqStatus, CqVerdict, MatchMethod,
    TermMatch,
};
pub use kappa::{cohens_kappa, read_rater_csv, KappaError};
pub use module::minimal_module;
pub use score::{score, CategoryScore, ScoreError, Scores};
pub use superfluous::{superfluous, KindReport, SuperfluousReport};
