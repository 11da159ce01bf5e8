//! Draft OWL ontologies from user stories and competency questions, and
//! evaluate candidate ontologies against gold minimal modules.

pub mod ontology;
pub mod dataset;
pub mod eval;
pub mod pitfall;
pub mod prompt;
pub mod llm;
pub mod pipeline;
pub mod report;
