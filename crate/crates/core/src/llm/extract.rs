use std::collections::BTreeMap;

use thiserror::Error;

use crate::ontology::{parse_turtle_with_prefixes, vocab, Iri, Ontology, SyntaxError};
use crate::prompt::PROMPT_NAMESPACE;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtractError {
    #[error("model output contains no ontology")]
    EmptyOutput,
    #[error("model output is not valid Turtle: {0}")]
    NonOntologyOutput(SyntaxError),
}

struct Block<'a> {
    label: &'a str,
    body: String,
}

// A fence is a line whose first non-blank characters are three backticks.
// An unclosed final block runs to the end of the text.
fn fenced_blocks(text: &str) -> Vec<Block<'_>> {
    let mut blocks = Vec::new();
    let mut open: Option<(&str, Vec<&str>)> = None;
    for line in text.lines() {
        let trimmed = line.trim_start();
        match (&mut open, trimmed.strip_prefix("```")) {
            (None, Some(label)) => open = Some((label.trim(), Vec::new())),
            (Some(_), Some(rest)) if rest.trim().is_empty() => {
                let (label, lines) = open.take().expect("block is open");
                blocks.push(Block {
                    label,
                    body: lines.join("\n"),
                });
            }
            (Some((_, lines)), _) => lines.push(line),
            (None, None) => {}
        }
    }
    if let Some((label, lines)) = open {
        blocks.push(Block {
            label,
            body: lines.join("\n"),
        });
    }
    blocks
}

/// Prefixes available to extracted text without declaration: the standard
/// vocabularies plus the `ex:` namespace the prompts tell the model to use.
pub fn extraction_prefixes() -> BTreeMap<String, Iri> {
    let mut p = vocab::standard_prefixes();
    p.insert("ex".into(), vocab::iri(PROMPT_NAMESPACE));
    p
}

/// Picks the Turtle payload out of a model reply: the last fenced block
/// labelled `turtle` or `ttl`, else the last fenced block of any label,
/// else the whole reply if it parses.
pub fn extract_ontology_text(reply: &str) -> Result<String, ExtractError> {
    extract_ontology(reply).map(|(text, _)| text)
}

/// Like [`extract_ontology_text`], also returning the parsed ontology.
pub fn extract_ontology(reply: &str) -> Result<(String, Ontology), ExtractError> {
    let all = fenced_blocks(reply);
    let fenced = !all.is_empty();
    let blocks: Vec<Block> = all.into_iter().filter(|b| !b.body.trim().is_empty()).collect();
    let chosen = blocks
        .iter()
        .rev()
        .find(|b| b.label.eq_ignore_ascii_case("turtle") || b.label.eq_ignore_ascii_case("ttl"))
        .or_else(|| blocks.last());
    let text = match chosen {
        Some(b) => b.body.trim().to_string(),
        None if fenced || reply.trim().is_empty() => return Err(ExtractError::EmptyOutput),
        None => reply.trim().to_string(),
    };
    let ontology = parse_turtle_with_prefixes(&text, &extraction_prefixes()).map_err(ExtractError::NonOntologyOutput)?;
    if ontology.is_empty() {
        return Err(ExtractError::EmptyOutput);
    }
    Ok((text, ontology))
}
