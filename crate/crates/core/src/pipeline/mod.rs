//! Runs a technique over every CQ of a case and collects per-CQ and merged
//! ontologies.

mod rundir;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Case, CompetencyQuestion};
use crate::llm::{extract_ontology, ExtractError, Gateway, GatewayError, Transcript};
use crate::ontology::{vocab, Iri, Ontology, Term};
use crate::prompt::{OdpCatalog, Prompt, PromptTemplates, Technique, PROMPT_NAMESPACE};

pub use rundir::{load_run_dir, manifest_of, prepare_output_dir, write_run_dir, CqManifest, LoadedRun, RunDirError, RunManifest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Independent,
    Incremental,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Independent => "independent",
            Mode::Incremental => "incremental",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "independent" => Ok(Mode::Independent),
            "incremental" => Ok(Mode::Incremental),
            _ => Err(format!("unknown mode `{s}` (expected independent or incremental)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CqFailure {
    #[error("{0}")]
    Gateway(GatewayError),
    #[error("{0}")]
    Extract(ExtractError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum CqResult {
    Generated(Ontology),
    Failed(CqFailure),
}

impl CqResult {
    pub fn ontology(&self) -> Option<&Ontology> {
        match self {
            CqResult::Generated(o) => Some(o),
            CqResult::Failed(_) => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub run_id: String,
    pub case_id: String,
    pub technique: Technique,
    pub mode: Mode,
    pub model_name: String,
    /// In manifest CQ order.
    pub per_cq: Vec<(String, CqResult)>,
    pub merged: Ontology,
    pub prompts: BTreeMap<String, Prompt>,
    pub transcripts: BTreeMap<String, Transcript>,
    /// Gateway latency per CQ, in seconds.
    pub timings: BTreeMap<String, f64>,
}

impl RunResult {
    pub fn result(&self, cq_id: &str) -> Option<&CqResult> {
        self.per_cq.iter().find(|(id, _)| id == cq_id).map(|(_, r)| r)
    }

    pub fn failures(&self) -> impl Iterator<Item = (&str, &CqFailure)> {
        self.per_cq.iter().filter_map(|(id, r)| match r {
            CqResult::Failed(f) => Some((id.as_str(), f)),
            CqResult::Generated(_) => None,
        })
    }
}

/// Run-level failures. Per-CQ failures are recorded in the result instead.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PipelineError {
    #[error("{0}")]
    Auth(GatewayError),
}

pub fn run_id(case_id: &str, technique: Technique, mode: Mode, model: &str) -> String {
    let raw = format!("{case_id}-{technique}-{mode}-{model}");
    raw.chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' })
        .collect()
}

// Blank node labels of one CQ's output get a CQ-derived prefix so outputs
// of different CQs never share a blank node after merging.
fn blank_prefix(cq_id: &str) -> String {
    let clean: String = cq_id.chars().filter(|c| c.is_ascii_alphanumeric()).collect();
    format!("{clean}_")
}

struct Step {
    prompt: Prompt,
    outcome: Result<CqResult, PipelineError>,
    transcript: Transcript,
    latency: f64,
}

fn call(gateway: &Gateway, prompt: Prompt) -> Step {
    let (reply, transcript) = gateway.complete(&prompt);
    let latency = reply.as_ref().map(|r| r.latency_secs).unwrap_or(0.0);
    let outcome = match reply {
        Err(e) if e.is_auth() => Err(PipelineError::Auth(e)),
        Err(e) => Ok(CqResult::Failed(CqFailure::Gateway(e))),
        Ok(r) => Ok(match extract_ontology(&r.text) {
            Ok((_, o)) => CqResult::Generated(o.prefix_blank_nodes(&blank_prefix(&prompt.cq_id))),
            Err(e) => CqResult::Failed(CqFailure::Extract(e)),
        }),
    };
    Step {
        prompt,
        outcome,
        transcript,
        latency,
    }
}

fn fold_merge<'a>(parts: impl IntoIterator<Item = &'a CqResult>) -> Ontology {
    parts
        .into_iter()
        .filter_map(CqResult::ontology)
        .fold(Ontology::new(), |acc, o| acc.merge(o))
}

struct Collected {
    per_cq: Vec<(String, CqResult)>,
    prompts: BTreeMap<String, Prompt>,
    transcripts: BTreeMap<String, Transcript>,
    timings: BTreeMap<String, f64>,
}

impl Collected {
    fn new() -> Self {
        Collected {
            per_cq: Vec::new(),
            prompts: BTreeMap::new(),
            transcripts: BTreeMap::new(),
            timings: BTreeMap::new(),
        }
    }

    fn push(&mut self, step: Step) -> Result<(), PipelineError> {
        let id = step.prompt.cq_id.clone();
        let result = step.outcome?;
        self.per_cq.push((id.clone(), result));
        self.timings.insert(id.clone(), step.latency);
        self.transcripts.insert(id.clone(), step.transcript);
        self.prompts.insert(id, step.prompt);
        Ok(())
    }

    fn finish(self, case: &Case, technique: Technique, mode: Mode, gateway: &Gateway, merged: Ontology) -> RunResult {
        let model = gateway.config().model.clone();
        RunResult {
            run_id: run_id(case.id(), technique, mode, &model),
            case_id: case.id().to_string(),
            technique,
            mode,
            model_name: model,
            per_cq: self.per_cq,
            merged,
            prompts: self.prompts,
            transcripts: self.transcripts,
            timings: self.timings,
        }
    }
}

fn standalone_prompt(templates: &PromptTemplates, odps: &OdpCatalog, technique: Technique, case: &Case, cq: &CompetencyQuestion) -> Prompt {
    match technique {
        Technique::MemorylessCQbyCQ => templates.memoryless(&case.story, cq),
        Technique::Ontogenia => templates.ontogenia(&case.story, cq, odps, None),
    }
}

// One call per CQ on up to `concurrency` worker threads; results come back
// over a channel and are reordered to manifest order.
fn run_standalone(
    case: &Case,
    technique: Technique,
    gateway: &Gateway,
    templates: &PromptTemplates,
    odps: &OdpCatalog,
) -> Result<Collected, PipelineError> {
    let next = AtomicUsize::new(0);
    let workers = gateway.config().concurrency.clamp(1, case.cqs.len().max(1));
    let (tx, rx) = mpsc::channel::<(usize, Step)>();
    std::thread::scope(|s| {
        for _ in 0..workers {
            let tx = tx.clone();
            let next = &next;
            s.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(cq) = case.cqs.get(i) else { break };
                let prompt = standalone_prompt(templates, odps, technique, case, cq);
                if tx.send((i, call(gateway, prompt))).is_err() {
                    break;
                }
            });
        }
    });
    drop(tx);
    let mut steps: Vec<(usize, Step)> = rx.into_iter().collect();
    steps.sort_by_key(|(i, _)| *i);
    let mut out = Collected::new();
    for (_, step) in steps {
        out.push(step)?;
    }
    Ok(out)
}

/// Each CQ is a standalone unit: one call using only the story and that CQ.
pub fn generate_independent(case: &Case, technique: Technique, gateway: &Gateway) -> Result<RunResult, PipelineError> {
    generate_independent_with(case, technique, gateway, &PromptTemplates::bundled(), &OdpCatalog::bundled())
}

pub fn generate_independent_with(
    case: &Case,
    technique: Technique,
    gateway: &Gateway,
    templates: &PromptTemplates,
    odps: &OdpCatalog,
) -> Result<RunResult, PipelineError> {
    let collected = run_standalone(case, technique, gateway, templates, odps)?;
    let merged = fold_merge(collected.per_cq.iter().map(|(_, r)| r));
    Ok(collected.finish(case, technique, Mode::Independent, gateway, merged))
}

/// A single ontology for the whole case. Memoryless merges standalone
/// outputs at the end; Ontogenia runs sequentially and feeds the merged
/// ontology so far into each prompt.
pub fn generate_incremental(case: &Case, technique: Technique, gateway: &Gateway) -> Result<RunResult, PipelineError> {
    generate_incremental_with(case, technique, gateway, &PromptTemplates::bundled(), &OdpCatalog::bundled())
}

pub fn generate_incremental_with(
    case: &Case,
    technique: Technique,
    gateway: &Gateway,
    templates: &PromptTemplates,
    odps: &OdpCatalog,
) -> Result<RunResult, PipelineError> {
    match technique {
        Technique::MemorylessCQbyCQ => {
            let collected = run_standalone(case, technique, gateway, templates, odps)?;
            let merged = fold_merge(collected.per_cq.iter().map(|(_, r)| r));
            Ok(collected.finish(case, technique, Mode::Incremental, gateway, merged))
        }
        Technique::Ontogenia => {
            let mut out = Collected::new();
            let mut merged = Ontology::new();
            for cq in &case.cqs {
                let prompt = templates.ontogenia(&case.story, cq, odps, Some(&merged));
                out.push(call(gateway, prompt))?;
                if let Some((_, CqResult::Generated(o))) = out.per_cq.last() {
                    merged = merged.merge(o);
                }
            }
            Ok(out.finish(case, technique, Mode::Incremental, gateway, merged))
        }
    }
}

fn term_namespaces(o: &Ontology) -> BTreeSet<String> {
    let headers = o.header_subjects();
    o.triples()
        .iter()
        .flat_map(|t| [t.subject.clone(), Term::Iri(t.predicate.clone()), t.object.clone()])
        .filter(|t| !headers.contains(t))
        .filter_map(|t| match t {
            Term::Iri(i) if !vocab::is_standard(&i) && !i.local_name().is_empty() => Some(i.namespace().to_string()),
            _ => None,
        })
        .collect()
}

/// Rewrites terms in per-call throwaway namespaces under `base`, keeping
/// local names. A namespace is throwaway when exactly one partial output
/// uses it and the prompts did not declare it. Equal local names from
/// different partials end up as the same IRI.
pub fn normalize_namespaces(result: &RunResult, base: &Iri) -> RunResult {
    let mut usage: BTreeMap<String, usize> = BTreeMap::new();
    for (_, r) in &result.per_cq {
        if let Some(o) = r.ontology() {
            for ns in term_namespaces(o) {
                *usage.entry(ns).or_default() += 1;
            }
        }
    }
    let declared: BTreeSet<String> = vocab::standard_prefixes()
        .into_values()
        .map(|i| i.as_str().to_string())
        .chain([PROMPT_NAMESPACE.to_string(), base.as_str().to_string()])
        .collect();
    let throwaway: BTreeSet<String> = usage
        .into_iter()
        .filter(|(ns, n)| *n == 1 && !declared.contains(ns))
        .map(|(ns, _)| ns)
        .collect();

    let rewrite = |o: &Ontology| -> Ontology {
        let headers = o.header_subjects();
        let mut out = o.map_iris(|i| {
            if throwaway.contains(i.namespace()) && !headers.contains(&Term::Iri(i.clone())) && !i.local_name().is_empty() {
                Iri::new(format!("{}{}", base.as_str(), i.local_name())).unwrap_or_else(|_| i.clone())
            } else {
                i.clone()
            }
        });
        let stale: Vec<String> = out
            .prefixes()
            .iter()
            .filter(|(_, ns)| throwaway.contains(ns.as_str()))
            .map(|(name, _)| name.clone())
            .collect();
        for name in stale {
            out.unbind_prefix(&name);
        }
        if !out.prefixes().values().any(|ns| ns == base) {
            let name = if out.prefixes().contains_key("") { "base" } else { "" };
            out.bind_prefix(name, base.clone());
        }
        out
    };

    let per_cq: Vec<(String, CqResult)> = result
        .per_cq
        .iter()
        .map(|(id, r)| {
            let r = match r {
                CqResult::Generated(o) => CqResult::Generated(rewrite(o)),
                failed => failed.clone(),
            };
            (id.clone(), r)
        })
        .collect();
    let merged = fold_merge(per_cq.iter().map(|(_, r)| r));
    RunResult {
        per_cq,
        merged,
        ..result.clone()
    }
}
