use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{CqResult, Mode, RunResult};
use crate::ontology::{parse_turtle, serialize_turtle, Ontology, SyntaxError};
use crate::prompt::Technique;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CqManifest {
    pub id: String,
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub triples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partial: Option<String>,
    pub prompt_chars: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub case_id: String,
    pub technique: Technique,
    pub mode: Mode,
    pub model: String,
    pub cqs: Vec<CqManifest>,
    pub merged_triples: usize,
    /// Gateway latency per CQ in seconds; the only non-reproducible field.
    pub timings: BTreeMap<String, f64>,
}

#[derive(Debug, Error)]
pub enum RunDirError {
    #[error("{0} already exists (use --force to overwrite)")]
    Exists(PathBuf),
    #[error("{0} exists and does not look like a run directory; refusing to overwrite")]
    NotARunDir(PathBuf),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: invalid manifest: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Syntax {
        path: PathBuf,
        #[source]
        source: SyntaxError,
    },
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> RunDirError + '_ {
    move |source| RunDirError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), RunDirError> {
    std::fs::write(path, contents).map_err(io(path))
}

/// Creates `dir`. An existing directory is removed first, but only with
/// `force` and only if it contains `marker`.
pub fn prepare_output_dir(dir: &Path, marker: &str, force: bool) -> Result<(), RunDirError> {
    if dir.exists() {
        if !force {
            return Err(RunDirError::Exists(dir.to_path_buf()));
        }
        if !dir.join(marker).is_file() {
            return Err(RunDirError::NotARunDir(dir.to_path_buf()));
        }
        std::fs::remove_dir_all(dir).map_err(io(dir))?;
    }
    std::fs::create_dir_all(dir).map_err(io(dir))
}

pub fn manifest_of(result: &RunResult) -> RunManifest {
    let cqs = result
        .per_cq
        .iter()
        .map(|(id, r)| {
            let prompt_chars = result.prompts.get(id).map_or(0, |p| p.char_length);
            match r {
                CqResult::Generated(o) => CqManifest {
                    id: id.clone(),
                    status: "generated".into(),
                    error: None,
                    triples: Some(o.len()),
                    partial: Some(format!("partial/{id}.ttl")),
                    prompt_chars,
                },
                CqResult::Failed(f) => CqManifest {
                    id: id.clone(),
                    status: "failed".into(),
                    error: Some(f.to_string()),
                    triples: None,
                    partial: None,
                    prompt_chars,
                },
            }
        })
        .collect();
    RunManifest {
        run_id: result.run_id.clone(),
        case_id: result.case_id.clone(),
        technique: result.technique,
        mode: result.mode,
        model: result.model_name.clone(),
        cqs,
        merged_triples: result.merged.len(),
        timings: result.timings.clone(),
    }
}

/// Writes `runs_root/<run-id>/` with the manifest, prompt transcripts,
/// per-CQ Turtle, merged Turtle and a log. An existing run directory is
/// replaced only with `force`.
pub fn write_run_dir(result: &RunResult, runs_root: &Path, force: bool) -> Result<PathBuf, RunDirError> {
    let dir = runs_root.join(&result.run_id);
    prepare_output_dir(&dir, "manifest.json", force)?;
    for sub in ["prompts", "partial"] {
        std::fs::create_dir_all(dir.join(sub)).map_err(io(&dir))?;
    }

    let mut log = String::new();
    let _ = writeln!(
        log,
        "run {} case {} technique {} mode {} model {}",
        result.run_id, result.case_id, result.technique, result.mode, result.model_name
    );
    for (id, r) in &result.per_cq {
        match r {
            CqResult::Generated(o) => {
                write(&dir.join("partial").join(format!("{id}.ttl")), serialize_turtle(o))?;
                let _ = writeln!(log, "{id}: generated {} triples", o.len());
            }
            CqResult::Failed(f) => {
                let _ = writeln!(log, "{id}: failed: {f}");
            }
        }
        if let Some(t) = result.transcripts.get(id) {
            let json = serde_json::to_string_pretty(t).expect("transcript serializes");
            write(&dir.join("prompts").join(format!("{id}.json")), json + "\n")?;
        }
    }
    let _ = writeln!(log, "merged: {} triples", result.merged.len());

    write(&dir.join("merged.ttl"), serialize_turtle(&result.merged))?;
    write(&dir.join("log.txt"), log)?;
    let manifest = serde_json::to_string_pretty(&manifest_of(result)).expect("manifest serializes");
    write(&dir.join("manifest.json"), manifest + "\n")?;
    Ok(dir)
}

#[derive(Debug, Clone)]
pub struct LoadedRun {
    pub dir: PathBuf,
    pub manifest: RunManifest,
    pub merged: Ontology,
    pub partials: BTreeMap<String, Ontology>,
}

fn read_ttl(path: &Path) -> Result<Ontology, RunDirError> {
    let text = std::fs::read_to_string(path).map_err(io(path))?;
    parse_turtle(&text).map_err(|source| RunDirError::Syntax {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_run_dir(dir: &Path) -> Result<LoadedRun, RunDirError> {
    let manifest_path = dir.join("manifest.json");
    let text = std::fs::read_to_string(&manifest_path).map_err(io(&manifest_path))?;
    let manifest: RunManifest = serde_json::from_str(&text).map_err(|e| RunDirError::Manifest {
        path: manifest_path.clone(),
        message: e.to_string(),
    })?;
    let merged = read_ttl(&dir.join("merged.ttl"))?;
    let mut partials = BTreeMap::new();
    for cq in &manifest.cqs {
        if let Some(rel) = &cq.partial {
            partials.insert(cq.id.clone(), read_ttl(&dir.join(rel))?);
        }
    }
    Ok(LoadedRun {
        dir: dir.to_path_buf(),
        manifest,
        merged,
        partials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refuses_foreign_directory() {
        let root = tempfile::tempdir().unwrap();
        std::fs::write(root.path().join("keep.txt"), "x").unwrap();
        assert!(matches!(prepare_output_dir(root.path(), "manifest.json", false), Err(RunDirError::Exists(_))));
        assert!(matches!(prepare_output_dir(root.path(), "manifest.json", true), Err(RunDirError::NotARunDir(_))));
        assert!(root.path().join("keep.txt").exists());
    }
}
