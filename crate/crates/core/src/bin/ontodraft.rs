use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ontodraft::dataset::{load_case, validate_case, Case};
use ontodraft::eval::{cohens_kappa, read_rater_csv};
use ontodraft::llm::{Gateway, ModelConfig};
use ontodraft::ontology::{parse_turtle, Iri, Ontology};
use ontodraft::pipeline::{generate_incremental, generate_independent, load_run_dir, normalize_namespaces, write_run_dir, Mode};
use ontodraft::pitfall::{findings_csv, scan_with, HttpProbe, OntologyProbe};
use ontodraft::prompt::Technique;
use ontodraft::report::{evaluate, render_tables, write_eval_dir, Candidate, EvaluateError, RunSummary};

/// Draft OWL ontologies from competency questions and evaluate them.
///
/// Exit codes: 0 success, 1 runtime error or failed check, 2 bad arguments,
/// 3 case error or missing gold, 4 config or authentication error.
#[derive(Parser)]
#[command(name = "ontodraft", version)]
struct Cli {
    /// Model config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output root directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Replace existing output directories.
    #[arg(long, global = true)]
    force: bool,
    /// Dereference the ontology IRI when checking P37.
    #[arg(long = "online-p37", global = true)]
    online_p37: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an ontology for a case into <out>/runs/<run-id>/.
    Generate {
        case_dir: PathBuf,
        #[arg(long, short)]
        technique: Technique,
        #[arg(long, short, default_value = "independent")]
        mode: Mode,
        /// Rewrite throwaway namespaces under this IRI.
        #[arg(long)]
        normalize_base: Option<String>,
    },
    /// Evaluate a run directory or a Turtle file against a case.
    Evaluate { candidate: PathBuf, case_dir: PathBuf },
    /// Scan Turtle files for critical pitfalls and print CSV findings.
    Scan {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Render comparison tables from evaluation summaries into <out>/report/.
    Report {
        /// summary.json files, or directories containing one (directly or in eval/).
        #[arg(required = true)]
        summaries: Vec<PathBuf>,
    },
    /// Dataset maintenance.
    Dataset {
        #[command(subcommand)]
        command: DatasetCommand,
    },
    /// Cohen's kappa between two raters from a two-column CSV.
    Kappa {
        csv: PathBuf,
        #[arg(long)]
        no_header: bool,
    },
}

#[derive(Subcommand)]
enum DatasetCommand {
    /// Validate case directories.
    Check {
        #[arg(required = true)]
        case_dirs: Vec<PathBuf>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl std::fmt::Display) -> Failure {
    Failure {
        code,
        message: message.to_string(),
    }
}

const RUNTIME: u8 = 1;
const CASE: u8 = 3;
const CONFIG: u8 = 4;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Generate {
            case_dir,
            technique,
            mode,
            normalize_base,
        } => generate(cli, case_dir, *technique, *mode, normalize_base.as_deref()),
        Command::Evaluate { candidate, case_dir } => evaluate_cmd(cli, candidate, case_dir),
        Command::Scan { files } => scan(cli, files),
        Command::Report { summaries } => report(cli, summaries),
        Command::Dataset {
            command: DatasetCommand::Check { case_dirs },
        } => dataset_check(case_dirs),
        Command::Kappa { csv, no_header } => kappa(csv, !no_header),
    }
}

fn load(case_dir: &Path) -> Result<Case, Failure> {
    load_case(case_dir).map_err(|e| fail(CASE, e))
}

fn probe(cli: &Cli) -> Option<HttpProbe> {
    cli.online_p37.then(HttpProbe::default)
}

fn generate(cli: &Cli, case_dir: &Path, technique: Technique, mode: Mode, base: Option<&str>) -> Result<(), Failure> {
    let case = load(case_dir)?;
    let config_path = cli.config.as_ref().ok_or_else(|| fail(CONFIG, "generate needs --config"))?;
    let cfg = ModelConfig::load(config_path).map_err(|e| fail(CONFIG, e))?;
    let base = base
        .map(|b| Iri::new(b).map_err(|e| fail(2, format!("--normalize-base: {e}"))))
        .transpose()?;
    let gateway = Gateway::new(cfg).map_err(|e| fail(CONFIG, e))?;
    let result = match mode {
        Mode::Independent => generate_independent(&case, technique, &gateway),
        Mode::Incremental => generate_incremental(&case, technique, &gateway),
    }
    .map_err(|e| fail(CONFIG, e))?;
    let result = match base {
        Some(b) => normalize_namespaces(&result, &b),
        None => result,
    };
    let dir = write_run_dir(&result, &cli.out.join("runs"), cli.force).map_err(|e| fail(RUNTIME, e))?;
    for (id, f) in result.failures() {
        eprintln!("warning: {id}: {f}");
    }
    println!("{}", dir.display());
    Ok(())
}

fn evaluate_cmd(cli: &Cli, candidate: &Path, case_dir: &Path) -> Result<(), Failure> {
    let case = load(case_dir)?;
    let probe = probe(cli);
    let probe = probe.as_ref().map(|p| p as &dyn OntologyProbe);
    let to_failure = |e: EvaluateError| match e {
        EvaluateError::MissingGold(_) => fail(CASE, e),
        EvaluateError::Score(_) => fail(CASE, e),
    };

    let (eval, summary, eval_dir) = if candidate.is_dir() {
        let run = load_run_dir(candidate).map_err(|e| fail(RUNTIME, e))?;
        if run.manifest.case_id != case.id() {
            eprintln!(
                "warning: run was generated for case `{}`, evaluating against `{}`",
                run.manifest.case_id,
                case.id()
            );
        }
        let input = match run.manifest.mode {
            Mode::Independent => Candidate::PerCq {
                partials: &run.partials,
                merged: &run.merged,
            },
            Mode::Incremental => Candidate::Single(&run.merged),
        };
        let eval = evaluate(&case, input, probe).map_err(to_failure)?;
        let summary = eval.summary(&run.manifest.run_id, run.manifest.technique.as_str(), &run.manifest.model);
        (eval, summary, candidate.join("eval"))
    } else {
        let ontology = read_ttl(candidate)?;
        let stem = candidate.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        let eval = evaluate(&case, Candidate::Single(&ontology), probe).map_err(to_failure)?;
        let summary = eval.summary(&stem, "-", "-");
        (eval, summary, cli.out.join("eval").join(&stem))
    };

    write_eval_dir(&eval_dir, &case, &eval, &summary, cli.force).map_err(|e| fail(RUNTIME, e))?;
    for note in &eval.scan_notes {
        eprintln!("note: {note}");
    }
    for v in &eval.verdicts {
        println!("{}\t{}", v.cq_id, v.status);
    }
    println!("strict {}", eval.scores.strict);
    println!("relaxed {}", eval.scores.relaxed);
    println!("{}", eval_dir.display());
    Ok(())
}

fn read_ttl(path: &Path) -> Result<Ontology, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| fail(RUNTIME, format!("{}: {e}", path.display())))?;
    parse_turtle(&text).map_err(|e| fail(RUNTIME, format!("{}: {e}", path.display())))
}

fn scan(cli: &Cli, files: &[PathBuf]) -> Result<(), Failure> {
    let probe = probe(cli);
    let probe = probe.as_ref().map(|p| p as &dyn OntologyProbe);
    for (i, path) in files.iter().enumerate() {
        let outcome = scan_with(&read_ttl(path)?, probe);
        let csv = findings_csv(&outcome.findings);
        if files.len() > 1 {
            println!("# {}", path.display());
        }
        // Print the header once when scanning several files.
        let body = if i > 0 { csv.split_once('\n').map_or("", |(_, rest)| rest) } else { &csv };
        print!("{body}");
        for note in outcome.notes {
            eprintln!("note: {}: {note}", path.display());
        }
    }
    Ok(())
}

fn read_summary(path: &Path) -> Result<RunSummary, Failure> {
    let file = if path.is_dir() {
        [path.join("summary.json"), path.join("eval").join("summary.json")]
            .into_iter()
            .find(|p| p.is_file())
            .ok_or_else(|| fail(RUNTIME, format!("{}: no summary.json found", path.display())))?
    } else {
        path.to_path_buf()
    };
    let text = std::fs::read_to_string(&file).map_err(|e| fail(RUNTIME, format!("{}: {e}", file.display())))?;
    serde_json::from_str(&text).map_err(|e| fail(RUNTIME, format!("{}: {e}", file.display())))
}

fn report(cli: &Cli, paths: &[PathBuf]) -> Result<(), Failure> {
    let summaries = paths.iter().map(|p| read_summary(p)).collect::<Result<Vec<_>, _>>()?;
    let tables = render_tables(&summaries).map_err(|e| fail(RUNTIME, e))?;
    let dir = tables.write(&cli.out.join("report"), cli.force).map_err(|e| fail(RUNTIME, e))?;
    println!("{}", dir.display());
    Ok(())
}

fn dataset_check(dirs: &[PathBuf]) -> Result<(), Failure> {
    let mut problems = 0;
    for dir in dirs {
        let case = load(dir)?;
        let diagnostics = validate_case(&case);
        for d in &diagnostics {
            println!("{}: {d}", case.id());
        }
        if diagnostics.is_empty() {
            println!("{}: ok ({} CQs)", case.id(), case.cqs.len());
        }
        problems += diagnostics.len();
    }
    if problems > 0 {
        return Err(fail(RUNTIME, format!("{problems} problem(s) found")));
    }
    Ok(())
}

fn kappa(path: &Path, header: bool) -> Result<(), Failure> {
    let file = File::open(path).map_err(|e| fail(RUNTIME, format!("{}: {e}", path.display())))?;
    let (a, b) = read_rater_csv(file, header).map_err(|e| fail(RUNTIME, e))?;
    let k = cohens_kappa(&a, &b).map_err(|e| fail(RUNTIME, e))?;
    println!("{k}");
    Ok(())
}
