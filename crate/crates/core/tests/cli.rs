mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::*;

fn ontodraft(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ontodraft"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .unwrap()
}

fn path(rel: &str) -> String {
    fixtures().join(rel).to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn generate_evaluate_report() {
    let tmp = tempfile::tempdir().unwrap();
    let config = path("config/mock-book.toml");
    let gen = ontodraft(tmp.path(), &["--config", &config, "generate", &path("cases/book"), "-t", "memoryless"]);
    assert!(gen.status.success(), "{}", String::from_utf8_lossy(&gen.stderr));
    let run_dir = stdout(&gen).trim().to_string();
    assert!(Path::new(&run_dir).join("merged.ttl").is_file());

    let eval = ontodraft(tmp.path(), &["evaluate", &run_dir, &path("cases/book")]);
    assert!(eval.status.success(), "{}", String::from_utf8_lossy(&eval.stderr));
    let text = stdout(&eval);
    assert!(text.contains("cq01\tModelled"), "{text}");
    assert!(text.contains("strict 1"));

    let report = ontodraft(tmp.path(), &["report", &run_dir]);
    assert!(report.status.success());
    let md = std::fs::read_to_string(tmp.path().join("report/report.md")).unwrap();
    assert!(md.contains("memoryless"), "{md}");

    let again = ontodraft(tmp.path(), &["--config", &config, "generate", &path("cases/book"), "-t", "memoryless"]);
    assert_eq!(again.status.code(), Some(1), "existing run dir needs --force");
}

#[test]
fn evaluate_a_turtle_file() {
    let tmp = tempfile::tempdir().unwrap();
    let out = ontodraft(tmp.path(), &["evaluate", &path("book/part_b.ttl"), &path("cases/book")]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("cq01\tMinorIssue"));
    let verdicts = std::fs::read_to_string(tmp.path().join("eval/part_b/verdicts.csv")).unwrap();
    assert!(verdicts.contains("hasAuthor"), "{verdicts}");
}

#[test]
fn scan_prints_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let out = ontodraft(tmp.path(), &["scan", &path("pitfalls/p29.ttl")]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("code,subject,explanation\n"));
    assert!(text.lines().nth(1).unwrap().starts_with("P29,"));
}

#[test]
fn dataset_check_passes_on_fixtures() {
    let tmp = tempfile::tempdir().unwrap();
    let out = ontodraft(tmp.path(), &["dataset", "check", &path("cases/book"), &path("cases/library"), &path("cases/theatre")]);
    assert!(out.status.success(), "{}", stdout(&out));
}

#[test]
fn kappa_from_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("r.csv");
    std::fs::write(&csv, "a,b\ny,y\ny,n\nn,n\nn,n\n").unwrap();
    let out = ontodraft(tmp.path(), &["kappa", csv.to_str().unwrap()]);
    assert!(out.status.success());
    let k: f64 = stdout(&out).trim().parse().unwrap();
    assert!((k - 0.5).abs() < 1e-12);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| ontodraft(tmp.path(), args).status.code();
    assert_eq!(code(&["frobnicate"]), Some(2));
    assert_eq!(code(&["generate", &path("cases/book"), "-t", "nope"]), Some(2));
    assert_eq!(code(&["evaluate", &path("book/part_a.ttl"), "/nonexistent/case"]), Some(3));
    assert_eq!(code(&["generate", &path("cases/book"), "-t", "ontogenia"]), Some(4));
    assert_eq!(code(&["--config", "/nonexistent.toml", "generate", &path("cases/book"), "-t", "ontogenia"]), Some(4));
    assert_eq!(code(&["scan", "/nonexistent.ttl"]), Some(1));
}
