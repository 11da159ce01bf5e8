use std::ffi::{c_char, CStr, CString};
use std::path::{Path, PathBuf};
use std::ptr;

use ontodraft_ffi::*;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(og_last_error()) }.to_string_lossy().into_owned()
}

unsafe fn take_string(p: *mut c_char) -> String {
    let s = CStr::from_ptr(p).to_string_lossy().into_owned();
    og_string_free(p);
    s
}

fn parse(text: &str) -> *mut OgOntology {
    let c = CString::new(text).unwrap();
    let mut o = ptr::null_mut();
    assert_eq!(unsafe { og_ontology_parse(c.as_ptr(), &mut o) }, OgStatus::Ok, "{}", last_error());
    o
}

#[test]
fn parse_count_serialize_free() {
    let o = parse("@prefix : <http://ex.org/#> . :A a owl:Class . :p a owl:ObjectProperty ; rdfs:domain :A .");
    unsafe {
        assert_eq!(og_ontology_triple_count(o), 3);
        let (mut c, mut op, mut dp) = (0, 0, 0);
        assert_eq!(og_ontology_signature_counts(o, &mut c, &mut op, &mut dp), OgStatus::Ok);
        assert_eq!((c, op, dp), (1, 1, 0));
        let mut text = ptr::null_mut();
        assert_eq!(og_ontology_serialize(o, &mut text), OgStatus::Ok);
        let again = parse(&take_string(text));
        assert_eq!(og_ontology_triple_count(again), 3);
        og_ontology_free(again);
        og_ontology_free(o);
    }
}

#[test]
fn parse_error_sets_message() {
    let c = CString::new(":A a owl:Class .").unwrap();
    let mut o = ptr::null_mut();
    assert_eq!(unsafe { og_ontology_parse(c.as_ptr(), &mut o) }, OgStatus::ParseError);
    assert!(o.is_null());
    assert!(last_error().contains("line 1"), "{}", last_error());
}

#[test]
fn merge_and_scan() {
    let a = parse("@prefix : <http://ex.org/#> . :A rdfs:subClassOf :B .");
    let b = parse("@prefix : <http://ex.org/#> . :B rdfs:subClassOf :A .");
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(og_ontology_merge(a, b, &mut m), OgStatus::Ok);
        assert_eq!(og_ontology_triple_count(m), 2);
        let mut csv = ptr::null_mut();
        assert_eq!(og_scan_csv(m, &mut csv), OgStatus::Ok);
        let csv = take_string(csv);
        assert!(csv.lines().any(|l| l.starts_with("P06,")), "{csv}");
        for h in [a, b, m] {
            og_ontology_free(h);
        }
    }
}

#[test]
fn evaluate_gold_against_own_case() {
    let dir = CString::new(fixtures().join("cases/book").to_str().unwrap()).unwrap();
    let gold = std::fs::read_to_string(fixtures().join("cases/book/gold/cq01.ttl")).unwrap();
    let o = parse(&gold);
    unsafe {
        let mut case = ptr::null_mut();
        assert_eq!(og_case_load(dir.as_ptr(), &mut case), OgStatus::Ok, "{}", last_error());
        assert_eq!(og_case_cq_count(case), 1);
        let mut json = ptr::null_mut();
        assert_eq!(og_evaluate_json(case, o, &mut json), OgStatus::Ok, "{}", last_error());
        let v: serde_json::Value = serde_json::from_str(&take_string(json)).unwrap();
        assert_eq!(v["scores"]["strict"], 1.0);
        assert_eq!(v["scores"]["relaxed"], 1.0);
        og_case_free(case);
        og_ontology_free(o);
    }
}

#[test]
fn missing_case_is_a_case_error() {
    let dir = CString::new("/nonexistent/case").unwrap();
    let mut case = ptr::null_mut();
    assert_eq!(unsafe { og_case_load(dir.as_ptr(), &mut case) }, OgStatus::CaseError);
    assert!(case.is_null());
}

#[test]
fn kappa_values() {
    let labels = |xs: &[&str]| xs.iter().map(|x| CString::new(*x).unwrap()).collect::<Vec<_>>();
    let a = labels(&["y", "y", "n", "n"]);
    let b = labels(&["y", "n", "n", "n"]);
    let pa: Vec<*const c_char> = a.iter().map(|s| s.as_ptr()).collect();
    let pb: Vec<*const c_char> = b.iter().map(|s| s.as_ptr()).collect();
    let mut k = f64::NAN;
    assert_eq!(unsafe { og_kappa(pa.as_ptr(), pb.as_ptr(), 4, &mut k) }, OgStatus::Ok);
    assert!((k - 0.5).abs() < 1e-12);
    assert_eq!(unsafe { og_kappa(pa.as_ptr(), pb.as_ptr(), 0, &mut k) }, OgStatus::KappaError);
}

#[test]
fn null_handles() {
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { og_ontology_serialize(ptr::null(), &mut out) }, OgStatus::NullPointer);
    assert_eq!(unsafe { og_scan_csv(ptr::null(), &mut out) }, OgStatus::NullPointer);
    unsafe {
        og_ontology_free(ptr::null_mut());
        og_case_free(ptr::null_mut());
        og_string_free(ptr::null_mut());
    }
}

#[test]
fn version_is_set() {
    let v = unsafe { CStr::from_ptr(og_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_function() {
    let header = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/ontodraft.h")).unwrap();
    for f in [
        "og_last_error",
        "og_version",
        "og_string_free",
        "og_ontology_parse",
        "og_ontology_free",
        "og_ontology_triple_count",
        "og_ontology_serialize",
        "og_ontology_signature_counts",
        "og_ontology_merge",
        "og_scan_csv",
        "og_case_load",
        "og_case_free",
        "og_case_cq_count",
        "og_evaluate_json",
        "og_kappa",
    ] {
        assert!(header.contains(&format!("{f}(")), "{f} missing from header");
    }
    assert!(header.contains("typedef struct OgOntology OgOntology;"));
    assert!(header.contains("OG_STATUS_OK = 0"));
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found, skipping");
        return;
    };
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/ontodraft.h");
    let status = std::process::Command::new(cc)
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c"])
        .arg(&header)
        .status()
        .unwrap();
    assert!(status.success());
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| std::process::Command::new(c).arg("--version").output().is_ok_and(|o| o.status.success()))
        .ok_or(())
}
