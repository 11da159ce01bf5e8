//! C interface to the ontodraft toolkit.
//!
//! Objects are opaque handles released with their `_free` function. Strings
//! returned through `char **out` are owned by the caller and must be
//! released with `og_string_free`. Every fallible call returns an
//! `OgStatus`; on failure `og_last_error` describes the problem.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use ontodraft::dataset::{load_case, Case};
use ontodraft::eval::cohens_kappa;
use ontodraft::ontology::{parse_turtle, serialize_turtle, Ontology};
use ontodraft::pitfall::{findings_csv, scan};
use ontodraft::report::{evaluate, Candidate, EvaluateError};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    CaseError = 4,
    MissingGold = 5,
    EvalError = 6,
    KappaError = 7,
    Panic = 99,
}

/// A parsed ontology.
pub struct OgOntology(Ontology);

/// A loaded evaluation case.
pub struct OgCase(Case);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl ToString) {
    let text = message.to_string().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).unwrap_or_default());
}

struct Fail(OgStatus, String);

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> OgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            OgStatus::Ok
        }
        Ok(Err(Fail(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            OgStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(OgStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Fail(OgStatus::InvalidUtf8, format!("{name}: {e}")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| Fail(OgStatus::NullPointer, format!("{name} is null")))
}

unsafe fn put<T>(out: *mut *mut T, value: *mut T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail(OgStatus::NullPointer, "out is null".into()));
    }
    *out = value;
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Fail> {
    let c = CString::new(s).map_err(|e| Fail(OgStatus::InvalidUtf8, e.to_string()))?;
    put(out, c.into_raw())
}

/// Message for the last failed call on this thread. The pointer stays valid
/// until the next call on the same thread.
#[no_mangle]
pub extern "C" fn og_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn og_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn og_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses Turtle text into a new ontology handle.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn og_ontology_parse(text: *const c_char, out: *mut *mut OgOntology) -> OgStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        let o = parse_turtle(text).map_err(|e| Fail(OgStatus::ParseError, e.to_string()))?;
        put(out, Box::into_raw(Box::new(OgOntology(o))))
    })
}

/// # Safety
/// `o` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn og_ontology_free(o: *mut OgOntology) {
    if !o.is_null() {
        drop(Box::from_raw(o));
    }
}

/// Number of triples, or 0 for a null handle.
///
/// # Safety
/// `o` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn og_ontology_triple_count(o: *const OgOntology) -> usize {
    o.as_ref().map_or(0, |o| o.0.len())
}

/// # Safety
/// `o` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn og_ontology_serialize(o: *const OgOntology, out: *mut *mut c_char) -> OgStatus {
    guard(|| {
        let o = ref_arg(o, "ontology")?;
        put_string(out, serialize_turtle(&o.0))
    })
}

/// Number of named classes, object properties and data properties.
///
/// # Safety
/// `o` must be a live handle; the count pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn og_ontology_signature_counts(
    o: *const OgOntology,
    classes: *mut usize,
    object_properties: *mut usize,
    data_properties: *mut usize,
) -> OgStatus {
    guard(|| {
        let o = ref_arg(o, "ontology")?;
        if classes.is_null() || object_properties.is_null() || data_properties.is_null() {
            return Err(Fail(OgStatus::NullPointer, "count pointer is null".into()));
        }
        let sig = o.0.signature();
        *classes = sig.classes.len();
        *object_properties = sig.object_properties.len();
        *data_properties = sig.data_properties.len();
        Ok(())
    })
}

/// Union of two ontologies as a new handle.
///
/// # Safety
/// `a` and `b` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn og_ontology_merge(a: *const OgOntology, b: *const OgOntology, out: *mut *mut OgOntology) -> OgStatus {
    guard(|| {
        let merged = ref_arg(a, "a")?.0.merge(&ref_arg(b, "b")?.0);
        put(out, Box::into_raw(Box::new(OgOntology(merged))))
    })
}

/// Offline pitfall scan as `code,subject,explanation` CSV.
///
/// # Safety
/// `o` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn og_scan_csv(o: *const OgOntology, out: *mut *mut c_char) -> OgStatus {
    guard(|| {
        let o = ref_arg(o, "ontology")?;
        put_string(out, findings_csv(&scan(&o.0)))
    })
}

/// Loads a case directory.
///
/// # Safety
/// `dir` must be a NUL-terminated path; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn og_case_load(dir: *const c_char, out: *mut *mut OgCase) -> OgStatus {
    guard(|| {
        let dir = str_arg(dir, "dir")?;
        let case = load_case(Path::new(dir)).map_err(|e| Fail(OgStatus::CaseError, e.to_string()))?;
        put(out, Box::into_raw(Box::new(OgCase(case))))
    })
}

/// # Safety
/// `c` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn og_case_free(c: *mut OgCase) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Number of CQs in the case, or 0 for a null handle.
///
/// # Safety
/// `c` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn og_case_cq_count(c: *const OgCase) -> usize {
    c.as_ref().map_or(0, |c| c.0.cqs.len())
}

/// Evaluates `candidate` against every CQ of `case` and writes the full
/// evaluation (coverage, verdicts, scores, superfluous elements, pitfalls)
/// as JSON.
///
/// # Safety
/// `case` and `candidate` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn og_evaluate_json(case: *const OgCase, candidate: *const OgOntology, out: *mut *mut c_char) -> OgStatus {
    guard(|| {
        let case = ref_arg(case, "case")?;
        let candidate = ref_arg(candidate, "candidate")?;
        let eval = evaluate(&case.0, Candidate::Single(&candidate.0), None).map_err(|e| match e {
            EvaluateError::MissingGold(_) => Fail(OgStatus::MissingGold, e.to_string()),
            other => Fail(OgStatus::EvalError, other.to_string()),
        })?;
        let json = serde_json::to_string(&eval).map_err(|e| Fail(OgStatus::EvalError, e.to_string()))?;
        put_string(out, json)
    })
}

/// Cohen's kappa between two label arrays of length `n`.
///
/// # Safety
/// `a` and `b` must point to `n` NUL-terminated strings each; `out` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn og_kappa(a: *const *const c_char, b: *const *const c_char, n: usize, out: *mut f64) -> OgStatus {
    guard(|| {
        if a.is_null() || b.is_null() || out.is_null() {
            return Err(Fail(OgStatus::NullPointer, "argument is null".into()));
        }
        let read = |arr: *const *const c_char, name: &str| -> Result<Vec<&str>, Fail> {
            (0..n).map(|i| str_arg(*arr.add(i), name)).collect()
        };
        let (la, lb) = (read(a, "a")?, read(b, "b")?);
        *out = cohens_kappa(&la, &lb).map_err(|e| Fail(OgStatus::KappaError, e.to_string()))?;
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ptr;

    #[test]
    fn null_arguments_are_reported() {
        let mut o: *mut OgOntology = ptr::null_mut();
        assert_eq!(unsafe { og_ontology_parse(ptr::null(), &mut o) }, OgStatus::NullPointer);
        let msg = unsafe { CStr::from_ptr(og_last_error()) }.to_str().unwrap();
        assert!(msg.contains("null"));
        assert_eq!(unsafe { og_ontology_triple_count(ptr::null()) }, 0);
    }
}
