//! C ABI for skillmine.
//!
//! Objects are opaque handles released with their `_free` function. Every
//! fallible call returns an [`SmStatus`]; on failure [`sm_last_error`] holds
//! a message for the calling thread. Strings returned through `out`
//! parameters are owned by the caller and released with [`sm_string_free`].
//! Traces are passed as JSON arrays of action names.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use skillmine::conformance::{optimal_alignment, token_replay};
use skillmine::discovery::discover_skill;
use skillmine::ingestion::load_library;
use skillmine::model::{EventLog, ProcessTree, Provenance, Skill, SkillLibrary, Trace};
use skillmine::retrieval::retrieve_by_conformance;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidJson = 3,
    InvalidModel = 4,
    Conformance = 5,
    Io = 6,
    Retrieval = 7,
    NotFound = 8,
    Panic = 9,
}

/// A skill: process tree, workflow net and query texts.
pub struct SmSkill(Skill);

/// A collection of skills keyed by id.
pub struct SmLibrary(SkillLibrary);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl std::fmt::Display) {
    let msg = CString::new(message.to_string().replace('\0', " ")).expect("NUL removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

struct Failure(SmStatus, String);

fn fail<E: std::fmt::Display>(status: SmStatus) -> impl Fn(E) -> Failure {
    move |e| Failure(status, e.to_string())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            SmStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SmStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(SmStatus::NullArgument, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(SmStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure(SmStatus::NullArgument, format!("{name} is null")))
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure(SmStatus::NullArgument, "out is null".into()));
    }
    out.write(value);
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    let c = CString::new(s).map_err(fail(SmStatus::InvalidJson))?;
    put(out, c.into_raw())
}

unsafe fn trace(p: *const c_char) -> Result<Trace, Failure> {
    let json = text(p, "trace_json")?;
    let names: Vec<String> = serde_json::from_str(json).map_err(fail(SmStatus::InvalidJson))?;
    Trace::from_names("trace", &names).map_err(fail(SmStatus::InvalidModel))
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call on the same thread.
#[no_mangle]
pub extern "C" fn sm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a skill from a process tree in text form, e.g. `SEQ('A','B')`.
///
/// # Safety
/// `id` and `tree` must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sm_skill_from_tree(
    id: *const c_char,
    tree: *const c_char,
    out: *mut *mut SmSkill,
) -> SmStatus {
    guard(|| {
        let id = text(id, "id")?;
        let tree: ProcessTree = text(tree, "tree")?
            .parse()
            .map_err(fail(SmStatus::InvalidModel))?;
        let skill = Skill::from_tree(id, tree, Vec::new(), Provenance::default())
            .map_err(fail(SmStatus::InvalidModel))?;
        put(out, Box::into_raw(Box::new(SmSkill(skill))))
    })
}

/// Discovers a skill from an event log given as JSON
/// (`{"process_id", "query_texts", "traces": [{"id", "actions"}]}`).
///
/// # Safety
/// `log_json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sm_skill_discover(
    log_json: *const c_char,
    out: *mut *mut SmSkill,
) -> SmStatus {
    guard(|| {
        let log: EventLog = serde_json::from_str(text(log_json, "log_json")?)
            .map_err(fail(SmStatus::InvalidJson))?;
        let skill = discover_skill(&log).map_err(fail(SmStatus::InvalidModel))?;
        put(out, Box::into_raw(Box::new(SmSkill(skill))))
    })
}

/// # Safety
/// `skill` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sm_skill_free(skill: *mut SmSkill) {
    if !skill.is_null() {
        drop(Box::from_raw(skill));
    }
}

/// # Safety
/// `skill` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sm_skill_id(skill: *const SmSkill, out: *mut *mut c_char) -> SmStatus {
    guard(|| put_string(out, handle(skill, "skill")?.0.skill_id.clone()))
}

/// Process tree of the skill in text form.
///
/// # Safety
/// `skill` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sm_skill_tree(skill: *const SmSkill, out: *mut *mut c_char) -> SmStatus {
    guard(|| put_string(out, handle(skill, "skill")?.0.tree.to_string()))
}

/// Whole skill as JSON.
///
/// # Safety
/// `skill` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sm_skill_json(skill: *const SmSkill, out: *mut *mut c_char) -> SmStatus {
    guard(|| {
        let json = serde_json::to_string(&handle(skill, "skill")?.0)
            .map_err(fail(SmStatus::InvalidJson))?;
        put_string(out, json)
    })
}

/// Alignment-based fitness of a trace against the skill's net.
///
/// # Safety
/// `skill` must be a live handle, `trace_json` a NUL-terminated string and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sm_alignment_fitness(
    skill: *const SmSkill,
    trace_json: *const c_char,
    out: *mut f64,
) -> SmStatus {
    guard(|| {
        let a = optimal_alignment(&trace(trace_json)?, &handle(skill, "skill")?.0.net)
            .map_err(fail(SmStatus::Conformance))?;
        put(out, a.fitness)
    })
}

/// Token-replay fitness of a trace against the skill's net.
///
/// # Safety
/// As for [`sm_alignment_fitness`].
#[no_mangle]
pub unsafe extern "C" fn sm_replay_fitness(
    skill: *const SmSkill,
    trace_json: *const c_char,
    out: *mut f64,
) -> SmStatus {
    guard(|| {
        let r = token_replay(&trace(trace_json)?, &handle(skill, "skill")?.0.net)
            .map_err(fail(SmStatus::Conformance))?;
        put(out, r.fitness)
    })
}

/// Optimal alignment as JSON (`moves`, `cost`, `fitness`).
///
/// # Safety
/// `skill` must be a live handle, `trace_json` a NUL-terminated string and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sm_align(
    skill: *const SmSkill,
    trace_json: *const c_char,
    out: *mut *mut c_char,
) -> SmStatus {
    guard(|| {
        let a = optimal_alignment(&trace(trace_json)?, &handle(skill, "skill")?.0.net)
            .map_err(fail(SmStatus::Conformance))?;
        put_string(
            out,
            serde_json::to_string(&a).map_err(fail(SmStatus::InvalidJson))?,
        )
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sm_library_new(out: *mut *mut SmLibrary) -> SmStatus {
    guard(|| put(out, Box::into_raw(Box::new(SmLibrary(SkillLibrary::new())))))
}

/// Loads a library directory written by `skillmine discover` or `synth`.
///
/// # Safety
/// `dir` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sm_library_load(dir: *const c_char, out: *mut *mut SmLibrary) -> SmStatus {
    guard(|| {
        let lib = load_library(text(dir, "dir")?).map_err(fail(SmStatus::Io))?;
        put(out, Box::into_raw(Box::new(SmLibrary(lib))))
    })
}

/// Adds a copy of `skill`, replacing a skill with the same id.
///
/// # Safety
/// `library` and `skill` must be live handles.
#[no_mangle]
pub unsafe extern "C" fn sm_library_add(
    library: *mut SmLibrary,
    skill: *const SmSkill,
) -> SmStatus {
    guard(|| {
        let s = handle(skill, "skill")?.0.clone();
        let lib = library
            .as_mut()
            .ok_or_else(|| Failure(SmStatus::NullArgument, "library is null".into()))?;
        lib.0
            .insert(s)
            .map(drop)
            .map_err(fail(SmStatus::InvalidModel))
    })
}

/// Number of skills; 0 for a null handle.
///
/// # Safety
/// `library` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sm_library_len(library: *const SmLibrary) -> usize {
    library.as_ref().map_or(0, |l| l.0.len())
}

/// Copy of the skill with id `id`.
///
/// # Safety
/// `library` must be a live handle, `id` a NUL-terminated string and `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn sm_library_get(
    library: *const SmLibrary,
    id: *const c_char,
    out: *mut *mut SmSkill,
) -> SmStatus {
    guard(|| {
        let id = text(id, "id")?;
        let skill = handle(library, "library")?
            .0
            .get(id)
            .ok_or_else(|| Failure(SmStatus::NotFound, format!("unknown skill '{id}'")))?;
        put(out, Box::into_raw(Box::new(SmSkill(skill.clone()))))
    })
}

/// Ranks the library by alignment fitness of `thought_json`; writes the
/// top-`k` list as JSON.
///
/// # Safety
/// `library` must be a live handle, `thought_json` a NUL-terminated string
/// and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sm_retrieve_conformance(
    library: *const SmLibrary,
    thought_json: *const c_char,
    k: usize,
    out: *mut *mut c_char,
) -> SmStatus {
    guard(|| {
        let list =
            retrieve_by_conformance(&trace(thought_json)?, &handle(library, "library")?.0, k)
                .map_err(fail(SmStatus::Retrieval))?;
        put_string(
            out,
            serde_json::to_string(&list).map_err(fail(SmStatus::InvalidJson))?,
        )
    })
}

/// # Safety
/// `library` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sm_library_free(library: *mut SmLibrary) {
    if !library.is_null() {
        drop(Box::from_raw(library));
    }
}
