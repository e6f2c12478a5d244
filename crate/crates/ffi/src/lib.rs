//! C ABI for the hkserver simulation library.
//!
//! Conventions:
//! - Every fallible function returns an [`HkStatus`]; `HK_STATUS_OK`
//!   (0) means success. On failure a human-readable message is stored
//!   per thread and can be read with [`hk_last_error`].
//! - Strings returned through `char**` out-parameters are
//!   NUL-terminated UTF-8 allocated by this library; release them with
//!   [`hk_string_free`]. Exact rationals are rendered as `"p/q"`.
//! - Trees are opaque handles created by `hk_tree_from_*` and released
//!   with [`hk_tree_free`]. Node and leaf identifiers are the same
//!   indices the JSON form uses.
//! - All functions are panic-safe at the boundary: an internal panic
//!   is caught and reported as `HK_STATUS_INTERNAL`.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::{c_char, c_int};
use std::panic::{catch_unwind, AssertUnwindSafe};

use hkserver::algo::AggressiveAlgorithm;
use hkserver::harness::{
    make_algorithm, parse_hst_arg, run_experiment, simulate, spread_start, summary_json,
    verify_csv, AdversaryName, AlgorithmName, ExperimentConfig,
};
use hkserver::potential::{verify_run, PotentialParams};
use hkserver::tree::TreeFile;
use hkserver::workfunction::{opt_cost, opt_schedule};
use hkserver::{fmt_rat, parse_rat, Error, NodeId, PointLocation, TreeMetric};

/// Result code of every fallible entry point.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HkStatus {
    Ok = 0,
    /// A required pointer argument was NULL.
    NullPointer = 1,
    /// A string argument was not valid UTF-8.
    Utf8 = 2,
    /// Inputs are structurally invalid (bad tree, point, configuration
    /// or plan).
    InvalidArgument = 3,
    /// A textual input (rational, spec, JSON) failed to parse.
    Parse = 4,
    /// A size or non-termination guard tripped before completion.
    Guard = 5,
    /// A verified invariant was violated during the run.
    Violation = 6,
    /// Operating-system I/O failure.
    Io = 7,
    /// Internal error (precision exhaustion or a caught panic).
    Internal = 8,
}

pub struct HkTree {
    inner: TreeMetric,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let clean: String = msg
        .chars()
        .map(|c| if c == '\0' { ' ' } else { c })
        .collect();
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(clean).unwrap());
}

fn status_of(e: &Error) -> HkStatus {
    match e {
        Error::InvalidTree(_)
        | Error::InvalidPoint(_)
        | Error::InvalidConfig(_)
        | Error::InvalidPlan(_) => HkStatus::InvalidArgument,
        Error::Parse(_) | Error::Json(_) => HkStatus::Parse,
        Error::GuardExceeded(_) | Error::StepGuard(_) => HkStatus::Guard,
        Error::Invariant(_) => HkStatus::Violation,
        Error::Io(_) => HkStatus::Io,
        Error::Precision(_) => HkStatus::Internal,
    }
}

fn fail(e: Error) -> HkStatus {
    set_error(&e.to_string());
    status_of(&e)
}

/// Runs a closure with panics converted to `HK_STATUS_INTERNAL`.
fn guarded(body: impl FnOnce() -> HkStatus) -> HkStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(s) => s,
        Err(_) => {
            set_error("internal panic");
            HkStatus::Internal
        }
    }
}

/// # Safety: `p` must be NULL or a NUL-terminated string.
unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, HkStatus> {
    if p.is_null() {
        set_error(&format!("{what} is NULL"));
        return Err(HkStatus::NullPointer);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(&format!("{what} is not valid UTF-8"));
        HkStatus::Utf8
    })
}

/// # Safety: `p` must point to `len` readable elements when `len > 0`.
unsafe fn read_ids<'a>(p: *const usize, len: usize, what: &str) -> Result<&'a [usize], HkStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        set_error(&format!("{what} is NULL with nonzero length"));
        return Err(HkStatus::NullPointer);
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn read_tree<'a>(t: *const HkTree) -> Result<&'a TreeMetric, HkStatus> {
    if t.is_null() {
        set_error("tree handle is NULL");
        return Err(HkStatus::NullPointer);
    }
    Ok(&(*t).inner)
}

fn write_string(s: String, out: *mut *mut c_char) -> HkStatus {
    if out.is_null() {
        set_error("output pointer is NULL");
        return HkStatus::NullPointer;
    }
    let clean: String = s.chars().map(|c| if c == '\0' { ' ' } else { c }).collect();
    unsafe { *out = CString::new(clean).unwrap().into_raw() };
    HkStatus::Ok
}

fn write_tree(t: TreeMetric, out: *mut *mut HkTree) -> HkStatus {
    if out.is_null() {
        set_error("output pointer is NULL");
        return HkStatus::NullPointer;
    }
    unsafe { *out = Box::into_raw(Box::new(HkTree { inner: t })) };
    HkStatus::Ok
}

macro_rules! ffi_try {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

fn core_try<T>(r: hkserver::Result<T>) -> Result<T, HkStatus> {
    r.map_err(fail)
}

/// Library version as a static string; never freed.
#[no_mangle]
pub extern "C" fn hk_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// The last error message recorded on this thread. The pointer stays
/// valid until the next failing call on the same thread; never freed.
#[no_mangle]
pub extern "C" fn hk_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Releases a string returned by this library. NULL is a no-op.
///
/// # Safety
/// `s` must be a pointer previously returned through a `char**`
/// out-parameter of this library, or NULL.
#[no_mangle]
pub unsafe extern "C" fn hk_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Releases a tree handle. NULL is a no-op.
///
/// # Safety
/// `t` must be a handle previously returned by `hk_tree_from_*` or
/// `hk_embed_bounded_diameter`, or NULL.
#[no_mangle]
pub unsafe extern "C" fn hk_tree_free(t: *mut HkTree) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Parses a tree from its JSON file form
/// `{depth, nodes: [{id, parent, length: "p/q"}]}`.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hk_tree_from_json(json: *const c_char, out: *mut *mut HkTree) -> HkStatus {
    guarded(|| {
        let text = ffi_try!(read_str(json, "json"));
        let file: TreeFile = match serde_json::from_str(text) {
            Ok(f) => f,
            Err(e) => return fail(Error::Json(e)),
        };
        let tree = ffi_try!(core_try(TreeMetric::from_file(&file)));
        write_tree(tree, out)
    })
}

/// Builds a uniform tree from the compact spec
/// `depth:fanout,...:length,...` (e.g. `2:3,2:1,1/2`).
///
/// # Safety
/// `spec` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hk_tree_from_hst(spec: *const c_char, out: *mut *mut HkTree) -> HkStatus {
    guarded(|| {
        let text = ffi_try!(read_str(spec, "spec"));
        let hst = ffi_try!(core_try(parse_hst_arg(text)));
        let tree = ffi_try!(core_try(TreeMetric::from_hst(&hst)));
        write_tree(tree, out)
    })
}

/// Serializes a tree back to its JSON file form.
///
/// # Safety
/// `t` must be a valid tree handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hk_tree_to_json(t: *const HkTree, out: *mut *mut c_char) -> HkStatus {
    guarded(|| {
        let tree = ffi_try!(read_tree(t));
        match serde_json::to_string(&tree.to_file()) {
            Ok(s) => write_string(s, out),
            Err(e) => fail(Error::Json(e)),
        }
    })
}

/// # Safety
/// `t` must be a valid tree handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hk_tree_depth(t: *const HkTree, out: *mut usize) -> HkStatus {
    guarded(|| {
        let tree = ffi_try!(read_tree(t));
        if out.is_null() {
            set_error("output pointer is NULL");
            return HkStatus::NullPointer;
        }
        *out = tree.depth();
        HkStatus::Ok
    })
}

/// # Safety
/// `t` must be a valid tree handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hk_tree_leaf_count(t: *const HkTree, out: *mut usize) -> HkStatus {
    guarded(|| {
        let tree = ffi_try!(read_tree(t));
        if out.is_null() {
            set_error("output pointer is NULL");
            return HkStatus::NullPointer;
        }
        *out = tree.leaves().len();
        HkStatus::Ok
    })
}

/// Copies the leaf identifiers into `buf` (capacity `cap` elements)
/// and stores the leaf count in `written`. Fails with
/// `HK_STATUS_INVALID_ARGUMENT` when `cap` is too small; query the
/// needed capacity with `hk_tree_leaf_count`.
///
/// # Safety
/// `t` must be a valid tree handle; `buf` must hold `cap` writable
/// elements; `written` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hk_tree_leaves(
    t: *const HkTree,
    buf: *mut usize,
    cap: usize,
    written: *mut usize,
) -> HkStatus {
    guarded(|| {
        let tree = ffi_try!(read_tree(t));
        if written.is_null() || (cap > 0 && buf.is_null()) {
            set_error("output pointer is NULL");
            return HkStatus::NullPointer;
        }
        let leaves = tree.leaves();
        if leaves.len() > cap {
            return fail(Error::InvalidConfig(format!(
                "buffer capacity {cap} below leaf count {}",
                leaves.len()
            )));
        }
        std::ptr::copy_nonoverlapping(leaves.as_ptr(), buf, leaves.len());
        *written = leaves.len();
        HkStatus::Ok
    })
}

/// Exact optimal offline cost of serving `requests` starting from the
/// leaf configuration `start`, as a `"p/q"` string.
///
/// # Safety
/// Pointer arguments must satisfy the conventions above.
#[no_mangle]
pub unsafe extern "C" fn hk_opt_cost(
    t: *const HkTree,
    start: *const usize,
    n_start: usize,
    requests: *const usize,
    n_requests: usize,
    cost_out: *mut *mut c_char,
) -> HkStatus {
    guarded(|| {
        let tree = ffi_try!(read_tree(t));
        let start: &[NodeId] = ffi_try!(read_ids(start, n_start, "start"));
        let requests: &[NodeId] = ffi_try!(read_ids(requests, n_requests, "requests"));
        let cost = ffi_try!(core_try(opt_cost(tree, start, requests)));
        write_string(fmt_rat(&cost), cost_out)
    })
}

/// Runs the named online algorithm (`"dc"`, `"aggressive"` or
/// `"wfa"`) over the request trace and returns its exact total cost
/// as a `"p/q"` string.
///
/// # Safety
/// Pointer arguments must satisfy the conventions above.
#[no_mangle]
pub unsafe extern "C" fn hk_simulate(
    t: *const HkTree,
    algorithm: *const c_char,
    start: *const usize,
    n_start: usize,
    requests: *const usize,
    n_requests: usize,
    cost_out: *mut *mut c_char,
) -> HkStatus {
    guarded(|| {
        let tree = ffi_try!(read_tree(t));
        let name: AlgorithmName = match ffi_try!(read_str(algorithm, "algorithm")).parse() {
            Ok(n) => n,
            Err(e) => return fail(e),
        };
        let start: &[NodeId] = ffi_try!(read_ids(start, n_start, "start"));
        let requests: &[NodeId] = ffi_try!(read_ids(requests, n_requests, "requests"));
        let mut alg = ffi_try!(core_try(make_algorithm(name, tree, start, true)));
        let (_, cost) = ffi_try!(core_try(simulate(tree, alg.as_mut(), start, requests)));
        write_string(fmt_rat(&cost), cost_out)
    })
}

/// Runs a lower-bound experiment: the named adversary (`"dc"`,
/// `"general"` or `"wfa"`) against the named algorithm with `h`
/// offline and `k` online servers for the given number of phases.
/// `eps` (and the optional `eps_prime`, NULL for the default `eps²`)
/// are `"p/q"` strings. Returns the summary as a JSON object with
/// exact `"p/q"` fields (`alg_cost`, `adv_cost`, `opt_cost`,
/// `opt_exact`, `ratio`, `phases`, `requests`).
///
/// # Safety
/// Pointer arguments must satisfy the conventions above.
#[no_mangle]
pub unsafe extern "C" fn hk_lower_bound(
    algorithm: *const c_char,
    adversary: *const c_char,
    h: usize,
    k: usize,
    eps: *const c_char,
    eps_prime: *const c_char,
    phases: usize,
    summary_out: *mut *mut c_char,
) -> HkStatus {
    guarded(|| {
        let algorithm: AlgorithmName = match ffi_try!(read_str(algorithm, "algorithm")).parse() {
            Ok(n) => n,
            Err(e) => return fail(e),
        };
        let adversary: AdversaryName = match ffi_try!(read_str(adversary, "adversary")).parse() {
            Ok(n) => n,
            Err(e) => return fail(e),
        };
        let eps = ffi_try!(core_try(parse_rat(ffi_try!(read_str(eps, "eps")))));
        let eps_prime = if eps_prime.is_null() {
            None
        } else {
            Some(ffi_try!(core_try(parse_rat(ffi_try!(read_str(
                eps_prime,
                "eps_prime"
            ))))))
        };
        let cfg = ExperimentConfig {
            algorithm,
            adversary,
            h,
            k,
            eps,
            eps_prime,
            phases,
            assert_invariants: true,
        };
        let report = ffi_try!(core_try(run_experiment(&cfg)));
        write_string(summary_json(&report, None).to_string(), summary_out)
    })
}

/// Verifies the potential-function accounting on the given request
/// trace with `h` adversary and `k` online servers: the adversary
/// follows an optimal offline schedule and every elementary step of
/// the online algorithm is checked. `ok_out` receives 1 when every
/// row passed, 0 otherwise; `csv_out` receives the per-row transcript
/// (`step,phase,case,cost,dphi,slack,ok,notes`).
///
/// # Safety
/// Pointer arguments must satisfy the conventions above.
#[no_mangle]
pub unsafe extern "C" fn hk_verify_potential(
    t: *const HkTree,
    h: usize,
    k: usize,
    requests: *const usize,
    n_requests: usize,
    ok_out: *mut c_int,
    csv_out: *mut *mut c_char,
) -> HkStatus {
    guarded(|| {
        let tree = ffi_try!(read_tree(t));
        let requests: &[NodeId] = ffi_try!(read_ids(requests, n_requests, "requests"));
        if ok_out.is_null() {
            set_error("output pointer is NULL");
            return HkStatus::NullPointer;
        }
        let params = ffi_try!(core_try(PotentialParams::new(tree.depth(), h, k)));
        let adv_start = ffi_try!(core_try(spread_start(tree, h)));
        let (_, schedule) = ffi_try!(core_try(opt_schedule(tree, &adv_start, requests)));
        let online: Vec<PointLocation> = ffi_try!(core_try(spread_start(tree, k)))
            .into_iter()
            .map(PointLocation::AtNode)
            .collect();
        let mut alg = AggressiveAlgorithm::default();
        let report = ffi_try!(core_try(verify_run(
            tree,
            &params,
            &mut alg,
            &online,
            &schedule[0],
            &schedule[1..],
            requests,
        )));
        *ok_out = report.ok as c_int;
        write_string(verify_csv(&report, None), csv_out)
    })
}

/// Embeds a bounded-diameter tree into a uniform-leaf-depth tree with
/// distance distortion at most `eps` (a `"p/q"` string) times the
/// shortest edge. Returns the new tree and, in `leaf_map_json`, a
/// JSON array mapping every original node id to its image.
///
/// # Safety
/// Pointer arguments must satisfy the conventions above.
#[no_mangle]
pub unsafe extern "C" fn hk_embed_bounded_diameter(
    t: *const HkTree,
    eps: *const c_char,
    tree_out: *mut *mut HkTree,
    leaf_map_json: *mut *mut c_char,
) -> HkStatus {
    guarded(|| {
        let tree = ffi_try!(read_tree(t));
        let eps = ffi_try!(core_try(parse_rat(ffi_try!(read_str(eps, "eps")))));
        let (embedded, map) = ffi_try!(core_try(tree.embed_bounded_diameter(&eps)));
        let json = serde_json::to_string(&map).expect("a vector of ids always serializes");
        let s = write_string(json, leaf_map_json);
        if s != HkStatus::Ok {
            return s;
        }
        write_tree(embedded, tree_out)
    })
}
