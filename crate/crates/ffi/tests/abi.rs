//! Exercises the C ABI the way a foreign caller would: raw pointers,
//! status codes, thread-local error messages and manual frees.

use std::ffi::{CStr, CString};
use std::os::raw::{c_char, c_int};
use std::ptr;

use hkserver_ffi::*;

fn cstring(s: &str) -> CString {
    CString::new(s).unwrap()
}

unsafe fn take_string(p: *mut c_char) -> String {
    assert!(!p.is_null());
    let s = CStr::from_ptr(p).to_str().unwrap().to_owned();
    hk_string_free(p);
    s
}

unsafe fn last_error() -> String {
    CStr::from_ptr(hk_last_error()).to_str().unwrap().to_owned()
}

unsafe fn hst(spec: &str) -> *mut HkTree {
    let spec = cstring(spec);
    let mut tree = ptr::null_mut();
    assert_eq!(hk_tree_from_hst(spec.as_ptr(), &mut tree), HkStatus::Ok);
    assert!(!tree.is_null());
    tree
}

#[test]
fn version_is_a_static_string() {
    let v = unsafe { CStr::from_ptr(hk_version()) }.to_str().unwrap();
    assert!(!v.is_empty());
}

#[test]
fn tree_roundtrip_through_json() {
    unsafe {
        let tree = hst("2:3,2:1,1/2");
        let mut depth = 0usize;
        let mut leaves = 0usize;
        assert_eq!(hk_tree_depth(tree, &mut depth), HkStatus::Ok);
        assert_eq!(hk_tree_leaf_count(tree, &mut leaves), HkStatus::Ok);
        assert_eq!((depth, leaves), (2, 6));

        let mut json = ptr::null_mut();
        assert_eq!(hk_tree_to_json(tree, &mut json), HkStatus::Ok);
        let json = take_string(json);
        let mut tree2 = ptr::null_mut();
        let cjson = cstring(&json);
        assert_eq!(hk_tree_from_json(cjson.as_ptr(), &mut tree2), HkStatus::Ok);
        let mut leaves2 = 0usize;
        assert_eq!(hk_tree_leaf_count(tree2, &mut leaves2), HkStatus::Ok);
        assert_eq!(leaves2, 6);

        let mut buf = vec![0usize; leaves2];
        let mut written = 0usize;
        assert_eq!(
            hk_tree_leaves(tree2, buf.as_mut_ptr(), buf.len(), &mut written),
            HkStatus::Ok
        );
        assert_eq!(written, 6);
        assert!(buf.iter().all(|&l| l > 0));

        // too-small buffer is rejected and reported
        let mut one = 0usize;
        assert_eq!(
            hk_tree_leaves(tree2, &mut one, 1, &mut written),
            HkStatus::InvalidArgument
        );
        assert!(last_error().contains("capacity"));

        hk_tree_free(tree);
        hk_tree_free(tree2);
    }
}

#[test]
fn errors_set_status_and_message() {
    unsafe {
        let mut tree = ptr::null_mut();
        let bad = cstring("2:3:1"); // lengths arity mismatch
        assert_ne!(hk_tree_from_hst(bad.as_ptr(), &mut tree), HkStatus::Ok);
        assert!(!last_error().is_empty());

        assert_eq!(
            hk_tree_from_hst(ptr::null(), &mut tree),
            HkStatus::NullPointer
        );

        let not_json = cstring("not json");
        assert_eq!(
            hk_tree_from_json(not_json.as_ptr(), &mut tree),
            HkStatus::Parse
        );

        // invalid UTF-8
        let raw = [0xffu8, 0xfe, 0x00];
        assert_eq!(
            hk_tree_from_hst(raw.as_ptr() as *const c_char, &mut tree),
            HkStatus::Utf8
        );

        // freeing NULL is a no-op
        hk_tree_free(ptr::null_mut());
        hk_string_free(ptr::null_mut());
    }
}

#[test]
fn opt_cost_and_simulation_agree_with_known_values() {
    unsafe {
        let tree = hst("1:3:1"); // star with 3 unit leaves
        let mut leaves = [0usize; 3];
        let mut n = 0usize;
        assert_eq!(
            hk_tree_leaves(tree, leaves.as_mut_ptr(), 3, &mut n),
            HkStatus::Ok
        );

        // one server on leaf 0; requests at leaf 1 then back: cost 2+2
        let start = [leaves[0]];
        let reqs = [leaves[1], leaves[0]];
        let mut cost = ptr::null_mut();
        assert_eq!(
            hk_opt_cost(tree, start.as_ptr(), 1, reqs.as_ptr(), 2, &mut cost),
            HkStatus::Ok
        );
        assert_eq!(take_string(cost), "4");

        let alg = cstring("aggressive");
        let mut cost = ptr::null_mut();
        assert_eq!(
            hk_simulate(
                tree,
                alg.as_ptr(),
                start.as_ptr(),
                1,
                reqs.as_ptr(),
                2,
                &mut cost
            ),
            HkStatus::Ok
        );
        assert_eq!(take_string(cost), "4");

        let bad_alg = cstring("nonsense");
        let mut cost = ptr::null_mut();
        assert_eq!(
            hk_simulate(
                tree,
                bad_alg.as_ptr(),
                start.as_ptr(),
                1,
                reqs.as_ptr(),
                2,
                &mut cost
            ),
            HkStatus::InvalidArgument
        );

        hk_tree_free(tree);
    }
}

#[test]
fn lower_bound_summary_is_exact_json() {
    unsafe {
        let alg = cstring("dc");
        let adv = cstring("dc");
        let eps = cstring("1/8");
        let mut summary = ptr::null_mut();
        assert_eq!(
            hk_lower_bound(
                alg.as_ptr(),
                adv.as_ptr(),
                2,
                4,
                eps.as_ptr(),
                ptr::null(),
                3,
                &mut summary
            ),
            HkStatus::Ok
        );
        let summary = take_string(summary);
        let v: serde_json::Value = serde_json::from_str(&summary).unwrap();
        assert_eq!(v["phases"], 3);
        // the slow-coverage accounting gives the adversary 2h per phase
        assert_eq!(v["adv_cost"], "12");
        assert!(v["ratio"].is_string());
    }
}

#[test]
fn potential_verification_reports_per_row_transcript() {
    unsafe {
        let tree = hst("2:2,2:3/4,1/4");
        let mut leaves = [0usize; 4];
        let mut n = 0usize;
        assert_eq!(
            hk_tree_leaves(tree, leaves.as_mut_ptr(), 4, &mut n),
            HkStatus::Ok
        );
        let reqs = [leaves[2], leaves[0], leaves[3], leaves[1], leaves[2]];
        let mut ok: c_int = -1;
        let mut csv = ptr::null_mut();
        assert_eq!(
            hk_verify_potential(tree, 2, 8, reqs.as_ptr(), reqs.len(), &mut ok, &mut csv),
            HkStatus::Ok
        );
        assert_eq!(ok, 1);
        let csv = take_string(csv);
        assert!(csv.starts_with("step,phase,case,cost,dphi,slack,ok,notes"));
        assert!(csv.lines().count() > reqs.len());
        hk_tree_free(tree);
    }
}

#[test]
fn embedding_returns_tree_and_node_map() {
    unsafe {
        // depth-2 declared tree with one shallow leaf: needs embedding
        let json = cstring(
            r#"{"depth":2,"nodes":[
                {"id":0,"parent":null,"length":"0"},
                {"id":1,"parent":0,"length":"1"},
                {"id":2,"parent":0,"length":"1/2"},
                {"id":3,"parent":2,"length":"1/2"}
            ]}"#,
        );
        let mut tree = ptr::null_mut();
        assert_eq!(hk_tree_from_json(json.as_ptr(), &mut tree), HkStatus::Ok);
        let eps = cstring("1/10");
        let mut embedded = ptr::null_mut();
        let mut map = ptr::null_mut();
        assert_eq!(
            hk_embed_bounded_diameter(tree, eps.as_ptr(), &mut embedded, &mut map),
            HkStatus::Ok
        );
        let map: Vec<usize> = serde_json::from_str(&take_string(map)).unwrap();
        assert_eq!(map.len(), 4);
        let mut depth = 0usize;
        assert_eq!(hk_tree_depth(embedded, &mut depth), HkStatus::Ok);
        assert_eq!(depth, 2);
        hk_tree_free(tree);
        hk_tree_free(embedded);
    }
}

#[test]
fn generated_header_covers_the_surface() {
    let header = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("include")
        .join("hkserver.h");
    let text = std::fs::read_to_string(header).expect("header generated by build script");
    for symbol in [
        "hk_version",
        "hk_last_error",
        "hk_string_free",
        "hk_tree_from_json",
        "hk_tree_from_hst",
        "hk_tree_to_json",
        "hk_tree_free",
        "hk_tree_depth",
        "hk_tree_leaf_count",
        "hk_tree_leaves",
        "hk_opt_cost",
        "hk_simulate",
        "hk_lower_bound",
        "hk_verify_potential",
        "hk_embed_bounded_diameter",
        "HkStatus",
        "HkTree",
    ] {
        assert!(text.contains(symbol), "header misses {symbol}");
    }
}
