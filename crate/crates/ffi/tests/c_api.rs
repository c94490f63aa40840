use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use jsplit_ffi::*;

struct Family(*mut JsplitFamily);

impl Family {
    fn builtin(name: &str) -> Self {
        let name = CString::new(name).unwrap();
        let mut fam = ptr::null_mut();
        assert_eq!(unsafe { jsplit_family_builtin(name.as_ptr(), &mut fam) }, JsplitStatus::Ok);
        Family(fam)
    }
}

impl Drop for Family {
    fn drop(&mut self) {
        unsafe { jsplit_family_free(self.0) }
    }
}

fn last_error() -> String {
    let p = jsplit_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn apply_matches_cantor_maps() {
    let fam = Family::builtin("cantor1d");
    let mut y = 0.0;
    assert_eq!(unsafe { jsplit_apply(fam.0, 2, &0.0, &mut y) }, JsplitStatus::Ok);
    assert_eq!(y, 2.0 / 3.0);
    assert_eq!(unsafe { jsplit_apply(fam.0, 1, &1.0, &mut y) }, JsplitStatus::Ok);
    assert_eq!(y, 1.0 / 3.0);
    assert_eq!(unsafe { jsplit_apply(fam.0, 3, &1.0, &mut y) }, JsplitStatus::InvalidArgument);
}

#[test]
fn null_arguments_are_reported() {
    let mut y = 0.0;
    assert_eq!(
        unsafe { jsplit_apply(ptr::null(), 1, &0.0, &mut y) },
        JsplitStatus::NullPointer
    );
    assert!(last_error().contains("family"));
    assert_eq!(unsafe { jsplit_family_dim(ptr::null()) }, 0);
    unsafe { jsplit_family_free(ptr::null_mut()) };
}

#[test]
fn family_from_json() {
    let json = CString::new(r#"{"family":"cantor2d"}"#).unwrap();
    let mut fam = ptr::null_mut();
    assert_eq!(unsafe { jsplit_family_from_json(json.as_ptr(), &mut fam) }, JsplitStatus::Ok);
    assert_eq!(unsafe { jsplit_family_dim(fam) }, 2);
    unsafe { jsplit_family_free(fam) };
    let bad = CString::new("{").unwrap();
    let mut fam = ptr::null_mut();
    assert_eq!(
        unsafe { jsplit_family_from_json(bad.as_ptr(), &mut fam) },
        JsplitStatus::InvalidArgument
    );
    assert!(fam.is_null());
}

#[test]
fn splitting_certificate_and_unverified() {
    let fam = Family::builtin("cantor1d");
    let mut s = JsplitSplitting::default();
    assert_eq!(unsafe { jsplit_check_splitting(fam.0, 2, 1000, 0, &mut s) }, JsplitStatus::Ok);
    assert_eq!((s.m, s.exact), (1, 1));
    assert_eq!((s.mass_a, s.mass_b), (0.5, 0.5));
    assert_eq!(s.lambda, 0.5);

    // two copies of the identity never separate images
    let json = CString::new(r#"{"family":"affine-general","matrices":[[[1.0]],[[1.0]]],"offsets":[[0.0],[0.0]]}"#)
        .unwrap();
    let mut same = ptr::null_mut();
    assert_eq!(unsafe { jsplit_family_from_json(json.as_ptr(), &mut same) }, JsplitStatus::Ok);
    let st = unsafe { jsplit_check_splitting(same, 1, 1000, 0, &mut s) };
    unsafe { jsplit_family_free(same) };
    assert_eq!(st, JsplitStatus::Unverified, "{}", last_error());
}

#[test]
fn pullback_sample_fills_buffer() {
    let fam = Family::builtin("cantor2d");
    let n = 200;
    let mut out = vec![f64::NAN; 2 * n];
    let mut kept = 0;
    let st = unsafe { jsplit_pullback_sample(fam.0, 3, n, 1e-9, 200, out.as_mut_ptr(), out.len(), &mut kept) };
    assert_eq!(st, JsplitStatus::Ok);
    assert_eq!(kept, n);
    for p in out.chunks(2) {
        assert!((0.0..=1.0).contains(&p[0]) && (-1.0..=0.0).contains(&p[1]));
    }
    let st = unsafe { jsplit_pullback_sample(fam.0, 3, n, 1e-9, 200, out.as_mut_ptr(), n, &mut kept) };
    assert_eq!(st, JsplitStatus::BufferTooSmall);
}

#[test]
fn diameter_rate_for_cantor() {
    let fam = Family::builtin("cantor1d");
    let mut r = 0.0;
    assert_eq!(unsafe { jsplit_diameter_rate(fam.0, 20, 10, 0, &mut r) }, JsplitStatus::Ok);
    assert!((r - 1.0 / 3.0).abs() < 1e-9, "{r}");
}

#[test]
fn wasserstein_matches_shift() {
    let x = [0.0, 1.0, 2.0];
    let y = [0.5, 1.5, 2.5];
    let mut d = 0.0;
    assert_eq!(
        unsafe { jsplit_wasserstein1(1, x.as_ptr(), 3, y.as_ptr(), 3, &mut d) },
        JsplitStatus::Ok
    );
    assert_eq!(d, 0.5);
    assert_eq!(
        unsafe { jsplit_wasserstein1(0, x.as_ptr(), 3, y.as_ptr(), 3, &mut d) },
        JsplitStatus::InvalidArgument
    );
}

fn target_dir() -> PathBuf {
    // target/<profile>/deps/c_api-<hash>
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_header() {
    let lib = target_dir().join("libjsplit_ffi.a");
    assert!(lib.exists(), "static library not built at {}", lib.display());
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let tmp = tempfile::tempdir().unwrap();
    let exe = tmp.path().join("smoke");
    let status = Command::new("cc")
        .arg(root.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(root.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("C compiler");
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
