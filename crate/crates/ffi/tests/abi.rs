use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use secwire_ffi::*;

fn last_error() -> String {
    let p = secwire_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn sequence(alphabet: usize, data: &[u32]) -> *mut SecwireSequence {
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { secwire_sequence_new(alphabet, data.as_ptr(), data.len(), &mut s) }, SecwireStatus::Ok);
    s
}

fn channel(inputs: usize, outputs: usize, data: &[f64]) -> *mut SecwireChannel {
    let mut c = ptr::null_mut();
    assert_eq!(unsafe { secwire_channel_new(inputs, outputs, data.as_ptr(), &mut c) }, SecwireStatus::Ok);
    c
}

#[test]
fn lz_of_the_worked_example() {
    let s = sequence(2, &[0, 0, 0, 0, 1, 1, 0, 1, 1, 0]);
    let (mut c, mut rho) = (0usize, 0.0f64);
    assert_eq!(unsafe { secwire_lz_complexity(s, &mut c, &mut rho) }, SecwireStatus::Ok);
    assert_eq!(c, 6);
    assert!((rho - 0.6 * 6f64.log2()).abs() < 1e-12);
    assert_eq!(unsafe { secwire_sequence_len(s) }, 10);
    unsafe { secwire_sequence_free(s) };
}

#[test]
fn conditional_lz_of_the_side_information_example() {
    let u = sequence(2, &[0, 1, 0, 1, 1, 0]);
    let w = sequence(2, &[0, 0, 0, 0, 1, 0]);
    let mut rho = 0.0;
    assert_eq!(unsafe { secwire_conditional_lz_complexity(u, w, &mut rho) }, SecwireStatus::Ok);
    assert!((rho - 1.0 / 3.0).abs() < 1e-12);
    unsafe {
        secwire_sequence_free(u);
        secwire_sequence_free(w);
    }
}

#[test]
fn capacities_and_cascade() {
    let bsc = channel(2, 2, &[0.9, 0.1, 0.1, 0.9]);
    let (mut v, mut gap) = (0.0, 0.0);
    assert_eq!(unsafe { secwire_channel_capacity(bsc, 1e-10, &mut v, &mut gap) }, SecwireStatus::Ok);
    assert!((v - 0.531004406410719).abs() < 1e-8);

    let mut t = ptr::null_mut();
    assert_eq!(unsafe { secwire_triple_new(bsc, bsc, &mut t) }, SecwireStatus::Ok);
    let mut argmax = [0.0; 2];
    assert_eq!(
        unsafe { secwire_secrecy_capacity(t, 1e-9, &mut v, &mut gap, argmax.as_mut_ptr(), 2) },
        SecwireStatus::Ok
    );
    assert!((v - 0.2110814521).abs() < 1e-6);
    assert!((argmax[0] - 0.5).abs() < 1e-6);
    // too small a buffer
    assert_eq!(
        unsafe { secwire_secrecy_capacity(t, 1e-9, &mut v, &mut gap, argmax.as_mut_ptr(), 1) },
        SecwireStatus::InvalidArgument
    );

    let mut cascade = ptr::null_mut();
    assert_eq!(unsafe { secwire_triple_cascade(t, &mut cascade) }, SecwireStatus::Ok);
    assert_eq!(unsafe { secwire_channel_capacity(cascade, 1e-10, &mut v, &mut gap) }, SecwireStatus::Ok);
    assert!((v - (1.0 - secwire::info::binary_entropy(0.18).unwrap())).abs() < 1e-8);
    unsafe {
        secwire_channel_free(cascade);
        secwire_triple_free(t);
        secwire_channel_free(bsc);
    }
}

#[test]
fn redundancy_terms() {
    let (mut v, mut ell) = (0.0, 0usize);
    assert_eq!(unsafe { secwire_zeta(1024, 1, 1, 2, 0.0, &mut v, &mut ell) }, SecwireStatus::Ok);
    assert!((v - 1.8078).abs() < 1e-4);
    assert_eq!(ell, 1);
    assert_eq!(unsafe { secwire_eta(1024, 1, 1, 1, 2, 2, 0.0, &mut v, &mut ell) }, SecwireStatus::Ok);
    let expect = 1.0 + 100f64.log2() / 10.0 + 25.0 * 100f64.log2() / 1024.0;
    assert!((v - expect).abs() < 1e-9);
    assert_eq!(unsafe { secwire_zeta(1024, 0, 1, 2, 0.0, &mut v, &mut ell) }, SecwireStatus::InvalidArgument);
}

#[test]
fn feedback_session_stops_in_time() {
    let u = sequence(2, &[0, 1, 1, 0, 1, 0, 0, 1, 1, 0]);
    let w = sequence(2, &[0, 1, 1, 0, 1, 0, 0, 1, 0, 0]);
    let mut s = SecwireSession::default();
    assert_eq!(unsafe { secwire_feedback_session(u, w, 2, 0.3, 9, &mut s) }, SecwireStatus::Ok);
    assert!(s.stopped && s.chunks_sent <= s.i_star);
    assert!(s.compression_ratio <= s.rho + 0.3 + 0.2 + 1e-12);
    unsafe {
        secwire_sequence_free(u);
        secwire_sequence_free(w);
    }
}

#[test]
fn errors_are_reported() {
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { secwire_sequence_new(2, [0u32, 2].as_ptr(), 2, &mut s) }, SecwireStatus::InvalidArgument);
    assert!(last_error().contains("outside an alphabet of size 2"));
    assert!(s.is_null());

    assert_eq!(unsafe { secwire_sequence_new(2, ptr::null(), 3, &mut s) }, SecwireStatus::NullPointer);
    assert_eq!(unsafe { secwire_lz_complexity(ptr::null(), ptr::null_mut(), ptr::null_mut()) }, SecwireStatus::NullPointer);

    let mut c = ptr::null_mut();
    assert_eq!(unsafe { secwire_channel_new(2, 2, [0.5, 0.6, 0.0, 1.0].as_ptr(), &mut c) }, SecwireStatus::InvalidArgument);
    let file = CString::new("/nonexistent/x.ch").unwrap();
    assert_eq!(unsafe { secwire_channel_read(file.as_ptr(), &mut c) }, SecwireStatus::Io);
    assert!(last_error().contains("/nonexistent/x.ch"));

    // a successful call clears the message
    let ok = sequence(2, &[0]);
    assert!(secwire_last_error().is_null());
    unsafe { secwire_sequence_free(ok) };
    unsafe { secwire_sequence_free(ptr::null_mut()) };
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(secwire_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

/// Builds the C smoke program against the generated header and the static
/// library of this build.
#[test]
fn c_program_links_against_the_header() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let profile_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = profile_dir.join("libsecwire_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("no C compiler on PATH; skipping");
        return;
    }
    let exe = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("secwire_smoke");
    let status = Command::new("cc")
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(manifest.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("c=6 cs=0.2111 bad=2"));
}
