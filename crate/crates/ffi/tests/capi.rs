use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use quasibath_ffi::*;

fn last_error() -> String {
    let p = qb_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn set(cfg: *mut QbConfig, key: &str, v: f64) -> QbStatus {
    let k = CString::new(key).unwrap();
    unsafe { qb_config_set(cfg, k.as_ptr(), v) }
}

#[test]
fn propagate_through_handles() {
    let cfg = qb_config_default();
    assert_eq!(set(cfg, "t_max", 2.0), QbStatus::Ok);
    assert_eq!(set(cfg, "N_s", 5.0), QbStatus::Ok);
    let mut tr = ptr::null_mut();
    assert_eq!(unsafe { qb_propagate(cfg, 3, &mut tr) }, QbStatus::Ok);
    let len = unsafe { qb_trajectory_len(tr) };
    assert_eq!(len, 101);
    assert_eq!(unsafe { qb_trajectory_sites(tr) }, 5);
    let (mut t, mut re, mut im) = (0.0, 0.0, 0.0);
    assert_eq!(unsafe { qb_trajectory_amplitude(tr, 0, 3, &mut t, &mut re, &mut im) }, QbStatus::Ok);
    assert_eq!((t, re, im), (0.0, 1.0, 0.0));
    assert_eq!(unsafe { qb_trajectory_amplitude(tr, len - 1, 1, &mut t, &mut re, &mut im) }, QbStatus::Ok);
    assert!((t - 2.0).abs() < 1e-12);
    assert_eq!(unsafe { qb_trajectory_amplitude(tr, len, 1, &mut t, &mut re, &mut im) }, QbStatus::InvalidArgument);
    assert_eq!(unsafe { qb_trajectory_amplitude(tr, 0, 0, &mut t, &mut re, &mut im) }, QbStatus::InvalidArgument);
    unsafe {
        qb_trajectory_free(tr);
        qb_config_free(cfg);
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    let cfg = qb_config_default();
    assert_eq!(set(cfg, "d", 4.0), QbStatus::InvalidConfig);
    assert!(last_error().contains("d must be"));
    assert_eq!(set(cfg, "N_s", 2.5), QbStatus::InvalidArgument);
    assert_eq!(set(cfg, "colour", 1.0), QbStatus::InvalidArgument);
    assert!(last_error().contains("colour"));
    assert_eq!(unsafe { qb_config_set(ptr::null_mut(), c"g".as_ptr(), 0.1) }, QbStatus::NullPointer);

    let mut tr = ptr::null_mut();
    assert_eq!(unsafe { qb_propagate(cfg, 99, &mut tr) }, QbStatus::InvalidConfig);
    assert!(tr.is_null());
    assert_eq!(unsafe { qb_propagate(ptr::null(), 1, &mut tr) }, QbStatus::NullPointer);

    let mut out = ptr::null_mut();
    assert_eq!(unsafe { qb_config_parse(c"d = [".as_ptr(), &mut out) }, QbStatus::InvalidConfig);
    assert!(out.is_null());
    unsafe {
        qb_config_free(cfg);
        qb_config_free(ptr::null_mut());
        qb_trajectory_free(ptr::null_mut());
    }
}

#[test]
fn parse_and_hash_match_the_core_crate() {
    let text = c"N_s = 11\nDelta = 2.0\nd = 2\n";
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { qb_config_parse(text.as_ptr(), &mut cfg) }, QbStatus::Ok);
    let mut buf = [0 as std::ffi::c_char; 17];
    assert_eq!(unsafe { qb_config_hash(cfg, buf.as_mut_ptr(), 4) }, QbStatus::BufferTooSmall);
    assert_eq!(unsafe { qb_config_hash(cfg, buf.as_mut_ptr(), buf.len()) }, QbStatus::Ok);
    let got = unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap().to_owned();
    let expect = quasibath::Scenario::parse(text.to_str().unwrap()).unwrap().model.hash();
    assert_eq!(got, expect);
    unsafe { qb_config_free(cfg) };
}

#[test]
fn bound_states_and_green_values() {
    let cfg = qb_config_default();
    assert_eq!(set(cfg, "Delta", 3.0), QbStatus::Ok);
    let mut count = 0usize;
    assert_eq!(unsafe { qb_bound_states(cfg, ptr::null_mut(), 0, &mut count) }, QbStatus::BufferTooSmall);
    assert!(count > 0);
    let mut e = vec![0.0; count];
    assert_eq!(unsafe { qb_bound_states(cfg, e.as_mut_ptr(), e.len(), &mut count) }, QbStatus::Ok);
    assert!(e.iter().all(|v| v.abs() > 1.0));
    unsafe { qb_config_free(cfg) };

    let (mut re, mut im) = (0.0, 0.0);
    assert_eq!(unsafe { qb_green(1.25, 0.0, 0, 1, &mut re, &mut im) }, QbStatus::Ok);
    assert!((re - 4.0 / 3.0).abs() < 1e-10 && im == 0.0);
    assert_eq!(unsafe { qb_green(1.0, 0.0, 0, 1, &mut re, &mut im) }, QbStatus::Domain);
    assert_eq!(unsafe { qb_green(2.0, 0.0, 0, 5, &mut re, &mut im) }, QbStatus::InvalidConfig);
}

#[test]
fn header_compiles_as_c() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = dir.join("include").join("quasibath.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in ["qb_propagate", "qb_trajectory_free", "qb_last_error", "QB_STATUS_OK", "typedef struct QbConfig QbConfig"] {
        assert!(text.contains(name), "header lacks {name}");
    }
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"quasibath.h\"\nint run(void) {\n  QbConfig *c = qb_config_default();\n  QbTrajectory *t = 0;\n  \
         QbStatus s = qb_propagate(c, 1, &t);\n  size_t n = qb_trajectory_len(t);\n  qb_trajectory_free(t);\n  qb_config_free(c);\n  \
         return s == QB_STATUS_OK && n > 0;\n}\n",
    )
    .unwrap();
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = match Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-c", "-o"])
        .arg(tmp.path().join("use.o"))
        .arg("-I")
        .arg(dir.join("include"))
        .arg(&src)
        .status()
    {
        Ok(s) => s,
        Err(e) => {
            eprintln!("skipping C compile check: {cc} unavailable ({e})");
            return;
        }
    };
    assert!(status.success());
}
