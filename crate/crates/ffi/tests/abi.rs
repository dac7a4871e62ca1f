use std::ffi::{CStr, CString};
use std::ptr;

use diracsim_ffi::*;

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = ds_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

unsafe fn take_string(p: *mut std::ffi::c_char) -> String {
    assert!(!p.is_null());
    let s = CStr::from_ptr(p).to_string_lossy().into_owned();
    ds_string_free(p);
    s
}

#[test]
fn run_through_handles() {
    unsafe {
        let mut cfg = ptr::null_mut();
        let text = cstr("fock_n_min = 0\ndrives = 1\nsteps = 40\n");
        assert_eq!(ds_config_parse(text.as_ptr(), &mut cfg), DsStatus::Ok);
        assert_eq!(ds_config_set_seed(cfg, 5), DsStatus::Ok);
        assert!(take_string(ds_config_to_text(cfg)).contains("seed = 5"));

        let mut report = ptr::null_mut();
        assert_eq!(ds_run(cfg, cstr("equivalence").as_ptr(), &mut report), DsStatus::Ok);
        let mut passed = false;
        assert_eq!(ds_report_passed(report, &mut passed), DsStatus::Ok);
        assert!(passed);
        let mut modes = 0.0;
        assert_eq!(ds_report_metric(report, cstr("modes").as_ptr(), &mut modes), DsStatus::Ok);
        assert_eq!(modes, 8.0);
        assert_eq!(ds_report_metric(report, cstr("nonexistent").as_ptr(), &mut modes), DsStatus::NotFound);
        assert!(last_error().contains("nonexistent"));

        let json: serde_json::Value = serde_json::from_str(&take_string(ds_report_json(report))).unwrap();
        assert_eq!(json["scenario"], "equivalence");
        assert_eq!(json["seed"], 5);
        let csv = take_string(ds_report_csv(report));
        assert!(csv.starts_with("# scenario=equivalence seed=5\ndrive,steps,t,"));

        let dir = tempfile::tempdir().unwrap();
        let dir_c = cstr(dir.path().to_str().unwrap());
        assert_eq!(ds_report_write(report, dir_c.as_ptr()), DsStatus::Ok);
        assert_eq!(std::fs::read_to_string(dir.path().join("equivalence_series.csv")).unwrap(), csv);

        ds_report_free(report);
        ds_config_free(cfg);
    }
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(ds_config_parse(cstr("n_max = -1").as_ptr(), &mut cfg), DsStatus::Config);
        assert!(cfg.is_null());
        assert!(last_error().contains("n_max"));
        assert_eq!(ds_config_parse(ptr::null(), &mut cfg), DsStatus::NullPointer);
        assert_eq!(ds_config_parse(c"\xff".as_ptr(), &mut cfg), DsStatus::InvalidUtf8);
        assert_eq!(ds_config_load(cstr("/no/such/file.cfg").as_ptr(), &mut cfg), DsStatus::Config);
        assert!(last_error().contains("/no/such/file.cfg"));

        let cfg = ds_config_default();
        assert_eq!(ds_config_set_backend(cfg, cstr("abacus").as_ptr()), DsStatus::Config);
        assert_eq!(ds_config_set_backend(cfg, cstr("gaussian").as_ptr()), DsStatus::Ok);
        let mut report = ptr::null_mut();
        assert_eq!(ds_run(cfg, cstr("warp-drive").as_ptr(), &mut report), DsStatus::UnknownScenario);
        assert!(report.is_null());
        assert_eq!(ds_run(ptr::null(), cstr("baseline").as_ptr(), &mut report), DsStatus::NullPointer);
        assert_eq!(ds_config_set_seed(ptr::null_mut(), 1), DsStatus::NullPointer);
        assert!(ds_report_json(ptr::null()).is_null());
        ds_config_free(cfg);
        ds_config_free(ptr::null_mut());
        ds_report_free(ptr::null_mut());
        ds_string_free(ptr::null_mut());
    }
}

#[test]
fn load_matches_parse() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    std::fs::write(&path, "seed = 9\ncutoffs = 1,2\n").unwrap();
    unsafe {
        let (mut a, mut b) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(ds_config_load(cstr(path.to_str().unwrap()).as_ptr(), &mut a), DsStatus::Ok);
        assert_eq!(ds_config_parse(cstr("seed = 9\ncutoffs = 1,2\n").as_ptr(), &mut b), DsStatus::Ok);
        assert_eq!(take_string(ds_config_to_text(a)), take_string(ds_config_to_text(b)));
        ds_config_free(a);
        ds_config_free(b);
    }
}

#[test]
fn version_matches_package() {
    let v = unsafe { CStr::from_ptr(ds_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/diracsim.h")).unwrap();
    let source = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/src/lib.rs")).unwrap();
    let exports: Vec<&str> = source
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 15);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    assert!(header.contains("typedef struct DsConfig DsConfig;"));
    assert!(header.contains("DS_STATUS_OK = 0"));
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = std::process::Command::new("cc").arg("--version").output() else {
        eprintln!("no C compiler on PATH; header syntax not checked");
        return;
    };
    assert!(cc.status.success());
    let include = concat!(env!("CARGO_MANIFEST_DIR"), "/include");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"diracsim.h\"\nint main(void) { DsConfig *c = ds_config_default(); DsStatus s = ds_config_set_seed(c, 1); ds_config_free(c); return s == DS_STATUS_OK ? 0 : 1; }\n",
    )
    .unwrap();
    let out = std::process::Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I", include])
        .arg(&src)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
