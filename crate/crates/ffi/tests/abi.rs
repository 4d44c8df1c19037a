use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use chernwall_ffi::*;

fn last_error() -> String {
    let p = cw_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn chern_numbers_at_centre() {
    let mut chern = [0i64; 3];
    let mut mesh = 0usize;
    let s = unsafe { cw_chern_numbers(0.0, 0.0, 32, chern.as_mut_ptr(), &mut mesh) };
    assert_eq!(s, CwStatus::Ok);
    assert_eq!(chern, [-2, 0, 2]);
    assert!(mesh >= 32);
}

#[test]
fn near_wall_reports_degeneracy() {
    let mut chern = [7i64; 3];
    let s = unsafe { cw_chern_numbers(0.3333333, 0.0, 32, chern.as_mut_ptr(), ptr::null_mut()) };
    assert_eq!(s, CwStatus::NearDegeneracy);
    assert!(last_error().contains("gap"));
    assert_eq!(chern, [7, 7, 7], "outputs untouched on failure");
}

#[test]
fn null_outputs_are_rejected() {
    let s = unsafe { cw_chern_numbers(0.0, 0.0, 32, ptr::null_mut(), ptr::null_mut()) };
    assert_eq!(s, CwStatus::NullPointer);
    let s = unsafe { cw_min_discriminant(0.0, 0.0, ptr::null_mut()) };
    assert_eq!(s, CwStatus::NullPointer);
    assert_eq!(unsafe { cw_domain_chart_len(ptr::null()) }, 0);
    assert!(unsafe { cw_domain_chart_to_json(ptr::null()) }.is_null());
}

#[test]
fn non_finite_control_is_invalid() {
    let mut out = 0.0;
    let s = unsafe { cw_min_discriminant(f64::NAN, 0.0, &mut out) };
    assert_eq!(s, CwStatus::InvalidInput);
}

#[test]
fn min_discriminant_on_and_off_wall() {
    let mut on = 1.0;
    let mut off = 0.0;
    assert_eq!(unsafe { cw_min_discriminant(0.0, 1.0, &mut on) }, CwStatus::Ok);
    assert_eq!(unsafe { cw_min_discriminant(0.0, 0.0, &mut off) }, CwStatus::Ok);
    assert!(on <= 1e-10);
    assert!((off - 4.0).abs() < 1e-9);
}

#[test]
fn delta_chern_by_wall_name() {
    let wall = CString::new("a=+1/3").unwrap();
    let mut d = [0i64; 3];
    let s = unsafe { cw_delta_chern(wall.as_ptr(), 1.0 / 3.0, 0.0, 1.0, 0.0, d.as_mut_ptr()) };
    assert_eq!(s, CwStatus::Ok);
    assert_eq!(d, [6, -6, 0]);

    let s = unsafe { cw_delta_chern(wall.as_ptr(), 0.5, 0.0, 1.0, 0.0, d.as_mut_ptr()) };
    assert_eq!(s, CwStatus::NotOnWall);
    let s = unsafe { cw_delta_chern(wall.as_ptr(), 1.0 / 3.0, 0.0, 0.0, 1.0, d.as_mut_ptr()) };
    assert_eq!(s, CwStatus::DirectionTangent);
    let bogus = CString::new("a=2").unwrap();
    let s = unsafe { cw_delta_chern(bogus.as_ptr(), 1.0 / 3.0, 0.0, 1.0, 0.0, d.as_mut_ptr()) };
    assert_eq!(s, CwStatus::InvalidInput);
}

#[test]
fn quantum_counts() {
    let mut counts = [0usize; 3];
    assert_eq!(
        unsafe { cw_quantum_band_counts(10, 0.0, 0.0, counts.as_mut_ptr()) },
        CwStatus::Ok
    );
    assert_eq!(counts, [19, 21, 23]);
    assert_eq!(
        unsafe { cw_quantum_band_counts(2, 1.0 / 3.0, 0.0, counts.as_mut_ptr()) },
        CwStatus::AmbiguousBands
    );
}

#[test]
fn domain_chart_handle() {
    let mut chart = ptr::null_mut();
    let s = unsafe { cw_domain_chart_build(-0.2, 0.2, -0.5, 0.5, 0.02, 16, &mut chart) };
    assert_eq!(s, CwStatus::Ok);
    assert_eq!(unsafe { cw_domain_chart_len(chart) }, 1);
    let mut d = CwDomain {
        a: 0.0,
        b: 0.0,
        wall_distance: 0.0,
        chern: [0; 3],
        consistent: false,
    };
    assert_eq!(unsafe { cw_domain_chart_get(chart, 0, &mut d) }, CwStatus::Ok);
    assert_eq!(d.chern, [-2, 0, 2]);
    assert!(d.consistent);
    assert_eq!(unsafe { cw_domain_chart_get(chart, 1, &mut d) }, CwStatus::OutOfRange);

    let json = unsafe { cw_domain_chart_to_json(chart) };
    assert!(!json.is_null());
    let v: serde_json::Value = serde_json::from_str(unsafe { CStr::from_ptr(json) }.to_str().unwrap()).unwrap();
    assert_eq!(v["domains"].as_array().unwrap().len(), 1);
    unsafe {
        cw_string_free(json);
        cw_domain_chart_free(chart);
    }
}

#[test]
fn ill_ordered_box_is_rejected() {
    let mut chart = ptr::null_mut();
    let s = unsafe { cw_domain_chart_build(1.0, -1.0, -0.5, 0.5, 0.0, 0, &mut chart) };
    assert_eq!(s, CwStatus::InvalidInput);
    assert!(chart.is_null());
}

#[test]
fn errors_are_per_thread() {
    let mut counts = [0usize; 3];
    assert_eq!(
        unsafe { cw_quantum_band_counts(0, 0.0, 0.0, counts.as_mut_ptr()) },
        CwStatus::InvalidJ
    );
    std::thread::spawn(|| assert!(cw_last_error_message().is_null()))
        .join()
        .unwrap();
    assert!(last_error().contains("rotational"));
}

/// Compiles a C program against the generated header and the static library.
#[test]
fn c_program_links_against_header() {
    let Ok(cc) = which("cc") else {
        eprintln!("skipping: no C compiler");
        return;
    };
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|d| d.parent()).unwrap();
    let lib = profile_dir.join("libchernwall_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let include: PathBuf = [env!("CARGO_MANIFEST_DIR"), "include"].iter().collect();
    let src: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "smoke.c"].iter().collect();
    let out = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("chernwall_smoke");
    let status = Command::new(cc)
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let run = Command::new(&out).output().unwrap();
    let text = String::from_utf8_lossy(&run.stdout);
    assert!(
        run.status.success(),
        "smoke program failed: {text}{}",
        String::from_utf8_lossy(&run.stderr)
    );
    assert!(text.contains("chern -2 0 2"), "{text}");
}

fn which(name: &str) -> Result<PathBuf, ()> {
    std::env::var_os("PATH")
        .and_then(|paths| {
            std::env::split_paths(&paths)
                .map(|p| p.join(name))
                .find(|p| p.is_file())
        })
        .ok_or(())
}
