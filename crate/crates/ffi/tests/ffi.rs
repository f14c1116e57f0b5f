use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use khsim_ffi::*;

fn last_error() -> Option<String> {
    let p = khsim_last_error();
    (!p.is_null()).then(|| unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned())
}

fn c(text: &str) -> CString {
    CString::new(text).unwrap()
}

const NETLIST: &str = "C C1 1 0 1.01p\nL L1 1 0 1n\nR R12 1 2 4k\nC C2 2 0 1.01p\nL L2 2 0 1n\n";
const CONFIG: &str = "[sim]\nt_end = 4n\n\n[initial.1]\nalpha = 1\nbeta = 1\n";

#[test]
fn run_and_read_traces() {
    let mut sim = ptr::null_mut();
    let status = unsafe { khsim_run(c(NETLIST).as_ptr(), c(CONFIG).as_ptr(), &mut sim) };
    assert_eq!(status, KhsimStatus::Ok, "{:?}", last_error());
    assert!(!sim.is_null());
    assert_eq!(last_error(), None);

    let (mut samples, mut dofs) = (0usize, 0usize);
    assert_eq!(unsafe { khsim_simulation_shape(sim, &mut samples, &mut dofs) }, KhsimStatus::Ok);
    assert_eq!(dofs, 2);
    assert!(samples > 100);

    let mut t = vec![0.0; samples];
    let mut phi = vec![0.0; samples];
    unsafe {
        assert_eq!(khsim_simulation_trace(sim, KhsimTrace::Time, 0, t.as_mut_ptr(), samples), KhsimStatus::Ok);
        assert_eq!(khsim_simulation_trace(sim, KhsimTrace::Flux, 0, phi.as_mut_ptr(), samples), KhsimStatus::Ok);
    }
    assert_eq!(t[0], 0.0);
    assert!(t.windows(2).all(|w| w[1] > w[0]));
    assert!((phi[0] - 1.0).abs() < 1e-12);

    let mut report = KhsimSyncReport {
        transient_time: 0.0,
        lock_time: 0.0,
        phase_lag: 0.0,
        amplitude_ratio: 0.0,
        steady_amplitude_a: 0.0,
        steady_amplitude_b: 0.0,
        decay_rate: 0.0,
        strict_sync: true,
        phase_locked: true,
    };
    assert_eq!(unsafe { khsim_simulation_sync(sim, &mut report) }, KhsimStatus::Ok);
    assert!(report.amplitude_ratio >= 0.0);
    // 4 ns is one τ_RC: far too early for strict synchronization
    assert!(!report.strict_sync && report.transient_time.is_infinite());
    unsafe { khsim_simulation_free(sim) };
}

#[test]
fn buffer_and_index_checks() {
    let mut sim = ptr::null_mut();
    let cfg = c("[sim]\nt_end = 2n\n[initial.1]\nbeta = 1\n");
    assert_eq!(unsafe { khsim_run(c(NETLIST).as_ptr(), cfg.as_ptr(), &mut sim) }, KhsimStatus::Ok);
    let mut small = [0.0; 4];
    let status = unsafe { khsim_simulation_trace(sim, KhsimTrace::Charge, 0, small.as_mut_ptr(), small.len()) };
    assert_eq!(status, KhsimStatus::OutOfRange);
    assert!(last_error().unwrap().contains("buffer holds 4"));
    let status = unsafe { khsim_simulation_trace(sim, KhsimTrace::Charge, 7, small.as_mut_ptr(), small.len()) };
    assert_eq!(status, KhsimStatus::OutOfRange);
    assert_eq!(unsafe { khsim_simulation_trace(sim, KhsimTrace::Energy, 0, ptr::null_mut(), 0) }, KhsimStatus::NullPointer);
    unsafe { khsim_simulation_free(sim) };
}

#[test]
fn error_codes_and_messages() {
    let mut sim = ptr::null_mut();
    let status = unsafe { khsim_run_preset(c("regime3").as_ptr(), &mut sim) };
    assert_eq!(status, KhsimStatus::InvalidInput);
    assert!(sim.is_null());
    assert!(last_error().unwrap().contains("regime3"));

    let status = unsafe { khsim_run(c("C C1 1 0 1q\n").as_ptr(), c(CONFIG).as_ptr(), &mut sim) };
    assert_eq!(status, KhsimStatus::InvalidInput);
    assert!(last_error().unwrap().contains("suffix"), "{:?}", last_error());

    let status = unsafe { khsim_run(c(NETLIST).as_ptr(), c("[sim]\n").as_ptr(), &mut sim) };
    assert_eq!(status, KhsimStatus::InvalidInput);
    assert!(last_error().unwrap().starts_with("config"));

    // RK4 far outside its stability region
    let unstable = c("[sim]\nt_end = 1u\ndt = 1n\nmethod = classical\n[initial.1]\nbeta = 1\n");
    let status = unsafe { khsim_run(c(NETLIST).as_ptr(), unstable.as_ptr(), &mut sim) };
    assert_eq!(status, KhsimStatus::Numerical, "{:?}", last_error());

    assert_eq!(unsafe { khsim_run(ptr::null(), c(CONFIG).as_ptr(), &mut sim) }, KhsimStatus::NullPointer);
    assert_eq!(unsafe { khsim_run_preset(c("regime1").as_ptr(), ptr::null_mut()) }, KhsimStatus::NullPointer);
    let bad = [0xffu8, 0xfe, 0];
    assert_eq!(unsafe { khsim_run_preset(bad.as_ptr().cast(), &mut sim) }, KhsimStatus::InvalidUtf8);

    // a successful call clears the message
    let mut v = 0.0;
    assert_eq!(unsafe { khsim_parse_value(c("1.01p").as_ptr(), &mut v) }, KhsimStatus::Ok);
    assert_eq!(v, 1.01e-12);
    assert_eq!(last_error(), None);
}

#[test]
fn null_handles_are_rejected() {
    let (mut a, mut b) = (0usize, 0usize);
    assert_eq!(unsafe { khsim_simulation_shape(ptr::null(), &mut a, &mut b) }, KhsimStatus::NullPointer);
    unsafe { khsim_simulation_free(ptr::null_mut()) };
    let v = unsafe { CStr::from_ptr(khsim_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_is_valid_c() {
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let header = std::fs::read_to_string(include.join("khsim.h")).unwrap();
    for name in ["khsim_run", "khsim_run_preset", "khsim_simulation_free", "khsim_last_error", "KHSIM_STATUS_NUMERICAL"] {
        assert!(header.contains(name), "{name}");
    }
    let dir = std::env::temp_dir().join(format!("khsim-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let src = dir.join("use.c");
    std::fs::write(
        &src,
        "#include \"khsim.h\"\nint main(void) {\n  KhsimSimulation *s = 0;\n  KhsimStatus st = khsim_run_preset(\"regime1\", &s);\n  khsim_simulation_free(s);\n  return st == KHSIM_STATUS_OK ? 0 : 1;\n}\n",
    )
    .unwrap();
    match Command::new("cc").arg("-fsyntax-only").arg("-Wall").arg("-Werror").arg("-I").arg(&include).arg(&src).output() {
        Ok(o) => assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr)),
        Err(_) => eprintln!("no C compiler; header syntax not checked"),
    }
    let _ = std::fs::remove_dir_all(&dir);
}
