use std::ffi::{c_char, CString};
use std::ptr;

use blowup_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0u8; 256];
    let n = unsafe { blowup_last_error(buf.as_mut_ptr().cast::<c_char>(), buf.len()) };
    buf.truncate(n.min(255));
    String::from_utf8(buf).unwrap()
}

#[test]
fn scalar_functions() {
    let mut v = 0.0;
    unsafe {
        assert_eq!(blowup_hermite(2, 3.0, &mut v), BlowupStatus::Ok);
        assert_eq!(v, 7.0);
        assert_eq!(blowup_hermite_norm_sq(3, &mut v), BlowupStatus::Ok);
        assert_eq!(v, 48.0);
        assert_eq!(blowup_hermite(31, 1.0, &mut v), BlowupStatus::InvalidArgument);
        assert!(last_error().contains("31"));
        assert_eq!(blowup_hermite(1, 1.0, ptr::null_mut()), BlowupStatus::NullPointer);
        assert_eq!(
            blowup_mehler_kernel(-1.0, 0.0, 0.0, &mut v),
            BlowupStatus::InvalidArgument
        );
        assert_eq!(blowup_mehler_kernel(1.0, 0.0, 0.0, &mut v), BlowupStatus::Ok);
        assert!(v > 0.0);
    }
    assert_eq!(blowup_profile_f(0.0), 1.0);
    assert_eq!(blowup_profile_phi(0.0, 10.0), 1.025);
}

#[test]
fn basis_check_and_fault_hook() {
    let mut passed = false;
    unsafe {
        assert_eq!(blowup_basis_check(-1, &mut passed), BlowupStatus::Ok);
        assert!(passed);
        assert_eq!(blowup_basis_check(2, &mut passed), BlowupStatus::Ok);
    }
    assert!(!passed);
    assert!(last_error().contains("orthogonality"));
}

#[test]
fn config_errors() {
    let cfg = blowup_config_new();
    let key = CString::new("nonsense").unwrap();
    let good = CString::new("K0").unwrap();
    let value = CString::new("12").unwrap();
    let bad = CString::new("twelve").unwrap();
    unsafe {
        assert_eq!(
            blowup_config_set(cfg, key.as_ptr(), value.as_ptr()),
            BlowupStatus::UnknownKey
        );
        assert!(last_error().contains("nonsense"));
        assert_eq!(blowup_config_set(cfg, good.as_ptr(), value.as_ptr()), BlowupStatus::Ok);
        assert_eq!(
            blowup_config_set(cfg, good.as_ptr(), bad.as_ptr()),
            BlowupStatus::InvalidArgument
        );
        assert_eq!(
            blowup_config_set(ptr::null_mut(), good.as_ptr(), value.as_ptr()),
            BlowupStatus::NullPointer
        );
        blowup_config_free(cfg);
        blowup_config_free(ptr::null_mut());
    }
}

#[test]
fn short_trajectory_round_trip() {
    let cfg = blowup_config_new();
    let horizon = CString::new("horizon").unwrap();
    let two = CString::new("2").unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("run").to_str().unwrap()).unwrap();
    unsafe {
        assert_eq!(blowup_config_set(cfg, horizon.as_ptr(), two.as_ptr()), BlowupStatus::Ok);
        let params = [0.0f64; 4];
        let mut traj = ptr::null_mut();
        assert_eq!(blowup_simulate(cfg, params.as_ptr(), &mut traj), BlowupStatus::Ok);
        assert_eq!(blowup_trajectory_tick_count(traj), 21);
        let mut tick = BlowupTick::default();
        assert_eq!(blowup_trajectory_tick(traj, 20, &mut tick), BlowupStatus::Ok);
        assert!((tick.s - 22.0).abs() < 1e-9);
        assert!(tick.member);
        assert_eq!(blowup_trajectory_tick(traj, 21, &mut tick), BlowupStatus::OutOfRange);
        let mut exit = std::mem::MaybeUninit::<BlowupExit>::uninit();
        assert_eq!(blowup_trajectory_exit(traj, exit.as_mut_ptr()), BlowupStatus::Ok);
        let exit = exit.assume_init();
        assert_eq!(exit.status, BlowupRunStatus::Trapped);
        assert_eq!(exit.mode, -1);

        assert_eq!(blowup_trajectory_write(traj, cfg, path.as_ptr()), BlowupStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(blowup_trajectory_load(path.as_ptr(), &mut back), BlowupStatus::Ok);
        assert_eq!(blowup_trajectory_tick_count(back), 21);
        let mut p = [1.0f64; 4];
        assert_eq!(blowup_trajectory_params(back, p.as_mut_ptr()), BlowupStatus::Ok);
        assert_eq!(p, [0.0; 4]);

        // Too short for the asymptotic checks.
        let mut passed = true;
        assert_eq!(blowup_verify(back, cfg, &mut passed), BlowupStatus::Ok);
        assert!(!passed);

        let missing = CString::new(dir.path().join("absent").to_str().unwrap()).unwrap();
        let mut none = ptr::null_mut();
        assert_eq!(blowup_trajectory_load(missing.as_ptr(), &mut none), BlowupStatus::Io);
        assert!(none.is_null());

        blowup_trajectory_free(traj);
        blowup_trajectory_free(back);
        blowup_config_free(cfg);
    }
    assert_eq!(unsafe { blowup_trajectory_tick_count(ptr::null()) }, 0);
}

#[test]
fn header_is_valid_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/blowup_ffi.h");
    let text = std::fs::read_to_string(header).unwrap();
    for name in [
        "blowup_simulate",
        "blowup_shoot",
        "blowup_verify",
        "BlowupTrajectory",
        "BLOWUP_STATUS_OK",
    ] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let Ok(out) = std::process::Command::new("cc")
        .args(["-fsyntax-only", "-x", "c", header])
        .output()
    else {
        eprintln!("no C compiler; syntax check skipped");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn c_program_links_and_runs() {
    let Ok(exe) = std::env::current_exe() else { return };
    // target/<profile>/deps/<test> -> target/<profile>
    let lib_dir = exe.parent().and_then(|d| d.parent()).unwrap().to_path_buf();
    let lib = lib_dir.join("libblowup_ffi.a");
    if !lib.exists() {
        eprintln!("static library not built; link test skipped");
        return;
    }
    let manifest = env!("CARGO_MANIFEST_DIR");
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("smoke");
    let Ok(out) = std::process::Command::new("cc")
        .arg(format!("{manifest}/tests/c/smoke.c"))
        .arg(format!("-I{manifest}/include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .output()
    else {
        eprintln!("no C compiler; link test skipped");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = std::process::Command::new(&bin).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    assert!(String::from_utf8_lossy(&run.stdout).contains("11 ticks"));
}
