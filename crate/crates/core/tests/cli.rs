use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn blowup(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blowup"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_csv(p: &Path) -> (String, Vec<Vec<String>>) {
    let text = fs::read_to_string(p).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    (header, rows)
}

fn is_full_precision(v: &str) -> bool {
    // d.dddddddddddddddde[-]x
    let (mantissa, exp) = v.split_once('e').unwrap_or((v, ""));
    let digits = mantissa.trim_start_matches('-');
    exp.parse::<i32>().is_ok() && digits.len() == 18 && digits.as_bytes()[1] == b'.'
}

#[test]
fn basis_check_passes() {
    let o = blowup(&["basis-check"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn basis_check_names_corrupted_property() {
    let o = blowup(&["basis-check", "--set", "hook.corrupt_norm=4"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("orthogonality"));
}

#[test]
fn basis_check_verbose_lists_residuals() {
    let o = blowup(&["basis-check", "--verbose"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    for name in ["orthogonality", "parity", "kernel_eigen_relation", "kernel_composition"] {
        assert!(
            out.lines().any(|l| l.starts_with(name) && l.contains("residual")),
            "{name}"
        );
    }
}

#[test]
fn unknown_key_is_a_usage_error() {
    let o = blowup(&["simulate", "--set", "kzero=3"]);
    assert_eq!(code(&o), 64);
    assert!(stderr(&o).contains("kzero"));
    let o = blowup(&["simulate", "--set", "ds"]);
    assert_eq!(code(&o), 64);
    let o = blowup(&["no-such-command"]);
    assert_eq!(code(&o), 64);
}

#[test]
fn missing_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = blowup(&["verify", path(&dir.path().join("absent"))]);
    assert_eq!(code(&o), 66);
    let o = blowup(&["basis-check", "--config", path(&dir.path().join("absent.cfg"))]);
    assert_eq!(code(&o), 66);
}

#[test]
fn config_file_and_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# short run\nhorizon = 1\nsnapshots = false\n").unwrap();
    let out = dir.path().join("sim");
    let o = blowup(&[
        "simulate",
        "--config",
        path(&cfg),
        "--set",
        "horizon=0.5",
        "--out",
        path(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (_, rows) = read_csv(&out.join("modes.csv"));
    assert_eq!(rows.len(), 6);
    assert!(!out.join("snapshots").exists());
}

#[test]
fn simulate_writes_expected_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim");
    let o = blowup(&["simulate", "--set", "horizon=1", "--out", path(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (header, rows) = read_csv(&out.join("modes.csv"));
    assert_eq!(
        header,
        "s,q0,q1,q2,qminus_ratio,qe_sup,qt0,qt1,qt2,qtminus_ratio,qte_sup,worst"
    );
    assert_eq!(rows.len(), 11);
    assert!(rows.iter().all(|r| r[..11].iter().all(|v| is_full_precision(v))));
    let (_, ticks) = read_csv(&out.join("ticks.csv"));
    assert_eq!(ticks.len(), 11);
    let snaps = fs::read_dir(out.join("snapshots")).unwrap().count();
    assert_eq!(snaps, 11);
    let (h, _) = read_csv(&out.join("snapshots/s_20.5000.csv"));
    assert_eq!(h, "y,q,qt");
}

#[test]
fn resume_matches_uninterrupted_run() {
    let dir = tempfile::tempdir().unwrap();
    let full = dir.path().join("full");
    let o = blowup(&["simulate", "--set", "horizon=2", "--out", path(&full)]);
    assert_eq!(code(&o), 0);
    let resumed = dir.path().join("resumed");
    let o = blowup(&[
        "simulate",
        "--set",
        "horizon=2",
        "--resume",
        path(&full.join("snapshots/s_21.0000.csv")),
        "--out",
        path(&resumed),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (_, a) = read_csv(&full.join("snapshots/s_22.0000.csv"));
    let (_, b) = read_csv(&resumed.join("snapshots/s_22.0000.csv"));
    assert_eq!(a.len(), b.len());
    let mut diff = 0.0f64;
    for (ra, rb) in a.iter().zip(&b) {
        for (x, y) in ra.iter().zip(rb) {
            diff = diff.max((x.parse::<f64>().unwrap() - y.parse::<f64>().unwrap()).abs());
        }
    }
    assert!(diff <= 1e-12, "resume differs by {diff}");
    let (_, ticks) = read_csv(&resumed.join("modes.csv"));
    assert_eq!(ticks.len(), 11);
}

#[test]
fn shoot_with_budget_one_is_incomplete() {
    let dir = tempfile::tempdir().unwrap();
    let o = blowup(&["shoot", "--set", "budget=1", "--out", path(dir.path())]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    let (header, rows) = read_csv(&dir.path().join("search_log.csv"));
    assert_eq!(header, "eval_id,d0,d1,dt0,dt1,s_exit,exit_mode,exit_sign");
    assert_eq!(rows.len(), 1);
    assert!(dir.path().join("best/meta.txt").exists());
}

#[test]
fn shoot_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = blowup(&[
            "shoot",
            "--set",
            "horizon=5",
            "--set",
            "budget=5",
            "--set",
            "probes=3",
            "--set",
            "snapshots=false",
            "--seed",
            "7",
            "--out",
            path(&out),
        ]);
        assert!([0, 3].contains(&code(&o)), "{}", stderr(&o));
        (
            fs::read(out.join("search_log.csv")).unwrap(),
            fs::read(out.join("probes.csv")).unwrap(),
        )
    };
    let first = run("a");
    assert_eq!(first, run("b"));
    assert!(String::from_utf8_lossy(&first.0).lines().count() > 2);
}

#[test]
fn early_exit_fails_profile_check() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    // Zero parameters leave the set through q0 before the horizon.
    let o = blowup(&["simulate", "--out", path(&sim)]);
    assert_eq!(code(&o), 0);
    let meta = fs::read_to_string(sim.join("meta.txt")).unwrap();
    assert!(meta.contains("record.status=exited"));
    let report = dir.path().join("report");
    let o = blowup(&["verify", path(&sim), "--out", path(&report)]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o)
        .lines()
        .any(|l| l.starts_with("profile") && l.contains("FAIL")));
    let summary = fs::read_to_string(report.join("summary.txt")).unwrap();
    assert!(summary.ends_with("summary FAIL\n"));

    let again = dir.path().join("again");
    blowup(&["verify", path(&sim), "--out", path(&again)]);
    for f in ["summary.txt", "profile.csv", "final_profile.csv", "single_point.csv"] {
        assert_eq!(
            fs::read(report.join(f)).unwrap(),
            fs::read(again.join(f)).unwrap(),
            "{f}"
        );
    }
}
