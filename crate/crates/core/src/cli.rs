//! `blowup` command-line tool: `basis-check`, `simulate`, `shoot`, `verify`.
//!
//! Exit codes: 0 pass, 1 property failure, 2 numerical divergence,
//! 3 search incomplete, 64 usage, 66 missing input.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::checks::{basis_suite, verify_record, VerifyReport};
use crate::config::Config;
use crate::io::{
    fmt_f, read_snapshot, read_trajectory, snapshot_time, write_search_log, write_table, write_trajectory,
};
use crate::shooting::{
    random_exits, run_trajectory, search, trace, ExitMode, RunOptions, RunStatus, SearchOptions, SearchStatus,
    TrajectoryRecord,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Pass = 0,
    PropertyFailure = 1,
    Diverged = 2,
    SearchIncomplete = 3,
    Usage = 64,
    NoInput = 66,
}

impl ExitCode {
    pub fn code(self) -> i32 {
        self as i32
    }
}

/// Exit code reporting `err`.
pub fn error_code(err: &Error) -> ExitCode {
    match err {
        Error::UnknownKey(_) | Error::BadValue { .. } | Error::InvalidParameter { .. } => ExitCode::Usage,
        Error::Io(_) | Error::Malformed { .. } | Error::UnusableRecord(_) => ExitCode::NoInput,
        Error::Diverged { .. } => ExitCode::Diverged,
        _ => ExitCode::PropertyFailure,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "blowup",
    version,
    about = "Trapped trajectories of the complex blow-up problem"
)]
pub struct Cli {
    /// Configuration file of `key = value` lines.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Overrides one configuration key; may be repeated.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_name = "N")]
    pub workers: Option<usize>,
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Hermite basis and kernel property suite.
    BasisCheck,
    /// One trajectory with the configured parameters.
    Simulate {
        /// Continue from a snapshot file `s_<s>.csv`.
        #[arg(long, value_name = "SNAPSHOT")]
        resume: Option<PathBuf>,
    },
    /// Searches the parameters for a trajectory trapped to the horizon.
    Shoot,
    /// Checks a stored trajectory.
    Verify {
        #[arg(value_name = "TRAJECTORY_DIR")]
        trajectory: PathBuf,
    },
}

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

// Console write failures are not actionable.
macro_rules! say {
    ($w:expr, $($arg:tt)*) => { let _ = writeln!($w, $($arg)*); };
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    say!(out, "{}", text.trim_end());
                    ExitCode::Pass
                }
                _ => {
                    say!(err, "{}", text.trim_end());
                    ExitCode::Usage
                }
            };
        }
    };
    let mut io = Io { out, err };
    match execute(&cli, &mut io) {
        Ok(code) => code,
        Err(e) => {
            say!(io.err, "error: {e}");
            error_code(&e)
        }
    }
}

fn load_config(cli: &Cli, base: Config) -> Result<Config> {
    let mut cfg = base;
    if let Some(path) = &cli.config {
        cfg.apply_text(&fs::read_to_string(path)?)?;
    }
    for s in &cli.set {
        cfg.apply_override(s)?;
    }
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    if let Some(w) = cli.workers {
        cfg.run.workers = w.max(1);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: &Cli, io: &mut Io) -> Result<ExitCode> {
    match &cli.command {
        Command::BasisCheck => {
            let cfg = load_config(cli, Config::default())?;
            basis_check(&cfg, cli.verbose, io)
        }
        Command::Simulate { resume } => {
            let cfg = load_config(cli, Config::default())?;
            simulate(&cfg, resume.as_deref(), &cli.out, io)
        }
        Command::Shoot => {
            let cfg = load_config(cli, Config::default())?;
            shoot(&cfg, &cli.out, cli.verbose, io)
        }
        Command::Verify { trajectory } => {
            if !trajectory.join("meta.txt").is_file() {
                say!(io.err, "error: no trajectory at {}", trajectory.display());
                return Ok(ExitCode::NoInput);
            }
            let (record, stored) = read_trajectory(trajectory)?;
            let cfg = load_config(cli, stored)?;
            verify(&cfg, record, &cli.out, io)
        }
    }
}

fn basis_check(cfg: &Config, verbose: bool, io: &mut Io) -> Result<ExitCode> {
    let results = basis_suite(cfg.hooks.corrupt_norm)?;
    for r in &results {
        if verbose {
            say!(
                io.out,
                "{:<24} residual {:.3e}  tolerance {:.1e}  {}",
                r.name,
                r.residual,
                r.tolerance,
                if r.passed() { "ok" } else { "FAIL" }
            );
        }
    }
    match results.iter().find(|r| !r.passed()) {
        Some(r) => {
            say!(
                io.err,
                "property failed: {} (residual {:.3e} > {:.1e})",
                r.name,
                r.residual,
                r.tolerance
            );
            Ok(ExitCode::PropertyFailure)
        }
        None => {
            say!(io.out, "basis check passed ({} properties)", results.len());
            Ok(ExitCode::Pass)
        }
    }
}

fn describe(record: &TrajectoryRecord) -> String {
    let e = &record.exit;
    match &record.status {
        RunStatus::Trapped => format!("trapped on [{}, {}]", record.s_start, record.s_end()),
        RunStatus::Exited => format!("exited at s = {} via {} (sign {})", e.s_exit, e.mode, e.sign),
        RunStatus::Diverged { s, reason } => format!("diverged at s = {s}: {reason}"),
    }
}

fn simulate(cfg: &Config, resume: Option<&Path>, out: &Path, io: &mut Io) -> Result<ExitCode> {
    let opts = RunOptions {
        stop_on_exit: false,
        keep_snapshots: cfg.run.snapshots,
    };
    let s_max = cfg.s_max();
    let record = match resume {
        Some(path) => {
            let s = snapshot_time(path)
                .ok_or_else(|| Error::invalid("resume", format!("cannot read s from `{}`", path.display())))?;
            let field = read_snapshot(path)?;
            trace(cfg.run.params, field, s, s_max, &cfg.shrinking, &cfg.solver, opts)?
        }
        None => run_trajectory(&cfg.run.params, &cfg.shrinking, &cfg.solver, s_max, opts)?,
    };
    write_trajectory(out, &record, cfg)?;
    say!(
        io.out,
        "{}; {} ticks written to {}",
        describe(&record),
        record.ticks.len(),
        out.display()
    );
    Ok(match record.status {
        RunStatus::Diverged { .. } => ExitCode::Diverged,
        _ => ExitCode::Pass,
    })
}

fn shoot(cfg: &Config, out: &Path, verbose: bool, io: &mut Io) -> Result<ExitCode> {
    fs::create_dir_all(out)?;
    let s_max = cfg.s_max();
    let opts = SearchOptions {
        budget: cfg.run.budget,
        workers: cfg.run.workers,
        subspace: cfg.run.subspace,
    };
    let outcome = search(&cfg.shrinking, &cfg.solver, s_max, &opts)?;
    write_search_log(&out.join("search_log.csv"), &outcome.log)?;
    if verbose {
        for e in &outcome.log {
            say!(
                io.out,
                "eval {:>4}  s_exit {:>8.3}  {} {:+}",
                e.eval_id,
                e.s_exit,
                e.mode,
                e.sign
            );
        }
    }
    let best = run_trajectory(
        &outcome.best,
        &cfg.shrinking,
        &cfg.solver,
        s_max,
        RunOptions {
            stop_on_exit: true,
            keep_snapshots: cfg.run.snapshots,
        },
    )?;
    let mut best_cfg = cfg.clone();
    best_cfg.run.params = outcome.best;
    write_trajectory(&out.join("best"), &best, &best_cfg)?;

    let p = outcome.best;
    let mut summary = format!(
        "status={}\nsubspace={:?}\nevaluations={}\nd0={}\nd1={}\ndt0={}\ndt1={}\ns_exit={}\nexit_mode={}\n",
        match outcome.status {
            SearchStatus::Trapped => "trapped",
            SearchStatus::Budget => "incomplete",
        },
        outcome.subspace,
        outcome.log.len(),
        fmt_f(p.d0),
        fmt_f(p.d1),
        fmt_f(p.dt0),
        fmt_f(p.dt1),
        fmt_f(best.exit.s_exit),
        best.exit.mode,
    );

    if cfg.run.probes > 0 {
        let draws = random_exits(
            &cfg.shrinking,
            &cfg.solver,
            s_max,
            cfg.run.probes,
            cfg.run.seed,
            cfg.run.workers,
        )?;
        let mut csv = String::from("draw,d0,d1,dt0,dt1,s_exit,exit_mode,exit_sign,crossing_rate\n");
        for (i, r) in draws.iter().enumerate() {
            let p = r.params;
            csv.push_str(&format!(
                "{i},{},{},{},{},{},{},{},{}\n",
                fmt_f(p.d0),
                fmt_f(p.d1),
                fmt_f(p.dt0),
                fmt_f(p.dt1),
                fmt_f(r.exit.s_exit),
                r.exit.mode,
                fmt_f(r.exit.sign),
                fmt_f(r.exit.crossing_rate)
            ));
        }
        fs::write(out.join("probes.csv"), csv)?;
        let census = exit_census(&draws);
        for (label, n) in &census {
            summary.push_str(&format!("probe.{label}={n}\n"));
        }
        say!(io.out, "exit census over {} draws: {:?}", draws.len(), census);
    }
    fs::write(out.join("summary.txt"), &summary)?;

    say!(
        io.out,
        "{} after {} evaluations; best {:?}; {}",
        if outcome.status == SearchStatus::Trapped {
            "trapped"
        } else {
            "search incomplete"
        },
        outcome.log.len(),
        p.to_array(),
        describe(&best)
    );
    if matches!(best.status, RunStatus::Diverged { .. }) {
        return Ok(ExitCode::Diverged);
    }
    Ok(if outcome.status == SearchStatus::Trapped && best.is_trapped() {
        ExitCode::Pass
    } else {
        ExitCode::SearchIncomplete
    })
}

/// Exit counts per mode label, in component order, `none` last.
pub fn exit_census(records: &[TrajectoryRecord]) -> Vec<(String, usize)> {
    let mut out: Vec<(String, usize)> = crate::decomposition::Component::ALL
        .iter()
        .map(|c| (c.to_string(), 0))
        .collect();
    out.push(("none".into(), 0));
    for r in records {
        let label = r.exit.mode.to_string();
        if let Some(e) = out.iter_mut().find(|e| e.0 == label) {
            e.1 += 1;
        }
    }
    out
}

fn verify(cfg: &Config, record: TrajectoryRecord, out: &Path, io: &mut Io) -> Result<ExitCode> {
    let s_verify = cfg.s_verify();
    let record = if record.s_end() > s_verify + 1e-9 {
        record.truncated(s_verify)?
    } else {
        record
    };
    let report = verify_record(&record, &cfg.verify)?;
    write_report(out, &report, record.exit.mode)?;
    for c in &report.checks {
        say!(
            io.out,
            "{:<18} {}  {}",
            c.name,
            if c.passed { "PASS" } else { "FAIL" },
            c.detail
        );
    }
    say!(io.out, "summary {}", if report.passed() { "PASS" } else { "FAIL" });
    Ok(if report.passed() {
        ExitCode::Pass
    } else {
        ExitCode::PropertyFailure
    })
}

fn write_report(out: &Path, r: &VerifyReport, exit_mode: ExitMode) -> Result<()> {
    fs::create_dir_all(out)?;
    let mut rows = Vec::new();
    for p in &r.single_point {
        for ((s, v), b) in p.series.iter().zip(&p.bound) {
            rows.push(vec![p.x0, *s, *v, *b]);
        }
    }
    write_table(
        &out.join("single_point.csv"),
        &["x0", "s", "scaled_size", "bound"],
        &rows,
    )?;
    let pairs = |v: &[(f64, f64)]| v.iter().map(|p| vec![p.0, p.1]).collect::<Vec<_>>();
    write_table(&out.join("profile.csv"), &["s", "scaled_error"], &pairs(&r.profile))?;
    write_table(&out.join("null_mode.csv"), &["s", "s2_qt2"], &pairs(&r.null_series))?;
    write_table(
        &out.join("imaginary_profile.csv"),
        &["s", "scaled_error"],
        &pairs(&r.imaginary),
    )?;
    let mut rows = Vec::new();
    for (k0, pts) in &r.k0_sweep {
        for p in pts {
            rows.push(vec![
                *k0,
                p.x0,
                p.tau0,
                p.log_time,
                p.u_star,
                p.reference,
                p.ratio,
                p.trajectory_scaled.re,
                p.trajectory_scaled.im,
                f64::from(u8::from(p.in_window)),
            ]);
        }
    }
    write_table(
        &out.join("final_profile.csv"),
        &[
            "k0",
            "x0",
            "tau0",
            "log_time",
            "u_star",
            "reference",
            "ratio",
            "trajectory_re",
            "trajectory_im",
            "in_window",
        ],
        &rows,
    )?;
    let rows: Vec<Vec<f64>> = r
        .reduced
        .iter()
        .map(|x| vec![x.s, x.q0, x.q1, x.qt0, x.qt1, x.qt2])
        .collect();
    write_table(&out.join("reduced.csv"), &["s", "q0", "q1", "qt0", "qt1", "qt2"], &rows)?;

    let mut text = format!(
        "s_start={}\ns_end={}\ntrapped={}\nexit_mode={exit_mode}\n",
        fmt_f(r.s_range.0),
        fmt_f(r.s_range.1),
        r.trapped
    );
    for (eta, verdict, regular) in &r.eta0_sweep {
        text.push_str(&format!(
            "eta0={} origin={verdict} regular_points={regular}\n",
            fmt_f(*eta)
        ));
    }
    for c in &r.checks {
        text.push_str(&format!(
            "{} {} {}\n",
            c.name,
            if c.passed { "PASS" } else { "FAIL" },
            c.detail
        ));
    }
    text.push_str(&format!("summary {}\n", if r.passed() { "PASS" } else { "FAIL" }));
    fs::write(out.join("summary.txt"), text)?;
    Ok(())
}
