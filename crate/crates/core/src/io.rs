//! Plain-text persistence: CSV tables with a header row and floats at 17
//! significant digits, plus `key=value` metadata.
//!
//! A trajectory directory holds `meta.txt`, `modes.csv`, `ticks.csv` and,
//! when kept, `snapshots/s_<s>.csv` with columns `y,q,qt`.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::config::Config;
use crate::decomposition::Component;
use crate::shooting::{ExitEvent, ExitMode, RunStatus, SearchLogEntry, ShootParams, Tick, TrajectoryRecord};
use crate::solver::{Field, YGrid};
use crate::{Error, Result};

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

fn malformed(path: &Path, reason: impl Into<String>) -> Error {
    Error::Malformed {
        path: path.display().to_string(),
        reason: reason.into(),
    }
}

/// Writes a CSV table of floats.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let line: Vec<String> = row.iter().map(|&x| fmt_f(x)).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a CSV table written by [`write_table`]; returns header and rows
/// as strings.
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let r = BufReader::new(fs::File::open(path)?);
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| malformed(path, "empty file"))??
        .split(',')
        .map(str::to_string)
        .collect::<Vec<_>>();
    let mut rows = Vec::new();
    for line in lines {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let row: Vec<String> = line.split(',').map(str::to_string).collect();
        if row.len() != header.len() {
            return Err(malformed(
                path,
                format!("row with {} fields, header has {}", row.len(), header.len()),
            ));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

fn num(path: &Path, v: &str) -> Result<f64> {
    v.parse().map_err(|_| malformed(path, format!("not a number: `{v}`")))
}

pub fn snapshot_name(s: f64) -> String {
    format!("s_{s:.4}.csv")
}

/// Self-similar time encoded in a snapshot file name.
pub fn snapshot_time(path: &Path) -> Option<f64> {
    let stem = path.file_stem()?.to_str()?;
    stem.strip_prefix("s_")?.parse().ok()
}

pub fn write_snapshot(path: &Path, field: &Field) -> Result<()> {
    let rows: Vec<Vec<f64>> = (0..field.grid.len())
        .map(|i| vec![field.grid.ys()[i], field.q[i], field.qt[i]])
        .collect();
    write_table(path, &["y", "q", "qt"], &rows)
}

pub fn read_snapshot(path: &Path) -> Result<Field> {
    let (header, rows) = read_table(path)?;
    if header != ["y", "q", "qt"] {
        return Err(malformed(path, "expected columns y,q,qt"));
    }
    let mut ys = Vec::with_capacity(rows.len());
    let mut q = Vec::with_capacity(rows.len());
    let mut qt = Vec::with_capacity(rows.len());
    for row in &rows {
        ys.push(num(path, &row[0])?);
        q.push(num(path, &row[1])?);
        qt.push(num(path, &row[2])?);
    }
    let grid = YGrid::from_nodes(&ys)?;
    Field::new(grid, q, qt)
}

/// `s, q0, q1, q2, sup-ratio of q_minus, |q_e|_inf` and the same for `qt`,
/// then the label of the most used bound.
pub fn write_modes(path: &Path, record: &TrajectoryRecord) -> Result<()> {
    let sp = &record.shrinking;
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(
        w,
        "s,q0,q1,q2,qminus_ratio,qe_sup,qt0,qt1,qt2,qtminus_ratio,qte_sup,worst"
    )?;
    for t in &record.ticks {
        let s = t.s;
        let qe = t.ratio(Component::QE) * sp.a * sp.a / s.sqrt();
        let qte = t.ratio(Component::QtE) * sp.at * sp.at / s.powf(sp.alpha - 1.5);
        let cells = [
            s,
            t.q_modes[0],
            t.q_modes[1],
            t.q_modes[2],
            t.ratio(Component::QMinus),
            qe,
            t.qt_modes[0],
            t.qt_modes[1],
            t.qt_modes[2],
            t.ratio(Component::QtMinus),
            qte,
        ];
        let line: Vec<String> = cells.iter().map(|&x| fmt_f(x)).collect();
        writeln!(w, "{},{}", line.join(","), t.worst)?;
    }
    w.flush()?;
    Ok(())
}

fn tick_header() -> Vec<String> {
    let mut h: Vec<String> = ["s", "member", "worst", "q0", "q1", "q2", "qt0", "qt1", "qt2"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend(Component::ALL.iter().map(|c| format!("usage_{c}")));
    h.extend(Component::ALL.iter().map(|c| format!("sign_{c}")));
    h.push("global_q".into());
    h.push("global_qt".into());
    h
}

pub fn write_ticks(path: &Path, ticks: &[Tick]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{}", tick_header().join(","))?;
    for t in ticks {
        let mut cells = vec![fmt_f(t.s), u8::from(t.member).to_string(), t.worst.to_string()];
        cells.extend(t.q_modes.iter().chain(&t.qt_modes).map(|&x| fmt_f(x)));
        cells.extend(t.usage.iter().chain(&t.signs).map(|&x| fmt_f(x)));
        cells.push(fmt_f(t.global.0));
        cells.push(fmt_f(t.global.1));
        writeln!(w, "{}", cells.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_ticks(path: &Path) -> Result<Vec<Tick>> {
    let (header, rows) = read_table(path)?;
    if header != tick_header() {
        return Err(malformed(path, "unexpected tick columns"));
    }
    rows.iter()
        .map(|row| {
            let f = |i: usize| num(path, &row[i]);
            let mut usage = [0.0; 10];
            let mut signs = [0.0; 10];
            for k in 0..10 {
                usage[k] = f(9 + k)?;
                signs[k] = f(19 + k)?;
            }
            Ok(Tick {
                s: f(0)?,
                member: row[1] == "1",
                worst: row[2].parse()?,
                q_modes: [f(3)?, f(4)?, f(5)?],
                qt_modes: [f(6)?, f(7)?, f(8)?],
                usage,
                signs,
                global: (f(29)?, f(30)?),
            })
        })
        .collect()
}

fn status_label(s: &RunStatus) -> &'static str {
    match s {
        RunStatus::Trapped => "trapped",
        RunStatus::Exited => "exited",
        RunStatus::Diverged { .. } => "diverged",
    }
}

/// Writes a complete trajectory directory. `config` supplies the settings
/// recorded next to the run.
pub fn write_trajectory(dir: &Path, record: &TrajectoryRecord, config: &Config) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut cfg = config.clone();
    cfg.shrinking = record.shrinking;
    cfg.solver = record.solver;
    let mut meta = cfg.to_text();
    let p = record.params;
    let e = record.exit;
    for (k, v) in [
        ("record.d0", fmt_f(p.d0)),
        ("record.d1", fmt_f(p.d1)),
        ("record.dt0", fmt_f(p.dt0)),
        ("record.dt1", fmt_f(p.dt1)),
        ("record.s_start", fmt_f(record.s_start)),
        ("record.s_max", fmt_f(record.s_max)),
        ("record.status", status_label(&record.status).to_string()),
        ("record.exit_s", fmt_f(e.s_exit)),
        ("record.exit_mode", e.mode.to_string()),
        ("record.exit_sign", fmt_f(e.sign)),
        ("record.exit_rate", fmt_f(e.crossing_rate)),
    ] {
        meta.push_str(&format!("{k}={v}\n"));
    }
    if let RunStatus::Diverged { s, reason } = &record.status {
        meta.push_str(&format!("record.diverged_s={}\n", fmt_f(*s)));
        meta.push_str(&format!("record.reason={}\n", reason.replace('\n', " ")));
    }
    fs::write(dir.join("meta.txt"), meta)?;
    write_modes(&dir.join("modes.csv"), record)?;
    write_ticks(&dir.join("ticks.csv"), &record.ticks)?;
    if !record.snapshots.is_empty() {
        let snaps = dir.join("snapshots");
        fs::create_dir_all(&snaps)?;
        for (t, f) in record.ticks.iter().zip(&record.snapshots) {
            write_snapshot(&snaps.join(snapshot_name(t.s)), f)?;
        }
    }
    Ok(())
}

/// Reads a directory written by [`write_trajectory`].
pub fn read_trajectory(dir: &Path) -> Result<(TrajectoryRecord, Config)> {
    let meta_path = dir.join("meta.txt");
    let text = fs::read_to_string(&meta_path)?;
    let mut cfg = Config::default();
    let mut rec_keys = std::collections::BTreeMap::new();
    let mut plain = String::new();
    for line in text.lines() {
        match line.split_once('=') {
            Some((k, v)) if k.starts_with("record.") => {
                rec_keys.insert(k.to_string(), v.to_string());
            }
            _ => {
                plain.push_str(line);
                plain.push('\n');
            }
        }
    }
    cfg.apply_text(&plain)?;
    let get = |k: &str| -> Result<&String> {
        rec_keys
            .get(k)
            .ok_or_else(|| malformed(&meta_path, format!("missing {k}")))
    };
    let getf = |k: &str| -> Result<f64> { num(&meta_path, get(k)?) };
    let params = ShootParams::new(
        getf("record.d0")?,
        getf("record.d1")?,
        getf("record.dt0")?,
        getf("record.dt1")?,
    )?;
    let status = match get("record.status")?.as_str() {
        "trapped" => RunStatus::Trapped,
        "exited" => RunStatus::Exited,
        "diverged" => RunStatus::Diverged {
            s: getf("record.diverged_s")?,
            reason: get("record.reason").cloned().unwrap_or_default(),
        },
        other => return Err(malformed(&meta_path, format!("unknown status `{other}`"))),
    };
    let exit = ExitEvent {
        s_exit: getf("record.exit_s")?,
        mode: get("record.exit_mode")?.parse::<ExitMode>()?,
        sign: getf("record.exit_sign")?,
        crossing_rate: getf("record.exit_rate")?,
    };
    let ticks = read_ticks(&dir.join("ticks.csv"))?;
    let snap_dir = dir.join("snapshots");
    let snapshots = if snap_dir.is_dir() {
        ticks
            .iter()
            .map(|t| read_snapshot(&snap_dir.join(snapshot_name(t.s))))
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    let record = TrajectoryRecord {
        params,
        shrinking: cfg.shrinking,
        solver: cfg.solver,
        s_start: getf("record.s_start")?,
        s_max: getf("record.s_max")?,
        ticks,
        snapshots,
        exit,
        status,
    };
    Ok((record, cfg))
}

pub fn write_search_log(path: &Path, log: &[SearchLogEntry]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "eval_id,d0,d1,dt0,dt1,s_exit,exit_mode,exit_sign")?;
    for e in log {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            e.eval_id,
            fmt_f(e.params.d0),
            fmt_f(e.params.d1),
            fmt_f(e.params.dt0),
            fmt_f(e.params.dt1),
            fmt_f(e.s_exit),
            e.mode,
            e.sign as i32
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Sorted snapshot files of a trajectory directory.
pub fn list_snapshots(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir.join("snapshots"))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| snapshot_time(p).is_some())
        .collect();
    v.sort_by(|a, b| snapshot_time(a).partial_cmp(&snapshot_time(b)).expect("finite"));
    Ok(v)
}
