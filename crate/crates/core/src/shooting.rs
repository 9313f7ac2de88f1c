//! Initial-data family, trajectory tracking against the shrinking set, and
//! the search for parameters whose trajectory stays trapped.

use std::fmt;
use std::ops::ControlFlow;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::decomposition::{check_field, Component, Projector, ShrinkingParams};
use crate::hermite::hermite;
use crate::profile::cutoff_chi;
use crate::solver::{evolve, rhs, EvolveStatus, Field, SolverConfig, YGrid};
use crate::{Error, Result};

/// Box of admissible shooting parameters.
pub const PARAM_BOUND: f64 = 2.0;

/// Coefficients `(d0, d1, dt0, dt1)` of the initial data.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ShootParams {
    pub d0: f64,
    pub d1: f64,
    pub dt0: f64,
    pub dt1: f64,
}

impl ShootParams {
    pub fn new(d0: f64, d1: f64, dt0: f64, dt1: f64) -> Result<Self> {
        Self::from_array([d0, d1, dt0, dt1])
    }

    pub fn from_array(v: [f64; 4]) -> Result<Self> {
        if v.iter().any(|x| !(x.abs() <= PARAM_BOUND)) {
            return Err(Error::invalid(
                "params",
                format!("{v:?} outside [-{PARAM_BOUND}, {PARAM_BOUND}]^4"),
            ));
        }
        Ok(Self {
            d0: v[0],
            d1: v[1],
            dt0: v[2],
            dt1: v[3],
        })
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.d0, self.d1, self.dt0, self.dt1]
    }
}

/// `q = (A/s0^2)(d0 + d1 y) chi(2y, s0)`,
/// `qt = [(At/s0^alpha)(dt0 + dt1 y) + (Bt/s0^2) h2(y)] chi(2y, s0)`.
pub fn initial_data(p: &ShootParams, sp: &ShrinkingParams, grid: &YGrid) -> Result<Field> {
    sp.validate()?;
    let s0 = sp.s0;
    let support = sp.k0 * s0.sqrt();
    if grid.ymax() < support {
        return Err(Error::GridTooNarrow {
            ymax: grid.ymax(),
            required: support,
        });
    }
    let real = sp.a / (s0 * s0);
    let imag = sp.at / s0.powf(sp.alpha);
    let null = sp.bt / (s0 * s0);
    let mut field = Field::zeros(grid.clone());
    for (i, &y) in grid.ys().iter().enumerate() {
        let chi = cutoff_chi(2.0 * y, s0, sp.k0);
        if chi == 0.0 {
            continue;
        }
        field.q[i] = real * (p.d0 + p.d1 * y) * chi;
        field.qt[i] = (imag * (p.dt0 + p.dt1 * y) + null * hermite(2, y)?) * chi;
    }
    Ok(field)
}

/// How a trajectory left the shrinking set, if it did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitMode {
    None,
    Via(Component),
}

impl ExitMode {
    pub fn component(self) -> Option<Component> {
        match self {
            ExitMode::None => None,
            ExitMode::Via(c) => Some(c),
        }
    }
}

impl fmt::Display for ExitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExitMode::None => f.write_str("none"),
            ExitMode::Via(c) => write!(f, "{c}"),
        }
    }
}

impl FromStr for ExitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "none" {
            Ok(ExitMode::None)
        } else {
            s.parse().map(ExitMode::Via)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExitEvent {
    pub s_exit: f64,
    pub mode: ExitMode,
    /// Sign of the quantity that touched its bound.
    pub sign: f64,
    /// Rate of change of that quantity at the exit tick. For the four mode
    /// amplitudes this is the projected right-hand side; for the other
    /// components, the backward difference of the signed bound usage.
    pub crossing_rate: f64,
}

/// Per-tick summary of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Tick {
    pub s: f64,
    pub q_modes: [f64; 3],
    pub qt_modes: [f64; 3],
    /// Bound usage indexed like [`Component::ALL`].
    pub usage: [f64; 10],
    pub signs: [f64; 10],
    pub member: bool,
    pub worst: Component,
    /// `(|q|_inf sqrt(s) / A^2, |qt|_inf s^(alpha-3/2) / At^2)`.
    pub global: (f64, f64),
}

impl Tick {
    pub fn ratio(&self, c: Component) -> f64 {
        self.usage[component_index(c)]
    }

    pub fn worst_ratio(&self) -> f64 {
        self.ratio(self.worst)
    }
}

fn component_index(c: Component) -> usize {
    Component::ALL.iter().position(|&x| x == c).expect("listed")
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    /// Stayed in the set up to the horizon.
    Trapped,
    Exited,
    Diverged {
        s: f64,
        reason: String,
    },
}

#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub params: ShootParams,
    pub shrinking: ShrinkingParams,
    pub solver: SolverConfig,
    pub s_start: f64,
    pub s_max: f64,
    pub ticks: Vec<Tick>,
    /// One field per tick when requested, else empty.
    pub snapshots: Vec<Field>,
    pub exit: ExitEvent,
    pub status: RunStatus,
}

impl TrajectoryRecord {
    pub fn is_trapped(&self) -> bool {
        self.status == RunStatus::Trapped
    }

    /// Last tick at which the trajectory was still checked.
    pub fn s_end(&self) -> f64 {
        self.ticks.last().map_or(self.s_start, |t| t.s)
    }

    /// The record restricted to ticks with `s <= s_end`. A run that was
    /// still in the set at `s_end` counts as trapped to that horizon.
    pub fn truncated(&self, s_end: f64) -> Result<TrajectoryRecord> {
        if !(s_end > self.s_start) || s_end > self.s_end() + 1e-9 {
            return Err(Error::OutsideWindow(format!(
                "s_end = {s_end} not in ({}, {}]",
                self.s_start,
                self.s_end()
            )));
        }
        let keep = self.ticks.iter().take_while(|t| t.s <= s_end + 1e-9).count();
        let mut out = self.clone();
        out.ticks.truncate(keep);
        if !out.snapshots.is_empty() {
            out.snapshots.truncate(keep);
        }
        out.s_max = s_end;
        if out.ticks.iter().all(|t| t.member) {
            out.status = RunStatus::Trapped;
            out.exit = ExitEvent {
                s_exit: s_end,
                mode: ExitMode::None,
                sign: 1.0,
                crossing_rate: 0.0,
            };
        }
        Ok(out)
    }

    /// Normalized expanding coordinates
    /// `(s^2 q0/A, s^2 q1/A, s^alpha qt0/At, s^alpha qt1/At)` at the exit
    /// tick, or at the horizon for trapped runs.
    pub fn exit_coordinates(&self) -> [f64; 4] {
        let idx = self
            .ticks
            .iter()
            .position(|t| t.s >= self.exit.s_exit - 1e-9)
            .unwrap_or(self.ticks.len() - 1);
        expanding_coordinates(&self.ticks[idx], &self.shrinking)
    }
}

fn expanding_coordinates(t: &Tick, sp: &ShrinkingParams) -> [f64; 4] {
    let s2 = t.s * t.s;
    let sa = t.s.powf(sp.alpha);
    [
        s2 * t.q_modes[0] / sp.a,
        s2 * t.q_modes[1] / sp.a,
        sa * t.qt_modes[0] / sp.at,
        sa * t.qt_modes[1] / sp.at,
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub stop_on_exit: bool,
    pub keep_snapshots: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            stop_on_exit: true,
            keep_snapshots: false,
        }
    }
}

fn sup_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Projection of the right-hand side onto the mode of `c` (0, 1 only).
fn mode_rate(projector: &Projector, field: &Field, s: f64, sp: &ShrinkingParams, c: Component) -> Result<f64> {
    let (imag, m) = match c {
        Component::Q0 => (false, 0),
        Component::Q1 => (false, 1),
        Component::Qt0 => (true, 0),
        Component::Qt1 => (true, 1),
        _ => return Err(Error::invalid("component", format!("{c} is not an expanding mode"))),
    };
    let r = rhs(field, s, crate::solver::Terms::full())?;
    let g = if imag { &r.qt } else { &r.q };
    let chi_g: Vec<f64> = field
        .grid
        .ys()
        .iter()
        .zip(g)
        .map(|(&y, v)| cutoff_chi(y, s, sp.k0) * v)
        .collect();
    projector.coefficient(&chi_g, m)
}

/// Evolves `initial` from `s_start`, checking membership at every observer
/// tick.
pub fn trace(
    params: ShootParams,
    initial: Field,
    s_start: f64,
    s_max: f64,
    sp: &ShrinkingParams,
    cfg: &SolverConfig,
    opts: RunOptions,
) -> Result<TrajectoryRecord> {
    sp.validate()?;
    if !(s_max > s_start) {
        return Err(Error::invalid("s_max", format!("{s_max} <= {s_start}")));
    }
    let mut projector = Projector::new(initial.grid.clone())?;
    let mut ticks: Vec<Tick> = Vec::new();
    let mut snapshots = Vec::new();
    let mut exit: Option<ExitEvent> = None;
    let mut failure: Option<Error> = None;

    let evolution = evolve(cfg, sp.k0, initial, s_start, s_max, |field, s| {
        if *projector.grid() != field.grid {
            match Projector::new(field.grid.clone()) {
                Ok(p) => projector = p,
                Err(e) => {
                    failure = Some(e);
                    return ControlFlow::Break(());
                }
            }
        }
        let fm = match check_field(&projector, field, s, sp) {
            Ok(fm) => fm,
            Err(e) => {
                failure = Some(e);
                return ControlFlow::Break(());
            }
        };
        let mut usage = [0.0; 10];
        let mut signs = [1.0; 10];
        for u in &fm.report.usage {
            let i = component_index(u.component);
            usage[i] = u.ratio;
            signs[i] = u.sign;
        }
        let tick = Tick {
            s,
            q_modes: fm.real.modes,
            qt_modes: fm.imag.modes,
            usage,
            signs,
            member: fm.report.member,
            worst: fm.report.worst.component,
            global: (
                sup_abs(&field.q) * s.sqrt() / (sp.a * sp.a),
                sup_abs(&field.qt) * s.powf(sp.alpha - 1.5) / (sp.at * sp.at),
            ),
        };
        if exit.is_none() && !tick.member {
            let worst = fm.report.worst;
            let rate = if worst.component.is_expanding() {
                mode_rate(&projector, field, s, sp, worst.component)
            } else {
                let prev = ticks.last().map_or(0.0, |t: &Tick| t.ratio(worst.component));
                Ok(worst.sign * (worst.ratio - prev) / cfg.cadence)
            };
            match rate {
                Ok(rate) => {
                    exit = Some(ExitEvent {
                        s_exit: s,
                        mode: ExitMode::Via(worst.component),
                        sign: worst.sign,
                        crossing_rate: rate,
                    })
                }
                Err(e) => {
                    failure = Some(e);
                    return ControlFlow::Break(());
                }
            }
        }
        ticks.push(tick);
        if opts.keep_snapshots {
            snapshots.push(field.clone());
        }
        if exit.is_some() && opts.stop_on_exit {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }

    let status = match (&evolution.status, exit) {
        (EvolveStatus::Diverged { s, reason }, _) => RunStatus::Diverged {
            s: *s,
            reason: reason.clone(),
        },
        (_, Some(_)) => RunStatus::Exited,
        (_, None) => RunStatus::Trapped,
    };
    let exit = match (exit, &status) {
        (Some(e), _) => e,
        (None, RunStatus::Diverged { s, .. }) => {
            let last = ticks.last().expect("observer runs at the first tick");
            ExitEvent {
                s_exit: *s,
                mode: ExitMode::Via(last.worst),
                sign: last.signs[component_index(last.worst)],
                crossing_rate: f64::NAN,
            }
        }
        (None, _) => ExitEvent {
            s_exit: s_max,
            mode: ExitMode::None,
            sign: 1.0,
            crossing_rate: 0.0,
        },
    };
    Ok(TrajectoryRecord {
        params,
        shrinking: *sp,
        solver: *cfg,
        s_start,
        s_max,
        ticks,
        snapshots,
        exit,
        status,
    })
}

/// Runs the trajectory of `p` from `s0` to at most `s_max`.
pub fn run_trajectory(
    p: &ShootParams,
    sp: &ShrinkingParams,
    cfg: &SolverConfig,
    s_max: f64,
    opts: RunOptions,
) -> Result<TrajectoryRecord> {
    let grid = cfg.grid_for(sp.k0, sp.s0, s_max)?;
    let initial = initial_data(p, sp, &grid)?;
    trace(*p, initial, sp.s0, s_max, sp, cfg, opts)
}

/// Expanding coordinates at `s_*`, or at `s_max` for trapped runs.
pub fn exit_map(p: &ShootParams, sp: &ShrinkingParams, cfg: &SolverConfig, s_max: f64) -> Result<[f64; 4]> {
    Ok(run_trajectory(p, sp, cfg, s_max, RunOptions::default())?.exit_coordinates())
}

/// Expanding coordinates of the initial data itself.
pub fn initial_coordinates(p: &ShootParams, sp: &ShrinkingParams, grid: &YGrid) -> Result<[f64; 4]> {
    let field = initial_data(p, sp, grid)?;
    let projector = Projector::new(grid.clone())?;
    let fm = check_field(&projector, &field, sp.s0, sp)?;
    let tick = Tick {
        s: sp.s0,
        q_modes: fm.real.modes,
        qt_modes: fm.imag.modes,
        usage: [0.0; 10],
        signs: [1.0; 10],
        member: fm.report.member,
        worst: fm.report.worst.component,
        global: (0.0, 0.0),
    };
    Ok(expanding_coordinates(&tick, sp))
}

/// Residuals of the reduced mode equations, each scaled by its bound:
/// `s^2 |q_m' - (1 - m/2) q_m|`, `s^(3-eta)/At^2 |qt_m' - (1 - m/2) qt_m|`
/// for `m = 0, 1`, and `s^(alpha+1)/At |qt_2' + 2 qt_2 / s|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedResidual {
    pub s: f64,
    pub q0: f64,
    pub q1: f64,
    pub qt0: f64,
    pub qt1: f64,
    pub qt2: f64,
}

/// Central differences on interior ticks; needs at least three ticks.
pub fn reduced_ode_residuals(record: &TrajectoryRecord) -> Result<Vec<ReducedResidual>> {
    let t = &record.ticks;
    if t.len() < 3 {
        return Err(Error::UnusableRecord(format!("{} ticks, need at least 3", t.len())));
    }
    let sp = &record.shrinking;
    Ok((1..t.len() - 1)
        .map(|i| {
            let s = t[i].s;
            let dt = t[i + 1].s - t[i - 1].s;
            let d = |f: &dyn Fn(&Tick) -> f64| (f(&t[i + 1]) - f(&t[i - 1])) / dt;
            let q = |m: usize, rate: f64| (d(&|x: &Tick| x.q_modes[m]) - rate * t[i].q_modes[m]).abs();
            let qt = |m: usize, rate: f64| (d(&|x: &Tick| x.qt_modes[m]) - rate * t[i].qt_modes[m]).abs();
            let imag_scale = s.powf(3.0 - sp.eta) / (sp.at * sp.at);
            ReducedResidual {
                s,
                q0: s * s * q(0, 1.0),
                q1: s * s * q(1, 0.5),
                qt0: imag_scale * qt(0, 1.0),
                qt1: imag_scale * qt(1, 0.5),
                qt2: s.powf(sp.alpha + 1.0) / sp.at * qt(2, -2.0 / s),
            }
        })
        .collect())
}

/// Parameter directions explored by [`search`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subspace {
    /// `d0` only: enough when `Bt = 0` (real and even data stay so).
    EvenReal,
    /// `d0, dt0`: even data stay even.
    Even,
    Full,
}

impl Subspace {
    fn active(self) -> &'static [usize] {
        match self {
            Subspace::EvenReal => &[0],
            Subspace::Even => &[0, 2],
            Subspace::Full => &[0, 1, 2, 3],
        }
    }

    pub fn for_params(sp: &ShrinkingParams) -> Self {
        if sp.bt == 0.0 {
            Subspace::EvenReal
        } else {
            Subspace::Even
        }
    }
}

/// Parameter coordinate steering the given expanding mode.
fn coordinate_of(c: Component) -> Option<usize> {
    match c {
        Component::Q0 => Some(0),
        Component::Q1 => Some(1),
        Component::Qt0 => Some(2),
        Component::Qt1 => Some(3),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    /// Maximum number of trajectory evaluations.
    pub budget: usize,
    /// Parallel evaluations per generation; 1 gives plain bisection.
    pub workers: usize,
    /// Explicit subspace; chosen from `Bt` when absent.
    pub subspace: Option<Subspace>,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            budget: 400,
            workers: 1,
            subspace: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchLogEntry {
    pub eval_id: usize,
    pub params: ShootParams,
    pub s_exit: f64,
    pub mode: ExitMode,
    pub sign: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchStatus {
    Trapped,
    /// Budget spent (or no steerable exit left) before reaching the horizon.
    Budget,
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub best: ShootParams,
    pub record: TrajectoryRecord,
    pub log: Vec<SearchLogEntry>,
    pub status: SearchStatus,
    pub subspace: Subspace,
}

struct Evaluator<'a> {
    sp: &'a ShrinkingParams,
    cfg: &'a SolverConfig,
    s_max: f64,
    pool: Option<rayon::ThreadPool>,
    log: Vec<SearchLogEntry>,
    best: Option<TrajectoryRecord>,
}

impl Evaluator<'_> {
    fn run(&mut self, points: &[[f64; 4]]) -> Result<Vec<TrajectoryRecord>> {
        let job = |d: &[f64; 4]| -> Result<TrajectoryRecord> {
            let p = ShootParams::from_array(*d)?;
            run_trajectory(&p, self.sp, self.cfg, self.s_max, RunOptions::default())
        };
        let results: Vec<Result<TrajectoryRecord>> = match &self.pool {
            Some(pool) if points.len() > 1 => pool.install(|| points.par_iter().map(job).collect()),
            _ => points.iter().map(job).collect(),
        };
        let mut out = Vec::with_capacity(results.len());
        for r in results {
            let rec = r?;
            self.log.push(SearchLogEntry {
                eval_id: self.log.len(),
                params: rec.params,
                s_exit: rec.exit.s_exit,
                mode: rec.exit.mode,
                sign: rec.exit.sign,
            });
            let better = match &self.best {
                None => true,
                Some(b) => rec.exit.s_exit > b.exit.s_exit || (rec.is_trapped() && !b.is_trapped()),
            };
            if better {
                self.best = Some(rec.clone());
            }
            out.push(rec);
        }
        Ok(out)
    }
}

/// Smallest bracket width treated as resolved.
fn collapsed(lo: f64, hi: f64) -> bool {
    hi - lo <= 4.0 * f64::EPSILON * lo.abs().max(hi.abs()).max(1e-3)
}

/// Signed coordinate-wise bisection for a trajectory trapped up to `s_max`.
///
/// Each evaluation exits through one expanding mode `m` with sign `w`; the
/// bracket of the parameter steering `m` is then cut on the `w` side. When
/// a bracket collapses without trapping (the other coordinates moved the
/// crossing point), it is regrown around the current value and its far end
/// checked before bisection resumes.
pub fn search(sp: &ShrinkingParams, cfg: &SolverConfig, s_max: f64, opts: &SearchOptions) -> Result<SearchOutcome> {
    sp.validate()?;
    if opts.budget == 0 {
        return Err(Error::invalid("budget", "must be at least 1"));
    }
    let workers = opts.workers.max(1);
    let pool = if workers > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| Error::invalid("workers", e.to_string()))?,
        )
    } else {
        None
    };
    let mut subspace = opts.subspace.unwrap_or_else(|| Subspace::for_params(sp));
    let mut ev = Evaluator {
        sp,
        cfg,
        s_max,
        pool,
        log: Vec::new(),
        best: None,
    };
    let mut lo = [-PARAM_BOUND; 4];
    let mut hi = [PARAM_BOUND; 4];
    let mut regrow = [0.0f64; 4];
    let mut center = [0.0; 4];
    let mut current = ev.run(&[center])?.remove(0);

    while !current.is_trapped() && ev.log.len() < opts.budget {
        let Some(mode) = current.exit.mode.component() else {
            break;
        };
        let Some(k) = coordinate_of(mode) else {
            break;
        };
        if !subspace.active().contains(&k) {
            subspace = Subspace::Full;
        }
        let up = current.exit.sign > 0.0;
        if up {
            hi[k] = center[k];
        } else {
            lo[k] = center[k];
        }
        if collapsed(lo[k], hi[k]) {
            // Regrow on the side the exit points to and verify the far end.
            regrow[k] = if regrow[k] == 0.0 { 1e-12 } else { regrow[k] * 16.0 };
            let far = if up {
                (center[k] - regrow[k]).max(-PARAM_BOUND)
            } else {
                (center[k] + regrow[k]).min(PARAM_BOUND)
            };
            let mut probe = center;
            probe[k] = far;
            let rec = ev.run(&[probe])?.remove(0);
            let flipped = rec.exit.mode == ExitMode::Via(mode) && (rec.exit.sign > 0.0) != up;
            if flipped || rec.exit.mode.component() != Some(mode) {
                if up {
                    lo[k] = far;
                } else {
                    hi[k] = far;
                }
            } else if up {
                hi[k] = far;
                lo[k] = -PARAM_BOUND;
            } else {
                lo[k] = far;
                hi[k] = PARAM_BOUND;
            }
            if !flipped {
                center = probe;
                current = rec;
                continue;
            }
        } else {
            regrow[k] = 0.0;
        }

        let n = workers.min(opts.budget - ev.log.len()).max(1);
        let points: Vec<[f64; 4]> = (1..=n)
            .map(|j| {
                let mut p = center;
                p[k] = lo[k] + (hi[k] - lo[k]) * j as f64 / (n + 1) as f64;
                p
            })
            .collect();
        let recs = ev.run(&points)?;
        let mut next: Option<usize> = None;
        for (j, rec) in recs.iter().enumerate() {
            let x = points[j][k];
            if rec.exit.mode == ExitMode::Via(mode) {
                if rec.exit.sign > 0.0 {
                    hi[k] = hi[k].min(x);
                } else {
                    lo[k] = lo[k].max(x);
                }
            }
            if next.is_none_or(|b| rec.exit.s_exit > recs[b].exit.s_exit) {
                next = Some(j);
            }
        }
        let j = next.expect("at least one point");
        center = points[j];
        current = recs[j].clone();
        // Keep the bracket consistent with the exit already known there.
        if current.exit.mode == ExitMode::Via(mode) {
            if current.exit.sign > 0.0 {
                hi[k] = hi[k].max(center[k]);
            } else {
                lo[k] = lo[k].min(center[k]);
            }
        }
    }

    let best = ev.best.take().expect("at least one evaluation");
    let status = if best.is_trapped() {
        SearchStatus::Trapped
    } else {
        SearchStatus::Budget
    };
    Ok(SearchOutcome {
        best: best.params,
        record: best,
        log: ev.log,
        status,
        subspace,
    })
}

/// Exits of `draws` trajectories with parameters uniform in the box,
/// in draw order. Deterministic for a given seed.
pub fn random_exits(
    sp: &ShrinkingParams,
    cfg: &SolverConfig,
    s_max: f64,
    draws: usize,
    seed: u64,
    workers: usize,
) -> Result<Vec<TrajectoryRecord>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<ShootParams> = (0..draws)
        .map(|_| {
            let mut v = [0.0; 4];
            for x in &mut v {
                *x = rng.gen_range(-PARAM_BOUND..=PARAM_BOUND);
            }
            ShootParams::from_array(v)
        })
        .collect::<Result<_>>()?;
    let job = |p: &ShootParams| run_trajectory(p, sp, cfg, s_max, RunOptions::default());
    let results: Vec<Result<TrajectoryRecord>> = if workers > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::invalid("workers", e.to_string()))?;
        pool.install(|| points.par_iter().map(job).collect())
    } else {
        points.iter().map(job).collect()
    };
    results.into_iter().collect()
}
