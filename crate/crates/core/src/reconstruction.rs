//! Back to physical variables, and the checks on the limiting profiles.
//!
//! The blow-up time is `T = e^-s0`; every query is expressed through
//! `tau = T - t` to avoid cancellation, with `s = -log tau`,
//! `y = x / sqrt(tau)` and `u(x, t) = W(y, s) / tau`, `W = phi + q + i qt`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::hermite::hermite;
use crate::profile::{f_profile, phi};
use crate::shooting::TrajectoryRecord;
use crate::stats::{boundedness, lagrange, slope, Boundedness, UniformCubic};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalSample {
    pub x: f64,
    pub t: f64,
    /// `T - t`, kept separately since `t` rounds to `T` late in the run.
    pub tau: f64,
    pub v: f64,
    pub vt: f64,
}

/// Interpolating view of a record with stored snapshots.
pub struct Reconstruction<'a> {
    record: &'a TrajectoryRecord,
    times: Vec<f64>,
}

impl<'a> Reconstruction<'a> {
    pub fn new(record: &'a TrajectoryRecord) -> Result<Self> {
        if record.snapshots.len() != record.ticks.len() || record.snapshots.is_empty() {
            return Err(Error::UnusableRecord(
                "record carries no snapshots for every tick".into(),
            ));
        }
        Ok(Self {
            record,
            times: record.ticks.iter().map(|t| t.s).collect(),
        })
    }

    pub fn blowup_time(&self) -> f64 {
        (-self.record.s_start).exp()
    }

    pub fn s_range(&self) -> (f64, f64) {
        (self.times[0], self.times[self.times.len() - 1])
    }

    /// `(q, qt)` at one snapshot, cubic in `y`; constant beyond the grid.
    fn at_tick(&self, i: usize, y: f64) -> Result<(f64, f64)> {
        let f = &self.record.snapshots[i];
        let ys = f.grid.ys();
        let q = UniformCubic::new(ys, &f.q)?.eval(y);
        let qt = UniformCubic::new(ys, &f.qt)?.eval(y);
        Ok((q, qt))
    }

    /// `q + i qt` at `(y, s)`, cubic in `s` across the four nearest ticks.
    pub fn perturbation(&self, y: f64, s: f64) -> Result<Complex64> {
        let (lo, hi) = self.s_range();
        let tol = 1e-9 * hi.abs();
        if s < lo - tol || s > hi + tol {
            return Err(Error::OutsideWindow(format!("s = {s} not in [{lo}, {hi}]")));
        }
        let n = self.times.len();
        let k = self.times.partition_point(|&t| t <= s);
        if k > 0 && (self.times[k - 1] - s).abs() <= 1e-12 * s.abs().max(1.0) {
            let (q, qt) = self.at_tick(k - 1, y)?;
            return Ok(Complex64::new(q, qt));
        }
        if n < 4 {
            let i = k.min(n - 1);
            let (q, qt) = self.at_tick(i, y)?;
            return Ok(Complex64::new(q, qt));
        }
        let start = k.saturating_sub(2).min(n - 4);
        let xs = &self.times[start..start + 4];
        let mut qs = [0.0; 4];
        let mut qts = [0.0; 4];
        for j in 0..4 {
            (qs[j], qts[j]) = self.at_tick(start + j, y)?;
        }
        Ok(Complex64::new(lagrange(xs, &qs, s), lagrange(xs, &qts, s)))
    }

    /// `W(y, s) = phi + q + i qt`.
    pub fn w(&self, y: f64, s: f64) -> Result<Complex64> {
        Ok(self.perturbation(y, s)? + phi(y, s))
    }

    /// `u(x, t)` with `tau = T - t`.
    pub fn u(&self, x: f64, tau: f64) -> Result<Complex64> {
        if !(tau > 0.0) {
            return Err(Error::OutsideWindow(format!("tau = {tau} must be positive")));
        }
        let s = -tau.ln();
        Ok(self.w(x / tau.sqrt(), s)? / tau)
    }
}

/// Physical samples at the requested `(x, tau)` pairs.
pub fn to_physical(record: &TrajectoryRecord, points: &[(f64, f64)]) -> Result<Vec<PhysicalSample>> {
    let rec = Reconstruction::new(record)?;
    let big_t = rec.blowup_time();
    points
        .par_iter()
        .map(|&(x, tau)| {
            let u = rec.u(x, tau)?;
            Ok(PhysicalSample {
                x,
                t: big_t - tau,
                tau,
                v: u.re,
                vt: u.im,
            })
        })
        .collect()
}

/// `sqrt(s) sup_y |W(y, s) - f(y / sqrt(s))|` per tick.
pub fn profile_error(record: &TrajectoryRecord) -> Result<Vec<(f64, f64)>> {
    Reconstruction::new(record)?;
    Ok(record
        .ticks
        .iter()
        .zip(&record.snapshots)
        .map(|(t, f)| {
            let s = t.s;
            let sup = f
                .grid
                .ys()
                .iter()
                .enumerate()
                .map(|(i, &y)| {
                    let w = Complex64::new(phi(y, s) + f.q[i], f.qt[i]);
                    (w - f_profile(y / s.sqrt())).norm()
                })
                .fold(0.0, f64::max);
            (s, sup * s.sqrt())
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullModeLimit {
    /// Average of `s^2 qt2(s)` over the last third of the run.
    pub l: f64,
    /// Largest deviation from `l` over the same window.
    pub fit_residual: f64,
}

impl NullModeLimit {
    pub fn relative_fluctuation(&self) -> f64 {
        self.fit_residual / self.l.abs()
    }
}

/// Series `s^2 qt2(s)` of a record.
pub fn null_mode_series(record: &TrajectoryRecord) -> Vec<(f64, f64)> {
    record.ticks.iter().map(|t| (t.s, t.s * t.s * t.qt_modes[2])).collect()
}

/// Estimates the limit of `s^2 qt2(s)` on a trapped record.
pub fn null_mode_limit(record: &TrajectoryRecord) -> Result<NullModeLimit> {
    if !record.is_trapped() {
        return Err(Error::UnusableRecord("record is not trapped to its horizon".into()));
    }
    let series = null_mode_series(record);
    let n = series.len();
    let tail = &series[n - (n / 3).max(1)..];
    let l = tail.iter().map(|p| p.1).sum::<f64>() / tail.len() as f64;
    let fit_residual = tail.iter().map(|p| (p.1 - l).abs()).fold(0.0, f64::max);
    Ok(NullModeLimit { l, fit_residual })
}

/// `s^alpha sup_{|y| <= radius} |qt(y, s) - (l / s^2) h2(y)|` per tick.
pub fn imaginary_profile_check(record: &TrajectoryRecord, radius: f64, l: f64) -> Result<Vec<(f64, f64)>> {
    Reconstruction::new(record)?;
    let alpha = record.shrinking.alpha;
    record
        .ticks
        .iter()
        .zip(&record.snapshots)
        .map(|(t, f)| {
            if radius > f.grid.ymax() {
                return Err(Error::GridTooNarrow {
                    ymax: f.grid.ymax(),
                    required: radius,
                });
            }
            let s = t.s;
            let mut sup = 0.0f64;
            for (i, &y) in f.grid.ys().iter().enumerate() {
                if y.abs() <= radius {
                    sup = sup.max((f.qt[i] - l / (s * s) * hermite(2, y)?).abs());
                }
            }
            Ok((s, sup * s.powf(alpha)))
        })
        .collect()
}

/// Matching time and final-profile estimate at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FinalProfilePoint {
    pub x0: f64,
    /// `T - t0(x0)`, or NaN when the matching time lies outside the run.
    pub tau0: f64,
    /// `|log(T - t0)|`.
    pub log_time: f64,
    /// `(8 / K0^2) / tau0`.
    pub u_star: f64,
    /// `16 |log |x0|| / x0^2`.
    pub reference: f64,
    pub ratio: f64,
    /// ODE continuation of the computed `W(K0 sqrt(L), L)`, times `tau0`.
    pub trajectory_scaled: Complex64,
    pub in_window: bool,
}

/// Solves `|x0| = K0 sqrt(tau0 |log tau0|)` for `L = -log tau0` inside the
/// run and evaluates the matched final profile.
pub fn final_profile(record: &TrajectoryRecord, x_list: &[f64], k0: f64) -> Result<Vec<FinalProfilePoint>> {
    let rec = Reconstruction::new(record)?;
    let (s_lo, s_hi) = rec.s_range();
    x_list
        .iter()
        .map(|&x0| {
            let x = x0.abs();
            if !(x > 0.0) || !x.is_finite() {
                return Err(Error::invalid("x0", format!("{x0} must be nonzero")));
            }
            let reference = 16.0 * x.ln().abs() / (x * x);
            // Increasing in L for L > 1.
            let gap = |l: f64| 2.0 * x.ln() - 2.0 * k0.ln() + l - l.ln();
            let miss = FinalProfilePoint {
                x0,
                tau0: f64::NAN,
                log_time: f64::NAN,
                u_star: f64::NAN,
                reference,
                ratio: f64::NAN,
                trajectory_scaled: Complex64::new(f64::NAN, f64::NAN),
                in_window: false,
            };
            if gap(s_lo) > 0.0 || gap(s_hi) < 0.0 {
                return Ok(miss);
            }
            let (mut a, mut b) = (s_lo, s_hi);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if gap(mid) > 0.0 {
                    b = mid;
                } else {
                    a = mid;
                }
                if b - a <= 1e-14 * b {
                    break;
                }
            }
            let l = 0.5 * (a + b);
            let tau0 = (-l).exp();
            let u_star = 8.0 / (k0 * k0) / tau0;
            let w0 = rec.w(k0 * l.sqrt(), l)?;
            let one = Complex64::new(1.0, 0.0);
            Ok(FinalProfilePoint {
                x0,
                tau0,
                log_time: l,
                u_star,
                reference,
                ratio: u_star / reference,
                trajectory_scaled: w0 / (one - w0),
                in_window: true,
            })
        })
        .collect()
}

/// Leading ratio of each `K0` in `k0s` at the same points.
pub fn final_profile_sweep(
    record: &TrajectoryRecord,
    x_list: &[f64],
    k0s: &[f64],
) -> Result<Vec<Vec<FinalProfilePoint>>> {
    k0s.iter().map(|&k| final_profile(record, x_list, k)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// `(T - t)|u(0, t)|` tends to 1.
    BlowUpPoint,
    /// The scaled size dropped below the threshold and stayed there.
    Regular,
    Undecided,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::BlowUpPoint => "blow-up point",
            Verdict::Regular => "regular",
            Verdict::Undecided => "undecided",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointCheck {
    pub x0: f64,
    /// `(s, sup_{|x - x0| <= |x0|/2} (T - t)|u(x, t)|)` per tick.
    pub series: Vec<(f64, f64)>,
    /// `f(|x0| / 2 / sqrt(tau L)) + C / sqrt(L)` per tick.
    pub bound: Vec<f64>,
    /// First `s` from which the series stays below the threshold.
    pub below_from: Option<f64>,
    pub verdict: Verdict,
}

/// Distance of `(T - t)|u(0, t)|` from 1 accepted as blow-up at the origin.
pub const BLOWUP_TOLERANCE: f64 = 0.1;

/// Scaled size of the solution around each `x0`, compared with `eta0`.
/// `c_profile` is the constant used in the comparison bound.
pub fn single_point_check(
    record: &TrajectoryRecord,
    x_list: &[f64],
    eta0: f64,
    c_profile: f64,
) -> Result<Vec<PointCheck>> {
    if !(eta0 > 0.0) {
        return Err(Error::invalid("eta0", "must be positive"));
    }
    Reconstruction::new(record)?;
    x_list
        .par_iter()
        .map(|&x0| {
            let x = x0.abs();
            let mut series = Vec::with_capacity(record.ticks.len());
            let mut bound = Vec::with_capacity(record.ticks.len());
            for (t, f) in record.ticks.iter().zip(&record.snapshots) {
                let s = t.s;
                let tau = (-s).exp();
                let ys = f.grid.ys();
                let size_at = |i: usize| Complex64::new(phi(ys[i], s) + f.q[i], f.qt[i]).norm();
                let value = if x == 0.0 {
                    size_at(f.grid.center())
                } else {
                    let lo = 0.5 * x / tau.sqrt();
                    let hi = 1.5 * x / tau.sqrt();
                    let edge = f.grid.len() - 1;
                    let mut m = 0.0f64;
                    let mut any = false;
                    for (i, &y) in ys.iter().enumerate() {
                        if y.abs() >= lo && y.abs() <= hi {
                            m = m.max(size_at(i));
                            any = true;
                        }
                    }
                    if !any {
                        // Beyond the grid the state is flat at the edge value.
                        let at = if lo > ys[edge] {
                            edge
                        } else {
                            ys.partition_point(|&y| y < lo).min(edge)
                        };
                        m = size_at(at);
                    }
                    m
                };
                series.push((s, value));
                bound.push(f_profile(0.5 * x / (tau * s).sqrt()) + c_profile / s.sqrt());
            }
            let mut below_from = None;
            for &(s, v) in series.iter().rev() {
                if v < eta0 {
                    below_from = Some(s);
                } else {
                    break;
                }
            }
            let last = series.last().map_or(f64::NAN, |p| p.1);
            // Away from the origin a size near 1 only counts once the
            // comparison bound has dropped below the threshold.
            let resolved = x == 0.0 || bound.last().is_some_and(|&b| b < eta0);
            let verdict = if (last - 1.0).abs() <= BLOWUP_TOLERANCE {
                if resolved {
                    Verdict::BlowUpPoint
                } else {
                    Verdict::Undecided
                }
            } else if below_from.is_some() {
                Verdict::Regular
            } else {
                Verdict::Undecided
            };
            Ok(PointCheck {
                x0,
                series,
                bound,
                below_from,
                verdict,
            })
        })
        .collect()
}

/// `(s, (T-t)|v(0,t)|, (T-t)|vt(0,t)| |log(T-t)|^2)` per tick.
pub fn dominance_series(record: &TrajectoryRecord) -> Result<Vec<(f64, f64, f64)>> {
    Reconstruction::new(record)?;
    Ok(record
        .ticks
        .iter()
        .zip(&record.snapshots)
        .map(|(t, f)| {
            let c = f.grid.center();
            let s = t.s;
            (s, (phi(0.0, s) + f.q[c]).abs(), f.qt[c].abs() * s * s)
        })
        .collect())
}

/// Least-squares slope of the second half of a series.
pub fn final_half_slope(series: &[(f64, f64)]) -> f64 {
    let half = &series[series.len() / 2..];
    let xs: Vec<f64> = half.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = half.iter().map(|p| p.1).collect();
    slope(&xs, &ys)
}

pub fn series_boundedness(series: &[(f64, f64)]) -> Boundedness {
    boundedness(&series.iter().map(|p| p.1).collect::<Vec<_>>())
}
