//! Property suites run by the command-line tool: the basis and kernel
//! checks, and the verification report of a stored trajectory.

use crate::config::VerifySettings;
use crate::hermite::{hermite, hermite_norm_sq, QuadratureGrid, DEFAULT_NODES};
use crate::kernel::{apply_semigroup, SemigroupOptions};
use crate::reconstruction::{
    final_half_slope, final_profile, final_profile_sweep, imaginary_profile_check, null_mode_limit, null_mode_series,
    profile_error, series_boundedness, single_point_check, FinalProfilePoint, NullModeLimit, PointCheck, Verdict,
};
use crate::shooting::{reduced_ode_residuals, ReducedResidual, TrajectoryRecord};
use crate::stats::{boundedness, Boundedness};
use crate::Result;

/// Largest degree covered by the basis suite.
pub const SUITE_DEGREE: usize = 12;
/// Largest degree covered by the kernel eigen-relation.
pub const KERNEL_DEGREE: usize = 4;

pub const ORTHOGONALITY_TOL: f64 = 1e-10;
pub const KERNEL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyResult {
    pub name: &'static str,
    pub residual: f64,
    pub tolerance: f64,
}

impl PropertyResult {
    pub fn passed(&self) -> bool {
        self.residual <= self.tolerance
    }
}

fn sample_points() -> Vec<f64> {
    (0..=40).map(|i| -5.0 + 0.25 * i as f64).collect()
}

/// Runs the basis and kernel properties in a fixed order. `corrupt_norm`
/// perturbs the tabulated norm of one degree.
pub fn basis_suite(corrupt_norm: Option<usize>) -> Result<Vec<PropertyResult>> {
    let quad = QuadratureGrid::gauss_hermite(DEFAULT_NODES)?;
    let mut norms = (0..=SUITE_DEGREE).map(hermite_norm_sq).collect::<Result<Vec<_>>>()?;
    if let Some(m) = corrupt_norm {
        if let Some(n) = norms.get_mut(m) {
            *n *= 1.0 + 1e-3;
        }
    }
    let modes = (0..=SUITE_DEGREE)
        .map(|m| crate::hermite::hermite_on(m, quad.nodes()))
        .collect::<Result<Vec<_>>>()?;

    let mut ortho = 0.0f64;
    for m in 0..=SUITE_DEGREE {
        for n in 0..=m {
            let g = quad.inner(&modes[m], &modes[n])? / (norms[m] * norms[n]).sqrt();
            let target = if m == n { 1.0 } else { 0.0 };
            ortho = ortho.max((g - target).abs());
        }
    }

    let ys = sample_points();
    let mut parity = 0.0f64;
    let mut recurrence = 0.0f64;
    let mut eigen = 0.0f64;
    for &y in &ys {
        for m in 0..=SUITE_DEGREE {
            let h = hermite(m, y)?;
            let scale = 1.0 + h.abs();
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            parity = parity.max((hermite(m, -y)? - sign * h).abs() / scale);
            if (1..SUITE_DEGREE).contains(&m) {
                let next = y * h - 2.0 * m as f64 * hermite(m - 1, y)?;
                recurrence = recurrence.max((hermite(m + 1, y)? - next).abs() / (1.0 + next.abs()));
            }
            // h_m' = m h_{m-1}, h_m'' = m (m-1) h_{m-2}
            let d1 = if m >= 1 { m as f64 * hermite(m - 1, y)? } else { 0.0 };
            let d2 = if m >= 2 {
                (m * (m - 1)) as f64 * hermite(m - 2, y)?
            } else {
                0.0
            };
            let lh = d2 - 0.5 * y * d1 + h;
            eigen = eigen.max((lh - (1.0 - m as f64 / 2.0) * h).abs() / scale);
        }
    }

    let opts = SemigroupOptions::default();
    let mut kernel_eigen = 0.0f64;
    for &psi in &[0.1, 0.5, 1.0] {
        for m in 0..=KERNEL_DEGREE {
            let out = apply_semigroup(psi, |x| hermite(m, x).unwrap_or(f64::NAN), &ys, &opts)?;
            let gain = ((1.0 - m as f64 / 2.0) * psi).exp();
            let exact: Vec<f64> = ys.iter().map(|&y| gain * hermite(m, y).unwrap_or(f64::NAN)).collect();
            let scale = exact.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            for (a, b) in out.values.iter().zip(&exact) {
                kernel_eigen = kernel_eigen.max((a - b).abs() / scale);
            }
        }
    }

    let g = |x: f64| (-x * x / 8.0).exp() + 0.3 * (0.7 * x).cos();
    let (p1, p2) = (0.3, 0.4);
    let once = apply_semigroup(p1 + p2, g, &ys, &opts)?;
    let inner = |x: f64| {
        apply_semigroup(p2, g, &[x], &opts)
            .map(|o| o.values[0])
            .unwrap_or(f64::NAN)
    };
    let twice = apply_semigroup(p1, inner, &ys, &opts)?;
    let scale = once.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let composition = once
        .values
        .iter()
        .zip(&twice.values)
        .fold(0.0f64, |a, (x, y)| a.max((x - y).abs() / scale));

    Ok(vec![
        PropertyResult {
            name: "orthogonality",
            residual: ortho,
            tolerance: ORTHOGONALITY_TOL,
        },
        PropertyResult {
            name: "parity",
            residual: parity,
            tolerance: 1e-12,
        },
        PropertyResult {
            name: "recurrence",
            residual: recurrence,
            tolerance: 1e-12,
        },
        PropertyResult {
            name: "eigen_relation",
            residual: eigen,
            tolerance: 1e-12,
        },
        PropertyResult {
            name: "kernel_eigen_relation",
            residual: kernel_eigen,
            tolerance: KERNEL_TOL,
        },
        PropertyResult {
            name: "kernel_composition",
            residual: composition,
            tolerance: KERNEL_TOL,
        },
    ])
}

/// One line of the verification summary.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Ratios of the final profile at the smallest matching points.
pub const FINAL_PROFILE_BAND: (f64, f64) = (0.7, 1.3);
/// Points used for the final-profile band and monotonicity.
pub const FINAL_PROFILE_POINTS: usize = 3;
/// Largest relative spread of the leading ratio across the `K0` sweep.
pub const K0_SPREAD_TOL: f64 = 0.1;
/// Tail fluctuation of `s^2 qt2` allowed relative to `|l|`.
pub const NULL_MODE_FLUCTUATION: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub s_range: (f64, f64),
    pub trapped: bool,
    pub single_point: Vec<PointCheck>,
    /// Origin verdict for each threshold of the sweep.
    pub eta0_sweep: Vec<(f64, Verdict, usize)>,
    pub profile: Vec<(f64, f64)>,
    pub profile_bound: Option<Boundedness>,
    pub profile_slope: f64,
    pub null_series: Vec<(f64, f64)>,
    pub null_mode: Option<NullModeLimit>,
    pub imaginary: Vec<(f64, f64)>,
    pub imaginary_bound: Option<Boundedness>,
    pub final_points: Vec<FinalProfilePoint>,
    pub k0_sweep: Vec<(f64, Vec<FinalProfilePoint>)>,
    pub reduced: Vec<ReducedResidual>,
    pub reduced_bound: Option<[Boundedness; 5]>,
    pub checks: Vec<CheckOutcome>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Smallest `count` in-window points, smallest `x0` first.
pub fn smallest_resolved(points: &[FinalProfilePoint], count: usize) -> Vec<FinalProfilePoint> {
    let mut v: Vec<FinalProfilePoint> = points.iter().filter(|p| p.in_window).copied().collect();
    v.sort_by(|a, b| a.x0.abs().total_cmp(&b.x0.abs()));
    v.truncate(count);
    v
}

fn outcome(name: &'static str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome { name, passed, detail }
}

/// Runs every reconstruction check on a record with snapshots.
pub fn verify_record(record: &TrajectoryRecord, settings: &VerifySettings) -> Result<VerifyReport> {
    let sp = record.shrinking;
    let trapped = record.is_trapped();
    let mut checks = Vec::new();
    let s_range = (record.s_start, record.s_end());

    // Blow-up only at the origin.
    let single_point = single_point_check(record, &settings.points, settings.eta0, 1.0)?;
    let mut eta0_sweep = Vec::new();
    let mut stray = false;
    for &eta in &settings.eta0_sweep {
        let c = single_point_check(record, &settings.points, eta, 1.0)?;
        let regular = c.iter().filter(|p| p.verdict == Verdict::Regular).count();
        let origin = c.iter().find(|p| p.x0 == 0.0).map_or(Verdict::Undecided, |p| p.verdict);
        stray |= c.iter().any(|p| p.x0 != 0.0 && p.verdict == Verdict::BlowUpPoint);
        eta0_sweep.push((eta, origin, regular));
    }
    let origin = single_point.iter().find(|p| p.x0 == 0.0);
    let origin_ok = origin.is_some_and(|p| p.verdict == Verdict::BlowUpPoint);
    // Points too close to the origin may stay undecided on a short run.
    let others_ok = single_point
        .iter()
        .filter(|p| p.x0 != 0.0)
        .all(|p| p.verdict != Verdict::BlowUpPoint)
        && single_point
            .iter()
            .any(|p| p.x0 != 0.0 && p.verdict == Verdict::Regular);
    checks.push(outcome(
        "single_point",
        origin_ok && others_ok && !stray,
        format!(
            "origin {}; {} of {} other points regular",
            origin.map_or(Verdict::Undecided, |p| p.verdict),
            single_point
                .iter()
                .filter(|p| p.x0 != 0.0 && p.verdict == Verdict::Regular)
                .count(),
            single_point.iter().filter(|p| p.x0 != 0.0).count()
        ),
    ));

    // Distance to the leading profile.
    let profile = profile_error(record)?;
    let profile_bound = (profile.len() >= 3).then(|| series_boundedness(&profile));
    let profile_slope = if profile.len() >= 4 {
        final_half_slope(&profile)
    } else {
        f64::NAN
    };
    let profile_ok = trapped && profile_bound.is_some_and(|b| b.bounded) && profile_slope <= 0.0;
    checks.push(outcome(
        "profile",
        profile_ok,
        format!(
            "trapped {trapped}; C = {:.6e}; final-half slope {:.6e}",
            profile_bound.map_or(f64::NAN, |b| b.constant),
            profile_slope
        ),
    ));

    // Null mode.
    let null_series = null_mode_series(record);
    let null_mode = null_mode_limit(record).ok();
    let null_ok = null_mode.is_some_and(|n| {
        n.l != 0.0 && n.relative_fluctuation() <= NULL_MODE_FLUCTUATION && (n.l - sp.bt).abs() <= sp.bt.abs() / 2.0
    });
    checks.push(outcome(
        "null_mode",
        null_ok,
        match null_mode {
            Some(n) => format!(
                "l = {:.6e}; tail fluctuation {:.3e}; Bt = {:e}",
                n.l,
                n.relative_fluctuation(),
                sp.bt
            ),
            None => "no limit: record not trapped".into(),
        },
    ));

    // Imaginary profile near the origin.
    let (imaginary, imaginary_bound) = match null_mode {
        Some(n) => {
            let series = imaginary_profile_check(record, settings.radius, n.l)?;
            let b = (series.len() >= 3).then(|| series_boundedness(&series));
            (series, b)
        }
        None => (Vec::new(), None),
    };
    checks.push(outcome(
        "imaginary_profile",
        trapped && imaginary_bound.is_some_and(|b| b.bounded),
        format!(
            "radius {}; C = {:.6e}",
            settings.radius,
            imaginary_bound.map_or(f64::NAN, |b| b.constant)
        ),
    ));

    // Final profile.
    let x_list = settings.matching_points();
    let final_points = final_profile(record, &x_list, sp.k0)?;
    let small = smallest_resolved(&final_points, FINAL_PROFILE_POINTS);
    let (lo, hi) = FINAL_PROFILE_BAND;
    let in_band = small.len() == FINAL_PROFILE_POINTS && small.iter().all(|p| p.ratio >= lo && p.ratio <= hi);
    // Distance to 1 shrinks as x0 decreases.
    let monotone = small
        .windows(2)
        .all(|w| (w[0].ratio - 1.0).abs() <= (w[1].ratio - 1.0).abs());
    let sweep = final_profile_sweep(record, &x_list, &settings.k0_sweep)?;
    let k0_sweep: Vec<(f64, Vec<FinalProfilePoint>)> = settings.k0_sweep.iter().copied().zip(sweep).collect();
    let leading: Vec<f64> = k0_sweep
        .iter()
        .filter_map(|(_, pts)| smallest_resolved(pts, 1).first().map(|p| p.ratio))
        .collect();
    let spread = if leading.len() == k0_sweep.len() && !leading.is_empty() {
        let max = leading.iter().copied().fold(f64::MIN, f64::max);
        let min = leading.iter().copied().fold(f64::MAX, f64::min);
        max / min - 1.0
    } else {
        f64::INFINITY
    };
    checks.push(outcome(
        "final_profile",
        trapped && in_band && monotone && spread <= K0_SPREAD_TOL,
        format!(
            "ratios {:?}; monotone {monotone}; K0 spread {:.3e}",
            small.iter().map(|p| (p.x0, p.ratio)).collect::<Vec<_>>(),
            spread
        ),
    ));

    // Reduced ODEs of the low modes.
    // Too short a record simply has no residuals.
    let reduced = reduced_ode_residuals(record).unwrap_or_default();
    let reduced_bound = (reduced.len() >= 3).then(|| {
        let col = |f: fn(&ReducedResidual) -> f64| boundedness(&reduced.iter().map(f).collect::<Vec<_>>());
        [
            col(|r| r.q0),
            col(|r| r.q1),
            col(|r| r.qt0),
            col(|r| r.qt1),
            col(|r| r.qt2),
        ]
    });
    let reduced_ok = trapped && reduced_bound.is_some_and(|b| b.iter().all(|x| x.bounded));
    checks.push(outcome(
        "reduced_dynamics",
        reduced_ok,
        format!(
            "constants {:?}",
            reduced_bound.map(|b| b.map(|x| x.constant)).unwrap_or([f64::NAN; 5])
        ),
    ));

    Ok(VerifyReport {
        s_range,
        trapped,
        single_point,
        eta0_sweep,
        profile,
        profile_bound,
        profile_slope,
        null_series,
        null_mode,
        imaginary,
        imaginary_bound,
        final_points,
        k0_sweep,
        reduced,
        reduced_bound,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes() {
        let r = basis_suite(None).unwrap();
        for p in &r {
            assert!(p.passed(), "{} residual {}", p.name, p.residual);
        }
    }

    #[test]
    fn corrupted_norm_breaks_orthogonality() {
        let r = basis_suite(Some(3)).unwrap();
        let first = r.iter().find(|p| !p.passed()).unwrap();
        assert_eq!(first.name, "orthogonality");
    }
}
