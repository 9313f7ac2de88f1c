//! Five-component splitting of a field and the shrinking-set test.
//!
//! For a component `g` at time `s`:
//! `g = r0 h0 + r1 h1 + r2 h2 + r_minus + r_e`, where `r_e = (1 - chi) g`,
//! `r_m = <chi g, h_m>_rho / |h_m|^2` and `r_minus = chi g - sum r_m h_m`.

use std::fmt;
use std::str::FromStr;

use crate::hermite::{hermite_norm_sq, hermite_on, QuadratureGrid};
use crate::profile::cutoff_chi;
use crate::solver::{Field, YGrid};
use crate::{Error, Result};

/// Constants of the shrinking set and the initial-data family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShrinkingParams {
    pub a: f64,
    pub at: f64,
    pub bt: f64,
    pub eta: f64,
    pub alpha: f64,
    pub k0: f64,
    pub s0: f64,
}

impl Default for ShrinkingParams {
    fn default() -> Self {
        Self {
            a: 20.0,
            at: 20.0,
            bt: 0.5,
            eta: 0.05,
            alpha: 2.025,
            k0: 10.0,
            s0: 20.0,
        }
    }
}

impl ShrinkingParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.a >= 1.0) {
            return Err(Error::invalid("A", format!("{} < 1", self.a)));
        }
        if !(self.at >= 1.0) {
            return Err(Error::invalid("At", format!("{} < 1", self.at)));
        }
        if !(self.bt.abs() <= 1.0) {
            return Err(Error::invalid("Bt", format!("|{}| > 1", self.bt)));
        }
        if !(self.eta > 0.0 && self.eta < 0.1) {
            return Err(Error::invalid("eta", format!("{} not in (0, 0.1)", self.eta)));
        }
        if !(self.alpha > 2.0 && self.alpha < 2.0 + self.eta) {
            return Err(Error::invalid("alpha", format!("{} not in (2, 2 + eta)", self.alpha)));
        }
        if !(self.k0 >= 1.0) {
            return Err(Error::invalid("K0", format!("{} < 1", self.k0)));
        }
        if !(self.s0 >= std::f64::consts::E) {
            return Err(Error::invalid("s0", format!("{} < e", self.s0)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeDecomposition {
    pub s: f64,
    pub k0: f64,
    pub grid: YGrid,
    /// `r0, r1, r2`.
    pub modes: [f64; 3],
    pub r_minus: Vec<f64>,
    pub r_e: Vec<f64>,
    /// `chi g`, the part carried by the modes and `r_minus`.
    pub inner: Vec<f64>,
}

impl ModeDecomposition {
    pub fn zero(grid: YGrid, s: f64, k0: f64) -> Self {
        let n = grid.len();
        Self {
            s,
            k0,
            grid,
            modes: [0.0; 3],
            r_minus: vec![0.0; n],
            r_e: vec![0.0; n],
            inner: vec![0.0; n],
        }
    }

    /// Componentwise sum; both sides must share grid and time.
    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch {
                expected: self.grid.len(),
                got: other.grid.len(),
            });
        }
        let add = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x + y).collect::<Vec<_>>();
        Ok(Self {
            s: self.s,
            k0: self.k0,
            grid: self.grid.clone(),
            modes: [
                self.modes[0] + other.modes[0],
                self.modes[1] + other.modes[1],
                self.modes[2] + other.modes[2],
            ],
            r_minus: add(&self.r_minus, &other.r_minus),
            r_e: add(&self.r_e, &other.r_e),
            inner: add(&self.inner, &other.inner),
        })
    }
}

/// Caches the mode samples and quadrature weights for one grid.
#[derive(Debug, Clone)]
pub struct Projector {
    grid: YGrid,
    quad: QuadratureGrid,
    basis: [Vec<f64>; 3],
    norms: [f64; 3],
}

impl Projector {
    pub fn new(grid: YGrid) -> Result<Self> {
        let quad = QuadratureGrid::uniform(grid.ys())?;
        let basis = [
            hermite_on(0, grid.ys())?,
            hermite_on(1, grid.ys())?,
            hermite_on(2, grid.ys())?,
        ];
        let norms = [hermite_norm_sq(0)?, hermite_norm_sq(1)?, hermite_norm_sq(2)?];
        Ok(Self {
            grid,
            quad,
            basis,
            norms,
        })
    }

    pub fn grid(&self) -> &YGrid {
        &self.grid
    }

    /// `<g, h_m>_rho / |h_m|^2` for `m <= 2`.
    pub fn coefficient(&self, g: &[f64], m: usize) -> Result<f64> {
        if m > 2 {
            return Err(Error::invalid("m", format!("{m} > 2")));
        }
        Ok(self.quad.inner(g, &self.basis[m])? / self.norms[m])
    }

    pub fn decompose(&self, g: &[f64], s: f64, k0: f64) -> Result<ModeDecomposition> {
        if g.len() != self.grid.len() {
            return Err(Error::GridMismatch {
                expected: self.grid.len(),
                got: g.len(),
            });
        }
        let required = 2.0 * k0 * s.sqrt();
        if self.grid.ymax() < required {
            return Err(Error::GridTooNarrow {
                ymax: self.grid.ymax(),
                required,
            });
        }
        let mut inner = vec![0.0; g.len()];
        let mut r_e = vec![0.0; g.len()];
        for (i, &y) in self.grid.ys().iter().enumerate() {
            let chi = cutoff_chi(y, s, k0);
            inner[i] = chi * g[i];
            r_e[i] = if chi == 1.0 { 0.0 } else { g[i] - inner[i] };
        }
        let modes = [
            self.coefficient(&inner, 0)?,
            self.coefficient(&inner, 1)?,
            self.coefficient(&inner, 2)?,
        ];
        let r_minus = (0..g.len())
            .map(|i| inner[i] - (0..3).map(|m| modes[m] * self.basis[m][i]).sum::<f64>())
            .collect();
        Ok(ModeDecomposition {
            s,
            k0,
            grid: self.grid.clone(),
            modes,
            r_minus,
            r_e,
            inner,
        })
    }

    pub fn recompose(&self, d: &ModeDecomposition) -> Vec<f64> {
        (0..d.r_e.len())
            .map(|i| (0..3).map(|m| d.modes[m] * self.basis[m][i]).sum::<f64>() + d.r_minus[i] + d.r_e[i])
            .collect()
    }
}

pub fn decompose(g: &[f64], grid: &YGrid, s: f64, k0: f64) -> Result<ModeDecomposition> {
    Projector::new(grid.clone())?.decompose(g, s, k0)
}

pub fn recompose(d: &ModeDecomposition) -> Result<Vec<f64>> {
    Ok(Projector::new(d.grid.clone())?.recompose(d))
}

/// One of the ten bounded quantities of the shrinking set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Component {
    Q0,
    Q1,
    Q2,
    QMinus,
    QE,
    Qt0,
    Qt1,
    Qt2,
    QtMinus,
    QtE,
}

impl Component {
    pub const ALL: [Component; 10] = [
        Component::Q0,
        Component::Q1,
        Component::Q2,
        Component::QMinus,
        Component::QE,
        Component::Qt0,
        Component::Qt1,
        Component::Qt2,
        Component::QtMinus,
        Component::QtE,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Component::Q0 => "q0",
            Component::Q1 => "q1",
            Component::Q2 => "q2",
            Component::QMinus => "qminus",
            Component::QE => "qe",
            Component::Qt0 => "qt0",
            Component::Qt1 => "qt1",
            Component::Qt2 => "qt2",
            Component::QtMinus => "qtminus",
            Component::QtE => "qte",
        }
    }

    /// The four directions along which the set may be left.
    pub fn is_expanding(self) -> bool {
        matches!(self, Component::Q0 | Component::Q1 | Component::Qt0 | Component::Qt1)
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Component {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.replace('_', "");
        Component::ALL
            .into_iter()
            .find(|c| c.label() == norm)
            .ok_or_else(|| Error::invalid("component", format!("unknown `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundUsage {
    pub component: Component,
    /// Value divided by its bound.
    pub ratio: f64,
    /// Sign of the quantity where it is largest.
    pub sign: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MembershipReport {
    pub member: bool,
    pub usage: Vec<BoundUsage>,
    pub worst: BoundUsage,
}

impl MembershipReport {
    fn from_usage(usage: Vec<BoundUsage>) -> Self {
        let worst = *usage
            .iter()
            .max_by(|a, b| a.ratio.total_cmp(&b.ratio))
            .expect("non-empty usage");
        let member = usage.iter().all(|u| u.ratio <= 1.0);
        Self { member, usage, worst }
    }

    /// Joint report for the pair of sets.
    pub fn combine(&self, other: &Self) -> Self {
        let mut usage = self.usage.clone();
        usage.extend_from_slice(&other.usage);
        Self::from_usage(usage)
    }

    pub fn ratio(&self, c: Component) -> Option<f64> {
        self.usage.iter().find(|u| u.component == c).map(|u| u.ratio)
    }

    /// Bounds exceeded, worst first.
    pub fn violations(&self) -> Vec<BoundUsage> {
        let mut v: Vec<_> = self.usage.iter().copied().filter(|u| u.ratio > 1.0).collect();
        v.sort_by(|a, b| b.ratio.total_cmp(&a.ratio));
        v
    }
}

fn signum(v: f64) -> f64 {
    if v < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Largest `|v| / (1 + |y|^3)` and the sign of `v` there.
fn weighted_peak(ys: &[f64], v: &[f64]) -> (f64, f64) {
    let mut best = (0.0, 1.0);
    for (y, x) in ys.iter().zip(v) {
        let w = x.abs() / (1.0 + y.abs().powi(3));
        if w > best.0 {
            best = (w, signum(*x));
        }
    }
    best
}

fn sup_peak(v: &[f64]) -> (f64, f64) {
    let mut best = (0.0, 1.0);
    for x in v {
        if x.abs() > best.0 {
            best = (x.abs(), signum(*x));
        }
    }
    best
}

/// Usage of the five bounds `A/s^2` (modes 0, 1), `A^2 log s / s^2`,
/// `A (1+|y|^3) / s^2` and `A^2 / sqrt(s)` for the real part.
pub fn check_va(d: &ModeDecomposition, s: f64, p: &ShrinkingParams) -> MembershipReport {
    let s2 = s * s;
    let (minus, minus_sign) = weighted_peak(d.grid.ys(), &d.r_minus);
    let (outer, outer_sign) = sup_peak(&d.r_e);
    let usage = vec![
        BoundUsage {
            component: Component::Q0,
            ratio: d.modes[0].abs() * s2 / p.a,
            sign: signum(d.modes[0]),
        },
        BoundUsage {
            component: Component::Q1,
            ratio: d.modes[1].abs() * s2 / p.a,
            sign: signum(d.modes[1]),
        },
        BoundUsage {
            component: Component::Q2,
            ratio: d.modes[2].abs() * s2 / (p.a * p.a * s.ln()),
            sign: signum(d.modes[2]),
        },
        BoundUsage {
            component: Component::QMinus,
            ratio: minus * s2 / p.a,
            sign: minus_sign,
        },
        BoundUsage {
            component: Component::QE,
            ratio: outer * s.sqrt() / (p.a * p.a),
            sign: outer_sign,
        },
    ];
    MembershipReport::from_usage(usage)
}

/// Usage of the imaginary-part bounds `At s^-alpha` (modes 0, 1),
/// `At^2 s^(-2+eta)`, `At (1+|y|^3) s^-alpha` and `At^2 s^(-alpha+3/2)`.
pub fn check_vat(d: &ModeDecomposition, s: f64, p: &ShrinkingParams) -> MembershipReport {
    let sa = s.powf(p.alpha);
    let (minus, minus_sign) = weighted_peak(d.grid.ys(), &d.r_minus);
    let (outer, outer_sign) = sup_peak(&d.r_e);
    let at2 = p.at * p.at;
    let usage = vec![
        BoundUsage {
            component: Component::Qt0,
            ratio: d.modes[0].abs() * sa / p.at,
            sign: signum(d.modes[0]),
        },
        BoundUsage {
            component: Component::Qt1,
            ratio: d.modes[1].abs() * sa / p.at,
            sign: signum(d.modes[1]),
        },
        BoundUsage {
            component: Component::Qt2,
            ratio: d.modes[2].abs() * s.powf(2.0 - p.eta) / at2,
            sign: signum(d.modes[2]),
        },
        BoundUsage {
            component: Component::QtMinus,
            ratio: minus * sa / p.at,
            sign: minus_sign,
        },
        BoundUsage {
            component: Component::QtE,
            ratio: outer * s.powf(p.alpha - 1.5) / at2,
            sign: outer_sign,
        },
    ];
    MembershipReport::from_usage(usage)
}

/// `(|q|_inf sqrt(s) / A^2, |qt|_inf s^(alpha-3/2) / At^2)`: the measured
/// constants of the global sup bounds.
pub fn global_bound(
    real: &ModeDecomposition,
    imag: &ModeDecomposition,
    s: f64,
    p: &ShrinkingParams,
) -> Result<(f64, f64)> {
    let q = recompose(real)?;
    let qt = recompose(imag)?;
    Ok((
        sup_peak(&q).0 * s.sqrt() / (p.a * p.a),
        sup_peak(&qt).0 * s.powf(p.alpha - 1.5) / (p.at * p.at),
    ))
}

/// Both decompositions and the joint report of a field at time `s`.
#[derive(Debug, Clone)]
pub struct FieldMembership {
    pub real: ModeDecomposition,
    pub imag: ModeDecomposition,
    pub report: MembershipReport,
}

pub fn check_field(projector: &Projector, field: &Field, s: f64, p: &ShrinkingParams) -> Result<FieldMembership> {
    let real = projector.decompose(&field.q, s, p.k0)?;
    let imag = projector.decompose(&field.qt, s, p.k0)?;
    let report = check_va(&real, s, p).combine(&check_vat(&imag, s, p));
    Ok(FieldMembership { real, imag, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::hermite;

    fn grid() -> YGrid {
        YGrid::new(0.05, 100.0).unwrap()
    }

    fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn basis_vector() {
        let g = grid();
        let h1 = hermite_on(1, g.ys()).unwrap();
        let d = decompose(&h1, &g, 20.0, 10.0).unwrap();
        assert!((d.modes[1] - 1.0).abs() < 1e-6);
        assert!(d.modes[0].abs() < 1e-6 && d.modes[2].abs() < 1e-6);
    }

    #[test]
    fn outer_only() {
        let g = grid();
        let (s, k0) = (20.0, 10.0);
        let input: Vec<f64> = g
            .ys()
            .iter()
            .map(|&y| if cutoff_chi(y, s, k0) == 0.0 { 3.0 } else { 0.0 })
            .collect();
        let d = decompose(&input, &g, s, k0).unwrap();
        assert!(sup_diff(&d.r_e, &input) < 1e-14);
        assert!(d.modes.iter().all(|m| m.abs() < 1e-14));
    }

    #[test]
    fn cubic_moment_oracle() {
        let g = grid();
        let cube: Vec<f64> = g.ys().iter().map(|y| y.powi(3)).collect();
        let d = decompose(&cube, &g, 20.0, 10.0).unwrap();
        assert!((d.modes[1] - 6.0).abs() < 1e-8);
        for (i, &y) in g.ys().iter().enumerate() {
            if y.abs() < 40.0 {
                assert!((d.r_minus[i] - hermite(3, y).unwrap()).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn recompose_round_trip_and_orthogonality() {
        let g = grid();
        let p = Projector::new(g.clone()).unwrap();
        let input: Vec<f64> = g.ys().iter().map(|&y| (0.3 * y).sin() + 0.01 * y * y - 0.5).collect();
        let d = p.decompose(&input, 20.0, 10.0).unwrap();
        assert!(sup_diff(&p.recompose(&d), &input) < 1e-8);
        for m in 0..3 {
            assert!(p.coefficient(&d.r_minus, m).unwrap().abs() < 1e-8);
        }
        let zero = ModeDecomposition::zero(g.clone(), 20.0, 10.0);
        assert!(p.recompose(&zero).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn narrow_grid_rejected() {
        let g = YGrid::new(0.1, 50.0).unwrap();
        let v = vec![0.0; g.len()];
        assert!(matches!(
            decompose(&v, &g, 20.0, 10.0),
            Err(Error::GridTooNarrow { .. })
        ));
    }

    #[test]
    fn membership_examples() {
        let g = grid();
        let p = ShrinkingParams::default();
        let s = 25.0;
        let mut d = ModeDecomposition::zero(g.clone(), s, p.k0);
        let r = check_va(&d, s, &p);
        assert!(r.member && r.usage.iter().all(|u| u.ratio == 0.0));
        assert!(check_vat(&d, s, &p).member);

        d.modes[0] = p.a / (s * s);
        let r = check_va(&d, s, &p);
        assert!(r.member);
        assert!((r.ratio(Component::Q0).unwrap() - 1.0).abs() < 1e-15);

        let mut d = ModeDecomposition::zero(g.clone(), s, p.k0);
        d.modes[2] = 2.0 * p.a * p.a * s.ln() / (s * s);
        let r = check_va(&d, s, &p);
        assert!(!r.member);
        assert_eq!(r.worst.component, Component::Q2);

        let mut d = ModeDecomposition::zero(g.clone(), s, p.k0);
        d.modes[2] = p.at * p.at * s.powf(-2.0 + p.eta);
        let r = check_vat(&d, s, &p);
        assert!(r.member);
        assert!((r.ratio(Component::Qt2).unwrap() - 1.0).abs() < 1e-12);

        let mut d = ModeDecomposition::zero(g, s, p.k0);
        d.r_e.fill(2.0 * p.at * p.at * s.powf(-p.alpha + 1.5));
        let r = check_vat(&d, s, &p);
        assert!(!r.member);
        assert_eq!(r.worst.component, Component::QtE);
        assert_eq!("qt_e".parse::<Component>().unwrap(), Component::QtE);
    }

    #[test]
    fn global_bound_examples() {
        let g = grid();
        let p = ShrinkingParams::default();
        let s = 30.0;
        let zero = ModeDecomposition::zero(g.clone(), s, p.k0);
        assert_eq!(global_bound(&zero, &zero, s, &p).unwrap(), (0.0, 0.0));
        let mut d = zero.clone();
        d.r_e.fill(p.a * p.a / s.sqrt());
        let (a, b) = global_bound(&d, &zero, s, &p).unwrap();
        assert!((a - 1.0).abs() < 1e-12 && b == 0.0);
    }

    #[test]
    fn params_validation() {
        assert!(ShrinkingParams::default().validate().is_ok());
        let bad = [
            ShrinkingParams {
                a: 0.5,
                ..Default::default()
            },
            ShrinkingParams {
                bt: 1.5,
                ..Default::default()
            },
            ShrinkingParams {
                eta: 0.2,
                ..Default::default()
            },
            ShrinkingParams {
                alpha: 2.06,
                ..Default::default()
            },
            ShrinkingParams {
                s0: 2.0,
                ..Default::default()
            },
        ];
        for p in bad {
            assert!(p.validate().is_err());
        }
    }
}
