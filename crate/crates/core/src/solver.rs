//! Finite-difference time stepper for the perturbation system
//!
//! ```text
//! q_s  = (L + V) q  + q^2 - q~^2 + R
//! q~_s = (L + V) q~ + 2 q q~
//! ```
//!
//! on a truncated symmetric grid `|y| <= ymax`. The default scheme treats `L`
//! with Crank-Nicolson and the remaining terms with Heun's method; `L` does
//! not depend on `s`, so the tridiagonal factorization is built once per grid.

use std::ops::ControlFlow;
use std::sync::Arc;

use num_complex::Complex64;

use crate::profile::{fill_coefficients, phi, potential_v, residual_r};
use crate::{Error, Result};

/// Uniform grid `y_i = (i - M) h`, `i = 0..=2M`, exactly symmetric about 0.
#[derive(Debug, Clone)]
pub struct YGrid {
    ys: Arc<[f64]>,
    h: f64,
}

impl PartialEq for YGrid {
    fn eq(&self, other: &Self) -> bool {
        self.h == other.h && self.ys.len() == other.ys.len()
    }
}

impl YGrid {
    /// Smallest symmetric grid with spacing `h` reaching at least `ymax`.
    pub fn new(h: f64, ymax: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::invalid("h", format!("{h} must be positive")));
        }
        if !(ymax > 2.0 * h) {
            return Err(Error::invalid("ymax", format!("{ymax} too small for h = {h}")));
        }
        let half = (ymax / h - 1e-9).ceil() as i64;
        let ys: Vec<f64> = (-half..=half).map(|i| i as f64 * h).collect();
        Ok(Self { ys: ys.into(), h })
    }

    /// Rebuilds a grid from stored nodes, checking uniform symmetric layout.
    pub fn from_nodes(nodes: &[f64]) -> Result<Self> {
        if nodes.len() < 5 || nodes.len().is_multiple_of(2) {
            return Err(Error::invalid("grid", "need an odd number (>= 5) of nodes"));
        }
        let half = (nodes.len() / 2) as i64;
        let h = (nodes[nodes.len() - 1] - nodes[0]) / (2 * half) as f64;
        let grid = Self {
            ys: (-half..=half).map(|i| i as f64 * h).collect::<Vec<_>>().into(),
            h,
        };
        let max_dev = grid
            .ys
            .iter()
            .zip(nodes)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if max_dev > 1e-9 * h.max(1.0) {
            return Err(Error::invalid("grid", "nodes are not uniform and symmetric"));
        }
        Ok(grid)
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn ymax(&self) -> f64 {
        self.ys[self.ys.len() - 1]
    }

    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    pub fn center(&self) -> usize {
        self.ys.len() / 2
    }
}

/// Real and imaginary parts of the perturbation on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: YGrid,
    pub q: Vec<f64>,
    pub qt: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: YGrid) -> Self {
        let n = grid.len();
        Self {
            grid,
            q: vec![0.0; n],
            qt: vec![0.0; n],
        }
    }

    pub fn from_fn(grid: YGrid, fq: impl Fn(f64) -> f64, fqt: impl Fn(f64) -> f64) -> Self {
        let q = grid.ys().iter().map(|&y| fq(y)).collect();
        let qt = grid.ys().iter().map(|&y| fqt(y)).collect();
        Self { grid, q, qt }
    }

    pub fn new(grid: YGrid, q: Vec<f64>, qt: Vec<f64>) -> Result<Self> {
        for v in [&q, &qt] {
            if v.len() != grid.len() {
                return Err(Error::GridMismatch {
                    expected: grid.len(),
                    got: v.len(),
                });
            }
        }
        Ok(Self { grid, q, qt })
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(&self.qt).all(|v| v.is_finite())
    }

    /// Extends (or crops) to a new half-width, padding with the end values.
    pub fn regrid(&self, ymax: f64) -> Result<Field> {
        let grid = YGrid::new(self.grid.h(), ymax)?;
        let old_half = self.grid.center() as i64;
        let new_half = grid.center() as i64;
        let pick = |v: &[f64], i: i64| -> f64 {
            let j = i - new_half + old_half;
            v[j.clamp(0, 2 * old_half) as usize]
        };
        let q = (0..grid.len() as i64).map(|i| pick(&self.q, i)).collect();
        let qt = (0..grid.len() as i64).map(|i| pick(&self.qt, i)).collect();
        Ok(Field { grid, q, qt })
    }
}

/// Which terms besides `L` enter the equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Terms {
    pub potential: bool,
    pub nonlinear: bool,
    pub residual: bool,
}

impl Terms {
    pub fn full() -> Self {
        Self {
            potential: true,
            nonlinear: true,
            residual: true,
        }
    }

    /// `L` alone.
    pub fn free() -> Self {
        Self {
            potential: false,
            nonlinear: false,
            residual: false,
        }
    }

    pub fn is_full(&self) -> bool {
        self.potential && self.nonlinear && self.residual
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Crank-Nicolson in `L`, Heun in the rest.
    Imex,
    /// Heun for everything; requires `ds <= EXPLICIT_CFL * h^2`.
    Explicit,
}

/// Stability constant of the explicit fallback.
pub const EXPLICIT_CFL: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryCondition {
    /// Dirichlet: the end values follow the spatially constant equation
    /// `W' = -W + W^2` (or its linear analogue when terms are disabled).
    OuterOde,
    /// Homogeneous Neumann.
    Neumann,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Advection {
    Central,
    Upwind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum YmaxPolicy {
    /// `ymax = max(min, factor K0 sqrt(s_end))`, fixed for the run.
    Horizon {
        min: f64,
        factor: f64,
    },
    Fixed(f64),
    /// Starts from `max(min, factor K0 sqrt(s0))` and regrids at observer
    /// ticks once `factor K0 sqrt(s)` reaches the edge.
    Regrid {
        min: f64,
        factor: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub ds: f64,
    pub h: f64,
    pub ymax_policy: YmaxPolicy,
    pub scheme: Scheme,
    pub bc: BoundaryCondition,
    pub advection: Advection,
    pub terms: Terms,
    /// Observer cadence in self-similar time; a multiple of `ds`.
    pub cadence: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            ds: 0.01,
            h: 0.04,
            ymax_policy: YmaxPolicy::Horizon { min: 40.0, factor: 3.0 },
            scheme: Scheme::Imex,
            bc: BoundaryCondition::OuterOde,
            advection: Advection::Central,
            terms: Terms::full(),
            cadence: 0.1,
        }
    }
}

impl SolverConfig {
    pub fn steps_per_tick(&self) -> Result<usize> {
        let k = (self.cadence / self.ds).round();
        if k < 1.0 || (k * self.ds - self.cadence).abs() > 1e-9 * self.cadence.max(1.0) {
            return Err(Error::invalid(
                "cadence",
                format!("{} is not a multiple of ds = {}", self.cadence, self.ds),
            ));
        }
        Ok(k as usize)
    }

    pub fn validate(&self, grid: &YGrid) -> Result<()> {
        if !(self.ds > 0.0) {
            return Err(Error::invalid("ds", "must be positive"));
        }
        self.steps_per_tick()?;
        if self.scheme == Scheme::Explicit {
            let h = grid.h();
            if self.ds > EXPLICIT_CFL * h * h || self.ds * grid.ymax() / (2.0 * h) > 1.0 {
                return Err(Error::invalid(
                    "ds",
                    format!(
                        "explicit scheme needs ds <= {EXPLICIT_CFL} h^2 and ds ymax / (2h) <= 1 (ds = {}, h = {h})",
                        self.ds
                    ),
                ));
            }
        }
        Ok(())
    }

    pub fn ymax_for(&self, k0: f64, s_start: f64, s_end: f64) -> f64 {
        match self.ymax_policy {
            YmaxPolicy::Horizon { min, factor } => min.max(factor * k0 * s_end.sqrt()),
            YmaxPolicy::Fixed(v) => v,
            YmaxPolicy::Regrid { min, factor } => min.max(factor * k0 * s_start.sqrt()),
        }
    }

    pub fn grid_for(&self, k0: f64, s_start: f64, s_end: f64) -> Result<YGrid> {
        YGrid::new(self.h, self.ymax_for(k0, s_start, s_end))
    }
}

/// Discrete `L`, with one-sided second-order stencils at the two end nodes.
pub fn apply_l(field: &Field) -> Field {
    let apply = |g: &[f64]| -> Vec<f64> {
        let ys = field.grid.ys();
        let h = field.grid.h();
        let n = g.len();
        let mut out = vec![0.0; n];
        for i in 1..n - 1 {
            let d2 = (g[i + 1] - 2.0 * g[i] + g[i - 1]) / (h * h);
            let d1 = (g[i + 1] - g[i - 1]) / (2.0 * h);
            out[i] = d2 - 0.5 * ys[i] * d1 + g[i];
        }
        let d2 = (2.0 * g[0] - 5.0 * g[1] + 4.0 * g[2] - g[3]) / (h * h);
        let d1 = (-3.0 * g[0] + 4.0 * g[1] - g[2]) / (2.0 * h);
        out[0] = d2 - 0.5 * ys[0] * d1 + g[0];
        let m = n - 1;
        let d2 = (2.0 * g[m] - 5.0 * g[m - 1] + 4.0 * g[m - 2] - g[m - 3]) / (h * h);
        let d1 = (3.0 * g[m] - 4.0 * g[m - 1] + g[m - 2]) / (2.0 * h);
        out[m] = d2 - 0.5 * ys[m] * d1 + g[m];
        out
    };
    Field {
        grid: field.grid.clone(),
        q: apply(&field.q),
        qt: apply(&field.qt),
    }
}

/// Right-hand side of the system evaluated nodewise, with `L` as in
/// [`apply_l`].
pub fn rhs(state: &Field, s: f64, terms: Terms) -> Result<Field> {
    let mut out = apply_l(state);
    for (i, &y) in state.grid.ys().iter().enumerate() {
        let (q, qt) = (state.q[i], state.qt[i]);
        let (dq, dqt) = explicit_terms(q, qt, potential_v(y, s), residual_r(y, s), terms);
        out.q[i] += dq;
        out.qt[i] += dqt;
    }
    if !out.is_finite() {
        return Err(Error::Diverged {
            s,
            reason: "non-finite right-hand side".into(),
        });
    }
    Ok(out)
}

#[inline]
fn explicit_terms(q: f64, qt: f64, v: f64, r: f64, terms: Terms) -> (f64, f64) {
    let mut dq = 0.0;
    let mut dqt = 0.0;
    if terms.potential {
        dq += v * q;
        dqt += v * qt;
    }
    if terms.nonlinear {
        dq += q * q - qt * qt;
        dqt += 2.0 * q * qt;
    }
    if terms.residual {
        dq += r;
    }
    (dq, dqt)
}

/// One-step propagator on a fixed grid.
pub struct Stepper {
    cfg: SolverConfig,
    grid: YGrid,
    // Rows of the discrete L: coefficients of g[i-1], g[i], g[i+1].
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    // Thomas factorization of I - ds/2 L (Dirichlet rows replaced by identity).
    c_prime: Vec<f64>,
    inv_denom: Vec<f64>,
    v: Vec<f64>,
    r: Vec<f64>,
    scratch: [Vec<f64>; 6],
}

impl Stepper {
    pub fn new(cfg: SolverConfig, grid: YGrid) -> Result<Self> {
        cfg.validate(&grid)?;
        let n = grid.len();
        let h = grid.h();
        let ys = grid.ys();
        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        let inv_h2 = 1.0 / (h * h);
        for i in 1..n - 1 {
            let y = ys[i];
            lower[i] = inv_h2;
            diag[i] = -2.0 * inv_h2 + 1.0;
            upper[i] = inv_h2;
            match cfg.advection {
                Advection::Central => {
                    lower[i] += y / (4.0 * h);
                    upper[i] -= y / (4.0 * h);
                }
                Advection::Upwind => {
                    if y > 0.0 {
                        lower[i] += y / (2.0 * h);
                        diag[i] -= y / (2.0 * h);
                    } else {
                        upper[i] -= y / (2.0 * h);
                        diag[i] += y / (2.0 * h);
                    }
                }
            }
        }
        if cfg.bc == BoundaryCondition::Neumann {
            diag[0] = -2.0 * inv_h2 + 1.0;
            upper[0] = 2.0 * inv_h2;
            lower[n - 1] = 2.0 * inv_h2;
            diag[n - 1] = -2.0 * inv_h2 + 1.0;
        }
        let mut stepper = Self {
            cfg,
            grid,
            lower,
            diag,
            upper,
            c_prime: vec![0.0; n],
            inv_denom: vec![0.0; n],
            v: vec![0.0; n],
            r: vec![0.0; n],
            scratch: std::array::from_fn(|_| vec![0.0; n]),
        };
        stepper.factor()?;
        Ok(stepper)
    }

    pub fn grid(&self) -> &YGrid {
        &self.grid
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    fn dirichlet(&self) -> bool {
        self.cfg.bc == BoundaryCondition::OuterOde
    }

    fn factor(&mut self) -> Result<()> {
        let n = self.grid.len();
        let half = 0.5 * self.cfg.ds;
        let row = |i: usize| -> (f64, f64, f64) {
            if self.dirichlet() && (i == 0 || i == n - 1) {
                (0.0, 1.0, 0.0)
            } else {
                (-half * self.lower[i], 1.0 - half * self.diag[i], -half * self.upper[i])
            }
        };
        let mut inv_denom = vec![0.0; n];
        let mut c_prime = vec![0.0; n];
        let mut prev_c = 0.0;
        for i in 0..n {
            let (a, b, c) = row(i);
            let denom = b - a * prev_c;
            if denom.abs() < 1e-300 || !denom.is_finite() {
                return Err(Error::Diverged {
                    s: f64::NAN,
                    reason: "singular implicit matrix".into(),
                });
            }
            inv_denom[i] = 1.0 / denom;
            c_prime[i] = c / denom;
            prev_c = c_prime[i];
        }
        self.inv_denom = inv_denom;
        self.c_prime = c_prime;
        Ok(())
    }

    /// Solves the factored system in place.
    fn solve(&self, rhs: &mut [f64]) {
        let n = rhs.len();
        let half = 0.5 * self.cfg.ds;
        let lower = |i: usize| -> f64 {
            if self.dirichlet() && (i == 0 || i == n - 1) {
                0.0
            } else {
                -half * self.lower[i]
            }
        };
        rhs[0] *= self.inv_denom[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - lower(i) * rhs[i - 1]) * self.inv_denom[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= self.c_prime[i] * rhs[i + 1];
        }
    }

    /// `out = A g` with the tridiagonal rows (boundary rows only for Neumann).
    fn apply_rows(&self, g: &[f64], out: &mut [f64]) {
        let n = g.len();
        for i in 1..n - 1 {
            out[i] = self.lower[i] * g[i - 1] + self.diag[i] * g[i] + self.upper[i] * g[i + 1];
        }
        if self.dirichlet() {
            out[0] = 0.0;
            out[n - 1] = 0.0;
        } else {
            out[0] = self.diag[0] * g[0] + self.upper[0] * g[1];
            out[n - 1] = self.lower[n - 1] * g[n - 2] + self.diag[n - 1] * g[n - 1];
        }
    }

    /// End values at `s + ds` from the spatially constant dynamics.
    fn boundary_values(&self, q: f64, qt: f64, y: f64, s: f64) -> (f64, f64) {
        let ds = self.cfg.ds;
        let terms = self.cfg.terms;
        if terms.is_full() {
            // W' = W^2 - W  =>  W(s + ds) = W / (W + (1 - W) e^ds)
            let w = Complex64::new(phi(y, s) + q, qt);
            let e = ds.exp();
            let next = w / (w + (Complex64::new(1.0, 0.0) - w) * e);
            return (next.re - phi(y, s + ds), next.im);
        }
        let f = |q: f64, qt: f64, s: f64| {
            let (dq, dqt) = explicit_terms(q, qt, potential_v(y, s), residual_r(y, s), terms);
            (q + dq, qt + dqt)
        };
        let (k1q, k1t) = f(q, qt, s);
        let (k2q, k2t) = f(q + 0.5 * ds * k1q, qt + 0.5 * ds * k1t, s + 0.5 * ds);
        let (k3q, k3t) = f(q + 0.5 * ds * k2q, qt + 0.5 * ds * k2t, s + 0.5 * ds);
        let (k4q, k4t) = f(q + ds * k3q, qt + ds * k3t, s + ds);
        (
            q + ds / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q),
            qt + ds / 6.0 * (k1t + 2.0 * k2t + 2.0 * k3t + k4t),
        )
    }

    /// Explicit terms at `s` for `(q, qt)` into `(nq, nqt)`.
    fn explicit(&mut self, q: &[f64], qt: &[f64], s: f64, nq: &mut [f64], nqt: &mut [f64]) {
        let terms = self.cfg.terms;
        if terms.potential || terms.residual {
            fill_coefficients(self.grid.ys(), s, &mut self.v, &mut self.r);
        }
        for i in 0..q.len() {
            let (a, b) = explicit_terms(q[i], qt[i], self.v[i], self.r[i], terms);
            nq[i] = a;
            nqt[i] = b;
        }
    }

    /// Advances `state` from `s` to `s + ds`.
    pub fn step(&mut self, state: &mut Field, s: f64) -> Result<()> {
        if state.grid != self.grid {
            return Err(Error::GridMismatch {
                expected: self.grid.len(),
                got: state.grid.len(),
            });
        }
        match self.cfg.scheme {
            Scheme::Imex => self.step_imex(state, s)?,
            Scheme::Explicit => self.step_explicit(state, s)?,
        }
        if !state.is_finite() {
            return Err(Error::Diverged {
                s: s + self.cfg.ds,
                reason: "non-finite values after step".into(),
            });
        }
        Ok(())
    }

    fn end_values(&self, state: &Field, s: f64) -> [(f64, f64); 2] {
        let n = state.q.len();
        let ys = self.grid.ys();
        [
            self.boundary_values(state.q[0], state.qt[0], ys[0], s),
            self.boundary_values(state.q[n - 1], state.qt[n - 1], ys[n - 1], s),
        ]
    }

    fn step_imex(&mut self, state: &mut Field, s: f64) -> Result<()> {
        let ds = self.cfg.ds;
        let n = state.q.len();
        let ends = self.dirichlet().then(|| self.end_values(state, s));
        let [mut nq0, mut nt0, mut base_q, mut base_t, mut nq1, mut nt1] = std::mem::take(&mut self.scratch);

        self.explicit(&state.q, &state.qt, s, &mut nq0, &mut nt0);
        self.apply_rows(&state.q, &mut base_q);
        self.apply_rows(&state.qt, &mut base_t);
        for i in 0..n {
            base_q[i] = state.q[i] + 0.5 * ds * base_q[i];
            base_t[i] = state.qt[i] + 0.5 * ds * base_t[i];
        }

        // Predictor: explicit Euler in the non-stiff part.
        let mut pq: Vec<f64> = (0..n).map(|i| base_q[i] + ds * nq0[i]).collect();
        let mut pt: Vec<f64> = (0..n).map(|i| base_t[i] + ds * nt0[i]).collect();
        if let Some(e) = ends {
            pq[0] = e[0].0;
            pt[0] = e[0].1;
            pq[n - 1] = e[1].0;
            pt[n - 1] = e[1].1;
        }
        self.solve(&mut pq);
        self.solve(&mut pt);

        // Corrector: trapezoid in the non-stiff part.
        self.explicit(&pq, &pt, s + ds, &mut nq1, &mut nt1);
        for i in 0..n {
            state.q[i] = base_q[i] + 0.5 * ds * (nq0[i] + nq1[i]);
            state.qt[i] = base_t[i] + 0.5 * ds * (nt0[i] + nt1[i]);
        }
        if let Some(e) = ends {
            state.q[0] = e[0].0;
            state.qt[0] = e[0].1;
            state.q[n - 1] = e[1].0;
            state.qt[n - 1] = e[1].1;
        }
        self.solve(&mut state.q);
        self.solve(&mut state.qt);

        self.scratch = [nq0, nt0, base_q, base_t, nq1, nt1];
        Ok(())
    }

    fn step_explicit(&mut self, state: &mut Field, s: f64) -> Result<()> {
        let ds = self.cfg.ds;
        let n = state.q.len();
        let ends = self.dirichlet().then(|| self.end_values(state, s));
        let [mut nq0, mut nt0, mut lq, mut lt, mut nq1, mut nt1] = std::mem::take(&mut self.scratch);

        self.explicit(&state.q, &state.qt, s, &mut nq0, &mut nt0);
        self.apply_rows(&state.q, &mut lq);
        self.apply_rows(&state.qt, &mut lt);
        let k1q: Vec<f64> = (0..n).map(|i| lq[i] + nq0[i]).collect();
        let k1t: Vec<f64> = (0..n).map(|i| lt[i] + nt0[i]).collect();
        let mut pq: Vec<f64> = (0..n).map(|i| state.q[i] + ds * k1q[i]).collect();
        let mut pt: Vec<f64> = (0..n).map(|i| state.qt[i] + ds * k1t[i]).collect();
        if let Some(e) = ends {
            pq[0] = e[0].0;
            pt[0] = e[0].1;
            pq[n - 1] = e[1].0;
            pt[n - 1] = e[1].1;
        }
        self.explicit(&pq, &pt, s + ds, &mut nq1, &mut nt1);
        self.apply_rows(&pq, &mut lq);
        self.apply_rows(&pt, &mut lt);
        for i in 0..n {
            state.q[i] += 0.5 * ds * (k1q[i] + lq[i] + nq1[i]);
            state.qt[i] += 0.5 * ds * (k1t[i] + lt[i] + nt1[i]);
        }
        if let Some(e) = ends {
            state.q[0] = e[0].0;
            state.qt[0] = e[0].1;
            state.q[n - 1] = e[1].0;
            state.qt[n - 1] = e[1].1;
        }
        self.scratch = [nq0, nt0, lq, lt, nq1, nt1];
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EvolveStatus {
    Completed,
    /// The observer asked to stop.
    Stopped,
    Diverged {
        s: f64,
        reason: String,
    },
}

#[derive(Debug, Clone)]
pub struct Evolution {
    pub state: Field,
    pub s: f64,
    pub status: EvolveStatus,
    pub observer_calls: usize,
}

/// Steps from `s0` to `s_end`, calling `observer` at `s0` and then every
/// `cfg.cadence`. Regrids at ticks under [`YmaxPolicy::Regrid`].
pub fn evolve<F>(cfg: &SolverConfig, k0: f64, initial: Field, s0: f64, s_end: f64, mut observer: F) -> Result<Evolution>
where
    F: FnMut(&Field, f64) -> ControlFlow<()>,
{
    if !(s_end > s0) {
        return Err(Error::invalid("s_end", format!("{s_end} <= s0 = {s0}")));
    }
    let per_tick = cfg.steps_per_tick()?;
    let total = ((s_end - s0) / cfg.ds + 1e-9).floor() as usize;
    let mut state = initial;
    let mut stepper = Stepper::new(*cfg, state.grid.clone())?;
    let mut calls = 0;
    let mut s = s0;
    for k in 0..=total {
        s = s0 + k as f64 * cfg.ds;
        if k % per_tick == 0 {
            calls += 1;
            if observer(&state, s).is_break() {
                return Ok(Evolution {
                    state,
                    s,
                    status: EvolveStatus::Stopped,
                    observer_calls: calls,
                });
            }
            if let YmaxPolicy::Regrid { min, factor } = cfg.ymax_policy {
                let needed = min.max(factor * k0 * (s + cfg.cadence).sqrt());
                if needed > state.grid.ymax() {
                    state = state.regrid(min.max(factor * k0 * (1.1 * s).sqrt()))?;
                    stepper = Stepper::new(*cfg, state.grid.clone())?;
                }
            }
        }
        if k == total {
            break;
        }
        if let Err(e) = stepper.step(&mut state, s) {
            let reason = e.to_string();
            return Ok(Evolution {
                state,
                s: s + cfg.ds,
                status: EvolveStatus::Diverged { s: s + cfg.ds, reason },
                observer_calls: calls,
            });
        }
    }
    Ok(Evolution {
        state,
        s,
        status: EvolveStatus::Completed,
        observer_calls: calls,
    })
}
