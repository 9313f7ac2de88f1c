//! Small numerical helpers: cubic interpolation and series diagnostics.

use crate::{Error, Result};

/// Four-point Lagrange weights at offset `t` in `[0, 1]` between the 2nd and
/// 3rd of four equally spaced nodes.
fn cubic_weights(t: f64) -> [f64; 4] {
    [
        -t * (t - 1.0) * (t - 2.0) / 6.0,
        (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
        -(t + 1.0) * t * (t - 2.0) / 2.0,
        (t + 1.0) * t * (t - 1.0) / 6.0,
    ]
}

/// Local cubic interpolation on a uniform grid; exact at the nodes.
#[derive(Debug, Clone)]
pub struct UniformCubic<'a> {
    x0: f64,
    h: f64,
    values: &'a [f64],
}

impl<'a> UniformCubic<'a> {
    pub fn new(grid: &[f64], values: &'a [f64]) -> Result<Self> {
        if grid.len() < 4 || grid.len() != values.len() {
            return Err(Error::invalid("grid", "need at least four matching samples"));
        }
        Ok(Self {
            x0: grid[0],
            h: grid[1] - grid[0],
            values,
        })
    }

    /// Clamps to the end values outside the grid.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.values.len();
        let u = (x - self.x0) / self.h;
        if u <= 0.0 {
            return self.values[0];
        }
        if u >= (n - 1) as f64 {
            return self.values[n - 1];
        }
        let i = (u.floor() as usize).min(n - 2);
        let t = u - i as f64;
        if t == 0.0 {
            return self.values[i];
        }
        let start = i.saturating_sub(1).min(n - 4);
        let w = lagrange_weights(u - start as f64);
        (0..4).map(|k| w[k] * self.values[start + k]).sum()
    }
}

/// Weights at position `u` (in node units) relative to nodes 0..4.
fn lagrange_weights(u: f64) -> [f64; 4] {
    cubic_weights(u - 1.0)
}

/// Cubic Lagrange interpolation through (up to) four points with arbitrary
/// abscissae. Used for interpolation in `s` between stored ticks.
pub fn lagrange(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..xs.len() {
        let mut w = 1.0;
        for j in 0..xs.len() {
            if i != j {
                w *= (x - xs[j]) / (xs[i] - xs[j]);
            }
        }
        acc += w * ys[i];
    }
    acc
}

/// Least-squares slope of `ys` against `xs`.
pub fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return 0.0;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Growth allowed between the first and the last third of a bounded series.
pub const GROWTH_FACTOR: f64 = 2.0;

/// Series whose values all stay below this are roundoff and count as bounded.
pub const NOISE_FLOOR: f64 = 1e-8;

/// Summary of a diagnostic series that should stay bounded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Boundedness {
    /// Largest value over the series: the measured constant.
    pub constant: f64,
    pub first_third_max: f64,
    pub last_third_max: f64,
    /// Finite everywhere and the last-third maximum is at most
    /// [`GROWTH_FACTOR`] times the first-third maximum, or below
    /// [`NOISE_FLOOR`].
    pub bounded: bool,
}

pub fn boundedness(values: &[f64]) -> Boundedness {
    let n = values.len();
    let third = (n / 3).max(1);
    let max_of = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    let finite = values.iter().all(|v| v.is_finite());
    let first = max_of(&values[..third.min(n)]);
    let last = max_of(&values[n.saturating_sub(third)..]);
    let constant = max_of(values);
    Boundedness {
        constant,
        first_third_max: first,
        last_third_max: last,
        bounded: finite && n > 0 && (last <= GROWTH_FACTOR * first || constant <= NOISE_FLOOR),
    }
}
