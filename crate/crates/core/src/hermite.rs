//! Hermite modes of `L = d^2/dy^2 - (y/2) d/dy + 1` and quadrature for the
//! Gaussian weight `rho(y) = exp(-y^2/4) / sqrt(4 pi)`.
//!
//! `h_m` is the eigenfunction of `L` for the eigenvalue `1 - m/2`; with this
//! weight the family is orthogonal and `int h_m^2 rho = 2^m m!`.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::{Error, Result};

/// Largest degree accepted by [`hermite`] and [`hermite_norm_sq`].
pub const MAX_DEGREE: usize = 30;

/// Default number of Gauss-Hermite nodes.
pub const DEFAULT_NODES: usize = 128;

fn check_degree(m: usize) -> Result<()> {
    if m > MAX_DEGREE {
        return Err(Error::UnsupportedDegree {
            degree: m,
            cap: MAX_DEGREE,
        });
    }
    Ok(())
}

fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

/// `h_m(y) = sum_{n <= m/2} m! / (n! (m-2n)!) (-1)^n y^(m-2n)`.
///
/// Coefficients are formed in exact integer arithmetic and converted once.
pub fn hermite(m: usize, y: f64) -> Result<f64> {
    check_degree(m)?;
    let fm = factorial(m);
    // Horner in y^2 from the highest power down.
    let mut acc = 0.0;
    for n in 0..=m / 2 {
        let coeff = fm / (factorial(n) * factorial(m - 2 * n));
        let c = if n % 2 == 0 { coeff as f64 } else { -(coeff as f64) };
        acc += c * y.powi((m - 2 * n) as i32);
    }
    Ok(acc)
}

/// Samples `h_m` at every node.
pub fn hermite_on(m: usize, ys: &[f64]) -> Result<Vec<f64>> {
    check_degree(m)?;
    ys.iter().map(|&y| hermite(m, y)).collect()
}

/// `int h_m^2 rho dy = 2^m m!`.
pub fn hermite_norm_sq(m: usize) -> Result<f64> {
    check_degree(m)?;
    Ok(2f64.powi(m as i32) * factorial(m) as f64)
}

pub fn rho(y: f64) -> f64 {
    (-y * y / 4.0).exp() / (4.0 * PI).sqrt()
}

/// Nodes and weights approximating `int g(y) rho(y) dy` by `sum w_i g(y_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    extent: f64,
}

impl QuadratureGrid {
    /// Gauss-Hermite rule rescaled to the variance-2 weight.
    pub fn gauss_hermite(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n", "need at least one node"));
        }
        let (x, w) = gauss_hermite_physicists(n);
        // int g(y) rho(y) dy = int g(2x) exp(-x^2) / sqrt(pi) dx
        let nodes: Vec<f64> = x.iter().map(|&xi| 2.0 * xi).collect();
        let weights: Vec<f64> = w.iter().map(|&wi| wi / PI.sqrt()).collect();
        let extent = nodes.last().copied().unwrap_or(0.0);
        Ok(Self { nodes, weights, extent })
    }

    /// Trapezoidal rule on a uniform symmetric grid. For the Gaussian weight
    /// this converges faster than any power of the spacing.
    pub fn uniform(ys: &[f64]) -> Result<Self> {
        if ys.len() < 3 {
            return Err(Error::invalid("ys", "need at least three nodes"));
        }
        let h = ys[1] - ys[0];
        let last = ys.len() - 1;
        let weights = ys
            .iter()
            .enumerate()
            .map(|(i, &y)| {
                let end = if i == 0 || i == last { 0.5 } else { 1.0 };
                end * h * rho(y)
            })
            .collect();
        Ok(Self {
            nodes: ys.to_vec(),
            weights,
            extent: ys[last],
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn check(&self, n: usize) -> Result<()> {
        if n != self.nodes.len() {
            return Err(Error::GridMismatch {
                expected: self.nodes.len(),
                got: n,
            });
        }
        Ok(())
    }

    /// `int f g rho dy` for real samples.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> Result<f64> {
        self.check(f.len())?;
        self.check(g.len())?;
        Ok(self
            .weights
            .iter()
            .zip(f.iter().zip(g))
            .map(|(w, (a, b))| w * a * b)
            .sum())
    }
}

/// `int f conj(g) rho dy` for complex samples on `grid`.
pub fn inner_rho(f: &[Complex64], g: &[Complex64], grid: &QuadratureGrid) -> Result<Complex64> {
    grid.check(f.len())?;
    grid.check(g.len())?;
    Ok(grid
        .weights
        .iter()
        .zip(f.iter().zip(g))
        .map(|(&w, (a, b))| a * b.conj() * w)
        .sum())
}

/// Nodes (ascending) and weights for `int g(x) exp(-x^2) dx`, by Newton
/// iteration on the orthonormal Hermite recurrence.
fn gauss_hermite_physicists(n: usize) -> (Vec<f64>, Vec<f64>) {
    let pim4 = PI.powf(-0.25);
    let nf = n as f64;
    let m = n.div_ceil(2);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut z = 0.0f64;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    if n % 2 == 1 {
        x[m - 1] = 0.0;
    }
    x.reverse();
    w.reverse();
    (x, w)
}
