//! Exact semigroup of the free operator `L` through the Mehler kernel
//!
//! `exp(psi L)(y, x) = e^psi / sqrt(4 pi (1 - e^-psi)) exp(-(y e^(-psi/2) - x)^2 / (4 (1 - e^-psi)))`.
//!
//! For fixed `y` this is `e^psi` times a normal density in `x` with mean
//! `y e^(-psi/2)` and variance `2 (1 - e^-psi)`, so the integral is taken on
//! its own uniform grid around that mean, independent of any field grid.

use rayon::prelude::*;
use statrs::function::erf::erfc;
use std::f64::consts::PI;

use crate::{Error, Result};

fn check_psi(psi: f64) -> Result<()> {
    if !(psi > 0.0) || !psi.is_finite() {
        return Err(Error::invalid("psi", format!("{psi} must be positive")));
    }
    Ok(())
}

pub fn mehler_kernel(psi: f64, y: f64, x: f64) -> Result<f64> {
    check_psi(psi)?;
    let one_minus = -(-psi).exp_m1();
    let d = y * (-psi / 2.0).exp() - x;
    Ok(psi.exp() / (4.0 * PI * one_minus).sqrt() * (-d * d / (4.0 * one_minus)).exp())
}

#[derive(Debug, Clone, Copy)]
pub struct SemigroupOptions {
    /// Half-width of the integration window in kernel standard deviations.
    pub window_sigmas: f64,
    /// Integration nodes per standard deviation.
    pub points_per_sigma: f64,
    /// Estimated tail contributions above this are flagged.
    pub tail_tolerance: f64,
}

impl Default for SemigroupOptions {
    fn default() -> Self {
        Self {
            window_sigmas: 12.0,
            points_per_sigma: 10.0,
            tail_tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SemigroupOutput {
    pub values: Vec<f64>,
    /// Per output node, estimated contribution of the kernel mass left out
    /// of the integration window.
    pub tail_estimate: Vec<f64>,
    pub truncated: bool,
}

/// `(exp(psi L) g)(y)` at one point, with its tail estimate.
/// `domain` restricts where `g` may be evaluated.
fn apply_at<F: Fn(f64) -> f64>(psi: f64, g: &F, y: f64, domain: (f64, f64), opts: &SemigroupOptions) -> (f64, f64) {
    let var = -2.0 * (-psi).exp_m1();
    let sigma = var.sqrt();
    let center = y * (-psi / 2.0).exp();
    let lo = (center - opts.window_sigmas * sigma).max(domain.0);
    let hi = (center + opts.window_sigmas * sigma).min(domain.1);
    let growth = psi.exp();
    if hi <= lo {
        return (0.0, growth * g(center.clamp(domain.0, domain.1)).abs());
    }
    let n = (((hi - lo) / sigma) * opts.points_per_sigma).ceil().max(8.0) as usize;
    let dx = (hi - lo) / n as f64;
    let norm = 1.0 / (2.0 * PI * var).sqrt();
    let mut acc = 0.0;
    for i in 0..=n {
        let x = lo + i as f64 * dx;
        let t = (x - center) / sigma;
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        acc += w * (-0.5 * t * t).exp() * g(x);
    }
    let value = growth * norm * dx * acc;
    let mass_left = 0.5 * erfc((center - lo) / (sigma * 2f64.sqrt()));
    let mass_right = 0.5 * erfc((hi - center) / (sigma * 2f64.sqrt()));
    let tail = growth * (mass_left * g(lo).abs() + mass_right * g(hi).abs());
    (value, tail)
}

/// Applies `exp(psi L)` to a function of `x`, evaluated at every output node.
pub fn apply_semigroup<F>(psi: f64, g: F, ys: &[f64], opts: &SemigroupOptions) -> Result<SemigroupOutput>
where
    F: Fn(f64) -> f64 + Sync,
{
    check_psi(psi)?;
    let domain = (f64::NEG_INFINITY, f64::INFINITY);
    let (values, tail_estimate): (Vec<f64>, Vec<f64>) =
        ys.par_iter().map(|&y| apply_at(psi, &g, y, domain, opts)).unzip();
    let truncated = tail_estimate.iter().any(|&t| t > opts.tail_tolerance);
    Ok(SemigroupOutput {
        values,
        tail_estimate,
        truncated,
    })
}

/// Same as [`apply_semigroup`] for samples on a uniform grid, interpolated
/// with cubic Lagrange polynomials. Kernel mass beyond the grid ends is
/// counted in the tail estimate.
pub fn apply_semigroup_sampled(
    psi: f64,
    grid: &[f64],
    samples: &[f64],
    ys: &[f64],
    opts: &SemigroupOptions,
) -> Result<SemigroupOutput> {
    check_psi(psi)?;
    if grid.len() != samples.len() {
        return Err(Error::GridMismatch {
            expected: grid.len(),
            got: samples.len(),
        });
    }
    let interp = crate::stats::UniformCubic::new(grid, samples)?;
    let domain = (grid[0], grid[grid.len() - 1]);
    let g = |x: f64| interp.eval(x);
    let (values, tail_estimate): (Vec<f64>, Vec<f64>) =
        ys.par_iter().map(|&y| apply_at(psi, &g, y, domain, opts)).unzip();
    let truncated = tail_estimate.iter().any(|&t| t > opts.tail_tolerance);
    Ok(SemigroupOutput {
        values,
        tail_estimate,
        truncated,
    })
}

/// `(1 + |y|^3)`-weighted sup norm.
pub fn weighted_sup(ys: &[f64], values: &[f64]) -> f64 {
    ys.iter()
        .zip(values)
        .map(|(y, v)| v.abs() / (1.0 + y.abs().powi(3)))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::hermite;

    fn probe() -> Vec<f64> {
        (-50..=50).map(|i| i as f64 * 0.1).collect()
    }

    #[test]
    fn kernel_rejects_nonpositive_time() {
        assert!(mehler_kernel(0.0, 1.0, 1.0).is_err());
        assert!(mehler_kernel(-0.5, 1.0, 1.0).is_err());
        assert!(mehler_kernel(0.3, 1.0, 1.0).unwrap() > 0.0);
    }

    /// Plain trapezoid over a wide window, directly on the kernel formula.
    fn moment(psi: f64, y: f64, g: impl Fn(f64) -> f64) -> f64 {
        let (lo, hi, n) = (-60.0, 60.0, 120_000);
        let dx = (hi - lo) / n as f64;
        (0..=n)
            .map(|i| {
                let x = lo + i as f64 * dx;
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                w * mehler_kernel(psi, y, x).unwrap() * g(x)
            })
            .sum::<f64>()
            * dx
    }

    #[test]
    fn kernel_moments_follow_eigenvalues() {
        for &psi in &[0.1, 0.5, 1.0] {
            for &y in &[-2.0, 0.0, 1.5, 3.0] {
                let m0 = moment(psi, y, |_| 1.0);
                assert!((m0 - psi.exp()).abs() < 1e-9 * psi.exp());
                let m1 = moment(psi, y, |x| x);
                assert!((m1 - (psi / 2.0).exp() * y).abs() < 1e-9);
                let m2 = moment(psi, y, |x| x * x - 2.0);
                assert!((m2 - (y * y - 2.0)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn eigen_relations_for_low_modes() {
        let ys = probe();
        let opts = SemigroupOptions::default();
        for m in 0..=4 {
            for &psi in &[0.1, 0.5, 1.0] {
                let out = apply_semigroup(psi, |x| hermite(m, x).unwrap(), &ys, &opts).unwrap();
                let rate = ((1.0 - m as f64 / 2.0) * psi).exp();
                let mut err = 0.0f64;
                let mut scale = 0.0f64;
                for (y, v) in ys.iter().zip(&out.values) {
                    let exact = rate * hermite(m, *y).unwrap();
                    err = err.max((v - exact).abs());
                    scale = scale.max(exact.abs());
                }
                assert!(err / scale < 1e-6, "m={m} psi={psi}: {}", err / scale);
                assert!(!out.truncated);
            }
        }
    }

    #[test]
    fn semigroup_composes() {
        let ys = probe();
        let opts = SemigroupOptions::default();
        let gauss = |x: f64| (-x * x / 4.0).exp();
        let inner = |x: f64| apply_at(0.25, &gauss, x, (f64::NEG_INFINITY, f64::INFINITY), &opts).0;
        let twice = apply_semigroup(0.25, inner, &ys, &opts).unwrap();
        let once = apply_semigroup(0.5, gauss, &ys, &opts).unwrap();
        let err = twice
            .values
            .iter()
            .zip(&once.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn weighted_growth_bound() {
        let ys: Vec<f64> = (-100..=100).map(|i| i as f64 * 0.1).collect();
        let opts = SemigroupOptions::default();
        for &psi in &[0.1, 0.5, 1.0] {
            let g = |x: f64| 1.0 + x.abs().powi(3);
            let out = apply_semigroup(psi, g, &ys, &opts).unwrap();
            let input = weighted_sup(&ys, &ys.iter().map(|&x| g(x)).collect::<Vec<_>>());
            let ratio = weighted_sup(&ys, &out.values) / (psi.exp() * input);
            // Minkowski: E|c + sigma Z|^3 <= (|c| + k sigma)^3, k = (E|Z|^3)^(1/3)
            let sigma = (-2.0 * (-psi).exp_m1()).sqrt();
            let k = (2.0 * (2.0 / PI).sqrt()).powf(1.0 / 3.0);
            assert!(ratio <= (1.0 + k * sigma).powi(3), "psi={psi}: {ratio}");
        }
    }

    #[test]
    fn sampled_input_flags_truncation() {
        let grid: Vec<f64> = (-100..=100).map(|i| i as f64 * 0.05).collect();
        let samples: Vec<f64> = grid.iter().map(|&x| 1.0 + x * x).collect();
        let out = apply_semigroup_sampled(1.0, &grid, &samples, &[0.0, 4.9], &SemigroupOptions::default()).unwrap();
        assert!(out.truncated);
        let gauss: Vec<f64> = grid.iter().map(|&x| (-x * x).exp()).collect();
        let out = apply_semigroup_sampled(0.2, &grid, &gauss, &[0.0, 0.5], &SemigroupOptions::default()).unwrap();
        assert!(!out.truncated);
    }
}
