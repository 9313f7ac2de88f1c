//! Closed-form coefficients of the rescaled system.
//!
//! With `z = y / sqrt(s)`, the profile `f(z) = 8/(8+z^2)` solves
//! `-z f'/2 - f + f^2 = 0`, which collapses the residual of
//! `phi = f(z) + 1/(4s)` to
//! `R = (f'' + z f'/2 + f/2 - 1/4) / s + 5 / (16 s^2)`.

use crate::{Error, Result};

/// Default cutoff scale.
pub const DEFAULT_K0: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileConfig {
    pub k0: f64,
    pub s0: f64,
}

impl ProfileConfig {
    pub fn new(k0: f64, s0: f64) -> Result<Self> {
        if !(k0 >= 1.0) {
            return Err(Error::invalid("K0", format!("{k0} < 1")));
        }
        if !(s0 >= std::f64::consts::E) {
            return Err(Error::invalid("s0", format!("{s0} < e")));
        }
        Ok(Self { k0, s0 })
    }
}

impl Default for ProfileConfig {
    fn default() -> Self {
        Self {
            k0: DEFAULT_K0,
            s0: 20.0,
        }
    }
}

pub fn f_profile(z: f64) -> f64 {
    8.0 / (8.0 + z * z)
}

fn f_prime(z: f64) -> f64 {
    let d = 8.0 + z * z;
    -16.0 * z / (d * d)
}

fn f_second(z: f64) -> f64 {
    let z2 = z * z;
    let d = 8.0 + z2;
    (48.0 * z2 - 128.0) / (d * d * d)
}

pub fn phi(y: f64, s: f64) -> f64 {
    f_profile(y / s.sqrt()) + 0.25 / s
}

/// `V = 2 (phi - 1)`.
pub fn potential_v(y: f64, s: f64) -> f64 {
    2.0 * (phi(y, s) - 1.0)
}

/// `R = phi_yy - y phi_y / 2 - phi + phi^2 - phi_s`, in closed form.
pub fn residual_r(y: f64, s: f64) -> f64 {
    let z = y / s.sqrt();
    let bracket = f_second(z) + 0.5 * z * f_prime(z) + 0.5 * f_profile(z) - 0.25;
    bracket / s + 5.0 / (16.0 * s * s)
}

/// Smooth non-increasing bridge: 1 on `[0, 1]`, 0 on `[2, inf)`.
pub fn chi0(xi: f64) -> f64 {
    if xi <= 1.0 {
        return 1.0;
    }
    if xi >= 2.0 {
        return 0.0;
    }
    let bump = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
    let a = bump(2.0 - xi);
    let b = bump(xi - 1.0);
    a / (a + b)
}

/// `chi(y, s) = chi0(|y| / (K0 sqrt(s)))`.
pub fn cutoff_chi(y: f64, s: f64, k0: f64) -> f64 {
    chi0(y.abs() / (k0 * s.sqrt()))
}

/// `V(., s)` and `R(., s)` sampled on `ys`, written into the two buffers.
pub(crate) fn fill_coefficients(ys: &[f64], s: f64, v: &mut [f64], r: &mut [f64]) {
    let inv_sqrt = 1.0 / s.sqrt();
    let inv_s = 1.0 / s;
    let tail = 5.0 / (16.0 * s * s);
    for ((&y, vi), ri) in ys.iter().zip(v.iter_mut()).zip(r.iter_mut()) {
        let z = y * inv_sqrt;
        let z2 = z * z;
        let d = 8.0 + z2;
        let inv_d = 1.0 / d;
        let f = 8.0 * inv_d;
        let fp = -16.0 * z * inv_d * inv_d;
        let fpp = (48.0 * z2 - 128.0) * inv_d * inv_d * inv_d;
        *vi = 2.0 * (f + 0.25 * inv_s - 1.0);
        *ri = (fpp + 0.5 * z * fp + 0.5 * f - 0.25) * inv_s + tail;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::QuadratureGrid;

    #[test]
    fn profile_values() {
        assert_eq!(f_profile(0.0), 1.0);
        assert!((f_profile(8f64.sqrt()) - 0.5).abs() < 1e-15);
        let mut prev = f_profile(0.0);
        for i in 1..200 {
            let v = f_profile(i as f64 * 0.5);
            assert!(v < prev);
            prev = v;
        }
        assert!(f_profile(1e8) < 1e-15);
    }

    #[test]
    fn phi_values() {
        assert!((phi(0.0, 25.0) - 1.01).abs() < 1e-15);
        assert_eq!(phi(3.3, 17.0), phi(-3.3, 17.0));
        let s: f64 = 100.0;
        let expected = 8.0 / (8.0 + 400.0) + 1.0 / 400.0;
        assert!((phi(20.0 * s.sqrt(), s) - expected).abs() < 1e-15);
        assert!((expected - 0.0221078).abs() < 1e-7);
    }

    #[test]
    fn potential_values() {
        assert!((potential_v(0.0, 10.0) - 0.05).abs() < 1e-15);
        assert!((potential_v(1e9, 10.0) + 1.95).abs() < 1e-12);
        for i in 0..100 {
            assert!(potential_v(i as f64 * 3.0, 1.0 + i as f64) >= -2.0);
        }
    }

    #[test]
    fn residual_at_origin() {
        // f''(0) = -1/4, phi_s(0,s) = -1/(4 s^2), phi(phi-1) = 1/(4s) + 1/(16 s^2)
        let s: f64 = 10.0;
        let oracle = -0.25 / s + 0.25 / (s * s) + 0.25 / s + 1.0 / (16.0 * s * s);
        assert!((residual_r(0.0, 10.0) - 0.003125).abs() < 1e-15);
        assert!((residual_r(0.0, s) - oracle).abs() < 1e-15);
        assert_eq!(residual_r(4.2, 13.0), residual_r(-4.2, 13.0));
    }

    /// Central differences of `phi`. First derivatives use step 1e-5; the
    /// second derivative uses 1e-3, since at 1e-5 its rounding error alone
    /// is about 1e-6 in absolute terms.
    fn residual_fd(y: f64, s: f64) -> f64 {
        let h1 = 1e-5;
        let h2 = 1e-3;
        let p = phi(y, s);
        let py = (phi(y + h1, s) - phi(y - h1, s)) / (2.0 * h1);
        let pyy = (phi(y + h2, s) - 2.0 * p + phi(y - h2, s)) / (h2 * h2);
        let ps = (phi(y, s + h1) - phi(y, s - h1)) / (2.0 * h1);
        pyy - 0.5 * y * py - p + p * p - ps
    }

    #[test]
    fn residual_matches_finite_differences() {
        let mut count = 0;
        for i in 0..10 {
            let s = 10.0 + 5.0 * i as f64;
            for j in 0..10 {
                let y = -3.0 * s.sqrt() + j as f64 * 0.7 * s.sqrt();
                let exact = residual_r(y, s);
                let fd = residual_fd(y, s);
                let scale = exact.abs().max(0.25 / s);
                assert!((exact - fd).abs() <= 1e-6 * scale, "y={y} s={s}: {exact} vs {fd}");
                count += 1;
            }
        }
        assert_eq!(count, 100);
    }

    #[test]
    fn residual_sup_decays() {
        let sup = |s: f64| {
            (0..4000)
                .map(|i| residual_r(i as f64 * 0.05 * s.sqrt(), s).abs())
                .fold(0.0, f64::max)
        };
        assert!(sup(50.0) > sup(100.0));
        assert!(sup(100.0) > sup(400.0));
        assert!(sup(400.0) < 1e-3);
    }

    #[test]
    fn potential_weighted_norm_decreases() {
        let ys: Vec<f64> = (-800..=800).map(|i| i as f64 * 0.05).collect();
        let q = QuadratureGrid::uniform(&ys).unwrap();
        let norm = |s: f64| {
            let v: Vec<f64> = ys.iter().map(|&y| potential_v(y, s)).collect();
            q.inner(&v, &v).unwrap().sqrt()
        };
        let (a, b, c) = (norm(50.0), norm(100.0), norm(200.0));
        assert!(a > b && b > c, "{a} {b} {c}");
    }

    #[test]
    fn cutoff_shape() {
        let (s, k0) = (16.0, 10.0);
        let edge = k0 * 4.0;
        assert_eq!(cutoff_chi(0.0, s, k0), 1.0);
        assert_eq!(cutoff_chi(edge, s, k0), 1.0);
        assert_eq!(cutoff_chi(3.0 * edge, s, k0), 0.0);
        assert_eq!(cutoff_chi(2.0 * edge, s, k0), 0.0);
        let mid = cutoff_chi(1.5 * edge, s, k0);
        assert!(mid > 0.0 && mid < 1.0);
        assert_eq!(cutoff_chi(-1.7 * edge, s, k0), cutoff_chi(1.7 * edge, s, k0));
        let mut prev = 1.0;
        for i in 0..=1000 {
            let v = chi0(i as f64 * 0.003);
            assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn fill_matches_pointwise() {
        let ys: Vec<f64> = (-50..=50).map(|i| i as f64 * 0.9).collect();
        let mut v = vec![0.0; ys.len()];
        let mut r = vec![0.0; ys.len()];
        fill_coefficients(&ys, 21.5, &mut v, &mut r);
        for (i, &y) in ys.iter().enumerate() {
            assert!((v[i] - potential_v(y, 21.5)).abs() < 1e-14);
            assert!((r[i] - residual_r(y, 21.5)).abs() < 1e-15);
        }
    }

    #[test]
    fn config_validation() {
        assert!(ProfileConfig::new(0.5, 20.0).is_err());
        assert!(ProfileConfig::new(10.0, 2.0).is_err());
        assert!(ProfileConfig::new(10.0, 20.0).is_ok());
    }
}
