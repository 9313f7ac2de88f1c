//! Flat `key = value` configuration covering every tunable of a run.
//!
//! Blank lines and lines starting with `#` are ignored. Later assignments
//! override earlier ones, so command-line overrides are applied last.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::decomposition::ShrinkingParams;
use crate::shooting::{ShootParams, Subspace};
use crate::solver::{Advection, BoundaryCondition, Scheme, SolverConfig, Terms, YmaxPolicy};
use crate::{Error, Result};

/// Settings of single runs and of the search.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    /// Length of the required trapped window, `s_max = s0 + horizon`.
    pub horizon: f64,
    /// Extra search length beyond the horizon; the stored record covers
    /// `s0 + horizon + margin` and verification trims it back.
    pub margin: f64,
    pub params: ShootParams,
    pub budget: usize,
    pub workers: usize,
    pub seed: u64,
    pub subspace: Option<Subspace>,
    pub snapshots: bool,
    /// Random draws for the exit-mode census, 0 to skip.
    pub probes: usize,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            horizon: 10.0,
            margin: 0.0,
            params: ShootParams::default(),
            budget: 400,
            workers: 1,
            seed: 0,
            subspace: None,
            snapshots: true,
            probes: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifySettings {
    pub eta0: f64,
    /// Threshold sweep for the stability of the single-point verdicts.
    pub eta0_sweep: Vec<f64>,
    pub radius: f64,
    /// Matching points; empty means quarter decades `10^(-j/4)`, `j = 4..=60`.
    pub x_list: Vec<f64>,
    pub k0_sweep: Vec<f64>,
    pub points: Vec<f64>,
}

impl Default for VerifySettings {
    fn default() -> Self {
        Self {
            eta0: 0.1,
            eta0_sweep: vec![0.05, 0.1, 0.2, 0.5],
            radius: 2.0,
            x_list: Vec::new(),
            k0_sweep: vec![8.0, 10.0, 12.0],
            points: vec![0.0, 1e-6, 1e-4, 1e-2],
        }
    }
}

impl VerifySettings {
    pub fn matching_points(&self) -> Vec<f64> {
        if self.x_list.is_empty() {
            (4..=60).map(|j| 10f64.powf(-(j as f64) / 4.0)).collect()
        } else {
            self.x_list.clone()
        }
    }
}

/// Fault injection for exercising failure paths.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Hooks {
    /// Degree whose tabulated norm is perturbed in the basis check.
    pub corrupt_norm: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    pub shrinking: ShrinkingParams,
    pub solver: SolverConfig,
    pub run: RunSettings,
    pub verify: VerifySettings,
    pub hooks: Hooks,
}

/// Every recognised key.
pub const KEYS: &[&str] = &[
    "A",
    "At",
    "Bt",
    "eta",
    "alpha",
    "K0",
    "s0",
    "ds",
    "h",
    "ymax_policy",
    "ymax_min",
    "ymax_factor",
    "ymax",
    "scheme",
    "bc",
    "advection",
    "cadence",
    "potential",
    "nonlinear",
    "residual",
    "horizon",
    "margin",
    "d0",
    "d1",
    "dt0",
    "dt1",
    "budget",
    "workers",
    "seed",
    "subspace",
    "snapshots",
    "probes",
    "eta0",
    "eta0_sweep",
    "radius",
    "x_list",
    "k0_sweep",
    "points",
    "hook.corrupt_norm",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::BadValue {
        key: key.to_string(),
        value: value.to_string(),
    })
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::BadValue {
            key: key.to_string(),
            value: value.to_string(),
        }),
    }
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|v| parse(key, v.trim())).collect()
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(",")
}

impl Config {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Malformed {
                path: format!("line {}", n + 1),
                reason: format!("expected key=value, got `{line}`"),
            })?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    /// Applies an override of the form `KEY=VALUE`.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment.split_once('=').ok_or_else(|| Error::BadValue {
            key: assignment.to_string(),
            value: String::new(),
        })?;
        self.set(k.trim(), v.trim())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let sp = &mut self.shrinking;
        let sc = &mut self.solver;
        let run = &mut self.run;
        let ver = &mut self.verify;
        match key {
            "A" => sp.a = parse(key, value)?,
            "At" => sp.at = parse(key, value)?,
            "Bt" => sp.bt = parse(key, value)?,
            "eta" => sp.eta = parse(key, value)?,
            "alpha" => sp.alpha = parse(key, value)?,
            "K0" => sp.k0 = parse(key, value)?,
            "s0" => sp.s0 = parse(key, value)?,
            "ds" => sc.ds = parse(key, value)?,
            "h" => sc.h = parse(key, value)?,
            "ymax_policy" => {
                let (min, factor) = policy_numbers(sc.ymax_policy);
                sc.ymax_policy = match value {
                    "horizon" => YmaxPolicy::Horizon { min, factor },
                    "regrid" => YmaxPolicy::Regrid { min, factor },
                    "fixed" => YmaxPolicy::Fixed(min),
                    _ => return Err(bad(key, value)),
                }
            }
            "ymax_min" | "ymax_factor" => {
                let v: f64 = parse(key, value)?;
                sc.ymax_policy = match (sc.ymax_policy, key) {
                    (YmaxPolicy::Horizon { factor, .. }, "ymax_min") => YmaxPolicy::Horizon { min: v, factor },
                    (YmaxPolicy::Horizon { min, .. }, _) => YmaxPolicy::Horizon { min, factor: v },
                    (YmaxPolicy::Regrid { factor, .. }, "ymax_min") => YmaxPolicy::Regrid { min: v, factor },
                    (YmaxPolicy::Regrid { min, .. }, _) => YmaxPolicy::Regrid { min, factor: v },
                    (p @ YmaxPolicy::Fixed(_), _) => p,
                }
            }
            "ymax" => sc.ymax_policy = YmaxPolicy::Fixed(parse(key, value)?),
            "scheme" => {
                sc.scheme = match value {
                    "imex" => Scheme::Imex,
                    "explicit" => Scheme::Explicit,
                    _ => return Err(bad(key, value)),
                }
            }
            "bc" => {
                sc.bc = match value {
                    "outer-ode" => BoundaryCondition::OuterOde,
                    "neumann" => BoundaryCondition::Neumann,
                    _ => return Err(bad(key, value)),
                }
            }
            "advection" => {
                sc.advection = match value {
                    "central" => Advection::Central,
                    "upwind" => Advection::Upwind,
                    _ => return Err(bad(key, value)),
                }
            }
            "cadence" => sc.cadence = parse(key, value)?,
            "potential" => sc.terms.potential = parse_bool(key, value)?,
            "nonlinear" => sc.terms.nonlinear = parse_bool(key, value)?,
            "residual" => sc.terms.residual = parse_bool(key, value)?,
            "horizon" => run.horizon = parse(key, value)?,
            "margin" => run.margin = parse(key, value)?,
            "d0" => run.params.d0 = parse(key, value)?,
            "d1" => run.params.d1 = parse(key, value)?,
            "dt0" => run.params.dt0 = parse(key, value)?,
            "dt1" => run.params.dt1 = parse(key, value)?,
            "budget" => run.budget = parse(key, value)?,
            "workers" => run.workers = parse(key, value)?,
            "seed" => run.seed = parse(key, value)?,
            "subspace" => {
                run.subspace = match value {
                    "auto" => None,
                    "even-real" => Some(Subspace::EvenReal),
                    "even" => Some(Subspace::Even),
                    "full" => Some(Subspace::Full),
                    _ => return Err(bad(key, value)),
                }
            }
            "snapshots" => run.snapshots = parse_bool(key, value)?,
            "probes" => run.probes = parse(key, value)?,
            "eta0" => ver.eta0 = parse(key, value)?,
            "eta0_sweep" => ver.eta0_sweep = parse_list(key, value)?,
            "radius" => ver.radius = parse(key, value)?,
            "x_list" => ver.x_list = parse_list(key, value)?,
            "k0_sweep" => ver.k0_sweep = parse_list(key, value)?,
            "points" => ver.points = parse_list(key, value)?,
            "hook.corrupt_norm" => {
                self.hooks.corrupt_norm = if value == "none" {
                    None
                } else {
                    Some(parse(key, value)?)
                }
            }
            _ => return Err(Error::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Checks cross-field constraints.
    pub fn validate(&self) -> Result<()> {
        self.shrinking.validate()?;
        if !(self.solver.ds > 0.0) || !(self.solver.h > 0.0) {
            return Err(Error::invalid("ds", "ds and h must be positive"));
        }
        self.solver.steps_per_tick()?;
        if !(self.run.horizon > 0.0) || !(self.run.margin >= 0.0) {
            return Err(Error::invalid(
                "horizon",
                "horizon must be positive, margin non-negative",
            ));
        }
        ShootParams::from_array(self.run.params.to_array())?;
        Ok(())
    }

    /// `s0 + horizon + margin`.
    pub fn s_max(&self) -> f64 {
        self.shrinking.s0 + self.run.horizon + self.run.margin
    }

    /// `s0 + horizon`.
    pub fn s_verify(&self) -> f64 {
        self.shrinking.s0 + self.run.horizon
    }

    /// Every key with its current value, in a form accepted by
    /// [`Config::apply_text`].
    pub fn to_text(&self) -> String {
        let sp = &self.shrinking;
        let sc = &self.solver;
        let run = &self.run;
        let ver = &self.verify;
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k}={v}");
        };
        put("A", format!("{:e}", sp.a));
        put("At", format!("{:e}", sp.at));
        put("Bt", format!("{:e}", sp.bt));
        put("eta", format!("{:e}", sp.eta));
        put("alpha", format!("{:e}", sp.alpha));
        put("K0", format!("{:e}", sp.k0));
        put("s0", format!("{:e}", sp.s0));
        put("ds", format!("{:e}", sc.ds));
        put("h", format!("{:e}", sc.h));
        match sc.ymax_policy {
            YmaxPolicy::Horizon { min, factor } => {
                put("ymax_policy", "horizon".into());
                put("ymax_min", format!("{min:e}"));
                put("ymax_factor", format!("{factor:e}"));
            }
            YmaxPolicy::Regrid { min, factor } => {
                put("ymax_policy", "regrid".into());
                put("ymax_min", format!("{min:e}"));
                put("ymax_factor", format!("{factor:e}"));
            }
            YmaxPolicy::Fixed(v) => put("ymax", format!("{v:e}")),
        }
        put(
            "scheme",
            match sc.scheme {
                Scheme::Imex => "imex",
                Scheme::Explicit => "explicit",
            }
            .into(),
        );
        put(
            "bc",
            match sc.bc {
                BoundaryCondition::OuterOde => "outer-ode",
                BoundaryCondition::Neumann => "neumann",
            }
            .into(),
        );
        put(
            "advection",
            match sc.advection {
                Advection::Central => "central",
                Advection::Upwind => "upwind",
            }
            .into(),
        );
        put("cadence", format!("{:e}", sc.cadence));
        let Terms {
            potential,
            nonlinear,
            residual,
        } = sc.terms;
        put("potential", potential.to_string());
        put("nonlinear", nonlinear.to_string());
        put("residual", residual.to_string());
        put("horizon", format!("{:e}", run.horizon));
        put("margin", format!("{:e}", run.margin));
        put("d0", format!("{:.16e}", run.params.d0));
        put("d1", format!("{:.16e}", run.params.d1));
        put("dt0", format!("{:.16e}", run.params.dt0));
        put("dt1", format!("{:.16e}", run.params.dt1));
        put("budget", run.budget.to_string());
        put("workers", run.workers.to_string());
        put("seed", run.seed.to_string());
        put(
            "subspace",
            match run.subspace {
                None => "auto",
                Some(Subspace::EvenReal) => "even-real",
                Some(Subspace::Even) => "even",
                Some(Subspace::Full) => "full",
            }
            .into(),
        );
        put("snapshots", run.snapshots.to_string());
        put("probes", run.probes.to_string());
        put("eta0", format!("{:e}", ver.eta0));
        put("eta0_sweep", join(&ver.eta0_sweep));
        put("radius", format!("{:e}", ver.radius));
        put("x_list", join(&ver.x_list));
        put("k0_sweep", join(&ver.k0_sweep));
        put("points", join(&ver.points));
        put(
            "hook.corrupt_norm",
            self.hooks.corrupt_norm.map_or("none".into(), |m| m.to_string()),
        );
        out
    }
}

fn bad(key: &str, value: &str) -> Error {
    Error::BadValue {
        key: key.to_string(),
        value: value.to_string(),
    }
}

fn policy_numbers(p: YmaxPolicy) -> (f64, f64) {
    match p {
        YmaxPolicy::Horizon { min, factor } | YmaxPolicy::Regrid { min, factor } => (min, factor),
        YmaxPolicy::Fixed(v) => (v, 3.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_through_text() {
        let mut c = Config::default();
        c.apply_text("# comment\nA = 25\nBt=0\nscheme=explicit\nx_list=1e-3, 1e-4\nsubspace=full\n")
            .unwrap();
        assert_eq!(c.shrinking.a, 25.0);
        assert_eq!(c.solver.scheme, Scheme::Explicit);
        assert_eq!(c.verify.x_list, vec![1e-3, 1e-4]);
        let mut d = Config::default();
        d.apply_text(&c.to_text()).unwrap();
        assert_eq!(c, d);
    }

    #[test]
    fn every_key_is_listed_in_the_dump() {
        let text = Config::default().to_text();
        for key in KEYS {
            if *key == "ymax" {
                continue;
            }
            assert!(text.lines().any(|l| l.starts_with(&format!("{key}="))), "{key}");
        }
    }

    #[test]
    fn unknown_and_bad_values() {
        let mut c = Config::default();
        assert!(matches!(c.set("bogus", "1"), Err(Error::UnknownKey(k)) if k == "bogus"));
        assert!(matches!(c.set("A", "lots"), Err(Error::BadValue { .. })));
        assert!(c.apply_text("no equals sign").is_err());
        assert!(c.apply_override("K0=12").is_ok());
        assert_eq!(c.shrinking.k0, 12.0);
    }

    #[test]
    fn ymax_policy_keys() {
        let mut c = Config::default();
        c.set("ymax_min", "50").unwrap();
        c.set("ymax_policy", "regrid").unwrap();
        assert_eq!(c.solver.ymax_policy, YmaxPolicy::Regrid { min: 50.0, factor: 3.0 });
        c.set("ymax", "80").unwrap();
        assert_eq!(c.solver.ymax_policy, YmaxPolicy::Fixed(80.0));
    }
}
