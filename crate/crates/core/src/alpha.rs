//! Closed-form background `alpha` from its initial data by d'Alembert's formula,
//! the conjugate potential `beta`, gradient classification and `kappa`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{BzError, Result};
use crate::fields::{null_coords, Grid1D, SpacetimePoint};
use crate::profile::Profile;

pub const DEFAULT_GAMMA: f64 = 0.05;
pub const DEFAULT_DELTA: f64 = 0.25;

fn one() -> f64 {
    1.0
}
fn default_gamma() -> f64 {
    DEFAULT_GAMMA
}
fn default_delta() -> f64 {
    DEFAULT_DELTA
}
fn default_sample_radius() -> f64 {
    20.0
}

/// Initial data `(alpha0~, alpha1)` of `alpha` and the smallness parameters.
///
/// `alpha(0,x) = scale * (1 + alpha0~(x))`, `dt alpha(0,x) = scale * alpha1(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaData {
    #[serde(default = "zero_profile")]
    pub alpha0_tilde: Profile,
    #[serde(default = "zero_profile")]
    pub alpha1: Profile,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "one")]
    pub k1: f64,
    #[serde(default = "one")]
    pub k2: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Gauge factor `c1` multiplying `alpha` and `beta`.
    #[serde(default = "one")]
    pub scale: f64,
    /// Half-width of the sample window used by validation.
    #[serde(default = "default_sample_radius")]
    pub sample_radius: f64,
}

fn zero_profile() -> Profile {
    Profile::Zero
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct AlphaJet2 {
    pub alpha: f64,
    pub dt: f64,
    pub dx: f64,
    pub dtt: f64,
    pub dtx: f64,
    pub dxx: f64,
}

impl AlphaJet2 {
    /// `(dx alpha)^2 - (dt alpha)^2`.
    pub fn gradient_norm(&self) -> f64 {
        self.dx * self.dx - self.dt * self.dt
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaJet {
    pub beta: f64,
    pub dt: f64,
    pub dx: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientClass {
    Timelike,
    Spacelike,
    Null,
}

impl AlphaData {
    pub fn new(alpha0_tilde: Profile, alpha1: Profile) -> Self {
        Self {
            alpha0_tilde,
            alpha1,
            gamma: DEFAULT_GAMMA,
            k1: 1.0,
            k2: 1.0,
            delta: DEFAULT_DELTA,
            scale: 1.0,
            sample_radius: default_sample_radius(),
        }
    }

    pub fn zero() -> Self {
        Self::new(Profile::Zero, Profile::Zero)
    }

    /// `alpha = 1 + c t` (test-only datum).
    pub fn linear_in_time(c: f64) -> Self {
        Self::new(Profile::Zero, Profile::Constant { value: c })
    }

    /// `alpha = x`, the cylindrical (radial) choice.
    pub fn radial() -> Self {
        Self::new(
            Profile::Linear {
                slope: 1.0,
                intercept: -1.0,
            },
            Profile::Zero,
        )
    }

    pub fn eval(&self, p: SpacetimePoint) -> Result<AlphaJet2> {
        let (a, b) = (p.x + p.t, p.x - p.t);
        let a0 = &self.alpha0_tilde;
        let a1 = &self.alpha1;
        let big_a = a1.antiderivative(a)? - a1.antiderivative(b)?;
        let k = 0.5 * self.scale;
        let alpha = self.scale + k * (a0.value(a) + a0.value(b) + big_a);
        let (d0a, d0b) = (a0.deriv(a, 1), a0.deriv(b, 1));
        let (e0a, e0b) = (a0.deriv(a, 2), a0.deriv(b, 2));
        let (v1a, v1b) = (a1.value(a), a1.value(b));
        let (d1a, d1b) = (a1.deriv(a, 1), a1.deriv(b, 1));
        let dtt = k * (e0a + e0b + d1a - d1b);
        let jet = AlphaJet2 {
            alpha,
            dt: k * (d0a - d0b + v1a + v1b),
            dx: k * (d0a + d0b + v1a - v1b),
            dtt,
            dtx: k * (e0a - e0b + d1a + d1b),
            dxx: dtt,
        };
        if ![jet.alpha, jet.dt, jet.dx, jet.dtt, jet.dtx]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(BzError::NonFinite(format!("alpha jet at t={}, x={}", p.t, p.x)));
        }
        Ok(jet)
    }

    /// Same as [`eval`](Self::eval) but errors unless `alpha > 0`.
    pub fn eval_positive(&self, p: SpacetimePoint) -> Result<AlphaJet2> {
        let j = self.eval(p)?;
        if !(j.alpha > 0.0) {
            return Err(BzError::NonPositiveAlpha {
                alpha: j.alpha,
                t: p.t,
                x: p.x,
            });
        }
        Ok(j)
    }

    /// Jets at every node of `grid` at time `t`.
    pub fn eval_grid(&self, grid: &Grid1D, t: f64) -> Result<Vec<AlphaJet2>> {
        (0..grid.n)
            .into_par_iter()
            .map(|i| self.eval_positive(SpacetimePoint::new(t, grid.x(i))))
            .collect()
    }

    /// Conjugate potential with `dt beta = dx alpha`, `dx beta = dt alpha`.
    pub fn beta(&self, c: f64, p: SpacetimePoint) -> Result<BetaJet> {
        let (a, b) = (p.x + p.t, p.x - p.t);
        let a0 = &self.alpha0_tilde;
        let a1 = &self.alpha1;
        let k = 0.5 * self.scale;
        let sum_a = a1.antiderivative(a)? + a1.antiderivative(b)?;
        let (d0a, d0b) = (a0.deriv(a, 1), a0.deriv(b, 1));
        let (v1a, v1b) = (a1.value(a), a1.value(b));
        Ok(BetaJet {
            beta: c + k * (a0.value(a) - a0.value(b) + sum_a),
            dt: k * (d0a + d0b + v1a - v1b),
            dx: k * (d0a - d0b + v1a + v1b),
        })
    }

    pub fn is_test_only(&self) -> bool {
        self.alpha0_tilde.is_test_only() || self.alpha1.is_test_only()
    }

    pub fn validate(&self) -> ValidationReport {
        validate_alpha_data(self)
    }
}

/// Relative null tolerance: `|ax^2 - at^2| <= 1e-10 (ax^2 + at^2)` counts as null.
pub fn default_null_tol(j: &AlphaJet2) -> f64 {
    (1e-10 * (j.dx * j.dx + j.dt * j.dt)).max(f64::MIN_POSITIVE)
}

pub fn classify_gradient(j: &AlphaJet2, tol: f64) -> GradientClass {
    let g = j.gradient_norm();
    if g < -tol {
        GradientClass::Timelike
    } else if g > tol {
        GradientClass::Spacelike
    } else {
        GradientClass::Null
    }
}

/// `kappa = alpha / ((dx alpha)^2 - (dt alpha)^2)`.
pub fn kappa(j: &AlphaJet2) -> Result<f64> {
    kappa_with_tol(j, default_null_tol(j))
}

pub fn kappa_with_tol(j: &AlphaJet2, tol: f64) -> Result<f64> {
    let g = j.gradient_norm();
    if g.abs() <= tol {
        return Err(BzError::NullGradient(g));
    }
    Ok(j.alpha / g)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Unchecked,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub status: CheckStatus,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

pub const CHECK_POSITIVITY: &str = "alpha1_positive";
pub const CHECK_GAMMA: &str = "gamma_half_bound";
pub const CHECK_ENVELOPE_ALPHA0: &str = "envelope_alpha0";
pub const CHECK_ENVELOPE_ALPHA1: &str = "envelope_alpha1";
pub const CHECK_TIMELIKE: &str = "timelike_sufficient";
pub const CHECK_COMPATIBILITY: &str = "compatibility_conditions";

impl ValidationReport {
    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn status(&self, name: &str) -> Option<CheckStatus> {
        self.get(name).map(|c| c.status)
    }

    /// Failed checks among those relevant to the scenario.
    pub fn failures(&self, cosmological: bool) -> Vec<&Check> {
        self.checks
            .iter()
            .filter(|c| c.status == CheckStatus::Fail)
            .filter(|c| cosmological || (c.name != CHECK_POSITIVITY && c.name != CHECK_TIMELIKE))
            .collect()
    }

    pub fn passes(&self, cosmological: bool) -> bool {
        self.failures(cosmological).is_empty()
    }
}

/// Weight `(1 + u^2)^(1 + delta)`.
pub fn weight_varphi(u: f64, delta: f64) -> f64 {
    (1.0 + u * u).powf(1.0 + delta)
}

const VALIDATION_SAMPLES: usize = 24_001;

pub fn validate_alpha_data(d: &AlphaData) -> ValidationReport {
    let r = d.sample_radius;
    let s_at = |i: usize| -r + 2.0 * r * i as f64 / (VALIDATION_SAMPLES - 1) as f64;
    let a0 = &d.alpha0_tilde;
    let a1 = &d.alpha1;

    let mut min_a1 = f64::INFINITY;
    let mut sup_sum: f64 = 0.0;
    let mut env0: f64 = 0.0;
    let mut env1: f64 = 0.0;
    let mut timelike_margin = f64::INFINITY;
    for i in 0..VALIDATION_SAMPLES {
        let s = s_at(i);
        let v1 = a1.value(s);
        min_a1 = min_a1.min(v1);
        for n in 0..=2 {
            sup_sum = sup_sum.max(a0.deriv(s, n).abs() + a1.deriv(s, n).abs());
        }
        // s = 2u
        let w = weight_varphi(0.5 * s, d.delta).powf(0.75);
        for n in 1..=2 {
            env0 = env0.max(a0.deriv(s, n).abs() * w / (d.k1 * d.gamma));
        }
        for n in 0..=1 {
            env1 = env1.max(a1.deriv(s, n).abs() * w / (d.k2 * d.gamma));
        }
        timelike_margin = timelike_margin.min(v1 - a0.deriv(s, 1).abs());
    }
    let status = |ok: bool| if ok { CheckStatus::Pass } else { CheckStatus::Fail };
    let checks = vec![
        Check {
            name: CHECK_POSITIVITY.into(),
            status: status(min_a1 > 0.0),
            detail: format!("min alpha1 = {min_a1:.6e}"),
        },
        Check {
            name: CHECK_GAMMA.into(),
            status: status(sup_sum < 0.5 * d.gamma),
            detail: format!(
                "sup |alpha0~^(n)| + |alpha1^(n)| = {sup_sum:.6e} vs gamma/2 = {:.6e}",
                0.5 * d.gamma
            ),
        },
        Check {
            name: CHECK_ENVELOPE_ALPHA0.into(),
            status: status(env0 <= 1.0),
            detail: format!("max |alpha0~^(n)(2u)| varphi(u)^(3/4) / (K1 gamma) = {env0:.6e}"),
        },
        Check {
            name: CHECK_ENVELOPE_ALPHA1.into(),
            status: status(env1 <= 1.0),
            detail: format!("max |alpha1^(n)(2u)| varphi(u)^(3/4) / (K2 gamma) = {env1:.6e}"),
        },
        Check {
            name: CHECK_TIMELIKE.into(),
            status: status(timelike_margin > 0.0),
            detail: format!("min alpha1 - |alpha0~'| = {timelike_margin:.6e}"),
        },
        Check {
            name: CHECK_COMPATIBILITY.into(),
            status: CheckStatus::Unchecked,
            detail: "compatibility conditions of the full field equations are not formalized".into(),
        },
    ];
    ValidationReport { checks }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CosmologicalReport {
    pub alpha_positive: bool,
    pub dt_alpha_positive: bool,
    pub timelike: bool,
    pub lower_bound: bool,
    pub alpha_min: f64,
    pub dt_alpha_min: f64,
    /// max of `|dx alpha| / dt alpha`
    pub max_gradient_ratio: f64,
    pub c0: f64,
    pub samples: usize,
}

impl CosmologicalReport {
    pub fn passes(&self) -> bool {
        self.alpha_positive && self.dt_alpha_positive && self.timelike && self.lower_bound
    }
}

/// Samples `alpha` on `grid x [t0, t1]` (`nt` levels) and checks the cosmological conditions.
pub fn check_cosmological(
    d: &AlphaData,
    grid: &Grid1D,
    t0: f64,
    t1: f64,
    nt: usize,
    c0: f64,
) -> Result<CosmologicalReport> {
    let nt = nt.max(2);
    let mut rep = CosmologicalReport {
        alpha_positive: true,
        dt_alpha_positive: true,
        timelike: true,
        lower_bound: true,
        alpha_min: f64::INFINITY,
        dt_alpha_min: f64::INFINITY,
        max_gradient_ratio: 0.0,
        c0,
        samples: 0,
    };
    for k in 0..nt {
        let t = t0 + (t1 - t0) * k as f64 / (nt - 1) as f64;
        let jets: Vec<AlphaJet2> = (0..grid.n)
            .into_par_iter()
            .map(|i| d.eval(SpacetimePoint::new(t, grid.x(i))))
            .collect::<Result<_>>()?;
        for j in &jets {
            rep.samples += 1;
            rep.alpha_min = rep.alpha_min.min(j.alpha);
            rep.dt_alpha_min = rep.dt_alpha_min.min(j.dt);
            if j.dt > 0.0 {
                rep.max_gradient_ratio = rep.max_gradient_ratio.max(j.dx.abs() / j.dt);
            } else {
                rep.max_gradient_ratio = f64::INFINITY;
            }
            rep.alpha_positive &= j.alpha > 0.0;
            rep.dt_alpha_positive &= j.dt > 0.0;
            rep.timelike &= classify_gradient(j, default_null_tol(j)) == GradientClass::Timelike;
            rep.lower_bound &= j.alpha > c0;
        }
    }
    Ok(rep)
}

/// Sampled null coordinates helper for envelope diagnostics.
pub fn envelope_at(d: &AlphaData, p: SpacetimePoint) -> (f64, f64) {
    let n = null_coords(p);
    (weight_varphi(n.u, d.delta), weight_varphi(n.ubar, d.delta))
}
