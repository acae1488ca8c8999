//! Closed-form solutions: Minkowski, traveling waves, the generalized Kasner
//! background, the Kasner 1-soliton, the Einstein-Rosen Bessel background and
//! the Einstein-Rosen 1-soliton.
//!
//! Every evaluator returns an [`ExactEval`] holding `(Lambda, phi)` with first
//! derivatives, the `alpha` jet and the metric block. Where no derivative is
//! available in closed form it is taken by a sixth-order central difference.

use serde::{Deserialize, Serialize};

use crate::alpha::{AlphaData, AlphaJet2};
use crate::error::{BzError, Result};
use crate::fields::{
    fields_from_metric, metric_from_fields, unwrap_angle, FieldState, FirstJet, Grid1D, MetricBlock, SpacetimePoint,
};
use crate::profile::Profile;
use crate::quadrature;
use crate::special::{j0, j1};

/// Step of the difference quotients used for non-analytic derivatives.
pub const FD_STEP: f64 = 2e-3;
/// Absolute tolerance of the line integrals defining `rho` for the ER soliton.
pub const RHO_TOL: f64 = 1e-12;

fn default_one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KasnerParams {
    pub d: f64,
    /// Constant `c` in the background conformal factor `f = c alpha^((d^2-1)/2)`.
    #[serde(default = "default_one")]
    pub f_scale: f64,
}

impl KasnerParams {
    pub fn new(d: f64) -> Self {
        Self { d, f_scale: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d >= 1.0) || !self.d.is_finite() {
            return Err(BzError::InvalidParameter(format!(
                "Kasner parameter d = {} must be >= 1",
                self.d
            )));
        }
        if !(self.f_scale > 0.0) {
            return Err(BzError::NonPositiveF(self.f_scale));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolitonParams {
    pub d: f64,
    /// Pole position.
    pub w: f64,
    #[serde(default)]
    pub c_beta: f64,
    #[serde(default)]
    pub c_rho: f64,
    /// Background `f` scale; when absent the soliton carries no conformal factor.
    #[serde(default)]
    pub f_scale: Option<f64>,
}

impl SolitonParams {
    pub fn new(d: f64, w: f64) -> Self {
        Self {
            d,
            w,
            c_beta: 0.0,
            c_rho: 0.0,
            f_scale: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        KasnerParams::new(self.d).validate()?;
        if !self.w.is_finite() || !self.c_beta.is_finite() || !self.c_rho.is_finite() {
            return Err(BzError::InvalidParameter("soliton parameters must be finite".into()));
        }
        if let Some(c) = self.f_scale {
            if !(c > 0.0) {
                return Err(BzError::NonPositiveF(c));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathOrder {
    /// Move in `t` at the base radius first, then in `r`.
    TimeFirst,
    /// Move in `r` at the base time first, then in `t`.
    RadiusFirst,
}

/// Einstein-Rosen seed `Lambda0 = offset + amplitude J0(r) sin t + log_coeff ln r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErSeed {
    #[serde(default)]
    pub offset: f64,
    #[serde(default = "default_one")]
    pub amplitude: f64,
    #[serde(default)]
    pub log_coeff: f64,
}

impl Default for ErSeed {
    fn default() -> Self {
        Self {
            offset: 0.0,
            amplitude: 1.0,
            log_coeff: 0.0,
        }
    }
}

impl ErSeed {
    /// `(Lambda0, dt, dr)`.
    pub fn jet(&self, t: f64, r: f64) -> FirstJet {
        let (s, c) = t.sin_cos();
        let (b0, b1) = (j0(r), j1(r));
        FirstJet::new(
            self.offset + self.amplitude * b0 * s + self.log_coeff * r.ln(),
            self.amplitude * b0 * c,
            -self.amplitude * b1 * s + self.log_coeff / r,
        )
    }

    /// `u0 = Lambda0 - ln r` and its derivatives.
    pub fn u0(&self, t: f64, r: f64) -> FirstJet {
        let j = self.jet(t, r);
        FirstJet::new(j.value - r.ln(), j.dt, j.dx - 1.0 / r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErSolitonParams {
    pub w: f64,
    /// `C > 0`, entering as `K = ln C`.
    #[serde(default = "default_one")]
    pub c: f64,
    pub branch: Branch,
    pub base: SpacetimePoint,
    #[serde(default)]
    pub rho_base: f64,
    pub path: PathOrder,
    #[serde(default)]
    pub seed: ErSeed,
}

impl ErSolitonParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) {
            return Err(BzError::InvalidParameter(format!("C = {} must be positive", self.c)));
        }
        if !(self.base.x > 0.0) {
            return Err(BzError::NonPositiveRadius(self.base.x));
        }
        Ok(())
    }
}

/// A closed-form family. `alpha` is implied for Minkowski, traveling waves and
/// the Einstein-Rosen families; the Kasner families use the supplied data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
#[allow(clippy::large_enum_variant)]
pub enum ExactFamily {
    /// Constant `(Lambda, phi)` on `alpha = 1`, `f = 1`.
    Minkowski {
        lambda: f64,
        phi: f64,
    },
    /// `Lambda = lambda + h(xi)`, `phi = k(xi)`, `alpha = 1 + l(xi)`,
    /// `f = 1 + m(xi)` with `xi = x - direction t`.
    Traveling {
        #[serde(default)]
        lambda: f64,
        h: Profile,
        k: Profile,
        l: Profile,
        m: Profile,
        direction: f64,
    },
    KasnerBackground(KasnerParams),
    KasnerSoliton(SolitonParams),
    ErBessel(ErSeed),
    ErSoliton(ErSolitonParams),
}

impl ExactFamily {
    pub fn name(&self) -> &'static str {
        match self {
            ExactFamily::Minkowski { .. } => "minkowski",
            ExactFamily::Traveling { .. } => "traveling",
            ExactFamily::KasnerBackground(_) => "kasner_background",
            ExactFamily::KasnerSoliton(_) => "kasner_soliton",
            ExactFamily::ErBessel(_) => "er_bessel",
            ExactFamily::ErSoliton(_) => "er_soliton",
        }
    }

    /// The background fixed by the family itself, if any.
    pub fn implied_alpha(&self) -> Option<AlphaData> {
        match self {
            ExactFamily::Minkowski { .. } => Some(AlphaData::zero()),
            ExactFamily::Traveling { l, direction, .. } => Some(traveling_alpha(l, *direction)),
            ExactFamily::ErBessel(_) | ExactFamily::ErSoliton(_) => Some(AlphaData::radial()),
            ExactFamily::KasnerBackground(_) | ExactFamily::KasnerSoliton(_) => None,
        }
    }

    /// The Einstein-Rosen families live on `r > 0` with a spacelike `alpha`.
    pub fn is_radial(&self) -> bool {
        matches!(self, ExactFamily::ErBessel(_) | ExactFamily::ErSoliton(_))
    }
}

/// `alpha = 1 + l(x - direction t)` as d'Alembert data.
pub fn traveling_alpha(l: &Profile, direction: f64) -> AlphaData {
    AlphaData::new(
        l.clone(),
        Profile::Derivative {
            base: Box::new(l.clone()),
            factor: -direction,
        },
    )
}

/// Soliton bookkeeping reported next to the fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolitonExtras {
    pub mu: f64,
    /// The conjugate root, so that `mu * mu_bar = alpha^2`.
    pub mu_bar: f64,
    pub rho: f64,
    /// `det g1 / alpha^2` of the assembled (unnormalized) block.
    pub det_ratio: f64,
    /// `cosh Lambda` in the convention of the unnormalized block, `trace / (2 alpha)`.
    pub raw_cosh_lambda: f64,
    /// `cosh Lambda` of the determinant-normalized block.
    pub cosh_lambda: f64,
    /// `|dr(dt rho) - dt(dr rho)|` at the point, when `rho` comes from a line integral.
    pub curl_witness: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactEval {
    pub family: &'static str,
    pub point: SpacetimePoint,
    pub lambda: FirstJet,
    pub phi: FirstJet,
    pub alpha: AlphaJet2,
    /// `ln f` with derivatives, when the family fixes `f`.
    pub ln_f: Option<FirstJet>,
    /// Normalized block, `det = alpha^2`.
    pub metric: MetricBlock,
    pub soliton: Option<SolitonExtras>,
}

/// A family together with its `alpha` data.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactSolution {
    pub family: ExactFamily,
    pub alpha: AlphaData,
}

impl ExactSolution {
    /// Uses the family's own `alpha` when it has one, otherwise `alpha` (required).
    pub fn new(family: ExactFamily, alpha: Option<AlphaData>) -> Result<Self> {
        let alpha = match family.implied_alpha() {
            Some(a) => a,
            None => {
                alpha.ok_or_else(|| BzError::InvalidParameter(format!("family {} needs alpha data", family.name())))?
            }
        };
        match &family {
            ExactFamily::KasnerBackground(k) => k.validate()?,
            ExactFamily::KasnerSoliton(s) => s.validate()?,
            ExactFamily::ErSoliton(e) => e.validate()?,
            ExactFamily::Traveling { direction, .. } if direction.abs() != 1.0 => {
                return Err(BzError::InvalidParameter(format!(
                    "direction {direction} must be +1 or -1"
                )));
            }
            _ => {}
        }
        Ok(Self { family, alpha })
    }

    pub fn eval(&self, p: SpacetimePoint) -> Result<ExactEval> {
        match &self.family {
            ExactFamily::Minkowski { lambda, phi } => eval_minkowski(*lambda, *phi, p),
            ExactFamily::Traveling {
                lambda,
                h,
                k,
                l,
                m,
                direction,
            } => eval_traveling(*lambda, h, k, l, m, *direction, p),
            ExactFamily::KasnerBackground(kp) => eval_kasner_background(kp, &self.alpha, p),
            ExactFamily::KasnerSoliton(sp) => eval_kasner_soliton(sp, &self.alpha, p),
            ExactFamily::ErBessel(seed) => eval_er_bessel(seed, p),
            ExactFamily::ErSoliton(ep) => eval_er_soliton(ep, p),
        }
    }

    /// The solution sampled on `grid` at time `t` as a state with `Lambda = lambda0 + Lambda~`.
    /// `ln f` is left at zero for families that do not fix `f`.
    pub fn sample_state(&self, grid: &Grid1D, t: f64, lambda0: f64) -> Result<FieldState> {
        use rayon::prelude::*;
        let evals: Vec<ExactEval> = (0..grid.n)
            .into_par_iter()
            .map(|i| self.eval(SpacetimePoint::new(t, grid.x(i))))
            .collect::<Result<_>>()?;
        let mut s = FieldState::zeros(grid.clone(), t, lambda0);
        let mut reference = evals[0].phi.value;
        for (i, e) in evals.iter().enumerate() {
            s.lambda_tilde[i] = e.lambda.value - lambda0;
            s.pi[i] = e.lambda.dt;
            let phi = unwrap_angle(e.phi.value, reference);
            reference = phi;
            s.phi[i] = phi;
            s.xi[i] = e.phi.dt;
            if let Some(v) = e.ln_f {
                s.v[i] = v.value;
                s.w[i] = v.dt;
            }
        }
        Ok(s)
    }
}

fn finish(
    family: &'static str,
    p: SpacetimePoint,
    lambda: FirstJet,
    phi: FirstJet,
    alpha: AlphaJet2,
    ln_f: Option<FirstJet>,
    soliton: Option<SolitonExtras>,
) -> Result<ExactEval> {
    let metric = metric_from_fields(lambda.value, phi.value, alpha.alpha, ln_f.map(|v| v.value.exp()))?;
    Ok(ExactEval {
        family,
        point: p,
        lambda,
        phi,
        alpha,
        ln_f,
        metric,
        soliton,
    })
}

pub fn eval_minkowski(lambda: f64, phi: f64, p: SpacetimePoint) -> Result<ExactEval> {
    let alpha = AlphaJet2 {
        alpha: 1.0,
        ..Default::default()
    };
    finish(
        "minkowski",
        p,
        FirstJet::new(lambda, 0.0, 0.0),
        FirstJet::new(phi, 0.0, 0.0),
        alpha,
        Some(FirstJet::default()),
        None,
    )
}

pub fn eval_traveling(
    lambda: f64,
    h: &Profile,
    k: &Profile,
    l: &Profile,
    m: &Profile,
    direction: f64,
    p: SpacetimePoint,
) -> Result<ExactEval> {
    let xi = p.x - direction * p.t;
    let jet = |f: &Profile, base: f64| {
        let d = f.deriv(xi, 1);
        FirstJet::new(base + f.value(xi), -direction * d, d)
    };
    let a = 1.0 + l.value(xi);
    if !(a > 0.0) {
        return Err(BzError::NonPositiveAlpha {
            alpha: a,
            t: p.t,
            x: p.x,
        });
    }
    let fv = 1.0 + m.value(xi);
    if !(fv > 0.0) {
        return Err(BzError::NonPositiveF(fv));
    }
    let (l1, l2) = (l.deriv(xi, 1), l.deriv(xi, 2));
    let alpha = AlphaJet2 {
        alpha: a,
        dt: -direction * l1,
        dx: l1,
        dtt: l2,
        dtx: -direction * l2,
        dxx: l2,
    };
    let fm = jet(m, 1.0);
    let ln_f = FirstJet::new(fv.ln(), fm.dt / fv, fm.dx / fv);
    finish("traveling", p, jet(h, lambda), jet(k, 0.0), alpha, Some(ln_f), None)
}

pub fn eval_kasner_background(kp: &KasnerParams, d: &AlphaData, p: SpacetimePoint) -> Result<ExactEval> {
    kp.validate()?;
    let a = d.eval_positive(p)?;
    let (lt, lx) = (a.dt / a.alpha, a.dx / a.alpha);
    let lambda = FirstJet::new(kp.d * a.alpha.ln(), kp.d * lt, kp.d * lx);
    let k = 0.5 * (kp.d * kp.d - 1.0);
    let ln_f = FirstJet::new(kp.f_scale.ln() + k * a.alpha.ln(), k * lt, k * lx);
    finish("kasner_background", p, lambda, FirstJet::default(), a, Some(ln_f), None)
}

/// Sixth-order central difference of `f` at offset 0 with step `h`.
fn fd6<F: Fn(f64) -> Result<f64>>(f: F, h: f64) -> Result<f64> {
    let v = |k: f64| f(k * h);
    Ok((v(3.0)? - 9.0 * v(2.0)? + 45.0 * v(1.0)? - 45.0 * v(-1.0)? + 9.0 * v(-2.0)? - v(-3.0)?) / (60.0 * h))
}

struct SolitonCore {
    lambda: f64,
    phi: f64,
    ln_f: Option<f64>,
    extras: SolitonExtras,
    alpha: AlphaJet2,
}

fn kasner_soliton_core(sp: &SolitonParams, d: &AlphaData, p: SpacetimePoint) -> Result<SolitonCore> {
    let a = d.eval_positive(p)?;
    let alpha = a.alpha;
    let beta = d.beta(sp.c_beta, p)?.beta;
    let s = sp.w - beta;
    let disc = s * s - alpha * alpha;
    if !(disc > 0.0) {
        return Err(BzError::ComplexPole(disc));
    }
    if s < 0.0 {
        return Err(BzError::InvalidParameter(format!(
            "pole below the light cone at t={}, x={}: w - beta = {s}",
            p.t, p.x
        )));
    }
    let root = disc.sqrt();
    let mu_bar = s + root;
    // mu = s - root without cancellation
    let mu = alpha * alpha / mu_bar;
    let m = mu / alpha;
    let rho = sp.d * m.ln() + sp.c_rho;
    let ad = alpha.powf(sp.d);
    let (er, ch) = (rho.exp(), rho.cosh());
    let pref = 1.0 / (mu * ch);
    let raw = MetricBlock {
        g11: pref * ad * (mu * mu * er + alpha * alpha / er),
        g12: pref * (alpha * alpha - mu * mu),
        g22: pref / ad * (alpha * alpha * er + mu * mu / er),
        f: None,
    };
    let det = raw.det();
    let det_ratio = det / (alpha * alpha);
    if !(det > 0.0) {
        return Err(BzError::NotPositiveDefinite {
            det,
            trace: raw.trace(),
        });
    }
    let norm = raw.scaled(alpha / det.sqrt());
    let ex = fields_from_metric(&norm)?;
    let ln_f = sp.f_scale.map(|c| {
        let f0 = c.ln() + 0.5 * (sp.d * sp.d - 1.0) * alpha.ln();
        f0 + 0.5 * alpha.ln() + mu.ln() + ch.ln() - (alpha * alpha - mu * mu).ln()
    });
    Ok(SolitonCore {
        lambda: ex.lambda,
        phi: ex.phi,
        ln_f,
        extras: SolitonExtras {
            mu,
            mu_bar,
            rho,
            det_ratio,
            raw_cosh_lambda: raw.trace() / (2.0 * alpha),
            cosh_lambda: norm.trace() / (2.0 * alpha),
            curl_witness: None,
        },
        alpha: a,
    })
}

/// One-soliton on the Kasner background `u0 = d ln alpha`, on the pole branch
/// `mu = (w - beta) - sqrt((w - beta)^2 - alpha^2)`.
///
/// The assembled block has determinant `4 alpha^2` (at `c_rho = 0`); `(Lambda, phi)`
/// are extracted after rescaling to determinant `alpha^2` and both `cosh Lambda`
/// values are reported.
pub fn eval_kasner_soliton(sp: &SolitonParams, d: &AlphaData, p: SpacetimePoint) -> Result<ExactEval> {
    sp.validate()?;
    let core = kasner_soliton_core(sp, d, p)?;
    let h = FD_STEP;
    let at = |dt: f64, dx: f64| kasner_soliton_core(sp, d, SpacetimePoint::new(p.t + dt, p.x + dx));
    let lambda = FirstJet::new(
        core.lambda,
        fd6(|e| Ok(at(e, 0.0)?.lambda), h)?,
        fd6(|e| Ok(at(0.0, e)?.lambda), h)?,
    );
    let phi_ref = core.phi;
    let phi = FirstJet::new(
        core.phi,
        fd6(|e| Ok(unwrap_angle(at(e, 0.0)?.phi, phi_ref)), h)?,
        fd6(|e| Ok(unwrap_angle(at(0.0, e)?.phi, phi_ref)), h)?,
    );
    let ln_f = match core.ln_f {
        Some(v) => Some(FirstJet::new(
            v,
            fd6(|e| Ok(at(e, 0.0)?.ln_f.unwrap_or(0.0)), h)?,
            fd6(|e| Ok(at(0.0, e)?.ln_f.unwrap_or(0.0)), h)?,
        )),
        None => None,
    };
    finish("kasner_soliton", p, lambda, phi, core.alpha, ln_f, Some(core.extras))
}

fn radial_jet(r: f64) -> AlphaJet2 {
    AlphaJet2 {
        alpha: r,
        dx: 1.0,
        ..Default::default()
    }
}

/// Einstein-Rosen background on `alpha = r` (the `x` coordinate plays `r`).
pub fn eval_er_bessel(seed: &ErSeed, p: SpacetimePoint) -> Result<ExactEval> {
    let r = p.x;
    if !(r > 0.0) {
        return Err(BzError::NonPositiveRadius(r));
    }
    let lambda = seed.jet(p.t, r);
    finish("er_bessel", p, lambda, FirstJet::default(), radial_jet(r), None, None)
}

/// The pole `mu` on the chosen branch; requires `w - t > r`.
pub fn er_mu(w: f64, branch: Branch, t: f64, r: f64) -> Result<f64> {
    let s = w - t;
    let disc = s * s - r * r;
    if !(s > r) {
        return Err(BzError::ComplexPole(disc));
    }
    let root = disc.sqrt();
    Ok(match branch {
        Branch::Plus => s + root,
        Branch::Minus => r * r / (s + root),
    })
}

/// `(dt rho, dr rho)` at `(t, r)`.
pub fn er_rho_gradient(ep: &ErSolitonParams, t: f64, r: f64) -> Result<(f64, f64)> {
    let mu = er_mu(ep.w, ep.branch, t, r)?;
    let u = ep.seed.u0(t, r);
    let k = r / (mu * mu - r * r);
    Ok((k * (r * u.dt + mu * u.dx), k * (r * u.dx + mu * u.dt)))
}

fn on_pole_side(w: f64, t: f64, r: f64) -> bool {
    r > 0.0 && w - t > r
}

/// `rho` at `p` by integrating its gradient from the base point along the
/// configured axis-aligned path.
pub fn er_rho(ep: &ErSolitonParams, p: SpacetimePoint) -> Result<f64> {
    ep.validate()?;
    let (t0, r0) = (ep.base.t, ep.base.x);
    let (t1, r1) = (p.t, p.x);
    if !(r1 > 0.0) {
        return Err(BzError::NonPositiveRadius(r1));
    }
    if !on_pole_side(ep.w, t1, r1) {
        return Err(BzError::ComplexPole((ep.w - t1).powi(2) - r1 * r1));
    }
    let corner = match ep.path {
        PathOrder::TimeFirst => (t1, r0),
        PathOrder::RadiusFirst => (t0, r1),
    };
    // w - t - r is affine along each leg, so checking the vertices suffices
    for (t, r) in [(t0, r0), corner] {
        if !on_pole_side(ep.w, t, r) {
            return Err(BzError::PoleCrossing { t, r });
        }
    }
    let mut err = None;
    let mut leg_t = |r: f64, a: f64, b: f64| {
        quadrature::integrate(
            |t| match er_rho_gradient(ep, t, r) {
                Ok(g) => g.0,
                Err(e) => {
                    err.get_or_insert(e);
                    0.0
                }
            },
            a,
            b,
            RHO_TOL,
        )
    };
    let mut total = ep.rho_base;
    let mut err_r = None;
    let mut leg_r = |t: f64, a: f64, b: f64| {
        quadrature::integrate(
            |r| match er_rho_gradient(ep, t, r) {
                Ok(g) => g.1,
                Err(e) => {
                    err_r.get_or_insert(e);
                    0.0
                }
            },
            a,
            b,
            RHO_TOL,
        )
    };
    match ep.path {
        PathOrder::TimeFirst => {
            total += leg_t(r0, t0, t1)?;
            total += leg_r(t1, r0, r1)?;
        }
        PathOrder::RadiusFirst => {
            total += leg_r(t0, r0, r1)?;
            total += leg_t(r1, t0, t1)?;
        }
    }
    if let Some(e) = err.or(err_r) {
        return Err(e);
    }
    Ok(total)
}

/// Fields of the Einstein-Rosen soliton at `(t, r)` for a given `rho`.
fn er_soliton_core(ep: &ErSolitonParams, t: f64, r: f64, rho: f64) -> Result<SolitonCore> {
    let mu = er_mu(ep.w, ep.branch, t, r)?;
    let sgn = ep.branch.sign();
    let u0 = ep.seed.u0(t, r).value;
    let gt = (r / mu.abs()).ln() - sgn * ((ep.w - t) / r).acosh();
    let g = ep.c.ln() + u0 + 2.0 * rho + gt;
    let pref = 1.0 / (mu * g.cosh());
    let raw = MetricBlock {
        g11: pref * r * r * u0.exp() * (g + gt).cosh(),
        g12: pref * (r * r - mu * mu) / (2.0 * mu),
        g22: pref * (-u0).exp() * (g - gt).cosh(),
        f: None,
    };
    let det = raw.det();
    if !(det > 0.0) || !(raw.trace() > 0.0) {
        return Err(BzError::NotPositiveDefinite {
            det,
            trace: raw.trace(),
        });
    }
    let norm = raw.scaled(r / det.sqrt());
    let ex = fields_from_metric(&norm)?;
    let raw = 0.5 * r * u0.exp() * (g + gt).cosh() + (-u0).exp() / (2.0 * r) * (g - gt).cosh();
    Ok(SolitonCore {
        lambda: ex.lambda,
        phi: ex.phi,
        ln_f: None,
        extras: SolitonExtras {
            mu,
            mu_bar: r * r / mu,
            rho,
            det_ratio: det / (r * r),
            raw_cosh_lambda: raw,
            cosh_lambda: norm.trace() / (2.0 * r),
            curl_witness: None,
        },
        alpha: radial_jet(r),
    })
}

/// Einstein-Rosen 1-soliton on the Bessel seed. The block is
/// rescaled to determinant `r^2` before `(Lambda, phi)` are extracted; the
/// unnormalized `cosh Lambda` is reported alongside.
pub fn eval_er_soliton(ep: &ErSolitonParams, p: SpacetimePoint) -> Result<ExactEval> {
    let rho = er_rho(ep, p)?;
    let (t, r) = (p.t, p.x);
    let core = er_soliton_core(ep, t, r, rho)?;
    let h = FD_STEP.min(0.25 * r);
    // rho at displaced points from short integrals starting at p
    let rho_t = |e: f64| -> Result<f64> {
        Ok(rho
            + quadrature::integrate(
                |s| er_rho_gradient(ep, s, r).map(|g| g.0).unwrap_or(f64::NAN),
                t,
                t + e,
                RHO_TOL,
            )?)
    };
    let rho_r = |e: f64| -> Result<f64> {
        Ok(rho
            + quadrature::integrate(
                |s| er_rho_gradient(ep, t, s).map(|g| g.1).unwrap_or(f64::NAN),
                r,
                r + e,
                RHO_TOL,
            )?)
    };
    let at_t = |e: f64| er_soliton_core(ep, t + e, r, rho_t(e)?);
    let at_r = |e: f64| er_soliton_core(ep, t, r + e, rho_r(e)?);
    let phi_ref = core.phi;
    let lambda = FirstJet::new(
        core.lambda,
        fd6(|e| Ok(at_t(e)?.lambda), h)?,
        fd6(|e| Ok(at_r(e)?.lambda), h)?,
    );
    let phi = FirstJet::new(
        core.phi,
        fd6(|e| Ok(unwrap_angle(at_t(e)?.phi, phi_ref)), h)?,
        fd6(|e| Ok(unwrap_angle(at_r(e)?.phi, phi_ref)), h)?,
    );
    let hc = 1e-4 * r.min(1.0);
    let d_r_rho_t = fd6(|e| Ok(er_rho_gradient(ep, t, r + e)?.0), hc)?;
    let d_t_rho_r = fd6(|e| Ok(er_rho_gradient(ep, t + e, r)?.1), hc)?;
    let mut extras = core.extras;
    extras.curl_witness = Some((d_r_rho_t - d_t_rho_r).abs());
    finish("er_soliton", p, lambda, phi, core.alpha, None, Some(extras))
}
