//! Energy and momentum densities, modified energy, weighted null-frame norms,
//! the virial functional and its rate identity, windowed decay integrals and
//! continuity-law residuals.
//!
//! With `h1 = Lt^2 + Lx^2 + 4 sinh^2 L (pt^2 + px^2)`, `h2 = Lt Lx + 4 sinh^2 L pt px`
//! and `kappa = alpha / (ax^2 - at^2)`:
//!
//! ```text
//! e~ = kappa (at h1 - 2 ax h2)      p~ = kappa (ax h1 - 2 at h2)
//! e  = e~ - at/alpha                p  = p~ + ax/alpha
//! timelike:  e^ = -e~, p^ = p~      spacelike: e^ = p~, p^ = e~
//! ```

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alpha::{classify_gradient, default_null_tol, weight_varphi, AlphaData, AlphaJet2, GradientClass};
use crate::error::{BzError, Result};
use crate::evolution::{interior, node_jets, NodeJets, Trajectory};
use crate::fields::FieldState;
use crate::quadrature::simpson;
use crate::stencil::{d1, d2, interp_cubic};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Timelike,
    Spacelike,
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensitySample {
    pub h1: f64,
    pub h2: f64,
    pub e: f64,
    pub p: f64,
    pub e_tilde: f64,
    pub p_tilde: f64,
    pub e_hat: f64,
    pub p_hat: f64,
    pub kappa: f64,
    pub grad_class: GradientClass,
}

impl DensitySample {
    /// False at null-gradient points, where every kappa-dependent entry is NaN.
    pub fn applicable(&self) -> bool {
        self.grad_class != GradientClass::Null
    }

    /// Hat densities in the convention of the given orientation.
    pub fn hats(&self, o: Orientation) -> (f64, f64) {
        match o {
            Orientation::Timelike => (-self.e_tilde, self.p_tilde),
            Orientation::Spacelike => (self.p_tilde, self.e_tilde),
            Orientation::Raw => (self.e, self.p),
        }
    }
}

pub fn h1_h2(j: &NodeJets) -> (f64, f64) {
    let s2 = 4.0 * j.lambda.sinh().powi(2);
    (
        j.lambda_t * j.lambda_t + j.lambda_x * j.lambda_x + s2 * (j.phi_t * j.phi_t + j.phi_x * j.phi_x),
        j.lambda_t * j.lambda_x + s2 * j.phi_t * j.phi_x,
    )
}

pub fn density_sample(j: &NodeJets, a: &AlphaJet2) -> DensitySample {
    let (h1, h2) = h1_h2(j);
    let class = classify_gradient(a, default_null_tol(a));
    if class == GradientClass::Null {
        let nan = f64::NAN;
        return DensitySample {
            h1,
            h2,
            e: nan,
            p: nan,
            e_tilde: nan,
            p_tilde: nan,
            e_hat: nan,
            p_hat: nan,
            kappa: nan,
            grad_class: class,
        };
    }
    let kappa = a.alpha / a.gradient_norm();
    let e_tilde = kappa * (a.dt * h1 - 2.0 * a.dx * h2);
    let p_tilde = kappa * (a.dx * h1 - 2.0 * a.dt * h2);
    let (e_hat, p_hat) = if class == GradientClass::Timelike {
        (-e_tilde, p_tilde)
    } else {
        (p_tilde, e_tilde)
    };
    DensitySample {
        h1,
        h2,
        e: e_tilde - a.dt / a.alpha,
        p: p_tilde + a.dx / a.alpha,
        e_tilde,
        p_tilde,
        e_hat,
        p_hat,
        kappa,
        grad_class: class,
    }
}

pub fn snapshot_densities(s: &FieldState, jets: &[AlphaJet2]) -> Vec<DensitySample> {
    node_jets(s)
        .iter()
        .zip(jets)
        .map(|(j, a)| density_sample(j, a))
        .collect()
}

/// Simpson integral treating non-finite samples as 0.
fn integrate_masked(y: &[f64], h: f64) -> f64 {
    let masked: Vec<f64> = y.iter().map(|v| if v.is_finite() { *v } else { 0.0 }).collect();
    simpson(&masked, h)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyReport {
    /// `-int kappa dt(alpha) (h1 - 2 h2) dx`
    pub energy_f: f64,
    /// `int e^ dx` with timelike hats
    pub energy_hat: f64,
    /// fraction of nodes with null gradient, excluded from both integrals
    pub excluded_fraction: f64,
    /// whether `alpha > 0`, `dt alpha > 0` and timelike held at every node
    pub cosmological: bool,
}

pub fn modified_energy(s: &FieldState, d: &AlphaData) -> Result<EnergyReport> {
    let jets = d.eval_grid(&s.grid, s.time)?;
    Ok(modified_energy_with(s, &jets))
}

pub fn modified_energy_with(s: &FieldState, jets: &[AlphaJet2]) -> EnergyReport {
    let dens = snapshot_densities(s, jets);
    let ef: Vec<f64> = dens
        .iter()
        .zip(jets)
        .map(|(ds, a)| -ds.kappa * a.dt * (ds.h1 - 2.0 * ds.h2))
        .collect();
    let eh: Vec<f64> = dens.iter().map(|ds| ds.hats(Orientation::Timelike).0).collect();
    let excluded = dens.iter().filter(|ds| !ds.applicable()).count();
    let cosmological = jets
        .iter()
        .all(|a| a.alpha > 0.0 && a.dt > 0.0 && classify_gradient(a, default_null_tol(a)) == GradientClass::Timelike);
    EnergyReport {
        energy_f: integrate_masked(&ef, s.grid.dx),
        energy_hat: integrate_masked(&eh, s.grid.dx),
        excluded_fraction: excluded as f64 / s.len() as f64,
        cosmological,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ContinuityReport {
    /// first identity (no source)
    pub linf_first: f64,
    pub l2_first: f64,
    /// second identity (with source)
    pub linf_second: f64,
    pub l2_second: f64,
    pub nodes_used: usize,
    pub nodes_excluded: usize,
}

impl ContinuityReport {
    pub fn linf(&self) -> f64 {
        self.linf_first.max(self.linf_second)
    }

    pub fn l2(&self) -> f64 {
        self.l2_first.hypot(self.l2_second)
    }
}

fn check_triplet(a: &FieldState, b: &FieldState, c: &FieldState) -> Result<f64> {
    if !a.grid.same_as(&b.grid) || !b.grid.same_as(&c.grid) {
        return Err(BzError::GridMismatch("snapshots on different grids".into()));
    }
    let d1t = b.time - a.time;
    let d2t = c.time - b.time;
    if !(d1t > 0.0) || (d1t - d2t).abs() > 1e-9 * d1t {
        return Err(BzError::GridMismatch(format!(
            "non-uniform snapshot spacing {d1t} vs {d2t}"
        )));
    }
    Ok(d1t)
}

/// Residuals of the continuity identities at the middle snapshot.
///
/// Time derivatives of the densities are centered differences across the three
/// snapshots; each snapshot's densities use its stored time derivatives.
pub fn continuity_residuals(
    prev: &FieldState,
    mid: &FieldState,
    next: &FieldState,
    d: &AlphaData,
    orientation: Orientation,
) -> Result<ContinuityReport> {
    let dt = check_triplet(prev, mid, next)?;
    let g = &mid.grid;
    let h = g.dx;
    let n = g.n;
    let jp = d.eval_grid(g, prev.time)?;
    let jm = d.eval_grid(g, mid.time)?;
    let jn = d.eval_grid(g, next.time)?;
    let hats = |s: &FieldState, j: &[AlphaJet2]| -> (Vec<f64>, Vec<f64>) {
        snapshot_densities(s, j).iter().map(|ds| ds.hats(orientation)).unzip()
    };
    let (e_p, p_p) = hats(prev, &jp);
    let (e_m, p_m) = hats(mid, &jm);
    let (e_n, p_n) = hats(next, &jn);
    let ex = d1(&e_m, h);
    let px = d1(&p_m, h);
    let nj = node_jets(mid);

    let mut r1 = Vec::with_capacity(n);
    let mut r2 = Vec::with_capacity(n);
    let mut excluded = 0;
    for i in interior(n) {
        let et = (e_n[i] - e_p[i]) / (2.0 * dt);
        let pt = (p_n[i] - p_p[i]) / (2.0 * dt);
        let j = &nj[i];
        let src = 4.0 * j.lambda.sinh().powi(2) * (j.phi_t * j.phi_t - j.phi_x * j.phi_x) + j.lambda_t * j.lambda_t
            - j.lambda_x * j.lambda_x;
        let a = &jm[i];
        let (a1, a2) = match orientation {
            Orientation::Raw => (
                pt + ex[i],
                et + px[i] - src - (a.dt * a.dt - a.dx * a.dx) / (a.alpha * a.alpha),
            ),
            Orientation::Timelike => (pt - ex[i], et - px[i] + src),
            Orientation::Spacelike => (et + px[i], pt + ex[i] - src),
        };
        if a1.is_finite() && a2.is_finite() {
            r1.push(a1);
            r2.push(a2);
        } else {
            excluded += 1;
        }
    }
    let norm = |r: &[f64]| {
        let linf = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let l2 = (r.iter().map(|v| v * v).sum::<f64>() * h).sqrt();
        (linf, l2)
    };
    let (linf_first, l2_first) = norm(&r1);
    let (linf_second, l2_second) = norm(&r2);
    Ok(ContinuityReport {
        linf_first,
        l2_first,
        linf_second,
        l2_second,
        nodes_used: r1.len(),
        nodes_excluded: excluded,
    })
}

/// Null-frame derivatives `(L f_k, Lbar f_k)` of `dx^k` of a field with time derivative `ft`.
fn null_parts(f: &[f64], ft: &[f64], h: f64, k: u32) -> (Vec<f64>, Vec<f64>) {
    let (space, time) = match k {
        0 => (d1(f, h), ft.to_vec()),
        _ => (d2(f, h), d1(ft, h)),
    };
    let l = space.iter().zip(&time).map(|(x, t)| t + x).collect();
    let lb = space.iter().zip(&time).map(|(x, t)| t - x).collect();
    (l, lb)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct WeightedNorms {
    pub e0: f64,
    pub e1: f64,
    pub e0_bar: f64,
    pub e1_bar: f64,
}

/// Weighted densities `(varphi(ubar)|Lbar dx^k f|^2, varphi(u)|L dx^k f|^2)` at every node.
fn weighted_densities(s: &FieldState, field: &[f64], ft: &[f64], k: u32, delta: f64) -> (Vec<f64>, Vec<f64>) {
    let (l, lb) = null_parts(field, ft, s.grid.dx, k);
    let t = s.time;
    (0..s.len())
        .map(|i| {
            let x = s.grid.x(i);
            let (u, ub) = (0.5 * (t + x), 0.5 * (t - x));
            (
                weight_varphi(ub, delta) * lb[i] * lb[i],
                weight_varphi(u, delta) * l[i] * l[i],
            )
        })
        .unzip()
}

pub fn weighted_norms(s: &FieldState, delta: f64) -> WeightedNorms {
    let h = s.grid.dx;
    let e = |f: &[f64], ft: &[f64], k| {
        let (a, b) = weighted_densities(s, f, ft, k, delta);
        simpson(&a, h) + simpson(&b, h)
    };
    WeightedNorms {
        e0: e(&s.lambda_tilde, &s.pi, 0),
        e1: e(&s.lambda_tilde, &s.pi, 1),
        e0_bar: e(&s.phi, &s.xi, 0),
        e1_bar: e(&s.phi, &s.xi, 1),
    }
}

/// Per-snapshot inputs of the flux norms.
struct FluxDensities {
    time: f64,
    /// indexed [field (0: Lambda~, 1: phi)][k][left/right]
    q: [[[Vec<f64>; 2]; 2]; 2],
}

fn flux_densities(s: &FieldState, delta: f64) -> FluxDensities {
    let mk = |f: &[f64], ft: &[f64], k| {
        let (a, b) = weighted_densities(s, f, ft, k, delta);
        [a, b]
    };
    FluxDensities {
        time: s.time,
        q: [
            [mk(&s.lambda_tilde, &s.pi, 0), mk(&s.lambda_tilde, &s.pi, 1)],
            [mk(&s.phi, &s.xi, 0), mk(&s.phi, &s.xi, 1)],
        ],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct FluxNorms {
    pub f: f64,
    pub f_bar: f64,
}

/// Flux norms at the time of snapshot `upto` from line integrals along the
/// characteristics through every node of that snapshot (discrete max over nodes,
/// a lower bound for the supremum). Arc length is measured by `dt`.
fn flux_from_densities(dens: &[FluxDensities], grid_x0: f64, h: f64, n: usize, upto: usize) -> FluxNorms {
    if upto == 0 {
        return FluxNorms::default();
    }
    let t = dens[upto].time;
    let ds = dens[1].time - dens[0].time;
    let x_end = grid_x0 + h * (n - 1) as f64;
    let line = |field: usize, k: usize, side: usize, x_final: f64| -> f64 {
        // side 0: Lbar density along u = const (x + t const); side 1: L density along ubar = const
        let y: Vec<f64> = (0..=upto)
            .map(|m| {
                let dtm = t - dens[m].time;
                let x = if side == 0 { x_final + dtm } else { x_final - dtm };
                if x < grid_x0 || x > x_end {
                    0.0
                } else {
                    interp_cubic(&dens[m].q[field][k][side], grid_x0, h, x)
                }
            })
            .collect();
        simpson(&y, ds)
    };
    let mut out = [0.0; 2];
    for (field, o) in out.iter_mut().enumerate() {
        for k in 0..2 {
            let sup = |side: usize| {
                (0..n)
                    .into_par_iter()
                    .map(|i| line(field, k, side, grid_x0 + i as f64 * h))
                    .collect::<Vec<f64>>()
                    .into_iter()
                    .fold(0.0f64, f64::max)
            };
            *o += sup(0) + sup(1);
        }
    }
    FluxNorms {
        f: out[0],
        f_bar: out[1],
    }
}

/// Flux norms `(F, Fbar)` at the final snapshot of a uniformly spaced trajectory from `t = 0`.
pub fn flux_norms(traj: &Trajectory, delta: f64) -> Result<FluxNorms> {
    let snaps = &traj.snapshots;
    if snaps.is_empty() {
        return Ok(FluxNorms::default());
    }
    check_uniform(snaps)?;
    let dens: Vec<FluxDensities> = snaps.iter().map(|s| flux_densities(s, delta)).collect();
    let g = &snaps[0].grid;
    Ok(flux_from_densities(&dens, g.x_min, g.dx, g.n, snaps.len() - 1))
}

fn check_uniform(snaps: &[FieldState]) -> Result<()> {
    if snaps.len() < 2 {
        return Ok(());
    }
    let ds = snaps[1].time - snaps[0].time;
    for w in snaps.windows(2) {
        if ((w[1].time - w[0].time) - ds).abs() > 1e-9 * ds {
            return Err(BzError::GridMismatch(
                "flux norms need uniformly spaced snapshots".into(),
            ));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum WeightMode {
    Constant {
        omega: f64,
    },
    /// `omega = t / ln^2 t` for `t > 2`, held at its `t = 2` value before.
    LogSquared,
}

impl WeightMode {
    pub fn omega(&self, t: f64) -> f64 {
        match self {
            WeightMode::Constant { omega } => *omega,
            WeightMode::LogSquared => {
                let tt = t.max(2.0);
                tt / tt.ln().powi(2)
            }
        }
    }

    /// `omega'(t) / omega(t)`.
    pub fn log_derivative(&self, t: f64) -> f64 {
        match self {
            WeightMode::Constant { .. } => 0.0,
            WeightMode::LogSquared => {
                if t <= 2.0 {
                    0.0
                } else {
                    (1.0 - 2.0 / t.ln()) / t
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VirialConfig {
    pub v: f64,
    #[serde(default = "default_weight")]
    pub weight_mode: WeightMode,
}

fn default_weight() -> WeightMode {
    WeightMode::LogSquared
}

impl VirialConfig {
    pub fn new(v: f64, weight_mode: WeightMode) -> Result<Self> {
        let c = Self { v, weight_mode };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v.abs() < 1.0) {
            return Err(BzError::InvalidParameter(format!(
                "virial velocity {} must satisfy |v| < 1",
                self.v
            )));
        }
        if let WeightMode::Constant { omega } = self.weight_mode {
            if !(omega > 0.0) {
                return Err(BzError::InvalidParameter("constant omega must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn z(&self, t: f64, x: f64) -> f64 {
        (x - self.v * t) / self.weight_mode.omega(t)
    }
}

fn sech2(z: f64) -> f64 {
    let c = z.cosh();
    if c.is_finite() {
        1.0 / (c * c)
    } else {
        0.0
    }
}

fn hats_timelike(s: &FieldState, jets: &[AlphaJet2]) -> (Vec<f64>, Vec<f64>) {
    snapshot_densities(s, jets)
        .iter()
        .map(|ds| ds.hats(Orientation::Timelike))
        .unzip()
}

/// `I = -int tanh(z) p^ dx`.
pub fn virial(s: &FieldState, d: &AlphaData, cfg: &VirialConfig) -> Result<f64> {
    let jets = d.eval_grid(&s.grid, s.time)?;
    Ok(virial_with(s, &jets, cfg))
}

pub fn virial_with(s: &FieldState, jets: &[AlphaJet2], cfg: &VirialConfig) -> f64 {
    let (_, ph) = hats_timelike(s, jets);
    let y: Vec<f64> = (0..s.len())
        .map(|i| -cfg.z(s.time, s.grid.x(i)).tanh() * ph[i])
        .collect();
    integrate_masked(&y, s.grid.dx)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VirialRate {
    pub measured: f64,
    pub rhs: f64,
    pub mismatch: f64,
}

/// Right side of the rate identity at one snapshot:
/// `(w'/w) int z sech^2 p^ + (v/w) int sech^2 p^ + (1/w) int sech^2 e^`.
pub fn virial_rate_rhs(s: &FieldState, jets: &[AlphaJet2], cfg: &VirialConfig) -> f64 {
    let (eh, ph) = hats_timelike(s, jets);
    let t = s.time;
    let om = cfg.weight_mode.omega(t);
    let lg = cfg.weight_mode.log_derivative(t);
    let y: Vec<f64> = (0..s.len())
        .map(|i| {
            let z = cfg.z(t, s.grid.x(i));
            let w = sech2(z);
            lg * z * w * ph[i] + cfg.v / om * w * ph[i] + w * eh[i] / om
        })
        .collect();
    integrate_masked(&y, s.grid.dx)
}

pub fn virial_rate_check(
    prev: &FieldState,
    mid: &FieldState,
    next: &FieldState,
    d: &AlphaData,
    cfg: &VirialConfig,
) -> Result<VirialRate> {
    let dt = check_triplet(prev, mid, next)?;
    let i_p = virial(prev, d, cfg)?;
    let i_n = virial(next, d, cfg)?;
    let measured = (i_n - i_p) / (2.0 * dt);
    let jets = d.eval_grid(&mid.grid, mid.time)?;
    let rhs = virial_rate_rhs(mid, &jets, cfg);
    Ok(VirialRate {
        measured,
        rhs,
        mismatch: (measured - rhs).abs(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Windowed {
    pub field: f64,
    pub detg: f64,
}

pub fn windowed_decay(s: &FieldState, d: &AlphaData, cfg: &VirialConfig) -> Result<Windowed> {
    let jets = d.eval_grid(&s.grid, s.time)?;
    Ok(windowed_decay_with(s, &jets, cfg))
}

pub fn windowed_decay_with(s: &FieldState, jets: &[AlphaJet2], cfg: &VirialConfig) -> Windowed {
    let nj = node_jets(s);
    let t = s.time;
    let (fy, gy): (Vec<f64>, Vec<f64>) = (0..s.len())
        .map(|i| {
            let w = sech2(cfg.z(t, s.grid.x(i)));
            let j = &nj[i];
            let field =
                j.lambda_t.powi(2) + j.lambda_x.powi(2) + j.lambda.sinh().powi(2) * (j.phi_t.powi(2) + j.phi_x.powi(2));
            let a = &jets[i];
            let detg = (2.0 * a.alpha * a.dt).powi(2) + (2.0 * a.alpha * a.dx).powi(2);
            (w * field, w * detg)
        })
        .unzip();
    Windowed {
        field: simpson(&fy, s.grid.dx),
        detg: simpson(&gy, s.grid.dx),
    }
}

/// `int (1/omega) sech^2(z) e^ dx` at one snapshot, the integrand of the averaged estimate.
pub fn localized_energy_rate(s: &FieldState, jets: &[AlphaJet2], cfg: &VirialConfig) -> f64 {
    let (eh, _) = hats_timelike(s, jets);
    let om = cfg.weight_mode.omega(s.time);
    let y: Vec<f64> = (0..s.len())
        .map(|i| sech2(cfg.z(s.time, s.grid.x(i))) * eh[i] / om)
        .collect();
    integrate_masked(&y, s.grid.dx)
}

/// Pointwise decay monitors `max |L Lambda~| (1+u^2)^((1+d)/2) / eps` and the `Lbar` analogue.
pub fn decay_monitors(s: &FieldState, delta: f64, eps: f64) -> (f64, f64) {
    if eps <= 0.0 {
        return (0.0, 0.0);
    }
    let (l, lb) = null_parts(&s.lambda_tilde, &s.pi, s.grid.dx, 0);
    let t = s.time;
    let mut ml: f64 = 0.0;
    let mut mlb: f64 = 0.0;
    for i in 0..s.len() {
        let x = s.grid.x(i);
        let (u, ub) = (0.5 * (t + x), 0.5 * (t - x));
        ml = ml.max(l[i].abs() * weight_varphi(u, delta).sqrt() / eps);
        mlb = mlb.max(lb[i].abs() * weight_varphi(ub, delta).sqrt() / eps);
    }
    (ml, mlb)
}

/// True when `values` never rises by more than `ripple * max` above its running
/// minimum over the samples with `times >= t_start`.
pub fn non_increasing_after(times: &[f64], values: &[f64], t_start: f64, ripple: f64) -> bool {
    let tail: Vec<f64> = times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= t_start)
        .map(|(_, v)| *v)
        .collect();
    let peak = tail.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut low = f64::INFINITY;
    for v in tail {
        if v > low + ripple * peak {
            return false;
        }
        low = low.min(v);
    }
    true
}

/// Diagnostics along a trajectory, one row per snapshot.
#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticsSeries {
    pub times: Vec<f64>,
    pub energy_f: Vec<f64>,
    pub energy_hat: Vec<f64>,
    pub excluded_fraction: Vec<f64>,
    /// indexed [config][snapshot]
    pub virial: Vec<Vec<f64>>,
    pub virial_mismatch: Vec<Vec<f64>>,
    pub windowed_field: Vec<Vec<f64>>,
    pub windowed_detg: Vec<Vec<f64>>,
    pub localized_rate: Vec<Vec<f64>>,
    pub weighted: Vec<WeightedNorms>,
    pub flux: Vec<FluxNorms>,
    pub continuity_linf: Vec<f64>,
    pub continuity_l2: Vec<f64>,
    pub monitor_l: Vec<f64>,
    pub monitor_lbar: Vec<f64>,
    pub configs: Vec<VirialConfig>,
    pub orientation: Orientation,
    pub delta: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnosticsOptions {
    pub configs: Vec<VirialConfig>,
    pub orientation: Orientation,
    pub delta: f64,
    /// amplitude used to normalize the pointwise decay monitors
    pub epsilon: f64,
    /// compute the flux norms (quadratic in the number of snapshots)
    pub flux: bool,
}

pub fn compute_series(traj: &Trajectory, d: &AlphaData, opts: &DiagnosticsOptions) -> Result<DiagnosticsSeries> {
    for c in &opts.configs {
        c.validate()?;
    }
    let snaps = &traj.snapshots;
    let m = snaps.len();
    let nc = opts.configs.len();
    let jets: Vec<Vec<AlphaJet2>> = snaps
        .iter()
        .map(|s| d.eval_grid(&s.grid, s.time))
        .collect::<Result<_>>()?;
    let mut out = DiagnosticsSeries {
        times: snaps.iter().map(|s| s.time).collect(),
        energy_f: Vec::with_capacity(m),
        energy_hat: Vec::with_capacity(m),
        excluded_fraction: Vec::with_capacity(m),
        virial: vec![Vec::with_capacity(m); nc],
        virial_mismatch: vec![vec![f64::NAN; m]; nc],
        windowed_field: vec![Vec::with_capacity(m); nc],
        windowed_detg: vec![Vec::with_capacity(m); nc],
        localized_rate: vec![Vec::with_capacity(m); nc],
        weighted: Vec::with_capacity(m),
        flux: vec![
            FluxNorms {
                f: f64::NAN,
                f_bar: f64::NAN
            };
            m
        ],
        continuity_linf: vec![f64::NAN; m],
        continuity_l2: vec![f64::NAN; m],
        monitor_l: Vec::with_capacity(m),
        monitor_lbar: Vec::with_capacity(m),
        configs: opts.configs.clone(),
        orientation: opts.orientation,
        delta: opts.delta,
    };
    for (s, j) in snaps.iter().zip(&jets) {
        let e = modified_energy_with(s, j);
        out.energy_f.push(e.energy_f);
        out.energy_hat.push(e.energy_hat);
        out.excluded_fraction.push(e.excluded_fraction);
        for (c, cfg) in opts.configs.iter().enumerate() {
            out.virial[c].push(virial_with(s, j, cfg));
            let w = windowed_decay_with(s, j, cfg);
            out.windowed_field[c].push(w.field);
            out.windowed_detg[c].push(w.detg);
            out.localized_rate[c].push(localized_energy_rate(s, j, cfg));
        }
        out.weighted.push(weighted_norms(s, opts.delta));
        let (a, b) = decay_monitors(s, opts.delta, opts.epsilon);
        out.monitor_l.push(a);
        out.monitor_lbar.push(b);
    }
    for k in traj.uniform_triplets() {
        let r = continuity_residuals(&snaps[k - 1], &snaps[k], &snaps[k + 1], d, opts.orientation)?;
        out.continuity_linf[k] = r.linf();
        out.continuity_l2[k] = r.l2();
        let dt = snaps[k].time - snaps[k - 1].time;
        for (c, cfg) in opts.configs.iter().enumerate() {
            let measured = (out.virial[c][k + 1] - out.virial[c][k - 1]) / (2.0 * dt);
            let rhs = virial_rate_rhs(&snaps[k], &jets[k], cfg);
            out.virial_mismatch[c][k] = (measured - rhs).abs();
        }
    }
    if opts.flux && m > 0 {
        // flux norms need a uniform time axis; a shorter final step is left out
        let mut usable = m;
        if m >= 3 {
            let ds = snaps[1].time - snaps[0].time;
            if ((snaps[m - 1].time - snaps[m - 2].time) - ds).abs() > 1e-9 * ds {
                usable = m - 1;
            }
        }
        let dens: Vec<FluxDensities> = snaps[..usable]
            .par_iter()
            .map(|s| flux_densities(s, opts.delta))
            .collect();
        let g = &snaps[0].grid;
        for k in 0..usable {
            out.flux[k] = flux_from_densities(&dens, g.x_min, g.dx, g.n, k);
        }
    }
    Ok(out)
}
