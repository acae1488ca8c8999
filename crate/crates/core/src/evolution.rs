//! Method-of-lines evolution of `(Lambda~, phi, ln f)` on a fixed background `alpha`.
//!
//! The system, with `Lambda = lambda0 + Lambda~`:
//!
//! ```text
//! Lambda_tt = Lambda_xx - (a_t Lambda_t - a_x Lambda_x)/a + 2 sinh(2 Lambda) (phi_t^2 - phi_x^2)
//! phi_tt    = phi_xx - (a_t phi_t - a_x phi_x)/a - 2 coth(Lambda) (phi_t Lambda_t - phi_x Lambda_x)
//! v_tt      = v_xx + G,  v = ln f
//! ```
//!
//! Space: fourth-order differences. Time: classical RK4.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alpha::{AlphaData, AlphaJet2};
use crate::error::{BzError, Result};
use crate::fields::{FieldState, Grid1D, SpacetimePoint};
use crate::profile::Profile;
use crate::quadrature::{self, simpson};
use crate::stencil::{d1, d1_at, d2, interp_cubic};

fn default_cfl() -> f64 {
    0.5
}
fn default_guard() -> f64 {
    0.5
}
fn default_stride() -> usize {
    10
}
fn default_boundary_tol() -> Option<f64> {
    Some(1e-9)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionConfig {
    pub grid: Grid1D,
    pub t_end: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    pub lambda0: f64,
    #[serde(default = "default_guard")]
    pub guard_fraction: f64,
    #[serde(default = "default_stride")]
    pub output_stride: usize,
    /// Largest tolerated drift of `Lambda~`, `phi` in the two outermost nodes; `None` disables the check.
    #[serde(default = "default_boundary_tol")]
    pub boundary_tol: Option<f64>,
}

impl EvolutionConfig {
    pub fn new(grid: Grid1D, t_end: f64, lambda0: f64) -> Self {
        Self {
            grid,
            t_end,
            cfl: default_cfl(),
            lambda0,
            guard_fraction: default_guard(),
            output_stride: default_stride(),
            boundary_tol: default_boundary_tol(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 0.9) {
            return Err(BzError::InvalidParameter(format!("cfl {} outside (0, 0.9]", self.cfl)));
        }
        if !(self.lambda0 > 0.0) {
            return Err(BzError::InvalidParameter(format!(
                "lambda0 {} must be positive",
                self.lambda0
            )));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(BzError::InvalidParameter(format!("t_end {} invalid", self.t_end)));
        }
        if !(self.guard_fraction >= 0.0 && self.guard_fraction < 1.0) {
            return Err(BzError::InvalidParameter("guard_fraction must lie in [0, 1)".into()));
        }
        if self.output_stride == 0 {
            return Err(BzError::InvalidParameter("output_stride must be >= 1".into()));
        }
        Grid1D::new(self.grid.x_min, self.grid.x_max, self.grid.n)?;
        Ok(())
    }

    /// Number of steps and the step size, `dt <= cfl dx`.
    pub fn steps(&self) -> (usize, f64) {
        if self.t_end == 0.0 {
            return (0, self.cfl * self.grid.dx);
        }
        let nominal = self.cfl * self.grid.dx;
        let steps = (self.t_end / nominal * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        (steps, self.t_end / steps as f64)
    }

    /// Domain rule: perturbations supported in `|x - center| <= radius` stay off the boundary.
    pub fn check_domain(&self, center: f64, radius: f64) -> Result<()> {
        let reach = radius + self.t_end;
        let margin = 2.0 * self.grid.dx;
        if center - reach < self.grid.x_min + margin || center + reach > self.grid.x_max - margin {
            return Err(BzError::InvalidParameter(format!(
                "domain [{}, {}] too small: support radius {radius} plus t_end {} around {center}",
                self.grid.x_min, self.grid.x_max, self.t_end
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ResidualReport {
    pub linf_lambda: f64,
    pub l2_lambda: f64,
    pub linf_phi: f64,
    pub l2_phi: f64,
    pub linf_alpha: f64,
    /// `None` when the ln f channel was not checked.
    pub linf_f: Option<f64>,
}

/// Pointwise first jets of the dynamical fields derived from one snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NodeJets {
    pub lambda: f64,
    pub lambda_t: f64,
    pub lambda_x: f64,
    pub phi: f64,
    pub phi_t: f64,
    pub phi_x: f64,
}

/// Field jets at every node, time derivatives from the stored `pi`, `xi`.
pub fn node_jets(s: &FieldState) -> Vec<NodeJets> {
    let h = s.grid.dx;
    let lx = d1(&s.lambda_tilde, h);
    let px = d1(&s.phi, h);
    (0..s.len())
        .map(|i| NodeJets {
            lambda: s.lambda(i),
            lambda_t: s.pi[i],
            lambda_x: lx[i],
            phi: s.phi[i],
            phi_t: s.xi[i],
            phi_x: px[i],
        })
        .collect()
}

/// Source of the `ln f` equation.
pub fn source_g_point(a: &AlphaJet2, j: &NodeJets) -> f64 {
    let sh = j.lambda.sinh();
    (a.dt * a.dt - a.dx * a.dx) / (2.0 * a.alpha * a.alpha)
        - 0.5 * (j.lambda_t * j.lambda_t - j.lambda_x * j.lambda_x)
        - 2.0 * sh * sh * (j.phi_t * j.phi_t - j.phi_x * j.phi_x)
}

pub fn source_g(state: &FieldState, d: &AlphaData, t: f64) -> Result<Vec<f64>> {
    let jets = d.eval_grid(&state.grid, t)?;
    Ok(node_jets(state)
        .iter()
        .zip(&jets)
        .map(|(j, a)| source_g_point(a, j))
        .collect())
}

/// Time derivative of the state given the background jets at the same time.
pub fn rhs_with_jets(state: &FieldState, jets: &[AlphaJet2], guard_fraction: f64) -> Result<FieldState> {
    state.check_lengths()?;
    if jets.len() != state.len() {
        return Err(BzError::GridMismatch("alpha jets vs state".into()));
    }
    state.check_guard(guard_fraction)?;
    let h = state.grid.dx;
    let lxx = d2(&state.lambda_tilde, h);
    let pxx = d2(&state.phi, h);
    let vxx = d2(&state.v, h);
    let out: Vec<(f64, f64, f64)> = (0..state.len())
        .into_par_iter()
        .map(|i| {
            let a = &jets[i];
            let lam = state.lambda(i);
            let (lt, lx) = (state.pi[i], d1_at(&state.lambda_tilde, i, h));
            let (pt, px) = (state.xi[i], d1_at(&state.phi, i, h));
            let sh = lam.sinh();
            let coth2 = 2.0 * lam.cosh() / sh;
            let ltt = lxx[i] - (a.dt * lt - a.dx * lx) / a.alpha + 2.0 * (2.0 * lam).sinh() * (pt * pt - px * px);
            let ptt = pxx[i] - (a.dt * pt - a.dx * px) / a.alpha - coth2 * (pt * lt - px * lx);
            let j = NodeJets {
                lambda: lam,
                lambda_t: lt,
                lambda_x: lx,
                phi: state.phi[i],
                phi_t: pt,
                phi_x: px,
            };
            let wtt = vxx[i] + source_g_point(a, &j);
            (ltt, ptt, wtt)
        })
        .collect();
    let mut k = FieldState::zeros(state.grid.clone(), state.time, state.lambda0);
    k.lambda_tilde.clone_from(&state.pi);
    k.phi.clone_from(&state.xi);
    k.v.clone_from(&state.w);
    for (i, (a, b, c)) in out.into_iter().enumerate() {
        k.pi[i] = a;
        k.xi[i] = b;
        k.w[i] = c;
    }
    if k.arrays().iter().any(|a| a.iter().any(|v| !v.is_finite())) {
        return Err(BzError::NonFinite(format!("right-hand side at t={}", state.time)));
    }
    Ok(k)
}

pub fn rhs(state: &FieldState, d: &AlphaData, t: f64, guard_fraction: f64) -> Result<FieldState> {
    let jets = d.eval_grid(&state.grid, t)?;
    rhs_with_jets(state, &jets, guard_fraction)
}

fn axpy(y: &FieldState, a: f64, k: &FieldState, time: f64) -> FieldState {
    let mut out = y.clone();
    out.time = time;
    for (o, kk) in out.arrays_mut().into_iter().zip(k.arrays()) {
        o.iter_mut().zip(kk).for_each(|(v, dv)| *v += a * dv);
    }
    out
}

/// Background jets cached for one step: at `t`, `t + dt/2`, `t + dt`.
pub struct StepJets {
    pub start: Vec<AlphaJet2>,
    pub mid: Vec<AlphaJet2>,
    pub end: Vec<AlphaJet2>,
}

impl StepJets {
    pub fn new(d: &AlphaData, grid: &Grid1D, t: f64, dt: f64) -> Result<Self> {
        Ok(Self {
            start: d.eval_grid(grid, t)?,
            mid: d.eval_grid(grid, t + 0.5 * dt)?,
            end: d.eval_grid(grid, t + dt)?,
        })
    }
}

fn rk4_with_jets(state: &FieldState, jets: &StepJets, dt: f64, guard: f64) -> Result<FieldState> {
    let t = state.time;
    let k1 = rhs_with_jets(state, &jets.start, guard)?;
    let y2 = axpy(state, 0.5 * dt, &k1, t + 0.5 * dt);
    let k2 = rhs_with_jets(&y2, &jets.mid, guard)?;
    let y3 = axpy(state, 0.5 * dt, &k2, t + 0.5 * dt);
    let k3 = rhs_with_jets(&y3, &jets.mid, guard)?;
    let y4 = axpy(state, dt, &k3, t + dt);
    let k4 = rhs_with_jets(&y4, &jets.end, guard)?;
    let mut out = state.clone();
    out.time = t + dt;
    let c = dt / 6.0;
    let ks = [k1.arrays(), k2.arrays(), k3.arrays(), k4.arrays()];
    for (f, o) in out.arrays_mut().into_iter().enumerate() {
        for (i, v) in o.iter_mut().enumerate() {
            *v += c * (ks[0][f][i] + 2.0 * ks[1][f][i] + 2.0 * ks[2][f][i] + ks[3][f][i]);
        }
    }
    out.check_guard(guard)?;
    Ok(out)
}

/// One classical RK4 step. Errors if `dt > cfl dx`.
pub fn step_rk4(state: &FieldState, d: &AlphaData, dt: f64, cfl: f64, guard_fraction: f64) -> Result<FieldState> {
    let limit = cfl * state.grid.dx;
    if dt > limit * (1.0 + 1e-12) {
        return Err(BzError::CflViolation { dt, limit });
    }
    let jets = StepJets::new(d, &state.grid, state.time, dt)?;
    rk4_with_jets(state, &jets, dt, guard_fraction)
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<FieldState>,
    pub dt: f64,
    pub stride: usize,
    pub steps: usize,
}

impl Trajectory {
    /// Spacing between consecutive snapshots (the last one may be shorter).
    pub fn snapshot_dt(&self) -> f64 {
        self.dt * self.stride as f64
    }

    pub fn last(&self) -> &FieldState {
        self.snapshots.last().expect("trajectory has the initial snapshot")
    }

    /// Indices `k` such that snapshots `k-1, k, k+1` are uniformly spaced.
    pub fn uniform_triplets(&self) -> Vec<usize> {
        (1..self.snapshots.len().saturating_sub(1))
            .filter(|&k| {
                let a = self.snapshots[k].time - self.snapshots[k - 1].time;
                let b = self.snapshots[k + 1].time - self.snapshots[k].time;
                (a - b).abs() <= 1e-9 * a.abs()
            })
            .collect()
    }
}

/// Callback invoked with each emitted snapshot; returning an error aborts the run.
pub type SnapshotSink<'a> = dyn FnMut(&FieldState) -> Result<()> + 'a;

pub fn run_simulation(config: &EvolutionConfig, d: &AlphaData, initial: &FieldState) -> Result<Trajectory> {
    let mut snaps = Vec::new();
    let (steps, dt) = run_simulation_with(config, d, initial, &mut |s| {
        snaps.push(s.clone());
        Ok(())
    })?;
    Ok(Trajectory {
        snapshots: snaps,
        dt,
        stride: config.output_stride,
        steps,
    })
}

/// Streaming variant: emits snapshots at every `output_stride` steps and at `t_end`.
pub fn run_simulation_with(
    config: &EvolutionConfig,
    d: &AlphaData,
    initial: &FieldState,
    sink: &mut SnapshotSink<'_>,
) -> Result<(usize, f64)> {
    config.validate()?;
    if !initial.grid.same_as(&config.grid) {
        return Err(BzError::GridMismatch(
            "initial state grid differs from config grid".into(),
        ));
    }
    initial.check_lengths()?;
    initial.check_guard(config.guard_fraction)?;
    let (steps, dt) = config.steps();
    let n = initial.len();
    let edge = [0, 1, n - 2, n - 1];
    let reference: Vec<(f64, f64)> = edge
        .iter()
        .map(|&i| (initial.lambda_tilde[i], initial.phi[i]))
        .collect();
    let mut state = initial.clone();
    sink(&state)?;
    for k in 0..steps {
        let t = initial.time + k as f64 * dt;
        let jets = StepJets::new(d, &state.grid, t, dt)?;
        state = rk4_with_jets(&state, &jets, dt, config.guard_fraction)?;
        state.time = initial.time + (k + 1) as f64 * dt;
        if let Some(tol) = config.boundary_tol {
            for (&i, &(l0, p0)) in edge.iter().zip(&reference) {
                if (state.lambda_tilde[i] - l0).abs() > tol || (state.phi[i] - p0).abs() > tol {
                    return Err(BzError::BoundaryContamination { t: state.time, node: i });
                }
            }
        }
        if (k + 1) % config.output_stride == 0 || k + 1 == steps {
            sink(&state)?;
        }
    }
    Ok((steps, dt))
}

fn check_triplet(a: &FieldState, b: &FieldState, c: &FieldState) -> Result<f64> {
    if !a.grid.same_as(&b.grid) || !b.grid.same_as(&c.grid) {
        return Err(BzError::GridMismatch("snapshots on different grids".into()));
    }
    a.check_lengths()?;
    b.check_lengths()?;
    c.check_lengths()?;
    let d1t = b.time - a.time;
    let d2t = c.time - b.time;
    if !(d1t > 0.0) || (d1t - d2t).abs() > 1e-9 * d1t {
        return Err(BzError::GridMismatch(format!(
            "non-uniform snapshot spacing {d1t} vs {d2t}"
        )));
    }
    Ok(d1t)
}

pub(crate) fn interior(n: usize) -> std::ops::Range<usize> {
    2..n - 2
}

fn norms(r: &[f64], range: std::ops::Range<usize>, h: f64) -> (f64, f64) {
    let mut linf: f64 = 0.0;
    let mut sq = 0.0;
    for v in &r[range] {
        linf = linf.max(v.abs());
        sq += v * v;
    }
    (linf, (sq * h).sqrt())
}

/// Discrete residual of the divergence-form equations at the middle snapshot.
pub fn pde_residual(
    prev: &FieldState,
    mid: &FieldState,
    next: &FieldState,
    d: &AlphaData,
    include_lnf: bool,
) -> Result<ResidualReport> {
    let dt = check_triplet(prev, mid, next)?;
    let g = &mid.grid;
    let h = g.dx;
    let n = g.n;
    let t = mid.time;
    let a_m = d.eval_grid(g, t - 0.5 * dt)?;
    let a_0 = d.eval_grid(g, t)?;
    let a_p = d.eval_grid(g, t + 0.5 * dt)?;
    let a_prev = d.eval_grid(g, prev.time)?;
    let a_next = d.eval_grid(g, next.time)?;

    let lam = |s: &FieldState, i: usize| s.lambda(i);
    let lx = d1(&mid.lambda_tilde, h);
    let lxx = d2(&mid.lambda_tilde, h);
    let px = d1(&mid.phi, h);
    let sh2: Vec<f64> = (0..n).map(|i| mid.lambda(i).sinh().powi(2)).collect();
    let flux_phi: Vec<f64> = (0..n).map(|i| a_0[i].alpha * sh2[i] * px[i]).collect();
    let dflux_phi = d1(&flux_phi, h);
    let alpha_vals: Vec<f64> = a_0.iter().map(|j| j.alpha).collect();
    let alpha_xx = d2(&alpha_vals, h);
    let vxx = d2(&mid.v, h);

    let mut r_l = vec![0.0; n];
    let mut r_p = vec![0.0; n];
    let mut r_a = vec![0.0; n];
    let mut r_f = vec![0.0; n];
    for i in 0..n {
        let (l_m, l_0, l_p) = (lam(prev, i), lam(mid, i), lam(next, i));
        let (p_m, p_0, p_p) = (prev.phi[i], mid.phi[i], next.phi[i]);
        let lt = (l_p - l_m) / (2.0 * dt);
        let pt = (p_p - p_m) / (2.0 * dt);
        let a = &a_0[i];
        let dt_alpha_lt = (a_p[i].alpha * (l_p - l_0) - a_m[i].alpha * (l_0 - l_m)) / (dt * dt);
        let dx_alpha_lx = a.dx * lx[i] + a.alpha * lxx[i];
        r_l[i] = dt_alpha_lt - dx_alpha_lx - 2.0 * a.alpha * (2.0 * l_0).sinh() * (pt * pt - px[i] * px[i]);

        let sh_p = (0.5 * (l_0 + l_p)).sinh().powi(2);
        let sh_m = (0.5 * (l_0 + l_m)).sinh().powi(2);
        let dt_flux = (a_p[i].alpha * sh_p * (p_p - p_0) - a_m[i].alpha * sh_m * (p_0 - p_m)) / (dt * dt);
        r_p[i] = dt_flux - dflux_phi[i];

        r_a[i] = (a_next[i].alpha - 2.0 * a.alpha + a_prev[i].alpha) / (dt * dt) - alpha_xx[i];

        if include_lnf {
            let j = NodeJets {
                lambda: l_0,
                lambda_t: lt,
                lambda_x: lx[i],
                phi: p_0,
                phi_t: pt,
                phi_x: px[i],
            };
            let vtt = (next.v[i] - 2.0 * mid.v[i] + prev.v[i]) / (dt * dt);
            r_f[i] = vtt - vxx[i] - source_g_point(a, &j);
        }
    }
    let range = interior(n);
    let (linf_lambda, l2_lambda) = norms(&r_l, range.clone(), h);
    let (linf_phi, l2_phi) = norms(&r_p, range.clone(), h);
    let (linf_alpha, _) = norms(&r_a, range.clone(), h);
    let linf_f = include_lnf.then(|| norms(&r_f, range, h).0);
    Ok(ResidualReport {
        linf_lambda,
        l2_lambda,
        linf_phi,
        l2_phi,
        linf_alpha,
        linf_f,
    })
}

/// Initial data for `f`: `f(0,x) = c1 + f0(x)`, `dt f(0,x) = f1(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformalData {
    pub f0: Profile,
    pub f1: Profile,
    pub c1: f64,
}

impl ConformalData {
    pub fn trivial(c1: f64) -> Self {
        Self {
            f0: Profile::Zero,
            f1: Profile::Zero,
            c1,
        }
    }

    pub fn v0(&self, x: f64) -> f64 {
        (self.c1 + self.f0.value(x)).ln()
    }

    pub fn w0(&self, x: f64) -> f64 {
        self.f1.value(x) / (self.c1 + self.f0.value(x))
    }
}

/// `ln f` at `p` from d'Alembert's formula with the source integrated over the
/// backward light triangle, using `G` computed on the stored snapshots.
///
/// The trajectory must start at `t = 0` with uniformly spaced snapshots and `p.t`
/// must coincide with a snapshot time.
pub fn lnf_quadrature(d: &AlphaData, traj: &Trajectory, p: SpacetimePoint, data: &ConformalData) -> Result<f64> {
    let snaps = &traj.snapshots;
    let first = snaps.first().ok_or(BzError::OutsideDomain { t: p.t, x: p.x })?;
    let g = &first.grid;
    if first.time != 0.0 {
        return Err(BzError::InvalidParameter("trajectory must start at t = 0".into()));
    }
    if p.x - p.t < g.x_min || p.x + p.t > g.x_max || p.t < 0.0 {
        return Err(BzError::OutsideDomain { t: p.t, x: p.x });
    }
    // ||f0|| <= c1/2 on the sampled domain
    let sup_f0 = g.nodes().iter().map(|&x| data.f0.value(x).abs()).fold(0.0, f64::max);
    if sup_f0 > 0.5 * data.c1 {
        return Err(BzError::InvalidParameter(format!("sup |f0| = {sup_f0} exceeds c1/2")));
    }
    let ds = traj.snapshot_dt();
    let k_end = (p.t / ds).round() as usize;
    if k_end >= snaps.len() || (snaps[k_end].time - p.t).abs() > 1e-9 * ds.max(1.0) {
        return Err(BzError::InvalidParameter(format!("t = {} is not a snapshot time", p.t)));
    }
    for k in 1..=k_end {
        if ((snaps[k].time - snaps[k - 1].time) - ds).abs() > 1e-9 * ds {
            return Err(BzError::GridMismatch("non-uniform snapshot spacing".into()));
        }
    }
    let x0 = g.x_min;
    let h = g.dx;
    let inner: Vec<f64> = (0..=k_end)
        .into_par_iter()
        .map(|k| -> Result<f64> {
            let s = &snaps[k];
            let half = p.t - s.time;
            if half <= 0.0 {
                return Ok(0.0);
            }
            let gv = source_g(s, d, s.time)?;
            let panels = 2 * ((half / h).ceil() as usize).max(1);
            let hh = 2.0 * half / panels as f64;
            let y: Vec<f64> = (0..=panels)
                .map(|m| interp_cubic(&gv, x0, h, p.x - half + m as f64 * hh))
                .collect();
            Ok(simpson(&y, hh))
        })
        .collect::<Result<_>>()?;
    let source = if k_end == 0 { 0.0 } else { simpson(&inner, ds) };
    let (a, b) = (p.x - p.t, p.x + p.t);
    let kick = quadrature::integrate(|y| data.w0(y), a, b, 1e-13)?;
    Ok(0.5 * (data.v0(b) + data.v0(a)) + 0.5 * kick + 0.5 * source)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grid(n: usize) -> Grid1D {
        Grid1D::new(-10.0, 10.0, n).unwrap()
    }

    #[test]
    fn minkowski_rhs_vanishes() {
        let s = FieldState::zeros(grid(41), 0.0, 1.0);
        let k = rhs(&s, &AlphaData::zero(), 0.0, 0.5).unwrap();
        for a in k.arrays() {
            assert!(a.iter().all(|v| *v == 0.0));
        }
        let s2 = step_rk4(&s, &AlphaData::zero(), 0.25, 0.5, 0.5).unwrap();
        assert_eq!(s2.lambda_tilde, s.lambda_tilde);
        assert_abs_diff_eq!(s2.time, 0.25);
    }

    #[test]
    fn cfl_violation_is_reported() {
        let s = FieldState::zeros(grid(41), 0.0, 1.0);
        assert!(matches!(
            step_rk4(&s, &AlphaData::zero(), 0.3, 0.5, 0.5),
            Err(BzError::CflViolation { .. })
        ));
    }

    #[test]
    fn guard_is_enforced_by_rhs() {
        let mut s = FieldState::zeros(grid(41), 0.0, 1.0);
        s.lambda_tilde[20] = -0.9;
        assert!(matches!(
            rhs(&s, &AlphaData::zero(), 0.0, 0.5),
            Err(BzError::LambdaDegenerate { node: 20, .. })
        ));
    }

    #[test]
    fn source_linear_in_time_background() {
        let c = 0.3;
        let d = AlphaData::linear_in_time(c);
        let s = FieldState::zeros(grid(21), 0.0, 1.0);
        // Lambda = 1 constant: only the alpha part remains
        let t = 2.0;
        let gv = source_g(&s, &d, t).unwrap();
        for v in gv {
            assert_abs_diff_eq!(v, c * c / (2.0 * (1.0 + c * t).powi(2)), epsilon = 1e-15);
        }
    }

    #[test]
    fn kasner_rhs_matches_analytic_second_derivative() {
        // Lambda = dk ln(1 + c t), phi = 0
        let (c, dk, t) = (0.5, 2.0, 1.0);
        let d = AlphaData::linear_in_time(c);
        let a = 1.0 + c * t;
        let lam = dk * a.ln();
        let mut s = FieldState::zeros(grid(41), t, lam);
        s.pi.iter_mut().for_each(|p| *p = dk * c / a);
        let k = rhs(&s, &d, t, 0.5).unwrap();
        for v in &k.pi {
            assert_abs_diff_eq!(*v, -dk * c * c / (a * a), epsilon = 1e-14);
        }
    }

    #[test]
    fn rk4_single_step_versus_two_half_steps() {
        let g = grid(201);
        let mut s = FieldState::zeros(g.clone(), 0.0, 1.0);
        for (i, x) in g.nodes().iter().enumerate() {
            s.lambda_tilde[i] = 0.1 * (-x * x).exp();
            s.phi[i] = 0.2 * (-(x - 0.5).powi(2)).exp();
            s.xi[i] = 0.05 * x * (-x * x).exp();
        }
        let d = AlphaData::new(Profile::Zero, Profile::gaussian(0.01, 0.0, 2.0));
        let diff = |dt: f64| {
            let one = step_rk4(&s, &d, dt, 0.5, 0.5).unwrap();
            let half = step_rk4(&s, &d, 0.5 * dt, 0.5, 0.5).unwrap();
            let two = step_rk4(&half, &d, 0.5 * dt, 0.5, 0.5).unwrap();
            one.lambda_tilde
                .iter()
                .zip(&two.lambda_tilde)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        };
        let order = (diff(0.04) / diff(0.02)).log2();
        assert!(order > 4.5, "local order {order}");
    }

    #[test]
    fn zero_perturbation_trajectory_is_constant() {
        let g = grid(81);
        let cfg = EvolutionConfig {
            output_stride: 5,
            ..EvolutionConfig::new(g.clone(), 2.0, 1.0)
        };
        let s = FieldState::zeros(g, 0.0, 1.0);
        let tr = run_simulation(&cfg, &AlphaData::zero(), &s).unwrap();
        assert!(tr.snapshots.len() > 2);
        for snap in &tr.snapshots {
            assert_eq!(snap.lambda_tilde, s.lambda_tilde);
            assert_eq!(snap.v, s.v);
        }
        assert_abs_diff_eq!(tr.last().time, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn large_data_trips_guard() {
        let g = grid(201);
        let mut s = FieldState::zeros(g.clone(), 0.0, 1.0);
        for (i, x) in g.nodes().iter().enumerate() {
            s.lambda_tilde[i] = -10.0 * (-x * x).exp();
        }
        let cfg = EvolutionConfig::new(g, 1.0, 1.0);
        assert!(matches!(
            run_simulation(&cfg, &AlphaData::zero(), &s),
            Err(BzError::LambdaDegenerate { .. })
        ));
    }

    #[test]
    fn boundary_contamination_detected() {
        let g = grid(201);
        let mut s = FieldState::zeros(g.clone(), 0.0, 1.0);
        for (i, x) in g.nodes().iter().enumerate() {
            s.lambda_tilde[i] = 0.01 * (-(x - 8.0).powi(2)).exp();
        }
        let mut cfg = EvolutionConfig::new(g, 4.0, 1.0);
        cfg.boundary_tol = Some(1e-9);
        assert!(matches!(
            run_simulation(&cfg, &AlphaData::zero(), &s),
            Err(BzError::BoundaryContamination { .. })
        ));
        assert!(cfg.check_domain(8.0, 5.0).is_err());
        assert!(cfg.check_domain(0.0, 5.0).is_ok());
    }

    #[test]
    fn residual_minkowski_is_zero() {
        let g = grid(41);
        let s0 = FieldState::zeros(g.clone(), 0.0, 1.0);
        let mut s1 = s0.clone();
        s1.time = 0.1;
        let mut s2 = s0.clone();
        s2.time = 0.2;
        let r = pde_residual(&s0, &s1, &s2, &AlphaData::zero(), true).unwrap();
        assert!(r.linf_lambda <= 1e-13 && r.linf_phi <= 1e-13 && r.linf_alpha <= 1e-13);
        assert!(r.linf_f.unwrap() <= 1e-13);
        s2.time = 0.25;
        assert!(matches!(
            pde_residual(&s0, &s1, &s2, &AlphaData::zero(), true),
            Err(BzError::GridMismatch(_))
        ));
    }

    #[test]
    fn lnf_trivial_and_free_cases() {
        let g = grid(101);
        let cfg = EvolutionConfig {
            output_stride: 1,
            ..EvolutionConfig::new(g.clone(), 1.0, 1.0)
        };
        let data = ConformalData {
            f0: Profile::Bump {
                amplitude: 0.3,
                center: 0.0,
                radius: 2.0,
            },
            f1: Profile::Zero,
            c1: 2.0,
        };
        let mut s = FieldState::zeros(g.clone(), 0.0, 1.0);
        for (i, x) in g.nodes().iter().enumerate() {
            s.v[i] = data.v0(*x);
        }
        let tr = run_simulation(&cfg, &AlphaData::zero(), &s).unwrap();
        let p = SpacetimePoint::new(tr.last().time, 0.7);
        let v = lnf_quadrature(&AlphaData::zero(), &tr, p, &data).unwrap();
        let expect = 0.5 * (data.v0(1.7) + data.v0(-0.3));
        assert_abs_diff_eq!(v, expect, epsilon = 1e-14);

        let trivial = ConformalData::trivial(3.0);
        let v = lnf_quadrature(&AlphaData::zero(), &tr, p, &trivial).unwrap();
        assert_abs_diff_eq!(v, 3f64.ln(), epsilon = 1e-15);

        let big = ConformalData {
            f0: Profile::Constant { value: 2.0 },
            ..trivial
        };
        assert!(lnf_quadrature(&AlphaData::zero(), &tr, p, &big).is_err());
        assert!(matches!(
            lnf_quadrature(&AlphaData::zero(), &tr, SpacetimePoint::new(1.0, 9.5), &data),
            Err(BzError::OutsideDomain { .. })
        ));
    }
}
