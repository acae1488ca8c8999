//! Acceptance criteria. Each criterion prints one PASS/FAIL line; the process
//! exits non-zero when any criterion fails.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use bzwave::alpha::{classify_gradient, default_null_tol, AlphaData, AlphaJet2, GradientClass};
use bzwave::cli::{cmd_simulate, evolve, exact_residual};
use bzwave::diagnostics::{
    compute_series, continuity_residuals, density_sample, non_increasing_after, virial_rate_check, weighted_norms,
    DiagnosticsSeries, Orientation, VirialConfig, WeightMode,
};
use bzwave::evolution::{lnf_quadrature, run_simulation, run_simulation_with, NodeJets, Trajectory};
use bzwave::exact::{eval_kasner_soliton, ExactFamily, KasnerParams, SolitonParams};
use bzwave::fields::{fields_from_metric, metric_from_fields, FieldState, Grid1D, SpacetimePoint};
use bzwave::profile::Profile;
use bzwave::scenario::{load_scenario, Scenario};

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn scenario_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(format!("{name}.json"))
}

fn scenario(name: &str) -> Scenario {
    load_scenario(&scenario_path(name)).expect("bundled scenario loads").0
}

fn log2_orders(norms: &[f64]) -> Vec<f64> {
    norms.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

fn fmt_orders(o: &[f64]) -> String {
    o.iter().map(|v| format!("{v:.2}")).collect::<Vec<_>>().join("/")
}

fn verdict(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn grid_like(g: &Grid1D, n: usize) -> Grid1D {
    Grid1D::new(g.x_min, g.x_max, n).unwrap()
}

fn with_family(name: &str, family: ExactFamily) -> Scenario {
    let mut sc = scenario(name);
    sc.initial.exact = Some(family);
    sc
}

const LEVELS: [usize; 3] = [401, 801, 1601];

fn c1_exact_residuals() -> Verdict {
    let cases = [
        ("traveling", scenario("traveling_wave")),
        (
            "kasner d=1",
            with_family(
                "kasner_background",
                ExactFamily::KasnerBackground(KasnerParams::new(1.0)),
            ),
        ),
        (
            "kasner d=2",
            with_family(
                "kasner_background",
                ExactFamily::KasnerBackground(KasnerParams::new(2.0)),
            ),
        ),
        ("soliton", scenario("kasner_soliton")),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    let mut slowest: f64 = 0.0;
    for (label, sc) in &cases {
        let mut norms = Vec::new();
        for n in LEVELS {
            let g = grid_like(&sc.evolution.grid, n);
            let clock = Instant::now();
            let r = exact_residual(sc, &g, 1.0).map_err(|e| format!("{label}: {e}"))?;
            slowest = slowest.max(clock.elapsed().as_secs_f64());
            norms.push(r.linf_lambda.max(r.linf_phi).max(r.linf_f.unwrap_or(0.0)));
        }
        let o = log2_orders(&norms);
        ok &= o.iter().all(|v| *v >= 1.8);
        parts.push(format!("{label} {}", fmt_orders(&o)));
    }
    ok &= slowest < 10.0;
    verdict(ok, format!("orders {}; slowest level {slowest:.2}s", parts.join(", ")))
}

fn c2_metric_dictionary() -> Verdict {
    let mut rng = StdRng::seed_from_u64(2);
    let (mut det_err, mut trip_err): (f64, f64) = (0.0, 0.0);
    for _ in 0..10_000 {
        let lambda = rng.gen_range(0.01..4.0);
        let phi = rng.gen_range(0.0..PI);
        let alpha = 10f64.powf(rng.gen_range(-3.0..3.0));
        let m = metric_from_fields(lambda, phi, alpha, None).map_err(|e| e.to_string())?;
        det_err = det_err.max((m.det() / (alpha * alpha) - 1.0).abs());
        let back = fields_from_metric(&m).map_err(|e| e.to_string())?;
        let mut dphi = (back.phi - phi).rem_euclid(PI);
        dphi = dphi.min(PI - dphi);
        trip_err = trip_err
            .max((back.lambda - lambda).abs())
            .max(dphi)
            .max((back.alpha / alpha - 1.0).abs());
    }
    verdict(
        det_err <= 1e-12 && trip_err < 1e-10,
        format!("max det relative error {det_err:.2e}, max round-trip error {trip_err:.2e} (10^4 samples)"),
    )
}

fn c3_density_inequalities() -> Verdict {
    let mut rng = StdRng::seed_from_u64(3);
    let mut worst: f64 = f64::NEG_INFINITY;
    let mut violations = 0;
    for _ in 0..10_000 {
        let dt = 10f64.powf(rng.gen_range(-2.0..2.0));
        let a = AlphaJet2 {
            alpha: 10f64.powf(rng.gen_range(-2.0..2.0)),
            dt,
            dx: dt * rng.gen_range(-0.99..0.99),
            ..Default::default()
        };
        let j = NodeJets {
            lambda: rng.gen_range(-4.0..4.0),
            lambda_t: rng.gen_range(-5.0..5.0),
            lambda_x: rng.gen_range(-5.0..5.0),
            phi: rng.gen_range(0.0..PI),
            phi_t: rng.gen_range(-5.0..5.0),
            phi_x: rng.gen_range(-5.0..5.0),
        };
        let s = density_sample(&j, &a);
        let (e, p) = s.hats(Orientation::Timelike);
        let lower = s.kappa.abs() * (a.dt.abs() - a.dx.abs()) * s.h1;
        let improved = a.alpha / (2.0 * a.dt) * s.h1;
        let scale = e.abs().max(s.h1).max(lower).max(improved);
        let slack = 1e-12 * scale;
        // each gap must be >= -slack
        let gaps = [
            s.h1,
            s.h1 - 2.0 * s.h2.abs(),
            e - lower,
            lower,
            e - p.abs(),
            e - improved,
        ];
        for g in gaps {
            let rel = -g / scale;
            worst = worst.max(rel);
            if g < -slack || !g.is_finite() {
                violations += 1;
            }
        }
    }
    verdict(
        violations == 0,
        format!("{violations} violations, worst relative deficit {worst:.2e} (10^4 jets)"),
    )
}

fn c4_kasner_densities() -> Verdict {
    let mut worst: f64 = 0.0;
    for d in [1.0, 1.5, 2.0] {
        let sc = with_family("kasner_background", ExactFamily::KasnerBackground(KasnerParams::new(d)));
        let sol = sc.exact().unwrap().map_err(|e| e.to_string())?;
        let g = grid_like(&sc.evolution.grid, 161);
        for t in [0.0, 1.0, 4.0] {
            for i in 0..g.n {
                let ev = sol.eval(SpacetimePoint::new(t, g.x(i))).map_err(|e| e.to_string())?;
                let a = ev.alpha;
                let j = NodeJets {
                    lambda: ev.lambda.value,
                    lambda_t: ev.lambda.dt,
                    lambda_x: ev.lambda.dx,
                    phi: ev.phi.value,
                    phi_t: ev.phi.dt,
                    phi_x: ev.phi.dx,
                };
                let (e, p) = density_sample(&j, &a).hats(Orientation::Timelike);
                let (e_ref, p_ref) = (d * d * a.dt / a.alpha, d * d * a.dx / a.alpha);
                worst = worst.max((e / e_ref - 1.0).abs()).max((p - p_ref).abs() / e_ref);
            }
        }
    }
    verdict(
        worst <= 1e-12,
        format!("max relative error {worst:.2e} (d = 1, 1.5, 2)"),
    )
}

fn continuity_norm(sc: &Scenario, n: usize, t: f64, o: Orientation) -> Result<f64, String> {
    let sol = sc.exact().unwrap().map_err(|e| e.to_string())?;
    let g = grid_like(&sc.evolution.grid, n);
    let dt = 0.5 * g.dx;
    let lam = sc.initial.lambda;
    let st = |s: f64| sol.sample_state(&g, s, lam).map_err(|e| e.to_string());
    let r = continuity_residuals(&st(t - dt)?, &st(t)?, &st(t + dt)?, &sol.alpha, o).map_err(|e| e.to_string())?;
    if r.nodes_used == 0 {
        return Err("no applicable nodes".into());
    }
    Ok(r.linf())
}

fn c5_continuity() -> Verdict {
    let cases = [
        ("kasner raw", scenario("kasner_background"), Orientation::Raw, 2.0),
        (
            "kasner timelike",
            scenario("kasner_background"),
            Orientation::Timelike,
            2.0,
        ),
        ("soliton raw", scenario("kasner_soliton"), Orientation::Raw, 2.0),
        (
            "soliton timelike",
            scenario("kasner_soliton"),
            Orientation::Timelike,
            2.0,
        ),
        (
            "einstein-rosen spacelike",
            scenario("er_bessel"),
            Orientation::Spacelike,
            1.5,
        ),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (label, sc, o, t) in &cases {
        let norms: Vec<f64> = LEVELS
            .iter()
            .map(|&n| continuity_norm(sc, n, *t, *o))
            .collect::<Result<_, _>>()?;
        let ord = log2_orders(&norms);
        ok &= ord.iter().all(|v| *v >= 1.8);
        parts.push(format!("{label} {}", fmt_orders(&ord)));
    }
    let mink = with_family("minkowski", ExactFamily::Minkowski { lambda: 1.0, phi: 0.3 });
    let mink = Scenario { alpha: None, ..mink };
    let sol = mink.exact().unwrap().map_err(|e| e.to_string())?;
    let g = grid_like(&mink.evolution.grid, 201);
    let st = |s: f64| sol.sample_state(&g, s, 1.0).map_err(|e| e.to_string());
    let mut mink_max: f64 = 0.0;
    for o in [Orientation::Raw, Orientation::Timelike, Orientation::Spacelike] {
        let r = continuity_residuals(&st(0.9)?, &st(1.0)?, &st(1.1)?, &sol.alpha, o).map_err(|e| e.to_string())?;
        mink_max = mink_max.max(r.linf());
    }
    ok &= mink_max <= 1e-13;
    verdict(
        ok,
        format!("orders {}; minkowski residual {mink_max:.1e}", parts.join(", ")),
    )
}

fn virial_configs() -> [VirialConfig; 2] {
    [
        VirialConfig::new(0.0, WeightMode::LogSquared).unwrap(),
        VirialConfig::new(0.3, WeightMode::LogSquared).unwrap(),
    ]
}

/// Evolves `sc` on `grid` up to just past `t` and returns the snapshots
/// bracketing the one closest to `t`.
fn triplet_near(sc: &Scenario, grid: Grid1D, t: f64) -> Result<[FieldState; 3], String> {
    let mut cfg = sc.evolution_config_on(grid.clone());
    cfg.boundary_tol = None;
    cfg.output_stride = 1;
    let (_, dt) = cfg.steps();
    cfg.t_end = t - sc.initial.t0 + 3.0 * dt;
    let init = sc.initial_state_on(&grid).map_err(|e| e.to_string())?;
    let mut kept: Vec<FieldState> = Vec::new();
    run_simulation_with(&cfg, &sc.alpha_data(), &init, &mut |s| {
        if (s.time - t).abs() < 2.5 * dt {
            kept.push(s.clone());
        }
        Ok(())
    })
    .map_err(|e| e.to_string())?;
    let k = (1..kept.len() - 1)
        .min_by(|&a, &b| (kept[a].time - t).abs().total_cmp(&(kept[b].time - t).abs()))
        .ok_or("too few snapshots")?;
    Ok([kept[k - 1].clone(), kept[k].clone(), kept[k + 1].clone()])
}

fn c6_virial_rate() -> Verdict {
    let sc = scenario("kasner_background");
    let sol = sc.exact().unwrap().map_err(|e| e.to_string())?;
    let mut ok = true;
    let mut parts = Vec::new();
    for cfg in virial_configs() {
        let mut norms = Vec::new();
        for n in [1601, 3201, 6401] {
            // the identity drops boundary terms, so the background densities must decay inside the domain
            let g = Grid1D::new(-250.0, 250.0, n).unwrap();
            let dt = 0.5 * g.dx;
            let st = |s: f64| sol.sample_state(&g, s, sc.initial.lambda).map_err(|e| e.to_string());
            let r = virial_rate_check(&st(3.0 - dt)?, &st(3.0)?, &st(3.0 + dt)?, &sol.alpha, &cfg)
                .map_err(|e| e.to_string())?;
            norms.push(r.mismatch);
        }
        let o = log2_orders(&norms);
        ok &= o.iter().all(|v| *v >= 1.8);
        parts.push(format!("kasner v={} {}", cfg.v, fmt_orders(&o)));
    }
    let small = scenario("smalldata_gaussian");
    for cfg in virial_configs() {
        let mut norms = Vec::new();
        for n in [601, 1201, 2401] {
            let [a, b, c] = triplet_near(&small, Grid1D::new(-30.0, 30.0, n).unwrap(), 3.0)?;
            let r = virial_rate_check(&a, &b, &c, &small.alpha_data(), &cfg).map_err(|e| e.to_string())?;
            norms.push(r.mismatch);
        }
        let o = log2_orders(&norms);
        ok &= o.iter().all(|v| *v >= 1.8);
        parts.push(format!("small data v={} {}", cfg.v, fmt_orders(&o)));
    }
    verdict(ok, format!("mismatch orders {}", parts.join(", ")))
}

struct SmallRun {
    series: DiagnosticsSeries,
    seconds: f64,
    error: Option<String>,
}

fn small_run() -> &'static SmallRun {
    static RUN: OnceLock<SmallRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let sc = scenario("smalldata_gaussian");
        let clock = Instant::now();
        let (traj, err) = evolve(&sc, None);
        let series = compute_series(&traj, &sc.alpha_data(), &sc.diagnostics_options()).expect("diagnostics");
        SmallRun {
            series,
            seconds: clock.elapsed().as_secs_f64(),
            error: err.map(|e| e.to_string()),
        }
    })
}

/// Final-over-peak threshold for the windowed decay, fixed after the first verified run.
const DECAY_FRACTION: f64 = 0.2;

fn c7_decay() -> Verdict {
    let sc = scenario("smalldata_gaussian");
    let run = small_run();
    if let Some(e) = &run.error {
        return Err(format!("run failed: {e}"));
    }
    let s = &run.series;
    let mut ok = sc.evolution.grid.n == 2001 && run.seconds < 60.0 && (s.times.last().unwrap() - 50.0).abs() < 1e-9;
    let mut parts = Vec::new();
    for v in [0.0, 0.3, 0.6] {
        let c = s
            .configs
            .iter()
            .position(|c| c.v == v)
            .ok_or(format!("no window for v = {v}"))?;
        let w = &s.windowed_field[c];
        let peak = w.iter().fold(0.0f64, |m, x| m.max(*x));
        let ratio = w.last().unwrap() / peak;
        let mono = non_increasing_after(&s.times, w, 5.0, 0.02);
        ok &= mono && ratio < DECAY_FRACTION;
        parts.push(format!(
            "v={v}: final/max {ratio:.1e}{}",
            if mono { "" } else { " (not monotone)" }
        ));
    }
    verdict(ok, format!("{}; runtime {:.1}s", parts.join(", "), run.seconds))
}

fn c8_soliton_identities() -> Verdict {
    let sc = scenario("kasner_soliton");
    let sol = sc.exact().unwrap().map_err(|e| e.to_string())?;
    let g = grid_like(&sc.evolution.grid, 301);
    let (mut prod_err, mut det_lo, mut det_hi, mut cosh_min) = (0.0f64, f64::INFINITY, 0.0f64, f64::INFINITY);
    for t in [0.0, 1.0, 4.0] {
        for i in 0..g.n {
            let ev = sol.eval(SpacetimePoint::new(t, g.x(i))).map_err(|e| e.to_string())?;
            let s = ev.soliton.ok_or("missing soliton data")?;
            let a2 = ev.alpha.alpha * ev.alpha.alpha;
            prod_err = prod_err.max((s.mu * s.mu_bar / a2 - 1.0).abs());
            det_lo = det_lo.min(s.det_ratio);
            det_hi = det_hi.max(s.det_ratio);
            cosh_min = cosh_min.min(s.cosh_lambda);
        }
    }
    let spread = (det_hi - det_lo) / det_lo;
    let r = eval_kasner_soliton(
        &SolitonParams::new(1.0, 2.0),
        &AlphaData::zero(),
        SpacetimePoint::new(0.0, 0.0),
    )
    .map_err(|e| e.to_string())?;
    let ref_err = (r.lambda.value - 2f64.acosh())
        .abs()
        .max((r.phi.value - PI / 12.0).abs());
    verdict(
        prod_err <= 1e-12 && spread <= 1e-10 && cosh_min >= 1.0 && ref_err <= 1e-12,
        format!(
            "mu mu_bar error {prod_err:.1e}, det/alpha^2 = {det_lo:.12} (spread {spread:.1e}), min cosh {cosh_min:.3}, reference error {ref_err:.1e}"
        ),
    )
}

fn c9_global_existence() -> Verdict {
    let run = small_run();
    if let Some(e) = &run.error {
        return Err(format!("run failed: {e}"));
    }
    let s = &run.series;
    let mut flux_last = 0.0;
    let mut total = Vec::new();
    for (k, w) in s.weighted.iter().enumerate() {
        let f = s.flux[k].f + s.flux[k].f_bar;
        if f.is_finite() {
            flux_last = f;
        }
        total.push(w.e0 + w.e1 + w.e0_bar + w.e1_bar + flux_last);
    }
    let early = s
        .times
        .iter()
        .zip(&total)
        .filter(|(t, _)| **t <= 1.0)
        .fold(0.0f64, |m, (_, v)| m.max(*v));
    let worst = total.iter().fold(0.0f64, |m, v| m.max(*v)) / early;
    let e0 = |eps: f64| -> Result<f64, String> {
        let mut sc = scenario("smalldata_gaussian");
        sc.initial.epsilon = eps;
        let st = sc.initial_state().map_err(|e| e.to_string())?;
        let w = weighted_norms(&st, sc.diagnostics.delta);
        Ok(w.e0 + w.e1 + w.e0_bar + w.e1_bar)
    };
    let scaling = e0(2e-3)? / e0(1e-3)?;
    verdict(
        worst <= 3.0 && (scaling / 4.0 - 1.0).abs() <= 0.01,
        format!("no guard trip to t = 50, sup (E+F) / early max = {worst:.3}, E(0) ratio {scaling:.6}"),
    )
}

fn lnf_scenario() -> Scenario {
    let mut sc = scenario("smalldata_gaussian");
    sc.initial.epsilon = 0.05;
    sc.initial.f0 = Profile::gaussian(1.0, 0.5, 1.0);
    sc.initial.f1 = Profile::gaussian(0.5, -0.5, 1.5);
    sc.evolution.t_end = 2.0;
    sc.evolution.boundary_tol = None;
    sc.outputs.stride = 1;
    sc
}

fn c10_lnf() -> Verdict {
    let sc = lnf_scenario();
    let data = sc.conformal_data();
    let mut errs = Vec::new();
    let mut f_positive = true;
    for n in [201, 401, 801] {
        let g = Grid1D::new(-20.0, 20.0, n).unwrap();
        let cfg = sc.evolution_config_on(g.clone());
        let init = sc.initial_state_on(&g).map_err(|e| e.to_string())?;
        let traj: Trajectory = run_simulation(&cfg, &sc.alpha_data(), &init).map_err(|e| e.to_string())?;
        let last = traj.last();
        f_positive &= traj.snapshots.iter().all(|s| s.v.iter().all(|v| v.exp() > 0.0));
        let mut err: f64 = 0.0;
        for x in [-3.0, 0.0, 1.5, 3.0] {
            let i = ((x - g.x_min) / g.dx).round() as usize;
            let q = lnf_quadrature(&sc.alpha_data(), &traj, SpacetimePoint::new(last.time, g.x(i)), &data)
                .map_err(|e| e.to_string())?;
            err = err.max((last.v[i] - q).abs());
        }
        errs.push(err);
    }
    let o = log2_orders(&errs);
    verdict(
        f_positive && o.iter().all(|v| *v >= 1.8),
        format!(
            "errors {:.2e}/{:.2e}/{:.2e}, orders {}, f > 0: {f_positive}",
            errs[0],
            errs[1],
            errs[2],
            fmt_orders(&o)
        ),
    )
}

fn fd4<F: Fn(f64) -> f64>(f: F, h: f64) -> f64 {
    (f(-2.0 * h) - 8.0 * f(-h) + 8.0 * f(h) - f(2.0 * h)) / (12.0 * h)
}

fn c11_alpha_machinery() -> Verdict {
    let data = [
        scenario("smalldata_gaussian").alpha_data(),
        scenario("kasner_soliton").alpha_data(),
        {
            AlphaData::new(
                Profile::Bump {
                    amplitude: 0.004,
                    center: 0.5,
                    radius: 2.0,
                },
                Profile::gaussian(0.01, 0.0, 1.0),
            )
        },
    ];
    let mut rng = StdRng::seed_from_u64(11);
    let (mut wave, mut fd, mut conj) = (0.0f64, 0.0f64, 0.0f64);
    let h = 1e-3;
    for d in &data {
        for _ in 0..300 {
            let (t, x) = (rng.gen_range(0.0..10.0), rng.gen_range(-15.0..15.0));
            let j = d.eval(SpacetimePoint::new(t, x)).unwrap();
            wave = wave.max((j.dtt - j.dxx).abs());
            let at = |s: f64, y: f64| d.eval(SpacetimePoint::new(t + s, x + y)).unwrap();
            fd = fd
                .max((fd4(|s| at(s, 0.0).dt, h) - j.dtt).abs())
                .max((fd4(|y| at(0.0, y).dx, h) - j.dxx).abs())
                .max((fd4(|s| at(s, 0.0).alpha, h) - j.dt).abs());
            let beta = |s: f64, y: f64| d.beta(0.7, SpacetimePoint::new(t + s, x + y)).unwrap().beta;
            conj = conj
                .max((fd4(|s| beta(s, 0.0), h) - j.dx).abs())
                .max((fd4(|y| beta(0.0, y), h) - j.dt).abs());
        }
    }
    let class = |d: &AlphaData, t: f64, x: f64| {
        let j = d.eval(SpacetimePoint::new(t, x)).unwrap();
        classify_gradient(&j, default_null_tol(&j))
    };
    let null = bzwave::exact::traveling_alpha(
        &Profile::Linear {
            slope: 0.5,
            intercept: 0.0,
        },
        1.0,
    );
    let classes = [
        class(&AlphaData::linear_in_time(0.5), 1.0, 0.3) == GradientClass::Timelike,
        class(&AlphaData::radial(), 0.5, 2.0) == GradientClass::Spacelike,
        class(&null, 1.0, 3.0) == GradientClass::Null,
    ];
    verdict(
        wave <= 1e-12 && conj < 1e-10 && fd < 1e-8 && classes.iter().all(|c| *c),
        format!("|a_tt - a_xx| {wave:.1e}, jet vs FD {fd:.1e}, beta conjugacy {conj:.1e}, classification {classes:?}"),
    )
}

fn csv_files(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(csv_files(&p));
        } else if p.extension().is_some_and(|x| x == "csv") {
            out.push(p);
        }
    }
    out.sort();
    out
}

fn c12_determinism() -> Verdict {
    let path = scenario_path("minkowski");
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let o = cmd_simulate(&path, Some(d.path()));
        if o.code != 0 {
            return Err(format!("simulate exited {}: {:?}", o.code, o.lines));
        }
    }
    let (fa, fb) = (csv_files(a.path()), csv_files(b.path()));
    if fa.is_empty() || fa.len() != fb.len() {
        return Err(format!("file sets differ ({} vs {})", fa.len(), fb.len()));
    }
    let mut differing = 0;
    for (x, y) in fa.iter().zip(&fb) {
        if std::fs::read(x).unwrap() != std::fs::read(y).unwrap() {
            differing += 1;
        }
    }
    verdict(
        differing == 0,
        format!("{} CSV files compared, {differing} differ", fa.len()),
    )
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("exact-solution residuals", c1_exact_residuals),
        ("metric dictionary", c2_metric_dictionary),
        ("density inequalities", c3_density_inequalities),
        ("Kasner densities", c4_kasner_densities),
        ("continuity identities", c5_continuity),
        ("virial rate identity", c6_virial_rate),
        ("decay experiment", c7_decay),
        ("soliton identities", c8_soliton_identities),
        ("global-existence monitor", c9_global_existence),
        ("ln f cross-validation", c10_lnf),
        ("alpha machinery", c11_alpha_machinery),
        ("determinism", c12_determinism),
    ];
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let id = format!("{}", k + 1);
        if !filters.is_empty() && !filters.iter().any(|q| *q == id || name.contains(q.as_str())) {
            continue;
        }
        let clock = Instant::now();
        let r = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = clock.elapsed().as_secs_f64();
        match r {
            Ok(d) => println!("criterion {:>2} PASS {name}: {d} [{secs:.1}s]", k + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name}: {d} [{secs:.1}s]", k + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion/criteria failed");
        std::process::exit(1);
    }
}
