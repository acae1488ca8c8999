//! Command-line front end: `validate`, `simulate`, `exact`, `convergence` and
//! `decay-study`, each taking one or more scenario files.
//!
//! Exit codes: 0 success, 1 domain or hypothesis failure, 2 usage or schema
//! error, 3 numerical failure.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::alpha::{check_cosmological, validate_alpha_data, CheckStatus};
use crate::diagnostics::{
    compute_series, density_sample, non_increasing_after, DiagnosticsSeries, Orientation, VirialConfig, WeightMode,
};
use crate::error::BzError;
use crate::evolution::{pde_residual, run_simulation_with, NodeJets, ResidualReport, Trajectory};
use crate::fields::{FieldState, Grid1D, SpacetimePoint};
use crate::quadrature::simpson;
use crate::scenario::{load_scenario, Scenario, ScenarioError};

/// Above this amplitude `--strict` warns that the run leaves the small-data regime.
pub const SMALLNESS_WARNING: f64 = 0.1;
/// Tail start and ripple tolerance used when flagging windowed decay.
pub const DECAY_TAIL_START: f64 = 5.0;
pub const DECAY_RIPPLE: f64 = 0.02;
/// Norms below this are treated as exact zeros when estimating orders.
pub const ROUNDOFF_FLOOR: f64 = 1e-13;

#[derive(Debug, Parser)]
#[command(name = "bzwave", version, about = "Belinski-Zakharov wave laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Scenario JSON files.
    #[arg(required = true)]
    pub scenarios: Vec<PathBuf>,
    /// Output root; each run writes to `<out>/<scenario name>`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Number of scenarios run concurrently.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Warn about hypotheses that are not enforced (e.g. large amplitudes).
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check schema and background hypotheses.
    Validate(Common),
    /// Evolve and write snapshots, diagnostics and a manifest.
    Simulate(Common),
    /// Tabulate the scenario's exact family.
    Exact {
        #[command(flatten)]
        common: Common,
        /// Evaluation time (defaults to the scenario's initial time).
        #[arg(long, allow_negative_numbers = true)]
        time: Option<f64>,
    },
    /// Residual and solver-error orders over refinement levels.
    Convergence {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
    /// Windowed decay integrals for several window velocities.
    DecayStudy {
        #[command(flatten)]
        common: Common,
        /// Comma-separated velocities (defaults to the scenario's list).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        velocities: Option<Vec<f64>>,
    },
}

/// Result of one command on one scenario.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub code: i32,
    pub lines: Vec<String>,
    pub out_dir: Option<PathBuf>,
}

impl Outcome {
    fn fail(code: i32, msg: impl Into<String>) -> Self {
        Self {
            code,
            lines: vec![msg.into()],
            out_dir: None,
        }
    }
}

type Job<'a> = Box<dyn Fn(&Path, &Common) -> Outcome + Sync + 'a>;

pub fn run(cli: Cli) -> i32 {
    let (common, job): (&Common, Job) = match &cli.command {
        Command::Validate(c) => (c, Box::new(|p, c| cmd_validate(p, c.strict))),
        Command::Simulate(c) => (c, Box::new(|p, c| cmd_simulate(p, c.out.as_deref()))),
        Command::Exact { common, time } => {
            let t = *time;
            (common, Box::new(move |p, c| cmd_exact(p, c.out.as_deref(), t)))
        }
        Command::Convergence { common, levels } => {
            let l = *levels;
            (common, Box::new(move |p, c| cmd_convergence(p, c.out.as_deref(), l)))
        }
        Command::DecayStudy { common, velocities } => {
            let v = velocities.clone();
            (
                common,
                Box::new(move |p, c| cmd_decay_study(p, c.out.as_deref(), v.as_deref())),
            )
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(common.jobs.max(1)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("cannot start worker pool: {e}");
            return 3;
        }
    };
    let outcomes: Vec<Outcome> = if common.jobs > 1 {
        pool.install(|| common.scenarios.par_iter().map(|p| job(p, common)).collect())
    } else {
        common.scenarios.iter().map(|p| job(p, common)).collect()
    };
    let mut code = 0;
    for (p, o) in common.scenarios.iter().zip(&outcomes) {
        println!("== {} (exit {})", p.display(), o.code);
        for l in &o.lines {
            println!("{l}");
        }
        code = code.max(o.code);
    }
    code
}

fn load(path: &Path) -> Result<(Scenario, Vec<u8>), Outcome> {
    load_scenario(path).map_err(|e: ScenarioError| Outcome::fail(e.exit_code(), e.to_string()))
}

fn out_dir(sc: &Scenario, out: Option<&Path>) -> PathBuf {
    let root = out
        .map(Path::to_path_buf)
        .or_else(|| sc.outputs.directory.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    root.join(&sc.name)
}

fn io_fail(e: std::io::Error) -> Outcome {
    Outcome::fail(2, format!("output error: {e}"))
}

/// Hypothesis checks: `(failures, notes)`.
pub fn check_hypotheses(sc: &Scenario, strict: bool) -> (Vec<String>, Vec<String>) {
    let mut failures = Vec::new();
    let mut notes = Vec::new();
    let alpha = sc.alpha_data();
    let cosmological = sc.diagnostics.orientation == Orientation::Timelike;
    let report = validate_alpha_data(&alpha);
    for c in &report.checks {
        let tag = match c.status {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "FAIL",
            CheckStatus::Unchecked => "unchecked",
        };
        notes.push(format!("  alpha {tag:9} {}: {}", c.name, c.detail));
    }
    if cosmological {
        for c in report.failures(true) {
            failures.push(format!("alpha data: {} ({})", c.name, c.detail));
        }
        let cfg = sc.evolution_config();
        match check_cosmological(
            &alpha,
            &cfg.grid,
            sc.initial.t0,
            sc.evolution.t_end,
            41,
            sc.diagnostics.alpha_floor,
        ) {
            Ok(r) => {
                notes.push(format!(
                    "  cosmological: alpha_min={:.6e} dt_alpha_min={:.6e} max|ax|/at={:.6e} samples={}",
                    r.alpha_min, r.dt_alpha_min, r.max_gradient_ratio, r.samples
                ));
                if !r.passes() {
                    failures.push(format!(
                        "cosmological conditions fail (alpha>0: {}, dt alpha>0: {}, timelike: {}, alpha>c0: {})",
                        r.alpha_positive, r.dt_alpha_positive, r.timelike, r.lower_bound
                    ));
                }
            }
            Err(e) => failures.push(format!("cosmological check: {e}")),
        }
    } else {
        notes.push(format!(
            "  orientation {:?}: alpha hypotheses reported only",
            sc.diagnostics.orientation
        ));
    }
    let cfg = sc.evolution_config();
    if cfg.boundary_tol.is_some() {
        match sc.perturbation_radius(1e-12) {
            Some(r) => {
                if let Err(e) = cfg.check_domain(0.0, r) {
                    failures.push(e.to_string());
                }
            }
            None => failures.push("perturbation profiles do not decay; disable boundary_tol".into()),
        }
    }
    if strict && sc.initial.epsilon > SMALLNESS_WARNING {
        notes.push(format!(
            "warning: epsilon = {} exceeds {SMALLNESS_WARNING}; the small-data hypotheses are not expected to hold",
            sc.initial.epsilon
        ));
    }
    (failures, notes)
}

pub fn cmd_validate(path: &Path, strict: bool) -> Outcome {
    let (sc, _) = match load(path) {
        Ok(v) => v,
        Err(o) => return o,
    };
    let (failures, notes) = check_hypotheses(&sc, strict);
    let mut lines = vec![format!("scenario {}: schema ok", sc.name)];
    lines.extend(notes);
    for f in &failures {
        lines.push(format!("failure: {f}"));
    }
    let code = if failures.is_empty() { 0 } else { 1 };
    lines.push(if code == 0 {
        "valid".into()
    } else {
        format!("{} hypothesis failure(s)", failures.len())
    });
    Outcome {
        code,
        lines,
        out_dir: None,
    }
}

/// `{:.16e}`: 17 significant digits.
fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_csv(path: &Path, comment: Option<&str>, header: &[String], rows: &[Vec<f64>]) -> std::io::Result<()> {
    let mut s = String::new();
    if let Some(c) = comment {
        let _ = writeln!(s, "# {c}");
    }
    s.push_str(&header.join(","));
    s.push('\n');
    for r in rows {
        let cells: Vec<String> = r.iter().map(|v| fmt(*v)).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    let mut f = fs::File::create(path)?;
    f.write_all(s.as_bytes())
}

fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

fn write_snapshot(dir: &Path, k: usize, s: &FieldState, sc: &Scenario) -> crate::Result<()> {
    let alpha = sc.alpha_data();
    let jets = alpha.eval_grid(&s.grid, s.time)?;
    let rows: Vec<Vec<f64>> = (0..s.len())
        .map(|i| {
            vec![
                s.grid.x(i),
                s.lambda_tilde[i],
                s.pi[i],
                s.phi[i],
                s.xi[i],
                s.v[i],
                s.w[i],
                jets[i].alpha,
                jets[i].dt,
                jets[i].dx,
            ]
        })
        .collect();
    let comment = format!("t={} n={} dx={}", fmt(s.time), s.grid.n, fmt(s.grid.dx));
    let cols = header(&[
        "x",
        "lambda_tilde",
        "pi",
        "phi",
        "xi",
        "v",
        "w",
        "alpha",
        "alpha_t",
        "alpha_x",
    ]);
    write_csv(&dir.join(format!("snap_{k:05}.csv")), Some(&comment), &cols, &rows)
        .map_err(|e| BzError::InvalidParameter(format!("writing snapshot: {e}")))
}

fn velocity_tag(v: f64) -> String {
    format!("{v:+.2}")
}

fn series_rows(ds: &DiagnosticsSeries) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut cols = header(&["t", "energy_f", "energy_hat", "excluded_fraction"]);
    for c in &ds.configs {
        let v = velocity_tag(c.v);
        for name in [
            "virial",
            "virial_mismatch",
            "windowed_field",
            "windowed_detg",
            "localized_rate",
        ] {
            cols.push(format!("{name}_v{v}"));
        }
    }
    cols.extend(header(&[
        "e0",
        "e1",
        "e0_bar",
        "e1_bar",
        "flux_f",
        "flux_f_bar",
        "continuity_linf",
        "continuity_l2",
        "monitor_l",
        "monitor_lbar",
    ]));
    let rows = (0..ds.times.len())
        .map(|k| {
            let mut r = vec![ds.times[k], ds.energy_f[k], ds.energy_hat[k], ds.excluded_fraction[k]];
            for c in 0..ds.configs.len() {
                r.extend([
                    ds.virial[c][k],
                    ds.virial_mismatch[c][k],
                    ds.windowed_field[c][k],
                    ds.windowed_detg[c][k],
                    ds.localized_rate[c][k],
                ]);
            }
            let w = &ds.weighted[k];
            r.extend([w.e0, w.e1, w.e0_bar, w.e1_bar, ds.flux[k].f, ds.flux[k].f_bar]);
            r.extend([
                ds.continuity_linf[k],
                ds.continuity_l2[k],
                ds.monitor_l[k],
                ds.monitor_lbar[k],
            ]);
            r
        })
        .collect();
    (cols, rows)
}

const PLOT_SCRIPT: &str = r#"import sys
import pandas as pd
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

df = pd.read_csv(sys.argv[1] if len(sys.argv) > 1 else "diagnostics.csv")
fig, axes = plt.subplots(1, 2, figsize=(11, 4))
axes[0].plot(df["t"], df["energy_hat"], label="E (hat)")
axes[0].plot(df["t"], df["energy_f"], label="E (F form)", ls="--")
axes[0].set_xlabel("t")
axes[0].legend()
for col in [c for c in df.columns if c.startswith("windowed_field")]:
    axes[1].semilogy(df["t"], df[col].abs() + 1e-300, label=col)
axes[1].set_xlabel("t")
axes[1].legend()
fig.tight_layout()
fig.savefig("diagnostics.png", dpi=120)
"#;

fn hash_hex(raw: &[u8]) -> String {
    hex::encode(Sha256::digest(raw))
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

fn write_json(path: &Path, v: &impl Serialize) -> std::io::Result<()> {
    let s = serde_json::to_string_pretty(v).map_err(std::io::Error::other)?;
    fs::write(path, s + "\n")
}

fn last_finite(v: &[f64]) -> Option<f64> {
    v.iter().rev().copied().find(|x| x.is_finite())
}

/// Runs the evolution of a scenario, optionally writing snapshot files.
pub fn evolve(sc: &Scenario, snapshot_dir: Option<&Path>) -> (Trajectory, Option<BzError>) {
    let cfg = sc.evolution_config();
    let alpha = sc.alpha_data();
    let mut snaps = Vec::new();
    let initial = match sc.initial_state() {
        Ok(s) => s,
        Err(e) => {
            return (
                Trajectory {
                    snapshots: snaps,
                    dt: 0.0,
                    stride: cfg.output_stride,
                    steps: 0,
                },
                Some(e),
            )
        }
    };
    let mut k = 0;
    let res = run_simulation_with(&cfg, &alpha, &initial, &mut |s| {
        if let Some(dir) = snapshot_dir {
            write_snapshot(dir, k, s, sc)?;
        }
        k += 1;
        snaps.push(s.clone());
        Ok(())
    });
    let (steps, dt) = cfg.steps();
    let traj = Trajectory {
        snapshots: snaps,
        dt,
        stride: cfg.output_stride,
        steps,
    };
    (traj, res.err())
}

pub fn cmd_simulate(path: &Path, out: Option<&Path>) -> Outcome {
    let (sc, raw) = match load(path) {
        Ok(v) => v,
        Err(o) => return o,
    };
    let (failures, _) = check_hypotheses(&sc, false);
    if !failures.is_empty() {
        let mut o = Outcome::fail(1, "validation failed; not simulating");
        o.lines.extend(failures.into_iter().map(|f| format!("failure: {f}")));
        return o;
    }
    let dir = out_dir(&sc, out);
    let snap_dir = dir.join("snapshots");
    if let Err(e) = fs::create_dir_all(&snap_dir) {
        return io_fail(e);
    }
    let started = unix_now();
    let clock = Instant::now();
    let csv = sc.outputs.wants("csv");
    let (traj, err) = evolve(&sc, csv.then_some(snap_dir.as_path()));
    let mut lines = Vec::new();
    let mut code = 0;
    let mut outputs: Vec<String> = Vec::new();
    let mut final_values = serde_json::Map::new();
    if let Some(e) = &err {
        code = e.exit_code();
        lines.push(format!("solver error: {e}"));
    } else {
        match compute_series(&traj, &sc.alpha_data(), &sc.diagnostics_options()) {
            Ok(ds) => {
                let (cols, rows) = series_rows(&ds);
                if csv {
                    if let Err(e) = write_csv(&dir.join("diagnostics.csv"), None, &cols, &rows) {
                        return io_fail(e);
                    }
                    outputs.push("diagnostics.csv".into());
                }
                if sc.outputs.wants("json") {
                    if let Err(e) = write_json(&dir.join("diagnostics.json"), &ds) {
                        return io_fail(e);
                    }
                    outputs.push("diagnostics.json".into());
                }
                if sc.outputs.wants("plot") {
                    if let Err(e) = fs::write(dir.join("plot_diagnostics.py"), PLOT_SCRIPT) {
                        return io_fail(e);
                    }
                    outputs.push("plot_diagnostics.py".into());
                }
                if let Some(r) = rows.last() {
                    for (c, v) in cols.iter().zip(r) {
                        final_values.insert(c.clone(), json!(v.is_finite().then_some(*v)));
                    }
                }
                lines.push(format!(
                    "t = {}: E = {:.6e}, E_F = {:.6e}",
                    ds.times.last().copied().unwrap_or(f64::NAN),
                    last_finite(&ds.energy_hat).unwrap_or(f64::NAN),
                    last_finite(&ds.energy_f).unwrap_or(f64::NAN)
                ));
            }
            Err(e) => {
                code = e.exit_code();
                lines.push(format!("diagnostics error: {e}"));
            }
        }
    }
    if csv {
        outputs.push(format!("snapshots/ ({} files)", traj.snapshots.len()));
    }
    let manifest = json!({
        "scenario": sc.name,
        "command": "simulate",
        "scenario_path": path.display().to_string(),
        "config_sha256": hash_hex(&raw),
        "grid": sc.evolution.grid,
        "t0": sc.initial.t0,
        "t_end": sc.evolution.t_end,
        "dt": traj.dt,
        "steps": traj.steps,
        "snapshots": traj.snapshots.len(),
        "last_time": traj.snapshots.last().map(|s| s.time),
        "status": if err.is_none() && code == 0 { "ok" } else { "error" },
        "error": err.as_ref().map(|e| e.to_string()),
        "exit_code": code,
        "started_unix": started,
        "wall_time_s": clock.elapsed().as_secs_f64(),
        "final": final_values,
        "outputs": outputs,
    });
    if let Err(e) = write_json(&dir.join("manifest.json"), &manifest) {
        return io_fail(e);
    }
    lines.push(format!("wrote {}", dir.display()));
    Outcome {
        code,
        lines,
        out_dir: Some(dir),
    }
}

pub fn cmd_exact(path: &Path, out: Option<&Path>, time: Option<f64>) -> Outcome {
    let (sc, _) = match load(path) {
        Ok(v) => v,
        Err(o) => return o,
    };
    let sol = match sc.exact() {
        None => return Outcome::fail(2, "scenario names no exact family"),
        Some(Err(e)) => return Outcome::fail(e.exit_code(), e.to_string()),
        Some(Ok(s)) => s,
    };
    let t = time.unwrap_or(sc.initial.t0);
    let g = &sc.evolution.grid;
    let evals: Result<Vec<_>, BzError> = (0..g.n)
        .into_par_iter()
        .map(|i| sol.eval(SpacetimePoint::new(t, g.x(i))))
        .collect();
    let evals = match evals {
        Ok(e) => e,
        Err(e) => return Outcome::fail(e.exit_code(), format!("evaluation failed: {e}")),
    };
    let soliton = evals.iter().any(|e| e.soliton.is_some());
    let mut cols = header(&[
        "x", "lambda", "lambda_t", "lambda_x", "phi", "phi_t", "phi_x", "alpha", "alpha_t", "alpha_x", "g11", "g12",
        "g22", "ln_f", "e", "p", "e_hat", "p_hat",
    ]);
    if soliton {
        cols.extend(header(&[
            "mu",
            "mu_bar",
            "rho",
            "det_ratio",
            "raw_cosh_lambda",
            "cosh_lambda",
        ]));
    }
    let o = sc.diagnostics.orientation;
    let rows: Vec<Vec<f64>> = evals
        .iter()
        .map(|e| {
            let j = NodeJets {
                lambda: e.lambda.value,
                lambda_t: e.lambda.dt,
                lambda_x: e.lambda.dx,
                phi: e.phi.value,
                phi_t: e.phi.dt,
                phi_x: e.phi.dx,
            };
            let ds = density_sample(&j, &e.alpha);
            let (eh, ph) = ds.hats(o);
            let mut r = vec![
                e.point.x,
                e.lambda.value,
                e.lambda.dt,
                e.lambda.dx,
                e.phi.value,
                e.phi.dt,
                e.phi.dx,
                e.alpha.alpha,
                e.alpha.dt,
                e.alpha.dx,
                e.metric.g11,
                e.metric.g12,
                e.metric.g22,
                e.ln_f.map(|v| v.value).unwrap_or(f64::NAN),
                ds.e,
                ds.p,
                eh,
                ph,
            ];
            if let Some(s) = e.soliton {
                r.extend([s.mu, s.mu_bar, s.rho, s.det_ratio, s.raw_cosh_lambda, s.cosh_lambda]);
            } else if soliton {
                r.extend([f64::NAN; 6]);
            }
            r
        })
        .collect();
    let dir = out_dir(&sc, out);
    if let Err(e) = fs::create_dir_all(&dir) {
        return io_fail(e);
    }
    let comment = format!("family={} t={}", sol.family.name(), fmt(t));
    if let Err(e) = write_csv(&dir.join("exact.csv"), Some(&comment), &cols, &rows) {
        return io_fail(e);
    }
    let mut lines = vec![format!("{} at t = {t}: {} nodes", sol.family.name(), rows.len())];
    if let Some(s) = evals.iter().find_map(|e| e.soliton) {
        lines.push(format!(
            "  det ratio {:.12}, unnormalized cosh Lambda {:.12}, normalized cosh Lambda {:.12} (first node)",
            s.det_ratio, s.raw_cosh_lambda, s.cosh_lambda
        ));
    }
    lines.push(format!("wrote {}", dir.join("exact.csv").display()));
    Outcome {
        code: 0,
        lines,
        out_dir: Some(dir),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub dx: f64,
    pub residual: ResidualReport,
    /// max of the sup-norm residuals of all checked equations
    pub residual_norm: f64,
    pub order_residual: Option<f64>,
    pub solver_error: Option<f64>,
    pub order_solver: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceTable {
    pub family: String,
    pub rows: Vec<ConvergenceRow>,
    pub residual_exact: bool,
    pub solver_exact: bool,
    pub passes: bool,
}

fn order(coarse: f64, fine: f64) -> Option<f64> {
    (fine > ROUNDOFF_FLOOR && coarse > ROUNDOFF_FLOOR).then(|| (coarse / fine).log2())
}

/// Refinement levels `n_k = (n0 - 1) 2^k + 1` of the scenario grid.
pub fn level_grids(base: &Grid1D, levels: usize) -> crate::Result<Vec<Grid1D>> {
    (0..levels)
        .map(|k| Grid1D::new(base.x_min, base.x_max, (base.n - 1) * (1 << k) + 1))
        .collect()
}

/// Residual of the exact family sampled at `t - dt, t, t + dt` with `dt = cfl dx`.
pub fn exact_residual(sc: &Scenario, grid: &Grid1D, t: f64) -> crate::Result<ResidualReport> {
    let sol = sc
        .exact()
        .ok_or_else(|| BzError::InvalidParameter("scenario names no exact family".into()))??;
    let dt = sc.evolution.cfl * grid.dx;
    let lam = sc.initial.lambda;
    let a = sol.sample_state(grid, t - dt, lam)?;
    let b = sol.sample_state(grid, t, lam)?;
    let c = sol.sample_state(grid, t + dt, lam)?;
    let with_f = sol.eval(SpacetimePoint::new(t, grid.x(grid.n / 2)))?.ln_f.is_some();
    pde_residual(&a, &b, &c, &sol.alpha, with_f)
}

/// Evolves the exact data from `t0` to `t_end` and returns the sup error of
/// `(Lambda~, phi, ln f)` on nodes outside the reach of the boundaries.
pub fn solver_error(sc: &Scenario, grid: &Grid1D) -> crate::Result<f64> {
    let sol = sc
        .exact()
        .ok_or_else(|| BzError::InvalidParameter("scenario names no exact family".into()))??;
    let mut cfg = sc.evolution_config_on(grid.clone());
    cfg.boundary_tol = None;
    cfg.output_stride = usize::MAX;
    let init = sol.sample_state(grid, sc.initial.t0, sc.initial.lambda)?;
    let mut last = None;
    run_simulation_with(&cfg, &sol.alpha, &init, &mut |s| {
        last = Some(s.clone());
        Ok(())
    })?;
    let fin = last.expect("at least the initial snapshot");
    let exact = sol.sample_state(grid, fin.time, sc.initial.lambda)?;
    let with_f = sol
        .eval(SpacetimePoint::new(fin.time, grid.x(grid.n / 2)))?
        .ln_f
        .is_some();
    // numerical signals from the one-sided edges travel at most about 1.5
    let reach = 1.5 * cfg.t_end + 6.0 * grid.dx;
    let mut err: f64 = 0.0;
    for i in 0..grid.n {
        let x = grid.x(i);
        if x - grid.x_min < reach || grid.x_max - x < reach {
            continue;
        }
        err = err.max((fin.lambda_tilde[i] - exact.lambda_tilde[i]).abs());
        err = err.max((fin.phi[i] - exact.phi[i]).abs());
        if with_f {
            err = err.max((fin.v[i] - exact.v[i]).abs());
        }
    }
    Ok(err)
}

pub fn convergence_study(sc: &Scenario, levels: usize, solver: bool) -> crate::Result<ConvergenceTable> {
    let grids = level_grids(&sc.evolution.grid, levels)?;
    let sol = sc
        .exact()
        .ok_or_else(|| BzError::InvalidParameter("scenario names no exact family".into()))??;
    let unperturbed = sc.initial.epsilon == 0.0;
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for g in &grids {
        let residual = exact_residual(sc, g, sc.evolution.t_end)?;
        let residual_norm = residual
            .linf_lambda
            .max(residual.linf_phi)
            .max(residual.linf_f.unwrap_or(0.0));
        let solver_error = if solver && unperturbed {
            Some(solver_error(sc, g)?)
        } else {
            None
        };
        let (order_residual, order_solver) = match rows.last() {
            Some(p) => (
                order(p.residual_norm, residual_norm),
                p.solver_error.zip(solver_error).and_then(|(a, b)| order(a, b)),
            ),
            None => (None, None),
        };
        rows.push(ConvergenceRow {
            n: g.n,
            dx: g.dx,
            residual,
            residual_norm,
            order_residual,
            solver_error,
            order_solver,
        });
    }
    let residual_exact = rows.iter().all(|r| r.residual_norm <= ROUNDOFF_FLOOR);
    let solver_exact = rows.iter().all(|r| r.solver_error.is_none_or(|e| e <= ROUNDOFF_FLOOR));
    let c = &sc.convergence;
    let ok_res = residual_exact
        || rows[1..]
            .iter()
            .all(|r| r.residual_norm <= ROUNDOFF_FLOOR || r.order_residual.is_some_and(|o| o >= c.residual_order));
    let ok_sol = solver_exact
        || rows[1..].iter().all(|r| {
            r.solver_error.is_none_or(|e| e <= ROUNDOFF_FLOOR) || r.order_solver.is_some_and(|o| o >= c.solver_order)
        });
    Ok(ConvergenceTable {
        family: sol.family.name().into(),
        rows,
        residual_exact,
        solver_exact,
        passes: ok_res && ok_sol,
    })
}

fn opt_fmt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "-".into())
}

pub fn cmd_convergence(path: &Path, out: Option<&Path>, levels: usize) -> Outcome {
    if levels < 3 {
        return Outcome::fail(2, format!("--levels must be >= 3, got {levels}"));
    }
    let (sc, _) = match load(path) {
        Ok(v) => v,
        Err(o) => return o,
    };
    if sc.initial.exact.is_none() {
        return Outcome::fail(2, "convergence needs an exact family in the scenario");
    }
    let table = match convergence_study(&sc, levels, sc.convergence.solver) {
        Ok(t) => t,
        Err(e) => return Outcome::fail(e.exit_code(), format!("convergence study failed: {e}")),
    };
    let mut lines = vec![format!(
        "{}: residual order >= {}, solver order >= {}",
        table.family, sc.convergence.residual_order, sc.convergence.solver_order
    )];
    lines.push(format!(
        "{:>7} {:>12} {:>12} {:>8} {:>12} {:>8}",
        "n", "dx", "residual", "order", "solver_err", "order"
    ));
    for r in &table.rows {
        lines.push(format!(
            "{:>7} {:>12.4e} {:>12.4e} {:>8} {:>12} {:>8}",
            r.n,
            r.dx,
            r.residual_norm,
            if table.residual_exact {
                "exact".into()
            } else {
                opt_fmt(r.order_residual)
            },
            r.solver_error.map(|e| format!("{e:.4e}")).unwrap_or_else(|| "-".into()),
            if table.solver_exact {
                "exact".into()
            } else {
                opt_fmt(r.order_solver)
            },
        ));
    }
    let dir = out_dir(&sc, out);
    if let Err(e) = fs::create_dir_all(&dir) {
        return io_fail(e);
    }
    let rows: Vec<Vec<f64>> = table
        .rows
        .iter()
        .map(|r| {
            vec![
                r.n as f64,
                r.dx,
                r.residual.linf_lambda,
                r.residual.linf_phi,
                r.residual.linf_f.unwrap_or(f64::NAN),
                r.residual_norm,
                r.order_residual.unwrap_or(f64::NAN),
                r.solver_error.unwrap_or(f64::NAN),
                r.order_solver.unwrap_or(f64::NAN),
            ]
        })
        .collect();
    let cols = header(&[
        "n",
        "dx",
        "residual_lambda",
        "residual_phi",
        "residual_f",
        "residual",
        "order_residual",
        "solver_error",
        "order_solver",
    ]);
    if let Err(e) = write_csv(&dir.join("convergence.csv"), None, &cols, &rows) {
        return io_fail(e);
    }
    if let Err(e) = write_json(&dir.join("convergence.json"), &table) {
        return io_fail(e);
    }
    let code = if table.passes { 0 } else { 1 };
    lines.push(if table.passes {
        "orders meet thresholds".into()
    } else {
        "observed order below threshold".into()
    });
    Outcome {
        code,
        lines,
        out_dir: Some(dir),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DecaySummary {
    pub v: f64,
    pub max_windowed: f64,
    pub final_windowed: f64,
    pub final_over_max: f64,
    pub tail_non_increasing: bool,
    /// `int_0^T (1/omega) int sech^2(z) e^ dx dt`
    pub averaged_integral: f64,
    pub max_virial_mismatch: f64,
}

pub fn decay_summaries(ds: &DiagnosticsSeries) -> Vec<DecaySummary> {
    ds.configs
        .iter()
        .enumerate()
        .map(|(c, cfg)| {
            let w = &ds.windowed_field[c];
            let max = w.iter().fold(0.0f64, |m, v| m.max(*v));
            let fin = w.last().copied().unwrap_or(f64::NAN);
            DecaySummary {
                v: cfg.v,
                max_windowed: max,
                final_windowed: fin,
                final_over_max: if max > 0.0 { fin / max } else { 0.0 },
                tail_non_increasing: non_increasing_after(&ds.times, w, DECAY_TAIL_START, DECAY_RIPPLE),
                averaged_integral: cumulative_integral(&ds.times, &ds.localized_rate[c])
                    .last()
                    .copied()
                    .unwrap_or(0.0),
                max_virial_mismatch: ds.virial_mismatch[c]
                    .iter()
                    .filter(|v| v.is_finite())
                    .fold(0.0f64, |m, v| m.max(*v)),
            }
        })
        .collect()
}

/// Trapezoidal running integral of `y` over `t`.
fn cumulative_integral(t: &[f64], y: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(t.len());
    let mut acc = 0.0;
    for k in 0..t.len() {
        if k > 0 {
            acc += 0.5 * (t[k] - t[k - 1]) * (y[k] + y[k - 1]);
        }
        out.push(acc);
    }
    out
}

pub fn cmd_decay_study(path: &Path, out: Option<&Path>, velocities: Option<&[f64]>) -> Outcome {
    let (mut sc, raw) = match load(path) {
        Ok(v) => v,
        Err(o) => return o,
    };
    if sc.diagnostics.orientation != Orientation::Timelike {
        return Outcome::fail(1, "decay study needs a timelike (cosmological) scenario");
    }
    let vs: Vec<f64> = velocities
        .map(<[f64]>::to_vec)
        .unwrap_or_else(|| sc.diagnostics.decay_velocities.clone());
    let configs: Result<Vec<VirialConfig>, BzError> = vs
        .iter()
        .map(|&v| VirialConfig::new(v, WeightMode::LogSquared))
        .collect();
    sc.diagnostics.virial = match configs {
        Ok(c) => c,
        Err(e) => return Outcome::fail(2, e.to_string()),
    };
    sc.diagnostics.flux = false;
    let (failures, _) = check_hypotheses(&sc, false);
    if !failures.is_empty() {
        let mut o = Outcome::fail(1, "validation failed; not running");
        o.lines.extend(failures.into_iter().map(|f| format!("failure: {f}")));
        return o;
    }
    let clock = Instant::now();
    let (traj, err) = evolve(&sc, None);
    if let Some(e) = err {
        return Outcome::fail(e.exit_code(), format!("solver error: {e}"));
    }
    let ds = match compute_series(&traj, &sc.alpha_data(), &sc.diagnostics_options()) {
        Ok(d) => d,
        Err(e) => return Outcome::fail(e.exit_code(), format!("diagnostics error: {e}")),
    };
    let dir = out_dir(&sc, out);
    if let Err(e) = fs::create_dir_all(&dir) {
        return io_fail(e);
    }
    for (c, cfg) in ds.configs.iter().enumerate() {
        let avg = cumulative_integral(&ds.times, &ds.localized_rate[c]);
        let rows: Vec<Vec<f64>> = (0..ds.times.len())
            .map(|k| {
                vec![
                    ds.times[k],
                    ds.windowed_field[c][k],
                    ds.windowed_detg[c][k],
                    ds.localized_rate[c][k],
                    avg[k],
                    ds.virial[c][k],
                    ds.virial_mismatch[c][k],
                ]
            })
            .collect();
        let cols = header(&[
            "t",
            "windowed_field",
            "windowed_detg",
            "localized_rate",
            "averaged_integral",
            "virial",
            "virial_mismatch",
        ]);
        let name = format!("decay_v{}.csv", velocity_tag(cfg.v));
        if let Err(e) = write_csv(&dir.join(name), None, &cols, &rows) {
            return io_fail(e);
        }
    }
    let summaries = decay_summaries(&ds);
    let mut lines = Vec::new();
    for s in &summaries {
        lines.push(format!(
            "v = {:+.2}: final/max = {:.4e}, averaged integral = {:.6e}, tail {}",
            s.v,
            s.final_over_max,
            s.averaged_integral,
            if s.tail_non_increasing {
                "non-increasing"
            } else {
                "NOT non-increasing (flagged)"
            }
        ));
    }
    let summary = json!({
        "scenario": sc.name,
        "config_sha256": hash_hex(&raw),
        "wall_time_s": clock.elapsed().as_secs_f64(),
        "tail_start": DECAY_TAIL_START,
        "ripple": DECAY_RIPPLE,
        "velocities": summaries,
    });
    if let Err(e) = write_json(&dir.join("decay_summary.json"), &summary) {
        return io_fail(e);
    }
    lines.push(format!("wrote {}", dir.display()));
    Outcome {
        code: 0,
        lines,
        out_dir: Some(dir),
    }
}

/// Integral of `y` on a uniform grid (re-exported for reports).
pub fn integrate_uniform(y: &[f64], h: f64) -> f64 {
    simpson(y, h)
}
