//! Scenario documents: a single JSON file describing the background, the
//! initial data, the evolution window, diagnostics and outputs of one run.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::alpha::AlphaData;
use crate::diagnostics::{DiagnosticsOptions, Orientation, VirialConfig, WeightMode};
use crate::error::BzError;
use crate::evolution::{ConformalData, EvolutionConfig};
use crate::exact::{ExactFamily, ExactSolution};
use crate::fields::{FieldState, Grid1D};
use crate::profile::Profile;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed scenario: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid scenario: {0}")]
    Schema(String),
    #[error(transparent)]
    Model(#[from] BzError),
}

impl ScenarioError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ScenarioError::Model(e) => e.exit_code(),
            _ => 2,
        }
    }
}

fn one() -> f64 {
    1.0
}
fn zero_profile() -> Profile {
    Profile::Zero
}
fn default_cfl() -> f64 {
    0.5
}
fn default_guard() -> f64 {
    0.5
}
fn default_boundary_tol() -> Option<f64> {
    Some(1e-9)
}
fn default_stride() -> usize {
    10
}
fn default_delta() -> f64 {
    crate::alpha::DEFAULT_DELTA
}
fn default_true() -> bool {
    true
}
fn default_velocities() -> Vec<f64> {
    vec![0.0, 0.3, 0.6]
}
fn default_virial() -> Vec<VirialConfig> {
    vec![VirialConfig {
        v: 0.0,
        weight_mode: WeightMode::LogSquared,
    }]
}
fn default_orientation() -> Orientation {
    Orientation::Timelike
}
fn default_formats() -> Vec<String> {
    vec!["csv".into(), "json".into(), "plot".into()]
}
fn default_residual_order() -> f64 {
    1.8
}
fn default_solver_order() -> f64 {
    3.5
}

/// Initial data. Without `exact`:
/// `Lambda~ = eps L0`, `dt Lambda~ = eps L1`, `phi = eps P0`, `dt phi = eps P1`,
/// `f = c1 + eps F0`, `dt f = eps F1`. With `exact`, the family sampled at `t0`
/// is the base state, the same perturbations are added to it and `f` is
/// multiplied by `(c1 + eps F0) / c1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialData {
    #[serde(default)]
    pub epsilon: f64,
    /// Base value `lambda` of `Lambda = lambda + Lambda~`.
    pub lambda: f64,
    #[serde(default = "one")]
    pub c1: f64,
    #[serde(default = "zero_profile")]
    pub lambda_tilde0: Profile,
    #[serde(default = "zero_profile")]
    pub lambda_tilde1: Profile,
    #[serde(default = "zero_profile")]
    pub phi0: Profile,
    #[serde(default = "zero_profile")]
    pub phi1: Profile,
    #[serde(default = "zero_profile")]
    pub f0: Profile,
    #[serde(default = "zero_profile")]
    pub f1: Profile,
    #[serde(default)]
    pub exact: Option<ExactFamily>,
    #[serde(default)]
    pub t0: f64,
}

impl InitialData {
    fn profiles(&self) -> [(&'static str, &Profile); 6] {
        [
            ("lambda_tilde0", &self.lambda_tilde0),
            ("lambda_tilde1", &self.lambda_tilde1),
            ("phi0", &self.phi0),
            ("phi1", &self.phi1),
            ("f0", &self.f0),
            ("f1", &self.f1),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionSpec {
    pub grid: Grid1D,
    /// Final time (absolute).
    pub t_end: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "default_guard")]
    pub guard_fraction: f64,
    #[serde(default = "default_boundary_tol")]
    pub boundary_tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSpec {
    #[serde(default = "default_virial")]
    pub virial: Vec<VirialConfig>,
    #[serde(default = "default_orientation")]
    pub orientation: Orientation,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_true")]
    pub flux: bool,
    #[serde(default = "default_velocities")]
    pub decay_velocities: Vec<f64>,
    /// Lower bound `c0` on `alpha` used by the cosmological check.
    #[serde(default)]
    pub alpha_floor: f64,
}

impl Default for DiagnosticsSpec {
    fn default() -> Self {
        Self {
            virial: default_virial(),
            orientation: default_orientation(),
            delta: default_delta(),
            flux: true,
            decay_velocities: default_velocities(),
            alpha_floor: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub directory: Option<String>,
    #[serde(default = "default_stride")]
    pub stride: usize,
    /// Any of `csv` (snapshots and series), `json` (sidecar), `plot` (script).
    #[serde(default = "default_formats")]
    pub formats: Vec<String>,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            directory: None,
            stride: default_stride(),
            formats: default_formats(),
        }
    }
}

impl OutputSpec {
    pub fn wants(&self, f: &str) -> bool {
        self.formats.iter().any(|x| x == f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceSpec {
    #[serde(default = "default_residual_order")]
    pub residual_order: f64,
    #[serde(default = "default_solver_order")]
    pub solver_order: f64,
    /// Also evolve from the exact data and measure the solver error.
    #[serde(default = "default_true")]
    pub solver: bool,
}

impl Default for ConvergenceSpec {
    fn default() -> Self {
        Self {
            residual_order: 1.8,
            solver_order: 3.5,
            solver: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    /// Allows non-decaying profiles (`constant`, `linear`).
    #[serde(default)]
    pub test_mode: bool,
    #[serde(default)]
    pub alpha: Option<AlphaData>,
    pub initial: InitialData,
    pub evolution: EvolutionSpec,
    #[serde(default)]
    pub diagnostics: DiagnosticsSpec,
    #[serde(default)]
    pub outputs: OutputSpec,
    #[serde(default)]
    pub convergence: ConvergenceSpec,
}

/// Reads a scenario file; tabulated profiles given as `{"family": "tabulated", "csv": "file"}`
/// are loaded relative to the scenario's directory. Returns the raw bytes too.
pub fn load_scenario(path: &Path) -> Result<(Scenario, Vec<u8>), ScenarioError> {
    let raw = std::fs::read(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let sc = parse_scenario(&raw, base)?;
    Ok((sc, raw))
}

pub fn parse_scenario(raw: &[u8], base_dir: &Path) -> Result<Scenario, ScenarioError> {
    let mut v: Value = serde_json::from_slice(raw)?;
    resolve_tables(&mut v, base_dir)?;
    let sc: Scenario = serde_json::from_value(v)?;
    sc.check()?;
    Ok(sc)
}

fn resolve_tables(v: &mut Value, base: &Path) -> Result<(), ScenarioError> {
    match v {
        Value::Object(map) => {
            let is_table = map.get("family").and_then(Value::as_str) == Some("tabulated");
            if is_table {
                if let Some(Value::String(file)) = map.remove("csv") {
                    let pts = read_table(&base.join(&file))?;
                    map.insert("points".into(), serde_json::to_value(pts)?);
                }
            }
            for child in map.values_mut() {
                resolve_tables(child, base)?;
            }
        }
        Value::Array(items) => {
            for child in items {
                resolve_tables(child, base)?;
            }
        }
        _ => {}
    }
    Ok(())
}

/// Two numeric columns `s, y`; a non-numeric first row is a header, `#` starts a comment.
fn read_table(path: &Path) -> Result<Vec<[f64; 2]>, ScenarioError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| ScenarioError::Schema(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| ScenarioError::Schema(format!("{}: {e}", path.display())))?;
        let parse = |i: usize| rec.get(i).and_then(|s| s.parse::<f64>().ok());
        match (parse(0), parse(1)) {
            (Some(s), Some(y)) => out.push([s, y]),
            _ if k == 0 => continue,
            _ => {
                return Err(ScenarioError::Schema(format!("{}: bad row {}", path.display(), k + 1)));
            }
        }
    }
    Ok(out)
}

impl Scenario {
    fn check(&self) -> Result<(), ScenarioError> {
        let schema = |m: String| Err(ScenarioError::Schema(m));
        let ini = &self.initial;
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return schema(format!(
                "name {:?} must be a non-empty file-name-safe string",
                self.name
            ));
        }
        if !(ini.epsilon >= 0.0) || !ini.epsilon.is_finite() {
            return schema(format!("epsilon = {} must be >= 0", ini.epsilon));
        }
        if !(ini.lambda > 0.0) {
            return schema(format!("lambda = {} must be > 0", ini.lambda));
        }
        if !(ini.c1 > 0.0) {
            return schema(format!("c1 = {} must be > 0", ini.c1));
        }
        if !self.test_mode {
            for (name, p) in ini.profiles() {
                if p.is_test_only() {
                    return schema(format!("profile {name} does not decay; set test_mode to use it"));
                }
            }
            if let Some(a) = &self.alpha {
                if a.is_test_only() {
                    return schema("alpha data does not decay; set test_mode to use it".into());
                }
            }
            if let Some(ExactFamily::Traveling { h, k, l, m, .. }) = &ini.exact {
                if [h, k, l, m].iter().any(|p| p.is_test_only()) {
                    return schema("traveling profiles do not decay; set test_mode to use them".into());
                }
            }
        }
        match (&ini.exact, &self.alpha) {
            (Some(f), Some(_)) if f.implied_alpha().is_some() => {
                return schema(format!("family {} fixes alpha; remove the alpha block", f.name()));
            }
            (Some(f), None) if f.implied_alpha().is_none() => {
                return schema(format!("family {} needs an alpha block", f.name()));
            }
            (None, None) => return schema("an alpha block is required without an exact family".into()),
            _ => {}
        }
        if !(self.evolution.t_end >= ini.t0) {
            return schema(format!("t_end = {} precedes t0 = {}", self.evolution.t_end, ini.t0));
        }
        if self.outputs.stride == 0 {
            return schema("outputs.stride must be >= 1".into());
        }
        for f in &self.outputs.formats {
            if !["csv", "json", "plot"].contains(&f.as_str()) {
                return schema(format!("unknown output format {f:?}"));
            }
        }
        for c in &self.diagnostics.virial {
            c.validate()?;
        }
        for &v in &self.diagnostics.decay_velocities {
            if !(v.abs() < 1.0) {
                return schema(format!("decay velocity {v} must satisfy |v| < 1"));
            }
        }
        if !(self.diagnostics.delta > 0.0) {
            return schema("diagnostics.delta must be > 0".into());
        }
        self.exact().transpose()?;
        self.evolution_config().validate()?;
        Ok(())
    }

    pub fn alpha_data(&self) -> AlphaData {
        self.initial
            .exact
            .as_ref()
            .and_then(|f| f.implied_alpha())
            .or_else(|| self.alpha.clone())
            .unwrap_or_else(AlphaData::zero)
    }

    pub fn exact(&self) -> Option<crate::Result<ExactSolution>> {
        self.initial
            .exact
            .as_ref()
            .map(|f| ExactSolution::new(f.clone(), self.alpha.clone()))
    }

    /// Evolution window from `t0` to `t_end` on the scenario grid.
    pub fn evolution_config(&self) -> EvolutionConfig {
        self.evolution_config_on(self.evolution.grid.clone())
    }

    pub fn evolution_config_on(&self, grid: Grid1D) -> EvolutionConfig {
        let e = &self.evolution;
        EvolutionConfig {
            grid,
            t_end: e.t_end - self.initial.t0,
            cfl: e.cfl,
            lambda0: self.initial.lambda,
            guard_fraction: e.guard_fraction,
            output_stride: self.outputs.stride,
            boundary_tol: e.boundary_tol,
        }
    }

    pub fn conformal_data(&self) -> ConformalData {
        let i = &self.initial;
        ConformalData {
            f0: i.f0.scaled(i.epsilon),
            f1: i.f1.scaled(i.epsilon),
            c1: i.c1,
        }
    }

    /// Radius about the origin beyond which every scaled perturbation is below `tol`.
    pub fn perturbation_radius(&self, tol: f64) -> Option<f64> {
        let i = &self.initial;
        let mut r: f64 = 0.0;
        for (_, p) in i.profiles() {
            r = r.max(p.scaled(i.epsilon).effective_radius(tol)?);
        }
        Some(r)
    }

    pub fn initial_state(&self) -> crate::Result<FieldState> {
        self.initial_state_on(&self.evolution.grid)
    }

    pub fn initial_state_on(&self, grid: &Grid1D) -> crate::Result<FieldState> {
        let i = &self.initial;
        let eps = i.epsilon;
        let mut s = match self.exact() {
            Some(sol) => sol?.sample_state(grid, i.t0, i.lambda)?,
            None => FieldState::zeros(grid.clone(), i.t0, i.lambda),
        };
        for (k, x) in grid.nodes().into_iter().enumerate() {
            s.lambda_tilde[k] += eps * i.lambda_tilde0.value(x);
            s.pi[k] += eps * i.lambda_tilde1.value(x);
            s.phi[k] += eps * i.phi0.value(x);
            s.xi[k] += eps * i.phi1.value(x);
            let f = i.c1 + eps * i.f0.value(x);
            if !(f > 0.0) {
                return Err(BzError::NonPositiveF(f));
            }
            let ft = eps * i.f1.value(x);
            if i.exact.is_some() {
                s.v[k] += (f / i.c1).ln();
            } else {
                s.v[k] = f.ln();
            }
            s.w[k] += ft / f;
        }
        Ok(s)
    }

    pub fn diagnostics_options(&self) -> DiagnosticsOptions {
        let d = &self.diagnostics;
        DiagnosticsOptions {
            configs: d.virial.clone(),
            orientation: d.orientation,
            delta: d.delta,
            epsilon: self.initial.epsilon,
            flux: d.flux,
        }
    }
}
