//! Configuration-driven command-line front end.
//!
//! A scenario is a key = value file with sections; every key can be
//! overridden by a long flag of the same name. Presets carry the parameter
//! sets of the reference figures. Subcommands cover each pipeline stage:
//! `rho` (Ermakov solution + frequency curve), `cat` (squeezed-cat
//! construction and its internal consistency), `wigner` (phase-space grids
//! by either or both methods), and `sweep` (batch runs over one or two
//! scalar parameters).
//!
//! Exit codes: 0 success, 2 validation failure, 3 solver failure,
//! 4 consistency failure, 5 all sweep points failed.

use crate::ermakov::{self, ErmakovError, ErmakovSolution};
use crate::evolution::{evolve, make_cat, CatSpec, EvolutionError};
use crate::fock::{auto_dim, FockState};
use crate::format::write_e12;
use crate::frequency::{FrequencyError, FrequencyProfile};
use crate::wigner::{wigner_closed_form, wigner_series, GridSpec, WignerError, WignerGrid};
use num_complex::Complex64 as C64;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_CONSISTENCY: i32 = 4;
pub const EXIT_SWEEP_ALL_FAILED: i32 = 5;

/// Internal-consistency floor for `cat` (evolve vs direct construction).
pub const CAT_FIDELITY_FLOOR: f64 = 1.0 - 1e-6;
/// Method-discrepancy ceiling for `wigner --method both`.
pub const WIGNER_DISCREPANCY_CEILING: f64 = 1e-5;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Frequency(#[from] FrequencyError),
    #[error(transparent)]
    Ermakov(#[from] ErmakovError),
    #[error(transparent)]
    Evolution(#[from] EvolutionError),
    #[error(transparent)]
    Wigner(#[from] WignerError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("consistency: {0}")]
    Consistency(String),
    #[error("sweep: every point failed")]
    SweepAllFailed,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Frequency(_) => EXIT_VALIDATION,
            CliError::Ermakov(_)
            | CliError::Evolution(_)
            | CliError::Wigner(_)
            | CliError::Io(_) => EXIT_SOLVER,
            CliError::Consistency(_) => EXIT_CONSISTENCY,
            CliError::SweepAllFailed => EXIT_SWEEP_ALL_FAILED,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProfileConfig {
    Constant {
        omega: f64,
    },
    TanhStep {
        omega_i: f64,
        omega_f: f64,
        t_s: f64,
        epsilon: f64,
    },
    Tabulated {
        table: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truncation {
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    /// Analytic for a step profile, numeric otherwise.
    Auto,
    Analytic,
    Numeric,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridConfig {
    /// Mean +/- 6 sigma coverage at the default 161 points per axis.
    Auto,
    /// Auto coverage with the resolution raised to sample fringes.
    Resolved,
    Explicit {
        q_min: f64,
        q_max: f64,
        p_min: f64,
        p_max: f64,
        points: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub parameter: String,
    pub values: Vec<f64>,
    pub parameter2: Option<String>,
    pub values2: Vec<f64>,
}

/// Fully resolved run description; validates module preconditions on build.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub label: String,
    pub profile: ProfileConfig,
    pub alpha: C64,
    pub minimum_index: usize,
    pub truncation: Truncation,
    pub t_end: f64,
    pub mesh_step: f64,
    pub tolerance: f64,
    pub route: Route,
    pub grid: GridConfig,
    pub outdir: PathBuf,
    pub formats: Vec<OutputFormat>,
    /// Reserved; the pipeline is deterministic and never consumes it.
    pub seed: Option<u64>,
    pub sweep: Option<SweepConfig>,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            label: String::new(),
            profile: ProfileConfig::TanhStep {
                omega_i: 1.0,
                omega_f: 2.0,
                t_s: 2.0,
                epsilon: 10.0,
            },
            alpha: C64::new(3.0, 0.0),
            minimum_index: 0,
            truncation: Truncation::Auto,
            t_end: 10.0,
            mesh_step: 2e-3,
            tolerance: 1e-10,
            route: Route::Auto,
            grid: GridConfig::Auto,
            outdir: PathBuf::from("out"),
            formats: vec![OutputFormat::Csv, OutputFormat::Json],
            seed: None,
            sweep: None,
        }
    }
}

impl Scenario {
    /// Build the frequency profile, validating its parameters (and loading
    /// the table for tabulated profiles).
    pub fn build_profile(&self) -> Result<FrequencyProfile, CliError> {
        match &self.profile {
            ProfileConfig::Constant { omega } => Ok(FrequencyProfile::constant(*omega)?),
            ProfileConfig::TanhStep {
                omega_i,
                omega_f,
                t_s,
                epsilon,
            } => Ok(FrequencyProfile::tanh_step(
                *omega_i, *omega_f, *t_s, *epsilon,
            )?),
            ProfileConfig::Tabulated { table } => {
                let (times, values) = load_frequency_table(table)?;
                Ok(FrequencyProfile::tabulated(times, values)?)
            }
        }
    }

    /// Check everything the commands rely on; called after assembly.
    pub fn validate(&self) -> Result<(), CliError> {
        self.build_profile()?;
        if !(self.t_end > 0.0) {
            return Err(CliError::Config(format!(
                "t_end must be positive, got {}",
                self.t_end
            )));
        }
        if let ProfileConfig::TanhStep { t_s, .. } = self.profile {
            if self.t_end <= t_s {
                return Err(CliError::Config(format!(
                    "t_end = {} must exceed t_s = {t_s}",
                    self.t_end
                )));
            }
        }
        if !(self.mesh_step > 0.0) {
            return Err(CliError::Config(format!(
                "mesh_step must be positive, got {}",
                self.mesh_step
            )));
        }
        if !(self.tolerance > 0.0) {
            return Err(CliError::Config(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.formats.is_empty() {
            return Err(CliError::Config(
                "formats must include csv and/or json".into(),
            ));
        }
        if let GridConfig::Explicit {
            q_min,
            q_max,
            p_min,
            p_max,
            points,
        } = self.grid
        {
            if !(q_max > q_min) || !(p_max > p_min) {
                return Err(CliError::Config("grid bounds must be increasing".into()));
            }
            if points < 2 {
                return Err(CliError::Config("grid points must be at least 2".into()));
            }
        }
        if self.route == Route::Analytic && !matches!(self.profile, ProfileConfig::TanhStep { .. })
        {
            return Err(CliError::Config(
                "route = analytic requires a tanh_step profile".into(),
            ));
        }
        if let Some(sw) = &self.sweep {
            validate_sweep_parameter(&sw.parameter)?;
            if sw.values.is_empty() {
                return Err(CliError::Config("sweep values list is empty".into()));
            }
            if let Some(p2) = &sw.parameter2 {
                validate_sweep_parameter(p2)?;
                if sw.values2.is_empty() {
                    return Err(CliError::Config("sweep values2 list is empty".into()));
                }
            }
        }
        Ok(())
    }

    fn file(&self, stem: &str, ext: &str) -> PathBuf {
        let name = if self.label.is_empty() {
            format!("{stem}.{ext}")
        } else {
            format!("{stem}_{}.{ext}", self.label)
        };
        self.outdir.join(name)
    }

    fn wants(&self, f: OutputFormat) -> bool {
        self.formats.contains(&f)
    }

    /// Scenario echo written next to every command's outputs.
    fn metadata(&self) -> serde_json::Value {
        let profile = match &self.profile {
            ProfileConfig::Constant { omega } => serde_json::json!({
                "kind": "constant", "omega": omega,
            }),
            ProfileConfig::TanhStep {
                omega_i,
                omega_f,
                t_s,
                epsilon,
            } => serde_json::json!({
                "kind": "tanh_step",
                "omega_i": omega_i, "omega_f": omega_f, "t_s": t_s, "epsilon": epsilon,
            }),
            ProfileConfig::Tabulated { table } => serde_json::json!({
                "kind": "tabulated", "table": table.display().to_string(),
            }),
        };
        serde_json::json!({
            "label": self.label,
            "profile": profile,
            "alpha_re": self.alpha.re,
            "alpha_im": self.alpha.im,
            "minimum_index": self.minimum_index,
            "truncation": match self.truncation {
                Truncation::Auto => "auto".to_string(),
                Truncation::Fixed(n) => n.to_string(),
            },
            "t_end": self.t_end,
            "mesh_step": self.mesh_step,
            "tolerance": self.tolerance,
            "route": match self.route {
                Route::Auto => "auto",
                Route::Analytic => "analytic",
                Route::Numeric => "numeric",
            },
            "seed": self.seed,
        })
    }
}

fn validate_sweep_parameter(name: &str) -> Result<(), CliError> {
    const ALLOWED: [&str; 6] = [
        "omega_i", "omega_f", "t_s", "epsilon", "alpha_re", "alpha_im",
    ];
    if ALLOWED.contains(&name) {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "unknown sweep parameter '{name}' (allowed: {})",
            ALLOWED.join(", ")
        )))
    }
}

/// Two-column CSV (time, frequency); an unparseable first line is a header.
fn load_frequency_table(path: &Path) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read table {}: {e}", path.display())))?;
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut cells = line.split(',').map(str::trim);
        let (a, b) = (cells.next().unwrap_or(""), cells.next().unwrap_or(""));
        match (a.parse::<f64>(), b.parse::<f64>()) {
            (Ok(t), Ok(w)) => {
                times.push(t);
                values.push(w);
            }
            _ if i == 0 => continue, // header
            _ => {
                return Err(CliError::Config(format!(
                    "table {} line {}: expected two numbers, got '{line}'",
                    path.display(),
                    i + 1
                )))
            }
        }
    }
    Ok((times, values))
}

// ---------------------------------------------------------------------------
// Config file parsing: strict `[section]` + `key = value`.

type RawConfig = BTreeMap<(String, String), String>;

fn parse_config_text(text: &str) -> Result<RawConfig, CliError> {
    let mut out = RawConfig::new();
    let mut section = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            section = name.trim().to_string();
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Config(format!(
                "line {}: expected 'key = value', got '{line}'",
                i + 1
            )));
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if out.insert((section.clone(), key.clone()), value).is_some() {
            return Err(CliError::Config(format!(
                "duplicate key '{key}' in section [{section}]"
            )));
        }
    }
    Ok(out)
}

fn parse_f64(section: &str, key: &str, v: &str) -> Result<f64, CliError> {
    v.parse::<f64>()
        .map_err(|_| CliError::Config(format!("[{section}] {key}: expected a number, got '{v}'")))
}

fn parse_usize(section: &str, key: &str, v: &str) -> Result<usize, CliError> {
    v.parse::<usize>()
        .map_err(|_| CliError::Config(format!("[{section}] {key}: expected an integer, got '{v}'")))
}

/// Apply a parsed config onto a scenario, rejecting unknown sections/keys.
fn apply_config(s: &mut Scenario, cfg: &RawConfig) -> Result<(), CliError> {
    // Grid keys may arrive in any order; collect then resolve.
    let mut grid_kind: Option<String> = None;
    let mut grid_vals: BTreeMap<&'static str, f64> = BTreeMap::new();
    let mut grid_points: Option<usize> = None;
    let mut sweep = s.sweep.clone().unwrap_or(SweepConfig {
        parameter: String::new(),
        values: Vec::new(),
        parameter2: None,
        values2: Vec::new(),
    });

    for ((section, key), value) in cfg {
        match (section.as_str(), key.as_str()) {
            ("profile", "kind") => match value.as_str() {
                "constant" => {
                    if !matches!(s.profile, ProfileConfig::Constant { .. }) {
                        s.profile = ProfileConfig::Constant { omega: 1.0 };
                    }
                }
                "tanh_step" => {
                    if !matches!(s.profile, ProfileConfig::TanhStep { .. }) {
                        s.profile = ProfileConfig::TanhStep {
                            omega_i: 1.0,
                            omega_f: 2.0,
                            t_s: 2.0,
                            epsilon: 10.0,
                        };
                    }
                }
                "tabulated" => {
                    if !matches!(s.profile, ProfileConfig::Tabulated { .. }) {
                        s.profile = ProfileConfig::Tabulated {
                            table: PathBuf::new(),
                        };
                    }
                }
                other => {
                    return Err(CliError::Config(format!(
                        "[profile] kind: unknown profile kind '{other}'"
                    )))
                }
            },
            ("profile", "omega") => {
                let w = parse_f64(section, key, value)?;
                s.profile = ProfileConfig::Constant { omega: w };
            }
            ("profile", "omega_i")
            | ("profile", "omega_f")
            | ("profile", "t_s")
            | ("profile", "epsilon") => {
                let v = parse_f64(section, key, value)?;
                let (mut oi, mut of, mut ts, mut eps) = match s.profile {
                    ProfileConfig::TanhStep {
                        omega_i,
                        omega_f,
                        t_s,
                        epsilon,
                    } => (omega_i, omega_f, t_s, epsilon),
                    _ => (1.0, 2.0, 2.0, 10.0),
                };
                match key.as_str() {
                    "omega_i" => oi = v,
                    "omega_f" => of = v,
                    "t_s" => ts = v,
                    _ => eps = v,
                }
                s.profile = ProfileConfig::TanhStep {
                    omega_i: oi,
                    omega_f: of,
                    t_s: ts,
                    epsilon: eps,
                };
            }
            ("profile", "table") => {
                s.profile = ProfileConfig::Tabulated {
                    table: PathBuf::from(value),
                };
            }
            ("state", "alpha_re") => s.alpha.re = parse_f64(section, key, value)?,
            ("state", "alpha_im") => s.alpha.im = parse_f64(section, key, value)?,
            ("state", "minimum_index") => s.minimum_index = parse_usize(section, key, value)?,
            ("state", "truncation") => {
                s.truncation = if value == "auto" {
                    Truncation::Auto
                } else {
                    Truncation::Fixed(parse_usize(section, key, value)?)
                };
            }
            ("state", "seed") => {
                s.seed = Some(value.parse::<u64>().map_err(|_| {
                    CliError::Config(format!("[state] seed: expected an integer, got '{value}'"))
                })?);
            }
            ("solver", "t_end") => s.t_end = parse_f64(section, key, value)?,
            ("solver", "mesh_step") => s.mesh_step = parse_f64(section, key, value)?,
            ("solver", "tolerance") => s.tolerance = parse_f64(section, key, value)?,
            ("solver", "route") => {
                s.route = match value.as_str() {
                    "auto" => Route::Auto,
                    "analytic" => Route::Analytic,
                    "numeric" => Route::Numeric,
                    other => {
                        return Err(CliError::Config(format!(
                            "[solver] route: expected auto|analytic|numeric, got '{other}'"
                        )))
                    }
                };
            }
            ("grid", "spec") => grid_kind = Some(value.clone()),
            ("grid", "q_min") | ("grid", "q_max") | ("grid", "p_min") | ("grid", "p_max") => {
                let slot = match key.as_str() {
                    "q_min" => "q_min",
                    "q_max" => "q_max",
                    "p_min" => "p_min",
                    _ => "p_max",
                };
                grid_vals.insert(slot, parse_f64(section, key, value)?);
            }
            ("grid", "points") => grid_points = Some(parse_usize(section, key, value)?),
            ("output", "dir") => s.outdir = PathBuf::from(value),
            ("output", "formats") => {
                s.formats = parse_formats(value)?;
            }
            ("sweep", "parameter") => sweep.parameter = value.clone(),
            ("sweep", "values") => sweep.values = parse_value_list(section, key, value)?,
            ("sweep", "parameter2") => sweep.parameter2 = Some(value.clone()),
            ("sweep", "values2") => sweep.values2 = parse_value_list(section, key, value)?,
            _ => {
                return Err(CliError::Config(format!(
                    "unknown key '{key}' in section [{section}]"
                )))
            }
        }
    }

    if grid_kind.is_some() || !grid_vals.is_empty() || grid_points.is_some() {
        s.grid = resolve_grid(grid_kind.as_deref(), &grid_vals, grid_points, s.grid)?;
    }
    if !sweep.parameter.is_empty() || !sweep.values.is_empty() {
        s.sweep = Some(sweep);
    }
    Ok(())
}

fn parse_formats(value: &str) -> Result<Vec<OutputFormat>, CliError> {
    let mut formats = Vec::new();
    for item in value.split(',').map(str::trim).filter(|v| !v.is_empty()) {
        match item {
            "csv" => formats.push(OutputFormat::Csv),
            "json" => formats.push(OutputFormat::Json),
            other => {
                return Err(CliError::Config(format!(
                    "formats: expected csv/json entries, got '{other}'"
                )))
            }
        }
    }
    formats.sort();
    formats.dedup();
    Ok(formats)
}

fn parse_value_list(section: &str, key: &str, value: &str) -> Result<Vec<f64>, CliError> {
    value
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| parse_f64(section, key, v))
        .collect()
}

fn resolve_grid(
    kind: Option<&str>,
    vals: &BTreeMap<&'static str, f64>,
    points: Option<usize>,
    current: GridConfig,
) -> Result<GridConfig, CliError> {
    match kind {
        Some("auto") => Ok(GridConfig::Auto),
        Some("resolved") => Ok(GridConfig::Resolved),
        Some("explicit") | None => {
            let (mut q_min, mut q_max, mut p_min, mut p_max, mut pts) = match current {
                GridConfig::Explicit {
                    q_min,
                    q_max,
                    p_min,
                    p_max,
                    points,
                } => (q_min, q_max, p_min, p_max, points),
                _ => (-8.0, 8.0, -8.0, 8.0, crate::wigner::DEFAULT_GRID_POINTS),
            };
            if let Some(v) = vals.get("q_min") {
                q_min = *v;
            }
            if let Some(v) = vals.get("q_max") {
                q_max = *v;
            }
            if let Some(v) = vals.get("p_min") {
                p_min = *v;
            }
            if let Some(v) = vals.get("p_max") {
                p_max = *v;
            }
            if let Some(p) = points {
                pts = p;
            }
            Ok(GridConfig::Explicit {
                q_min,
                q_max,
                p_min,
                p_max,
                points: pts,
            })
        }
        Some(other) => Err(CliError::Config(format!(
            "[grid] spec: expected auto|resolved|explicit, got '{other}'"
        ))),
    }
}

// ---------------------------------------------------------------------------
// Presets.

/// Named parameter sets reproducing the reference figures. `fig1`/`fig2`
/// expand to the three final-frequency curves; `fig3a`/`fig3b` are the two
/// phase-space panels.
pub fn preset(name: &str) -> Result<Vec<Scenario>, CliError> {
    let base = Scenario::default();
    let tanh = |omega_f: f64| ProfileConfig::TanhStep {
        omega_i: 1.0,
        omega_f,
        t_s: 2.0,
        epsilon: 10.0,
    };
    match name {
        "fig1" | "fig2" => Ok([2.0, 3.0, 4.0]
            .into_iter()
            .map(|omega_f| Scenario {
                label: format!("{name}_wf{omega_f:.0}"),
                profile: tanh(omega_f),
                t_end: if name == "fig1" { 6.0 } else { 10.0 },
                ..base.clone()
            })
            .collect()),
        "fig3a" | "fig3b" => {
            let omega_f = if name == "fig3a" { 2.0 } else { 4.0 };
            Ok(vec![Scenario {
                label: name.to_string(),
                profile: tanh(omega_f),
                alpha: C64::new(3.0, 0.0),
                t_end: 6.0,
                ..base
            }])
        }
        other => Err(CliError::Config(format!(
            "unknown preset '{other}' (available: fig1, fig2, fig3a, fig3b)"
        ))),
    }
}

// ---------------------------------------------------------------------------
// Shared pipeline pieces.

fn solve_route(s: &Scenario, profile: &FrequencyProfile) -> Result<ErmakovSolution, CliError> {
    let analytic = match s.route {
        Route::Analytic => true,
        Route::Numeric => false,
        Route::Auto => matches!(s.profile, ProfileConfig::TanhStep { .. }),
    };
    if analytic {
        if let ProfileConfig::TanhStep {
            omega_i,
            omega_f,
            t_s,
            epsilon,
        } = s.profile
        {
            return Ok(ermakov::solve_analytic_step(
                omega_i,
                omega_f,
                t_s,
                epsilon,
                s.t_end,
                s.mesh_step,
            )?);
        }
    }
    let (rho0, v0) = ermakov::equilibrium_start(profile)?;
    Ok(ermakov::solve_numeric(
        profile,
        rho0,
        v0,
        s.t_end,
        s.tolerance,
    )?)
}

/// Cat pipeline shared by `cat`, `wigner`, and `sweep`: the authoritative
/// dynamics are the numeric integration (the step-profile closed form is
/// ideal-step asymptotic), unless the scenario forces the analytic route.
fn cat_pipeline(s: &Scenario) -> Result<(CatSpec, usize, ErmakovSolution), CliError> {
    let ProfileConfig::TanhStep {
        omega_i,
        omega_f,
        t_s,
        epsilon,
    } = s.profile
    else {
        return Err(CliError::Config(
            "the cat construction needs a tanh_step profile".into(),
        ));
    };
    let profile = s.build_profile()?;
    let sol = if s.route == Route::Analytic {
        ermakov::solve_analytic_step(omega_i, omega_f, t_s, epsilon, s.t_end, s.mesh_step)?
    } else {
        let (rho0, v0) = ermakov::equilibrium_start(&profile)?;
        ermakov::solve_numeric(&profile, rho0, v0, s.t_end, s.tolerance)?
    };
    let spec = CatSpec::from_solution(
        s.alpha,
        omega_i,
        omega_f,
        t_s,
        epsilon,
        s.minimum_index,
        &sol,
    )?;
    let dim = match s.truncation {
        Truncation::Auto => auto_dim(s.alpha.norm(), spec.r_min),
        Truncation::Fixed(n) => n,
    };
    Ok((spec, dim, sol))
}

fn grid_spec_for(s: &Scenario, state: &FockState) -> GridSpec {
    match s.grid {
        GridConfig::Auto => GridSpec::auto_for_state(state),
        GridConfig::Resolved => GridSpec::auto_resolved_for_state(state),
        GridConfig::Explicit {
            q_min,
            q_max,
            p_min,
            p_max,
            points,
        } => GridSpec {
            q_min,
            q_max,
            p_min,
            p_max,
            q_points: points,
            p_points: points,
        },
    }
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let mut file = fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut file, value)
        .map_err(|e| CliError::Io(std::io::Error::other(e)))?;
    file.write_all(b"\n")?;
    Ok(())
}

fn write_grid(s: &Scenario, stem: &str, grid: &WignerGrid) -> Result<(), CliError> {
    if s.wants(OutputFormat::Csv) {
        let file = fs::File::create(s.file(stem, "csv"))?;
        grid.write_csv(std::io::BufWriter::new(file))?;
    }
    if s.wants(OutputFormat::Json) {
        write_json(&s.file(stem, "json"), &grid.to_json())?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Commands.

/// Summary values returned by [`cmd_rho`] for one scenario.
#[derive(Debug, Clone)]
pub struct RhoSummary {
    pub minima: Vec<ermakov::Minimum>,
    pub numeric_vs_analytic_max_error: Option<f64>,
}

/// Solve the Ermakov problem and export the frequency curve (`omega_*`),
/// the solution columns (`rho_*`), and the refined minima (`minima_*`).
/// With `numeric_compare` the numeric integration runs alongside the
/// analytic route and the max pointwise |rho| discrepancy is written too.
pub fn cmd_rho(s: &Scenario, numeric_compare: bool) -> Result<RhoSummary, CliError> {
    s.validate()?;
    fs::create_dir_all(&s.outdir)?;
    let profile = s.build_profile()?;
    let sol = solve_route(s, &profile)?;

    if s.wants(OutputFormat::Csv) {
        let mut line = String::new();
        let mut w = std::io::BufWriter::new(fs::File::create(s.file("omega", "csv"))?);
        w.write_all(b"t,omega\n")?;
        for &t in &sol.times {
            line.clear();
            write_e12(&mut line, t);
            line.push(',');
            write_e12(&mut line, profile.omega_at(t)?);
            line.push('\n');
            w.write_all(line.as_bytes())?;
        }
        let file = fs::File::create(s.file("rho", "csv"))?;
        sol.write_csv(std::io::BufWriter::new(file))?;
    }
    write_json(&s.file("minima", "json"), &sol.minima_json())?;
    write_json(&s.file("metadata", "json"), &s.metadata())?;

    let mut compare = None;
    if numeric_compare {
        if let ProfileConfig::TanhStep { .. } = s.profile {
            let ana = match sol.provenance {
                ermakov::Provenance::Analytic { .. } => sol.clone(),
                _ => {
                    let ProfileConfig::TanhStep {
                        omega_i,
                        omega_f,
                        t_s,
                        epsilon,
                    } = s.profile
                    else {
                        unreachable!()
                    };
                    ermakov::solve_analytic_step(
                        omega_i,
                        omega_f,
                        t_s,
                        epsilon,
                        s.t_end,
                        s.mesh_step,
                    )?
                }
            };
            let (rho0, v0) = ermakov::equilibrium_start(&profile)?;
            let num = ermakov::solve_numeric(&profile, rho0, v0, s.t_end, s.tolerance)?;
            let mut worst: f64 = 0.0;
            for (k, t) in num.times.iter().enumerate() {
                worst = worst.max((num.rho[k] - ana.sample(*t)?.rho).abs());
            }
            write_json(
                &s.file("rho_compare", "json"),
                &serde_json::json!({ "max_abs_rho_error": worst }),
            )?;
            compare = Some(worst);
        }
    }

    Ok(RhoSummary {
        minima: sol.minima.clone(),
        numeric_vs_analytic_max_error: compare,
    })
}

/// Summary values returned by [`cmd_cat`].
#[derive(Debug, Clone)]
pub struct CatSummary {
    pub spec: CatSpec,
    pub dim: usize,
    pub fidelity: f64,
    pub cat_norm: f64,
}

/// Construct the squeezed cat, cross-check it against the full evolution at
/// the minimum, and export the derived parameters, the state, and the
/// fidelity. Fails with the consistency exit code when the two routes
/// disagree beyond [`CAT_FIDELITY_FLOOR`].
pub fn cmd_cat(s: &Scenario) -> Result<CatSummary, CliError> {
    s.validate()?;
    fs::create_dir_all(&s.outdir)?;
    if let ProfileConfig::TanhStep {
        omega_i, omega_f, ..
    } = s.profile
    {
        if omega_i == omega_f {
            eprintln!(
                "warning: omega_f equals omega_i; no squeezing develops and minima may be absent"
            );
        }
    }
    let (spec, dim, sol) = cat_pipeline(s)?;
    let cat = make_cat(&spec, dim)?;
    let evolved = evolve(s.alpha, &sol, spec.chi, spec.t_min, dim)?;
    let fidelity = cat.state.fidelity(&evolved.state);
    let cat_norm = cat.state.norm();

    let mut spec_json = spec.to_json();
    spec_json["truncation_dim"] = serde_json::json!(dim);
    write_json(&s.file("cat_spec", "json"), &spec_json)?;
    write_json(&s.file("cat_state", "json"), &cat.state.to_json())?;
    write_json(
        &s.file("fidelity", "json"),
        &serde_json::json!({
            "evolve_vs_make_cat_fidelity": fidelity,
            "cat_norm": cat_norm,
        }),
    )?;
    write_json(&s.file("metadata", "json"), &s.metadata())?;

    if fidelity < CAT_FIDELITY_FLOOR {
        return Err(CliError::Consistency(format!(
            "evolve vs make_cat fidelity {fidelity} below {CAT_FIDELITY_FLOOR}"
        )));
    }
    Ok(CatSummary {
        spec,
        dim,
        fidelity,
        cat_norm,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WignerMethodChoice {
    Series,
    Closed,
    Both,
}

/// Summary values returned by [`cmd_wigner`].
#[derive(Debug, Clone)]
pub struct WignerSummary {
    pub discrepancy: Option<f64>,
    pub series_negativity: Option<f64>,
    pub closed_negativity: Option<f64>,
}

/// Compute the cat's Wigner function by the requested method(s) and export
/// the grid(s); with both methods the max pointwise discrepancy is written
/// and checked against [`WIGNER_DISCREPANCY_CEILING`].
pub fn cmd_wigner(s: &Scenario, method: WignerMethodChoice) -> Result<WignerSummary, CliError> {
    s.validate()?;
    fs::create_dir_all(&s.outdir)?;
    let (spec, dim, _sol) = cat_pipeline(s)?;
    let cat = make_cat(&spec, dim)?;
    let grid_spec = grid_spec_for(s, &cat.state);

    let mut summary = WignerSummary {
        discrepancy: None,
        series_negativity: None,
        closed_negativity: None,
    };
    let mut series = None;
    let mut closed = None;
    if method != WignerMethodChoice::Closed {
        let g = wigner_series(&cat.state, &grid_spec, None)?;
        write_grid(s, "wigner_series", &g)?;
        summary.series_negativity = Some(g.negativity_volume());
        series = Some(g);
    }
    if method != WignerMethodChoice::Series {
        let g = wigner_closed_form(&spec, &grid_spec)?;
        write_grid(s, "wigner_closed", &g)?;
        summary.closed_negativity = Some(g.negativity_volume());
        closed = Some(g);
    }
    write_json(&s.file("metadata", "json"), &s.metadata())?;

    if let (Some(a), Some(b)) = (&series, &closed) {
        let d = a.max_abs_difference(b).expect("identical grid shapes");
        write_json(
            &s.file("discrepancy", "json"),
            &serde_json::json!({ "max_pointwise_discrepancy": d }),
        )?;
        summary.discrepancy = Some(d);
        if d > WIGNER_DISCREPANCY_CEILING {
            return Err(CliError::Consistency(format!(
                "series vs closed-form discrepancy {d} above {WIGNER_DISCREPANCY_CEILING}"
            )));
        }
    }
    Ok(summary)
}

/// One row of the sweep table.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub values: Vec<f64>,
    pub t_min: Option<f64>,
    pub rho_min: Option<f64>,
    pub r_min: Option<f64>,
    pub chi: Option<f64>,
    pub mean_n: Option<f64>,
    pub parity: Option<f64>,
    pub negativity: Option<f64>,
    pub fidelity: Option<f64>,
    pub error: Option<String>,
}

fn apply_sweep_value(s: &mut Scenario, name: &str, value: f64) -> Result<(), CliError> {
    match name {
        "alpha_re" => s.alpha.re = value,
        "alpha_im" => s.alpha.im = value,
        _ => {
            let ProfileConfig::TanhStep {
                omega_i,
                omega_f,
                t_s,
                epsilon,
            } = &mut s.profile
            else {
                return Err(CliError::Config(
                    "sweeping profile parameters needs a tanh_step profile".into(),
                ));
            };
            match name {
                "omega_i" => *omega_i = value,
                "omega_f" => *omega_f = value,
                "t_s" => *t_s = value,
                "epsilon" => *epsilon = value,
                _ => {
                    return Err(CliError::Config(format!(
                        "unknown sweep parameter '{name}'"
                    )))
                }
            }
        }
    }
    Ok(())
}

fn sweep_point(s: &Scenario) -> Result<SweepRow, CliError> {
    let (spec, dim, sol) = cat_pipeline(s)?;
    let cat = make_cat(&spec, dim)?;
    let evolved = evolve(s.alpha, &sol, spec.chi, spec.t_min, dim)?;
    let fidelity = cat.state.fidelity(&evolved.state);
    // Negativity needs a grid that both covers and resolves the state.
    let grid = wigner_closed_form(&spec, &GridSpec::auto_resolved_for_state(&cat.state))?;
    Ok(SweepRow {
        values: Vec::new(),
        t_min: Some(spec.t_min),
        rho_min: Some(spec.rho_min),
        r_min: Some(spec.r_min),
        chi: Some(spec.chi),
        mean_n: Some(cat.state.mean_photon()),
        parity: Some(cat.state.parity()),
        negativity: Some(grid.negativity_volume()),
        fidelity: Some(fidelity),
        error: None,
    })
}

/// Run the cat pipeline over the cartesian product of the sweep lists and
/// write one summary row per point. Failed points keep their row with the
/// error recorded; the command fails only when every point failed.
pub fn cmd_sweep(s: &Scenario) -> Result<Vec<SweepRow>, CliError> {
    s.validate()?;
    let Some(sweep) = s.sweep.clone() else {
        return Err(CliError::Config(
            "sweep: missing [sweep] configuration".into(),
        ));
    };
    fs::create_dir_all(&s.outdir)?;

    let mut points: Vec<Vec<f64>> = Vec::new();
    if let Some(_p2) = &sweep.parameter2 {
        for &a in &sweep.values {
            for &b in &sweep.values2 {
                points.push(vec![a, b]);
            }
        }
    } else {
        for &a in &sweep.values {
            points.push(vec![a]);
        }
    }

    use rayon::prelude::*;
    let rows: Vec<SweepRow> = points
        .par_iter()
        .map(|vals| {
            let mut sc = s.clone();
            let mut row = match (|| -> Result<SweepRow, CliError> {
                apply_sweep_value(&mut sc, &sweep.parameter, vals[0])?;
                if let Some(p2) = &sweep.parameter2 {
                    apply_sweep_value(&mut sc, p2, vals[1])?;
                }
                sweep_point(&sc)
            })() {
                Ok(row) => row,
                Err(e) => SweepRow {
                    values: Vec::new(),
                    t_min: None,
                    rho_min: None,
                    r_min: None,
                    chi: None,
                    mean_n: None,
                    parity: None,
                    negativity: None,
                    fidelity: None,
                    error: Some(e.to_string()),
                },
            };
            row.values = vals.clone();
            row
        })
        .collect();

    let mut header = String::from(&sweep.parameter);
    if let Some(p2) = &sweep.parameter2 {
        let _ = write!(header, ",{p2}");
    }
    header.push_str(",t_min,rho_min,r_min,chi,mean_n,parity,negativity,fidelity,error\n");
    let mut w = std::io::BufWriter::new(fs::File::create(s.file("sweep", "csv"))?);
    w.write_all(header.as_bytes())?;
    let mut line = String::new();
    for row in &rows {
        line.clear();
        for (i, v) in row.values.iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            write_e12(&mut line, *v);
        }
        for v in [
            row.t_min,
            row.rho_min,
            row.r_min,
            row.chi,
            row.mean_n,
            row.parity,
            row.negativity,
            row.fidelity,
        ] {
            line.push(',');
            if let Some(v) = v {
                write_e12(&mut line, v);
            }
        }
        line.push(',');
        if let Some(e) = &row.error {
            // Keep the CSV single-line and comma-free per cell.
            line.push_str(&e.replace([',', '\n'], ";"));
        }
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    drop(w);
    write_json(&s.file("metadata", "json"), &s.metadata())?;

    if rows.iter().all(|r| r.error.is_some()) {
        return Err(CliError::SweepAllFailed);
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Argument parsing and dispatch.

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "ermakat",
    version,
    about = "Frequency-tunable Kerr cavity: exact evolution, squeezed cats, Wigner functions"
)]
pub struct CliArgs {
    #[command(subcommand)]
    pub command: CommandArgs,
}

#[derive(Subcommand, Debug)]
pub enum CommandArgs {
    /// Solve the Ermakov problem; export the frequency curve, rho(t), and minima
    Rho {
        #[command(flatten)]
        common: Box<CommonArgs>,
        /// Also run the numeric integration and write the numeric-vs-analytic max error
        #[arg(long)]
        numeric: bool,
    },
    /// Build the squeezed cat and verify it against the full evolution
    Cat {
        #[command(flatten)]
        common: Box<CommonArgs>,
    },
    /// Wigner grids by the series and/or closed-form methods
    Wigner {
        #[command(flatten)]
        common: Box<CommonArgs>,
        /// Which computation(s) to run
        #[arg(long, value_enum, default_value_t = MethodArg::Both)]
        method: MethodArg,
    },
    /// Batch runs over one or two swept parameters
    Sweep {
        #[command(flatten)]
        common: Box<CommonArgs>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum MethodArg {
    Series,
    Closed,
    Both,
}

/// Scenario sources and per-key overrides. Every config key has a flag of
/// the same name; flags win over the config file, which wins over the preset.
#[derive(Args, Debug, Default)]
pub struct CommonArgs {
    /// Scenario file (sections of key = value pairs)
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Named parameter set: fig1, fig2, fig3a, fig3b
    #[arg(long)]
    pub preset: Option<String>,

    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long = "omega_i")]
    pub omega_i: Option<f64>,
    #[arg(long = "omega_f")]
    pub omega_f: Option<f64>,
    #[arg(long = "t_s")]
    pub t_s: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[arg(long = "alpha_re")]
    pub alpha_re: Option<f64>,
    #[arg(long = "alpha_im")]
    pub alpha_im: Option<f64>,
    #[arg(long = "minimum_index")]
    pub minimum_index: Option<usize>,
    #[arg(long)]
    pub truncation: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long = "t_end")]
    pub t_end: Option<f64>,
    #[arg(long = "mesh_step")]
    pub mesh_step: Option<f64>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub route: Option<String>,
    #[arg(long)]
    pub spec: Option<String>,
    #[arg(long = "q_min")]
    pub q_min: Option<f64>,
    #[arg(long = "q_max")]
    pub q_max: Option<f64>,
    #[arg(long = "p_min")]
    pub p_min: Option<f64>,
    #[arg(long = "p_max")]
    pub p_max: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub dir: Option<PathBuf>,
    #[arg(long)]
    pub formats: Option<String>,
    #[arg(long)]
    pub parameter: Option<String>,
    #[arg(long)]
    pub values: Option<String>,
    #[arg(long)]
    pub parameter2: Option<String>,
    #[arg(long)]
    pub values2: Option<String>,
}

impl CommonArgs {
    fn overrides(&self) -> RawConfig {
        let mut cfg = RawConfig::new();
        let mut put = |section: &str, key: &str, value: String| {
            cfg.insert((section.to_string(), key.to_string()), value);
        };
        if let Some(v) = &self.kind {
            put("profile", "kind", v.clone());
        }
        if let Some(v) = self.omega {
            put("profile", "omega", v.to_string());
        }
        if let Some(v) = self.omega_i {
            put("profile", "omega_i", v.to_string());
        }
        if let Some(v) = self.omega_f {
            put("profile", "omega_f", v.to_string());
        }
        if let Some(v) = self.t_s {
            put("profile", "t_s", v.to_string());
        }
        if let Some(v) = self.epsilon {
            put("profile", "epsilon", v.to_string());
        }
        if let Some(v) = &self.table {
            put("profile", "table", v.display().to_string());
        }
        if let Some(v) = self.alpha_re {
            put("state", "alpha_re", v.to_string());
        }
        if let Some(v) = self.alpha_im {
            put("state", "alpha_im", v.to_string());
        }
        if let Some(v) = self.minimum_index {
            put("state", "minimum_index", v.to_string());
        }
        if let Some(v) = &self.truncation {
            put("state", "truncation", v.clone());
        }
        if let Some(v) = self.seed {
            put("state", "seed", v.to_string());
        }
        if let Some(v) = self.t_end {
            put("solver", "t_end", v.to_string());
        }
        if let Some(v) = self.mesh_step {
            put("solver", "mesh_step", v.to_string());
        }
        if let Some(v) = self.tolerance {
            put("solver", "tolerance", v.to_string());
        }
        if let Some(v) = &self.route {
            put("solver", "route", v.clone());
        }
        if let Some(v) = &self.spec {
            put("grid", "spec", v.clone());
        }
        if let Some(v) = self.q_min {
            put("grid", "q_min", v.to_string());
        }
        if let Some(v) = self.q_max {
            put("grid", "q_max", v.to_string());
        }
        if let Some(v) = self.p_min {
            put("grid", "p_min", v.to_string());
        }
        if let Some(v) = self.p_max {
            put("grid", "p_max", v.to_string());
        }
        if let Some(v) = self.points {
            put("grid", "points", v.to_string());
        }
        if let Some(v) = &self.dir {
            put("output", "dir", v.display().to_string());
        }
        if let Some(v) = &self.formats {
            put("output", "formats", v.clone());
        }
        if let Some(v) = &self.parameter {
            put("sweep", "parameter", v.clone());
        }
        if let Some(v) = &self.values {
            put("sweep", "values", v.clone());
        }
        if let Some(v) = &self.parameter2 {
            put("sweep", "parameter2", v.clone());
        }
        if let Some(v) = &self.values2 {
            put("sweep", "values2", v.clone());
        }
        cfg
    }

    /// Layer preset, config file, and flag overrides into scenarios.
    pub fn scenarios(&self) -> Result<Vec<Scenario>, CliError> {
        let mut list = match &self.preset {
            Some(name) => preset(name)?,
            None => vec![Scenario::default()],
        };
        let file_cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| {
                    CliError::Config(format!("cannot read config {}: {e}", path.display()))
                })?;
                Some(parse_config_text(&text)?)
            }
            None => None,
        };
        let flag_cfg = self.overrides();
        for s in &mut list {
            if let Some(cfg) = &file_cfg {
                apply_config(s, cfg)?;
            }
            apply_config(s, &flag_cfg)?;
            s.validate()?;
        }
        Ok(list)
    }
}

fn configure_threads() {
    if let Ok(v) = std::env::var("ERMAKAT_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            if n > 0 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
        }
    }
}

/// Parse arguments, run the requested command, and return the process exit
/// code. Errors are reported on standard error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let parsed = match CliArgs::try_parse_from(args) {
        Ok(p) => p,
        Err(e) => {
            // Help and version are successful outputs, not failures.
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_VALIDATION,
            };
            let _ = e.print();
            return code;
        }
    };
    configure_threads();

    let result: Result<(), CliError> = (|| {
        match &parsed.command {
            CommandArgs::Rho { common, numeric } => {
                for s in common.scenarios()? {
                    let summary = cmd_rho(&s, *numeric)?;
                    println!(
                        "rho[{}]: {} minima{}",
                        if s.label.is_empty() {
                            "scenario"
                        } else {
                            &s.label
                        },
                        summary.minima.len(),
                        summary
                            .numeric_vs_analytic_max_error
                            .map(|e| format!(", numeric-vs-analytic max |drho| = {e:.3e}"))
                            .unwrap_or_default()
                    );
                }
            }
            CommandArgs::Cat { common } => {
                for s in common.scenarios()? {
                    let summary = cmd_cat(&s)?;
                    println!(
                        "cat[{}]: t_min = {:.6}, r_min = {:.6}, chi = {:.6}, N = {}, fidelity = {:.3e} below 1",
                        if s.label.is_empty() { "scenario" } else { &s.label },
                        summary.spec.t_min,
                        summary.spec.r_min,
                        summary.spec.chi,
                        summary.dim,
                        1.0 - summary.fidelity,
                    );
                }
            }
            CommandArgs::Wigner { common, method } => {
                let choice = match method {
                    MethodArg::Series => WignerMethodChoice::Series,
                    MethodArg::Closed => WignerMethodChoice::Closed,
                    MethodArg::Both => WignerMethodChoice::Both,
                };
                for s in common.scenarios()? {
                    let summary = cmd_wigner(&s, choice)?;
                    println!(
                        "wigner[{}]: negativity series {:?} closed {:?}{}",
                        if s.label.is_empty() {
                            "scenario"
                        } else {
                            &s.label
                        },
                        summary.series_negativity,
                        summary.closed_negativity,
                        summary
                            .discrepancy
                            .map(|d| format!(", methods agree to {d:.3e}"))
                            .unwrap_or_default()
                    );
                }
            }
            CommandArgs::Sweep { common } => {
                for s in common.scenarios()? {
                    let rows = cmd_sweep(&s)?;
                    let failed = rows.iter().filter(|r| r.error.is_some()).count();
                    println!(
                        "sweep[{}]: {} points, {} failed",
                        if s.label.is_empty() {
                            "scenario"
                        } else {
                            &s.label
                        },
                        rows.len(),
                        failed
                    );
                }
            }
        }
        Ok(())
    })();

    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trip_and_strictness() {
        let text = "\
# scenario
[profile]
kind = tanh_step
omega_i = 1.0
omega_f = 4.0
t_s = 2.0
epsilon = 10.0

[state]
alpha_re = 3.0
alpha_im = 0.0
minimum_index = 0
truncation = auto

[solver]
t_end = 6.0
route = numeric

[output]
dir = /tmp/x
formats = csv,json
";
        let cfg = parse_config_text(text).unwrap();
        let mut s = Scenario::default();
        apply_config(&mut s, &cfg).unwrap();
        assert_eq!(
            s.profile,
            ProfileConfig::TanhStep {
                omega_i: 1.0,
                omega_f: 4.0,
                t_s: 2.0,
                epsilon: 10.0
            }
        );
        assert_eq!(s.alpha, C64::new(3.0, 0.0));
        assert_eq!(s.route, Route::Numeric);
        assert_eq!(s.t_end, 6.0);
        s.validate().unwrap();
    }

    #[test]
    fn unknown_key_is_rejected_with_its_name() {
        let cfg = parse_config_text("[solver]\nt_fin = 3\n").unwrap();
        let mut s = Scenario::default();
        let err = apply_config(&mut s, &cfg).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("t_fin"), "message: {msg}");
        assert_eq!(err.exit_code(), EXIT_VALIDATION);
    }

    #[test]
    fn unknown_section_is_rejected() {
        let cfg = parse_config_text("[solven]\nt_end = 3\n").unwrap();
        let mut s = Scenario::default();
        assert!(apply_config(&mut s, &cfg).is_err());
    }

    #[test]
    fn duplicate_key_is_rejected() {
        assert!(parse_config_text("[solver]\nt_end = 3\nt_end = 4\n").is_err());
    }

    #[test]
    fn presets_exist_and_validate() {
        for name in ["fig1", "fig2", "fig3a", "fig3b"] {
            let list = preset(name).unwrap();
            assert!(!list.is_empty());
            for s in list {
                s.validate().unwrap();
            }
        }
        assert!(preset("fig9").is_err());
    }

    #[test]
    fn sweep_parameter_validation() {
        let s = Scenario {
            sweep: Some(SweepConfig {
                parameter: "volume".into(),
                values: vec![1.0],
                parameter2: None,
                values2: vec![],
            }),
            ..Scenario::default()
        };
        assert_eq!(s.validate().unwrap_err().exit_code(), EXIT_VALIDATION);
    }

    #[test]
    fn exit_codes_map_error_classes() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        assert_eq!(
            CliError::Consistency("x".into()).exit_code(),
            EXIT_CONSISTENCY
        );
        assert_eq!(CliError::SweepAllFailed.exit_code(), 5);
    }
}
