//! Run configuration and run directories.
//!
//! A run directory holds the fully materialized `config.toml`, per-stage
//! tables, the final densities and a deterministic `summary`; see `FORMATS.md`
//! at the repository root for the column layouts.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fraclap::{cache, StiffnessForm};
use crate::grid::Grid1D;
use crate::io::{fmt_f64, write_atomic, Table};
use crate::params::FracParams;
use crate::segregation::{beta_continuation, initial_bumps, ContinuationSchedule, DensityVector, PenaltySpec, StageRecord};

pub const CONFIG_FILE: &str = "config.toml";
pub const SUMMARY_FILE: &str = "summary";
pub const STAGES_FILE: &str = "stages.csv";
pub const HISTORY_FILE: &str = "history.csv";
pub const DENSITIES_FILE: &str = "densities.csv";

/// Build identifier recorded in every run directory.
pub fn build_id() -> String {
    format!("segfrac-core {}", env!("CARGO_PKG_VERSION"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemConfig {
    pub s: f64,
    pub k: usize,
    pub x_left: f64,
    pub x_right: f64,
    /// Interior grid nodes.
    pub n: usize,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self { s: 0.5, k: 2, x_left: -1.0, x_right: 1.0, n: 512 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleConfig {
    pub beta0: f64,
    pub ratio: f64,
    pub stages: usize,
    /// Explicit schedule; replaces `beta0, ratio, stages` when nonempty.
    pub betas: Vec<f64>,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        type S = ContinuationSchedule<f64>;
        Self {
            beta0: S::DEFAULT_BETA0,
            ratio: S::DEFAULT_RATIO,
            stages: S::DEFAULT_STAGES,
            betas: Vec::new(),
            tol: S::DEFAULT_TOL,
            max_iter: S::DEFAULT_MAX_ITER,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitConfig {
    pub seed: u64,
    pub jitter: f64,
}

impl Default for InitConfig {
    fn default() -> Self {
        Self { seed: 0, jitter: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PenaltyConfig {
    /// Row-major `k × k` coupling; all ones off the diagonal when empty.
    pub coupling: Vec<f64>,
    /// Cubic weights `mᵢ`; zero when empty.
    pub cubic: Vec<f64>,
    /// Run directory whose final densities anchor the functional.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub anchored: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub diagnostics: bool,
    pub eps_gamma: f64,
    pub tau: f64,
    pub angular_per_half: usize,
    pub radial: usize,
    pub segment: usize,
    pub eigen_tol: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        let a = crate::analysis::AnalysisSettings::default();
        Self {
            diagnostics: true,
            eps_gamma: a.eps_gamma,
            tau: a.tau,
            angular_per_half: a.quadrature.angular_per_half,
            radial: a.quadrature.radial,
            segment: a.quadrature.segment,
            eigen_tol: a.eigen_tol,
        }
    }
}

impl AnalysisConfig {
    pub fn settings(&self) -> crate::analysis::AnalysisSettings {
        let quadrature = crate::almgren::QuadratureSettings {
            angular_per_half: self.angular_per_half,
            radial: self.radial,
            segment: self.segment,
            ..Default::default()
        };
        crate::analysis::AnalysisSettings {
            eps_gamma: self.eps_gamma,
            quadrature,
            tau: self.tau,
            eigen_tol: self.eigen_tol,
            frequency: self.diagnostics,
        }
    }
}

/// Everything a run depends on.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub schedule: ScheduleConfig,
    pub init: InitConfig,
    pub penalty: PenaltyConfig,
    pub analysis: AnalysisConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidParameter(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
    }

    /// TOML with every field written out.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn grid(&self) -> Result<Grid1D<f64>> {
        Grid1D::new(self.problem.x_left, self.problem.x_right, self.problem.n)
    }

    pub fn params(&self) -> Result<FracParams<f64>> {
        FracParams::new(self.problem.s)
    }

    pub fn schedule(&self) -> Result<ContinuationSchedule<f64>> {
        let c = &self.schedule;
        if c.betas.is_empty() {
            ContinuationSchedule::geometric(c.beta0, c.ratio, c.stages, c.tol, c.max_iter)
        } else {
            ContinuationSchedule::new(c.betas.clone(), c.tol, c.max_iter)
        }
    }

    /// Penalty at the first `β` of the schedule.
    pub fn penalty(&self, grid: &Grid1D<f64>) -> Result<PenaltySpec<f64>> {
        let beta = self.schedule()?.betas()[0];
        let mut spec = PenaltySpec::new(self.problem.k, beta)?;
        if !self.penalty.coupling.is_empty() {
            spec = spec.with_coupling(self.penalty.coupling.clone())?;
        }
        if !self.penalty.cubic.is_empty() {
            spec = spec.with_cubic(self.penalty.cubic.clone())?;
        }
        if let Some(dir) = &self.penalty.anchored {
            let anchor = load_densities(&dir.join(DENSITIES_FILE), grid)?;
            spec = spec.with_anchor(anchor)?;
        }
        Ok(spec)
    }

    /// Checks every field by building the objects it describes.
    pub fn validate(&self) -> Result<()> {
        let grid = self.grid()?;
        self.params()?;
        self.schedule()?;
        if self.problem.k == 0 {
            return Err(Error::InvalidParameter("k must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.init.jitter) {
            return Err(Error::InvalidParameter(format!("jitter must lie in [0, 1), got {}", self.init.jitter)));
        }
        if self.penalty.anchored.is_none() {
            self.penalty(&grid)?;
        }
        Ok(())
    }
}

/// Outcome of a continuation run.
#[derive(Debug, Clone)]
pub struct SegregationRun {
    pub form: StiffnessForm<f64>,
    pub records: Vec<StageRecord<f64>>,
}

impl SegregationRun {
    pub fn final_record(&self) -> &StageRecord<f64> {
        self.records.last().expect("at least one stage")
    }

    pub fn all_converged(&self) -> bool {
        self.records.iter().all(|r| r.diagnostics.converged())
    }
}

/// Runs the `β` continuation described by `config`, loading or storing the
/// assembled form in `cache_dir` when given.
pub fn segregate(config: &RunConfig, cache_dir: Option<&Path>) -> Result<SegregationRun> {
    config.validate()?;
    let grid = config.grid()?;
    let form = cache::load_or_assemble(cache_dir, &grid, &config.params()?)?;
    let spec = config.penalty(&grid)?;
    let u0 = initial_bumps(&grid, config.problem.k, config.init.jitter, config.init.seed)?;
    let records = beta_continuation(&config.schedule()?, &spec, &form, &u0)?;
    Ok(SegregationRun { form, records })
}

fn densities_table(u: &DensityVector<f64>) -> Table {
    let mut header = vec!["x".to_string()];
    header.extend((1..=u.k()).map(|i| format!("u{i}")));
    let refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut t = Table::new(&refs);
    for p in 0..u.grid().len() {
        let mut row = vec![u.grid().node(p)];
        row.extend(u.components().iter().map(|c| c[p]));
        t.push_floats(&row);
    }
    t
}

/// Reads a densities table written by [`write_run`] onto `grid`.
pub fn load_densities(path: &Path, grid: &Grid1D<f64>) -> Result<DensityVector<f64>> {
    let t = Table::read(path)?;
    let x = t.float_column("x", path)?;
    if x.len() != grid.len() || x.iter().enumerate().any(|(p, &v)| (v - grid.node(p)).abs() > 1e-12 * (1.0 + v.abs())) {
        return Err(Error::format(path, "densities do not live on the configured grid"));
    }
    let k = t.header.len() - 1;
    let comps = (1..=k).map(|i| t.float_column(&format!("u{i}"), path)).collect::<Result<Vec<_>>>()?;
    DensityVector::new(*grid, comps)
}

fn stages_table(records: &[StageRecord<f64>], k: usize) -> Table {
    let mut header: Vec<String> =
        ["stage", "beta", "status", "iterations", "j_beta", "overlap", "drift", "grad_norm", "max_energy_increase"]
            .iter()
            .map(|s| s.to_string())
            .collect();
    header.extend((1..=k).map(|i| format!("lambda{i}")));
    let refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut t = Table::new(&refs);
    for (j, r) in records.iter().enumerate() {
        let d = &r.diagnostics;
        let mut row = vec![
            j.to_string(),
            fmt_f64(r.beta),
            d.status.as_str().to_string(),
            d.iterations.to_string(),
            fmt_f64(r.j_beta),
            fmt_f64(r.overlap),
            fmt_f64(r.drift.unwrap_or(f64::NAN)),
            fmt_f64(d.final_grad_norm()),
            fmt_f64(d.max_energy_increase()),
        ];
        row.extend(d.multipliers.iter().map(|&l| fmt_f64(l)));
        t.push(row);
    }
    t
}

fn history_table(records: &[StageRecord<f64>]) -> Table {
    let mut t = Table::new(&["stage", "iteration", "energy", "overlap", "grad_norm", "step"]);
    for (j, r) in records.iter().enumerate() {
        let d = &r.diagnostics;
        for it in 0..d.energies.len() {
            let step = if it == 0 { f64::NAN } else { d.steps[it - 1] };
            t.push(vec![
                j.to_string(),
                it.to_string(),
                fmt_f64(d.energies[it]),
                fmt_f64(d.overlaps[it]),
                fmt_f64(d.grad_norms[it]),
                fmt_f64(step),
            ]);
        }
    }
    t
}

/// Deterministic `key = value` summary of a run.
pub fn summary_text(config: &RunConfig, run: &SegregationRun) -> String {
    let last = run.final_record();
    let d = &last.diagnostics;
    let converged = run.records.iter().filter(|r| r.diagnostics.converged()).count();
    let list = |v: &[f64]| v.iter().map(|&x| fmt_f64(x)).collect::<Vec<_>>().join(", ");
    let mut lines = vec![
        format!("build = {}", build_id()),
        format!("s = {}", fmt_f64(config.problem.s)),
        format!("k = {}", config.problem.k),
        format!("n = {}", config.problem.n),
        format!("seed = {}", config.init.seed),
        format!("stages = {}", run.records.len()),
        format!("converged_stages = {converged}"),
        format!("final_beta = {}", fmt_f64(last.beta)),
        format!("final_status = {}", d.status.as_str()),
        format!("final_j_beta = {}", fmt_f64(last.j_beta)),
        format!("final_overlap = {}", fmt_f64(last.overlap)),
        format!("final_grad_norm = {}", fmt_f64(d.final_grad_norm())),
        format!("multipliers = [{}]", list(&d.multipliers)),
        format!("overlaps = [{}]", list(&run.records.iter().map(|r| r.overlap).collect::<Vec<_>>())),
        format!("j_betas = [{}]", list(&run.records.iter().map(|r| r.j_beta).collect::<Vec<_>>())),
    ];
    lines.push(String::new());
    lines.join("\n")
}

/// Writes config, stage tables, per-stage and final densities and the summary.
pub fn write_run(dir: &Path, config: &RunConfig, run: &SegregationRun) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_atomic(&dir.join(CONFIG_FILE), config.to_toml().as_bytes())?;
    stages_table(&run.records, config.problem.k).write(&dir.join(STAGES_FILE))?;
    history_table(&run.records).write(&dir.join(HISTORY_FILE))?;
    for (j, r) in run.records.iter().enumerate() {
        densities_table(&r.densities).write(&dir.join(format!("stage_{j:02}.csv")))?;
    }
    densities_table(&run.final_record().densities).write(&dir.join(DENSITIES_FILE))?;
    write_atomic(&dir.join(SUMMARY_FILE), summary_text(config, run).as_bytes())
}

/// A completed run read back from disk.
#[derive(Debug, Clone)]
pub struct LoadedRun {
    pub dir: PathBuf,
    pub config: RunConfig,
    pub densities: DensityVector<f64>,
    /// Multipliers of the final stage.
    pub multipliers: Vec<f64>,
}

pub fn load_run(dir: &Path) -> Result<LoadedRun> {
    if !dir.is_dir() {
        return Err(Error::io(dir, std::io::Error::new(std::io::ErrorKind::NotFound, "run directory not found")));
    }
    let config = RunConfig::load(&dir.join(CONFIG_FILE))?;
    let grid = config.grid()?;
    let densities = load_densities(&dir.join(DENSITIES_FILE), &grid)?;
    let stages_path = dir.join(STAGES_FILE);
    let stages = Table::read(&stages_path)?;
    let multipliers = (1..=config.problem.k)
        .map(|i| {
            let col = stages.float_column(&format!("lambda{i}"), &stages_path)?;
            col.last().copied().ok_or_else(|| Error::format(&stages_path, "no stages recorded"))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LoadedRun { dir: dir.to_path_buf(), config, densities, multipliers })
}
