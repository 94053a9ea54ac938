//! Partition reports for completed run directories.

use std::path::Path;

use crate::almgren::{pohozaev_residual, Field, PohozaevReport, Reaction};
use crate::analysis::{partition_result, segregated_extensions, PartitionResult, SiteDiagnostics};
use crate::error::Result;
use crate::fraclap::cache;
use crate::io::{fmt_f64, write_atomic, Table};
use crate::run::{build_id, load_run, LoadedRun};
use crate::segregation::{j_value, SEGREGATION_TOL};

pub const REPORT_FILE: &str = "report";
pub const GAMMA_FILE: &str = "gamma_points.csv";
/// Every `POHOZAEV_STRIDE`-th frequency radius gets a Pohozaev check.
pub const POHOZAEV_STRIDE: usize = 6;
/// Looser segregation tolerance reported next to [`SEGREGATION_TOL`].
pub const RELAXED_SEGREGATION_TOL: f64 = 1e-3;

/// Partition result together with the Pohozaev checks per site.
#[derive(Debug, Clone)]
pub struct PartitionReport {
    pub result: PartitionResult,
    pub pohozaev: Vec<Vec<PohozaevReport>>,
    /// Largest `‖uᵢuⱼ‖_{L¹}` over pairs `i < j`.
    pub cross_l1: f64,
    /// `j_value` at [`SEGREGATION_TOL`] and at [`RELAXED_SEGREGATION_TOL`].
    pub j_strict: f64,
    pub j_relaxed: f64,
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_else(|| "nan".into())
}

fn list(v: &[f64]) -> String {
    format!("[{}]", v.iter().map(|&x| fmt_f64(x)).collect::<Vec<_>>().join(", "))
}

/// Table of free-boundary sites and their diagnostics.
pub fn gamma_table(result: &PartitionResult) -> Table {
    let mut t = Table::new(&[
        "site",
        "lo",
        "hi",
        "centre",
        "left",
        "right",
        "verdict",
        "consistent",
        "n0",
        "min_c",
        "holder_alpha",
        "holder_r2",
        "holder_flagged",
    ]);
    for (j, site) in result.free_boundary.sites.iter().enumerate() {
        let d: Option<&SiteDiagnostics> = result.sites.get(j);
        let holder = d.and_then(|d| d.holder);
        t.push(vec![
            j.to_string(),
            fmt_f64(site.lo),
            fmt_f64(site.hi),
            fmt_f64(site.centre()),
            (site.left + 1).to_string(),
            (site.right + 1).to_string(),
            d.map_or("not_computed", |d| d.verdict.as_str()).to_string(),
            d.is_some_and(|d| d.consistent).to_string(),
            opt(d.and_then(|d| d.n0)),
            opt(d.and_then(|d| d.min_c)),
            opt(holder.map(|h| h.alpha)),
            opt(holder.map(|h| h.r_squared)),
            holder.is_some_and(|h| h.flagged).to_string(),
        ]);
    }
    t
}

/// Deterministic `key = value` report.
pub fn report_text(run: &LoadedRun, report: &PartitionReport) -> String {
    let r = &report.result;
    let mut lines = vec![
        format!("build = {}", build_id()),
        format!("s = {}", fmt_f64(run.config.problem.s)),
        format!("k = {}", run.config.problem.k),
        format!("n = {}", run.config.problem.n),
        format!("set_eigenvalues = {}", list(&r.set_eigenvalues)),
        format!("i_value = {}", fmt_f64(r.i_value)),
        format!("j_value = {}", fmt_f64(r.j_value)),
        format!("equivalence_error = {}", fmt_f64(r.equivalence_error)),
        format!("equivalent = {}", r.equivalent()),
        format!("cross_l1 = {}", fmt_f64(report.cross_l1)),
        format!("j_value_strict = {}", fmt_f64(report.j_strict)),
        format!("j_value_relaxed = {}", fmt_f64(report.j_relaxed)),
        format!("gamma_points = {}", r.free_boundary.len()),
    ];
    for (j, d) in r.sites.iter().enumerate() {
        let worst = report.pohozaev[j].iter().map(|p| p.normalized.abs()).fold(0.0, f64::max);
        lines.push(format!(
            "site_{j} = centre {}, verdict {}, consistent {}, n0 {}, min_c {}, holder_alpha {}, pohozaev_max {}",
            fmt_f64(d.site.centre()),
            d.verdict.as_str(),
            d.consistent,
            opt(d.n0),
            opt(d.min_c),
            opt(d.holder.map(|h| h.alpha)),
            fmt_f64(worst),
        ));
    }
    lines.push(String::new());
    lines.join("\n")
}

/// Analyses a loaded run.
pub fn analyze_run(run: &LoadedRun, cache_dir: Option<&Path>) -> Result<PartitionReport> {
    let grid = run.config.grid()?;
    let params = run.config.params()?;
    let form = cache::load_or_assemble(cache_dir, &grid, &params)?;
    let settings = run.config.analysis.settings();
    let result = partition_result(&form, &run.densities, &run.multipliers, &settings)?;
    let mut pohozaev = Vec::with_capacity(result.sites.len());
    if !result.sites.is_empty() {
        let evs = segregated_extensions(&run.densities, &params)?;
        let fields: Vec<&dyn Field> = evs.iter().map(|e| e as &dyn Field).collect();
        let reaction = Reaction::from_multipliers(&run.multipliers, params.extension_scale());
        for d in &result.sites {
            let checks = d
                .profile
                .radii
                .iter()
                .step_by(POHOZAEV_STRIDE)
                .map(|&r| pohozaev_residual(&fields, &reaction, d.site.centre(), r, &settings.quadrature))
                .collect::<Result<Vec<_>>>()?;
            pohozaev.push(checks);
        }
    }
    let u = &run.densities;
    let mut cross_l1 = 0.0f64;
    for i in 0..u.k() {
        for j in i + 1..u.k() {
            let l1 = grid.h() * u.component(i).iter().zip(u.component(j)).map(|(x, y)| (x * y).abs()).sum::<f64>();
            cross_l1 = cross_l1.max(l1);
        }
    }
    let j_strict = j_value(u, &form, SEGREGATION_TOL)?;
    let j_relaxed = j_value(u, &form, RELAXED_SEGREGATION_TOL)?;
    Ok(PartitionReport { result, pohozaev, cross_l1, j_strict, j_relaxed })
}

/// Writes `report`, `gamma_points.csv` and per-site `frequency_<j>.csv`,
/// `pohozaev_<j>.csv` into `dir`.
pub fn write_report(dir: &Path, run: &LoadedRun, report: &PartitionReport) -> Result<()> {
    gamma_table(&report.result).write(&dir.join(GAMMA_FILE))?;
    for (j, d) in report.result.sites.iter().enumerate() {
        d.profile.table(d.min_c.unwrap_or(0.0)).write(&dir.join(format!("frequency_{j}.csv")))?;
        PohozaevReport::table(&report.pohozaev[j]).write(&dir.join(format!("pohozaev_{j}.csv")))?;
    }
    write_atomic(&dir.join(REPORT_FILE), report_text(run, report).as_bytes())
}

/// Loads the run in `dir`, analyses it and writes the report files next to it.
pub fn partition_report(dir: &Path, cache_dir: Option<&Path>) -> Result<PartitionReport> {
    let run = load_run(dir)?;
    let report = analyze_run(&run, cache_dir)?;
    write_report(dir, &run, &report)?;
    Ok(report)
}
