use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use segfrac::almgren::{
    default_radii, frequency_profile, min_monotone_c, morrey_quotient, n_zero_plus, pohozaev_residual, Field, PohozaevReport,
    Reaction, TransversePower,
};
use segfrac::analysis::{extract_free_boundary, segregated_extensions};
use segfrac::fraclap::cache;
use segfrac::io::{fmt_f64, write_atomic, Table};
use segfrac::report::{partition_report, POHOZAEV_STRIDE};
use segfrac::run::{build_id, load_run, segregate, write_run, RunConfig};
use segfrac::{smallest_eigenpair, Error};

const USAGE: u8 = 2;
const DATA: u8 = 3;
const NUMERICAL: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "segfrac", version, about = "Segregated fractional profiles and frequency diagnostics")]
struct Cli {
    /// TOML run configuration; defaults apply to missing keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides `init.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for assembled forms and eigenpairs.
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    /// Worker threads; all cores when omitted.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Principal eigenpair of the interval or of a masked subset.
    Eig {
        /// CSV with a `mask` column of 0/1 per grid node.
        #[arg(long)]
        mask: Option<PathBuf>,
    },
    /// Full β continuation; writes a run directory.
    Segregate {
        /// Anchor the functional at the final densities of this run.
        #[arg(long)]
        anchored: Option<PathBuf>,
    },
    /// Frequency, Pohozaev and Morrey diagnostics.
    Frequency {
        /// Completed run; its free-boundary points are used unless `--points` is given.
        #[arg(long, conflicts_with = "builtin")]
        run: Option<PathBuf>,
        /// Comma-separated trace points.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        points: Vec<f64>,
        /// Closed-form test field instead of a run.
        #[arg(long, value_enum)]
        builtin: Option<Builtin>,
    },
    /// Partition report for a completed run.
    Report { run: PathBuf },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Builtin {
    /// `y^{1-a}`.
    Transverse,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    msg: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidParameter(_) => USAGE,
            Error::DimensionMismatch { .. }
            | Error::EmptyMask
            | Error::OutOfRange(_)
            | Error::Format { .. }
            | Error::Io { .. } => DATA,
            Error::ZeroVector | Error::Degenerate(_) | Error::NotConverged { .. } | Error::Precondition(_) => NUMERICAL,
        };
        Failure { code, msg: e.to_string() }
    }
}

fn data(msg: impl Into<String>) -> Failure {
    Failure { code: DATA, msg: msg.into() }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn load_config(cli: &Cli) -> CliResult<RunConfig> {
    let mut config = match &cli.config {
        Some(p) => RunConfig::load(p).map_err(|e| Failure { code: USAGE, msg: e.to_string() })?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.init.seed = seed;
    }
    config.validate()?;
    Ok(config)
}

fn out_dir(cli: &Cli, default: &Path) -> CliResult<PathBuf> {
    let dir = cli.out.clone().unwrap_or_else(|| default.to_path_buf());
    std::fs::create_dir_all(&dir).map_err(|e| data(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

fn cmd_eig(cli: &Cli, mask_path: Option<&Path>) -> CliResult<()> {
    let config = load_config(cli)?;
    let grid = config.grid()?;
    let form = cache::load_or_assemble(cli.cache_dir.as_deref(), &grid, &config.params()?)?;
    let mask = match mask_path {
        Some(p) => {
            let col = Table::read(p)?.float_column("mask", p)?;
            if col.len() != grid.len() {
                return Err(data(format!("mask has {} entries, grid has {}", col.len(), grid.len())));
            }
            col.iter().map(|&v| v != 0.0).collect()
        }
        None => vec![true; grid.len()],
    };
    let eig = match cli.cache_dir.as_deref().map(|d| cache::load_eigen(d, &form, &mask)).transpose()?.flatten() {
        Some(e) => e,
        None => {
            let e = smallest_eigenpair(&form, &mask, config.analysis.eigen_tol)?;
            if let Some(d) = cli.cache_dir.as_deref() {
                cache::store_eigen(d, &form, &mask, &e)?;
            }
            e
        }
    };
    let dir = out_dir(cli, Path::new("."))?;
    let mut t = Table::new(&["x", "phi"]);
    for p in 0..grid.len() {
        t.push_floats(&[grid.node(p), eig.phi[p]]);
    }
    t.write(&dir.join("eig.csv"))?;
    let summary = format!(
        "build = {}\ns = {}\nn = {}\nlambda = {}\nresidual = {}\niterations = {}\nconverged = {}\n",
        build_id(),
        fmt_f64(config.problem.s),
        config.problem.n,
        fmt_f64(eig.lambda),
        fmt_f64(eig.residual_norm),
        eig.iterations,
        eig.converged
    );
    write_atomic(&dir.join("eig"), summary.as_bytes())?;
    println!("lambda = {}", fmt_f64(eig.lambda));
    if !eig.converged {
        return Err(Failure { code: NUMERICAL, msg: "eigensolver hit its iteration cap".into() });
    }
    Ok(())
}

fn cmd_segregate(cli: &Cli, anchored: Option<&Path>) -> CliResult<()> {
    let mut config = load_config(cli)?;
    if let Some(a) = anchored {
        config.penalty.anchored = Some(a.to_path_buf());
    }
    let dir = out_dir(cli, Path::new("run"))?;
    let run = segregate(&config, cli.cache_dir.as_deref())?;
    write_run(&dir, &config, &run)?;
    let last = run.final_record();
    println!(
        "{} stages, final beta {}, overlap {}, J_beta {}",
        run.records.len(),
        fmt_f64(last.beta),
        fmt_f64(last.overlap),
        fmt_f64(last.j_beta)
    );
    if !last.diagnostics.converged() {
        return Err(Failure {
            code: NUMERICAL,
            msg: format!("final stage ended with status {}", last.diagnostics.status.as_str()),
        });
    }
    Ok(())
}

fn write_point(dir: &Path, j: usize, fields: &[&dyn Field], reaction: &Reaction, x0: f64, config: &RunConfig) -> CliResult<()> {
    let grid = config.grid()?;
    let alpha_star = config.params()?.alpha_star();
    let radii = &default_radii(grid.h(), (x0 - grid.x_left()).min(grid.x_right() - x0))?;
    let settings = config.analysis.settings();
    let profile = frequency_profile(fields, reaction, x0, radii, &settings.quadrature, settings.tau)?;
    let c = if profile.all_defined() { min_monotone_c(&profile)? } else { None };
    profile.table(c.unwrap_or(0.0)).write(&dir.join(format!("frequency_{j}.csv")))?;
    let poho = radii
        .iter()
        .step_by(POHOZAEV_STRIDE)
        .map(|&r| pohozaev_residual(fields, reaction, x0, r, &settings.quadrature))
        .collect::<segfrac::Result<Vec<_>>>()?;
    PohozaevReport::table(&poho).write(&dir.join(format!("pohozaev_{j}.csv")))?;
    let mut morrey = Table::new(&["r", "phi"]);
    for &r in radii {
        morrey.push_floats(&[r, morrey_quotient(fields, x0, 0.0, r, alpha_star, &settings.quadrature)?]);
    }
    morrey.write(&dir.join(format!("morrey_{j}.csv")))?;
    let n0 = n_zero_plus(&profile, c.unwrap_or(0.0));
    println!(
        "point {j}: x0 = {}, min_c = {}, N(0+) = {}",
        fmt_f64(x0),
        c.map_or("none".into(), fmt_f64),
        n0.map_or("none".into(), fmt_f64)
    );
    Ok(())
}

fn check_points(points: &[f64], lo: f64, hi: f64) -> CliResult<()> {
    match points.iter().find(|&&x| !(x > lo && x < hi)) {
        Some(x) => Err(data(format!("point {x} lies outside ({lo}, {hi})"))),
        None => Ok(()),
    }
}

fn cmd_frequency(cli: &Cli, run: Option<&Path>, points: &[f64], builtin: Option<Builtin>) -> CliResult<()> {
    match (run, builtin) {
        (Some(run_dir), None) => {
            let run = load_run(run_dir)?;
            let grid = run.config.grid()?;
            let params = run.config.params()?;
            let points = if points.is_empty() {
                let fb = extract_free_boundary(&run.densities, run.config.analysis.eps_gamma)?;
                fb.sites.iter().map(|s| s.centre()).collect()
            } else {
                points.to_vec()
            };
            check_points(&points, grid.x_left(), grid.x_right())?;
            let dir = out_dir(cli, run_dir)?;
            let evs = segregated_extensions(&run.densities, &params)?;
            let fields: Vec<&dyn Field> = evs.iter().map(|e| e as &dyn Field).collect();
            let reaction = Reaction::from_multipliers(&run.multipliers, params.extension_scale());
            for (j, &x0) in points.iter().enumerate() {
                write_point(&dir, j, &fields, &reaction, x0, &run.config)?;
            }
            Ok(())
        }
        (None, Some(Builtin::Transverse)) => {
            let config = load_config(cli)?;
            let grid = config.grid()?;
            let params = config.params()?;
            let points = if points.is_empty() { vec![0.5 * (grid.x_left() + grid.x_right())] } else { points.to_vec() };
            check_points(&points, grid.x_left(), grid.x_right())?;
            let dir = out_dir(cli, Path::new("."))?;
            let field = TransversePower::new(params.a());
            for (j, &x0) in points.iter().enumerate() {
                write_point(&dir, j, &[&field], &Reaction::none(1), x0, &config)?;
            }
            Ok(())
        }
        _ => Err(Failure { code: USAGE, msg: "frequency needs exactly one of --run or --builtin".into() }),
    }
}

fn cmd_report(cli: &Cli, run: &Path) -> CliResult<()> {
    if !run.is_dir() {
        return Err(data(format!("run directory {} not found", run.display())));
    }
    let report = partition_report(run, cli.cache_dir.as_deref())?;
    let r = &report.result;
    println!(
        "I = {}, J = {}, |J - I|/I = {}, {} free-boundary points",
        fmt_f64(r.i_value),
        fmt_f64(r.j_value),
        fmt_f64(r.equivalence_error),
        r.free_boundary.len()
    );
    Ok(())
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure { code: USAGE, msg: "--threads must be positive".into() });
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Failure { code: USAGE, msg: e.to_string() })?;
    }
    match &cli.command {
        Command::Eig { mask } => cmd_eig(cli, mask.as_deref()),
        Command::Segregate { anchored } => cmd_segregate(cli, anchored.as_deref()),
        Command::Frequency { run, points, builtin } => cmd_frequency(cli, run.as_deref(), points, *builtin),
        Command::Report { run } => cmd_report(cli, run),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { 0 });
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
