use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use pmsm_rpem::analysis::{
    discrete_stability, eigenvalues, evaluate_cell, MapRow, MapSetup, OperatingGrid, Surface,
};
use pmsm_rpem::estimator::Algorithm;
use pmsm_rpem::machine::Integrator;
use pmsm_rpem::scenario::{preset, preset_names, run_with, RunSummary, Scenario};
use pmsm_rpem::Error;

/// Per-unit IPMSM drive simulator with online flux and resistance estimation.
#[derive(Parser, Debug)]
#[command(name = "rpem", version)]
struct Cli {
    /// Directory for output files.
    #[arg(long, global = true, default_value = "rpem-out")]
    out: PathBuf,

    /// Override the noise seed of every scenario.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AlgorithmArg {
    Sga,
    Gna,
    Phyint,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Sga => Algorithm::Sga,
            AlgorithmArg::Gna => Algorithm::Gna,
            AlgorithmArg::Phyint => Algorithm::PhyInt,
        }
    }
}

#[derive(Args, Debug, Clone)]
struct RunOptions {
    /// Replace the estimator algorithm of the scenario.
    #[arg(long, value_enum)]
    algorithm: Option<AlgorithmArg>,

    /// Replace the run length, seconds.
    #[arg(long)]
    duration: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one scenario file or bundled preset.
    Sim {
        scenario: String,
        #[command(flatten)]
        opts: RunOptions,
    },
    /// Run every bundled preset whose name matches a glob, in parallel.
    Sweep {
        pattern: String,
        #[command(flatten)]
        opts: RunOptions,
    },
    /// Evaluate an analysis surface over a speed-torque grid.
    Map {
        /// sensitivity, gradient, hessian, eigen or all
        surface: String,
        /// Speed range in pu, as min:max.
        #[arg(long, default_value = "-1:1", allow_hyphen_values = true)]
        speed_range: String,
        #[arg(long, default_value_t = 81)]
        speed_points: usize,
        /// Torque range in pu, as min:max.
        #[arg(long, default_value = "-1:1", allow_hyphen_values = true)]
        torque_range: String,
        #[arg(long, default_value_t = 81)]
        torque_points: usize,
        /// Relative flux error of the estimate (true minus estimated, over estimated).
        #[arg(long, default_value_t = 0.1, allow_hyphen_values = true)]
        flux_error: f64,
        /// Drop cells whose steady voltage exceeds this magnitude, pu.
        #[arg(long)]
        u_max: Option<f64>,
    },
    /// Continuous and discrete stator eigenvalues along a speed range.
    Eig {
        /// Speed range in pu, as min:max.
        #[arg(long, default_value = "-1:1", allow_hyphen_values = true)]
        speed_range: String,
        #[arg(long, default_value_t = 201)]
        points: usize,
    },
    /// Parse and check a scenario file without running it.
    Validate { scenario: PathBuf },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.chain().find_map(|c| c.downcast_ref::<Error>()) {
        Some(Error::Divergence { .. }) => 2,
        _ => 1,
    }
}

fn dispatch(cli: &Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Sim { scenario, opts } => sim(cli, scenario, opts),
        Command::Sweep { pattern, opts } => sweep(cli, pattern, opts),
        Command::Map { surface, speed_range, speed_points, torque_range, torque_points, flux_error, u_max } => {
            let surface: Surface = surface.parse()?;
            let grid = OperatingGrid::uniform(
                parse_range(speed_range)?,
                *speed_points,
                parse_range(torque_range)?,
                *torque_points,
            )?;
            let mut setup = MapSetup::table_defaults();
            setup.delta.psi_m = flux_error * setup.theta.psi_m;
            setup.u_max = *u_max;
            map(cli, surface, &grid, &setup)
        }
        Command::Eig { speed_range, points } => eig(cli, parse_range(speed_range)?, *points),
        Command::Validate { scenario } => {
            let s = load_file(scenario)?;
            s.validate()?;
            println!("{}: ok, {} steps", display_name(&s, scenario), s.steps());
            Ok(())
        }
    }
}

fn parse_range(s: &str) -> anyhow::Result<(f64, f64)> {
    let (a, b) = s.split_once(':').with_context(|| format!("range '{s}' must look like min:max"))?;
    let a: f64 = a.trim().parse().with_context(|| format!("bad range start in '{s}'"))?;
    let b: f64 = b.trim().parse().with_context(|| format!("bad range end in '{s}'"))?;
    if !(a.is_finite() && b.is_finite()) || a > b {
        return Err(Error::Validation(format!("range '{s}' must be finite with min <= max")).into());
    }
    Ok((a, b))
}

fn load_file(path: &Path) -> anyhow::Result<Scenario> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Scenario::from_toml_str(&text)?)
}

fn display_name(s: &Scenario, path: &Path) -> String {
    if s.name.is_empty() {
        path.file_stem().map_or_else(|| "scenario".into(), |p| p.to_string_lossy().into_owned())
    } else {
        s.name.clone()
    }
}

/// A file path if one exists, otherwise a preset name.
fn resolve(arg: &str) -> anyhow::Result<Scenario> {
    let path = Path::new(arg);
    if path.is_file() {
        let mut s = load_file(path)?;
        s.name = display_name(&s, path);
        return Ok(s);
    }
    match preset(arg) {
        Some(s) => Ok(s?),
        None => Err(Error::Validation(format!(
            "'{arg}' is neither a file nor a preset ({})",
            preset_names().collect::<Vec<_>>().join(", ")
        ))
        .into()),
    }
}

fn apply(cli: &Cli, opts: &RunOptions, s: &mut Scenario) {
    if let Some(a) = opts.algorithm {
        s.estimator.algorithm = a.into();
    }
    if let Some(d) = opts.duration {
        s.duration_s = d;
    }
    if let Some(seed) = cli.seed {
        s.seed = seed;
    }
}

fn out_dir(cli: &Cli) -> anyhow::Result<&Path> {
    fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    Ok(&cli.out)
}

fn csv_writer(path: &Path) -> anyhow::Result<csv::Writer<BufWriter<File>>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(csv::Writer::from_writer(BufWriter::new(f)))
}

#[derive(Serialize)]
struct SummaryRow {
    name: String,
    algorithm: String,
    status: String,
    psi_m_final: Option<f64>,
    psi_m_converged: Option<bool>,
    psi_m_time_s: Option<f64>,
    psi_m_sse: Option<f64>,
    psi_m_overshoot: Option<f64>,
    r_s_final: Option<f64>,
    r_s_converged: Option<bool>,
    r_s_time_s: Option<f64>,
    r_s_sse: Option<f64>,
    r_s_overshoot: Option<f64>,
}

impl SummaryRow {
    fn new(s: &Scenario, result: &anyhow::Result<RunSummary>) -> Self {
        let mut row = SummaryRow {
            name: s.name.clone(),
            algorithm: format!("{:?}", s.estimator.algorithm).to_lowercase(),
            status: "ok".into(),
            psi_m_final: None,
            psi_m_converged: None,
            psi_m_time_s: None,
            psi_m_sse: None,
            psi_m_overshoot: None,
            r_s_final: None,
            r_s_converged: None,
            r_s_time_s: None,
            r_s_sse: None,
            r_s_overshoot: None,
        };
        match result {
            Ok(r) => {
                row.psi_m_final = r.trajectory.psi_m_hat.last().copied();
                row.psi_m_converged = Some(r.psi_m.converged);
                row.psi_m_time_s = r.psi_m.convergence_time;
                row.psi_m_sse = Some(r.psi_m.steady_state_error);
                row.psi_m_overshoot = Some(r.psi_m.overshoot);
                row.r_s_final = r.trajectory.r_s_hat.last().copied();
                row.r_s_converged = Some(r.r_s.converged);
                row.r_s_time_s = r.r_s.convergence_time;
                row.r_s_sse = Some(r.r_s.steady_state_error);
                row.r_s_overshoot = Some(r.r_s.overshoot);
            }
            Err(e) if exit_code(e) == 2 => row.status = "diverged".into(),
            Err(_) => row.status = "invalid".into(),
        }
        row
    }

    fn print(&self) {
        let t = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.3} s"));
        let f = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.5}"));
        println!(
            "{:<10} {:<7} {:<8} psi_m {} ({}) r_s {} ({})",
            self.name,
            self.algorithm,
            self.status,
            f(self.psi_m_final),
            t(self.psi_m_time_s),
            f(self.r_s_final),
            t(self.r_s_time_s),
        );
    }
}

/// Runs one scenario, streaming the log to `<dir>/<name>.csv`.
fn run_to_file(dir: &Path, s: &Scenario) -> anyhow::Result<RunSummary> {
    let path = dir.join(format!("{}.csv", s.name));
    let mut w = csv_writer(&path)?;
    let mut write_err = None;
    let result = run_with(s, |r| {
        if write_err.is_none() {
            if let Err(e) = w.serialize(r) {
                write_err = Some(e);
            }
        }
    });
    // keep whatever was logged before a divergence
    w.flush().with_context(|| format!("writing {}", path.display()))?;
    if let Some(e) = write_err {
        return Err(e).with_context(|| format!("writing {}", path.display()));
    }
    result.with_context(|| format!("scenario '{}'", s.name))
}

fn write_summary(dir: &Path, rows: &[SummaryRow]) -> anyhow::Result<()> {
    let path = dir.join("summary.csv");
    let mut w = csv_writer(&path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn sim(cli: &Cli, arg: &str, opts: &RunOptions) -> anyhow::Result<()> {
    let mut s = resolve(arg)?;
    apply(cli, opts, &mut s);
    s.validate()?;
    let dir = out_dir(cli)?;
    let result = run_to_file(dir, &s);
    let row = SummaryRow::new(&s, &result);
    row.print();
    write_summary(dir, &[row])?;
    result.map(|_| ())
}

fn sweep(cli: &Cli, pattern: &str, opts: &RunOptions) -> anyhow::Result<()> {
    let glob = glob::Pattern::new(pattern).with_context(|| format!("bad pattern '{pattern}'"))?;
    let names: Vec<_> = preset_names().filter(|n| glob.matches(n)).collect();
    if names.is_empty() {
        return Err(Error::Validation(format!("no preset matches '{pattern}'")).into());
    }
    let mut scenarios = Vec::with_capacity(names.len());
    for n in names {
        let mut s = preset(n).expect("listed preset")?;
        apply(cli, opts, &mut s);
        s.validate()?;
        scenarios.push(s);
    }
    let dir = out_dir(cli)?;
    let results: Vec<_> = scenarios.par_iter().map(|s| run_to_file(dir, s)).collect();

    let rows: Vec<_> = scenarios.iter().zip(&results).map(|(s, r)| SummaryRow::new(s, r)).collect();
    for r in &rows {
        r.print();
    }
    write_summary(dir, &rows)?;

    // divergence outranks every other failure
    let mut failures: Vec<_> = results.into_iter().filter_map(|r| r.err()).collect();
    failures.sort_by_key(|e| std::cmp::Reverse(exit_code(e)));
    match failures.into_iter().next() {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn map(cli: &Cli, surface: Surface, grid: &OperatingGrid, setup: &MapSetup) -> anyhow::Result<()> {
    let cells: Vec<_> = grid.cells().collect();
    let rows: Vec<MapRow> = cells
        .par_iter()
        .map(|&(n, t)| MapRow::new(n, t, evaluate_cell(setup, n, t).as_ref(), surface))
        .collect();
    let name = format!("{surface:?}").to_lowercase();
    let path = out_dir(cli)?.join(format!("map_{name}.csv"));
    let mut w = csv_writer(&path)?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    let absent = rows.iter().filter(|r| r.eps_d.is_none() && r.psi11.is_none() && r.r_scalar.is_none() && r.re_l1.is_none()).count();
    println!("{}: {} cells, {} unreachable", path.display(), rows.len(), absent);
    Ok(())
}

#[derive(Serialize)]
struct EigRow {
    n_pu: f64,
    re_l1: f64,
    im_l1: f64,
    re_l2: f64,
    im_l2: f64,
    z_euler_mag: f64,
    z_trap_mag: f64,
    euler_stable: bool,
    trap_stable: bool,
}

fn eig(cli: &Cli, range: (f64, f64), points: usize) -> anyhow::Result<()> {
    if points == 0 {
        bail!(Error::Validation("points must be at least 1".into()));
    }
    let setup = MapSetup::table_defaults();
    let speeds: Vec<f64> = if points == 1 {
        vec![range.0]
    } else {
        (0..points).map(|k| range.0 + (range.1 - range.0) * k as f64 / (points - 1) as f64).collect()
    };
    let path = out_dir(cli)?.join("eig.csv");
    let mut w = csv_writer(&path)?;
    let mut unstable = 0;
    for n in speeds {
        let e = eigenvalues(&setup.theta, &setup.x, n, setup.omega_n);
        let pole = |m| {
            let (a, sa) = discrete_stability(e.lambda1, setup.dt, m);
            let (b, sb) = discrete_stability(e.lambda2, setup.dt, m);
            (a.norm().max(b.norm()), sa && sb)
        };
        let (z_euler_mag, euler_stable) = pole(Integrator::ExplicitEuler);
        let (z_trap_mag, trap_stable) = pole(Integrator::Trapezoidal);
        unstable += usize::from(!euler_stable || !trap_stable);
        w.serialize(EigRow {
            n_pu: n,
            re_l1: e.lambda1.re,
            im_l1: e.lambda1.im,
            re_l2: e.lambda2.re,
            im_l2: e.lambda2.im,
            z_euler_mag,
            z_trap_mag,
            euler_stable,
            trap_stable,
        })?;
    }
    w.flush()?;
    println!("{}: {} speeds, {} with an unstable discrete pole", path.display(), points, unstable);
    Ok(())
}
