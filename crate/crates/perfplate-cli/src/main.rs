mod config;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use config::{parse_eps_list, FileConfig};
use perfplate::{
    assemble_temperature, calibrate_convention, default_stop_tol, fixed_point_solve,
    reproduce_table1, run_sweep, solve_on_mask, sweep_json, table_csv_full, table_csv_rounded,
    trace_csv, Error, Grid2D, HomogenizedProblem, MgConfig, PerforatedOptions, PerforationSpec,
    ScalarField, SweepOptions,
};

const EXIT_INVALID_CONFIG: i32 = 2;
const EXIT_UNDER_RESOLVED: i32 = 3;
const EXIT_NON_CONVERGENCE: i32 = 4;

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::UnderResolved { .. } => EXIT_UNDER_RESOLVED,
        Error::NonConvergence { .. } => EXIT_NON_CONVERGENCE,
        _ => EXIT_INVALID_CONFIG,
    }
}

#[derive(Parser)]
#[command(
    name = "perfplate",
    version,
    about = "Dirichlet solvers for a periodically punched plate and its homogenized limit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the homogenized limit problem (-lap U + mu U = f + mu T) and
    /// emit the temperature table plus the fixed-point trace.
    SolveHomogenized(SolveHomogenizedArgs),
    /// Solve the punched-plate problem directly on the masked grid.
    SolvePerforated(SolvePerforatedArgs),
    /// Sweep over eps values: solve both problems per eps and record the
    /// discrepancies between them.
    Compare(CompareArgs),
    /// Run the fixed 16x16 preset (mu = pi, f = 1, T = 10) and emit the
    /// 17x17 table with its structural report.
    ReproduceTable1(OutputArgs),
    /// Compare candidate unit conventions against the published reference
    /// table without changing any default.
    Calibrate(OutputArgs),
}

#[derive(Args)]
struct OutputArgs {
    /// Key-value config file; command-line flags win on conflict.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for output files (created if missing).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Record wall-clock timings in JSON outputs. Off by default so that
    /// identical runs produce byte-identical files.
    #[arg(long)]
    timings: bool,
}

#[derive(Args)]
struct MgArgs {
    /// Multigrid residual target (absolute-relative hybrid).
    #[arg(long)]
    mg_target: Option<f64>,
    /// Maximum V-cycles per multigrid solve.
    #[arg(long)]
    mg_cycles: Option<usize>,
    /// Smoothing sweeps before coarse-grid correction.
    #[arg(long)]
    pre_smooth: Option<usize>,
    /// Smoothing sweeps after coarse-grid correction.
    #[arg(long)]
    post_smooth: Option<usize>,
}

#[derive(Args)]
struct SolveHomogenizedArgs {
    /// Cells per side (power of two).
    #[arg(long)]
    n: Option<usize>,
    /// Hole-radius law constant; the absorption constant is pi / (2 c0).
    #[arg(long)]
    c0: Option<f64>,
    /// Constant source density.
    #[arg(long, conflicts_with = "f_field")]
    f_const: Option<f64>,
    /// Source density read from a full-precision table CSV.
    #[arg(long)]
    f_field: Option<PathBuf>,
    /// Boundary temperature.
    #[arg(long)]
    t: Option<f64>,
    /// Fixed-point stopping threshold on |G_{n+1} - G_n|.
    #[arg(long)]
    stop_tol: Option<f64>,
    /// Fixed-point iteration cap.
    #[arg(long)]
    max_iter: Option<usize>,
    #[command(flatten)]
    mg: MgArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SolvePerforatedArgs {
    /// Lattice period as an exact fraction, e.g. 1/2 or 1/3.
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    c0: Option<f64>,
    #[arg(long, conflicts_with = "f_field")]
    f_const: Option<f64>,
    #[arg(long)]
    f_field: Option<PathBuf>,
    #[arg(long)]
    t: Option<f64>,
    /// Relative residual tolerance of the conjugate-gradient solve.
    #[arg(long)]
    rel_tol: Option<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct CompareArgs {
    /// Comma-separated eps fractions, e.g. 1/2,1/3.
    #[arg(long)]
    eps_list: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    c0: Option<f64>,
    #[arg(long, conflicts_with = "f_field")]
    f_const: Option<f64>,
    #[arg(long)]
    f_field: Option<PathBuf>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    stop_tol: Option<f64>,
    #[arg(long)]
    rel_tol: Option<f64>,
    /// Worker threads across eps entries; 1 keeps output byte-reproducible.
    #[arg(long)]
    jobs: Option<usize>,
    /// Record the mu = 0 (no absorption) baseline discrepancy (default on).
    #[arg(long, conflicts_with = "no_baseline_mu0")]
    baseline_mu0: bool,
    /// Skip the mu = 0 baseline.
    #[arg(long)]
    no_baseline_mu0: bool,
    #[command(flatten)]
    output: OutputArgs,
}

struct Resolver {
    cfg: FileConfig,
}

impl Resolver {
    fn load(path: &Option<PathBuf>) -> Result<Self, Error> {
        let cfg = match path {
            None => FileConfig::empty(),
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| {
                    Error::InvalidConfig(format!("cannot read config {}: {e}", p.display()))
                })?;
                FileConfig::parse(&text).map_err(Error::InvalidConfig)?
            }
        };
        Ok(Self { cfg })
    }

    fn num<T: std::str::FromStr>(
        &self,
        flag: Option<T>,
        key: &str,
        default: Option<T>,
    ) -> Result<T, Error> {
        if let Some(v) = flag {
            return Ok(v);
        }
        if let Some(v) = self
            .cfg
            .get_parsed::<T>(key)
            .map_err(Error::InvalidConfig)?
        {
            return Ok(v);
        }
        default.ok_or_else(|| {
            Error::InvalidConfig(format!(
                "missing required parameter `{}` (flag --{} or config key {key})",
                key,
                key.replace('_', "-")
            ))
        })
    }

    /// Flag or config value, with no default: `None` means "not given".
    fn num_opt<T: std::str::FromStr>(
        &self,
        flag: Option<T>,
        key: &str,
    ) -> Result<Option<T>, Error> {
        if flag.is_some() {
            return Ok(flag);
        }
        self.cfg.get_parsed::<T>(key).map_err(Error::InvalidConfig)
    }

    fn string(&self, flag: Option<String>, key: &str) -> Option<String> {
        flag.or_else(|| self.cfg.get(key).map(str::to_string))
    }

    fn path(&self, flag: Option<PathBuf>, key: &str) -> Option<PathBuf> {
        flag.or_else(|| self.cfg.get(key).map(PathBuf::from))
    }

    fn out_dir(&self, flag: Option<PathBuf>) -> PathBuf {
        self.path(flag, "out_dir").unwrap_or_else(|| PathBuf::from("."))
    }

    fn mg_config(&self, args: &MgArgs) -> Result<MgConfig, Error> {
        let defaults = MgConfig::default();
        Ok(MgConfig {
            pre_smooth: self.num(args.pre_smooth, "pre_smooth", Some(defaults.pre_smooth))?,
            post_smooth: self.num(args.post_smooth, "post_smooth", Some(defaults.post_smooth))?,
            max_cycles: self.num(args.mg_cycles, "mg_cycles", Some(defaults.max_cycles))?,
            target_residual_linf: self.num(
                args.mg_target,
                "mg_target",
                Some(defaults.target_residual_linf),
            )?,
            coarsest_n: defaults.coarsest_n,
        })
    }

    /// Source density plus its JSON echo. A field file wins over a constant;
    /// the default is the unit source.
    fn source(
        &self,
        grid: Grid2D,
        f_const: Option<f64>,
        f_field: Option<PathBuf>,
    ) -> Result<(ScalarField, serde_json::Value), Error> {
        let field_path = self.path(f_field, "f_field");
        if let Some(path) = field_path {
            let text = fs::read_to_string(&path).map_err(|e| {
                Error::InvalidConfig(format!("cannot read field {}: {e}", path.display()))
            })?;
            let field = perfplate::parse_table_csv(&text)?;
            if field.grid() != grid {
                return Err(Error::ShapeMismatch(format!(
                    "field file has n = {}, run uses n = {}",
                    field.grid().n(),
                    grid.n()
                )));
            }
            return Ok((field, json!({ "f_field": path.display().to_string() })));
        }
        let value = self.num(f_const, "f_const", Some(1.0))?;
        Ok((ScalarField::constant(grid, value), json!({ "f_const": value })))
    }
}

fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<(), Error> {
    fs::create_dir_all(dir)
        .map_err(|e| Error::InvalidConfig(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    let tmp = dir.join(format!("{name}.tmp"));
    fs::write(&tmp, contents)
        .map_err(|e| Error::InvalidConfig(format!("cannot write {}: {e}", tmp.display())))?;
    fs::rename(&tmp, &path)
        .map_err(|e| Error::InvalidConfig(format!("cannot rename to {}: {e}", path.display())))?;
    Ok(())
}

fn json_pretty(value: &serde_json::Value) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    text
}

fn cmd_solve_homogenized(args: SolveHomogenizedArgs) -> Result<(), Error> {
    let r = Resolver::load(&args.output.config)?;
    let n = r.num(args.n, "n", Some(16))?;
    let c0 = r.num(args.c0, "c0", Some(0.5))?;
    let t = r.num(args.t, "t", Some(10.0))?;
    let max_iter = r.num(args.max_iter, "max_iter", Some(500))?;
    let mg = r.mg_config(&args.mg)?;
    let out_dir = r.out_dir(args.output.out_dir.clone());

    let started = std::time::Instant::now();
    let grid = Grid2D::new(n)?;
    let (f, f_echo) = r.source(grid, args.f_const, args.f_field.clone())?;
    let stop_tol = r
        .num_opt(args.stop_tol, "stop_tol")?
        .unwrap_or_else(|| default_stop_tol(&f));
    let problem = HomogenizedProblem::new(c0, t, f)?;
    let mu = problem.mu();
    let (g, trace) = fixed_point_solve(&problem, &mg, stop_tol, max_iter)?;
    let u = assemble_temperature(&g, t);

    let mut meta = json!({
        "command": "solve-homogenized",
        "version": env!("CARGO_PKG_VERSION"),
        "n": n,
        "c0": c0,
        "mu": mu,
        "t_boundary": t,
        "source": f_echo,
        "stop_tol": stop_tol,
        "iterations": trace.iterations(),
        "converged": trace.converged,
        "final_delta": trace.deltas.last().copied(),
        "final_ratio": trace.final_ratio(),
    });
    if args.output.timings {
        meta["timings"] = json!({ "seconds": started.elapsed().as_secs_f64() });
    }

    write_atomic(&out_dir, "table.csv", &table_csv_rounded(&u, 3))?;
    write_atomic(&out_dir, "table_full.csv", &table_csv_full(&u))?;
    write_atomic(&out_dir, "trace.csv", &trace_csv(&trace))?;
    write_atomic(&out_dir, "run.json", &json_pretty(&meta))?;
    println!(
        "solve-homogenized: n = {n}, mu = {mu:.6}, converged in {} iterations (delta = {:.3e})",
        trace.iterations(),
        trace.deltas.last().copied().unwrap_or(0.0)
    );
    println!("wrote table.csv, table_full.csv, trace.csv, run.json to {}", out_dir.display());
    Ok(())
}

fn cmd_solve_perforated(args: SolvePerforatedArgs) -> Result<(), Error> {
    let r = Resolver::load(&args.output.config)?;
    let eps_text = r
        .string(args.eps.clone(), "eps")
        .ok_or_else(|| Error::InvalidConfig("missing required parameter `eps`".into()))?;
    let m = config::parse_eps_fraction(&eps_text).map_err(Error::InvalidConfig)?;
    let n = r.num(args.n, "n", Some(256))?;
    let c0 = r.num(args.c0, "c0", Some(0.5))?;
    let t = r.num(args.t, "t", Some(10.0))?;
    let rel_tol = r.num(args.rel_tol, "rel_tol", Some(1e-10))?;
    let out_dir = r.out_dir(args.output.out_dir.clone());

    let started = std::time::Instant::now();
    let grid = Grid2D::new(n)?;
    let (f, f_echo) = r.source(grid, args.f_const, args.f_field.clone())?;
    let spec = PerforationSpec::from_reciprocal(m, c0)?;
    let mask = perfplate::build_mask(&spec, grid)?;
    let u = solve_on_mask(
        &mask,
        &f,
        t,
        PerforatedOptions {
            rel_tol,
            ..PerforatedOptions::default()
        },
    )?;

    let mut meta = json!({
        "command": "solve-perforated",
        "version": env!("CARGO_PKG_VERSION"),
        "eps": format!("1/{m}"),
        "epsilon": spec.epsilon(),
        "n": n,
        "c0": c0,
        "t_boundary": t,
        "source": f_echo,
        "rel_tol": rel_tol,
        "radius": spec.radius(),
        "hole_count": spec.hole_count(),
        "hole_nodes": mask.hole_node_count(),
        "active_nodes": mask.active_count(),
    });
    if args.output.timings {
        meta["timings"] = json!({ "seconds": started.elapsed().as_secs_f64() });
    }

    write_atomic(&out_dir, "solution.csv", &table_csv_rounded(&u, 3))?;
    write_atomic(&out_dir, "solution_full.csv", &table_csv_full(&u))?;
    write_atomic(&out_dir, "run.json", &json_pretty(&meta))?;
    println!(
        "solve-perforated: eps = 1/{m}, n = {n}, {} holes of radius {:.6}",
        spec.hole_count(),
        spec.radius()
    );
    println!("wrote solution.csv, solution_full.csv, run.json to {}", out_dir.display());
    Ok(())
}

fn cmd_compare(args: CompareArgs) -> Result<(), Error> {
    let r = Resolver::load(&args.output.config)?;
    let list_text = r
        .string(args.eps_list.clone(), "eps_list")
        .ok_or_else(|| Error::InvalidConfig("missing required parameter `eps_list`".into()))?;
    let ms = parse_eps_list(&list_text).map_err(Error::InvalidConfig)?;
    let n = r.num(args.n, "n", Some(1024))?;
    let c0 = r.num(args.c0, "c0", Some(0.5))?;
    let t = r.num(args.t, "t", Some(10.0))?;
    let rel_tol = r.num(args.rel_tol, "rel_tol", Some(1e-10))?;
    let jobs = r.num(args.jobs, "jobs", Some(1))?;
    let include_baseline = if args.no_baseline_mu0 {
        false
    } else if args.baseline_mu0 {
        true
    } else {
        r.num(None::<BoolArg>, "baseline_mu0", Some(BoolArg(true)))?.0
    };
    let out_dir = r.out_dir(args.output.out_dir.clone());

    let grid = Grid2D::new(n)?;
    let (f, f_echo) = r.source(grid, args.f_const, args.f_field.clone())?;
    let stop_tol = r.num_opt(args.stop_tol, "stop_tol")?;
    let opts = SweepOptions {
        perforated_rel_tol: rel_tol,
        stop_tol,
        include_baseline,
        jobs,
        measure_time: args.output.timings,
        ..SweepOptions::default()
    };
    let output = run_sweep(&ms, c0, grid, &f, t, &opts)?;

    let mut sweep_value: serde_json::Value =
        serde_json::from_str(&sweep_json(&output.result, args.output.timings))
            .expect("round-trip");
    sweep_value["source"] = f_echo;
    write_atomic(&out_dir, "sweep.json", &json_pretty(&sweep_value))?;
    write_atomic(
        &out_dir,
        "homogenized_full.csv",
        &table_csv_full(&output.homogenized),
    )?;
    write_atomic(&out_dir, "trace.csv", &trace_csv(&output.trace))?;
    for (m, field) in &output.extended {
        write_atomic(
            &out_dir,
            &format!("extended_eps_1_{m}_full.csv"),
            &table_csv_full(field),
        )?;
    }
    if let Some(baseline) = &output.baseline_field {
        write_atomic(&out_dir, "baseline_mu0_full.csv", &table_csv_full(baseline))?;
    }

    for record in &output.result.records {
        println!(
            "eps = 1/{}: L2H discrepancy = {:.6e}, LINF = {:.6e}, H1(extended) = {:.6}",
            record.eps_reciprocal,
            record.discrepancy_l2h,
            record.discrepancy_linf,
            record.h1_extended
        );
    }
    for failure in &output.result.failures {
        println!("eps = 1/{}: FAILED ({})", failure.eps_reciprocal, failure.error);
    }
    if let Some(b) = &output.result.baseline_mu0 {
        println!(
            "baseline mu = 0 vs eps = 1/{}: L2H = {:.6e}, LINF = {:.6e}",
            b.eps_reciprocal, b.discrepancy_l2h, b.discrepancy_linf
        );
    }
    println!("wrote sweep.json and solution CSVs to {}", out_dir.display());
    Ok(())
}

/// Bool wrapper so config files can say `baseline_mu0 = true`.
#[derive(Clone, Copy)]
struct BoolArg(bool);

impl std::str::FromStr for BoolArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "true" | "1" | "yes" | "on" => Ok(BoolArg(true)),
            "false" | "0" | "no" | "off" => Ok(BoolArg(false)),
            other => Err(format!("expected a boolean, got {other:?}")),
        }
    }
}

fn cmd_reproduce_table1(args: OutputArgs) -> Result<(), Error> {
    let r = Resolver::load(&args.config)?;
    let out_dir = r.out_dir(args.out_dir.clone());
    let run = reproduce_table1()?;

    let report = serde_json::to_value(&run.report).expect("serializable");
    write_atomic(&out_dir, "table1.csv", &table_csv_rounded(&run.temperature, 3))?;
    write_atomic(&out_dir, "table1_full.csv", &table_csv_full(&run.temperature))?;
    write_atomic(&out_dir, "trace.csv", &trace_csv(&run.trace))?;
    write_atomic(&out_dir, "report.json", &json_pretty(&report))?;

    let verdict = |ok: bool| if ok { "pass" } else { "FAIL" };
    println!(
        "boundary pinned at 10:      {}",
        verdict(run.report.boundary_all_t)
    );
    println!(
        "eightfold symmetry (3 dec): {}",
        verdict(run.report.symmetric_rounded)
    );
    println!(
        "unique max at center:       {}",
        verdict(run.report.unique_center_max)
    );
    println!(
        "interior within (10, 10.1): {}",
        verdict(run.report.interior_in_range)
    );
    println!(
        "center value = {:.6}, {} fixed-point iterations",
        run.report.center_value,
        run.trace.iterations()
    );
    println!("wrote table1.csv, table1_full.csv, trace.csv, report.json to {}", out_dir.display());
    Ok(())
}

fn cmd_calibrate(args: OutputArgs) -> Result<(), Error> {
    let r = Resolver::load(&args.config)?;
    let out_dir = r.out_dir(args.out_dir.clone());
    let report = calibrate_convention()?;

    let value = serde_json::to_value(&report).expect("serializable");
    write_atomic(&out_dir, "calibration.json", &json_pretty(&value))?;

    println!("deviation from the published table by unit convention:");
    for entry in &report.entries {
        println!(
            "  {:>18}: mu = {:>10.4}, f scale = {:>6.1}, max deviation = {:.6}, center = {:.6}",
            entry.name, entry.mu, entry.f_scale, entry.linf_deviation, entry.center_value
        );
    }
    println!(
        "best match: {} ({}the default convention; defaults unchanged)",
        report.best,
        if report.improves_on_default {
            "improves on "
        } else {
            "matches "
        }
    );
    println!(
        "3-decimal table cells changed between stop_tol 1e-6 and 1e-10: {}",
        report.stop_tol_cells_differing
    );
    println!("wrote calibration.json to {}", out_dir.display());
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::SolveHomogenized(args) => cmd_solve_homogenized(args),
        Command::SolvePerforated(args) => cmd_solve_perforated(args),
        Command::Compare(args) => cmd_compare(args),
        Command::ReproduceTable1(args) => cmd_reproduce_table1(args),
        Command::Calibrate(args) => cmd_calibrate(args),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(exit_code(&e));
    }
}
