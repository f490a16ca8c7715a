use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use flexroute::exact::SolveStatus;
use flexroute::experiments::{
    compare, render_route, run_solver, summary_csv, sweep, sweep_csv, SolutionFile, SolveSettings, SolverKind,
    SweepSpec, Variant,
};
use flexroute::instances::{generate, read_instance, write_instance, GenConfig, SizeClass};
use flexroute::milp::{build_milp_with, export_lp, extract_solution, read_solution_file, MilpOptions};
use flexroute::validate::{validate, validate_strict};
use flexroute::{Instance, Mode};

#[derive(Parser)]
#[command(name = "flexroute", version, about = "Nurse routing with depot or laboratory route endpoints")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance.
    Gen(GenArgs),
    /// Solve an instance and write a solution file.
    Solve(SolveArgs),
    /// Check a solution file against an instance.
    Validate(ValidateArgs),
    /// Write the MILP model in LP format.
    ExportLp(ExportArgs),
    /// Turn an external MILP solver's variable values into a solution file.
    Extract(ExtractArgs),
    /// Solve in classic and flexible mode and compare the routes.
    Compare(CompareArgs),
    /// Re-solve with one service's endpoint requirements varied.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Size class; sets patients, nurses and services.
    #[arg(long, value_parser = parse_from_str::<SizeClass>)]
    class: Option<SizeClass>,
    #[arg(long, required_unless_present = "class")]
    patients: Option<usize>,
    #[arg(long, required_unless_present = "class")]
    nurses: Option<usize>,
    #[arg(long, required_unless_present = "class")]
    services: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    demand_density: Option<f64>,
    #[arg(long)]
    qualification_density: Option<f64>,
    #[arg(long)]
    window_width: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    area_side: Option<f64>,
    /// Clear every service's laboratory start and end requirement.
    #[arg(long)]
    no_lab_requirements: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct SolverArgs {
    #[arg(long, default_value = "exact", value_parser = parse_from_str::<SolverKind>)]
    solver: SolverKind,
    /// Heuristic seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Seconds.
    #[arg(long, default_value_t = 300.0)]
    time_limit: f64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Require every nurse to serve at least one task.
    #[arg(long)]
    strict_all_nurses: bool,
}

impl SolverArgs {
    fn settings(&self) -> Result<SolveSettings> {
        if !(self.time_limit.is_finite() && self.time_limit > 0.0) {
            bail!("--time-limit must be a positive number of seconds");
        }
        Ok(SolveSettings {
            solver: self.solver,
            time_limit: Duration::from_secs_f64(self.time_limit),
            threads: self.threads.max(1),
            strict_all_nurses: self.strict_all_nurses,
            seed: self.seed,
            ..SolveSettings::default()
        })
    }
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value = "flexible", value_parser = parse_from_str::<Mode>)]
    mode: Mode,
    #[command(flatten)]
    solver: SolverArgs,
    /// Solution file (JSON).
    #[arg(long)]
    out: Option<PathBuf>,
    /// One-row CSV summary with the per-nurse endpoint columns.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Leave wall time out of the summary so it is reproducible byte for byte.
    #[arg(long)]
    omit_time: bool,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    solution: PathBuf,
    /// Overrides the mode stored in the solution file.
    #[arg(long, value_parser = parse_from_str::<Mode>)]
    mode: Option<Mode>,
    #[arg(long)]
    strict_all_nurses: bool,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value = "flexible", value_parser = parse_from_str::<Mode>)]
    mode: Mode,
    #[arg(long)]
    strict_all_nurses: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value = "flexible", value_parser = parse_from_str::<Mode>)]
    mode: Mode,
    #[arg(long)]
    strict_all_nurses: bool,
    /// Lines of `<variable> <value>`.
    #[arg(long)]
    values: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    instance: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
    /// CSV with one row per mode and nurse.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    omit_time: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Target service, 1-based as in S1..S6.
    #[arg(long)]
    service: usize,
    #[arg(long, value_delimiter = ',', default_value = "none,start_lab,end_lab", value_parser = parse_from_str::<Variant>)]
    variants: Vec<Variant>,
    /// Clear the other services' requirements first.
    #[arg(long)]
    clear_other_flags: bool,
    /// Add a column with this nurse's route (1-based).
    #[arg(long)]
    route_nurse: Option<usize>,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    omit_time: bool,
}

fn parse_from_str<T: std::str::FromStr<Err = impl ToString>>(s: &str) -> Result<T, String> {
    s.parse().map_err(|e: T::Err| e.to_string())
}

/// Failures that are answers rather than errors: no solution, or a
/// solution with violations.
struct Negative;

fn load(path: &Path) -> Result<Instance> {
    read_instance(path).with_context(|| format!("reading instance {}", path.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn print_status(status: SolveStatus, objective: Option<f64>) {
    println!("status {status}");
    if let Some(obj) = objective {
        println!("objective {obj:.3}");
    }
}

fn cmd_gen(a: GenArgs) -> Result<()> {
    let mut cfg = match a.class {
        Some(class) => GenConfig::class(class, a.seed),
        None => GenConfig::new(
            a.patients.expect("required by clap"),
            a.nurses.expect("required by clap"),
            a.services.expect("required by clap"),
            a.seed,
        ),
    };
    if let Some(x) = a.demand_density {
        cfg.demand_density = x;
    }
    if let Some(x) = a.qualification_density {
        cfg.qualification_density = x;
    }
    if let Some(x) = a.window_width {
        cfg.window_width = x;
    }
    if let Some(x) = a.horizon {
        cfg.horizon = x;
    }
    if let Some(x) = a.area_side {
        cfg.area_side = x;
    }
    if a.no_lab_requirements {
        cfg.start_req.fill(0);
        cfg.end_req.fill(0);
    }
    let inst = generate(&cfg)?;
    write_instance(&inst, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    println!(
        "{}: {} patients, {} nurses, {} services, {} tasks",
        inst.name,
        inst.num_patients,
        inst.num_nurses,
        inst.num_services,
        inst.num_tasks()
    );
    Ok(())
}

fn cmd_solve(a: SolveArgs) -> Result<Result<(), Negative>> {
    let inst = load(&a.instance)?;
    let settings = a.solver.settings()?;
    let result = run_solver(&inst, a.mode, &settings)?;
    print_status(result.status, result.solution.as_ref().map(|s| s.objective));
    eprintln!("solved in {:.2}s, {} nodes", result.wall_time, result.nodes_explored);
    if let Some(path) = &a.summary {
        write_text(path, &summary_csv(&inst, &result, a.omit_time)?)?;
    }
    let Some(sol) = &result.solution else {
        return Ok(Err(Negative));
    };
    for r in &sol.routes {
        println!("Nurse{}  {}", r.nurse + 1, render_route(r));
    }
    if let Some(path) = &a.out {
        SolutionFile::new(&inst, a.mode, settings.solver, result.status, sol)
            .write(path)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(Ok(()))
}

fn cmd_validate(a: ValidateArgs) -> Result<Result<(), Negative>> {
    let inst = load(&a.instance)?;
    let file = SolutionFile::read(&a.solution).with_context(|| format!("reading {}", a.solution.display()))?;
    let mode = a.mode.unwrap_or(file.mode);
    let sol = file.solution();
    let report = if a.strict_all_nurses {
        validate_strict(&inst, &sol, mode)
    } else {
        validate(&inst, &sol, mode)
    };
    print!("{report}");
    if report.ok {
        Ok(Ok(()))
    } else {
        let tags: Vec<&str> = report.tags().iter().map(|t| t.as_str()).collect();
        println!("tags {}", tags.join(" "));
        Ok(Err(Negative))
    }
}

fn cmd_export(a: ExportArgs) -> Result<()> {
    let inst = load(&a.instance)?;
    let (model, _) = build_milp_with(
        &inst,
        a.mode,
        MilpOptions {
            strict_all_nurses: a.strict_all_nurses,
        },
    )?;
    export_lp(&model, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    println!("{}", model.stats());
    Ok(())
}

fn cmd_extract(a: ExtractArgs) -> Result<Result<(), Negative>> {
    let inst = load(&a.instance)?;
    let (_, vars) = build_milp_with(
        &inst,
        a.mode,
        MilpOptions {
            strict_all_nurses: a.strict_all_nurses,
        },
    )?;
    let values = read_solution_file(&a.values).with_context(|| format!("reading {}", a.values.display()))?;
    let sol = extract_solution(&inst, &vars, &values)?;
    let report = validate(&inst, &sol, a.mode);
    print_status(SolveStatus::Feasible, Some(sol.objective));
    for r in &sol.routes {
        println!("Nurse{}  {}", r.nurse + 1, render_route(r));
    }
    SolutionFile::new(&inst, a.mode, SolverKind::Exact, SolveStatus::Feasible, &sol)
        .write(&a.out)
        .with_context(|| format!("writing {}", a.out.display()))?;
    if report.ok {
        Ok(Ok(()))
    } else {
        print!("{report}");
        Ok(Err(Negative))
    }
}

fn cmd_compare(a: CompareArgs) -> Result<Result<(), Negative>> {
    let inst = load(&a.instance)?;
    let cmp = compare(&inst, &a.solver.settings()?)?;
    print!("{}", cmp.render(a.omit_time));
    if let Some(path) = &a.out {
        write_text(path, &cmp.to_csv(a.omit_time)?)?;
    }
    if cmp.classic.solution.is_none() || cmp.flexible.solution.is_none() {
        return Ok(Err(Negative));
    }
    Ok(Ok(()))
}

fn cmd_sweep(a: SweepArgs) -> Result<Result<(), Negative>> {
    let inst = load(&a.instance)?;
    if a.service == 0 || a.service > inst.num_services {
        bail!("--service must be between 1 and {}", inst.num_services);
    }
    if let Some(k) = a.route_nurse {
        if k == 0 || k > inst.num_nurses {
            bail!("--route-nurse must be between 1 and {}", inst.num_nurses);
        }
    }
    let spec = SweepSpec {
        target_service: a.service - 1,
        variants: a.variants,
        settings: a.solver.settings()?,
        clear_other_flags: a.clear_other_flags,
        route_nurse: a.route_nurse.map(|k| k - 1),
    };
    let rows = sweep(&inst, &spec)?;
    let table = sweep_csv(&inst, &spec, &rows, a.omit_time)?;
    print!("{table}");
    if let Some(path) = &a.out {
        write_text(path, &table)?;
    }
    if rows.iter().any(|r| r.solution.is_none()) {
        return Ok(Err(Negative));
    }
    Ok(Ok(()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Gen(a) => cmd_gen(a).map(Ok),
        Command::Solve(a) => cmd_solve(a),
        Command::Validate(a) => cmd_validate(a),
        Command::ExportLp(a) => cmd_export(a).map(Ok),
        Command::Extract(a) => cmd_extract(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Sweep(a) => cmd_sweep(a),
    };
    match outcome {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(Negative)) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
