//! `sdd`: solve, check, generate, compare and simulate delivery instances.
//!
//! Exit codes: 0 success, 1 validation failure, 2 malformed input or usage,
//! 3 size guard exceeded.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use sdd_core::compare::{render_csv, render_table};
use sdd_core::generator::families;
use sdd_core::plan::{validate_plan_with, Chaining};
use sdd_core::{
    compare, compute_metrics, generate, oracle_solve_with_trips, simulate, solve_f1, solve_f3, solve_f4,
    solve_slots, GeneratorProfile, Instance, ModelKind, OracleGuard, Plan, Policy, SddError, SimConfig,
    SolveReport, SolverConfig, ValidInstance,
};

#[derive(Parser)]
#[command(name = "sdd", version, about = "Exact solvers and dispatch simulation for same-day delivery")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one model exactly.
    Solve(SolveArgs),
    /// Solve one model by exhaustive enumeration (small instances only).
    Oracle(SolveArgs),
    /// Check that an instance file is well formed.
    Validate {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Check a plan against its model's constraints.
    CheckPlan {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        plan: PathBuf,
        /// Allow idle time between trips (plans produced by the simulator).
        #[arg(long)]
        relaxed: bool,
        /// Write the violations as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a seeded instance.
    Gen(GenArgs),
    /// Solve every model and tabulate the metrics.
    Compare {
        #[arg(long)]
        instance: PathBuf,
        #[command(flatten)]
        solver: SolverFlags,
        /// Write the rows as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run dispatch policies against sampled release dates.
    Simulate(SimArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    F1,
    F2,
    F2lex,
    F3,
    F4,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> ModelKind {
        match m {
            ModelArg::F1 => ModelKind::F1,
            ModelArg::F2 => ModelKind::F2,
            ModelArg::F2lex => ModelKind::F2Lex,
            ModelArg::F3 => ModelKind::F3,
            ModelArg::F4 => ModelKind::F4,
        }
    }
}

#[derive(Args)]
struct SolverFlags {
    #[arg(long)]
    max_trips: Option<usize>,
    /// Penalty for unserved orders in the station models.
    #[arg(long)]
    big_m: Option<f64>,
    /// Wall-clock limit in seconds; the best plan found so far is returned.
    #[arg(long)]
    time_limit: Option<f64>,
}

impl SolverFlags {
    fn config(&self) -> Result<SolverConfig> {
        let time_limit = match self.time_limit {
            Some(s) if !(s.is_finite() && s > 0.0) => bail!(SddError::Config(format!("time limit must be positive, got {s}"))),
            Some(s) => Some(Duration::from_secs_f64(s)),
            None => None,
        };
        Ok(SolverConfig {
            max_trips: self.max_trips,
            time_limit,
            node_limit: None,
        })
    }

    fn load(&self, path: &Path) -> Result<ValidInstance> {
        load_with(path, |inst| {
            if let Some(m) = self.big_m {
                inst.big_m = Some(m);
            }
        })
    }
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, value_enum)]
    model: ModelArg,
    #[arg(long)]
    instance: PathBuf,
    /// Write the report as JSON here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Uniform,
    /// Two far, early, high-paying orders and six cheap nearby late ones.
    FarPair,
    /// Five customers around two stations; `--radius` picks 30 or 40.
    TwoStation,
    Collinear,
    /// Every customer at the depot.
    Depot,
    /// Near and far clusters with uncertain releases.
    TwoClusters,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum, default_value = "uniform")]
    family: Family,
    #[arg(long, default_value_t = 8)]
    orders: usize,
    #[arg(long, default_value_t = 3)]
    stations: usize,
    #[arg(long, default_value_t = 100.0)]
    side: f64,
    /// Releases are drawn on [0, alpha * horizon].
    #[arg(long, default_value_t = 0.6)]
    alpha: f64,
    #[arg(long, default_value_t = 250.0)]
    horizon: f64,
    #[arg(long, default_value_t = 30.0)]
    radius: f64,
    /// Comma-separated deadlines; empty for none.
    #[arg(long, default_value = "60,120,240")]
    deadlines: String,
    #[arg(long, default_value_t = 5.0)]
    wtp_min: f64,
    #[arg(long, default_value_t = 40.0)]
    wtp_max: f64,
    #[arg(long, default_value_t = 3)]
    capacity: u32,
    #[arg(long, default_value_t = 250.0)]
    big_m: f64,
    #[arg(long)]
    max_trips: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum PolicyArg {
    Myopic,
    Threshold,
    Expected,
    Consensus,
}

#[derive(Args)]
struct SimArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Policies to run (repeat or comma-separate); all four by default.
    #[arg(long, value_enum, value_delimiter = ',')]
    policy: Vec<PolicyArg>,
    #[arg(long, default_value_t = 2)]
    theta: usize,
    #[arg(long, default_value_t = 16)]
    samples: usize,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    /// Spacing of decision epochs.
    #[arg(long, default_value_t = 1.0)]
    grid: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the full report as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write per-replication rows as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

/// A check that ran and failed (exit code 1).
#[derive(Debug)]
struct Failed(String);

impl std::fmt::Display for Failed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Failed {}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<Failed>().is_some() {
        return 1;
    }
    match e.downcast_ref::<SddError>() {
        Some(SddError::TooLarge { .. }) => 3,
        Some(SddError::InvalidPlan(_) | SddError::Protocol(_)) => 1,
        _ => 2,
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Solve(args) => solve(&args, false),
        Command::Oracle(args) => solve(&args, true),
        Command::Validate { instance } => {
            let inst = read_instance(&instance)?;
            match inst.validate() {
                Ok(v) => {
                    println!(
                        "ok: {} orders, {} stations, {} options, horizon {}",
                        v.orders.len(),
                        v.stations.len(),
                        v.num_options(),
                        v.horizon
                    );
                    Ok(())
                }
                Err(e) => Err(Failed(e.to_string()).into()),
            }
        }
        Command::CheckPlan {
            instance,
            plan,
            relaxed,
            out,
        } => {
            let inst = load(&instance)?;
            let plan = Plan::load(&plan, &inst).with_context(|| format!("reading {}", plan.display()))?;
            let chaining = if relaxed { Chaining::Relaxed } else { Chaining::Model };
            let violations = validate_plan_with(&inst, &plan, chaining).err().unwrap_or_default();
            if let Some(path) = &out {
                write(path, &to_json(&violations))?;
            }
            if violations.is_empty() {
                let m = compute_metrics(&inst, &plan)?;
                println!("valid {} plan: {} served, {} trips, distance {:.6}", plan.model_kind, m.served, m.trips, m.distance);
                Ok(())
            } else {
                for v in &violations {
                    println!("{v}");
                }
                Err(Failed(format!("{} violated constraint(s)", violations.len())).into())
            }
        }
        Command::Gen(args) => gen(&args),
        Command::Compare {
            instance,
            solver,
            out,
            csv,
        } => {
            let inst = solver.load(&instance)?;
            let rows = compare(&inst, &solver.config()?);
            print!("{}", render_table(&rows));
            if let Some(path) = &out {
                write(path, &to_json(&rows))?;
            }
            if let Some(path) = &csv {
                write(path, &render_csv(&rows)?)?;
            }
            Ok(())
        }
        Command::Simulate(args) => sim(&args),
    }
}

fn solve(args: &SolveArgs, exhaustive: bool) -> Result<()> {
    let inst = args.solver.load(&args.instance)?;
    let kind = ModelKind::from(args.model);
    let cfg = args.solver.config()?;
    let (report, json) = if exhaustive {
        let guard = OracleGuard::from_env()?;
        let trips = args.solver.max_trips.unwrap_or_else(|| inst.max_trips());
        if trips == 0 {
            bail!(SddError::Config("max_trips must be at least 1".into()));
        }
        let rep = oracle_solve_with_trips(&inst, kind, &guard, trips)?;
        let json = to_json(&rep);
        (rep, json)
    } else {
        match kind {
            ModelKind::F1 => with_json(solve_f1(&inst, &cfg)?),
            ModelKind::F3 => with_json(solve_f3(&inst, &cfg)?),
            ModelKind::F4 => with_json(solve_f4(&inst, &cfg)?),
            ModelKind::F2 | ModelKind::F2Lex => {
                let (rev, lex) = solve_slots(&inst, &cfg)?;
                let sol = if kind == ModelKind::F2 { rev } else { lex };
                let json = to_json(&sol);
                (sol.report, json)
            }
        }
    };
    match &args.out {
        Some(path) => {
            write(path, &json)?;
            println!("{}", summary(&inst, &report));
        }
        None => println!("{}", json),
    }
    Ok(())
}

fn with_json(rep: SolveReport) -> (SolveReport, String) {
    let json = to_json(&rep);
    (rep, json)
}

fn summary(inst: &ValidInstance, rep: &SolveReport) -> String {
    format!(
        "{}: objective {:.6}, served {}/{}, {} trip(s), {}, {:.3}s",
        rep.model_kind,
        rep.objective,
        rep.served,
        inst.orders.len(),
        rep.plan.trips.len(),
        if rep.optimal { "optimal" } else { "not proven optimal" },
        rep.runtime
    )
}

fn gen(args: &GenArgs) -> Result<()> {
    let inst = match args.family {
        Family::Uniform => {
            let deadlines = parse_list(&args.deadlines)?;
            let profile = GeneratorProfile {
                orders: args.orders,
                stations: args.stations,
                side: args.side,
                alpha: args.alpha,
                horizon: args.horizon,
                radius: Some(args.radius),
                deadlines: (!deadlines.is_empty()).then_some(deadlines),
                wtp_range: (args.wtp_min, args.wtp_max),
                capacity: args.capacity,
                big_m: Some(args.big_m),
                max_trips: args.max_trips,
                seed: args.seed,
            };
            generate(&profile)?
        }
        Family::FarPair => families::expensive_far_pair(args.seed),
        Family::TwoStation => families::two_station_radius(args.seed, args.radius),
        Family::Collinear => families::collinear_stations(),
        Family::Depot => families::all_at_depot(args.seed, args.orders),
        Family::TwoClusters => families::two_clusters(args.seed),
    };
    // Refuse to write something the other commands would reject.
    inst.clone().validate()?;
    match &args.out {
        Some(path) => {
            write(path, &inst.to_json())?;
            println!("wrote {} orders, {} stations to {}", inst.orders.len(), inst.stations.len(), path.display());
        }
        None => println!("{}", inst.to_json()),
    }
    Ok(())
}

fn parse_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| SddError::Config(format!("bad number {s:?} in list {text:?}")).into())
        })
        .collect()
}

fn sim(args: &SimArgs) -> Result<()> {
    let inst = load(&args.instance)?;
    let chosen = if args.policy.is_empty() {
        vec![PolicyArg::Myopic, PolicyArg::Threshold, PolicyArg::Expected, PolicyArg::Consensus]
    } else {
        args.policy.clone()
    };
    let policies: Vec<Policy> = chosen
        .iter()
        .map(|p| match p {
            PolicyArg::Myopic => Policy::Myopic,
            PolicyArg::Threshold => Policy::Threshold { theta: args.theta },
            PolicyArg::Expected => Policy::Expected,
            PolicyArg::Consensus => Policy::Consensus { samples: args.samples },
        })
        .collect();
    if !(args.grid.is_finite() && args.grid > 0.0) {
        bail!(SddError::Config(format!("grid spacing must be positive, got {}", args.grid)));
    }
    let cfg = SimConfig {
        grid_step: args.grid,
        replications: args.reps,
        master_seed: args.seed,
        ..Default::default()
    };
    let report = simulate(&inst, &policies, &cfg)?;
    for (name, mean) in report.policies.iter().zip(&report.mean_served) {
        println!("{name:<14} mean served {mean:.6}");
    }
    println!("{:<14} mean served {:.6}", "bound", report.mean_pi_bound);
    for d in &report.differences {
        println!("{} - {}: {:+.6} (se {:.6})", d.second, d.first, d.mean_diff, d.std_err);
    }
    if let Some(path) = &args.out {
        write(path, &report.to_json())?;
    }
    if let Some(path) = &args.csv {
        write(path, &report.to_csv()?)?;
    }
    Ok(())
}

fn read_instance(path: &Path) -> Result<Instance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Instance::from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

fn load(path: &Path) -> Result<ValidInstance> {
    load_with(path, |_| {})
}

fn load_with(path: &Path, tweak: impl FnOnce(&mut Instance)) -> Result<ValidInstance> {
    let mut inst = read_instance(path)?;
    tweak(&mut inst);
    Ok(inst.validate()?)
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("output serializes")
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
