use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use uavplan_core::allocation::Method;
use uavplan_core::bench::{
    run_bench_with, sim_config, time_cost_functions, write_timing_csv, BenchPlan, Emergencies,
};
use uavplan_core::metrics::collect_metrics;
use uavplan_core::mission::{random_scenario, Scenario, TypeMix};
use uavplan_core::sa::{anneal, smooth_with_dubins, SaParams};
use uavplan_core::sim::run;

const EXIT_MISSION_FAILED: u8 = 3;
const EXIT_BAD_INPUT: u8 = 4;

#[derive(Parser)]
#[command(name = "uavplan", version, about = "Multi-UAV task allocation with Dubins-path costs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan one mission from a scenario file.
    Plan(PlanArgs),
    /// Compare methods over seeded random scenarios.
    Bench(BenchArgs),
    /// Time the Euclidean, CS and CSC cost functions.
    TimeCosts(TimeArgs),
    /// Write a random scenario file.
    Gen(GenArgs),
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, default_value = "PRBDDG")]
    method: Method,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.1)]
    dt: f64,
    #[arg(long, default_value = "none")]
    emergencies: Emergencies,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated method names.
    #[arg(long, value_delimiter = ',', default_value = "SA,GBA,HBA,AA,RBDDG,RBDDH,PRBDDG,PRBDDH")]
    method: Vec<Method>,
    #[arg(long, default_value_t = 20)]
    trials: u64,
    /// First seed; trials use consecutive seeds.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 4)]
    k: usize,
    #[arg(long, default_value_t = 25)]
    n: usize,
    #[arg(long, default_value_t = 0.1)]
    dt: f64,
    #[arg(long, default_value = "none")]
    emergencies: Emergencies,
    #[arg(long, default_value = "bench_out")]
    out: PathBuf,
}

#[derive(Args)]
struct TimeArgs {
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "timing_out")]
    out: PathBuf,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 4)]
    k: usize,
    #[arg(long, default_value_t = 25)]
    n: usize,
    #[arg(long, default_value_t = 2500.0)]
    area_side: f64,
    /// Share of point tasks that carry an entry heading.
    #[arg(long, default_value_t = 0.0)]
    constrained_fraction: f64,
    #[arg(long)]
    out: PathBuf,
}

/// Failure with a dedicated exit status.
struct Exit(u8, anyhow::Error);

fn bad_input(e: impl Into<anyhow::Error>) -> Exit {
    Exit(EXIT_BAD_INPUT, e.into())
}

fn other(e: impl Into<anyhow::Error>) -> Exit {
    Exit(1, e.into())
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn load_scenario(path: &Path) -> Result<Scenario, Exit> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(bad_input)?;
    Scenario::from_json(&text)
        .with_context(|| format!("invalid scenario {}", path.display()))
        .map_err(bad_input)
}

fn plan(args: &PlanArgs) -> Result<(), Exit> {
    if !(args.dt > 0.0) {
        return Err(bad_input(anyhow::anyhow!("--dt must be positive, got {}", args.dt)));
    }
    let scenario = load_scenario(&args.scenario)?;
    fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))
        .map_err(other)?;

    let Some(cfg) = sim_config(args.method, args.dt, args.seed) else {
        return plan_sa(&scenario, args).map_err(other);
    };
    let timeline = args.emergencies.timeline(args.seed, &scenario, &TypeMix::default());
    let result = run(&scenario, &cfg, &timeline).map_err(bad_input)?;
    let metrics = collect_metrics(&result, None);
    let write = || -> Result<()> {
        result.write_trace_csv(create(&args.out, "trace.csv")?)?;
        result.write_events_csv(create(&args.out, "events.csv")?)?;
        fs::write(args.out.join("metrics.json"), metrics.to_json())?;
        fs::write(args.out.join("timing.json"), metrics.timing_json())?;
        Ok(())
    };
    write().map_err(other)?;
    println!(
        "{}: total {:.1} m, completion {:.1} s, {} epochs",
        args.method, metrics.total_distance_m, metrics.completion_time_s, metrics.planning_epochs
    );
    match metrics.failure {
        None => Ok(()),
        Some(why) => Err(Exit(EXIT_MISSION_FAILED, anyhow::anyhow!("mission failed: {why}"))),
    }
}

fn plan_sa(scenario: &Scenario, args: &PlanArgs) -> Result<()> {
    let params = SaParams::with_seed(args.seed);
    let start = Instant::now();
    let annealed = anneal(scenario, &params)?;
    let tours = smooth_with_dubins(&annealed.tours, scenario)?;
    let solve_time_s = start.elapsed().as_secs_f64();
    fs::write(args.out.join("tours.json"), serde_json::to_string_pretty(&tours)?)?;
    annealed.write_trace_csv(create(&args.out, "sa_trace.csv")?)?;
    let metrics = serde_json::json!({
        "method": "SA",
        "total_euclidean_m": tours.total_euclidean,
        "total_distance_m": tours.total_dubins,
        "tour_distances_m": tours.tour_dubins,
        "tours": tours.tours,
        "proposals": annealed.proposals,
        "accepted": annealed.accepted,
    });
    fs::write(args.out.join("metrics.json"), serde_json::to_string_pretty(&metrics)?)?;
    let timing = serde_json::json!({ "solve_time_s": solve_time_s });
    fs::write(args.out.join("timing.json"), serde_json::to_string_pretty(&timing)?)?;
    println!("SA: total {:.1} m in {solve_time_s:.3} s", tours.total_dubins.unwrap_or(f64::NAN));
    Ok(())
}

fn bench(args: &BenchArgs) -> Result<(), Exit> {
    let mut plan = BenchPlan::new(args.method.clone(), (args.seed..args.seed + args.trials).collect());
    plan.k = args.k;
    plan.n = args.n;
    plan.dt = args.dt;
    plan.emergencies = args.emergencies;
    plan.validate().map_err(bad_input)?;
    let runs_dir = args.out.join("runs");
    fs::create_dir_all(&runs_dir)
        .with_context(|| format!("creating {}", runs_dir.display()))
        .map_err(other)?;
    let report = run_bench_with(&plan, &mut |method, seed, _, metrics| {
        fs::write(runs_dir.join(format!("{method}_{seed}_metrics.json")), metrics.to_json())?;
        Ok(())
    })
    .map_err(other)?;
    let write = || -> Result<()> {
        report.write_summary_csv(create(&args.out, "summary.csv")?)?;
        report.write_runs_csv(create(&args.out, "runs.csv")?)?;
        Ok(())
    };
    write().map_err(other)?;
    report.write_summary_csv(std::io::stdout()).map_err(other)?;
    Ok(())
}

fn time_costs(args: &TimeArgs) -> Result<(), Exit> {
    let rows = time_cost_functions(args.samples, args.seed).map_err(bad_input)?;
    let write = || -> Result<()> {
        fs::create_dir_all(&args.out)?;
        write_timing_csv(&rows, create(&args.out, "timing.csv")?)?;
        Ok(())
    };
    write().map_err(other)?;
    write_timing_csv(&rows, std::io::stdout()).map_err(other)?;
    Ok(())
}

fn gen(args: &GenArgs) -> Result<(), Exit> {
    let mix = TypeMix::points(args.constrained_fraction);
    let scenario = random_scenario(args.seed, args.k, args.n, args.area_side, &mix).map_err(bad_input)?;
    fs::write(&args.out, scenario.to_json())
        .with_context(|| format!("writing {}", args.out.display()))
        .map_err(other)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Plan(a) => plan(a),
        Command::Bench(a) => bench(a),
        Command::TimeCosts(a) => time_costs(a),
        Command::Gen(a) => gen(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Exit(code, e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}
