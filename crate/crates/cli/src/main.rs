//! `torchlight`: generate caves, place torches, check and draw the result.

mod render;
mod solution;
mod stats;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use torchlight_core::{
    build_admm_step_qubo, build_lse_constraints, build_slack_qubo, coverage_matrix, derive_seed, greedy_cover,
    light_levels, parse_heightmap, run_admm, to_setcover, AdmmConfig, AdmmOutcome, Heightmap, LightParams,
    LinearConstraintSystem, PerlinParams, SolverConfig, SolverKind,
};

use crate::solution::{coordinates, selection, Solution};
use crate::stats::{ExperimentReport, RunSummary};

#[derive(Parser)]
#[command(name = "torchlight", version, about = "Minimum torch placement on heightmaps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a Perlin-noise cave heightmap.
    Generate(GenerateArgs),
    /// Place torches with ADMM or the greedy baseline.
    Solve(SolveArgs),
    /// Recompute light levels of a solution; exits 0 iff every tile is lit.
    Eval(EvalArgs),
    /// Draw a map, optionally with a solution, as a binary PPM.
    Render(RenderArgs),
    /// Report on the log-sum-exp form of the light constraints.
    Lse(LseArgs),
    /// Export the QUBO for a map in "i j value" text form.
    Qubo(QuboArgs),
}

#[derive(clap::Args)]
struct GenerateArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    width: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    height: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fraction of tiles that stay floor.
    #[arg(long, default_value_t = PerlinParams::DEFAULT_WALL_THRESHOLD)]
    wall_threshold: f64,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
    levels: u32,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    octaves: u32,
    /// Keep the lowest-noise tiles wherever they lie instead of growing one
    /// connected cave.
    #[arg(long)]
    scattered: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SolverArg {
    Sa,
    Tabu,
    Tabusa,
    Exhaustive,
    Greedy,
}

impl SolverArg {
    fn name(self) -> &'static str {
        match self {
            SolverArg::Sa => "sa",
            SolverArg::Tabu => "tabu",
            SolverArg::Tabusa => "tabusa",
            SolverArg::Exhaustive => "exhaustive",
            SolverArg::Greedy => "greedy",
        }
    }

    fn kind(self) -> Option<SolverKind> {
        match self {
            SolverArg::Sa => Some(SolverKind::SimulatedAnnealing),
            SolverArg::Tabu => Some(SolverKind::Tabu),
            SolverArg::Tabusa => Some(SolverKind::TabuSa),
            SolverArg::Exhaustive => Some(SolverKind::Exhaustive),
            SolverArg::Greedy => None,
        }
    }
}

#[derive(clap::Args)]
struct SolveArgs {
    #[arg(long)]
    map: PathBuf,
    #[arg(long, value_enum, default_value_t = SolverArg::Tabusa)]
    solver: SolverArg,
    /// Number of ADMM iterations.
    #[arg(long, default_value_t = 30)]
    budget: usize,
    #[arg(long, default_value_t = 0.01)]
    mu0: f64,
    #[arg(long, default_value_t = 1.1)]
    rho: f64,
    /// Independent runs; run r > 0 uses a seed derived from (seed, r).
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    repeats: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Stop once three consecutive iterates are feasible with equal torch counts.
    #[arg(long)]
    early_exit: bool,
    /// Start every x-update from scratch instead of the previous iterate.
    #[arg(long)]
    cold_start: bool,
    /// Writes PREFIX.json and PREFIX.trace.csv; with repeats also
    /// PREFIX.report.json, PREFIX.stats.csv and one trace per run.
    #[arg(long)]
    out_prefix: PathBuf,
}

#[derive(clap::Args)]
struct EvalArgs {
    #[arg(long)]
    map: PathBuf,
    #[arg(long)]
    solution: PathBuf,
}

#[derive(clap::Args)]
struct RenderArgs {
    #[arg(long)]
    map: PathBuf,
    #[arg(long)]
    solution: Option<PathBuf>,
    /// Pixels per tile edge.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..=64))]
    scale: u32,
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct LseArgs {
    #[arg(long)]
    map: PathBuf,
    #[arg(long, default_value_t = 10.0)]
    alpha: f64,
    /// Also test this layout against the constraints.
    #[arg(long)]
    solution: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum QuboForm {
    /// First x-update of ADMM (z = 0, lambda = 0, mu = mu0).
    Admm,
    /// Penalty form with binary slack variables.
    Slack,
}

#[derive(clap::Args)]
struct QuboArgs {
    #[arg(long)]
    map: PathBuf,
    #[arg(long, value_enum, default_value_t = QuboForm::Admm)]
    form: QuboForm,
    #[arg(long, default_value_t = 0.01)]
    mu0: f64,
    /// Penalty weight of the slack form; defaults to n + 1.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

fn read_map(path: &Path) -> Result<Heightmap> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_heightmap(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn cmd_generate(args: GenerateArgs) -> Result<ExitCode> {
    let params = PerlinParams {
        wall_threshold: args.wall_threshold,
        elevation_levels: args.levels,
        octaves: args.octaves,
        connected: !args.scattered,
        ..PerlinParams::new(args.width as usize, args.height as usize, args.seed)
    };
    let map = params.generate()?;
    write(&args.out, map.to_string() + "\n")?;
    Ok(ExitCode::SUCCESS)
}

struct Run {
    seed: u64,
    outcome: Option<AdmmOutcome>,
    answer: Vec<bool>,
}

fn cmd_solve(args: SolveArgs) -> Result<ExitCode> {
    let map = read_map(&args.map)?;
    let params = LightParams::default();
    let d = coverage_matrix(&map, params);
    let system = LinearConstraintSystem::new(d.clone());
    let seeds: Vec<u64> =
        (0..args.repeats).map(|r| if r == 0 { args.seed } else { derive_seed(args.seed, r) }).collect();

    let runs: Vec<Run> = match args.solver.kind() {
        None => {
            let mut x = vec![false; d.n()];
            for i in greedy_cover(&to_setcover(&d)) {
                x[i] = true;
            }
            seeds.iter().map(|&seed| Run { seed, outcome: None, answer: x.clone() }).collect()
        }
        Some(kind) => {
            let base = AdmmConfig {
                mu0: args.mu0,
                rho: args.rho,
                budget: args.budget,
                solver: SolverConfig::new(kind, args.seed),
                early_exit: args.early_exit,
                warm_start: !args.cold_start,
                ..AdmmConfig::default()
            };
            base.validate()?;
            seeds
                .par_iter()
                .map(|&seed| {
                    let cfg = AdmmConfig { solver: base.solver.with_seed(seed), ..base };
                    let outcome = run_admm(&system, &cfg)?;
                    Ok(Run { seed, answer: outcome.answer().to_vec(), outcome: Some(outcome) })
                })
                .collect::<torchlight_core::Result<_>>()?
        }
    };

    let index = map.tile_index();
    let summaries: Vec<RunSummary> = runs
        .iter()
        .map(|run| RunSummary {
            seed: run.seed,
            torches: coordinates(&index, &run.answer),
            violations: d.violations(&run.answer),
            iterations: run.outcome.as_ref().map_or(0, |o| o.trace.len()),
        })
        .collect();

    // Fewest violations, then fewest torches, then earliest run.
    let best = (0..runs.len())
        .min_by_key(|&r| (summaries[r].violations, summaries[r].torches.len(), r))
        .expect("at least one run");
    let run = &runs[best];
    let summary = &summaries[best];
    let last_iterate = run.outcome.as_ref().filter(|o| o.state.x != run.answer).map(|o| coordinates(&index, &o.state.x));
    let solution = Solution {
        map: args.map.display().to_string(),
        torches: summary.torches.clone(),
        violations: summary.violations,
        iterations: summary.iterations,
        solver: args.solver.name().to_string(),
        seed: run.seed,
        torch_count: summary.torches.len(),
        last_iterate,
    };
    solution.write(&with_suffix(&args.out_prefix, ".json"))?;

    let traces: Vec<_> = runs.iter().filter_map(|r| r.outcome.as_ref().map(|o| o.trace.clone())).collect();
    if let Some(o) = &run.outcome {
        write(&with_suffix(&args.out_prefix, ".trace.csv"), o.trace.to_csv())?;
    }
    if args.repeats > 1 {
        for (r, trace) in traces.iter().enumerate() {
            write(&with_suffix(&args.out_prefix, &format!(".run{r}.trace.csv")), trace.to_csv())?;
        }
        let report = ExperimentReport::new(&traces, summaries);
        write(&with_suffix(&args.out_prefix, ".report.json"), serde_json::to_string_pretty(&report)? + "\n")?;
        write(&with_suffix(&args.out_prefix, ".stats.csv"), report.to_csv()?)?;
    }

    println!("torches {} violations {} iterations {}", solution.torch_count, solution.violations, solution.iterations);
    Ok(if solution.violations == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn cmd_eval(args: EvalArgs) -> Result<ExitCode> {
    let map = read_map(&args.map)?;
    let sol = Solution::read(&args.solution)?;
    let index = map.tile_index();
    let x = selection(&index, &sol.torches)?;
    let layout = light_levels(&map, &x, LightParams::default())?;

    let mut grid = String::new();
    for row in 0..map.height() {
        let cells: Vec<String> = (0..map.width())
            .map(|col| match index.index_of(row, col) {
                None => " #".to_string(),
                Some(i) if x[i] => " T".to_string(),
                Some(i) => format!("{:2}", layout.light[i]),
            })
            .collect();
        grid.push_str(&cells.join(" "));
        grid.push('\n');
    }
    print!("{grid}");
    println!("torches {}", layout.torch_count());
    println!("violations {}", layout.violations);
    Ok(if layout.is_feasible() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn cmd_render(args: RenderArgs) -> Result<ExitCode> {
    let map = read_map(&args.map)?;
    let params = LightParams::default();
    let layout = match &args.solution {
        Some(path) => {
            let sol = Solution::read(path)?;
            let x = selection(&map.tile_index(), &sol.torches)?;
            Some(light_levels(&map, &x, params)?)
        }
        None => None,
    };
    let img = render::render(&map, layout.as_ref(), params, args.scale);
    write(&args.out, render::encode_ppm(&img)?)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_lse(args: LseArgs) -> Result<ExitCode> {
    let map = read_map(&args.map)?;
    let params = LightParams::default();
    let constraints = build_lse_constraints(&map, params, args.alpha)?;
    let n = constraints.len();
    let ranges: Vec<f64> = constraints.iter().map(|c| c.dynamic_range()).collect();
    let worst = ranges.iter().copied().fold(0.0, f64::max);
    let all_on = vec![true; n];
    println!("tiles {n} alpha {}", args.alpha);
    println!("max coefficient dynamic range {worst:.3e}");
    println!("satisfied by all torches {}/{n}", constraints.iter().filter(|c| c.is_satisfied(&all_on)).count());
    if let Some(path) = &args.solution {
        let sol = Solution::read(path)?;
        let x = selection(&map.tile_index(), &sol.torches)?;
        let lse_ok = constraints.iter().filter(|c| c.is_satisfied(&x)).count();
        let lit = n - coverage_matrix(&map, params).violations(&x);
        println!("solution satisfies {lse_ok}/{n} (coverage says {lit}/{n} lit)");
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_qubo(args: QuboArgs) -> Result<ExitCode> {
    let map = read_map(&args.map)?;
    let system = LinearConstraintSystem::new(coverage_matrix(&map, LightParams::default()));
    let n = system.n();
    let q = match args.form {
        QuboForm::Admm => build_admm_step_qubo(&system, &vec![0; n], &vec![0.0; n], args.mu0)?,
        QuboForm::Slack => build_slack_qubo(&system, args.beta.unwrap_or((n + 1) as f64))?.qubo,
    };
    write(&args.out, q.to_text())?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Render(a) => cmd_render(a),
        Command::Lse(a) => cmd_lse(a),
        Command::Qubo(a) => cmd_qubo(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
