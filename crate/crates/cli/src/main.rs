use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use teamsel::bench::{bench_table1, bench_table2, sweep_profile_size, sweep_team_size, write_outputs, BenchConfig};
use teamsel::io::{load_profile, save_profile};
use teamsel::model::{build_error_matrix, build_gram, Team};
use teamsel::qp::solve_simplex_qp;
use teamsel::reduction::{independence_number, instance_from_graph, RegularGraph, ReductionSolver};
use teamsel::scenarios::{generate, ScenarioKind, ScenarioSpec};
use teamsel::tabu::{run_tabu, trace_to_csv};
use teamsel::{solve, Algorithm, SolveSettings};

#[derive(Parser)]
#[command(name = "teamsel", version, about = "Select forecasting teams that minimize averaged squared error")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic prediction profile.
    Gen {
        #[arg(long)]
        scenario: ScenarioKind,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        outcome_sigma: f64,
        /// Output path; `.json` selects JSON, anything else CSV.
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the optimal simplex weights of a profile.
    Weights {
        #[arg(long)]
        profile: PathBuf,
    },
    /// Select a team with one algorithm.
    Solve {
        #[arg(long)]
        profile: PathBuf,
        #[arg(long, default_value = "tabu")]
        algorithm: Algorithm,
        /// Team size, or `all` for every size.
        #[arg(long)]
        m: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long)]
        escape_prob: Option<f64>,
        /// Write the tabu trace as CSV (tabu only, single size).
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Build the reduced instance of a regular graph.
    Reduce {
        /// `cycle:N`, `complete:N`, `circulant:N:a,b`, `petersen`, or an edge-list file.
        #[arg(long)]
        graph: String,
        /// Save the reduced instance as a profile.
        #[arg(long)]
        emit: Option<PathBuf>,
        /// Compute the independence number through the reduction.
        #[arg(long)]
        alpha: bool,
    },
    /// Run a benchmark table.
    Bench {
        table: Table,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run a parameter sweep.
    Sweep {
        kind: SweepKind,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Table {
    Table1,
    Table2,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepKind {
    Size,
    Profile,
}

#[derive(clap::Args)]
struct RunArgs {
    /// JSON benchmark configuration; missing fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

impl RunArgs {
    fn load(&self) -> Result<(BenchConfig, PathBuf)> {
        let cfg: BenchConfig = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            None => BenchConfig::default(),
        };
        let dir = self
            .out_dir
            .clone()
            .or_else(|| cfg.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("results"));
        Ok((cfg, dir))
    }
}

fn members_field(team: &Team) -> String {
    team.members.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(";")
}

fn cmd_gen(scenario: ScenarioKind, n: usize, k: usize, seed: u64, outcome_sigma: f64, out: &Path) -> Result<()> {
    let spec = ScenarioSpec { outcome_sigma, ..ScenarioSpec::new(scenario, n, k, seed) };
    let (profile, population) = generate(&spec)?;
    save_profile(&profile, out)?;
    let mut meta = out.as_os_str().to_owned();
    meta.push(".meta.json");
    fs::write(&meta, serde_json::to_string_pretty(&population)? + "\n")?;
    Ok(())
}

fn cmd_weights(path: &Path) -> Result<()> {
    let profile = load_profile(path)?;
    let sol = solve_simplex_qp(&build_gram(&build_error_matrix(&profile)), &Default::default())?;
    println!("expert,weight");
    for (i, w) in sol.w.as_slice().iter().enumerate() {
        println!("{i},{w}");
    }
    println!("# value={} gap={} iters={}", sol.value, sol.gap, sol.iterations);
    if !sol.converged {
        eprintln!("warning: solver stopped before reaching its tolerance");
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_solve(
    path: &Path,
    algorithm: Algorithm,
    m: &str,
    seed: u64,
    max_iter: Option<usize>,
    escape_prob: Option<f64>,
    trace: Option<&Path>,
) -> Result<()> {
    let profile = load_profile(path)?;
    let mut settings = SolveSettings::default().with_seed(seed);
    if let Some(it) = max_iter {
        settings.tabu.max_iter = it;
    }
    if let Some(p) = escape_prob {
        settings.tabu.escape_prob = p;
    }
    let sizes: Vec<usize> = if m == "all" {
        (1..=profile.n_experts()).collect()
    } else {
        vec![m.parse().with_context(|| format!("invalid team size {m:?}"))?]
    };
    if trace.is_some() && (algorithm != Algorithm::Tabu || sizes.len() != 1) {
        bail!("--trace needs --algorithm tabu and a single team size");
    }
    println!("algorithm,m,members,sse,runtime_ms");
    for m in sizes {
        let start = Instant::now();
        let team = match trace {
            Some(trace_path) => {
                let out = run_tabu(&profile, m, &settings.tabu, true)?;
                fs::write(trace_path, trace_to_csv(&out.trace))?;
                out.team
            }
            None => solve(&profile, m, algorithm, &settings)?,
        };
        let ms = start.elapsed().as_secs_f64() * 1e3;
        println!("{algorithm},{m},{},{},{ms:.3}", members_field(&team), team.sse);
    }
    Ok(())
}

fn cmd_reduce(spec: &str, emit: Option<&Path>, alpha: bool) -> Result<()> {
    let graph = RegularGraph::from_spec(spec)?;
    println!("vertices={} degree={} edges={}", graph.n_vertices(), graph.degree(), graph.edges().len());
    if let Some(path) = emit {
        save_profile(&instance_from_graph(&graph)?.to_profile(), path)?;
    }
    if alpha {
        println!("alpha={}", independence_number(&graph, &ReductionSolver::default())?);
    }
    Ok(())
}

/// Returns whether any benchmark row recorded an error.
fn cmd_bench(table: Table, run: &RunArgs) -> Result<bool> {
    let (cfg, dir) = run.load()?;
    let report = match table {
        Table::Table1 => bench_table1(&cfg)?,
        Table::Table2 => bench_table2(&cfg)?,
    };
    write_outputs(&dir, &cfg, &[("rows.csv", report.rows_csv()), ("summary.csv", report.summary_csv())])?;
    if report.errors > 0 {
        eprintln!("{} rows failed; see the error column of rows.csv", report.errors);
    }
    Ok(report.errors > 0)
}

fn cmd_sweep(kind: SweepKind, run: &RunArgs) -> Result<()> {
    let (cfg, dir) = run.load()?;
    match kind {
        SweepKind::Size => {
            let s = sweep_team_size(&cfg)?;
            write_outputs(
                &dir,
                &cfg,
                &[("rows.csv", s.rows_csv()), ("summary.csv", s.summary_csv()), ("interior.csv", s.interior_csv())],
            )?;
        }
        SweepKind::Profile => {
            let s = sweep_profile_size(&cfg)?;
            write_outputs(&dir, &cfg, &[("rows.csv", s.rows_csv()), ("summary.csv", s.summary_csv())])?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Gen { scenario, n, k, seed, outcome_sigma, out } => cmd_gen(scenario, n, k, seed, outcome_sigma, &out)?,
        Command::Weights { profile } => cmd_weights(&profile)?,
        Command::Solve { profile, algorithm, m, seed, max_iter, escape_prob, trace } => {
            cmd_solve(&profile, algorithm, &m, seed, max_iter, escape_prob, trace.as_deref())?
        }
        Command::Reduce { graph, emit, alpha } => cmd_reduce(&graph, emit.as_deref(), alpha)?,
        Command::Bench { table, run } => {
            if cmd_bench(table, &run)? {
                return Ok(ExitCode::from(2));
            }
        }
        Command::Sweep { kind, run } => cmd_sweep(kind, &run)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
