//! Seeded batch experiments: algorithm comparison (SSE gap to the best team
//! and runtime), team-size sweep and profile-size sweep.
//!
//! Trials run in parallel but rows are collected in trial order, so every
//! CSV is byte-identical for a fixed configuration (runtime columns aside;
//! set `measure_runtime = false` to zero them). Each trial's data seed is
//! derived from `(master_seed, scenario, trial)` and each algorithm's seed
//! from `(trial seed, algorithm, m)`.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithm::{solve, Algorithm, SolveSettings};
use crate::error::{Error, Result};
use crate::heuristics::best_team;
use crate::model::{sse_team, PredictionProfile};
use crate::scenarios::{generate, split_profile, ScenarioKind, ScenarioSpec};
use crate::seed::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub scenarios: Vec<ScenarioKind>,
    pub trials: usize,
    pub n_experts: usize,
    pub team_sizes: Vec<usize>,
    pub k_train: usize,
    pub algorithms: Vec<Algorithm>,
    pub master_seed: u64,
    pub outcome_sigma: f64,
    /// Runtime table: scenario and team size.
    pub runtime_scenario: ScenarioKind,
    pub runtime_team_size: usize,
    /// Team-size sweep: pool sizes (first `p` experts of one population).
    pub pool_sizes: Vec<usize>,
    pub sweep_scenario: ScenarioKind,
    /// Profile-size sweep: training lengths, held-out length and team size.
    pub profile_ks: Vec<usize>,
    pub test_k: usize,
    /// Total rounds generated per trial; `None` means `max(profile_ks) + test_k`.
    pub profile_rounds: Option<usize>,
    /// Team size for the profile-size sweep; `None` means best over all sizes.
    pub profile_team_size: Option<usize>,
    pub runtime_repetitions: usize,
    pub measure_runtime: bool,
    /// Fan trials out to the rayon pool (the runtime table always runs serially).
    pub parallel: bool,
    pub settings: SolveSettings,
    pub output_dir: Option<PathBuf>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            scenarios: ScenarioKind::ALL.to_vec(),
            trials: 100,
            n_experts: 15,
            team_sizes: (2..=10).collect(),
            k_train: 30,
            algorithms: Algorithm::ALL.to_vec(),
            master_seed: 0,
            outcome_sigma: 1.0,
            runtime_scenario: ScenarioKind::Normal2,
            runtime_team_size: 8,
            pool_sizes: (12..=15).collect(),
            sweep_scenario: ScenarioKind::Normal1,
            profile_ks: (1..=20).map(|i| 5 * i).collect(),
            test_k: 3,
            profile_rounds: None,
            profile_team_size: Some(5),
            runtime_repetitions: 3,
            measure_runtime: true,
            parallel: true,
            settings: SolveSettings::default(),
            output_dir: None,
        }
    }
}

impl BenchConfig {
    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.n_experts == 0 || self.k_train == 0 {
            return Err(Error::Config("n_experts and k_train must be positive".into()));
        }
        if let Some(&m) = self.team_sizes.iter().find(|&&m| m == 0 || m > self.n_experts) {
            return Err(Error::Config(format!("team size {m} outside [1, {}]", self.n_experts)));
        }
        if self.runtime_repetitions == 0 {
            return Err(Error::Config("runtime_repetitions must be at least 1".into()));
        }
        Ok(())
    }

    fn profile(&self, kind: ScenarioKind, n: usize, k: usize, tag: &str, trial: usize) -> Result<PredictionProfile> {
        let seed = derive_seed(self.master_seed, &format!("{tag}:{kind}"), trial as u64);
        let spec = ScenarioSpec { outcome_sigma: self.outcome_sigma, ..ScenarioSpec::new(kind, n, k, seed) };
        Ok(generate(&spec)?.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub scenario: ScenarioKind,
    pub algorithm: Algorithm,
    pub m: usize,
    pub trial: usize,
    pub sse: f64,
    pub gap_to_best: f64,
    pub runtime_ms: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub scenario: ScenarioKind,
    pub algorithm: Algorithm,
    /// `None` aggregates over all team sizes.
    pub m: Option<usize>,
    pub count: usize,
    pub mean_gap: f64,
    pub stderr_gap: f64,
    pub mean_sse: f64,
    pub mean_best_sse: f64,
    pub mean_runtime_ms: f64,
    pub median_runtime_ms: f64,
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub summary: Vec<SummaryRow>,
    pub errors: usize,
}

impl BenchReport {
    pub fn summary_for(&self, scenario: ScenarioKind, algorithm: Algorithm) -> Option<&SummaryRow> {
        self.summary.iter().find(|s| s.scenario == scenario && s.algorithm == algorithm && s.m.is_none())
    }

    pub fn rows_csv(&self) -> String {
        let mut out = String::from("scenario,algorithm,m,trial,sse,gap_to_best,runtime_ms,error\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.scenario,
                r.algorithm,
                r.m,
                r.trial,
                r.sse,
                r.gap_to_best,
                r.runtime_ms,
                r.error.as_deref().map(csv_escape).unwrap_or_default()
            ));
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from(
            "scenario,algorithm,m,count,mean_gap,stderr_gap,mean_sse,mean_best_sse,mean_runtime_ms,median_runtime_ms\n",
        );
        for s in &self.summary {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                s.scenario,
                s.algorithm,
                s.m.map_or("all".to_string(), |m| m.to_string()),
                s.count,
                s.mean_gap,
                s.stderr_gap,
                s.mean_sse,
                s.mean_best_sse,
                s.mean_runtime_ms,
                s.median_runtime_ms
            ));
        }
        out
    }
}

fn csv_escape(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

/// Mean and standard error of the mean.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

/// Runs `f` `reps` times and reports the first result with the median
/// wall time in milliseconds (zero when timing is off).
fn timed<T>(reps: usize, measure: bool, mut f: impl FnMut() -> Result<T>) -> (Result<T>, f64) {
    if !measure {
        return (f(), 0.0);
    }
    let mut times = Vec::with_capacity(reps);
    let mut first = None;
    for _ in 0..reps {
        let start = Instant::now();
        let r = f();
        times.push(start.elapsed().as_secs_f64() * 1e3);
        if first.is_none() {
            first = Some(r);
        }
    }
    (first.expect("reps ≥ 1"), median(&times))
}

fn run_trial(cfg: &BenchConfig, scenario: ScenarioKind, sizes: &[usize], trial: usize) -> Vec<BenchRow> {
    let profile = match cfg.profile(scenario, cfg.n_experts, cfg.k_train, "bench", trial) {
        Ok(p) => p,
        Err(e) => {
            return sizes
                .iter()
                .flat_map(|&m| {
                    let e = e.to_string();
                    cfg.algorithms.iter().map(move |&algorithm| BenchRow {
                        scenario,
                        algorithm,
                        m,
                        trial,
                        sse: f64::NAN,
                        gap_to_best: f64::NAN,
                        runtime_ms: 0.0,
                        error: Some(e.clone()),
                    })
                })
                .collect()
        }
    };
    let trial_seed = derive_seed(cfg.master_seed, scenario.name(), trial as u64);
    let mut rows = Vec::new();
    for &m in sizes {
        let best = best_team(&profile, m, cfg.settings.heuristics.enumeration_cap).map(|t| t.sse);
        for &algorithm in &cfg.algorithms {
            let settings = cfg.settings.with_seed(derive_seed(trial_seed, algorithm.name(), m as u64));
            let (result, runtime_ms) =
                timed(cfg.runtime_repetitions, cfg.measure_runtime, || solve(&profile, m, algorithm, &settings));
            let row = match (&result, &best) {
                (Ok(team), Ok(best)) => BenchRow {
                    scenario,
                    algorithm,
                    m,
                    trial,
                    sse: team.sse,
                    gap_to_best: team.sse - best,
                    runtime_ms,
                    error: None,
                },
                (Ok(team), Err(e)) => BenchRow {
                    scenario,
                    algorithm,
                    m,
                    trial,
                    sse: team.sse,
                    gap_to_best: f64::NAN,
                    runtime_ms,
                    error: Some(format!("best team: {e}")),
                },
                (Err(e), _) => BenchRow {
                    scenario,
                    algorithm,
                    m,
                    trial,
                    sse: f64::NAN,
                    gap_to_best: f64::NAN,
                    runtime_ms,
                    error: Some(e.to_string()),
                },
            };
            rows.push(row);
        }
    }
    rows
}

fn run_grid(cfg: &BenchConfig, scenarios: &[ScenarioKind], sizes: &[usize], parallel: bool) -> Vec<BenchRow> {
    let jobs: Vec<(ScenarioKind, usize)> =
        scenarios.iter().flat_map(|&s| (0..cfg.trials).map(move |t| (s, t))).collect();
    let per_job: Vec<Vec<BenchRow>> = if parallel {
        jobs.par_iter().map(|&(s, t)| run_trial(cfg, s, sizes, t)).collect()
    } else {
        jobs.iter().map(|&(s, t)| run_trial(cfg, s, sizes, t)).collect()
    };
    per_job.into_iter().flatten().collect()
}

/// Summary rows per (scenario, algorithm): one over all sizes, then one per size.
pub fn summarize(rows: &[BenchRow], scenarios: &[ScenarioKind], algorithms: &[Algorithm], sizes: &[usize]) -> Vec<SummaryRow> {
    let mut out = Vec::new();
    for &scenario in scenarios {
        for &algorithm in algorithms {
            let groups = std::iter::once(None).chain(sizes.iter().map(|&m| Some(m)));
            for m in groups {
                let sel: Vec<&BenchRow> = rows
                    .iter()
                    .filter(|r| {
                        r.scenario == scenario
                            && r.algorithm == algorithm
                            && m.map_or(true, |m| r.m == m)
                            && r.error.is_none()
                    })
                    .collect();
                let gaps: Vec<f64> = sel.iter().map(|r| r.gap_to_best).collect();
                let sses: Vec<f64> = sel.iter().map(|r| r.sse).collect();
                let bests: Vec<f64> = sel.iter().map(|r| r.sse - r.gap_to_best).collect();
                let times: Vec<f64> = sel.iter().map(|r| r.runtime_ms).collect();
                let (mean_gap, stderr_gap) = mean_stderr(&gaps);
                out.push(SummaryRow {
                    scenario,
                    algorithm,
                    m,
                    count: sel.len(),
                    mean_gap,
                    stderr_gap,
                    mean_sse: mean_stderr(&sses).0,
                    mean_best_sse: mean_stderr(&bests).0,
                    mean_runtime_ms: mean_stderr(&times).0,
                    median_runtime_ms: median(&times),
                });
            }
        }
    }
    out
}

fn report(rows: Vec<BenchRow>, summary: Vec<SummaryRow>) -> BenchReport {
    let errors = rows.iter().filter(|r| r.error.is_some()).count();
    BenchReport { rows, summary, errors }
}

/// SSE gap of every algorithm to the exhaustive best team, per scenario,
/// trial and team size.
pub fn bench_table1(cfg: &BenchConfig) -> Result<BenchReport> {
    cfg.validate()?;
    let rows = run_grid(cfg, &cfg.scenarios, &cfg.team_sizes, cfg.parallel);
    let summary = summarize(&rows, &cfg.scenarios, &cfg.algorithms, &cfg.team_sizes);
    Ok(report(rows, summary))
}

/// Runtime comparison at a single scenario and team size, run serially.
pub fn bench_table2(cfg: &BenchConfig) -> Result<BenchReport> {
    cfg.validate()?;
    let m = cfg.runtime_team_size;
    if m == 0 || m > cfg.n_experts {
        return Err(Error::Config(format!("runtime_team_size {m} outside [1, {}]", cfg.n_experts)));
    }
    let scenarios = [cfg.runtime_scenario];
    let rows = run_grid(cfg, &scenarios, &[m], false);
    let summary = summarize(&rows, &scenarios, &cfg.algorithms, &[]);
    Ok(report(rows, summary))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizeSweepRow {
    pub pool: usize,
    pub m: usize,
    pub trial: usize,
    pub sse: f64,
}

#[derive(Debug, Clone)]
pub struct SizeSweep {
    pub rows: Vec<SizeSweepRow>,
    /// `(pool, m, mean, stderr)`.
    pub summary: Vec<(usize, usize, f64, f64)>,
    /// `(pool, fraction of trials whose best m is strictly interior)`.
    pub interior: Vec<(usize, f64)>,
}

impl SizeSweep {
    pub fn rows_csv(&self) -> String {
        let mut out = String::from("pool,m,trial,sse\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{}\n", r.pool, r.m, r.trial, r.sse));
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from("pool,m,mean_sse,stderr_sse\n");
        for (p, m, mean, se) in &self.summary {
            out.push_str(&format!("{p},{m},{mean},{se}\n"));
        }
        out
    }

    pub fn interior_csv(&self) -> String {
        let mut out = String::from("pool,interior_fraction\n");
        for (p, f) in &self.interior {
            out.push_str(&format!("{p},{f}\n"));
        }
        out
    }
}

/// Best-team SSE for every team size `1..=pool`, for each pool size.
pub fn sweep_team_size(cfg: &BenchConfig) -> Result<SizeSweep> {
    cfg.validate()?;
    let max_pool = *cfg.pool_sizes.iter().max().ok_or_else(|| Error::Config("no pool sizes".into()))?;
    if cfg.pool_sizes.contains(&0) {
        return Err(Error::Config("pool sizes must be positive".into()));
    }
    let kind = cfg.sweep_scenario;
    let trial_rows = |trial: usize| -> Result<Vec<SizeSweepRow>> {
        let full = cfg.profile(kind, max_pool, cfg.k_train, "size-sweep", trial)?;
        let mut rows = Vec::new();
        for &pool in &cfg.pool_sizes {
            let profile = full.select_experts(&(0..pool).collect::<Vec<_>>())?;
            for m in 1..=pool {
                let t = best_team(&profile, m, cfg.settings.heuristics.enumeration_cap)?;
                rows.push(SizeSweepRow { pool, m, trial, sse: t.sse });
            }
        }
        Ok(rows)
    };
    let per_trial: Vec<Result<Vec<SizeSweepRow>>> = if cfg.parallel {
        (0..cfg.trials).into_par_iter().map(trial_rows).collect()
    } else {
        (0..cfg.trials).map(trial_rows).collect()
    };
    let rows: Vec<SizeSweepRow> = per_trial.into_iter().collect::<Result<Vec<_>>>()?.into_iter().flatten().collect();

    let mut summary = Vec::new();
    let mut interior = Vec::new();
    for &pool in &cfg.pool_sizes {
        for m in 1..=pool {
            let v: Vec<f64> = rows.iter().filter(|r| r.pool == pool && r.m == m).map(|r| r.sse).collect();
            let (mean, se) = mean_stderr(&v);
            summary.push((pool, m, mean, se));
        }
        let hits = (0..cfg.trials)
            .filter(|&trial| {
                let curve: Vec<&SizeSweepRow> = rows.iter().filter(|r| r.pool == pool && r.trial == trial).collect();
                let best = curve.iter().min_by(|a, b| a.sse.total_cmp(&b.sse).then(a.m.cmp(&b.m))).expect("pool ≥ 1");
                best.m > 1 && best.m < pool
            })
            .count();
        interior.push((pool, hits as f64 / cfg.trials as f64));
    }
    Ok(SizeSweep { rows, summary, interior })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileSweepRow {
    pub k: usize,
    pub trial: usize,
    pub members: Vec<usize>,
    pub train_sse: f64,
    pub test_sse: f64,
}

#[derive(Debug, Clone)]
pub struct ProfileSweep {
    pub rows: Vec<ProfileSweepRow>,
    /// `(k, mean held-out SSE, stderr)`.
    pub summary: Vec<(usize, f64, f64)>,
}

impl ProfileSweep {
    pub fn rows_csv(&self) -> String {
        let mut out = String::from("k,trial,members,train_sse,test_sse\n");
        for r in &self.rows {
            let members: Vec<String> = r.members.iter().map(|m| m.to_string()).collect();
            out.push_str(&format!("{},{},{},{},{}\n", r.k, r.trial, members.join(";"), r.train_sse, r.test_sse));
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from("k,mean_test_sse,stderr_test_sse\n");
        for (k, mean, se) in &self.summary {
            out.push_str(&format!("{k},{mean},{se}\n"));
        }
        out
    }
}

/// Selects the best team on the first `k` rounds and scores it on the
/// next `test_k`, for every `k` in the sweep.
pub fn sweep_profile_size(cfg: &BenchConfig) -> Result<ProfileSweep> {
    cfg.validate()?;
    let max_k = *cfg.profile_ks.iter().max().ok_or_else(|| Error::Config("no profile sizes".into()))?;
    if cfg.test_k == 0 || cfg.profile_ks.contains(&0) {
        return Err(Error::Config("profile sizes and test_k must be positive".into()));
    }
    let rounds = cfg.profile_rounds.unwrap_or(max_k + cfg.test_k);
    if max_k + cfg.test_k > rounds {
        return Err(Error::InsufficientRounds { needed: max_k + cfg.test_k, available: rounds });
    }
    if let Some(m) = cfg.profile_team_size {
        if m == 0 || m > cfg.n_experts {
            return Err(Error::Config(format!("profile_team_size {m} outside [1, {}]", cfg.n_experts)));
        }
    }
    let kind = cfg.sweep_scenario;
    let trial_rows = |trial: usize| -> Result<Vec<ProfileSweepRow>> {
        let full = cfg.profile(kind, cfg.n_experts, rounds, "profile-sweep", trial)?;
        let mut rows = Vec::new();
        for &k in &cfg.profile_ks {
            let window = full.select_rounds(0, k + cfg.test_k)?;
            let (train, test) = split_profile(&window, k, cfg.test_k)?;
            let team = match cfg.profile_team_size {
                Some(m) => best_team(&train, m, cfg.settings.heuristics.enumeration_cap)?,
                None => crate::algorithm::solve_all_sizes(&train, Algorithm::BestTeam, &cfg.settings)?,
            };
            let test_sse = sse_team(&test, &team.members)?;
            rows.push(ProfileSweepRow { k, trial, members: team.members, train_sse: team.sse, test_sse });
        }
        Ok(rows)
    };
    let per_trial: Vec<Result<Vec<ProfileSweepRow>>> = if cfg.parallel {
        (0..cfg.trials).into_par_iter().map(trial_rows).collect()
    } else {
        (0..cfg.trials).map(trial_rows).collect()
    };
    let rows: Vec<ProfileSweepRow> =
        per_trial.into_iter().collect::<Result<Vec<_>>>()?.into_iter().flatten().collect();
    let summary = cfg
        .profile_ks
        .iter()
        .map(|&k| {
            let v: Vec<f64> = rows.iter().filter(|r| r.k == k).map(|r| r.test_sse).collect();
            let (mean, se) = mean_stderr(&v);
            (k, mean, se)
        })
        .collect();
    Ok(ProfileSweep { rows, summary })
}

/// Writes `name → contents` pairs plus `config.echo.json` into `dir`.
pub fn write_outputs(dir: &Path, cfg: &BenchConfig, files: &[(&str, String)]) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (name, contents) in files {
        fs::write(dir.join(name), contents)?;
    }
    fs::write(dir.join("config.echo.json"), serde_json::to_string_pretty(cfg)? + "\n")?;
    Ok(())
}
