//! Swap-neighborhood tabu search for size-`m` teams.
//!
//! The search starts from the `m` experts with the largest relaxed weights
//! and uses the relaxed optimum as a global lower bound: reaching it proves
//! optimality and stops the run.
//!
//! Team SSE is evaluated through the cross-product matrix `C = Q/2`:
//! `f(S) = (1/m²) Σ_{i,j∈S} C_ij`. With `a_i = Σ_{j∈S} C_ij` cached per
//! iteration, swapping member `u` for outsider `v` changes the unnormalized
//! sum by `C_uu + C_vv − 2 C_uv + 2 (a_v − a_u)`, so each of the
//! `m (n − m)` neighbors costs O(1).

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{build_error_matrix, build_gram, GramMatrix, PredictionProfile, Team};
use crate::qp::{lower_bound, max_weights_init, solve_simplex_qp, SolverConfig};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TabuParams {
    /// Successive non-improving iterations before giving up.
    pub max_iter: usize,
    /// Probability of jumping to a random neighbor when no improving swap
    /// exists.
    pub escape_prob: f64,
    pub tenure_out_base: usize,
    /// Upper end of the random tenure add-on; `None` means `⌈m/2⌉`.
    pub tenure_out_spread: Option<usize>,
    pub tenure_in_factor: f64,
    /// Relative tolerance of the lower-bound test.
    pub lb_tolerance: f64,
    pub seed: u64,
    pub solver: SolverConfig,
}

impl Default for TabuParams {
    fn default() -> Self {
        Self {
            max_iter: 1000,
            escape_prob: 0.1,
            tenure_out_base: 7,
            tenure_out_spread: None,
            tenure_in_factor: 0.6,
            lb_tolerance: 1e-9,
            seed: 0,
            solver: SolverConfig::default(),
        }
    }
}

impl TabuParams {
    fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.escape_prob) {
            return Err(Error::Config("escape_prob must lie in [0, 1]".into()));
        }
        if !(self.tenure_in_factor >= 0.0) || !(self.lb_tolerance >= 0.0) {
            return Err(Error::Config("tenure_in_factor and lb_tolerance must be nonnegative".into()));
        }
        Ok(())
    }
}

/// A candidate move: `out` leaves the team, `into` joins it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Swap {
    pub out: usize,
    pub into: usize,
    /// `f(after) − f(before)`.
    pub delta: f64,
}

/// Cached sums are rebuilt from scratch after this many swaps so that
/// rounding drift stays bounded.
const REFRESH_EVERY: usize = 64;

/// The current team with cached row sums for O(1) swap evaluation.
#[derive(Debug, Clone)]
pub struct TeamState<'a> {
    gram: &'a GramMatrix,
    /// `C = Q/2`, row-major.
    cross: Vec<f64>,
    in_team: Vec<bool>,
    members: Vec<usize>,
    outsiders: Vec<usize>,
    /// `a_i = Σ_{j∈S} C_ij`.
    row_sums: Vec<f64>,
    /// `Σ_{i,j∈S} C_ij`.
    pair_sum: f64,
    swaps: usize,
}

impl<'a> TeamState<'a> {
    pub fn new(gram: &'a GramMatrix, members: &[usize]) -> Self {
        let n = gram.dim();
        let mut in_team = vec![false; n];
        for &i in members {
            in_team[i] = true;
        }
        let cross = (0..n).flat_map(|i| gram.row(i).iter().map(|q| 0.5 * q)).collect();
        let mut state = Self {
            gram,
            cross,
            in_team,
            members: Vec::new(),
            outsiders: Vec::new(),
            row_sums: vec![0.0; n],
            pair_sum: 0.0,
            swaps: 0,
        };
        state.refresh();
        state
    }

    #[inline]
    fn cross(&self, i: usize, j: usize) -> f64 {
        self.cross[i * self.gram.dim() + j]
    }

    fn refresh(&mut self) {
        let n = self.gram.dim();
        self.members = (0..n).filter(|&i| self.in_team[i]).collect();
        self.outsiders = (0..n).filter(|&i| !self.in_team[i]).collect();
        for i in 0..n {
            self.row_sums[i] = self.members.iter().map(|&j| self.cross(i, j)).sum();
        }
        self.pair_sum = self.members.iter().map(|&i| self.row_sums[i]).sum();
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn outsiders(&self) -> &[usize] {
        &self.outsiders
    }

    fn scale(&self) -> f64 {
        let m = self.members.len() as f64;
        1.0 / (m * m)
    }

    /// Team SSE computed from the Gram matrix.
    pub fn sse(&self) -> f64 {
        self.pair_sum * self.scale()
    }

    /// SSE change of swapping `out` for `into`.
    pub fn delta(&self, out: usize, into: usize) -> f64 {
        let raw = self.cross(out, out) + self.cross(into, into) - 2.0 * self.cross(out, into)
            + 2.0 * (self.row_sums[into] - self.row_sums[out]);
        raw * self.scale()
    }

    /// Lowest-delta swap among those accepted by `admissible(out, into, new_sse)`,
    /// ties broken by lowest `out`, then lowest `into`.
    pub fn best_swap(&self, mut admissible: impl FnMut(usize, usize, f64) -> bool) -> Option<Swap> {
        let current = self.sse();
        let mut best: Option<Swap> = None;
        for &out in &self.members {
            for &into in &self.outsiders {
                let delta = self.delta(out, into);
                if !admissible(out, into, current + delta) {
                    continue;
                }
                if best.map_or(true, |b| delta < b.delta) {
                    best = Some(Swap { out, into, delta });
                }
            }
        }
        best
    }

    pub fn apply(&mut self, out: usize, into: usize) {
        debug_assert!(self.in_team[out] && !self.in_team[into]);
        let delta_pairs = self.cross(out, out) + self.cross(into, into) - 2.0 * self.cross(out, into)
            + 2.0 * (self.row_sums[into] - self.row_sums[out]);
        self.in_team[out] = false;
        self.in_team[into] = true;
        self.swaps += 1;
        if self.swaps % REFRESH_EVERY == 0 {
            self.refresh();
            return;
        }
        let pos = self.members.binary_search(&out).expect("member");
        self.members.remove(pos);
        let pos = self.members.binary_search(&into).unwrap_err();
        self.members.insert(pos, into);
        let pos = self.outsiders.binary_search(&into).expect("outsider");
        self.outsiders.remove(pos);
        let pos = self.outsiders.binary_search(&out).unwrap_err();
        self.outsiders.insert(pos, out);
        for i in 0..self.gram.dim() {
            self.row_sums[i] += self.cross(i, into) - self.cross(i, out);
        }
        self.pair_sum += delta_pairs;
    }
}

/// Mutable state of one tabu search run.
#[derive(Debug, Clone)]
pub struct TabuState<'a> {
    pub current: TeamState<'a>,
    pub best_members: Vec<usize>,
    pub best_sse: f64,
    /// Iteration number before which the expert may not enter.
    pub tabu_until_in: Vec<usize>,
    /// Iteration number before which the member may not leave.
    pub tabu_until_out: Vec<usize>,
    pub iteration: usize,
    pub stagnation: usize,
}

impl<'a> TabuState<'a> {
    pub fn new(gram: &'a GramMatrix, members: &[usize]) -> Self {
        let current = TeamState::new(gram, members);
        let n = gram.dim();
        Self {
            best_members: current.members().to_vec(),
            best_sse: current.sse(),
            current,
            tabu_until_in: vec![0; n],
            tabu_until_out: vec![0; n],
            iteration: 0,
            stagnation: 0,
        }
    }

    /// Whether the swap is tabu at iteration `at`.
    pub fn is_tabu(&self, out: usize, into: usize, at: usize) -> bool {
        at < self.tabu_until_out[out] || at < self.tabu_until_in[into]
    }

    /// Best admissible swap for the next iteration. A tabu swap is
    /// admissible when it beats the best SSE seen so far (aspiration).
    pub fn best_swap(&self) -> Option<Swap> {
        let at = self.iteration + 1;
        let best = self.best_sse;
        self.current
            .best_swap(|out, into, new_sse| !self.is_tabu(out, into, at) || new_sse < best)
    }
}

/// One row of the per-iteration trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub iter: usize,
    pub current_sse: f64,
    pub best_sse: f64,
}

pub fn trace_to_csv(trace: &[TraceRow]) -> String {
    let mut out = String::from("iter,current_sse,best_sse\n");
    for row in trace {
        out.push_str(&format!("{},{},{}\n", row.iter, row.current_sse, row.best_sse));
    }
    out
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// `m = n`: the only feasible team.
    Trivial,
    /// The current team reached the relaxed lower bound.
    LowerBound,
    /// `max_iter` successive iterations without a new best.
    Stagnation,
}

#[derive(Debug, Clone)]
pub struct TabuOutcome {
    pub team: Team,
    pub initial: Team,
    pub lower_bound: Option<f64>,
    pub iterations: usize,
    pub termination: Termination,
    /// Empty unless tracing was requested.
    pub trace: Vec<TraceRow>,
}

/// Runs tabu search and returns the best team found.
pub fn tabu_search(profile: &PredictionProfile, m: usize, params: &TabuParams) -> Result<Team> {
    run_tabu(profile, m, params, false).map(|o| o.team)
}

/// Runs tabu search, optionally recording a per-iteration trace.
pub fn run_tabu(
    profile: &PredictionProfile,
    m: usize,
    params: &TabuParams,
    record_trace: bool,
) -> Result<TabuOutcome> {
    params.validate()?;
    let n = profile.n_experts();
    if m < 1 || m > n {
        return Err(Error::TeamSize { m, min: 1, n });
    }
    if m == n {
        let all: Vec<usize> = (0..n).collect();
        let team = Team::evaluate(profile, &all)?;
        return Ok(TabuOutcome {
            initial: team.clone(),
            team,
            lower_bound: None,
            iterations: 0,
            termination: Termination::Trivial,
            trace: Vec::new(),
        });
    }

    let gram = build_gram(&build_error_matrix(profile));
    let relaxed = solve_simplex_qp(&gram, &params.solver)?;
    let bound = lower_bound(&relaxed).ok();
    let init = max_weights_init(&relaxed.w, m)?;
    let mut rng = seed::stream(params.seed, "tabu", m as u64);
    let spread = params.tenure_out_spread.unwrap_or(m.div_ceil(2));

    let mut state = TabuState::new(&gram, &init);
    let mut trace = Vec::new();
    let mut record = |state: &TabuState| {
        if record_trace {
            trace.push(TraceRow {
                iter: state.iteration,
                current_sse: state.current.sse(),
                best_sse: state.best_sse,
            });
        }
    };
    record(&state);

    // The relaxed value is only accurate to the solver gap, so a team may
    // land slightly below it. That still counts as reaching the bound.
    let hits_bound = |f: f64| bound.is_some_and(|lb| f - lb <= params.lb_tolerance * (1.0 + lb));
    let mut termination = Termination::Stagnation;
    if hits_bound(state.best_sse) {
        termination = Termination::LowerBound;
    }

    while termination == Termination::Stagnation && state.stagnation < params.max_iter {
        let candidate = state
            .best_swap()
            .or_else(|| state.current.best_swap(|_, _, _| true))
            .expect("m < n leaves at least one swap");
        let chosen = if candidate.delta < 0.0 || !escape(&mut rng, params.escape_prob) {
            (candidate.out, candidate.into)
        } else {
            random_neighbor(&mut rng, &state.current)
        };
        state.iteration += 1;
        mark_tabu(&mut state, chosen, params, spread, &mut rng);
        state.current.apply(chosen.0, chosen.1);

        let f = state.current.sse();
        let reached_bound = hits_bound(f);
        if f < state.best_sse {
            state.best_sse = f;
            state.best_members = state.current.members().to_vec();
            state.stagnation = 0;
        } else {
            state.stagnation += 1;
        }
        record(&state);
        if reached_bound {
            termination = Termination::LowerBound;
        }
    }

    Ok(TabuOutcome {
        team: Team::evaluate(profile, &state.best_members)?,
        initial: Team::evaluate(profile, &init)?,
        lower_bound: bound,
        iterations: state.iteration,
        termination,
        trace,
    })
}

fn escape(rng: &mut ChaCha8Rng, p: f64) -> bool {
    p > 0.0 && rng.gen_bool(p)
}

fn random_neighbor(rng: &mut ChaCha8Rng, team: &TeamState) -> (usize, usize) {
    let out = team.members()[rng.gen_range(0..team.members().len())];
    let into = team.outsiders()[rng.gen_range(0..team.outsiders().len())];
    (out, into)
}

/// The expert leaving is barred from re-entry for `base + U[0, spread]`
/// iterations; the one entering is barred from leaving for
/// `⌈factor · that tenure⌉` iterations.
fn mark_tabu(
    state: &mut TabuState,
    (out, into): (usize, usize),
    params: &TabuParams,
    spread: usize,
    rng: &mut ChaCha8Rng,
) {
    let tenure_out = params.tenure_out_base + rng.gen_range(0..=spread);
    let tenure_in = (params.tenure_in_factor * tenure_out as f64).ceil() as usize;
    state.tabu_until_in[out] = state.iteration + 1 + tenure_out;
    state.tabu_until_out[into] = state.iteration + 1 + tenure_in;
}
