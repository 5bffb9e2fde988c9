//! Uniform entry point over every team selection algorithm.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heuristics::{
    best_pairs, best_team, max_weights, min_effect, minimum_error, random_rounding, remove_least_weights,
    HeuristicConfig,
};
use crate::model::{build_error_matrix, build_gram, PredictionProfile, Team};
use crate::qp::solve_simplex_qp;
use crate::tabu::{tabu_search, TabuParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    RandomRounding,
    MaxWeights,
    MinEffect,
    BestPairs,
    RemoveLw,
    MinError,
    BestTeam,
    Tabu,
}

impl Algorithm {
    pub const ALL: [Algorithm; 8] = [
        Self::RandomRounding,
        Self::MaxWeights,
        Self::MinEffect,
        Self::BestPairs,
        Self::RemoveLw,
        Self::MinError,
        Self::BestTeam,
        Self::Tabu,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::RandomRounding => "random-rounding",
            Self::MaxWeights => "max-weights",
            Self::MinEffect => "min-effect",
            Self::BestPairs => "best-pairs",
            Self::RemoveLw => "remove-lw",
            Self::MinError => "min-error",
            Self::BestTeam => "best-team",
            Self::Tabu => "tabu",
        }
    }

    /// Whether the algorithm consumes its seed.
    pub fn is_randomized(self) -> bool {
        matches!(self, Self::RandomRounding | Self::Tabu)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown algorithm {s:?}")))
    }
}

/// Parameters shared by all algorithms.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveSettings {
    pub tabu: TabuParams,
    pub heuristics: HeuristicConfig,
}

impl SolveSettings {
    /// Copy with both random consumers reseeded.
    pub fn with_seed(&self, seed: u64) -> Self {
        let mut s = self.clone();
        s.tabu.seed = seed;
        s.heuristics.seed = seed;
        s
    }
}

/// Runs `algorithm` for team size `m`. Best pairs with `m = 1` is routed
/// to minimum error, since a single member cannot be paired.
pub fn solve(profile: &PredictionProfile, m: usize, algorithm: Algorithm, settings: &SolveSettings) -> Result<Team> {
    let relaxed = || solve_simplex_qp(&build_gram(&build_error_matrix(profile)), &settings.heuristics.solver);
    match algorithm {
        Algorithm::RandomRounding => Ok(random_rounding(profile, &relaxed()?, m, &settings.heuristics)?.team),
        Algorithm::MaxWeights => max_weights(profile, &relaxed()?, m),
        Algorithm::MinEffect => min_effect(profile, m, &settings.heuristics),
        Algorithm::BestPairs if m == 1 => minimum_error(profile, m),
        Algorithm::BestPairs => best_pairs(profile, m),
        Algorithm::RemoveLw => remove_least_weights(profile, m, &settings.heuristics.solver),
        Algorithm::MinError => minimum_error(profile, m),
        Algorithm::BestTeam => best_team(profile, m, settings.heuristics.enumeration_cap),
        Algorithm::Tabu => tabu_search(profile, m, &settings.tabu),
    }
}

/// Best team over all sizes `1..=n`, with ties going to the smaller size.
pub fn solve_all_sizes(profile: &PredictionProfile, algorithm: Algorithm, settings: &SolveSettings) -> Result<Team> {
    let mut best: Option<Team> = None;
    for m in 1..=profile.n_experts() {
        let team = solve(profile, m, algorithm, settings)?;
        if best.as_ref().map_or(true, |b| team.sse < b.sse) {
            best = Some(team);
        }
    }
    Ok(best.expect("profiles have at least one expert"))
}
