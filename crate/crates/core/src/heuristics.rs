//! Baseline team selection heuristics and the exhaustive best-team oracle.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{build_error_matrix, build_gram, sse_sorted, ErrorMatrix, PredictionProfile, Team};
use crate::qp::{max_weights_init, solve_simplex_qp, RelaxedSolution, SolverConfig};
use crate::seed;

/// Which member min-effect drops each round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MinEffectRule {
    RemoveMinEffect,
    RemoveMaxEffect,
}

/// How an expert's effect on the weighted SSE is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectFormula {
    /// `2 w_i Σ_{j≠i} w_j C_ij − w_i² C_ii`.
    PaperLiteral,
    /// `g(w) − g(w with w_i = 0) = 2 w_i Σ_{j≠i} w_j C_ij + w_i² C_ii`.
    Marginal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HeuristicConfig {
    /// Random rounding threshold; `None` means `1/(2m)`.
    pub rounding_threshold: Option<f64>,
    pub rounding_prob: f64,
    pub mineffect_rule: MinEffectRule,
    pub effect_formula: EffectFormula,
    pub seed: u64,
    /// Largest `C(n, m)` the exhaustive oracle will enumerate.
    pub enumeration_cap: u128,
    pub solver: SolverConfig,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        Self {
            rounding_threshold: None,
            rounding_prob: 0.9,
            mineffect_rule: MinEffectRule::RemoveMinEffect,
            effect_formula: EffectFormula::PaperLiteral,
            seed: 0,
            enumeration_cap: 10_000_000,
            solver: SolverConfig::default(),
        }
    }
}

fn check_size(m: usize, min: usize, n: usize) -> Result<()> {
    if m < min || m > n {
        return Err(Error::TeamSize { m, min, n });
    }
    Ok(())
}

/// Result of random rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundingOutcome {
    pub team: Team,
    /// Selection stalled and the remainder was filled by largest weight.
    pub fallback: bool,
}

const STALL_PASSES: usize = 10_000;

/// Passes over experts in index order, adding each unselected expert with
/// probability `P` if its weight exceeds `T` and `1 − P` otherwise, until
/// `m` are selected.
pub fn random_rounding(
    profile: &PredictionProfile,
    sol: &RelaxedSolution,
    m: usize,
    cfg: &HeuristicConfig,
) -> Result<RoundingOutcome> {
    let n = profile.n_experts();
    check_size(m, 1, n)?;
    if sol.w.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: sol.w.len() });
    }
    if !(0.0..=1.0).contains(&cfg.rounding_prob) {
        return Err(Error::Config("rounding_prob must lie in [0, 1]".into()));
    }
    let threshold = cfg.rounding_threshold.unwrap_or(1.0 / (2.0 * m as f64));
    if !(threshold >= 0.0) {
        return Err(Error::Config("rounding threshold must be nonnegative".into()));
    }
    let w = sol.w.as_slice();
    let mut rng = seed::stream(cfg.seed, "random_rounding", m as u64);
    let mut selected = vec![false; n];
    let mut count = 0;
    let mut idle_passes = 0;
    'passes: while count < m {
        let before = count;
        for i in 0..n {
            if selected[i] {
                continue;
            }
            let p = if w[i] > threshold { cfg.rounding_prob } else { 1.0 - cfg.rounding_prob };
            if rng.gen_bool(p) {
                selected[i] = true;
                count += 1;
                if count == m {
                    break 'passes;
                }
            }
        }
        idle_passes = if count == before { idle_passes + 1 } else { 0 };
        if idle_passes >= STALL_PASSES {
            let mut rest: Vec<usize> = (0..n).filter(|&i| !selected[i]).collect();
            rest.sort_by(|&a, &b| w[b].total_cmp(&w[a]).then(a.cmp(&b)));
            for &i in rest.iter().take(m - count) {
                selected[i] = true;
            }
            let members: Vec<usize> = (0..n).filter(|&i| selected[i]).collect();
            return Ok(RoundingOutcome { team: Team::evaluate(profile, &members)?, fallback: true });
        }
    }
    let members: Vec<usize> = (0..n).filter(|&i| selected[i]).collect();
    Ok(RoundingOutcome { team: Team::evaluate(profile, &members)?, fallback: false })
}

/// The `m` experts with the largest relaxed weights.
pub fn max_weights(profile: &PredictionProfile, sol: &RelaxedSolution, m: usize) -> Result<Team> {
    Team::evaluate(profile, &max_weights_init(&sol.w, m)?)
}

/// Effect of expert `i` on the weighted SSE at weights `w`.
pub fn effect(errors: &ErrorMatrix, w: &[f64], i: usize, formula: EffectFormula) -> Result<f64> {
    let n = errors.n_experts();
    if w.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: w.len() });
    }
    if i >= n {
        return Err(Error::IndexOutOfRange { index: i, n });
    }
    let zi = errors.row(i);
    let cross = |j: usize| -> f64 { zi.iter().zip(errors.row(j)).map(|(a, b)| a * b).sum() };
    let others: f64 = (0..n).filter(|&j| j != i).map(|j| w[j] * cross(j)).sum();
    Ok(effect_from_parts(w[i], others, cross(i), formula))
}

fn effect_from_parts(wi: f64, weighted_cross: f64, self_cross: f64, formula: EffectFormula) -> f64 {
    let pair_term = 2.0 * wi * weighted_cross;
    let own_term = wi * wi * self_cross;
    match formula {
        EffectFormula::PaperLiteral => pair_term - own_term,
        EffectFormula::Marginal => pair_term + own_term,
    }
}

/// Repeatedly drops one expert by its effect at uniform weights over the
/// survivors until `m` remain.
pub fn min_effect(profile: &PredictionProfile, m: usize, cfg: &HeuristicConfig) -> Result<Team> {
    let n = profile.n_experts();
    check_size(m, 1, n)?;
    let gram = build_gram(&build_error_matrix(profile));
    let cross = |i: usize, j: usize| 0.5 * gram.get(i, j);
    let mut survivors: Vec<usize> = (0..n).collect();
    while survivors.len() > m {
        let w = 1.0 / survivors.len() as f64;
        let mut pick = 0;
        let mut pick_effect = f64::NAN;
        for (pos, &i) in survivors.iter().enumerate() {
            let others: f64 = survivors.iter().filter(|&&j| j != i).map(|&j| w * cross(i, j)).sum();
            let e = effect_from_parts(w, others, cross(i, i), cfg.effect_formula);
            let better = match cfg.mineffect_rule {
                MinEffectRule::RemoveMinEffect => e < pick_effect,
                MinEffectRule::RemoveMaxEffect => e > pick_effect,
            };
            if pos == 0 || better {
                pick = pos;
                pick_effect = e;
            }
        }
        survivors.remove(pick);
    }
    Team::evaluate(profile, &survivors)
}

/// `Σ_t |(y_it + y_jt)/2 − x_t|`.
pub fn pair_score(errors: &ErrorMatrix, i: usize, j: usize) -> f64 {
    errors.row(i).iter().zip(errors.row(j)).map(|(a, b)| ((a + b) / 2.0).abs()).sum()
}

/// Greedy disjoint pairs with the lowest absolute error of their average;
/// for odd `m` the last member is the remaining expert with the smallest
/// absolute error sum.
pub fn best_pairs(profile: &PredictionProfile, m: usize) -> Result<Team> {
    let n = profile.n_experts();
    check_size(m, 2, n)?;
    let errors = build_error_matrix(profile);
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            pairs.push((pair_score(&errors, i, j), i, j));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    let mut used = vec![false; n];
    let mut members = Vec::with_capacity(m);
    for &(_, i, j) in &pairs {
        if members.len() + 2 > m {
            break;
        }
        if !used[i] && !used[j] {
            used[i] = true;
            used[j] = true;
            members.extend([i, j]);
        }
    }
    if m % 2 == 1 {
        let last = (0..n)
            .filter(|&i| !used[i])
            .min_by(|&a, &b| errors.abs_error_sum(a).total_cmp(&errors.abs_error_sum(b)).then(a.cmp(&b)))
            .expect("m ≤ n leaves an unused expert");
        members.push(last);
    }
    Team::evaluate(profile, &members)
}

/// Re-solves the relaxation on the survivors and drops the lowest-weight
/// expert until `m` remain.
pub fn remove_least_weights(profile: &PredictionProfile, m: usize, solver: &SolverConfig) -> Result<Team> {
    let n = profile.n_experts();
    check_size(m, 1, n)?;
    let gram = build_gram(&build_error_matrix(profile));
    let mut survivors: Vec<usize> = (0..n).collect();
    while survivors.len() > m {
        let sol = solve_simplex_qp(&gram.principal_submatrix(&survivors), solver)?;
        if !sol.converged {
            return Err(Error::Unconverged { gap: sol.gap, iterations: sol.iterations });
        }
        let w = sol.w.as_slice();
        let mut drop = 0;
        for pos in 1..w.len() {
            if w[pos] < w[drop] {
                drop = pos;
            }
        }
        survivors.remove(drop);
    }
    Team::evaluate(profile, &survivors)
}

/// The `m` experts with the smallest absolute error sums.
pub fn minimum_error(profile: &PredictionProfile, m: usize) -> Result<Team> {
    let n = profile.n_experts();
    check_size(m, 1, n)?;
    let errors = build_error_matrix(profile);
    let sums: Vec<f64> = (0..n).map(|i| errors.abs_error_sum(i)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| sums[a].total_cmp(&sums[b]).then(a.cmp(&b)));
    Team::evaluate(profile, &order[..m])
}

/// `C(n, k)` without overflow for any realistic input.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Advances `combo` to the next `k`-combination of `0..n` in lexicographic
/// order; returns `false` after the last one.
pub fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let k = combo.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if combo[i] < n - k + i {
            combo[i] += 1;
            for j in i + 1..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Exact minimizer of team SSE over all size-`m` subsets, ties to the
/// lexicographically smallest set.
pub fn best_team(profile: &PredictionProfile, m: usize, cap: u128) -> Result<Team> {
    let n = profile.n_experts();
    check_size(m, 1, n)?;
    let combinations = binomial(n, m);
    if combinations > cap {
        return Err(Error::EnumerationCap { combinations, cap });
    }
    let mut combo: Vec<usize> = (0..m).collect();
    let mut best = combo.clone();
    let mut best_sse = sse_sorted(profile, &combo);
    while next_combination(&mut combo, n) {
        let sse = sse_sorted(profile, &combo);
        if sse < best_sse {
            best_sse = sse;
            best.copy_from_slice(&combo);
        }
    }
    Ok(Team { members: best, sse: best_sse })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{sse_weights, WeightVector};

    fn zprofile(rows: Vec<Vec<f64>>) -> PredictionProfile {
        ErrorMatrix::from_rows(rows).unwrap().to_profile()
    }

    fn relaxed(w: Vec<f64>) -> RelaxedSolution {
        RelaxedSolution { w: WeightVector::new(w).unwrap(), value: 0.0, gap: 0.0, iterations: 0, converged: true }
    }

    #[test]
    fn rounding_examples() {
        let p = zprofile(vec![vec![1.0], vec![2.0], vec![3.0]]);
        let cfg = HeuristicConfig { rounding_prob: 1.0, rounding_threshold: Some(0.5), ..Default::default() };
        let out = random_rounding(&p, &relaxed(vec![1.0, 0.0, 0.0]), 1, &cfg).unwrap();
        assert_eq!(out.team.members, vec![0]);
        assert!(!out.fallback);
        for seed in 0..20 {
            let cfg = HeuristicConfig { seed, ..Default::default() };
            let out = random_rounding(&p, &relaxed(vec![0.2, 0.3, 0.5]), 3, &cfg).unwrap();
            assert_eq!(out.team.members, vec![0, 1, 2]);
        }
    }

    #[test]
    fn rounding_stall_falls_back() {
        let p = zprofile(vec![vec![1.0], vec![2.0], vec![3.0]]);
        let cfg = HeuristicConfig { rounding_prob: 1.0, rounding_threshold: Some(0.5), ..Default::default() };
        let out = random_rounding(&p, &relaxed(vec![1.0, 0.0, 0.0]), 2, &cfg).unwrap();
        assert!(out.fallback);
        assert_eq!(out.team.members, vec![0, 1]);
    }

    #[test]
    fn effect_examples() {
        let z = ErrorMatrix::from_rows(vec![vec![0.0, 0.0], vec![1.0, 2.0]]).unwrap();
        for f in [EffectFormula::PaperLiteral, EffectFormula::Marginal] {
            assert_eq!(effect(&z, &[0.5, 0.5], 0, f).unwrap(), 0.0);
        }
        let z = ErrorMatrix::from_rows(vec![vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(effect(&z, &[0.5, 0.5], 0, EffectFormula::Marginal).unwrap(), 1.5);
        assert_eq!(effect(&z, &[0.5, 0.5], 0, EffectFormula::PaperLiteral).unwrap(), 0.5);
    }

    #[test]
    fn marginal_effect_is_sse_drop() {
        let z = ErrorMatrix::from_rows(vec![vec![1.0, -2.0, 0.5], vec![3.0, 1.0, -1.0], vec![-0.5, 2.0, 2.0]])
            .unwrap();
        let w = [0.2, 0.5, 0.3];
        for i in 0..3 {
            let mut dropped = w;
            dropped[i] = 0.0;
            let expected = sse_weights(&z, &w).unwrap() - sse_weights(&z, &dropped).unwrap();
            let got = effect(&z, &w, i, EffectFormula::Marginal).unwrap();
            assert!((got - expected).abs() <= 1e-12 * (1.0 + expected.abs()));
        }
    }

    #[test]
    fn min_effect_examples() {
        let p = zprofile(vec![vec![0.0, 0.0], vec![9.0, 9.0], vec![1.0, 1.0]]);
        let full = min_effect(&p, 3, &HeuristicConfig::default()).unwrap();
        assert_eq!(full.members, vec![0, 1, 2]);

        let marginal = HeuristicConfig {
            mineffect_rule: MinEffectRule::RemoveMaxEffect,
            effect_formula: EffectFormula::Marginal,
            ..Default::default()
        };
        assert_eq!(min_effect(&p, 2, &marginal).unwrap().members, vec![0, 2]);

        // Literal formula at w = 1/3: effects (0, −14, 34/9), so the max is expert 2.
        let literal = HeuristicConfig { mineffect_rule: MinEffectRule::RemoveMaxEffect, ..Default::default() };
        assert_eq!(min_effect(&p, 2, &literal).unwrap().members, vec![0, 1]);
        // Default (remove min, literal) drops expert 1.
        assert_eq!(min_effect(&p, 2, &HeuristicConfig::default()).unwrap().members, vec![0, 2]);
    }

    #[test]
    fn best_pairs_examples() {
        let p = zprofile(vec![vec![1.0, 1.0], vec![-1.0, -1.0], vec![5.0, 5.0], vec![6.0, 6.0]]);
        assert_eq!(best_pairs(&p, 2).unwrap().members, vec![0, 1]);
        assert_eq!(best_pairs(&p, 3).unwrap().members, vec![0, 1, 2]);
        assert_eq!(best_pairs(&p, 4).unwrap().members, vec![0, 1, 2, 3]);
        assert!(matches!(best_pairs(&p, 1), Err(Error::TeamSize { min: 2, .. })));
        let z = build_error_matrix(&p);
        assert_eq!(pair_score(&z, 0, 2), pair_score(&z, 2, 0));
    }

    #[test]
    fn remove_least_weights_examples() {
        let p = zprofile(vec![vec![0.0, 0.0], vec![3.0, 3.0], vec![3.0, -3.0]]);
        let cfg = SolverConfig::default();
        assert_eq!(remove_least_weights(&p, 3, &cfg).unwrap().members, vec![0, 1, 2]);
        assert_eq!(remove_least_weights(&p, 2, &cfg).unwrap().members, vec![0, 2]);
    }

    #[test]
    fn minimum_error_examples() {
        let p = zprofile(vec![vec![1.0], vec![2.0], vec![3.0]]);
        assert_eq!(minimum_error(&p, 2).unwrap().members, vec![0, 1]);
        let p = zprofile(vec![vec![1.0]; 4]);
        assert_eq!(minimum_error(&p, 3).unwrap().members, vec![0, 1, 2]);
        assert!(minimum_error(&p, 5).is_err());
    }

    #[test]
    fn best_team_examples() {
        let p = zprofile(vec![vec![1.0, -1.0], vec![-1.0, 1.0], vec![9.0, 9.0]]);
        let t = best_team(&p, 2, 10).unwrap();
        assert_eq!((t.members, t.sse), (vec![0, 1], 0.0));
        assert_eq!(best_team(&p, 3, 10).unwrap().members, vec![0, 1, 2]);
        assert!(matches!(best_team(&p, 2, 2), Err(Error::EnumerationCap { combinations: 3, cap: 2 })));
    }

    #[test]
    fn combinations_enumerate_lexicographically() {
        let mut c = vec![0, 1];
        let mut all = vec![c.clone()];
        while next_combination(&mut c, 4) {
            all.push(c.clone());
        }
        assert_eq!(all, vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert_eq!(binomial(15, 8), 6435);
        assert_eq!(binomial(3, 4), 0);
    }
}
