use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use teamsel::heuristics::{
    best_pairs, best_team, effect, max_weights, min_effect, minimum_error, next_combination, random_rounding,
    remove_least_weights, EffectFormula, HeuristicConfig, MinEffectRule,
};
use teamsel::model::{build_error_matrix, build_gram, sse_team, sse_weights, ErrorMatrix, PredictionProfile, WeightVector};
use teamsel::qp::{lower_bound, solve_simplex_qp, SolverConfig};
use teamsel::tabu::{run_tabu, TabuParams, TabuState};

fn random_profile(rng: &mut ChaCha8Rng, n: usize, k: usize) -> PredictionProfile {
    let f = (0..n).map(|_| (0..k).map(|_| rng.gen_range(-10.0..10.0)).collect()).collect();
    let x = (0..k).map(|_| rng.gen_range(-10.0..10.0)).collect();
    PredictionProfile::new(f, x, None).unwrap()
}

fn all_subsets(n: usize) -> impl Iterator<Item = Vec<usize>> {
    (1u32..(1 << n)).map(move |mask| (0..n).filter(|&i| mask >> i & 1 == 1).collect())
}

fn brute_force_best(p: &PredictionProfile, m: usize) -> f64 {
    all_subsets(p.n_experts())
        .filter(|s| s.len() == m)
        .map(|s| sse_team(p, &s).unwrap())
        .fold(f64::INFINITY, f64::min)
}

fn profile_strategy() -> impl Strategy<Value = PredictionProfile> {
    (1usize..=6, 1usize..=6).prop_flat_map(|(n, k)| {
        (
            prop::collection::vec(prop::collection::vec(-10.0f64..10.0, k), n),
            prop::collection::vec(-10.0f64..10.0, k),
        )
            .prop_map(|(f, x)| PredictionProfile::new(f, x, None).unwrap())
    })
}

proptest! {
    #[test]
    fn team_sse_equals_uniform_weight_sse(p in profile_strategy(), mask in 1u32..64) {
        let n = p.n_experts();
        let members: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        prop_assume!(!members.is_empty());
        let z = build_error_matrix(&p);
        let w = WeightVector::uniform_on(n, &members).unwrap();
        let a = sse_team(&p, &members).unwrap();
        let b = sse_weights(&z, w.as_slice()).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()), "{a} vs {b}");
    }

    #[test]
    fn weighted_sse_is_half_quadratic_form(p in profile_strategy(), seed in any::<u64>()) {
        let z = build_error_matrix(&p);
        let q = build_gram(&z);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w: Vec<f64> = (0..p.n_experts()).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let g = sse_weights(&z, &w).unwrap();
        let half = 0.5 * q.quad_form(&w);
        prop_assert!((g - half).abs() <= 1e-9 * (1.0 + g.abs()));
        prop_assert!(q.quad_form(&w) >= -1e-9 * q.frobenius_norm() * w.iter().map(|v| v * v).sum::<f64>());
    }

    #[test]
    fn team_sse_is_permutation_invariant(p in profile_strategy(), seed in any::<u64>()) {
        let n = p.n_experts();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.gen_range(0..=i));
        }
        let members: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
        prop_assume!(!members.is_empty());
        let shuffled: Vec<usize> = members.iter().rev().copied().collect();
        prop_assert_eq!(sse_team(&p, &members).unwrap(), sse_team(&p, &shuffled).unwrap());
        // Relabel experts: new expert j is old expert perm[j].
        let relabeled = p.select_experts(&perm).unwrap();
        let mapped: Vec<usize> = members.iter().map(|&i| perm.iter().position(|&x| x == i).unwrap()).collect();
        let a = sse_team(&p, &members).unwrap();
        let b = sse_team(&relabeled, &mapped).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a));
    }
}

#[test]
fn gram_identity_on_random_weights() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let n = rng.gen_range(1..=8);
        let k = rng.gen_range(1..=8);
        let z = build_error_matrix(&random_profile(&mut rng, n, k));
        let q = build_gram(&z);
        for _ in 0..100 {
            let w: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let g = sse_weights(&z, &w).unwrap();
            assert!((g - 0.5 * q.quad_form(&w)).abs() <= 1e-9 * (1.0 + g));
        }
    }
}

#[test]
fn relaxed_optimum_certificate() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..30 {
        let n = rng.gen_range(2..=8);
        let k = rng.gen_range(1..=8);
        let p = random_profile(&mut rng, n, k);
        let z = build_error_matrix(&p);
        let q = build_gram(&z);
        let sol = solve_simplex_qp(&q, &SolverConfig::default()).unwrap();
        assert!(sol.converged);
        let sum: f64 = sol.w.as_slice().iter().sum();
        assert!((sum - 1.0).abs() <= 1e-12);
        let g = sse_weights(&z, sol.w.as_slice()).unwrap();
        assert!((g - sol.value).abs() <= 1e-8 * (1.0 + g));
        let slack = 1e-8 * (1.0 + sol.value);
        for _ in 0..1000 {
            let raw: Vec<f64> = (0..n).map(|_| -rng.gen::<f64>().ln()).collect();
            let s: f64 = raw.iter().sum();
            let v: Vec<f64> = raw.iter().map(|r| r / s).collect();
            assert!(sol.value <= 0.5 * q.quad_form(&v) + slack);
        }
        // Deterministic.
        assert_eq!(solve_simplex_qp(&q, &SolverConfig::default()).unwrap(), sol);
    }
}

#[test]
fn exact_line_search_is_monotone() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let p = random_profile(&mut rng, 7, 5);
        let q = build_gram(&build_error_matrix(&p));
        let mut prev = f64::INFINITY;
        for iters in 1..60 {
            let cfg = SolverConfig { max_iterations: iters, ..SolverConfig::default() };
            let sol = solve_simplex_qp(&q, &cfg).unwrap();
            assert!(sol.value <= prev + 1e-12 * (1.0 + prev.abs().min(1e300)));
            prev = sol.value;
        }
    }
}

#[test]
fn relaxed_bound_examples() {
    let z = ErrorMatrix::from_rows(vec![vec![1.0, -1.0], vec![1.0, 1.0]]).unwrap();
    let p = z.to_profile();
    let sol = solve_simplex_qp(&build_gram(&z), &SolverConfig::default()).unwrap();
    let lb = lower_bound(&sol).unwrap();
    assert!((lb - 1.0).abs() < 1e-12);
    for s in [vec![0], vec![1], vec![0, 1]] {
        assert!(sse_team(&p, &s).unwrap() >= lb);
    }
    let zero = ErrorMatrix::from_rows(vec![vec![0.0; 3]; 4]).unwrap();
    let sol = solve_simplex_qp(&build_gram(&zero), &SolverConfig::default()).unwrap();
    assert_eq!(lower_bound(&sol).unwrap(), 0.0);
}

#[test]
fn relaxed_bound_below_every_team() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..50 {
        let n = rng.gen_range(1..=8);
        let k = rng.gen_range(1..=8);
        let p = random_profile(&mut rng, n, k);
        let sol = solve_simplex_qp(&build_gram(&build_error_matrix(&p)), &SolverConfig::default()).unwrap();
        let lb = lower_bound(&sol).unwrap();
        for m in 1..=n {
            assert!(lb <= brute_force_best(&p, m), "lb {lb} above best of size {m}");
        }
    }
}

#[test]
fn swap_delta_matches_recomputation() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..50 {
        let n = rng.gen_range(3..=8);
        let m = rng.gen_range(1..n);
        let p = random_profile(&mut rng, n, 6);
        let q = build_gram(&build_error_matrix(&p));
        let mut members: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            members.swap(i, rng.gen_range(0..=i));
        }
        members.truncate(m);
        let state = TabuState::new(&q, &members);
        let swap = state.best_swap().unwrap();
        let before = sse_team(&p, &members).unwrap();
        let after_set: Vec<usize> = members.iter().map(|&i| if i == swap.out { swap.into } else { i }).collect();
        let after = sse_team(&p, &after_set).unwrap();
        assert!((before + swap.delta - after).abs() <= 1e-9 * (1.0 + after));
        // Steepest: no other swap is strictly better.
        for &u in state.current.members() {
            for &v in state.current.outsiders() {
                assert!(state.current.delta(u, v) >= swap.delta);
            }
        }
    }
}

#[test]
fn tabu_matches_exhaustive_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let mut hits = 0;
    let runs = 50;
    for run in 0..runs {
        let p = random_profile(&mut rng, 10, 10);
        let m = 2 + run % 4;
        let params = TabuParams { seed: run as u64, ..TabuParams::default() };
        let out = run_tabu(&p, m, &params, true).unwrap();
        let best = brute_force_best(&p, m);
        if (out.team.sse - best).abs() <= 1e-9 * (1.0 + best) {
            hits += 1;
        }
        let lb = out.lower_bound.unwrap();
        assert!(out.team.sse >= lb - 1e-9 * (1.0 + lb));
        assert!(out.team.sse <= out.initial.sse);
        assert!(out.trace.windows(2).all(|w| w[1].best_sse <= w[0].best_sse));
    }
    assert!(hits * 10 >= runs * 9, "{hits}/{runs}");
}

#[test]
fn tabu_is_seed_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let p = random_profile(&mut rng, 12, 8);
    let params = TabuParams { seed: 9, ..TabuParams::default() };
    let a = run_tabu(&p, 5, &params, true).unwrap();
    let b = run_tabu(&p, 5, &params, true).unwrap();
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.team, b.team);
}

/// Exact distribution of the final set of the rounding pass process.
fn rounding_distribution(w: &[f64], m: usize, prob: f64, threshold: f64) -> Vec<(u32, f64)> {
    use std::collections::BTreeMap;
    let n = w.len();
    let p_take: Vec<f64> = w.iter().map(|&x| if x > threshold { prob } else { 1.0 - prob }).collect();
    let mut finished: BTreeMap<u32, f64> = BTreeMap::new();
    let mut pending: BTreeMap<u32, f64> = BTreeMap::from([(0, 1.0)]);
    for _ in 0..500 {
        let mut next: BTreeMap<u32, f64> = BTreeMap::new();
        for (&start, &mass) in &pending {
            // Walk one pass over experts.
            let mut states: Vec<(u32, f64)> = vec![(start, mass)];
            for i in 0..n {
                let mut after = Vec::new();
                for (set, pm) in states {
                    if set.count_ones() as usize == m || set >> i & 1 == 1 {
                        after.push((set, pm));
                        continue;
                    }
                    after.push((set | 1 << i, pm * p_take[i]));
                    after.push((set, pm * (1.0 - p_take[i])));
                }
                states = after;
            }
            for (set, pm) in states {
                let target = if set.count_ones() as usize == m { &mut finished } else { &mut next };
                *target.entry(set).or_default() += pm;
            }
        }
        pending = next;
    }
    finished.into_iter().collect()
}

#[test]
fn random_rounding_frequency_matches_exact_process() {
    let w = vec![0.6, 0.4, 0.0, 0.0];
    let exact = rounding_distribution(&w, 2, 0.9, 0.2);
    let total: f64 = exact.iter().map(|e| e.1).sum();
    assert!((total - 1.0).abs() < 1e-12);
    let expected = exact.iter().find(|e| e.0 == 0b0011).unwrap().1;

    let p = ErrorMatrix::from_rows(vec![vec![1.0]; 4]).unwrap().to_profile();
    let sol = teamsel::qp::RelaxedSolution {
        w: WeightVector::new(w).unwrap(),
        value: 0.0,
        gap: 0.0,
        iterations: 0,
        converged: true,
    };
    let trials = 10_000;
    let mut hits = 0;
    for seed in 0..trials {
        let cfg = HeuristicConfig { seed, rounding_prob: 0.9, rounding_threshold: Some(0.2), ..Default::default() };
        if random_rounding(&p, &sol, 2, &cfg).unwrap().team.members == vec![0, 1] {
            hits += 1;
        }
    }
    let freq = hits as f64 / trials as f64;
    assert!((freq - expected).abs() <= 0.02, "freq {freq} vs exact {expected}");
}

#[test]
fn marginal_effect_matches_recomputation() {
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    for _ in 0..100 {
        let n = rng.gen_range(1..=6);
        let z = build_error_matrix(&random_profile(&mut rng, n, 5));
        let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let i = rng.gen_range(0..n);
        let mut dropped = w.clone();
        dropped[i] = 0.0;
        let expected = sse_weights(&z, &w).unwrap() - sse_weights(&z, &dropped).unwrap();
        let got = effect(&z, &w, i, EffectFormula::Marginal).unwrap();
        assert!((got - expected).abs() <= 1e-9 * (1.0 + expected.abs()));
    }
}

#[test]
fn heuristics_are_dominated_by_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for run in 0..40 {
        let n = rng.gen_range(2..=8);
        let k = rng.gen_range(1..=8);
        let p = random_profile(&mut rng, n, k);
        let sol = solve_simplex_qp(&build_gram(&build_error_matrix(&p)), &SolverConfig::default()).unwrap();
        let lb = lower_bound(&sol).unwrap();
        for m in 1..=n {
            let oracle = best_team(&p, m, u128::MAX).unwrap();
            assert!((oracle.sse - brute_force_best(&p, m)).abs() <= 1e-12 * (1.0 + oracle.sse));
            let cfg = HeuristicConfig { seed: run, ..Default::default() };
            let mut teams = vec![
                random_rounding(&p, &sol, m, &cfg).unwrap().team,
                max_weights(&p, &sol, m).unwrap(),
                min_effect(&p, m, &cfg).unwrap(),
                min_effect(&p, m, &HeuristicConfig { mineffect_rule: MinEffectRule::RemoveMaxEffect, ..cfg.clone() })
                    .unwrap(),
                remove_least_weights(&p, m, &SolverConfig::default()).unwrap(),
                minimum_error(&p, m).unwrap(),
            ];
            if m >= 2 {
                teams.push(best_pairs(&p, m).unwrap());
            }
            for t in teams {
                assert_eq!(t.members.len(), m);
                assert!(t.members.windows(2).all(|w| w[0] < w[1]));
                assert!(t.sse >= oracle.sse);
                assert!(t.sse >= lb - 1e-9 * (1.0 + lb));
                assert!((t.sse - sse_team(&p, &t.members).unwrap()).abs() <= 1e-9 * (1.0 + t.sse));
            }
        }
    }
}

#[test]
fn best_team_prefers_lexicographic_ties() {
    // Experts 0 and 2 are identical, so {0,1} and {1,2} tie.
    let p = ErrorMatrix::from_rows(vec![vec![1.0, 2.0], vec![-1.0, -2.0], vec![1.0, 2.0], vec![5.0, 5.0]])
        .unwrap()
        .to_profile();
    assert_eq!(best_team(&p, 2, 100).unwrap().members, vec![0, 1]);
    let mut combo = vec![0, 1, 2];
    let mut count = 1;
    while next_combination(&mut combo, 6) {
        count += 1;
    }
    assert_eq!(count, 20);
}
