//! Weight assignment: minimize `½ wᵀQw` over the probability simplex.
//!
//! Solved with Frank-Wolfe. The linear subproblem over the simplex is a
//! coordinate argmin of the gradient, and the duality gap
//! `∇g(w)ᵀw − min_j ∇g(w)_j` bounds the suboptimality of every iterate, so
//! it doubles as the stopping certificate. With exact line search the
//! solver also takes away steps (moving mass off the worst active vertex),
//! which gives linear convergence on the simplex instead of the zig-zagging
//! `O(1/t)` rate of plain Frank-Wolfe.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{GramMatrix, WeightVector};

/// Step size rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    /// Exact minimization along the search direction.
    ExactLineSearch,
    /// Classical `2 / (t + 2)` schedule, Frank-Wolfe steps only.
    Diminishing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Stop once the duality gap is at most `tolerance * (1 + value)`.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub step_rule: StepRule,
    /// Allow away steps (exact line search only).
    pub away_steps: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 200_000,
            step_rule: StepRule::ExactLineSearch,
            away_steps: true,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::Config("solver tolerance must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxedSolution {
    pub w: WeightVector,
    /// `½ wᵀQw`.
    pub value: f64,
    /// Final Frank-Wolfe duality gap.
    pub gap: f64,
    pub iterations: usize,
    /// Whether the gap met the configured tolerance.
    pub converged: bool,
}

const ZERO_CURVATURE: f64 = 1e-18;
const NEGATIVE_CURVATURE: f64 = 1e-6;

fn argmin_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] {
            best = j;
        }
    }
    best
}

/// Curvature `(w − e_j)ᵀ Q (w − e_j)` from the cached `wᵀQw` and `Qw`.
fn vertex_curvature(q: &GramMatrix, wqw: f64, qw: &[f64], j: usize) -> f64 {
    wqw - 2.0 * qw[j] + q.get(j, j)
}

/// Solves `min ½ wᵀQw s.t. 1ᵀw = 1, w ≥ 0`, starting from the uniform point.
///
/// Running out of iterations is not an error: the best iterate is returned
/// with `converged == false`. Negative curvature along a search direction
/// is reported as [`Error::NotPsd`].
pub fn solve_simplex_qp(q: &GramMatrix, cfg: &SolverConfig) -> Result<RelaxedSolution> {
    cfg.validate()?;
    let n = q.dim();
    let scale = q.frobenius_norm();
    let mut w = vec![1.0 / n as f64; n];
    let mut qw = q.mul_vec(&w);
    let mut iterations = 0;
    let mut gap;

    loop {
        let wqw: f64 = qw.iter().zip(&w).map(|(a, b)| a * b).sum();
        let value = 0.5 * wqw;
        let fw_vertex = argmin_lowest(&qw);
        gap = wqw - qw[fw_vertex];
        if gap <= cfg.tolerance * (1.0 + value) || iterations >= cfg.max_iterations {
            break;
        }
        iterations += 1;

        let use_exact = cfg.step_rule == StepRule::ExactLineSearch;
        // Away vertex: active coordinate with the largest gradient.
        let away = if use_exact && cfg.away_steps {
            let mut best: Option<usize> = None;
            for j in 0..n {
                if w[j] > 0.0 && best.map_or(true, |b| qw[j] > qw[b]) {
                    best = Some(j);
                }
            }
            best.filter(|&a| qw[a] - wqw > gap && w[a] < 1.0)
        } else {
            None
        };

        match away {
            None => {
                // Frank-Wolfe step toward e_j: w ← (1 − γ) w + γ e_j.
                let j = fw_vertex;
                let gamma = if use_exact {
                    let curvature = vertex_curvature(q, wqw, &qw, j);
                    if curvature < -NEGATIVE_CURVATURE * scale {
                        return Err(Error::NotPsd { curvature });
                    }
                    if curvature <= ZERO_CURVATURE {
                        1.0
                    } else {
                        (gap / curvature).clamp(0.0, 1.0)
                    }
                } else {
                    2.0 / (iterations as f64 + 1.0)
                };
                let row = q.row(j);
                for i in 0..n {
                    w[i] *= 1.0 - gamma;
                    qw[i] = (1.0 - gamma) * qw[i] + gamma * row[i];
                }
                w[j] += gamma;
            }
            Some(a) => {
                // Away step: w ← (1 + γ) w − γ e_a, γ ≤ w_a / (1 − w_a).
                let slope = qw[a] - wqw;
                let gamma_max = w[a] / (1.0 - w[a]);
                let curvature = vertex_curvature(q, wqw, &qw, a);
                if curvature < -NEGATIVE_CURVATURE * scale {
                    return Err(Error::NotPsd { curvature });
                }
                let gamma = if curvature <= ZERO_CURVATURE {
                    gamma_max
                } else {
                    (slope / curvature).clamp(0.0, gamma_max)
                };
                let row = q.row(a);
                for i in 0..n {
                    w[i] *= 1.0 + gamma;
                    qw[i] = (1.0 + gamma) * qw[i] - gamma * row[i];
                }
                if gamma == gamma_max {
                    w[a] = 0.0;
                } else {
                    w[a] -= gamma;
                }
            }
        }
        for wi in w.iter_mut() {
            if *wi < 0.0 {
                *wi = 0.0;
            }
        }
        // Recompute Qw exactly every so often so the cache cannot drift.
        if iterations % 64 == 0 {
            qw = q.mul_vec(&w);
        }
    }

    let converged = gap <= cfg.tolerance * (1.0 + 0.5 * dot(&qw, &w));
    let sum: f64 = w.iter().sum();
    for wi in w.iter_mut() {
        *wi /= sum;
    }
    let value = 0.5 * q.quad_form(&w);
    Ok(RelaxedSolution {
        w: WeightVector::new(w)?,
        value,
        gap: gap.max(0.0),
        iterations,
        converged,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// The relaxed optimum, a lower bound on the SSE of every team of every
/// size. Unconverged iterates are rejected.
pub fn lower_bound(sol: &RelaxedSolution) -> Result<f64> {
    if !sol.converged {
        return Err(Error::Unconverged {
            gap: sol.gap,
            iterations: sol.iterations,
        });
    }
    Ok(sol.value)
}

/// Indices of the `m` largest weights (ties to the lowest index), sorted.
pub fn max_weights_init(w: &WeightVector, m: usize) -> Result<Vec<usize>> {
    let n = w.len();
    if m < 1 || m > n {
        return Err(Error::TeamSize { m, min: 1, n });
    }
    let weights = w.as_slice();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
    let mut chosen = order[..m].to_vec();
    chosen.sort_unstable();
    Ok(chosen)
}
