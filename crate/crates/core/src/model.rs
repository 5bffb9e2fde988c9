//! Prediction profiles, forecast errors, the Gram matrix and the two SSE
//! objectives (team SSE and weighted SSE).
//!
//! Matrices are stored row-major in flat vectors. All sums run over rounds in
//! ascending order and, within a round, over experts in ascending index
//! order, so every value is bit-reproducible.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Forecast history of `n` experts over `k` rounds together with the
/// realized outcomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionProfile {
    n_experts: usize,
    n_rounds: usize,
    /// `forecasts[i * n_rounds + t]` is expert `i`'s forecast for round `t`.
    forecasts: Vec<f64>,
    outcomes: Vec<f64>,
    labels: Vec<String>,
}

impl PredictionProfile {
    /// Builds a profile from per-expert forecast rows. Labels default to
    /// `e1..en` when `labels` is `None`.
    pub fn new(
        forecasts: Vec<Vec<f64>>,
        outcomes: Vec<f64>,
        labels: Option<Vec<String>>,
    ) -> Result<Self> {
        let n = forecasts.len();
        let k = outcomes.len();
        if n == 0 {
            return Err(Error::InvalidProfile("no experts".into()));
        }
        if k == 0 {
            return Err(Error::NoRounds);
        }
        for (i, row) in forecasts.iter().enumerate() {
            if row.len() != k {
                return Err(Error::InvalidProfile(format!(
                    "expert {i} has {} forecasts, expected {k}",
                    row.len()
                )));
            }
        }
        let labels = match labels {
            Some(l) if l.len() != n => {
                return Err(Error::LengthMismatch {
                    expected: n,
                    got: l.len(),
                })
            }
            Some(l) => l,
            None => (1..=n).map(|i| format!("e{i}")).collect(),
        };
        if let Some(t) = outcomes.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidProfile(format!("non-finite outcome in round {t}")));
        }
        let flat: Vec<f64> = forecasts.into_iter().flatten().collect();
        if let Some(p) = flat.iter().position(|y| !y.is_finite()) {
            return Err(Error::InvalidProfile(format!(
                "non-finite forecast for expert {} in round {}",
                p / k,
                p % k
            )));
        }
        Ok(Self {
            n_experts: n,
            n_rounds: k,
            forecasts: flat,
            outcomes,
            labels,
        })
    }

    pub fn n_experts(&self) -> usize {
        self.n_experts
    }

    pub fn n_rounds(&self) -> usize {
        self.n_rounds
    }

    pub fn forecast(&self, expert: usize, round: usize) -> f64 {
        self.forecasts[expert * self.n_rounds + round]
    }

    /// Forecasts of one expert across all rounds.
    pub fn forecasts_of(&self, expert: usize) -> &[f64] {
        &self.forecasts[expert * self.n_rounds..(expert + 1) * self.n_rounds]
    }

    pub fn outcomes(&self) -> &[f64] {
        &self.outcomes
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Forecast rows as nested vectors.
    pub fn forecast_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n_experts).map(|i| self.forecasts_of(i).to_vec()).collect()
    }

    /// Profile restricted to the given experts, in the given order.
    pub fn select_experts(&self, experts: &[usize]) -> Result<Self> {
        for &e in experts {
            check_index(e, self.n_experts)?;
        }
        Self::new(
            experts.iter().map(|&e| self.forecasts_of(e).to_vec()).collect(),
            self.outcomes.clone(),
            Some(experts.iter().map(|&e| self.labels[e].clone()).collect()),
        )
    }

    /// Profile restricted to rounds `start..end`.
    pub fn select_rounds(&self, start: usize, end: usize) -> Result<Self> {
        if end > self.n_rounds || start >= end {
            return Err(Error::InsufficientRounds {
                needed: end.max(start + 1),
                available: self.n_rounds,
            });
        }
        Self::new(
            (0..self.n_experts)
                .map(|i| self.forecasts_of(i)[start..end].to_vec())
                .collect(),
            self.outcomes[start..end].to_vec(),
            Some(self.labels.clone()),
        )
    }
}

/// Forecast errors `z[i][t] = y[i][t] - x[t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorMatrix {
    n_experts: usize,
    n_rounds: usize,
    errors: Vec<f64>,
}

impl ErrorMatrix {
    /// Builds an error matrix directly from rows of errors.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidProfile("no experts".into()));
        }
        let k = rows[0].len();
        if k == 0 {
            return Err(Error::NoRounds);
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != k) {
            return Err(Error::LengthMismatch {
                expected: k,
                got: bad.len(),
            });
        }
        let errors: Vec<f64> = rows.into_iter().flatten().collect();
        if errors.iter().any(|z| !z.is_finite()) {
            return Err(Error::InvalidProfile("non-finite error entry".into()));
        }
        Ok(Self {
            n_experts: n,
            n_rounds: k,
            errors,
        })
    }

    pub fn n_experts(&self) -> usize {
        self.n_experts
    }

    pub fn n_rounds(&self) -> usize {
        self.n_rounds
    }

    pub fn get(&self, expert: usize, round: usize) -> f64 {
        self.errors[expert * self.n_rounds + round]
    }

    pub fn row(&self, expert: usize) -> &[f64] {
        &self.errors[expert * self.n_rounds..(expert + 1) * self.n_rounds]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n_experts).map(|i| self.row(i).to_vec()).collect()
    }

    /// A profile with all outcomes zero, so that forecasts equal errors.
    pub fn to_profile(&self) -> PredictionProfile {
        PredictionProfile::new(self.rows(), vec![0.0; self.n_rounds], None)
            .expect("error matrix entries are finite")
    }

    /// Sum of absolute errors of one expert.
    pub fn abs_error_sum(&self, expert: usize) -> f64 {
        self.row(expert).iter().map(|z| z.abs()).sum()
    }
}

/// Symmetric PSD matrix with `q[i][j] = 2 * sum_t z[i][t] * z[j][t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    n: usize,
    q: Vec<f64>,
}

impl GramMatrix {
    /// Wraps an explicit square matrix. Symmetry is checked exactly; PSD is
    /// not checked here (the solver detects negative curvature).
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidProfile("empty matrix".into()));
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::LengthMismatch {
                expected: n,
                got: bad.len(),
            });
        }
        let q: Vec<f64> = rows.into_iter().flatten().collect();
        if q.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidProfile("non-finite matrix entry".into()));
        }
        for i in 0..n {
            for j in 0..i {
                if q[i * n + j] != q[j * n + i] {
                    return Err(Error::InvalidProfile(format!("matrix not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self { n, q })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.q[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.q[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    /// `Q w`.
    pub fn mul_vec(&self, w: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(w).map(|(q, w)| q * w).sum())
            .collect()
    }

    /// `wᵀ Q w`.
    pub fn quad_form(&self, w: &[f64]) -> f64 {
        self.mul_vec(w).iter().zip(w).map(|(a, b)| a * b).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.q.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Principal submatrix on `indices`, in the given order.
    pub fn principal_submatrix(&self, indices: &[usize]) -> GramMatrix {
        let m = indices.len();
        let mut q = Vec::with_capacity(m * m);
        for &i in indices {
            for &j in indices {
                q.push(self.get(i, j));
            }
        }
        GramMatrix { n: m, q }
    }
}

/// Nonnegative weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub const SUM_TOLERANCE: f64 = 1e-9;

    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Config("empty weight vector".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Config("weights must be finite and nonnegative".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(Error::Config(format!("weights sum to {sum}, not 1")));
        }
        Ok(Self(weights))
    }

    /// Uniform weight `1/|members|` on `members`, zero elsewhere.
    pub fn uniform_on(n: usize, members: &[usize]) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::EmptyTeam);
        }
        let mut w = vec![0.0; n];
        let share = 1.0 / members.len() as f64;
        for &i in members {
            check_index(i, n)?;
            w[i] = share;
        }
        Self::new(w)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A set of experts together with its SSE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Team {
    /// Sorted, distinct expert indices.
    pub members: Vec<usize>,
    pub sse: f64,
}

impl Team {
    /// Evaluates `members` on `profile`.
    pub fn evaluate(profile: &PredictionProfile, members: &[usize]) -> Result<Self> {
        let members = normalize_members(members, profile.n_experts())?;
        let sse = sse_sorted(profile, &members);
        Ok(Self { members, sse })
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }
}

fn check_index(i: usize, n: usize) -> Result<()> {
    if i >= n {
        return Err(Error::IndexOutOfRange { index: i, n });
    }
    Ok(())
}

/// Sorts and validates a member list.
pub(crate) fn normalize_members(members: &[usize], n: usize) -> Result<Vec<usize>> {
    if members.is_empty() {
        return Err(Error::EmptyTeam);
    }
    let mut sorted = members.to_vec();
    sorted.sort_unstable();
    for pair in sorted.windows(2) {
        if pair[0] == pair[1] {
            return Err(Error::DuplicateMember(pair[0]));
        }
    }
    check_index(*sorted.last().expect("nonempty"), n)?;
    Ok(sorted)
}

/// `z[i][t] = y[i][t] - x[t]`.
pub fn build_error_matrix(profile: &PredictionProfile) -> ErrorMatrix {
    let k = profile.n_rounds();
    let errors = profile
        .forecasts
        .iter()
        .enumerate()
        .map(|(p, y)| y - profile.outcomes[p % k])
        .collect();
    ErrorMatrix {
        n_experts: profile.n_experts(),
        n_rounds: k,
        errors,
    }
}

/// SSE of the simple-average forecast of `members`:
/// `sum_t (mean_{i in S} y[i][t] - x[t])^2`.
pub fn sse_team(profile: &PredictionProfile, members: &[usize]) -> Result<f64> {
    let sorted = normalize_members(members, profile.n_experts())?;
    Ok(sse_sorted(profile, &sorted))
}

/// Team SSE for already validated, sorted members.
pub(crate) fn sse_sorted(profile: &PredictionProfile, members: &[usize]) -> f64 {
    let size = members.len() as f64;
    let mut total = 0.0;
    for (t, x) in profile.outcomes.iter().enumerate() {
        let mut sum = 0.0;
        for &i in members {
            sum += profile.forecast(i, t);
        }
        let e = sum / size - x;
        total += e * e;
    }
    total
}

/// Weighted SSE `g(w) = sum_t (sum_i w[i] z[i][t])^2` for arbitrary real `w`.
pub fn sse_weights(errors: &ErrorMatrix, w: &[f64]) -> Result<f64> {
    if w.len() != errors.n_experts {
        return Err(Error::LengthMismatch {
            expected: errors.n_experts,
            got: w.len(),
        });
    }
    let mut total = 0.0;
    for t in 0..errors.n_rounds {
        let mut s = 0.0;
        for (i, wi) in w.iter().enumerate() {
            s += wi * errors.get(i, t);
        }
        total += s * s;
    }
    Ok(total)
}

/// `q[i][j] = 2 * (Z_i · Z_j)`, upper triangle computed and mirrored.
pub fn build_gram(errors: &ErrorMatrix) -> GramMatrix {
    let n = errors.n_experts;
    let mut q = vec![0.0; n * n];
    for i in 0..n {
        let zi = errors.row(i);
        for j in i..n {
            let dot: f64 = zi.iter().zip(errors.row(j)).map(|(a, b)| a * b).sum();
            q[i * n + j] = 2.0 * dot;
            q[j * n + i] = 2.0 * dot;
        }
    }
    GramMatrix { n, q }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(f: Vec<Vec<f64>>, x: Vec<f64>) -> PredictionProfile {
        PredictionProfile::new(f, x, None).unwrap()
    }

    #[test]
    fn error_matrix_examples() {
        let z = build_error_matrix(&profile(vec![vec![2.0]], vec![2.0]));
        assert_eq!(z.rows(), vec![vec![0.0]]);
        let z = build_error_matrix(&profile(vec![vec![1.0, 3.0]], vec![2.0, 2.0]));
        assert_eq!(z.rows(), vec![vec![-1.0, 1.0]]);
        let z = build_error_matrix(&profile(vec![vec![1.0], vec![3.0]], vec![2.0]));
        assert_eq!(z.rows(), vec![vec![-1.0], vec![1.0]]);
    }

    #[test]
    fn sse_team_examples() {
        let p = profile(vec![vec![1.0, 3.0]], vec![2.0, 2.0]);
        assert_eq!(sse_team(&p, &[0]).unwrap(), 2.0);
        let p = profile(vec![vec![1.0], vec![3.0]], vec![2.0]);
        assert_eq!(sse_team(&p, &[0, 1]).unwrap(), 0.0);
        let p = profile(vec![vec![1.0, 1.0], vec![3.0, 5.0]], vec![2.0, 2.0]);
        assert_eq!(sse_team(&p, &[1, 0]).unwrap(), 1.0);
    }

    #[test]
    fn sse_team_rejects_bad_members() {
        let p = profile(vec![vec![1.0], vec![3.0]], vec![2.0]);
        assert!(matches!(sse_team(&p, &[]), Err(Error::EmptyTeam)));
        assert!(matches!(sse_team(&p, &[2]), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(sse_team(&p, &[1, 1]), Err(Error::DuplicateMember(1))));
    }

    #[test]
    fn sse_weights_examples() {
        let z = ErrorMatrix::from_rows(vec![vec![-1.0, 1.0], vec![5.0, 5.0]]).unwrap();
        assert_eq!(sse_weights(&z, &[1.0, 0.0]).unwrap(), 2.0);
        let z = ErrorMatrix::from_rows(vec![vec![1.0, -1.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(sse_weights(&z, &[0.5, 0.5]).unwrap(), 1.0);
        assert!(matches!(
            sse_weights(&z, &[1.0]),
            Err(Error::LengthMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn gram_examples() {
        let z = ErrorMatrix::from_rows(vec![vec![1.0, -1.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(build_gram(&z).rows(), vec![vec![4.0, 0.0], vec![0.0, 4.0]]);
        let z = ErrorMatrix::from_rows(vec![vec![0.0; 3]; 4]).unwrap();
        assert!(build_gram(&z).rows().iter().flatten().all(|&q| q == 0.0));
    }

    #[test]
    fn rejects_non_finite_input() {
        assert!(PredictionProfile::new(vec![vec![f64::NAN]], vec![1.0], None).is_err());
        assert!(PredictionProfile::new(vec![vec![1.0]], vec![f64::INFINITY], None).is_err());
        assert!(PredictionProfile::new(vec![vec![1.0, 2.0]], vec![1.0], None).is_err());
        assert!(matches!(
            PredictionProfile::new(vec![vec![]], vec![], None),
            Err(Error::NoRounds)
        ));
    }

    #[test]
    fn weight_vector_validation() {
        assert!(WeightVector::new(vec![0.5, 0.5]).is_ok());
        assert!(WeightVector::new(vec![0.5, 0.6]).is_err());
        assert!(WeightVector::new(vec![1.5, -0.5]).is_err());
        let w = WeightVector::uniform_on(4, &[1, 3]).unwrap();
        assert_eq!(w.as_slice(), &[0.0, 0.5, 0.0, 0.5]);
    }

    #[test]
    fn round_and_expert_selection() {
        let p = profile(vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]], vec![0.0, 1.0, 2.0]);
        let r = p.select_rounds(1, 3).unwrap();
        assert_eq!(r.forecast_rows(), vec![vec![2.0, 3.0], vec![5.0, 6.0]]);
        assert_eq!(r.outcomes(), &[1.0, 2.0]);
        let e = p.select_experts(&[1]).unwrap();
        assert_eq!(e.forecast_rows(), vec![vec![4.0, 5.0, 6.0]]);
        assert_eq!(e.labels(), &["e2".to_string()]);
    }
}
