//! Synthetic expert populations.
//!
//! Draw order for a given spec is fixed: per-expert parameters in index
//! order (mean before sigma for `normal3`), then all outcomes, then
//! forecasts expert-major (expert 0 rounds 0..k, expert 1, ...). All draws
//! come from the single stream `(seed, "scenario", 0)`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PredictionProfile;
use crate::seed;

pub const CENTER: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    /// Calibrated, informative: mean 10, sigma in [1, 2].
    Normal1,
    /// Calibrated, less informative: mean 10, sigma in [1, 7].
    Normal2,
    /// Partly uncalibrated: mean in [8, 12], sigma in [1, 2].
    Normal3,
    /// Outcomes and forecasts exponential with mean 10.
    Exp,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 4] = [Self::Normal1, Self::Normal2, Self::Normal3, Self::Exp];

    pub fn name(self) -> &'static str {
        match self {
            Self::Normal1 => "normal1",
            Self::Normal2 => "normal2",
            Self::Normal3 => "normal3",
            Self::Exp => "exp",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scenario {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub n_experts: usize,
    pub n_rounds: usize,
    pub seed: u64,
    /// Outcome standard deviation for the normal scenarios.
    pub outcome_sigma: f64,
}

impl ScenarioSpec {
    pub fn new(kind: ScenarioKind, n_experts: usize, n_rounds: usize, seed: u64) -> Self {
        Self { kind, n_experts, n_rounds, seed, outcome_sigma: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum ExpertDistribution {
    Normal { mean: f64, sigma: f64 },
    Exponential { rate: f64 },
}

impl ExpertDistribution {
    pub fn mean(&self) -> f64 {
        match *self {
            Self::Normal { mean, .. } => mean,
            Self::Exponential { rate } => 1.0 / rate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertPopulation {
    pub spec: ScenarioSpec,
    pub experts: Vec<ExpertDistribution>,
}

pub fn generate(spec: &ScenarioSpec) -> Result<(PredictionProfile, ExpertPopulation)> {
    if spec.n_experts == 0 || spec.n_rounds == 0 {
        return Err(Error::Config("scenario needs at least one expert and one round".into()));
    }
    if !(spec.outcome_sigma > 0.0) || !spec.outcome_sigma.is_finite() {
        return Err(Error::Config("outcome_sigma must be positive".into()));
    }
    let mut rng = seed::stream(spec.seed, "scenario", 0);

    let experts: Vec<ExpertDistribution> = (0..spec.n_experts)
        .map(|_| match spec.kind {
            ScenarioKind::Normal1 => ExpertDistribution::Normal { mean: CENTER, sigma: rng.gen_range(1.0..=2.0) },
            ScenarioKind::Normal2 => ExpertDistribution::Normal { mean: CENTER, sigma: rng.gen_range(1.0..=7.0) },
            ScenarioKind::Normal3 => {
                let mean = rng.gen_range(8.0..=12.0);
                ExpertDistribution::Normal { mean, sigma: rng.gen_range(1.0..=2.0) }
            }
            ScenarioKind::Exp => ExpertDistribution::Exponential { rate: 1.0 / CENTER },
        })
        .collect();

    let outcomes: Vec<f64> = match spec.kind {
        ScenarioKind::Exp => {
            let d = Exp::new(1.0 / CENTER).expect("positive rate");
            (0..spec.n_rounds).map(|_| d.sample(&mut rng)).collect()
        }
        _ => {
            let d = Normal::new(CENTER, spec.outcome_sigma).expect("positive sigma");
            (0..spec.n_rounds).map(|_| d.sample(&mut rng)).collect()
        }
    };

    let forecasts: Vec<Vec<f64>> = experts
        .iter()
        .map(|e| match *e {
            ExpertDistribution::Normal { mean, sigma } => {
                let d = Normal::new(mean, sigma).expect("positive sigma");
                (0..spec.n_rounds).map(|_| d.sample(&mut rng)).collect()
            }
            ExpertDistribution::Exponential { rate } => {
                let d = Exp::new(rate).expect("positive rate");
                (0..spec.n_rounds).map(|_| d.sample(&mut rng)).collect()
            }
        })
        .collect();

    let profile = PredictionProfile::new(forecasts, outcomes, None)?;
    Ok((profile, ExpertPopulation { spec: spec.clone(), experts }))
}

/// Chronological split into the first `train_k` rounds and the next `test_k`.
pub fn split_profile(
    profile: &PredictionProfile,
    train_k: usize,
    test_k: usize,
) -> Result<(PredictionProfile, PredictionProfile)> {
    if train_k == 0 || test_k == 0 || train_k + test_k > profile.n_rounds() {
        return Err(Error::InsufficientRounds {
            needed: train_k.max(1) + test_k.max(1),
            available: profile.n_rounds(),
        });
    }
    Ok((profile.select_rounds(0, train_k)?, profile.select_rounds(train_k, train_k + test_k)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::sse_team;

    fn mean_sd(v: &[f64]) -> (f64, f64) {
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var.sqrt())
    }

    #[test]
    fn deterministic_given_seed() {
        for kind in ScenarioKind::ALL {
            let spec = ScenarioSpec::new(kind, 5, 7, 42);
            assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
            let other = ScenarioSpec { seed: 43, ..spec.clone() };
            assert_ne!(generate(&spec).unwrap().0, generate(&other).unwrap().0);
        }
    }

    #[test]
    fn normal1_moments() {
        let (p, pop) = generate(&ScenarioSpec::new(ScenarioKind::Normal1, 15, 10_000, 1)).unwrap();
        for (i, e) in pop.experts.iter().enumerate() {
            let (mean, sd) = mean_sd(p.forecasts_of(i));
            assert!((mean - 10.0).abs() < 0.1, "expert {i} mean {mean}");
            assert!((0.9..=2.2).contains(&sd), "expert {i} sd {sd}");
            assert!(matches!(e, ExpertDistribution::Normal { mean, sigma } if *mean == 10.0 && (1.0..=2.0).contains(sigma)));
        }
    }

    #[test]
    fn population_ranges() {
        let (_, pop) = generate(&ScenarioSpec::new(ScenarioKind::Normal2, 50, 1, 3)).unwrap();
        assert!(pop.experts.iter().all(|e| matches!(e, ExpertDistribution::Normal { mean, sigma } if *mean == 10.0 && (1.0..=7.0).contains(sigma))));
        let (_, pop) = generate(&ScenarioSpec::new(ScenarioKind::Normal3, 50, 1, 3)).unwrap();
        assert!(pop.experts.iter().all(|e| matches!(e, ExpertDistribution::Normal { mean, sigma } if (8.0..=12.0).contains(mean) && (1.0..=2.0).contains(sigma))));
    }

    #[test]
    fn exp_outcome_mean() {
        let (p, _) = generate(&ScenarioSpec::new(ScenarioKind::Exp, 3, 10_000, 5)).unwrap();
        let (mean, _) = mean_sd(p.outcomes());
        assert!((mean - 10.0).abs() < 0.4, "{mean}");
        assert!(p.outcomes().iter().all(|&x| x > 0.0));
        assert!((0..3).all(|i| p.forecasts_of(i).iter().all(|&y| y > 0.0)));
    }

    #[test]
    fn split_examples() {
        let (p, _) = generate(&ScenarioSpec::new(ScenarioKind::Normal1, 4, 10, 9)).unwrap();
        let (train, test) = split_profile(&p, 7, 3).unwrap();
        assert_eq!((train.n_experts(), train.n_rounds(), test.n_rounds()), (4, 7, 3));
        assert_eq!(test.outcomes(), &p.outcomes()[7..]);
        assert_eq!(train.forecasts_of(2), &p.forecasts_of(2)[..7]);
        assert!(split_profile(&p, 10, 0).is_err());
        assert!(split_profile(&p, 8, 3).is_err());
        let direct = sse_team(&p.select_rounds(7, 10).unwrap(), &[0, 3]).unwrap();
        assert_eq!(sse_team(&test, &[0, 3]).unwrap(), direct);
    }

    #[test]
    fn kind_names_round_trip() {
        for k in ScenarioKind::ALL {
            assert_eq!(k.name().parse::<ScenarioKind>().unwrap(), k);
        }
        assert!("normal4".parse::<ScenarioKind>().is_err());
    }
}
