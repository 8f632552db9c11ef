use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GammaSchedule {
    /// γₙ = c₁ n^(−θ), θ ∈ (0, 1].
    PowerLaw {
        c1: f64,
        theta: f64,
    },
    Constant {
        value: f64,
    },
    /// γ₁, γ₂, …; the last value repeats past the end.
    Explicit {
        values: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LambdaSchedule {
    Constant {
        value: f64,
    },
    /// λ₁, λ₂, …; the last value repeats past the end.
    Explicit {
        values: Vec<f64>,
    },
}

impl Default for LambdaSchedule {
    fn default() -> Self {
        LambdaSchedule::Constant { value: 1.0 }
    }
}

/// Step sizes (γₙ) and relaxation parameters (λₙ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSchedule")]
pub struct Schedule {
    gamma: GammaSchedule,
    lambda: LambdaSchedule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lambda_lower: Option<f64>,
}

#[derive(Deserialize)]
struct RawSchedule {
    gamma: GammaSchedule,
    #[serde(default)]
    lambda: LambdaSchedule,
    #[serde(default)]
    lambda_lower: Option<f64>,
}

impl TryFrom<RawSchedule> for Schedule {
    type Error = Error;

    fn try_from(raw: RawSchedule) -> Result<Self> {
        Schedule::new(raw.gamma, raw.lambda, raw.lambda_lower)
    }
}

impl Schedule {
    pub fn new(
        gamma: GammaSchedule,
        lambda: LambdaSchedule,
        lambda_lower: Option<f64>,
    ) -> Result<Self> {
        match &gamma {
            GammaSchedule::PowerLaw { c1, theta } => {
                if !(c1.is_finite() && *c1 > 0.0) {
                    return Err(Error::param("c1", "must be positive and finite"));
                }
                if !(*theta > 0.0 && *theta <= 1.0) {
                    return Err(Error::param("theta", "must lie in (0, 1]"));
                }
            }
            GammaSchedule::Constant { value } => {
                if !(value.is_finite() && *value > 0.0) {
                    return Err(Error::param("gamma", "must be positive and finite"));
                }
            }
            GammaSchedule::Explicit { values } => {
                if values.is_empty() {
                    return Err(Error::param("gamma", "explicit sequence is empty"));
                }
                if let Some(k) = values.iter().position(|g| !(g.is_finite() && *g > 0.0)) {
                    return Err(Error::param(
                        "gamma",
                        format!("gamma[{k}] must be positive"),
                    ));
                }
            }
        }
        let lambdas: &[f64] = match &lambda {
            LambdaSchedule::Constant { value } => std::slice::from_ref(value),
            LambdaSchedule::Explicit { values } if values.is_empty() => {
                return Err(Error::param("lambda", "explicit sequence is empty"))
            }
            LambdaSchedule::Explicit { values } => values,
        };
        if let Some(k) = lambdas.iter().position(|l| !(0.0..=1.0).contains(l)) {
            return Err(Error::param(
                "lambda",
                format!("lambda[{k}] must lie in [0, 1]"),
            ));
        }
        if let Some(lo) = lambda_lower {
            if !(lo > 0.0 && lo <= 1.0) {
                return Err(Error::param("lambda_lower", "must lie in (0, 1]"));
            }
            if lambdas.iter().any(|&l| l < lo) {
                return Err(Error::param(
                    "lambda_lower",
                    "some lambda falls below the declared lower bound",
                ));
            }
        }
        Ok(Schedule {
            gamma,
            lambda,
            lambda_lower,
        })
    }

    /// γₙ = c₁ n^(−θ), λₙ ≡ 1.
    pub fn power_law(c1: f64, theta: f64) -> Result<Self> {
        Self::new(
            GammaSchedule::PowerLaw { c1, theta },
            LambdaSchedule::default(),
            None,
        )
    }

    /// γₙ ≡ γ, λₙ ≡ 1.
    pub fn constant(gamma: f64) -> Result<Self> {
        Self::new(
            GammaSchedule::Constant { value: gamma },
            LambdaSchedule::default(),
            None,
        )
    }

    pub fn with_lambda(self, lambda: LambdaSchedule) -> Result<Self> {
        Self::new(self.gamma, lambda, self.lambda_lower)
    }

    pub fn gamma_schedule(&self) -> &GammaSchedule {
        &self.gamma
    }

    pub fn lambda_schedule(&self) -> &LambdaSchedule {
        &self.lambda
    }

    /// γₙ for n ≥ 1.
    pub fn gamma(&self, n: usize) -> f64 {
        debug_assert!(n >= 1);
        match &self.gamma {
            GammaSchedule::PowerLaw { c1, theta } => c1 * (n as f64).powf(-theta),
            GammaSchedule::Constant { value } => *value,
            GammaSchedule::Explicit { values } => values[(n - 1).min(values.len() - 1)],
        }
    }

    /// λₙ for n ≥ 1.
    pub fn lambda(&self, n: usize) -> f64 {
        debug_assert!(n >= 1);
        match &self.lambda {
            LambdaSchedule::Constant { value } => *value,
            LambdaSchedule::Explicit { values } => values[(n - 1).min(values.len() - 1)],
        }
    }

    /// λ̲: the declared lower bound, or inf λₙ when none is declared
    /// (None when that infimum is 0).
    pub fn lambda_lower(&self) -> Option<f64> {
        if self.lambda_lower.is_some() {
            return self.lambda_lower;
        }
        let inf = match &self.lambda {
            LambdaSchedule::Constant { value } => *value,
            LambdaSchedule::Explicit { values } => {
                values.iter().copied().fold(f64::INFINITY, f64::min)
            }
        };
        (inf > 0.0).then_some(inf)
    }

    /// (c₁, θ) for power-law schedules.
    pub fn power_law_params(&self) -> Option<(f64, f64)> {
        match self.gamma {
            GammaSchedule::PowerLaw { c1, theta } => Some((c1, theta)),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_law_values() {
        let s = Schedule::power_law(2.0, 0.5).unwrap();
        assert_eq!(s.gamma(1), 2.0);
        assert_eq!(s.gamma(4), 1.0);
        assert_eq!(s.lambda(10), 1.0);
        for n in 1..1000 {
            assert!(s.gamma(n + 1) <= s.gamma(n) && s.gamma(n + 1) > 0.0);
        }
    }

    #[test]
    fn explicit_holds_last_value() {
        let s = Schedule::new(
            GammaSchedule::Explicit {
                values: vec![1.0, 0.5],
            },
            LambdaSchedule::Explicit {
                values: vec![0.3, 0.9],
            },
            None,
        )
        .unwrap();
        assert_eq!(s.gamma(5), 0.5);
        assert_eq!(s.lambda(1), 0.3);
        assert_eq!(s.lambda(5), 0.9);
        assert_eq!(s.lambda_lower(), Some(0.3));
    }

    #[test]
    fn validation() {
        assert!(Schedule::power_law(1.0, 0.0).is_err());
        assert!(Schedule::power_law(1.0, 1.5).is_err());
        assert!(Schedule::power_law(-1.0, 0.5).is_err());
        assert!(Schedule::constant(0.0).is_err());
        assert!(Schedule::constant(1.0)
            .unwrap()
            .with_lambda(LambdaSchedule::Constant { value: 1.2 })
            .is_err());
        assert!(Schedule::new(
            GammaSchedule::Constant { value: 1.0 },
            LambdaSchedule::Constant { value: 0.4 },
            Some(0.5)
        )
        .is_err());
        let zero_lambda = Schedule::constant(1.0)
            .unwrap()
            .with_lambda(LambdaSchedule::Constant { value: 0.0 })
            .unwrap();
        assert_eq!(zero_lambda.lambda_lower(), None);
    }

    #[test]
    fn serde_defaults_lambda() {
        let s: Schedule =
            serde_json::from_str(r#"{"gamma":{"kind":"power_law","c1":1.0,"theta":0.7}}"#).unwrap();
        assert_eq!(s.lambda(3), 1.0);
        assert!(serde_json::from_str::<Schedule>(
            r#"{"gamma":{"kind":"power_law","c1":1.0,"theta":2.0}}"#
        )
        .is_err());
    }
}
