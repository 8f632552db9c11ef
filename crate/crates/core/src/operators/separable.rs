//! Separable penalties over the standard basis,
//! G(w) = Σ_k φ_k(w_k) + (ν/2) w_k².

use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Error, Result};
use crate::linalg::Point;

/// A scalar convex function with φ ≥ φ(0) = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalarPenalty {
    Zero,
    /// weight · |x|
    AbsWeighted {
        weight: f64,
    },
    /// (weight / 2) · x²
    SquareWeighted {
        weight: f64,
    },
    /// 0 on [lower, upper], +∞ elsewhere; requires lower ≤ 0 ≤ upper.
    IndicatorInterval {
        lower: f64,
        upper: f64,
    },
}

impl ScalarPenalty {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ScalarPenalty::Zero => Ok(()),
            ScalarPenalty::AbsWeighted { weight } | ScalarPenalty::SquareWeighted { weight } => {
                if weight.is_finite() && weight >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::param("weight", "must be finite and nonnegative"))
                }
            }
            ScalarPenalty::IndicatorInterval { lower, upper } => {
                if lower.is_nan() || upper.is_nan() || lower > 0.0 || upper < 0.0 {
                    Err(Error::param(
                        "indicator_interval",
                        format!("[{lower}, {upper}] must contain 0"),
                    ))
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match *self {
            ScalarPenalty::Zero => 0.0,
            ScalarPenalty::AbsWeighted { weight } => weight * x.abs(),
            ScalarPenalty::SquareWeighted { weight } => 0.5 * weight * x * x,
            ScalarPenalty::IndicatorInterval { lower, upper } => {
                if (lower..=upper).contains(&x) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// argmin_v step·φ(v) + ½(x − v)².
    pub fn prox(&self, step: f64, x: f64) -> f64 {
        match *self {
            ScalarPenalty::Zero => x,
            ScalarPenalty::AbsWeighted { weight } => soft_threshold(x, step * weight),
            ScalarPenalty::SquareWeighted { weight } => x / (1.0 + step * weight),
            ScalarPenalty::IndicatorInterval { lower, upper } => x.clamp(lower, upper),
        }
    }

    /// Closed interval outside which φ is +∞.
    pub fn domain(&self) -> (f64, f64) {
        match *self {
            ScalarPenalty::IndicatorInterval { lower, upper } => (lower, upper),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }
}

pub fn soft_threshold(x: f64, threshold: f64) -> f64 {
    if x > threshold {
        x - threshold
    } else if x < -threshold {
        x + threshold
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparablePenalty {
    pub per_coordinate: Vec<ScalarPenalty>,
    #[serde(default)]
    pub nu: f64,
}

impl SeparablePenalty {
    pub fn new(per_coordinate: Vec<ScalarPenalty>, nu: f64) -> Result<Self> {
        let p = SeparablePenalty { per_coordinate, nu };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.per_coordinate.is_empty() {
            return Err(Error::param("per_coordinate", "at least one coordinate"));
        }
        if !(self.nu.is_finite() && self.nu >= 0.0) {
            return Err(Error::param("nu", "must be finite and nonnegative"));
        }
        self.per_coordinate
            .iter()
            .try_for_each(ScalarPenalty::validate)
    }

    pub fn dim(&self) -> usize {
        self.per_coordinate.len()
    }

    /// G(w).
    pub fn value(&self, w: &Point) -> Result<f64> {
        ensure_dim(self.dim(), w.dim())?;
        Ok(self
            .per_coordinate
            .iter()
            .zip(w.as_slice())
            .map(|(phi, &x)| phi.value(x) + 0.5 * self.nu * x * x)
            .sum())
    }
}

/// Resolvent of γ∂G computed coordinatewise: the ν-quadratic is folded into
/// the step, y_k = prox_{γ/(1+νγ) φ_k}(z_k / (1+νγ)).
pub fn separable_prox_step(penalty: &SeparablePenalty, gamma: f64, z: &Point) -> Result<Point> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::param("gamma", "must be positive and finite"));
    }
    ensure_dim(penalty.dim(), z.dim())?;
    let denom = 1.0 + penalty.nu * gamma;
    let step = gamma / denom;
    Ok(Point::from_vec(
        penalty
            .per_coordinate
            .iter()
            .zip(z.as_slice())
            .map(|(phi, &zk)| phi.prox(step, zk / denom))
            .collect(),
    ))
}
