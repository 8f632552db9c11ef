//! Closed-form non-asymptotic bounds on sₙ = E‖wₙ − w̄‖² under power-law
//! step sizes γₙ = c₁n^(−θ), and the Chung-type recursion they rest on:
//!
//! s_{n+1} ≤ (1 − ηₙ)sₙ + τηₙ²,  ηₙ = c·n^(−θ).

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracles::StochasticOracle;
use crate::problem::InclusionProblem;
use crate::solver::Schedule;

/// φ_c(t) = (t^c − 1)/c, with φ₀(t) = log t.
pub fn phi(c: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("phi requires t > 0, got {t}")));
    }
    if c == 0.0 {
        return Ok(t.ln());
    }
    // expm1 keeps the value continuous as c → 0.
    Ok((c * t.ln()).exp_m1() / c)
}

/// exp(x) clamped to 0 below underflow.
fn exp_clamped(x: f64) -> f64 {
    if x < -745.0 {
        0.0
    } else {
        x.exp()
    }
}

/// Which form of the factor multiplying μ in c.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MuFactor {
    /// c = c₁λ̲(2ν + με)/(1 + ν)²
    #[default]
    Statement,
    /// c = c₁λ̲(2ν + 2με)/(1 + ν)²
    Proof,
}

/// Which power of ‖Bw̄‖ enters τ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauNorm {
    /// τ = 2σ²c₁²(1 + ᾱ‖Bw̄‖²)/c²
    #[default]
    Squared,
    /// τ = 2σ²c₁²(1 + ᾱ‖Bw̄‖)/c²
    FirstPower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConstantsVariant {
    #[serde(default)]
    pub mu_factor: MuFactor,
    #[serde(default)]
    pub tau_norm: TauNorm,
}

/// Inputs of the rate bounds. The derived quantities t, c, τ and n₀ are
/// methods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateConstants {
    pub theta: f64,
    pub c1: f64,
    pub lambda_lower: f64,
    pub nu: f64,
    pub mu: f64,
    pub epsilon: f64,
    pub sigma: f64,
    pub alpha_bar: f64,
    pub b_at_solution_norm: f64,
    #[serde(default)]
    pub variant: ConstantsVariant,
}

impl RateConstants {
    pub fn validate(&self) -> Result<()> {
        let checks: [(&'static str, bool, &str); 8] = [
            (
                "theta",
                self.theta > 0.0 && self.theta <= 1.0,
                "must lie in (0, 1]",
            ),
            (
                "c1",
                self.c1 > 0.0 && self.c1.is_finite(),
                "must be positive",
            ),
            (
                "lambda_lower",
                self.lambda_lower > 0.0 && self.lambda_lower <= 1.0,
                "must lie in (0, 1]",
            ),
            (
                "nu",
                self.nu >= 0.0
                    && self.mu >= 0.0
                    && self.nu + self.mu > 0.0
                    && (self.nu + self.mu).is_finite(),
                "nu and mu must be nonnegative with nu + mu > 0",
            ),
            (
                "epsilon",
                self.epsilon > 0.0 && self.epsilon < 2.0,
                "must lie in (0, 2)",
            ),
            (
                "sigma",
                self.sigma >= 0.0 && self.sigma.is_finite(),
                "must be nonnegative",
            ),
            (
                "alpha_bar",
                self.alpha_bar >= 0.0 && self.alpha_bar.is_finite(),
                "must be nonnegative",
            ),
            (
                "b_at_solution_norm",
                self.b_at_solution_norm >= 0.0 && self.b_at_solution_norm.is_finite(),
                "must be nonnegative",
            ),
        ];
        for (name, ok, reason) in checks {
            if !ok {
                return Err(Error::param(name, reason));
            }
        }
        Ok(())
    }

    /// Collects the constants of a concrete setup. Fails with
    /// `MissingConstants` listing whatever is unavailable: a power-law
    /// schedule, λ̲ > 0, strong monotonicity moduli and the solution.
    pub fn from_setup(
        p: &InclusionProblem,
        o: &StochasticOracle,
        s: &Schedule,
        epsilon: f64,
    ) -> Result<Self> {
        let mut missing = Vec::new();
        let pl = s.power_law_params();
        if pl.is_none() {
            missing.push("power-law step sizes (c1, theta)".to_string());
        }
        let lambda_lower = s.lambda_lower();
        if lambda_lower.is_none() {
            missing.push("positive lower bound on lambda".to_string());
        }
        let sm = p.strong_monotonicity();
        if sm.is_none() {
            missing.push("strong monotonicity moduli (nu, mu)".to_string());
        }
        let bw = p.b_at_solution_norm();
        if bw.is_none() {
            missing.push("known solution (for the norm of B at the solution)".to_string());
        }
        let (Some((c1, theta)), Some(lambda_lower), Some(sm), Some(bw)) =
            (pl, lambda_lower, sm, bw)
        else {
            return Err(Error::MissingConstants(missing));
        };
        let k = RateConstants {
            theta,
            c1,
            lambda_lower,
            nu: sm.nu,
            mu: sm.mu,
            epsilon,
            sigma: o.sigma(),
            alpha_bar: if o.is_exact() { 0.0 } else { o.alpha_bar() },
            b_at_solution_norm: bw,
            variant: ConstantsVariant::default(),
        };
        k.validate()?;
        Ok(k)
    }

    pub fn with_variant(mut self, variant: ConstantsVariant) -> Self {
        self.variant = variant;
        self
    }

    /// t = 1 − 2^(θ−1)
    pub fn t(&self) -> f64 {
        1.0 - (self.theta - 1.0).exp2()
    }

    pub fn c(&self) -> f64 {
        let mu_term = match self.variant.mu_factor {
            MuFactor::Statement => self.mu * self.epsilon,
            MuFactor::Proof => 2.0 * self.mu * self.epsilon,
        };
        self.c1 * self.lambda_lower * (2.0 * self.nu + mu_term) / (1.0 + self.nu).powi(2)
    }

    pub fn tau(&self) -> f64 {
        let b = match self.variant.tau_norm {
            TauNorm::Squared => self.b_at_solution_norm * self.b_at_solution_norm,
            TauNorm::FirstPower => self.b_at_solution_norm,
        };
        let c = self.c();
        2.0 * self.sigma * self.sigma * self.c1 * self.c1 * (1.0 + self.alpha_bar * b) / (c * c)
    }

    /// Smallest n₀ ≥ 2 with max{c, c₁}n^(−θ) ≤ 1 for all n ≥ n₀.
    pub fn n0(&self) -> usize {
        first_index_at_most_one(self.c().max(self.c1), self.theta)
    }
}

/// Smallest n ≥ 2 with a·n^(−θ) ≤ 1, computed in closed form and corrected
/// for rounding.
fn first_index_at_most_one(a: f64, theta: f64) -> usize {
    let ok = |n: usize| a * (n as f64).powf(-theta) <= 1.0;
    let mut n = a.powf(1.0 / theta).ceil().max(2.0) as usize;
    while !ok(n) {
        n += 1;
    }
    while n > 2 && ok(n - 1) {
        n -= 1;
    }
    n
}

/// Closed-form bound for θ < 1 on s_{n+1}, valid for n ≥ 2n₀.
pub fn lemma_bound_sub_linear(
    theta: f64,
    c: f64,
    tau: f64,
    n0: usize,
    s_n0: f64,
    n: usize,
) -> Result<f64> {
    check_range(n0, n)?;
    let one_m = 1.0 - theta;
    let t = 1.0 - (theta - 1.0).exp2();
    let nf = n as f64;
    let decay = -c * t * (nf + 1.0).powf(one_m) / one_m;
    let noise = tau * c * c * phi(1.0 - 2.0 * theta, nf)? * exp_clamped(decay);
    // Combined exponent avoids inf · 0 when c·n₀^(1−θ)/(1−θ) is large.
    let start = if s_n0 == 0.0 {
        0.0
    } else {
        s_n0 * exp_clamped(c * (n0 as f64).powf(one_m) / one_m + decay)
    };
    Ok(noise + start + tau * theta.exp2() * c / (nf - 2.0).powf(theta))
}

/// Closed-form bound for θ = 1 on s_{n+1}, valid for n ≥ 2n₀.
pub fn lemma_bound_linear(c: f64, tau: f64, n0: usize, s_n0: f64, n: usize) -> Result<f64> {
    check_range(n0, n)?;
    let nf = n as f64;
    let n0f = n0 as f64;
    let start = if s_n0 == 0.0 {
        0.0
    } else {
        s_n0 * exp_clamped(c * (n0f / (nf + 1.0)).ln())
    };
    // τc²(1 + 1/n₀)^c φ_{c−1}(n)/(n+1)^c evaluated in log space.
    let log_scale = c * ((1.0 + 1.0 / n0f).ln() - (nf + 1.0).ln());
    let noise = if tau == 0.0 {
        0.0
    } else if c == 1.0 {
        tau * exp_clamped(log_scale) * nf.ln()
    } else {
        let a = exp_clamped(log_scale + (c - 1.0) * nf.ln());
        let b = exp_clamped(log_scale);
        tau * c * c * (a - b) / (c - 1.0)
    };
    Ok(start + noise)
}

fn check_range(n0: usize, n: usize) -> Result<()> {
    if n < 2 * n0 {
        return Err(Error::OutOfRange { n, min: 2 * n0 });
    }
    Ok(())
}

/// Bound on s_{n+1} for θ ∈ (0, 1), n ≥ 2n₀.
pub fn est1_bound(k: &RateConstants, s_n0: f64, n: usize) -> Result<f64> {
    k.validate()?;
    check_start(s_n0)?;
    if k.theta >= 1.0 {
        return Err(Error::param("theta", "this bound requires theta < 1"));
    }
    lemma_bound_sub_linear(k.theta, k.c(), k.tau(), k.n0(), s_n0, n)
}

/// Bound on s_{n+1} for θ = 1, n ≥ 2n₀.
pub fn est11_bound(k: &RateConstants, s_n0: f64, n: usize) -> Result<f64> {
    k.validate()?;
    check_start(s_n0)?;
    if k.theta != 1.0 {
        return Err(Error::param("theta", "this bound requires theta = 1"));
    }
    lemma_bound_linear(k.c(), k.tau(), k.n0(), s_n0, n)
}

/// The matching bound for the constants' θ.
pub fn rate_bound(k: &RateConstants, s_n0: f64, n: usize) -> Result<f64> {
    if k.theta < 1.0 {
        est1_bound(k, s_n0, n)
    } else {
        est11_bound(k, s_n0, n)
    }
}

fn check_start(s_n0: f64) -> Result<()> {
    if !(s_n0 >= 0.0 && s_n0.is_finite()) {
        return Err(Error::param("s_n0", "must be finite and nonnegative"));
    }
    Ok(())
}

/// `n,bound` rows of the bound on s_{n+1} over `grid`; indices below 2n₀
/// are skipped.
pub fn bound_csv(k: &RateConstants, s_n0: f64, grid: &[usize]) -> Result<String> {
    let mut out = String::from("n,bound\n");
    for &n in grid {
        match rate_bound(k, s_n0, n) {
            Ok(b) => {
                let _ = writeln!(out, "{n},{b}");
            }
            Err(Error::OutOfRange { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Grid indices (at or after 2n₀) where the bound increases from the
/// previous grid point.
pub fn monotonicity_violations(k: &RateConstants, s_n0: f64, grid: &[usize]) -> Result<Vec<usize>> {
    let mut prev: Option<f64> = None;
    let mut out = Vec::new();
    for &n in grid.iter().filter(|&&n| n >= 2 * k.n0()) {
        let b = rate_bound(k, s_n0, n)?;
        if prev.is_some_and(|p| b > p) {
            out.push(n);
        }
        prev = Some(b);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AsymptoticClass {
    /// O(n^(−θ))
    NPowNegTheta,
    /// O(n^(−c))
    NPowNegC,
    /// O(n^(−1) log n)
    NInvLog,
    /// O(n^(−1))
    NInv,
}

impl AsymptoticClass {
    /// Exponent p of the leading n^(−p) factor (ignoring the log).
    pub fn exponent(self, k: &RateConstants) -> f64 {
        match self {
            AsymptoticClass::NPowNegTheta => k.theta,
            AsymptoticClass::NPowNegC => k.c(),
            AsymptoticClass::NInvLog | AsymptoticClass::NInv => 1.0,
        }
    }
}

pub fn asymptotic_class(k: &RateConstants) -> AsymptoticClass {
    if k.theta < 1.0 {
        return AsymptoticClass::NPowNegTheta;
    }
    let c = k.c();
    if (c - 1.0).abs() <= 1e-12 {
        AsymptoticClass::NInvLog
    } else if c < 1.0 {
        AsymptoticClass::NPowNegC
    } else {
        AsymptoticClass::NInv
    }
}

/// Parameters of the recursion s_{n+1} = (1 − ηₙ)sₙ + τηₙ², ηₙ = c·n^(−α).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChungParams {
    pub alpha: f64,
    pub c: f64,
    pub tau: f64,
    pub s_start: f64,
}

impl ChungParams {
    pub fn new(alpha: f64, c: f64, tau: f64, s_start: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::param("alpha", "must lie in (0, 1]"));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::param("c", "must be positive"));
        }
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(Error::param("tau", "must be nonnegative"));
        }
        check_start(s_start)?;
        Ok(ChungParams {
            alpha,
            c,
            tau,
            s_start,
        })
    }

    pub fn eta(&self, n: usize) -> f64 {
        self.c * (n as f64).powf(-self.alpha)
    }

    /// Smallest n₀ ≥ 2 with ηₙ ≤ 1 for n ≥ n₀.
    pub fn n0(&self) -> usize {
        first_index_at_most_one(self.c, self.alpha)
    }

    /// The closed-form bound on s_{n+1}, n ≥ 2n₀.
    pub fn bound(&self, n: usize) -> Result<f64> {
        if self.alpha < 1.0 {
            lemma_bound_sub_linear(self.alpha, self.c, self.tau, self.n0(), self.s_start, n)
        } else {
            lemma_bound_linear(self.c, self.tau, self.n0(), self.s_start, n)
        }
    }
}

/// The extremal sequence of the recursion with equality, started at n₀.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChungSequence {
    pub n0: usize,
    /// values[k] = s_{n₀+k}
    pub values: Vec<f64>,
}

impl ChungSequence {
    pub fn at(&self, n: usize) -> Option<f64> {
        self.values.get(n.checked_sub(self.n0)?).copied()
    }
}

/// s_{n₀} = s_start and s_{n+1} = (1 − ηₙ)sₙ + τηₙ² up to n_max.
pub fn chung_oracle(p: &ChungParams, n_max: usize) -> Result<ChungSequence> {
    let n0 = p.n0();
    if n_max < n0 {
        return Err(Error::OutOfRange { n: n_max, min: n0 });
    }
    let mut values = Vec::with_capacity(n_max - n0 + 1);
    let mut s = p.s_start;
    values.push(s);
    for n in n0..n_max {
        let eta = p.eta(n);
        s = (1.0 - eta) * s + p.tau * eta * eta;
        values.push(s);
    }
    Ok(ChungSequence { n0, values })
}
