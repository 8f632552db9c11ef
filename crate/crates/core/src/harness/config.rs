use serde::{Deserialize, Serialize};

use crate::bounds::ConstantsVariant;
use crate::ergodic::VIProblem;
use crate::error::{Error, Result};
use crate::linalg::Point;
use crate::operators::{
    CocoerciveOperator, CocoerciveSpec, ConvexSet, ResolventOperator, ResolventSpec,
    SeparablePenalty,
};
use crate::oracles::{AlphaSeq, NoiseModel, OracleParams, StochasticOracle};
use crate::problem::{InclusionProblem, StrongMonotonicity};
use crate::solver::Schedule;

/// Default number of log-spaced record indices.
pub const DEFAULT_GRID_POINTS: usize = 30;
pub const DEFAULT_EPSILON: f64 = 0.5;
/// Horizon of the step-size checks when none is configured.
pub const DEFAULT_ASSUMPTION_HORIZON: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// 0 ∈ Aw + Bw with A given by its resolvent.
    Inclusion,
    /// Averaged method for a variational inequality over a bounded set.
    ErgodicVi,
    /// min L + G with B = ∇L and A = ∂G.
    CompositeMin,
    /// min L + Σ φₖ(wₖ) + (ν/2)‖w‖² with B = ∇L and a separable penalty.
    OrthobasisMin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemConfig {
    /// A (inclusion and composite_min); zero when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<ResolventSpec>,
    /// B; omitted when the oracle is a finite sum, whose average defines B.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<CocoerciveSpec>,
    /// C (ergodic_vi).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub set: Option<ConvexSet>,
    /// Separable penalty (orthobasis_min).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub penalty: Option<SeparablePenalty>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solution: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strong_monotonicity: Option<StrongMonotonicity>,
    /// A smaller cocoercivity constant than the one derived from B.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    #[serde(flatten)]
    pub noise: NoiseModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    /// (αₙ): a number or a list; defaults to α_bar.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<AlphaSeq>,
    #[serde(default)]
    pub alpha_bar: f64,
    /// Gaussian scale actually used when it should differ from the declared σ.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub true_sigma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub problem: ProblemConfig,
    pub oracle: OracleConfig,
    pub schedule: Schedule,
    pub w1: Vec<f64>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    pub n_steps: usize,
    pub n_replications: usize,
    pub master_seed: u64,
    /// Iterate indices at which statistics are kept; 30 log-spaced indices
    /// in [1, n_steps] when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_grid: Option<Vec<usize>>,
    /// Worker threads; all available cores when omitted, serial when 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    /// Supplied s_{n₀} for the bound; the empirical mean at n₀ otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_n0: Option<f64>,
    #[serde(default)]
    pub constants_variant: ConstantsVariant,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assumption_horizon: Option<usize>,
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

/// Everything needed to run replications of one configuration.
#[derive(Debug, Clone)]
pub struct Setup {
    pub mode: Mode,
    /// The inclusion solved (for ergodic_vi, with A the normal cone of C).
    pub problem: InclusionProblem,
    pub vi: Option<VIProblem>,
    pub oracle: StochasticOracle,
    pub schedule: Schedule,
    pub w1: Point,
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_steps == 0 {
            return Err(Error::config("n_steps", "must be at least 1"));
        }
        if self.n_replications == 0 {
            return Err(Error::config("n_replications", "must be at least 1"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 2.0) {
            return Err(Error::config("epsilon", "must lie in (0, 2)"));
        }
        if self.workers == Some(0) {
            return Err(Error::config("workers", "must be at least 1"));
        }
        if let Some(g) = &self.record_grid {
            if g.is_empty() {
                return Err(Error::config("record_grid", "must not be empty"));
            }
            if let Some(&n) = g.iter().find(|&&n| n == 0 || n > self.n_steps) {
                return Err(Error::config(
                    "record_grid",
                    format!("index {n} lies outside [1, n_steps]"),
                ));
            }
        }
        if let Some(s) = self.s_n0 {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::config("s_n0", "must be finite and nonnegative"));
            }
        }
        if self.assumption_horizon == Some(0) {
            return Err(Error::config("assumption_horizon", "must be at least 1"));
        }
        self.build().map(|_| ())
    }

    /// Sorted, deduplicated record indices.
    pub fn grid(&self) -> Vec<usize> {
        let mut g = match &self.record_grid {
            Some(g) => g.clone(),
            None => log_grid(1, self.n_steps, DEFAULT_GRID_POINTS),
        };
        g.sort_unstable();
        g.dedup();
        g
    }

    pub fn assumption_horizon(&self) -> usize {
        self.assumption_horizon
            .unwrap_or_else(|| self.n_steps.min(DEFAULT_ASSUMPTION_HORIZON))
    }

    /// Instantiates operators, oracle and schedule, naming the offending
    /// field on failure.
    pub fn build(&self) -> Result<Setup> {
        let oracle_cfg = &self.oracle;
        let b = match (&oracle_cfg.noise, &self.problem.b) {
            (NoiseModel::FiniteSumSampling { .. }, Some(_)) => {
                return Err(Error::config(
                    "problem.b",
                    "omit B for a finite-sum oracle; the component average defines it",
                ))
            }
            (NoiseModel::FiniteSumSampling { .. }, None) => None,
            (_, Some(spec)) => {
                Some(CocoerciveOperator::from_spec(spec.clone()).map_err(at("problem.b"))?)
            }
            (_, None) => return Err(Error::config("problem.b", "required")),
        };
        let oracle = self.build_oracle(b)?;
        let b = oracle.base().clone();

        let a = match self.mode {
            Mode::Inclusion | Mode::CompositeMin => match &self.problem.a {
                Some(spec) => {
                    ResolventOperator::from_spec(spec.clone()).map_err(at("problem.a"))?
                }
                None => ResolventOperator::zero(),
            },
            Mode::OrthobasisMin => {
                let pen = self.problem.penalty.clone().ok_or_else(|| {
                    Error::config("problem.penalty", "required in orthobasis_min mode")
                })?;
                ResolventOperator::separable(pen).map_err(at("problem.penalty"))?
            }
            Mode::ErgodicVi => {
                let set =
                    self.problem.set.clone().ok_or_else(|| {
                        Error::config("problem.set", "required in ergodic_vi mode")
                    })?;
                ResolventOperator::normal_cone(set).map_err(at("problem.set"))?
            }
        };
        if matches!(self.mode, Mode::CompositeMin | Mode::OrthobasisMin) {
            if !b.is_gradient() {
                return Err(Error::config(
                    "problem.b",
                    "must be a gradient operator in minimization modes",
                ));
            }
            if !a.is_subdifferential() {
                return Err(Error::config(
                    "problem.a",
                    "must be a subdifferential in minimization modes",
                ));
            }
        }
        let vi = match self.mode {
            Mode::ErgodicVi => Some(
                VIProblem::new(b.clone(), self.problem.set.clone().expect("checked above"))
                    .map_err(at("problem.set"))?,
            ),
            _ => None,
        };

        let mut problem = InclusionProblem::new(a, b).map_err(at("problem"))?;
        if let Some(beta) = self.problem.beta {
            problem = problem.with_beta(beta).map_err(at("problem.beta"))?;
        }
        if let Some(sm) = self.problem.strong_monotonicity {
            problem = problem
                .with_strong_monotonicity(sm.nu, sm.mu)
                .map_err(at("problem.strong_monotonicity"))?;
        }
        if let Some(sol) = &self.problem.solution {
            let sol = Point::new(sol.clone()).map_err(at("problem.solution"))?;
            problem = problem.with_solution(sol).map_err(at("problem.solution"))?;
        }
        let w1 = Point::new(self.w1.clone()).map_err(at("w1"))?;
        if w1.dim() != problem.dim() {
            return Err(Error::config(
                "w1",
                format!(
                    "dimension {} differs from the problem dimension {}",
                    w1.dim(),
                    problem.dim()
                ),
            ));
        }
        Ok(Setup {
            mode: self.mode,
            problem,
            vi,
            oracle,
            schedule: self.schedule.clone(),
            w1,
        })
    }

    fn build_oracle(&self, b: Option<CocoerciveOperator>) -> Result<StochasticOracle> {
        let c = &self.oracle;
        if let NoiseModel::Exact = c.noise {
            if c.true_sigma.is_some() {
                return Err(Error::config(
                    "oracle.true_sigma",
                    "not applicable to the exact oracle",
                ));
            }
            return Ok(StochasticOracle::exact(
                b.expect("B present for non finite-sum oracles"),
            ));
        }
        let sigma = c
            .sigma
            .ok_or_else(|| Error::config("oracle.sigma", "required for stochastic oracles"))?;
        let mut params = OracleParams::new(sigma, c.alpha_bar).map_err(at("oracle"))?;
        match &c.alpha {
            Some(AlphaSeq::Explicit(v)) => {
                params = params
                    .with_alpha_seq(v.clone())
                    .map_err(at("oracle.alpha"))?
            }
            Some(AlphaSeq::Constant(a)) => {
                if !(*a >= 0.0 && *a <= c.alpha_bar) {
                    return Err(Error::config("oracle.alpha", "must lie in [0, alpha_bar]"));
                }
                params.alpha = AlphaSeq::Constant(*a);
            }
            None => {}
        }
        let oracle = match (&c.noise, b) {
            (NoiseModel::FiniteSumSampling { components }, _) => {
                StochasticOracle::finite_sum(components.clone(), params)
                    .map_err(at("oracle.components"))?
            }
            (noise, Some(b)) => {
                StochasticOracle::new(b, noise.clone(), params).map_err(at("oracle"))?
            }
            (_, None) => unreachable!("B is only absent for finite sums"),
        };
        match c.true_sigma {
            Some(t) => oracle.with_true_sigma(t).map_err(at("oracle.true_sigma")),
            None => Ok(oracle),
        }
    }
}

/// Wraps an error as a configuration error for `field`.
fn at(field: &'static str) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::Config { .. } => e,
        other => Error::config(field, other.to_string()),
    }
}

/// Up to `points` distinct integers spread log-uniformly over [lo, hi],
/// always containing both ends.
pub fn log_grid(lo: usize, hi: usize, points: usize) -> Vec<usize> {
    let lo = lo.max(1);
    if hi <= lo || points <= 1 {
        return vec![hi.max(lo)];
    }
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut g: Vec<usize> = (0..points)
        .map(|k| {
            let x = a + (b - a) * k as f64 / (points - 1) as f64;
            (x.exp().round() as usize).clamp(lo, hi)
        })
        .collect();
    g[0] = lo;
    g[points - 1] = hi;
    g.dedup();
    g
}
