use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Error, Result};
use crate::linalg::Point;
use crate::operators::{CocoerciveOperator, ResolventOperator};

/// Residual tolerance for accepting a supplied solution.
pub const SOLUTION_TOLERANCE: f64 = 1e-9;

/// Strong monotonicity moduli: A is ν-strongly monotone, B is μ-strongly
/// monotone (at the solution), with ν + μ > 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrongMonotonicity {
    pub nu: f64,
    pub mu: f64,
}

impl StrongMonotonicity {
    pub fn new(nu: f64, mu: f64) -> Result<Self> {
        if !(nu.is_finite() && mu.is_finite() && nu >= 0.0 && mu >= 0.0) {
            return Err(Error::param(
                "strong_monotonicity",
                "nu and mu must be finite and nonnegative",
            ));
        }
        if nu + mu <= 0.0 {
            return Err(Error::param("strong_monotonicity", "requires nu + mu > 0"));
        }
        Ok(StrongMonotonicity { nu, mu })
    }
}

/// Find w̄ with 0 ∈ Aw̄ + Bw̄.
#[derive(Debug, Clone)]
pub struct InclusionProblem {
    a: ResolventOperator,
    b: CocoerciveOperator,
    beta: f64,
    known_solution: Option<Point>,
    strong_monotonicity: Option<StrongMonotonicity>,
}

impl InclusionProblem {
    /// β is taken from B; strong monotonicity defaults to the catalog moduli
    /// of A and B when their sum is positive.
    pub fn new(a: ResolventOperator, b: CocoerciveOperator) -> Result<Self> {
        if let Some(d) = a.dim() {
            ensure_dim(b.dim(), d)?;
        }
        let beta = b.beta();
        let strong_monotonicity = StrongMonotonicity::new(a.strong_monotonicity(), b.mu()).ok();
        Ok(InclusionProblem {
            a,
            b,
            beta,
            known_solution: None,
            strong_monotonicity,
        })
    }

    /// Attaches a solution after checking ‖w̄ − J_{βA}(w̄ − βBw̄)‖ ≤ 1e−9.
    pub fn with_solution(mut self, solution: Point) -> Result<Self> {
        ensure_dim(self.dim(), solution.dim())?;
        let residual = fixed_point_residual(&self, &solution, self.beta)?;
        if residual > SOLUTION_TOLERANCE {
            return Err(Error::param(
                "known_solution",
                format!("fixed-point residual {residual:e} exceeds {SOLUTION_TOLERANCE:e}"),
            ));
        }
        self.known_solution = Some(solution);
        Ok(self)
    }

    /// Overrides the strong monotonicity moduli.
    pub fn with_strong_monotonicity(mut self, nu: f64, mu: f64) -> Result<Self> {
        self.strong_monotonicity = Some(StrongMonotonicity::new(nu, mu)?);
        Ok(self)
    }

    /// Overrides β with a smaller (still valid) constant.
    pub fn with_beta(mut self, beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta <= self.b.beta()) {
            return Err(Error::param(
                "beta",
                format!("must lie in (0, {}] for this operator", self.b.beta()),
            ));
        }
        self.beta = beta;
        Ok(self)
    }

    pub fn a(&self) -> &ResolventOperator {
        &self.a
    }

    pub fn b(&self) -> &CocoerciveOperator {
        &self.b
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn dim(&self) -> usize {
        self.b.dim()
    }

    pub fn known_solution(&self) -> Option<&Point> {
        self.known_solution.as_ref()
    }

    pub fn strong_monotonicity(&self) -> Option<StrongMonotonicity> {
        self.strong_monotonicity
    }

    /// ‖Bw̄‖, when the solution is known.
    pub fn b_at_solution_norm(&self) -> Option<f64> {
        self.known_solution
            .as_ref()
            .map(|s| self.b.apply_unchecked(s).norm())
    }
}

/// ‖w − J_{γA}(w − γBw)‖, zero exactly on zer(A + B).
pub fn fixed_point_residual(p: &InclusionProblem, w: &Point, gamma: f64) -> Result<f64> {
    let bw = p.b.apply(w)?;
    let y = p.a.resolvent(gamma, &w.axpy(-gamma, &bw))?;
    Ok(w.dist(&y))
}
