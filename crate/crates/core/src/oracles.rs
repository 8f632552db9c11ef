//! Stochastic estimates 𝔅 of Bw satisfying
//! E[𝔅 | w] = Bw and E[‖𝔅 − Bw‖² | w] ≤ σ²(1 + αₙ‖Bw‖²).
//!
//! Gaussian noise is scaled so that the total (not per-coordinate) second
//! moment matches the declared bound exactly: each coordinate receives
//! variance σ²(1 + αₙ‖Bw‖²)/d.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Error, Result};
use crate::linalg::{Matrix, Point};
use crate::operators::{AffineMap, CocoerciveOperator, CocoerciveSpec};
use crate::random::RandomStream;

/// The sequence (αₙ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlphaSeq {
    Constant(f64),
    /// α₁, α₂, …; the last entry repeats past the end.
    Explicit(Vec<f64>),
}

impl AlphaSeq {
    pub fn at(&self, n: usize) -> f64 {
        match self {
            AlphaSeq::Constant(a) => *a,
            AlphaSeq::Explicit(v) => v[n.saturating_sub(1).min(v.len() - 1)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleParams {
    pub sigma: f64,
    pub alpha: AlphaSeq,
    pub alpha_bar: f64,
}

impl OracleParams {
    pub fn new(sigma: f64, alpha_bar: f64) -> Result<Self> {
        let p = OracleParams {
            sigma,
            alpha: AlphaSeq::Constant(alpha_bar),
            alpha_bar,
        };
        p.validate(true)?;
        Ok(p)
    }

    pub fn with_alpha_seq(mut self, alpha: Vec<f64>) -> Result<Self> {
        self.alpha = AlphaSeq::Explicit(alpha);
        self.validate(true)?;
        Ok(self)
    }

    fn validate(&self, need_positive_sigma: bool) -> Result<()> {
        let sigma_ok = if need_positive_sigma {
            self.sigma > 0.0
        } else {
            self.sigma >= 0.0
        };
        if !(self.sigma.is_finite() && sigma_ok) {
            return Err(Error::param("sigma", "must be positive and finite"));
        }
        if !(self.alpha_bar.is_finite() && self.alpha_bar >= 0.0) {
            return Err(Error::param("alpha_bar", "must be finite and nonnegative"));
        }
        let values: &[f64] = match &self.alpha {
            AlphaSeq::Constant(a) => std::slice::from_ref(a),
            AlphaSeq::Explicit(v) if v.is_empty() => {
                return Err(Error::param("alpha", "explicit sequence is empty"))
            }
            AlphaSeq::Explicit(v) => v,
        };
        for (k, &a) in values.iter().enumerate() {
            if !(a.is_finite() && a >= 0.0) {
                return Err(Error::param(
                    "alpha",
                    format!("alpha[{k}] = {a} is not a nonnegative number"),
                ));
            }
            if a > self.alpha_bar {
                return Err(Error::param(
                    "alpha",
                    format!("alpha[{k}] = {a} exceeds alpha_bar = {}", self.alpha_bar),
                ));
            }
        }
        Ok(())
    }
}

/// One summand b(·, yᵢ)(w) = Mᵢw + qᵢ of a finite-sum operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineComponent {
    pub matrix: Matrix,
    pub shift: Vec<f64>,
}

impl AffineComponent {
    /// w ↦ w − center.
    pub fn shifted_identity(center: &[f64]) -> Self {
        AffineComponent {
            matrix: Matrix::identity(center.len()),
            shift: center.iter().map(|c| -c).collect(),
        }
    }

    fn apply(&self, w: &[f64]) -> Vec<f64> {
        let mut out = self.matrix.matvec(w);
        out.iter_mut().zip(&self.shift).for_each(|(o, s)| *o += s);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "noise_model", rename_all = "snake_case")]
pub enum NoiseModel {
    /// 𝔅 = Bw; reduces the iteration to deterministic forward-backward.
    Exact,
    /// 𝔅 = Bw + ξ with E‖ξ‖² = σ².
    AdditiveGaussian,
    /// 𝔅 = Bw + ξ with E‖ξ‖² = σ²(1 + αₙ‖Bw‖²).
    RelativeGaussian,
    /// 𝔅 = b(w, yᵢ) with i drawn uniformly; B is the component average.
    FiniteSumSampling { components: Vec<AffineComponent> },
}

#[derive(Debug, Clone)]
pub struct StochasticOracle {
    base: CocoerciveOperator,
    noise: NoiseModel,
    params: OracleParams,
    /// Actual Gaussian scale when it differs from the declared σ (misdeclared
    /// oracles used as negative controls).
    true_sigma: Option<f64>,
}

impl StochasticOracle {
    pub fn exact(base: CocoerciveOperator) -> Self {
        StochasticOracle {
            base,
            noise: NoiseModel::Exact,
            params: OracleParams {
                sigma: 0.0,
                alpha: AlphaSeq::Constant(0.0),
                alpha_bar: 0.0,
            },
            true_sigma: None,
        }
    }

    pub fn additive_gaussian(base: CocoerciveOperator, params: OracleParams) -> Result<Self> {
        Self::new(base, NoiseModel::AdditiveGaussian, params)
    }

    pub fn relative_gaussian(base: CocoerciveOperator, params: OracleParams) -> Result<Self> {
        Self::new(base, NoiseModel::RelativeGaussian, params)
    }

    /// Builds B as the average of the components; one component is drawn per sample.
    pub fn finite_sum(components: Vec<AffineComponent>, params: OracleParams) -> Result<Self> {
        let base = average_operator(&components)?;
        Self::new(base, NoiseModel::FiniteSumSampling { components }, params)
    }

    pub fn new(base: CocoerciveOperator, noise: NoiseModel, params: OracleParams) -> Result<Self> {
        if let NoiseModel::Exact = noise {
            return Ok(Self::exact(base));
        }
        params.validate(true)?;
        if let NoiseModel::FiniteSumSampling { components } = &noise {
            if components.is_empty() {
                return Err(Error::param(
                    "components",
                    "finite sum needs at least one component",
                ));
            }
            for c in components {
                ensure_dim(base.dim(), c.matrix.rows())?;
                ensure_dim(base.dim(), c.matrix.cols())?;
                ensure_dim(base.dim(), c.shift.len())?;
            }
        }
        Ok(StochasticOracle {
            base,
            noise,
            params,
            true_sigma: None,
        })
    }

    /// Same oracle, but Gaussian noise is drawn at `true_sigma` while σ stays declared.
    pub fn with_true_sigma(mut self, true_sigma: f64) -> Result<Self> {
        if !matches!(
            self.noise,
            NoiseModel::AdditiveGaussian | NoiseModel::RelativeGaussian
        ) {
            return Err(Error::param(
                "true_sigma",
                "only Gaussian oracles can be misdeclared",
            ));
        }
        if !(true_sigma.is_finite() && true_sigma >= 0.0) {
            return Err(Error::param("true_sigma", "must be finite and nonnegative"));
        }
        self.true_sigma = Some(true_sigma);
        Ok(self)
    }

    pub fn base(&self) -> &CocoerciveOperator {
        &self.base
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn params(&self) -> &OracleParams {
        &self.params
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.noise, NoiseModel::Exact)
    }

    /// Declared σ; zero for the exact oracle.
    pub fn sigma(&self) -> f64 {
        if self.is_exact() {
            0.0
        } else {
            self.params.sigma
        }
    }

    pub fn alpha(&self, n: usize) -> f64 {
        self.params.alpha.at(n)
    }

    pub fn alpha_bar(&self) -> f64 {
        self.params.alpha_bar
    }

    /// σ²(1 + αₙ‖Bw‖²) given ‖Bw‖².
    pub fn declared_variance(&self, bw_norm_sq: f64, n: usize) -> f64 {
        let s = self.sigma();
        s * s * (1.0 + self.alpha(n) * bw_norm_sq)
    }

    /// One draw of 𝔅 at w for iteration n (n selects αₙ).
    pub fn sample(&self, w: &Point, n: usize, stream: &mut RandomStream) -> Result<Point> {
        ensure_dim(self.base.dim(), w.dim())?;
        Ok(self.sample_unchecked(w, n, stream))
    }

    pub(crate) fn sample_unchecked(&self, w: &Point, n: usize, stream: &mut RandomStream) -> Point {
        match &self.noise {
            NoiseModel::Exact => self.base.apply_unchecked(w),
            NoiseModel::AdditiveGaussian => {
                let bw = self.base.apply_unchecked(w);
                let s = self.true_sigma.unwrap_or(self.params.sigma);
                add_gaussian(bw, s * s, stream)
            }
            NoiseModel::RelativeGaussian => {
                let bw = self.base.apply_unchecked(w);
                let s = self.true_sigma.unwrap_or(self.params.sigma);
                let total = s * s * (1.0 + self.alpha(n) * bw.norm_sq());
                add_gaussian(bw, total, stream)
            }
            NoiseModel::FiniteSumSampling { components } => {
                let i = stream.index(components.len());
                Point::from_vec(components[i].apply(w.as_slice()))
            }
        }
    }
}

/// Adds noise with total second moment `total_variance`, split evenly over coordinates.
fn add_gaussian(mut center: Point, total_variance: f64, stream: &mut RandomStream) -> Point {
    let scale = (total_variance / center.dim() as f64).sqrt();
    let noise = Point::from_vec(
        (0..center.dim())
            .map(|_| stream.standard_normal())
            .collect(),
    );
    center.add_scaled_in_place(scale, &noise);
    center
}

fn average_operator(components: &[AffineComponent]) -> Result<CocoerciveOperator> {
    let first = components
        .first()
        .ok_or_else(|| Error::param("components", "finite sum needs at least one component"))?;
    let d = first.shift.len();
    let mut matrix = Matrix::zeros(d, d);
    let mut shift = vec![0.0; d];
    let inv = 1.0 / components.len() as f64;
    for c in components {
        if !c.matrix.is_square() {
            return Err(Error::param(
                "components",
                "component matrices must be square",
            ));
        }
        ensure_dim(d, c.matrix.rows())?;
        ensure_dim(d, c.shift.len())?;
        matrix.add_scaled(inv, &c.matrix);
        shift
            .iter_mut()
            .zip(&c.shift)
            .for_each(|(s, q)| *s += inv * q);
    }
    let spec = if matrix.is_symmetric(1e-14) {
        CocoerciveSpec::AffineSpd {
            matrix,
            shift: Some(shift),
        }
    } else {
        CocoerciveSpec::AffineMonotone {
            matrix,
            shift: Some(shift),
        }
    };
    CocoerciveOperator::from_spec(spec)
}

/// Exact E‖𝔅 − Bw‖² of a finite-sum oracle at w.
pub fn finite_sum_variance(components: &[AffineComponent], base: &AffineMap, w: &Point) -> f64 {
    let bw = base.apply(w.as_slice());
    components
        .iter()
        .map(|c| {
            c.apply(w.as_slice())
                .iter()
                .zip(&bw)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        })
        .sum::<f64>()
        / components.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointMoments {
    pub w: Point,
    pub b_norm: f64,
    pub bias_norm: f64,
    pub bias_tolerance: f64,
    pub empirical_variance: f64,
    pub declared_variance: f64,
    pub variance_ratio: f64,
    pub variance_ratio_tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub n_draws: usize,
    pub points: Vec<PointMoments>,
    pub pass: bool,
}

/// Empirically checks unbiasedness and the declared second-moment bound at
/// fixed points. A point passes when ‖mean − Bw‖ ≤ 5σ(1 + ‖Bw‖)/√N (plus a
/// rounding allowance N·eps·(1 + ‖Bw‖)) and
/// (empirical second moment)/(σ²(1 + ᾱ‖Bw‖²)) ≤ 1 + 5/√N.
pub fn verify_moments(
    oracle: &StochasticOracle,
    test_points: &[Point],
    n_draws: usize,
    stream: &mut RandomStream,
) -> Result<MomentReport> {
    if n_draws < 10_000 {
        return Err(Error::param("n_draws", "at least 10^4 draws are required"));
    }
    let root_n = (n_draws as f64).sqrt();
    let mut points = Vec::with_capacity(test_points.len());
    for w in test_points {
        ensure_dim(oracle.base.dim(), w.dim())?;
        let bw = oracle.base.apply_unchecked(w);
        let mut sum = Point::zeros(w.dim());
        let mut sq = 0.0;
        for _ in 0..n_draws {
            let draw = oracle.sample_unchecked(w, 1, stream);
            sq += draw.dist_sq(&bw);
            sum.add_scaled_in_place(1.0, &draw);
        }
        let mean = sum.scale(1.0 / n_draws as f64);
        let bias_norm = mean.dist(&bw);
        let b_norm = bw.norm();
        let sigma = oracle.sigma();
        // The last term absorbs rounding in the running sum, which matters
        // only when σ is zero.
        let bias_tolerance =
            5.0 * sigma / root_n * (1.0 + b_norm) + n_draws as f64 * f64::EPSILON * (1.0 + b_norm);
        let empirical_variance = sq / n_draws as f64;
        let declared_variance = sigma * sigma * (1.0 + oracle.alpha_bar() * b_norm * b_norm);
        let variance_ratio = if empirical_variance == 0.0 {
            0.0
        } else {
            empirical_variance / declared_variance
        };
        let variance_ratio_tolerance = 1.0 + 5.0 / root_n;
        let pass = bias_norm <= bias_tolerance && variance_ratio <= variance_ratio_tolerance;
        points.push(PointMoments {
            w: w.clone(),
            b_norm,
            bias_norm,
            bias_tolerance,
            empirical_variance,
            declared_variance,
            variance_ratio,
            variance_ratio_tolerance,
            pass,
        });
    }
    let pass = points.iter().all(|p| p.pass);
    Ok(MomentReport {
        n_draws,
        points,
        pass,
    })
}
