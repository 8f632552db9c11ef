use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{ensure_dim, Error, Result};
use crate::linalg::{dot_slices, Matrix, Point};

/// Power-iteration settings for the operator norm.
const NORM_REL_TOL: f64 = 1e-10;
const NORM_MAX_ITER: usize = 10_000;

/// Serializable description of a catalog cocoercive operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CocoerciveSpec {
    /// Bw = Mw + shift with M symmetric positive semidefinite.
    AffineSpd {
        matrix: Matrix,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        shift: Option<Vec<f64>>,
    },
    /// Bw = Mw + shift with (M + Mᵀ)/2 positive definite (M need not be symmetric).
    AffineMonotone {
        matrix: Matrix,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        shift: Option<Vec<f64>>,
    },
    /// Gradient of (L/2)‖w − center‖², i.e. Bw = L(w − center).
    GradientQuadratic { curvature: f64, center: Vec<f64> },
    /// Gradient of (1/2m)‖Xw − y‖², i.e. Bw = Xᵀ(Xw − y)/m.
    GradientLeastSquares { design: Matrix, targets: Vec<f64> },
    /// Gradient of (1/m) Σ log(1 + exp(−yᵢ⟨xᵢ, w⟩)) with labels yᵢ ∈ {−1, 1}.
    GradientLogistic { design: Matrix, labels: Vec<f64> },
}

pub type OperatorFn = dyn Fn(&Point) -> Point + Send + Sync;

/// A user-supplied cocoercive operator with declared constants. Not serializable.
#[derive(Clone)]
pub struct CustomCocoercive {
    pub name: String,
    pub dim: usize,
    pub beta: f64,
    pub mu: f64,
    pub apply: Arc<OperatorFn>,
}

impl fmt::Debug for CustomCocoercive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomCocoercive")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("beta", &self.beta)
            .field("mu", &self.mu)
            .finish_non_exhaustive()
    }
}

/// Bw = matrix·w + shift.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    pub matrix: Matrix,
    pub shift: Vec<f64>,
}

impl AffineMap {
    pub fn apply(&self, w: &[f64]) -> Vec<f64> {
        let mut out = self.matrix.matvec(w);
        out.iter_mut().zip(&self.shift).for_each(|(o, s)| *o += s);
        out
    }
}

#[derive(Debug, Clone)]
enum Inner {
    Catalog {
        spec: CocoerciveSpec,
        /// Affine representation, when the kind is affine.
        affine: Option<AffineMap>,
    },
    Custom(CustomCocoercive),
}

/// A single-valued β-cocoercive operator B:
/// ⟨w − y, Bw − By⟩ ≥ β‖Bw − By‖² for all w, y.
#[derive(Debug, Clone)]
pub struct CocoerciveOperator {
    inner: Inner,
    dim: usize,
    beta: f64,
    mu: f64,
}

impl CocoerciveOperator {
    pub fn from_spec(spec: CocoerciveSpec) -> Result<Self> {
        let (dim, beta, mu, affine) = match &spec {
            CocoerciveSpec::AffineSpd { matrix, shift } => {
                let shift = check_square_and_shift(matrix, shift.as_deref())?;
                let scale = matrix.operator_norm(NORM_REL_TOL, NORM_MAX_ITER).max(1.0);
                if !matrix.is_symmetric(1e-12 * scale) {
                    return Err(Error::param(
                        "matrix",
                        "affine_spd requires a symmetric matrix",
                    ));
                }
                let eig = matrix.symmetric_eigenvalues();
                let (lo, hi) = (eig[0], eig[eig.len() - 1]);
                if lo < -1e-12 * scale {
                    return Err(Error::param(
                        "matrix",
                        format!("not positive semidefinite (smallest eigenvalue {lo})"),
                    ));
                }
                if hi <= 0.0 {
                    return Err(Error::param(
                        "matrix",
                        "zero matrix has no finite cocoercivity constant",
                    ));
                }
                let affine = AffineMap {
                    matrix: matrix.clone(),
                    shift,
                };
                (matrix.rows(), 1.0 / hi, lo.max(0.0), Some(affine))
            }
            CocoerciveSpec::AffineMonotone { matrix, shift } => {
                let shift = check_square_and_shift(matrix, shift.as_deref())?;
                let lo = matrix.symmetric_part().symmetric_eigenvalues()[0];
                let norm = matrix.operator_norm(NORM_REL_TOL, NORM_MAX_ITER);
                if lo <= 1e-12 * norm.max(1.0) {
                    return Err(Error::param(
                        "matrix",
                        format!(
                            "symmetric part must be positive definite for cocoercivity \
                             (smallest eigenvalue {lo})"
                        ),
                    ));
                }
                let affine = AffineMap {
                    matrix: matrix.clone(),
                    shift,
                };
                (matrix.rows(), lo / (norm * norm), lo, Some(affine))
            }
            CocoerciveSpec::GradientQuadratic { curvature, center } => {
                if !(curvature.is_finite() && *curvature > 0.0) {
                    return Err(Error::param("curvature", "must be positive and finite"));
                }
                let center = Point::new(center.clone())?;
                let d = center.dim();
                let affine = AffineMap {
                    matrix: Matrix::scaled_identity(d, *curvature),
                    shift: center.as_slice().iter().map(|c| -curvature * c).collect(),
                };
                (d, 1.0 / curvature, *curvature, Some(affine))
            }
            CocoerciveSpec::GradientLeastSquares { design, targets } => {
                ensure_dim(design.rows(), targets.len())?;
                if targets.iter().any(|y| !y.is_finite()) {
                    return Err(Error::NonFinite("targets"));
                }
                let m = design.rows() as f64;
                let hessian = design.gram(1.0 / m);
                let eig = hessian.symmetric_eigenvalues();
                let hi = eig[eig.len() - 1];
                if hi <= 0.0 {
                    return Err(Error::param("design", "all-zero design matrix"));
                }
                let shift: Vec<f64> = design.tmatvec(targets).iter().map(|v| -v / m).collect();
                let affine = AffineMap {
                    matrix: hessian,
                    shift,
                };
                (design.cols(), 1.0 / hi, eig[0].max(0.0), Some(affine))
            }
            CocoerciveSpec::GradientLogistic { design, labels } => {
                ensure_dim(design.rows(), labels.len())?;
                if labels.iter().any(|&y| y != 1.0 && y != -1.0) {
                    return Err(Error::param("labels", "labels must be -1 or 1"));
                }
                let m = design.rows() as f64;
                let eig = design.gram(1.0 / m).symmetric_eigenvalues();
                let smooth = 0.25 * eig[eig.len() - 1];
                if smooth <= 0.0 {
                    return Err(Error::param("design", "all-zero design matrix"));
                }
                (design.cols(), 1.0 / smooth, 0.0, None)
            }
        };
        Ok(CocoerciveOperator {
            inner: Inner::Catalog { spec, affine },
            dim,
            beta,
            mu,
        })
    }

    pub fn custom(custom: CustomCocoercive) -> Result<Self> {
        if !(custom.beta.is_finite() && custom.beta > 0.0) {
            return Err(Error::param("beta", "must be positive and finite"));
        }
        if !(custom.mu.is_finite() && custom.mu >= 0.0) {
            return Err(Error::param("mu", "must be finite and nonnegative"));
        }
        if custom.dim == 0 {
            return Err(Error::param("dim", "must be positive"));
        }
        Ok(CocoerciveOperator {
            dim: custom.dim,
            beta: custom.beta,
            mu: custom.mu,
            inner: Inner::Custom(custom),
        })
    }

    /// Identity map on ℝ^d (β = μ = 1).
    pub fn identity(dim: usize) -> Self {
        Self::from_spec(CocoerciveSpec::GradientQuadratic {
            curvature: 1.0,
            center: vec![0.0; dim],
        })
        .expect("identity is valid")
    }

    pub fn affine_monotone(matrix: Matrix, shift: Option<Vec<f64>>) -> Result<Self> {
        Self::from_spec(CocoerciveSpec::AffineMonotone { matrix, shift })
    }

    pub fn gradient_quadratic(curvature: f64, center: Vec<f64>) -> Result<Self> {
        Self::from_spec(CocoerciveSpec::GradientQuadratic { curvature, center })
    }

    pub fn least_squares(design: Matrix, targets: Vec<f64>) -> Result<Self> {
        Self::from_spec(CocoerciveSpec::GradientLeastSquares { design, targets })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Cocoercivity constant β.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Strong monotonicity modulus μ (0 when B is merely monotone).
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Every catalog kind is finite dimensional and continuous, hence weakly continuous.
    pub fn weakly_continuous(&self) -> bool {
        true
    }

    pub fn kind_name(&self) -> &str {
        match &self.inner {
            Inner::Catalog { spec, .. } => match spec {
                CocoerciveSpec::AffineSpd { .. } => "affine_spd",
                CocoerciveSpec::AffineMonotone { .. } => "affine_monotone",
                CocoerciveSpec::GradientQuadratic { .. } => "gradient_quadratic",
                CocoerciveSpec::GradientLeastSquares { .. } => "gradient_least_squares",
                CocoerciveSpec::GradientLogistic { .. } => "gradient_logistic",
            },
            Inner::Custom(c) => &c.name,
        }
    }

    pub fn spec(&self) -> Option<&CocoerciveSpec> {
        match &self.inner {
            Inner::Catalog { spec, .. } => Some(spec),
            Inner::Custom(_) => None,
        }
    }

    pub fn as_affine(&self) -> Option<&AffineMap> {
        match &self.inner {
            Inner::Catalog { affine, .. } => affine.as_ref(),
            Inner::Custom(_) => None,
        }
    }

    /// True when B is the gradient of a convex L-smooth function with L = 1/β.
    pub fn is_gradient(&self) -> bool {
        match self.spec() {
            Some(CocoerciveSpec::AffineMonotone { matrix, .. }) => matrix.is_symmetric(1e-12),
            Some(_) => true,
            None => false,
        }
    }

    pub fn apply(&self, w: &Point) -> Result<Point> {
        ensure_dim(self.dim, w.dim())?;
        let out = self.apply_unchecked(w);
        if let Inner::Custom(_) = self.inner {
            ensure_dim(self.dim, out.dim())?;
            out.check_finite("custom operator output")?;
        }
        Ok(out)
    }

    pub(crate) fn apply_unchecked(&self, w: &Point) -> Point {
        match &self.inner {
            Inner::Catalog {
                affine: Some(map), ..
            } => Point::from_vec(map.apply(w.as_slice())),
            Inner::Catalog {
                spec: CocoerciveSpec::GradientLogistic { design, labels },
                ..
            } => {
                let m = design.rows() as f64;
                let mut g = vec![0.0; design.cols()];
                for (i, &y) in labels.iter().enumerate() {
                    let row = design.row(i);
                    let margin = y * dot_slices(row, w.as_slice());
                    // d/dw log(1 + e^{−margin}) = −y·x / (1 + e^{margin})
                    let coef = -y / (1.0 + margin.exp()) / m;
                    g.iter_mut().zip(row).for_each(|(gj, xj)| *gj += coef * xj);
                }
                Point::from_vec(g)
            }
            Inner::Catalog { .. } => unreachable!("non-affine catalog kinds are handled above"),
            Inner::Custom(c) => (c.apply)(w),
        }
    }
}

/// β of a cocoercive operator: λ_min((M+Mᵀ)/2)/‖M‖² for general monotone
/// affine maps, 1/L for gradients of L-smooth convex functions.
pub fn beta_of(b: &CocoerciveOperator) -> f64 {
    b.beta()
}

fn check_square_and_shift(matrix: &Matrix, shift: Option<&[f64]>) -> Result<Vec<f64>> {
    if !matrix.is_square() {
        return Err(Error::param("matrix", "must be square"));
    }
    match shift {
        Some(s) => {
            ensure_dim(matrix.rows(), s.len())?;
            if s.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("shift"));
            }
            Ok(s.to_vec())
        }
        None => Ok(vec![0.0; matrix.rows()]),
    }
}

impl Serialize for CocoerciveOperator {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self.spec() {
            Some(spec) => spec.serialize(serializer),
            None => Err(serde::ser::Error::custom(
                "custom cocoercive operators cannot be serialized",
            )),
        }
    }
}

impl<'de> Deserialize<'de> for CocoerciveOperator {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let spec = CocoerciveSpec::deserialize(deserializer)?;
        CocoerciveOperator::from_spec(spec).map_err(serde::de::Error::custom)
    }
}
