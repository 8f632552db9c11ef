use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::separable::{separable_prox_step, soft_threshold, SeparablePenalty};
use super::sets::ConvexSet;
use crate::error::{ensure_dim, Error, Result};
use crate::linalg::Point;

/// Serializable description of a catalog maximal monotone operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ResolventSpec {
    /// A = 0, J = I.
    Zero,
    NormalConeBox {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    NormalConeBall {
        center: Vec<f64>,
        radius: f64,
    },
    /// A = a·I with a ≥ 0.
    ScaledIdentity {
        a: f64,
    },
    /// A = ∂(weight·‖·‖₁).
    SubdifferentialL1 {
        weight: f64,
    },
    /// A = ∂G for a separable G.
    SeparablePenalty(SeparablePenalty),
}

pub type ResolventFn = dyn Fn(f64, &Point) -> Point + Send + Sync;

/// A user-supplied resolvent. Not serializable.
#[derive(Clone)]
pub struct CustomResolvent {
    pub name: String,
    pub dim: Option<usize>,
    /// Strong monotonicity modulus of A, if known (0 otherwise).
    pub nu: f64,
    pub resolvent: Arc<ResolventFn>,
}

impl fmt::Debug for CustomResolvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomResolvent")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("nu", &self.nu)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
enum Inner {
    Zero,
    NormalCone(ConvexSet),
    ScaledIdentity(f64),
    L1(f64),
    Separable(SeparablePenalty),
    Custom(CustomResolvent),
}

/// A maximal monotone operator A, represented by its resolvent
/// J_{γA} = (I + γA)⁻¹. Parameters are validated at construction so
/// [`ResolventOperator::resolvent`] only fails on bad call arguments.
#[derive(Debug, Clone)]
pub struct ResolventOperator {
    inner: Inner,
}

impl ResolventOperator {
    pub fn from_spec(spec: ResolventSpec) -> Result<Self> {
        let inner = match spec {
            ResolventSpec::Zero => Inner::Zero,
            ResolventSpec::NormalConeBox { lower, upper } => {
                Inner::NormalCone(ConvexSet::new_box(lower, upper)?)
            }
            ResolventSpec::NormalConeBall { center, radius } => {
                Inner::NormalCone(ConvexSet::new_ball(center, radius)?)
            }
            ResolventSpec::ScaledIdentity { a } => {
                if !(a.is_finite() && a >= 0.0) {
                    return Err(Error::param("a", "scaling must be finite and nonnegative"));
                }
                Inner::ScaledIdentity(a)
            }
            ResolventSpec::SubdifferentialL1 { weight } => {
                if !(weight.is_finite() && weight >= 0.0) {
                    return Err(Error::param(
                        "weight",
                        "l1 weight must be finite and nonnegative",
                    ));
                }
                Inner::L1(weight)
            }
            ResolventSpec::SeparablePenalty(p) => {
                p.validate()?;
                Inner::Separable(p)
            }
        };
        Ok(ResolventOperator { inner })
    }

    pub fn zero() -> Self {
        ResolventOperator { inner: Inner::Zero }
    }

    pub fn normal_cone(set: ConvexSet) -> Result<Self> {
        set.validate()?;
        Ok(ResolventOperator {
            inner: Inner::NormalCone(set),
        })
    }

    pub fn scaled_identity(a: f64) -> Result<Self> {
        Self::from_spec(ResolventSpec::ScaledIdentity { a })
    }

    pub fn l1(weight: f64) -> Result<Self> {
        Self::from_spec(ResolventSpec::SubdifferentialL1 { weight })
    }

    pub fn separable(penalty: SeparablePenalty) -> Result<Self> {
        Self::from_spec(ResolventSpec::SeparablePenalty(penalty))
    }

    pub fn custom(custom: CustomResolvent) -> Result<Self> {
        if !(custom.nu.is_finite() && custom.nu >= 0.0) {
            return Err(Error::param("nu", "must be finite and nonnegative"));
        }
        Ok(ResolventOperator {
            inner: Inner::Custom(custom),
        })
    }

    pub fn kind_name(&self) -> &str {
        match &self.inner {
            Inner::Zero => "zero",
            Inner::NormalCone(ConvexSet::Box { .. }) => "normal_cone_box",
            Inner::NormalCone(ConvexSet::Ball { .. }) => "normal_cone_ball",
            Inner::ScaledIdentity(_) => "scaled_identity",
            Inner::L1(_) => "subdifferential_l1",
            Inner::Separable(_) => "separable_penalty",
            Inner::Custom(c) => &c.name,
        }
    }

    /// Fixed dimension, for kinds whose parameters pin one.
    pub fn dim(&self) -> Option<usize> {
        match &self.inner {
            Inner::NormalCone(set) => Some(set.dim()),
            Inner::Separable(p) => Some(p.dim()),
            Inner::Custom(c) => c.dim,
            _ => None,
        }
    }

    /// Modulus ν with A − νI monotone (0 when not strongly monotone).
    pub fn strong_monotonicity(&self) -> f64 {
        match &self.inner {
            Inner::ScaledIdentity(a) => *a,
            Inner::Separable(p) => p.nu,
            Inner::Custom(c) => c.nu,
            _ => 0.0,
        }
    }

    pub fn as_set(&self) -> Option<&ConvexSet> {
        match &self.inner {
            Inner::NormalCone(set) => Some(set),
            _ => None,
        }
    }

    pub fn as_separable(&self) -> Option<&SeparablePenalty> {
        match &self.inner {
            Inner::Separable(p) => Some(p),
            _ => None,
        }
    }

    /// True when A is the subdifferential of a known convex function.
    pub fn is_subdifferential(&self) -> bool {
        !matches!(self.inner, Inner::Custom(_))
    }

    pub fn spec(&self) -> Option<ResolventSpec> {
        Some(match &self.inner {
            Inner::Zero => ResolventSpec::Zero,
            Inner::NormalCone(ConvexSet::Box { lower, upper }) => ResolventSpec::NormalConeBox {
                lower: lower.clone(),
                upper: upper.clone(),
            },
            Inner::NormalCone(ConvexSet::Ball { center, radius }) => {
                ResolventSpec::NormalConeBall {
                    center: center.clone(),
                    radius: *radius,
                }
            }
            Inner::ScaledIdentity(a) => ResolventSpec::ScaledIdentity { a: *a },
            Inner::L1(weight) => ResolventSpec::SubdifferentialL1 { weight: *weight },
            Inner::Separable(p) => ResolventSpec::SeparablePenalty(p.clone()),
            Inner::Custom(_) => return None,
        })
    }

    /// J_{γA}(z): the unique y with z − y ∈ γAy.
    pub fn resolvent(&self, gamma: f64, z: &Point) -> Result<Point> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::param("gamma", "must be positive and finite"));
        }
        if let Some(d) = self.dim() {
            ensure_dim(d, z.dim())?;
        }
        let y = match &self.inner {
            Inner::Zero => z.clone(),
            Inner::NormalCone(set) => set.project_unchecked(z),
            Inner::ScaledIdentity(a) => z.scale(1.0 / (1.0 + gamma * a)),
            Inner::L1(weight) => z.map(|x| soft_threshold(x, gamma * weight)),
            Inner::Separable(p) => separable_prox_step(p, gamma, z)?,
            Inner::Custom(c) => {
                let y = (c.resolvent)(gamma, z);
                ensure_dim(z.dim(), y.dim())?;
                y.check_finite("custom resolvent output")?;
                y
            }
        };
        Ok(y)
    }

    /// Metric projection onto C for normal-cone kinds, where J_{γN_C} = P_C.
    pub fn project(&self, z: &Point) -> Result<Point> {
        match &self.inner {
            Inner::NormalCone(set) => set.project(z),
            _ => Err(Error::Unsupported(format!(
                "projection requires a normal cone, got `{}`",
                self.kind_name()
            ))),
        }
    }
}

impl Serialize for ResolventOperator {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self.spec() {
            Some(spec) => spec.serialize(serializer),
            None => Err(serde::ser::Error::custom(
                "custom resolvent operators cannot be serialized",
            )),
        }
    }
}

impl<'de> Deserialize<'de> for ResolventOperator {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let spec = ResolventSpec::deserialize(deserializer)?;
        ResolventOperator::from_spec(spec).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::separable::ScalarPenalty;

    fn p(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    #[test]
    fn zero_operator_resolvent_is_identity() {
        let a = ResolventOperator::zero();
        assert_eq!(a.resolvent(1.0, &p(&[3.0, -2.0])).unwrap(), p(&[3.0, -2.0]));
    }

    #[test]
    fn scaled_identity_halves() {
        let a = ResolventOperator::scaled_identity(1.0).unwrap();
        assert_eq!(a.resolvent(1.0, &p(&[4.0])).unwrap(), p(&[2.0]));
    }

    #[test]
    fn l1_soft_thresholds() {
        let a = ResolventOperator::l1(1.0).unwrap();
        assert_eq!(a.resolvent(1.5, &p(&[2.0, -0.5])).unwrap(), p(&[0.5, 0.0]));
    }

    #[test]
    fn projections() {
        let ball =
            ResolventOperator::normal_cone(ConvexSet::new_ball(vec![0.0, 0.0], 1.0).unwrap())
                .unwrap();
        let y = ball.project(&p(&[3.0, 4.0])).unwrap();
        assert!((y[0] - 0.6).abs() < 1e-15 && (y[1] - 0.8).abs() < 1e-15);

        let bx = ResolventOperator::from_spec(ResolventSpec::NormalConeBox {
            lower: vec![-1.0, -1.0],
            upper: vec![1.0, 1.0],
        })
        .unwrap();
        assert_eq!(bx.project(&p(&[0.5, -0.2])).unwrap(), p(&[0.5, -0.2]));
        assert_eq!(bx.project(&p(&[2.0, -3.0])).unwrap(), p(&[1.0, -1.0]));
        // The resolvent of a normal cone ignores the step.
        assert_eq!(
            bx.resolvent(17.0, &p(&[2.0, -3.0])).unwrap(),
            p(&[1.0, -1.0])
        );
    }

    #[test]
    fn construction_errors() {
        assert!(ResolventOperator::from_spec(ResolventSpec::NormalConeBox {
            lower: vec![0.0, 2.0],
            upper: vec![1.0, 1.0],
        })
        .is_err());
        assert!(ResolventOperator::scaled_identity(-1.0).is_err());
        assert!(ResolventOperator::l1(f64::NAN).is_err());
        assert!(ResolventOperator::zero().project(&p(&[1.0])).is_err());
    }

    #[test]
    fn call_errors() {
        let a = ResolventOperator::l1(1.0).unwrap();
        assert!(a.resolvent(0.0, &p(&[1.0])).is_err());
        assert!(a.resolvent(-1.0, &p(&[1.0])).is_err());
        let sep = ResolventOperator::separable(
            SeparablePenalty::new(vec![ScalarPenalty::Zero; 2], 0.0).unwrap(),
        )
        .unwrap();
        assert!(sep.resolvent(1.0, &p(&[1.0])).is_err());
    }

    #[test]
    fn scaled_identity_resolvent_equation() {
        // (z − y)/γ = a y exactly.
        let a = ResolventOperator::scaled_identity(2.5).unwrap();
        for &gamma in &[0.1, 1.0, 10.0] {
            let z = p(&[1.0, -3.0, 0.5]);
            let y = a.resolvent(gamma, &z).unwrap();
            for k in 0..3 {
                assert!(((z[k] - y[k]) / gamma - 2.5 * y[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn l1_resolvent_sign_conditions() {
        // (z − y)/γ ∈ weight·∂|y|: equals weight·sign(y) off zero, in [−w, w] at zero.
        let w = 0.7;
        let a = ResolventOperator::l1(w).unwrap();
        for &gamma in &[0.1, 1.0, 10.0] {
            let z = p(&[3.0, -0.05, 0.0, -9.0, 0.6]);
            let y = a.resolvent(gamma, &z).unwrap();
            for k in 0..z.dim() {
                let g = (z[k] - y[k]) / gamma;
                if y[k] == 0.0 {
                    assert!(g.abs() <= w + 1e-12);
                } else {
                    assert!((g - w * y[k].signum()).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn serde_round_trip_and_validation() {
        let a = ResolventOperator::l1(0.1).unwrap();
        let json = serde_json::to_string(&a).unwrap();
        assert_eq!(json, r#"{"kind":"subdifferential_l1","weight":0.1}"#);
        let back: ResolventOperator = serde_json::from_str(&json).unwrap();
        assert_eq!(back.spec(), a.spec());
        let bad = r#"{"kind":"normal_cone_ball","center":[0.0],"radius":-1.0}"#;
        assert!(serde_json::from_str::<ResolventOperator>(bad).is_err());
        let sep = r#"{"kind":"separable_penalty","per_coordinate":[{"kind":"abs_weighted","weight":1.0},{"kind":"zero"}],"nu":0.5}"#;
        let op: ResolventOperator = serde_json::from_str(sep).unwrap();
        assert_eq!(op.dim(), Some(2));
        assert_eq!(op.strong_monotonicity(), 0.5);
    }

    #[test]
    fn custom_resolvent_not_serializable() {
        let c = ResolventOperator::custom(CustomResolvent {
            name: "shrink".into(),
            dim: None,
            nu: 1.0,
            resolvent: Arc::new(|gamma, z: &Point| z.scale(1.0 / (1.0 + gamma))),
        })
        .unwrap();
        assert_eq!(c.resolvent(1.0, &p(&[4.0])).unwrap(), p(&[2.0]));
        assert!(serde_json::to_string(&c).is_err());
    }
}
