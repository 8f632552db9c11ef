use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Error, Result};
use crate::linalg::Point;
use crate::random::RandomStream;

/// Closed convex sets with an explicit metric projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConvexSet {
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

impl ConvexSet {
    pub fn new_box(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let set = ConvexSet::Box { lower, upper };
        set.validate()?;
        Ok(set)
    }

    pub fn new_ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        let set = ConvexSet::Ball { center, radius };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ConvexSet::Box { lower, upper } => {
                if lower.is_empty() {
                    return Err(Error::param("box", "zero-dimensional box"));
                }
                ensure_dim(lower.len(), upper.len())?;
                for (k, (l, u)) in lower.iter().zip(upper).enumerate() {
                    if l.is_nan() || u.is_nan() {
                        return Err(Error::NonFinite("box bounds"));
                    }
                    if l > u {
                        return Err(Error::param(
                            "box",
                            format!("empty box: lower[{k}] = {l} > upper[{k}] = {u}"),
                        ));
                    }
                }
                Ok(())
            }
            ConvexSet::Ball { center, radius } => {
                if center.is_empty() {
                    return Err(Error::param("ball", "zero-dimensional center"));
                }
                if center.iter().any(|x| !x.is_finite()) {
                    return Err(Error::NonFinite("ball center"));
                }
                if !(radius.is_finite() && *radius >= 0.0) {
                    return Err(Error::param("radius", "must be finite and nonnegative"));
                }
                Ok(())
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexSet::Box { lower, .. } => lower.len(),
            ConvexSet::Ball { center, .. } => center.len(),
        }
    }

    pub fn is_bounded(&self) -> bool {
        match self {
            ConvexSet::Box { lower, upper } => lower.iter().chain(upper).all(|x| x.is_finite()),
            ConvexSet::Ball { .. } => true,
        }
    }

    /// Metric projection onto the set.
    pub fn project(&self, z: &Point) -> Result<Point> {
        ensure_dim(self.dim(), z.dim())?;
        Ok(self.project_unchecked(z))
    }

    pub(crate) fn project_unchecked(&self, z: &Point) -> Point {
        match self {
            ConvexSet::Box { lower, upper } => Point::from_vec(
                z.as_slice()
                    .iter()
                    .zip(lower.iter().zip(upper))
                    .map(|(&x, (&l, &u))| x.clamp(l, u))
                    .collect(),
            ),
            ConvexSet::Ball { center, radius } => {
                let c = Point::from_vec(center.clone());
                let d = z.dist(&c);
                if d <= *radius {
                    z.clone()
                } else {
                    // c + r (z − c)/‖z − c‖, written per coordinate. Rounding can
                    // leave the result a few ulps outside; shrinking the scale until
                    // it tests as inside makes the projection exactly idempotent.
                    let mut s = radius / d;
                    loop {
                        let p = Point::from_vec(
                            z.as_slice()
                                .iter()
                                .zip(center)
                                .map(|(x, ci)| ci + s * (x - ci))
                                .collect(),
                        );
                        if p.dist(&c) <= *radius || s == 0.0 {
                            return p;
                        }
                        s = f64::from_bits(s.to_bits() - 1);
                    }
                }
            }
        }
    }

    pub fn contains(&self, w: &Point, tol: f64) -> bool {
        if w.dim() != self.dim() {
            return false;
        }
        match self {
            ConvexSet::Box { lower, upper } => w
                .as_slice()
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(&x, (&l, &u))| x >= l - tol && x <= u + tol),
            ConvexSet::Ball { center, radius } => {
                w.dist(&Point::from_vec(center.clone())) <= radius + tol
            }
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            ConvexSet::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(l, u)| (u - l) * (u - l))
                .sum::<f64>()
                .sqrt(),
            ConvexSet::Ball { radius, .. } => 2.0 * radius,
        }
    }

    /// sup over u in the set of ‖w − u‖².
    pub fn max_sq_dist_from(&self, w: &Point) -> Result<f64> {
        ensure_dim(self.dim(), w.dim())?;
        Ok(match self {
            ConvexSet::Box { lower, upper } => w
                .as_slice()
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(&x, (&l, &u))| ((x - l) * (x - l)).max((x - u) * (x - u)))
                .sum(),
            ConvexSet::Ball { center, radius } => {
                let d = w.dist(&Point::from_vec(center.clone())) + radius;
                d * d
            }
        })
    }

    /// Axis-aligned bounding box as (lower, upper).
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            ConvexSet::Box { lower, upper } => (lower.clone(), upper.clone()),
            ConvexSet::Ball { center, radius } => (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
        }
    }

    /// A random point of the set (uniform on the bounding box, then projected).
    pub fn sample(&self, stream: &mut RandomStream) -> Point {
        let (lo, hi) = self.bounding_box();
        let raw = Point::from_vec(
            lo.iter()
                .zip(&hi)
                .map(|(&l, &h)| if h > l { stream.uniform_in(l, h) } else { l })
                .collect(),
        );
        self.project_unchecked(&raw)
    }
}
