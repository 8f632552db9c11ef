//! Catalog of maximal monotone operators (through their resolvents) and of
//! cocoercive single-valued operators with known constants.

mod cocoercive;
mod resolvent;
mod separable;
mod sets;

pub use cocoercive::{
    beta_of, AffineMap, CocoerciveOperator, CocoerciveSpec, CustomCocoercive, OperatorFn,
};
pub use resolvent::{CustomResolvent, ResolventFn, ResolventOperator, ResolventSpec};
pub use separable::{separable_prox_step, soft_threshold, ScalarPenalty, SeparablePenalty};
pub use sets::ConvexSet;

use crate::error::Result;
use crate::linalg::Point;

/// J_{γA}(z).
pub fn resolvent(a: &ResolventOperator, gamma: f64, z: &Point) -> Result<Point> {
    a.resolvent(gamma, z)
}

/// P_C(z) for a normal-cone operator of C.
pub fn project(c: &ResolventOperator, z: &Point) -> Result<Point> {
    c.project(z)
}

/// Bw.
pub fn apply(b: &CocoerciveOperator, w: &Point) -> Result<Point> {
    b.apply(w)
}
