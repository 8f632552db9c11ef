//! Averaged iteration for the variational inequality
//!
//! find w̄ ∈ C with ⟨Bw̄, w − w̄⟩ ≥ 0 for all w ∈ C,
//!
//! over a bounded closed convex set C. The resolvent step becomes the
//! projection onto C and the output is the weighted average
//! w̄ₙ = Σ γₜλₜwₜ / Σ γₜλₜ. Accuracy is measured by the merit function
//! V(u) = sup_{w∈C} ⟨Bw, u − w⟩.
//!
//! The bound on V(E w̄ₙ) uses θ₁,ₙ = ½ Σ_{t≤n} (λₜγₜ²(1 + σ²αₜ)E‖Bwₜ‖² + σ²λₜγₜ²).
//! One step of the derivation carries λₜ inside the factor, as
//! (1 + σ²λₜαₜ); since λₜ ≤ 1 the form used here is the larger of the two.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Error, Result};
use crate::linalg::{dot_slices, Point};
use crate::operators::{CocoerciveOperator, ConvexSet, ResolventOperator};
use crate::oracles::StochasticOracle;
use crate::problem::InclusionProblem;
use crate::random::SeedSpec;
use crate::solver::{run_with, Schedule};
use crate::trajectory::{StepRecord, Trajectory};

/// Grid cells per diameter for the low-dimensional merit search.
pub const MERIT_GRID_CELLS: f64 = 2000.0;
/// Random starts of the projected ascent in higher dimension.
pub const MERIT_MULTISTARTS: usize = 16;

/// Variational inequality with cocoercive B over a bounded set C.
#[derive(Debug, Clone)]
pub struct VIProblem {
    b: CocoerciveOperator,
    set: ConvexSet,
}

impl VIProblem {
    pub fn new(b: CocoerciveOperator, set: ConvexSet) -> Result<Self> {
        set.validate()?;
        ensure_dim(b.dim(), set.dim())?;
        if !set.is_bounded() {
            return Err(Error::param(
                "set",
                "the averaged method requires a bounded set",
            ));
        }
        Ok(VIProblem { b, set })
    }

    pub fn b(&self) -> &CocoerciveOperator {
        &self.b
    }

    pub fn set(&self) -> &ConvexSet {
        &self.set
    }

    pub fn dim(&self) -> usize {
        self.set.dim()
    }

    pub fn diameter(&self) -> f64 {
        self.set.diameter()
    }

    /// The same problem as the inclusion 0 ∈ N_C(w) + Bw.
    pub fn as_inclusion(&self) -> Result<InclusionProblem> {
        InclusionProblem::new(
            ResolventOperator::normal_cone(self.set.clone())?,
            self.b.clone(),
        )
    }
}

/// Running weighted sum of the iterates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErgodicState {
    pub weighted_sum: Point,
    pub weight_total: f64,
    pub n: usize,
}

impl ErgodicState {
    pub fn new(dim: usize) -> Self {
        ErgodicState {
            weighted_sum: Point::zeros(dim),
            weight_total: 0.0,
            n: 0,
        }
    }

    pub fn push(&mut self, w: &Point, weight: f64) {
        self.weighted_sum.add_scaled_in_place(weight, w);
        self.weight_total += weight;
        self.n += 1;
    }

    /// w̄ₙ; an error while every weight so far is zero.
    pub fn average(&self) -> Result<Point> {
        if !(self.weight_total > 0.0) {
            return Err(Error::Domain(format!(
                "average undefined: all weights up to n = {} are zero",
                self.n
            )));
        }
        Ok(self.weighted_sum.scale(1.0 / self.weight_total))
    }
}

/// Output of [`run_ergodic`]; index k of each vector refers to n = k + 1.
#[derive(Debug, Clone)]
pub struct ErgodicRun {
    pub trajectory: Trajectory,
    /// w̄ₙ, or None while the weights are all zero.
    pub averages: Vec<Option<Point>>,
    /// ‖Bwₙ‖² with the exact operator.
    pub bw_norm_sq: Vec<f64>,
    /// Σ_{t≤n} γₜλₜ
    pub weight_sums: Vec<f64>,
}

impl ErgodicRun {
    pub fn average(&self, n: usize) -> Result<&Point> {
        let slot = n
            .checked_sub(1)
            .and_then(|k| self.averages.get(k))
            .ok_or(Error::OutOfRange { n, min: 1 })?;
        slot.as_ref().ok_or_else(|| {
            Error::Domain(format!(
                "average undefined: all weights up to n = {n} are zero"
            ))
        })
    }
}

/// Streams the averaged iteration, calling `visit(n, wₙ, ‖Bwₙ‖², state)`
/// after step n has been folded into the average. Returns w_{n_steps+1}.
/// A starting point outside C is projected first.
pub fn run_ergodic_with<F>(
    v: &VIProblem,
    o: &StochasticOracle,
    s: &Schedule,
    w1: &Point,
    n_steps: usize,
    seed: SeedSpec,
    mut visit: F,
) -> Result<Point>
where
    F: FnMut(usize, &Point, &StepRecord, f64, &ErgodicState),
{
    let p = v.as_inclusion()?;
    let start = v.set.project(w1)?;
    let mut state = ErgodicState::new(v.dim());
    run_with(&p, o, s, &start, n_steps, seed, |n, w, record, _next| {
        let bw = v.b.apply_unchecked(w);
        state.push(w, record.gamma * record.lambda);
        visit(n, w, record, bw.norm_sq(), &state);
    })
}

pub fn run_ergodic(
    v: &VIProblem,
    o: &StochasticOracle,
    s: &Schedule,
    w1: &Point,
    n_steps: usize,
    seed: SeedSpec,
) -> Result<ErgodicRun> {
    let start = v.set.project(w1)?;
    let mut trajectory = Trajectory::new(start.clone(), true, false);
    let mut averages = Vec::with_capacity(n_steps);
    let mut bw_norm_sq = Vec::with_capacity(n_steps);
    let mut weight_sums = Vec::with_capacity(n_steps);
    let mut pending: Option<StepRecord> = None;
    let last = run_ergodic_with(
        v,
        o,
        s,
        &start,
        n_steps,
        seed,
        |n, w, record, bw_sq, state| {
            if n > 1 {
                trajectory.push(w.clone(), pending.take());
            }
            pending = Some(record.clone());
            averages.push(state.average().ok());
            bw_norm_sq.push(bw_sq);
            weight_sums.push(state.weight_total);
        },
    )?;
    trajectory.push(last, pending.take());
    Ok(ErgodicRun {
        trajectory,
        averages,
        bw_norm_sq,
        weight_sums,
    })
}

/// V(u) together with a maximizer w* (so that Bw* is a supergradient of V
/// at u).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeritValue {
    pub value: f64,
    pub maximizer: Point,
}

/// V(u) = sup_{w∈C} ⟨Bw, u − w⟩.
///
/// In dimension ≤ 2 the sup is located on a grid of spacing
/// diameter/2000 and refined by compass search. In higher dimension B must
/// be affine; the objective is then concave and is maximized by projected
/// gradient ascent from 16 starting points.
pub fn merit(v: &VIProblem, u: &Point) -> Result<MeritValue> {
    ensure_dim(v.dim(), u.dim())?;
    u.check_finite("merit argument")?;
    let f = |w: &Point| -> f64 {
        let bw = v.b.apply_unchecked(w);
        dot_slices(bw.as_slice(), u.as_slice()) - dot_slices(bw.as_slice(), w.as_slice())
    };
    let (start, h) = if v.dim() <= 2 {
        grid_search(v, &f)
    } else if v.b.as_affine().is_some() {
        return projected_ascent(v, u);
    } else {
        return Err(Error::Unsupported(format!(
            "merit evaluation in dimension {} requires an affine operator",
            v.dim()
        )));
    };
    let (maximizer, value) = compass_search(v, &f, start, h);
    Ok(MeritValue { value, maximizer })
}

fn grid_search(v: &VIProblem, f: &(impl Fn(&Point) -> f64 + Sync)) -> (Point, f64) {
    let h = v.diameter() / MERIT_GRID_CELLS;
    let (lo, hi) = v.set.bounding_box();
    let axis = |k: usize| -> Vec<f64> {
        let m = ((hi[k] - lo[k]) / h).ceil().max(1.0) as usize;
        (0..=m).map(|i| (lo[k] + i as f64 * h).min(hi[k])).collect()
    };
    let xs = axis(0);
    let ys = if v.dim() == 2 {
        axis(1)
    } else {
        vec![f64::NAN]
    };
    let best = xs
        .par_iter()
        .map(|&x| {
            let mut best = (f64::NEG_INFINITY, Point::zeros(v.dim()));
            for &y in &ys {
                let coords = if v.dim() == 2 { vec![x, y] } else { vec![x] };
                let w = Point::from_vec(coords);
                if !v.set.contains(&w, 0.0) {
                    continue;
                }
                let val = f(&w);
                if val > best.0 {
                    best = (val, w);
                }
            }
            best
        })
        .reduce(
            || (f64::NEG_INFINITY, Point::zeros(v.dim())),
            |a, b| if b.0 > a.0 { b } else { a },
        );
    (best.1, h)
}

/// Projected compass search: tries ±h along each axis and diagonal, halving
/// h when nothing improves.
fn compass_search(
    v: &VIProblem,
    f: &impl Fn(&Point) -> f64,
    start: Point,
    h0: f64,
) -> (Point, f64) {
    let d = v.dim();
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for k in 0..d {
        for sgn in [1.0, -1.0] {
            let mut e = vec![0.0; d];
            e[k] = sgn;
            dirs.push(e);
        }
    }
    if d == 2 {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        for (a, b) in [(r, r), (r, -r), (-r, r), (-r, -r)] {
            dirs.push(vec![a, b]);
        }
    }
    let mut w = v.set.project_unchecked(&start);
    let mut best = f(&w);
    let mut h = h0;
    let stop = 1e-12 * v.diameter().max(1.0);
    while h > stop {
        let mut improved = false;
        for e in &dirs {
            let trial = v
                .set
                .project_unchecked(&w.axpy(h, &Point::from_vec(e.clone())));
            let val = f(&trial);
            if val > best {
                best = val;
                w = trial;
                improved = true;
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    (w, best)
}

/// For Bw = Mw + b the objective ⟨Mw + b, u − w⟩ is concave with gradient
/// Mᵀ(u − w) − (Mw + b) and Lipschitz constant ≤ 2‖M‖.
fn projected_ascent(v: &VIProblem, u: &Point) -> Result<MeritValue> {
    let aff = v.b.as_affine().expect("checked by caller");
    let lip = 2.0 * aff.matrix.operator_norm(1e-10, 10_000);
    let step = if lip > 0.0 { 1.0 / lip } else { 1.0 };
    let value = |w: &Point| {
        let bw = aff.apply(w.as_slice());
        dot_slices(&bw, u.as_slice()) - dot_slices(&bw, w.as_slice())
    };
    let mut stream = SeedSpec::new(0x6d_6572_6974, 0).stream();
    let mut starts = vec![v.set.project_unchecked(u)];
    while starts.len() < MERIT_MULTISTARTS {
        starts.push(v.set.sample(&mut stream));
    }
    let tol = 1e-13 * v.diameter().max(1.0);
    let mut best: Option<MeritValue> = None;
    for mut w in starts {
        for _ in 0..100_000 {
            let diff: Vec<f64> = u
                .as_slice()
                .iter()
                .zip(w.as_slice())
                .map(|(a, b)| a - b)
                .collect();
            let mut grad = aff.matrix.tmatvec(&diff);
            let bw = aff.apply(w.as_slice());
            grad.iter_mut().zip(&bw).for_each(|(g, b)| *g -= b);
            let next = v
                .set
                .project_unchecked(&w.axpy(step, &Point::from_vec(grad)));
            let moved = next.dist(&w);
            w = next;
            if moved <= tol {
                break;
            }
        }
        let val = value(&w);
        if best.as_ref().is_none_or(|b| val > b.value) {
            best = Some(MeritValue {
                value: val,
                maximizer: w,
            });
        }
    }
    Ok(best.expect("at least one start"))
}

/// θ₀ = sup_{u∈C} ½‖w₁ − u‖² for a deterministic start.
pub fn theta0(set: &ConvexSet, w1: &Point) -> Result<f64> {
    Ok(0.5 * set.max_sq_dist_from(w1)?)
}

/// θ₁,ₙ for n = 1..=len, given estimates of E‖Bwₜ‖².
pub fn theta1_sequence(s: &Schedule, o: &StochasticOracle, mean_bw_norm_sq: &[f64]) -> Vec<f64> {
    let sigma_sq = o.sigma() * o.sigma();
    let mut acc = 0.0;
    mean_bw_norm_sq
        .iter()
        .enumerate()
        .map(|(k, &e)| {
            let t = k + 1;
            let lg2 = s.lambda(t) * s.gamma(t) * s.gamma(t);
            acc += 0.5 * (lg2 * (1.0 + sigma_sq * o.alpha(t)) * e + sigma_sq * lg2);
            acc
        })
        .collect()
}

/// Σ_{t≤n} λₜγₜ for n = 1..=len.
pub fn weight_partial_sums(s: &Schedule, len: usize) -> Vec<f64> {
    let mut acc = 0.0;
    (1..=len)
        .map(|t| {
            acc += s.lambda(t) * s.gamma(t);
            acc
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErgodicBoundInputs {
    pub theta0: f64,
    /// θ₁,ₙ, n = 1..=len
    pub theta1_seq: Vec<f64>,
    /// Σ_{t≤n} λₜγₜ, n = 1..=len
    pub weight_partial_sums: Vec<f64>,
}

impl ErgodicBoundInputs {
    pub fn new(theta0: f64, theta1_seq: Vec<f64>, weight_partial_sums: Vec<f64>) -> Result<Self> {
        if !(theta0 >= 0.0 && theta0.is_finite()) {
            return Err(Error::param("theta0", "must be finite and nonnegative"));
        }
        if theta1_seq.len() != weight_partial_sums.len() {
            return Err(Error::param(
                "theta1_seq",
                "length differs from the weight sums",
            ));
        }
        if theta1_seq.first().is_some_and(|&x| x < 0.0)
            || theta1_seq.windows(2).any(|w| w[1] < w[0])
        {
            return Err(Error::param(
                "theta1_seq",
                "must be nonnegative and nondecreasing",
            ));
        }
        Ok(ErgodicBoundInputs {
            theta0,
            theta1_seq,
            weight_partial_sums,
        })
    }

    /// Inputs for a deterministic start from Monte Carlo means of ‖Bwₜ‖².
    pub fn from_estimates(
        v: &VIProblem,
        o: &StochasticOracle,
        s: &Schedule,
        w1: &Point,
        mean_bw_norm_sq: &[f64],
    ) -> Result<Self> {
        let start = v.set.project(w1)?;
        Self::new(
            theta0(&v.set, &start)?,
            theta1_seq_checked(s, o, mean_bw_norm_sq)?,
            weight_partial_sums(s, mean_bw_norm_sq.len()),
        )
    }
}

fn theta1_seq_checked(s: &Schedule, o: &StochasticOracle, e: &[f64]) -> Result<Vec<f64>> {
    if e.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
        return Err(Error::param(
            "mean_bw_norm_sq",
            "entries must be finite and nonnegative",
        ));
    }
    Ok(theta1_sequence(s, o, e))
}

/// (θ₀ + θ₁,ₙ) / Σ_{t≤n} λₜγₜ.
pub fn ergodic_bound(inputs: &ErgodicBoundInputs, n: usize) -> Result<f64> {
    let k = n
        .checked_sub(1)
        .filter(|&k| k < inputs.weight_partial_sums.len())
        .ok_or(Error::OutOfRange { n, min: 1 })?;
    let w = inputs.weight_partial_sums[k];
    if !(w > 0.0) {
        return Err(Error::Domain(format!("weight sum at n = {n} is zero")));
    }
    Ok((inputs.theta0 + inputs.theta1_seq[k]) / w)
}
