use crate::error::{ensure_dim, Error, Result};
use crate::linalg::Point;
use crate::oracles::StochasticOracle;
use crate::problem::InclusionProblem;
use crate::random::{RandomStream, SeedSpec};
use crate::trajectory::{StepRecord, Trajectory};

use super::schedule::Schedule;

/// One stochastic forward-backward step at iteration n:
///
/// z = w − γ𝔅,  y = J_{γA} z,  w⁺ = (1 − λ)w + λy.
///
/// Exactly one oracle sample is drawn, including when λ = 0, so streams
/// stay aligned across schedules.
pub fn step(
    p: &InclusionProblem,
    o: &StochasticOracle,
    w: &Point,
    n: usize,
    gamma: f64,
    lambda: f64,
    stream: &mut RandomStream,
) -> Result<(Point, StepRecord)> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::param("gamma", "must be positive and finite"));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::param("lambda", "must lie in [0, 1]"));
    }
    ensure_dim(p.dim(), w.dim())?;
    ensure_dim(p.dim(), o.base().dim())?;
    let estimate = o.sample_unchecked(w, n, stream);
    let z = w.axpy(-gamma, &estimate);
    let y = p.a().resolvent(gamma, &z)?;
    let w_next = if lambda == 0.0 {
        w.clone()
    } else if lambda == 1.0 {
        y.clone()
    } else {
        w.lerp(&y, lambda)
    };
    Ok((
        w_next,
        StepRecord {
            z,
            y,
            gamma,
            lambda,
        },
    ))
}

/// Drives the iteration for `n_steps` steps, calling
/// `visit(n, w_n, record_n, w_{n+1})` after each step n = 1..=n_steps, and
/// returns w_{n_steps+1}. Nothing is stored, so memory does not grow with
/// `n_steps`.
pub fn run_with<F>(
    p: &InclusionProblem,
    o: &StochasticOracle,
    s: &Schedule,
    w1: &Point,
    n_steps: usize,
    seed: SeedSpec,
    mut visit: F,
) -> Result<Point>
where
    F: FnMut(usize, &Point, &StepRecord, &Point),
{
    if n_steps == 0 {
        return Err(Error::param("n_steps", "must be at least 1"));
    }
    ensure_dim(p.dim(), w1.dim())?;
    w1.check_finite("initial point")?;
    let mut stream = seed.stream();
    let mut w = w1.clone();
    for n in 1..=n_steps {
        let (next, record) = step(p, o, &w, n, s.gamma(n), s.lambda(n), &mut stream)?;
        if !next.is_finite() {
            return Err(Error::NonFinite("iterate (the iteration diverged)"));
        }
        visit(n, &w, &record, &next);
        w = next;
    }
    Ok(w)
}

/// Runs the iteration and keeps every iterate and step record. When the
/// problem carries a known solution, ‖wₙ − w̄‖² is stored alongside.
pub fn run(
    p: &InclusionProblem,
    o: &StochasticOracle,
    s: &Schedule,
    w1: &Point,
    n_steps: usize,
    seed: SeedSpec,
) -> Result<Trajectory> {
    let solution = p.known_solution();
    let mut traj = Trajectory::new(w1.clone(), true, solution.is_some());
    if let Some(sol) = solution {
        traj.push_sq_dist(w1.dist_sq(sol));
    }
    run_with(p, o, s, w1, n_steps, seed, |_n, _w, record, next| {
        if let Some(sol) = solution {
            traj.push_sq_dist(next.dist_sq(sol));
        }
        traj.push(next.clone(), Some(record.clone()));
    })?;
    Ok(traj)
}
