//! Diagnostics of the quasi-Fejér behaviour of the iterates with respect to
//! a known solution w̄.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracles::StochasticOracle;
use crate::problem::InclusionProblem;
use crate::trajectory::Trajectory;

use super::assumptions::chi_sq;
use super::schedule::Schedule;

/// Share of the total mean Sₙ (and Uₙ) that may accrue over the last
/// quarter of the iterations for the partial sums to count as bounded.
pub const LAST_QUARTER_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FejerDiagnostics {
    pub replications: usize,
    /// ‖wₙ − w̄‖² per replication, n = 1..=len.
    pub sq_dist: Vec<Vec<f64>>,
    /// Sₙ = Σ_{t≤n} λₜγₜ⟨wₜ − w̄, Bwₜ − Bw̄⟩ per replication, n = 1..=steps.
    pub s_partial: Vec<Vec<f64>>,
    /// Uₙ = Σ_{t≤n} λₜ‖wₜ − yₜ‖² per replication.
    pub u_partial: Vec<Vec<f64>>,
    pub mean_sq_dist: Vec<f64>,
    pub stderr_sq_dist: Vec<f64>,
    pub mean_s: Vec<f64>,
    pub mean_u: Vec<f64>,
    /// Smallest summand of any Sₙ; nonnegative by monotonicity of B.
    pub min_s_summand: f64,
    /// Fraction of the final mean Sₙ accrued over the last quarter.
    pub s_last_quarter_share: f64,
    pub u_last_quarter_share: f64,
    pub bounded: bool,
    /// Steps n at which mean ‖wₙ₊₁ − w̄‖² exceeds
    /// mean ‖wₙ − w̄‖² + 2σ²χ²ₙ + 5·stderr.
    pub monotonicity_violations: Vec<usize>,
    /// 95th percentile over replications of the terminal ‖wₙ − w̄‖².
    pub terminal_q95: f64,
}

/// Requires trajectories of equal length that carry step records.
pub fn fejer_diagnostics(
    trajectories: &[Trajectory],
    p: &InclusionProblem,
    o: &StochasticOracle,
    s: &Schedule,
) -> Result<FejerDiagnostics> {
    let sol = p
        .known_solution()
        .ok_or(Error::MissingSolution("fejer diagnostics"))?;
    let first = trajectories
        .first()
        .ok_or_else(|| Error::param("trajectories", "at least one trajectory is required"))?;
    let len = first.len();
    if len < 2 {
        return Err(Error::param(
            "trajectories",
            "at least one step is required",
        ));
    }
    let b_bar = p.b().apply(sol)?;
    let b_bar_norm = b_bar.norm();

    let mut sq_dist = Vec::with_capacity(trajectories.len());
    let mut s_partial = Vec::with_capacity(trajectories.len());
    let mut u_partial = Vec::with_capacity(trajectories.len());
    let mut min_s_summand = f64::INFINITY;
    for (k, t) in trajectories.iter().enumerate() {
        if t.len() != len {
            return Err(Error::param(
                "trajectories",
                format!("trajectory {k} has a different length"),
            ));
        }
        let records = t.records().ok_or_else(|| {
            Error::param(
                "trajectories",
                format!("trajectory {k} carries no step records"),
            )
        })?;
        let d: Vec<f64> = t.iterates().iter().map(|it| it.w.dist_sq(sol)).collect();
        let mut sp = Vec::with_capacity(len - 1);
        let mut up = Vec::with_capacity(len - 1);
        let (mut s_acc, mut u_acc) = (0.0, 0.0);
        for (it, r) in t.iterates().iter().zip(records) {
            let bw = p.b().apply(&it.w)?;
            let inner = crate::linalg::dot(&(&it.w - sol), &(&bw - &b_bar))?;
            let summand = r.lambda * r.gamma * inner;
            min_s_summand = min_s_summand.min(summand);
            s_acc += summand;
            u_acc += r.lambda * it.w.dist_sq(&r.y);
            sp.push(s_acc);
            up.push(u_acc);
        }
        sq_dist.push(d);
        s_partial.push(sp);
        u_partial.push(up);
    }

    let (mean_sq_dist, stderr_sq_dist) = column_stats(&sq_dist);
    let mean_s = column_stats(&s_partial).0;
    let mean_u = column_stats(&u_partial).0;
    let s_share = last_quarter_share(&mean_s);
    let u_share = last_quarter_share(&mean_u);

    let sigma = o.sigma();
    let monotonicity_violations = (1..len)
        .filter(|&n| {
            let allowance = 2.0 * sigma * sigma * chi_sq(s, o, b_bar_norm, n);
            let se = stderr_sq_dist[n - 1].max(stderr_sq_dist[n]);
            let lhs = mean_sq_dist[n];
            let rhs = mean_sq_dist[n - 1] + allowance + 5.0 * se;
            lhs > rhs + 1e-12 * (1.0 + mean_sq_dist[n - 1])
        })
        .collect();

    let mut terminal: Vec<f64> = sq_dist.iter().map(|d| d[len - 1]).collect();
    let terminal_q95 = quantile(&mut terminal, 0.95);

    Ok(FejerDiagnostics {
        replications: trajectories.len(),
        sq_dist,
        s_partial,
        u_partial,
        mean_sq_dist,
        stderr_sq_dist,
        mean_s,
        mean_u,
        min_s_summand,
        s_last_quarter_share: s_share,
        u_last_quarter_share: u_share,
        bounded: s_share <= LAST_QUARTER_TOLERANCE && u_share <= LAST_QUARTER_TOLERANCE,
        monotonicity_violations,
        terminal_q95,
    })
}

/// Column means and standard errors of equal-length rows.
pub(crate) fn column_stats(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let m = rows.len() as f64;
    let cols = rows[0].len();
    let mut mean = vec![0.0; cols];
    let mut se = vec![0.0; cols];
    for j in 0..cols {
        let mu = rows.iter().map(|r| r[j]).sum::<f64>() / m;
        mean[j] = mu;
        if rows.len() > 1 {
            let var = rows.iter().map(|r| (r[j] - mu).powi(2)).sum::<f64>() / (m - 1.0);
            se[j] = (var / m).sqrt();
        }
    }
    (mean, se)
}

fn last_quarter_share(partial: &[f64]) -> f64 {
    let total = partial[partial.len() - 1];
    if total <= 0.0 {
        return 0.0;
    }
    let start = (3 * partial.len()) / 4;
    let before = if start == 0 { 0.0 } else { partial[start - 1] };
    (total - before) / total
}

/// Linear-interpolation quantile; sorts `values` in place.
pub(crate) fn quantile(values: &mut [f64], q: f64) -> f64 {
    values.sort_by(f64::total_cmp);
    let pos = q * (values.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    values[lo] + (pos - lo as f64) * (values[hi] - values[lo])
}
