use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::bounds::{rate_bound, RateConstants};
use crate::error::{Error, Result};
use crate::solver::chi_sq;

use super::experiment::MonteCarloReport;

/// Minimum number of points for a slope fit.
pub const MIN_FIT_POINTS: usize = 5;
/// Share of grid points that must satisfy the bound.
pub const BOUND_PASS_SHARE: f64 = 0.95;
/// Standard errors of slack granted to Monte Carlo means.
pub const STDERR_SLACK: f64 = 5.0;

/// Least-squares fit of log y = a + p·log n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    /// One standard error of the slope.
    pub half_width: f64,
    pub intercept: f64,
    pub points: usize,
}

pub fn fit_log_log(ns: &[f64], values: &[f64]) -> Result<RateFit> {
    if ns.len() != values.len() {
        return Err(Error::param("values", "length differs from the indices"));
    }
    if ns.len() < MIN_FIT_POINTS {
        return Err(Error::param(
            "window",
            format!("{} points, at least {MIN_FIT_POINTS} are needed", ns.len()),
        ));
    }
    if ns
        .iter()
        .chain(values)
        .any(|v| !(*v > 0.0 && v.is_finite()))
    {
        return Err(Error::param(
            "values",
            "log-log fit needs positive finite values",
        ));
    }
    let x: Vec<f64> = ns.iter().map(|n| n.ln()).collect();
    let y: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let m = x.len() as f64;
    let xm = x.iter().sum::<f64>() / m;
    let ym = y.iter().sum::<f64>() / m;
    let sxx: f64 = x.iter().map(|a| (a - xm).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::param("window", "all indices coincide"));
    }
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - xm) * (b - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let rss: f64 = x
        .iter()
        .zip(&y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let half_width = (rss / (m - 2.0) / sxx).sqrt();
    Ok(RateFit {
        slope,
        half_width,
        intercept,
        points: x.len(),
    })
}

/// Slope of log ŝₙ against log n over grid indices in [lo, hi].
pub fn fit_rate(report: &MonteCarloReport, window: (usize, usize)) -> Result<RateFit> {
    let (lo, hi) = window;
    if lo > hi {
        return Err(Error::param("window", "lower end exceeds upper end"));
    }
    let (ns, vals): (Vec<f64>, Vec<f64>) = report
        .rows
        .iter()
        .filter(|r| r.n >= lo && r.n <= hi)
        .filter_map(|r| r.mean_sq_dist.map(|v| (r.n as f64, v)))
        .unzip();
    fit_log_log(&ns, &vals)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SN0Source {
    /// The Monte Carlo mean at n₀.
    Empirical,
    Supplied(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointVerdict {
    pub n: usize,
    pub mean_sq_dist: f64,
    pub stderr: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonVerdict {
    pub n0: usize,
    pub s_n0: f64,
    pub points: Vec<PointVerdict>,
    pub pass_share: f64,
    pub pass: bool,
}

/// Checks ŝₘ ≤ bound + 5·stderr at every grid index m with m − 1 ≥ 2n₀,
/// where the bound on s_{(m−1)+1} is evaluated at n = m − 1. The overall
/// verdict passes when at least 95% of the points do.
pub fn compare_to_bound(
    report: &MonteCarloReport,
    k: &RateConstants,
    source: SN0Source,
) -> Result<ComparisonVerdict> {
    let n0 = k.n0();
    let s_n0 = match source {
        SN0Source::Supplied(s) => s,
        SN0Source::Empirical => report
            .row(n0)
            .and_then(|r| r.mean_sq_dist)
            .ok_or_else(|| Error::param("record_grid", format!("no recorded mean at n0 = {n0}")))?,
    };
    let mut points = Vec::new();
    for row in &report.rows {
        let (Some(mean), Some(se)) = (row.mean_sq_dist, row.stderr) else {
            continue;
        };
        if row.n < 2 * n0 + 1 {
            continue;
        }
        let bound = rate_bound(k, s_n0, row.n - 1)?;
        points.push(PointVerdict {
            n: row.n,
            mean_sq_dist: mean,
            stderr: se,
            bound,
            pass: mean <= bound + STDERR_SLACK * se,
        });
    }
    if points.is_empty() {
        return Err(Error::OutOfRange {
            n: report.rows.last().map_or(0, |r| r.n),
            min: 2 * n0 + 1,
        });
    }
    let pass_share = points.iter().filter(|p| p.pass).count() as f64 / points.len() as f64;
    Ok(ComparisonVerdict {
        n0,
        s_n0,
        points,
        pass_share,
        pass: pass_share >= BOUND_PASS_SHARE,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCheck {
    pub n: usize,
    pub next: usize,
    pub mean: f64,
    pub next_mean: f64,
    /// Σ_{n ≤ t < next} 2σ²χ²ₜ + 5·max(stderr).
    pub allowance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasiFejerCheck {
    pub pairs: Vec<PairCheck>,
    pub violations: usize,
}

/// Mean decrease between consecutive recorded indices, up to the summed
/// perturbations 2σ²χ²ₜ of the steps in between and Monte Carlo slack.
pub fn quasi_fejer_check(report: &MonteCarloReport) -> Result<QuasiFejerCheck> {
    let setup = report.config.build()?;
    let b_bar = setup
        .problem
        .b_at_solution_norm()
        .ok_or(Error::MissingSolution("quasi-Fejer check"))?;
    let sigma_sq = setup.oracle.sigma().powi(2);
    let rows: Vec<_> = report
        .rows
        .iter()
        .filter_map(|r| Some((r.n, r.mean_sq_dist?, r.stderr?)))
        .collect();
    let mut pairs = Vec::with_capacity(rows.len().saturating_sub(1));
    for w in rows.windows(2) {
        let ((n, m0, se0), (next, m1, se1)) = (w[0], w[1]);
        let drift: f64 = (n..next)
            .map(|t| 2.0 * sigma_sq * chi_sq(&setup.schedule, &setup.oracle, b_bar, t))
            .sum();
        let allowance = drift + STDERR_SLACK * se0.max(se1);
        pairs.push(PairCheck {
            n,
            next,
            mean: m0,
            next_mean: m1,
            allowance,
            pass: m1 <= m0 + allowance + 1e-12 * (1.0 + m0),
        });
    }
    let violations = pairs.iter().filter(|p| !p.pass).count();
    Ok(QuasiFejerCheck { pairs, violations })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// CSV `n,mean_sq_dist,stderr,bound`; empty cells where a value is absent.
pub fn rates_csv(report: &MonteCarloReport) -> String {
    let mut out = String::from("n,mean_sq_dist,stderr,bound\n");
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.n,
            opt(r.mean_sq_dist),
            opt(r.stderr),
            opt(r.bound)
        );
    }
    out
}

/// CSV `n,merit_of_mean,bound,weight_sum`.
pub fn merit_csv(report: &MonteCarloReport) -> String {
    let mut out = String::from("n,merit_of_mean,bound,weight_sum\n");
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.n,
            opt(r.merit_of_mean),
            opt(r.ergodic_bound),
            opt(r.weight_sum)
        );
    }
    out
}
