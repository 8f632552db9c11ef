use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{asymptotic_class, rate_bound, AsymptoticClass, RateConstants};
use crate::ergodic::{merit, theta0, ErgodicState};
use crate::error::{Error, Result};
use crate::linalg::{dot_slices, Point};
use crate::random::SeedSpec;
use crate::solver::{
    check_assumptions, fejer::column_stats, fejer::quantile, run_with, AssumptionReport,
};

use super::analysis::{compare_to_bound, ComparisonVerdict, SN0Source};
use super::config::{ExperimentConfig, Setup};

/// Version tag embedded in every report.
pub const VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// Statistics at one recorded iterate index n. Fields that do not apply to
/// the configured mode are absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub n: usize,
    /// Mean over replications of ‖wₙ − w̄‖².
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_sq_dist: Option<f64>,
    /// Sample standard deviation over √replications.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
    /// Closed-form bound on E‖wₙ − w̄‖², where valid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
    /// Mean of Σ_{t≤n} λₜγₜ⟨wₜ − w̄, Bwₜ − Bw̄⟩.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_s_partial: Option<f64>,
    /// Mean of Σ_{t≤n} λₜ‖wₜ − yₜ‖².
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_u_partial: Option<f64>,
    /// V at the replication mean of w̄ₙ.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub merit_of_mean: Option<f64>,
    /// Delta-method standard error of `merit_of_mean`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub merit_stderr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ergodic_bound: Option<f64>,
    /// Mean of θ₁,ₙ.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta1: Option<f64>,
    /// Σ_{t≤n} λₜγₜ
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_sum: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    pub t: f64,
    pub c: f64,
    pub tau: f64,
    pub n0: usize,
    pub asymptotic_class: AsymptoticClass,
    /// Exponent p of the predicted n^(−p) decay.
    pub predicted_exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FejerSummary {
    /// Share of the final mean Sₙ accrued over the last quarter of the steps.
    pub s_last_quarter_share: f64,
    pub u_last_quarter_share: f64,
    pub bounded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub version: String,
    pub config: ExperimentConfig,
    pub warnings: Vec<String>,
    pub assumptions: AssumptionReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_constants: Option<RateConstants>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derived: Option<DerivedConstants>,
    /// s_{n₀} used for the bound column.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_n0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta0: Option<f64>,
    pub rows: Vec<GridRow>,
    /// 95th percentile over replications of ‖w_{n_steps+1} − w̄‖².
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terminal_q95: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fejer: Option<FejerSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound_comparison: Option<ComparisonVerdict>,
}

impl MonteCarloReport {
    pub fn row(&self, n: usize) -> Option<&GridRow> {
        self.rows.iter().find(|r| r.n == n)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Per-replication values at the record grid.
#[derive(Debug, Default)]
struct ReplicationRecord {
    sq_dist: Vec<f64>,
    s_partial: Vec<f64>,
    u_partial: Vec<f64>,
    averages: Vec<Point>,
    theta1: Vec<f64>,
    weight_sum: Vec<f64>,
    terminal_sq_dist: Option<f64>,
}

fn run_replication(
    setup: &Setup,
    grid: &[usize],
    n_steps: usize,
    seed: SeedSpec,
) -> Result<ReplicationRecord> {
    let p = &setup.problem;
    let o = &setup.oracle;
    let sol = p.known_solution();
    let b_bar = sol.map(|s| p.b().apply_unchecked(s));
    let w1 = match &setup.vi {
        Some(vi) => vi.set().project(&setup.w1)?,
        None => setup.w1.clone(),
    };
    let sigma_sq = o.sigma() * o.sigma();
    let mut rec = ReplicationRecord::default();
    let mut state = setup.vi.as_ref().map(|v| ErgodicState::new(v.dim()));
    let (mut s_acc, mut u_acc, mut theta1_acc) = (0.0, 0.0, 0.0);
    let mut next_grid = 0;
    let last = run_with(
        p,
        o,
        &setup.schedule,
        &w1,
        n_steps,
        seed,
        |n, w, r, _next| {
            let needs_bw = b_bar.is_some() || state.is_some();
            let bw = needs_bw.then(|| p.b().apply_unchecked(w));
            if let (Some(sol), Some(bb), Some(bw)) = (sol, &b_bar, &bw) {
                let diff_w: Vec<f64> = w
                    .as_slice()
                    .iter()
                    .zip(sol.as_slice())
                    .map(|(a, b)| a - b)
                    .collect();
                let diff_b: Vec<f64> = bw
                    .as_slice()
                    .iter()
                    .zip(bb.as_slice())
                    .map(|(a, b)| a - b)
                    .collect();
                s_acc += r.lambda * r.gamma * dot_slices(&diff_w, &diff_b);
                u_acc += r.lambda * w.dist_sq(&r.y);
            }
            if let (Some(st), Some(bw)) = (state.as_mut(), &bw) {
                st.push(w, r.gamma * r.lambda);
                let lg2 = r.lambda * r.gamma * r.gamma;
                theta1_acc +=
                    0.5 * (lg2 * (1.0 + sigma_sq * o.alpha(n)) * bw.norm_sq() + sigma_sq * lg2);
            }
            if next_grid < grid.len() && grid[next_grid] == n {
                next_grid += 1;
                if let Some(sol) = sol {
                    rec.sq_dist.push(w.dist_sq(sol));
                    rec.s_partial.push(s_acc);
                    rec.u_partial.push(u_acc);
                }
                if let Some(st) = &state {
                    // An undefined average (all weights zero so far) is kept as
                    // the start point; its weight sum of 0 marks it.
                    rec.averages
                        .push(st.average().unwrap_or_else(|_| w.clone()));
                    rec.theta1.push(theta1_acc);
                    rec.weight_sum.push(st.weight_total);
                }
            }
        },
    )?;
    rec.terminal_sq_dist = sol.map(|s| last.dist_sq(s));
    Ok(rec)
}

/// Runs all replications and aggregates them at the record grid.
///
/// Replication r uses the stream (master_seed, r); results are merged in
/// replication order, so the report does not depend on the worker count.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<MonteCarloReport> {
    cfg.validate()?;
    let setup = cfg.build()?;
    let mut warnings = Vec::new();

    let mut assumptions = check_assumptions(
        &setup.problem,
        &setup.oracle,
        &setup.schedule,
        cfg.epsilon,
        cfg.assumption_horizon(),
    )?;
    assumptions.chi_sq_seq = None;
    if !assumptions.a3_ok {
        warnings.push(format!(
            "step-size condition violated at {} indices (first at n = {}); running anyway",
            assumptions.a3_violations,
            assumptions.a3_first_violation.unwrap_or(0)
        ));
    }
    if !assumptions.a4_sum_gamma_lambda_diverges || assumptions.a4_chi_summable == Some(false) {
        warnings.push("summability conditions on the steps do not hold".into());
    }

    let constants = match RateConstants::from_setup(
        &setup.problem,
        &setup.oracle,
        &setup.schedule,
        cfg.epsilon,
    ) {
        Ok(k) => Some(k.with_variant(cfg.constants_variant)),
        Err(Error::MissingConstants(m)) => {
            warnings.push(format!(
                "rate bound not evaluated; missing: {}",
                m.join(", ")
            ));
            None
        }
        Err(e) => {
            warnings.push(format!("rate bound not evaluated: {e}"));
            None
        }
    };

    let mut grid = cfg.grid();
    // The empirical s_{n₀} needs n₀ on the grid.
    if let Some(k) = &constants {
        let n0 = k.n0();
        if cfg.s_n0.is_none() && n0 <= cfg.n_steps && !grid.contains(&n0) {
            grid.push(n0);
            grid.sort_unstable();
        }
    }
    // The grid ends at or before n_steps; run the full horizon regardless.
    let horizon_grid = {
        let mut g = grid.clone();
        if *g.last().expect("grid is nonempty") < cfg.n_steps {
            g.push(cfg.n_steps);
        }
        g
    };

    let run_one = |r: usize| {
        run_replication(
            &setup,
            &horizon_grid,
            cfg.n_steps,
            SeedSpec::new(cfg.master_seed, r as u64),
        )
    };
    let reps: Vec<ReplicationRecord> = match cfg.workers {
        Some(1) => (0..cfg.n_replications)
            .map(run_one)
            .collect::<Result<_>>()?,
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::config("workers", e.to_string()))?
            .install(|| {
                (0..cfg.n_replications)
                    .into_par_iter()
                    .map(run_one)
                    .collect::<Result<_>>()
            })?,
        None => (0..cfg.n_replications)
            .into_par_iter()
            .map(run_one)
            .collect::<Result<_>>()?,
    };

    let extra = horizon_grid.len() - grid.len();
    let keep = |v: &Vec<f64>| v[..v.len() - extra].to_vec();
    let rows_of = |f: &dyn Fn(&ReplicationRecord) -> &Vec<f64>| -> Option<Vec<Vec<f64>>> {
        let first = f(&reps[0]);
        (!first.is_empty()).then(|| reps.iter().map(|r| keep(f(r))).collect())
    };

    let mut rows: Vec<GridRow> = grid
        .iter()
        .map(|&n| GridRow {
            n,
            mean_sq_dist: None,
            stderr: None,
            bound: None,
            mean_s_partial: None,
            mean_u_partial: None,
            merit_of_mean: None,
            merit_stderr: None,
            ergodic_bound: None,
            theta1: None,
            weight_sum: None,
        })
        .collect();

    let mut fejer = None;
    if let Some(sq) = rows_of(&|r| &r.sq_dist) {
        let (mean, se) = column_stats(&sq);
        let mean_s = column_stats(&rows_of(&|r| &r.s_partial).expect("recorded with distances")).0;
        let mean_u = column_stats(&rows_of(&|r| &r.u_partial).expect("recorded with distances")).0;
        for (k, row) in rows.iter_mut().enumerate() {
            row.mean_sq_dist = Some(mean[k]);
            row.stderr = Some(se[k]);
            row.mean_s_partial = Some(mean_s[k]);
            row.mean_u_partial = Some(mean_u[k]);
        }
        // Full-horizon partial sums, including the trailing run-only index.
        let full_s = column_stats(&reps.iter().map(|r| r.s_partial.clone()).collect::<Vec<_>>()).0;
        let full_u = column_stats(&reps.iter().map(|r| r.u_partial.clone()).collect::<Vec<_>>()).0;
        let s_share = last_quarter_share(&horizon_grid, &full_s, cfg.n_steps);
        let u_share = last_quarter_share(&horizon_grid, &full_u, cfg.n_steps);
        fejer = Some(FejerSummary {
            s_last_quarter_share: s_share,
            u_last_quarter_share: u_share,
            bounded: s_share <= crate::solver::fejer::LAST_QUARTER_TOLERANCE
                && u_share <= crate::solver::fejer::LAST_QUARTER_TOLERANCE,
        });
    }
    let terminal_q95 = {
        let mut t: Vec<f64> = reps.iter().filter_map(|r| r.terminal_sq_dist).collect();
        (!t.is_empty()).then(|| quantile(&mut t, 0.95))
    };

    let mut theta0_value = None;
    if let Some(vi) = &setup.vi {
        let start = vi.set().project(&setup.w1)?;
        let th0 = theta0(vi.set(), &start)?;
        theta0_value = Some(th0);
        let theta1 = column_stats(&rows_of(&|r| &r.theta1).expect("ergodic mode")).0;
        let m = reps.len() as f64;
        for (k, row) in rows.iter_mut().enumerate() {
            let weight = reps[0].weight_sum[k];
            row.weight_sum = Some(weight);
            row.theta1 = Some(theta1[k]);
            if weight > 0.0 {
                row.ergodic_bound = Some((th0 + theta1[k]) / weight);
                let mut mean = Point::zeros(vi.dim());
                for r in &reps {
                    mean.add_scaled_in_place(1.0 / m, &r.averages[k]);
                }
                let mv = merit(vi, &mean)?;
                // By Danskin's theorem the gradient of V at the mean is B(w*)
                // for the maximizer w*; the delta method gives the error.
                let g = vi.b().apply_unchecked(&mv.maximizer);
                let proj: Vec<f64> = reps
                    .iter()
                    .map(|r| dot_slices(g.as_slice(), r.averages[k].as_slice()))
                    .collect();
                let mu = proj.iter().sum::<f64>() / m;
                let se = if reps.len() > 1 {
                    (proj.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (m - 1.0) / m).sqrt()
                } else {
                    0.0
                };
                row.merit_of_mean = Some(mv.value);
                row.merit_stderr = Some(se);
            }
        }
    }

    let mut derived = None;
    let mut s_n0 = None;
    let mut bound_comparison = None;
    let mut report = MonteCarloReport {
        version: VERSION.to_string(),
        config: cfg.clone(),
        warnings,
        assumptions,
        rate_constants: constants,
        derived: None,
        s_n0: None,
        theta0: theta0_value,
        rows,
        terminal_q95,
        fejer,
        bound_comparison: None,
    };
    if let Some(k) = &constants {
        let n0 = k.n0();
        derived = Some(DerivedConstants {
            t: k.t(),
            c: k.c(),
            tau: k.tau(),
            n0,
            asymptotic_class: asymptotic_class(k),
            predicted_exponent: asymptotic_class(k).exponent(k),
        });
        let source = match cfg.s_n0 {
            Some(s) => SN0Source::Supplied(s),
            None => SN0Source::Empirical,
        };
        s_n0 = match source {
            SN0Source::Supplied(s) => Some(s),
            SN0Source::Empirical => report.row(n0).and_then(|r| r.mean_sq_dist),
        };
        if let Some(s) = s_n0 {
            for row in report.rows.iter_mut() {
                if row.n > 2 * n0 {
                    row.bound = Some(rate_bound(k, s, row.n - 1)?);
                }
            }
        }
        match compare_to_bound(&report, k, source) {
            Ok(v) => bound_comparison = Some(v),
            Err(e) => report
                .warnings
                .push(format!("bound comparison skipped: {e}")),
        }
    }
    report.derived = derived;
    report.s_n0 = s_n0;
    report.bound_comparison = bound_comparison;
    Ok(report)
}

/// Share of the final partial sum accrued after the last recorded index
/// at or below 3/4 of the horizon.
fn last_quarter_share(grid: &[usize], partial: &[f64], n_steps: usize) -> f64 {
    let total = partial[partial.len() - 1];
    if !(total > 0.0) {
        return 0.0;
    }
    let cut = (3 * n_steps) / 4;
    let before = grid
        .iter()
        .zip(partial)
        .filter(|(&n, _)| n <= cut)
        .map(|(_, &v)| v)
        .next_back()
        .unwrap_or(0.0);
    (total - before) / total
}
