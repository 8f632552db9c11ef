use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Deserialize;

use sfb::bounds::{bound_csv, RateConstants};
use sfb::ergodic::run_ergodic;
use sfb::harness::{
    fit_rate, log_grid, merit_csv, quasi_fejer_check, rates_csv, run_experiment, ExperimentConfig,
    Mode,
};
use sfb::solver::{check_assumptions, run};
use sfb::{Error, Result, SeedSpec};

#[derive(Parser)]
#[command(
    name = "sfb",
    version,
    about = "Stochastic forward-backward splitting experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment and write the report, rate/merit CSVs and the
    /// trajectory of replication 0.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit the decay rate over a window and compare with the bound.
    /// Exits with status 1 when the verdict fails.
    Rates {
        #[arg(long)]
        config: PathBuf,
        /// Index window `a:b`.
        #[arg(long, default_value = "1000:10000")]
        window: String,
        /// Accepted slope range `lo:hi`; when given, the slope must lie in it.
        #[arg(long, allow_hyphen_values = true)]
        slope_range: Option<String>,
        /// Also write the rate CSV here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Merit-of-mean curve of an ergodic_vi experiment.
    Merit {
        #[arg(long)]
        config: PathBuf,
        /// Directory for merit.csv and bound.csv; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the closed-form bound on a grid.
    Bound {
        /// JSON with the rate constants and `s_n0`.
        #[arg(long)]
        constants: PathBuf,
        /// `a:b:k` (k log-spaced indices) or a comma-separated list.
        #[arg(long)]
        grid: String,
    },
    /// Report on the step-size and summability conditions as JSON.
    Check {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Deserialize)]
struct BoundRequest {
    #[serde(flatten)]
    constants: RateConstants,
    s_n0: f64,
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    let _ = std::io::stdout().write_all(text.as_bytes());
}

fn read_config(path: &Path) -> Result<ExperimentConfig> {
    ExperimentConfig::from_json(&fs::read_to_string(path)?)
}

fn parse_pair<T: std::str::FromStr>(s: &str, field: &'static str) -> Result<(T, T)> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [a, b] => match (a.trim().parse(), b.trim().parse()) {
            (Ok(a), Ok(b)) => Ok((a, b)),
            _ => Err(Error::param(field, format!("cannot parse `{s}`"))),
        },
        _ => Err(Error::param(field, format!("expected `a:b`, got `{s}`"))),
    }
}

fn parse_grid(spec: &str) -> Result<Vec<usize>> {
    let bad = || Error::param("grid", format!("cannot parse `{spec}`"));
    if spec.contains(':') {
        let parts: Vec<usize> = spec
            .split(':')
            .map(|p| p.trim().parse().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        match parts.as_slice() {
            [a, b, k] if a <= b && *k >= 1 => Ok(log_grid(*a, *b, *k)),
            _ => Err(bad()),
        }
    } else {
        spec.split(',')
            .map(|p| p.trim().parse().map_err(|_| bad()))
            .collect()
    }
}

fn solve(config: &Path, out: &Path) -> Result<()> {
    let cfg = read_config(config)?;
    let report = run_experiment(&cfg)?;
    fs::create_dir_all(out)?;
    fs::write(out.join("report.json"), report.to_json()?)?;
    if report.rows.iter().any(|r| r.mean_sq_dist.is_some()) {
        fs::write(out.join("rates.csv"), rates_csv(&report))?;
    }
    let setup = cfg.build()?;
    let seed = SeedSpec::new(cfg.master_seed, 0);
    let traj = match (&setup.vi, cfg.mode) {
        (Some(vi), Mode::ErgodicVi) => {
            fs::write(out.join("merit.csv"), merit_csv(&report))?;
            run_ergodic(
                vi,
                &setup.oracle,
                &setup.schedule,
                &setup.w1,
                cfg.n_steps,
                seed,
            )?
            .trajectory
        }
        _ => run(
            &setup.problem,
            &setup.oracle,
            &setup.schedule,
            &setup.w1,
            cfg.n_steps,
            seed,
        )?,
    };
    fs::write(out.join("trajectory.csv"), traj.to_csv())?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    emit(&format!("wrote {}\n", out.display()));
    Ok(())
}

fn rates(
    config: &Path,
    window: &str,
    slope_range: Option<&str>,
    csv: Option<&Path>,
) -> Result<bool> {
    let cfg = read_config(config)?;
    let window: (usize, usize) = parse_pair(window, "window")?;
    let range: Option<(f64, f64)> = slope_range
        .map(|s| parse_pair(s, "slope_range"))
        .transpose()?;
    let report = run_experiment(&cfg)?;
    if let Some(path) = csv {
        fs::write(path, rates_csv(&report))?;
    }
    let fit = fit_rate(&report, window)?;
    let slope_ok = match range {
        Some((lo, hi)) => fit.slope >= lo && fit.slope <= hi,
        None => fit.slope < 0.0,
    };
    let bound_ok = report.bound_comparison.as_ref().map(|b| b.pass);
    let fejer = quasi_fejer_check(&report).ok();
    let pass = slope_ok && bound_ok.unwrap_or(true);
    let summary = serde_json::json!({
        "window": [window.0, window.1],
        "slope": fit.slope,
        "half_width": fit.half_width,
        "points": fit.points,
        "predicted_exponent": report.derived.as_ref().map(|d| d.predicted_exponent),
        "slope_ok": slope_ok,
        "bound_pass": bound_ok,
        "bound_pass_share": report.bound_comparison.as_ref().map(|b| b.pass_share),
        "quasi_fejer_violations": fejer.map(|f| f.violations),
        "warnings": report.warnings,
        "pass": pass,
    });
    emit(&format!("{}\n", serde_json::to_string_pretty(&summary)?));
    Ok(pass)
}

fn merit(config: &Path, out: Option<&Path>) -> Result<()> {
    let cfg = read_config(config)?;
    if cfg.mode != Mode::ErgodicVi {
        return Err(Error::config("mode", "merit requires ergodic_vi"));
    }
    let report = run_experiment(&cfg)?;
    let merit = merit_csv(&report);
    match out {
        Some(dir) => {
            let mut bound = String::from("n,bound\n");
            for r in &report.rows {
                if let Some(b) = r.ergodic_bound {
                    bound.push_str(&format!("{},{}\n", r.n, b));
                }
            }
            fs::create_dir_all(dir)?;
            fs::write(dir.join("merit.csv"), merit)?;
            fs::write(dir.join("bound.csv"), bound)?;
            emit(&format!("wrote {}\n", dir.display()));
        }
        None => emit(&merit),
    }
    Ok(())
}

fn bound(constants: &Path, grid: &str) -> Result<()> {
    let req: BoundRequest = serde_json::from_str(&fs::read_to_string(constants)?)?;
    req.constants.validate()?;
    emit(&bound_csv(&req.constants, req.s_n0, &parse_grid(grid)?)?);
    Ok(())
}

fn check(config: &Path) -> Result<()> {
    let cfg = read_config(config)?;
    let setup = cfg.build()?;
    let report = check_assumptions(
        &setup.problem,
        &setup.oracle,
        &setup.schedule,
        cfg.epsilon,
        cfg.assumption_horizon(),
    )?;
    emit(&format!("{}\n", serde_json::to_string_pretty(&report)?));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve { config, out } => solve(config, out).map(|_| true),
        Command::Rates {
            config,
            window,
            slope_range,
            csv,
        } => rates(config, window, slope_range.as_deref(), csv.as_deref()),
        Command::Merit { config, out } => merit(config, out.as_deref()).map(|_| true),
        Command::Bound { constants, grid } => bound(constants, grid).map(|_| true),
        Command::Check { config } => check(config).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
