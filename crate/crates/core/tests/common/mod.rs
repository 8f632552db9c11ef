//! Independent reference computations shared by the integration tests.
//! Nothing here calls the closed-form prox or projection code under test.
#![allow(dead_code)]

use sfb::operators::ScalarPenalty;
use sfb::{Matrix, Point, RandomStream};

pub const GRID_STEP: f64 = 1e-4;

pub fn pt(v: &[f64]) -> Point {
    Point::new(v.to_vec()).unwrap()
}

pub fn random_point(stream: &mut RandomStream, dim: usize, scale: f64) -> Point {
    pt(&(0..dim)
        .map(|_| scale * stream.standard_normal())
        .collect::<Vec<_>>())
}

/// Golden-section minimization of a convex function on [a, b].
pub fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Minimizes a convex scalar function on [lo, hi] by a scan at `GRID_STEP`
/// followed by golden-section refinement around the best grid node.
pub fn grid_minimize(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let cells = ((hi - lo) / GRID_STEP).ceil().max(1.0) as usize;
    let h = (hi - lo) / cells as f64;
    let mut best = (f64::INFINITY, lo);
    for i in 0..=cells {
        let v = lo + i as f64 * h;
        let fv = f(v);
        if fv < best.0 {
            best = (fv, v);
        }
    }
    let a = (best.1 - h).max(lo);
    let b = (best.1 + h).min(hi);
    golden_section(f, a, b, 1e-10)
}

/// argmin_v step·φ(v) + step·(ν/2)v² + ½(z − v)² by direct minimization.
/// The minimizer lies between 0 and z because φ is minimized at 0.
pub fn grid_prox(phi: &ScalarPenalty, nu: f64, step: f64, z: f64) -> f64 {
    let (dlo, dhi) = phi.domain();
    let lo = (z.min(0.0) - 1.0).max(dlo);
    let hi = (z.max(0.0) + 1.0).min(dhi);
    let obj = |v: f64| step * phi.value(v) + 0.5 * step * nu * v * v + 0.5 * (z - v) * (z - v);
    grid_minimize(obj, lo, hi)
}

/// Brute-force search on the sphere of radius r around `center` in ℝ²
/// for the point nearest to z (z assumed outside the ball).
pub fn sphere_nearest_2d(center: [f64; 2], r: f64, z: [f64; 2]) -> [f64; 2] {
    let obj = |t: f64| {
        let p = [center[0] + r * t.cos(), center[1] + r * t.sin()];
        (p[0] - z[0]).powi(2) + (p[1] - z[1]).powi(2)
    };
    let t = grid_minimize(obj, -std::f64::consts::PI, std::f64::consts::PI);
    [center[0] + r * t.cos(), center[1] + r * t.sin()]
}

/// Lasso objective (1/2m)‖Xw − y‖² + reg·‖w‖₁ minimized by cyclic
/// coordinate descent with exact one-dimensional minimization.
pub struct LassoReference {
    pub solution: Vec<f64>,
    pub sweeps: usize,
}

pub fn lasso_coordinate_descent(x: &Matrix, y: &[f64], reg: f64) -> LassoReference {
    let (m, d) = (x.rows(), x.cols());
    let mf = m as f64;
    let mut w = vec![0.0; d];
    let mut resid: Vec<f64> = y.iter().map(|v| -v).collect();
    let col_sq: Vec<f64> = (0..d)
        .map(|k| (0..m).map(|i| x.get(i, k).powi(2)).sum::<f64>() / mf)
        .collect();
    for sweep in 1..=100_000 {
        let mut max_change: f64 = 0.0;
        for k in 0..d {
            // Partial residual without coordinate k.
            let rho: f64 = (0..m)
                .map(|i| x.get(i, k) * (resid[i] - x.get(i, k) * w[k]))
                .sum::<f64>()
                / mf;
            let new = if rho < -reg {
                (-rho - reg) / col_sq[k]
            } else if rho > reg {
                (-rho + reg) / col_sq[k]
            } else {
                0.0
            };
            let delta = new - w[k];
            if delta != 0.0 {
                for (i, r) in resid.iter_mut().enumerate() {
                    *r += x.get(i, k) * delta;
                }
                w[k] = new;
            }
            max_change = max_change.max(delta.abs());
        }
        if max_change < 1e-15 {
            return LassoReference {
                solution: w,
                sweeps: sweep,
            };
        }
    }
    panic!("coordinate descent did not converge");
}

/// Largest violation of the coordinate-wise optimality conditions
/// gₖ + reg·sign(wₖ) = 0 for wₖ ≠ 0 and |gₖ| ≤ reg for wₖ = 0.
pub fn lasso_optimality_gap(x: &Matrix, y: &[f64], reg: f64, w: &[f64]) -> f64 {
    let m = x.rows() as f64;
    let r: Vec<f64> = x.matvec(w).iter().zip(y).map(|(a, b)| a - b).collect();
    let g: Vec<f64> = x.tmatvec(&r).iter().map(|v| v / m).collect();
    g.iter()
        .zip(w)
        .map(|(gk, wk)| {
            if *wk != 0.0 {
                (gk + reg * wk.signum()).abs()
            } else {
                (gk.abs() - reg).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}
