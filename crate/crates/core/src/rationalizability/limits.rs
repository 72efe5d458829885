//! Direct solution of the limit system of the perfectly informed model, and
//! the critical follower noise above which it has a single solution.

use crate::beliefs::History;
use crate::error::{Error, Result};
use crate::payoffs::{br_leader, follower_fixed_point_residual, ExtReal, ModelKind, ModelParams};
use crate::roots::{brent, golden_max};
use crate::special::{reversed_hazard, std_normal_cdf, std_normal_pdf};

use super::engine::{iterate_bounds_main, same, BoundsState, SolveOptions};

/// Limits of the bound sequences: θ̄_L, x̄_E and x̲_N (the remaining three
/// are pinned at 0, −∞ and +∞).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct MainLimits {
    pub theta_bar: ExtReal,
    pub x_e_bar: ExtReal,
    pub x_n_lo: ExtReal,
}

impl MainLimits {
    pub fn unique(&self) -> bool {
        self.theta_bar == ExtReal::Finite(0.0) && self.x_e_bar == ExtReal::NegInf && self.x_n_lo == ExtReal::PosInf
    }

    pub fn state(&self, round: usize) -> BoundsState {
        BoundsState {
            round,
            theta_lo: ExtReal::Finite(0.0),
            theta_hi: self.theta_bar,
            x_e_lo: ExtReal::NegInf,
            x_e_hi: self.x_e_bar,
            x_n_lo: self.x_n_lo,
            x_n_hi: ExtReal::PosInf,
        }
    }
}

/// Fixed-point residual of an Effort threshold against a leader threshold of
/// zero: x + σλ(x/σ) − ((n−1)/(2n))Φ(x/σ). Its largest root is x̄_E.
pub fn effort_residual(x: f64, params: &ModelParams) -> f64 {
    follower_fixed_point_residual(x, 0.0, History::Effort, params)
}

/// Fixed-point residual of a NoEffort threshold against leader threshold θ̄;
/// its smallest root is x̲_N.
pub fn no_effort_residual(x: f64, theta_bar: f64, params: &ModelParams) -> f64 {
    follower_fixed_point_residual(x, theta_bar, History::NoEffort, params)
}

// Sample points for the sign-change scans over [lo, hi]: a grid of step
// min(σ_F, 1)·1e-3 within 12σ_F of the leader threshold c, and only the end
// points of the two tails. Both residuals are strictly increasing once
// |x − c| > 12σ_F (the rank-belief slope is below φ(12)/σ_F there), so a
// tail holds a crossing exactly when its end points differ in sign.
fn scan_points(params: &ModelParams, c: f64, lo: f64, hi: f64) -> Vec<f64> {
    let sf = params.sigma_f;
    let h = sf.min(1.0) * 1e-3;
    let a = (c - 12.0 * sf).max(lo);
    let b = (c + 12.0 * sf).min(hi);
    let mut pts = vec![lo];
    if a < b {
        let steps = ((b - a) / h).ceil() as usize;
        pts.extend((0..=steps).map(|i| (a + i as f64 * h).min(b)));
    }
    pts.push(hi);
    pts.dedup();
    pts
}

/// Solves the limit system directly: x̄_E is the largest zero of the Effort
/// residual, θ̄ the leader's best response to it, and x̲_N the first upward
/// crossing of the NoEffort residual. Missing roots map to the infinities.
pub fn solve_limits_main(params: &ModelParams) -> Result<MainLimits> {
    if params.kind() != ModelKind::Main {
        return Err(Error::invalid("solve_limits_main needs sigma_l = 0 and Gaussian noise"));
    }
    let f = |x: f64| Ok(effort_residual(x, params));
    // positive for x ≥ 1/2; the last crossing from the right is x̄_E
    let pts = scan_points(params, 0.0, -2.0, 2.0);
    let mut x_e_bar = ExtReal::NegInf;
    let mut right = (pts[pts.len() - 1], effort_residual(pts[pts.len() - 1], params));
    for &x in pts.iter().rev().skip(1) {
        let r = effort_residual(x, params);
        if r <= 0.0 {
            x_e_bar = ExtReal::Finite(if r == 0.0 { x } else { brent(f, x, right.0, 1e-13)? });
            break;
        }
        right = (x, r);
    }

    let theta_bar = br_leader(x_e_bar, params)?;
    let g = |x: f64| Ok(no_effort_residual(x, theta_bar, params));
    let pts = scan_points(params, theta_bar, -2.0, 2.0 + 40.0 * params.sigma_f);
    let mut x_n_lo = ExtReal::PosInf;
    for w in pts.windows(2) {
        if no_effort_residual(w[1], theta_bar, params) >= 0.0 {
            x_n_lo = ExtReal::Finite(brent(g, w[0], w[1], 1e-13)?);
            break;
        }
    }
    Ok(MainLimits { theta_bar: ExtReal::Finite(theta_bar), x_e_bar, x_n_lo })
}

/// Agreement tolerance between the limit solver and the engine.
pub const CHECK_TOL: f64 = 1e-6;

/// [`solve_limits_main`], cross-checked against the iteration engine;
/// disagreement beyond [`CHECK_TOL`] is a consistency error.
pub fn solve_limits_main_checked(params: &ModelParams, opts: &SolveOptions) -> Result<MainLimits> {
    let direct = solve_limits_main(params)?;
    let report = iterate_bounds_main(params, opts)?;
    if !report.converged {
        return Err(Error::NotConverged { rounds: report.rounds_used });
    }
    let (t, xe, xn) = report.limits.headline();
    let pairs = [("theta_bar", direct.theta_bar, t), ("x_e_bar", direct.x_e_bar, xe), ("x_n_lo", direct.x_n_lo, xn)];
    for (name, a, b) in pairs {
        if !same(a, b, CHECK_TOL) {
            return Err(Error::Consistency(format!("{name}: limit solver {a}, engine {b}")));
        }
    }
    Ok(direct)
}

// ρ(x, σ) − x = (w/2)Φ(x/σ) − σλ(x/σ) − x, maximised over the tangency
// region x ∈ (0, 1/2] where it is concave. Positive iff the Effort residual
// has a zero, i.e. iff the limit bounds stay apart.
fn gap(sigma: f64, w: f64) -> f64 {
    let d = |x: f64| 0.5 * w * std_normal_cdf(x / sigma) - sigma * reversed_hazard(x / sigma) - x;
    golden_max(d, 0.0, 0.5, 1e-12).1
}

/// Lower bound (n−1)/(8nφ(0)) on the critical noise.
pub fn critical_sigma_f_lower_bound(n: usize) -> f64 {
    (n as f64 - 1.0) / (8.0 * n as f64 * std_normal_pdf(0.0))
}

/// σ̂_F(n): the follower noise at which the bounds of the perfectly informed
/// model collapse. For σ_F above it the iteration leaves a single profile.
pub fn critical_sigma_f(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::invalid(format!("need at least 2 followers, got n = {n}")));
    }
    let w = (n as f64 - 1.0) / n as f64;
    let mut lo = critical_sigma_f_lower_bound(n);
    if gap(lo, w) <= 0.0 {
        return Err(Error::Consistency(format!("bounds already collapse at sigma_f = {lo}")));
    }
    let mut hi = 2.0 * lo;
    while gap(hi, w) > 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e3 {
            return Err(Error::Consistency("no collapse below sigma_f = 1000".into()));
        }
    }
    while hi - lo > 1e-11 {
        let mid = 0.5 * (lo + hi);
        if gap(mid, w) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    // sign changes of the Effort residual on a fine grid
    fn crossings(params: &ModelParams) -> usize {
        let mut prev = effort_residual(-2.0, params);
        let mut count = 0;
        for i in 1..=400_000 {
            let r = effort_residual(-2.0 + i as f64 * 1e-5, params);
            if (r > 0.0) != (prev > 0.0) {
                count += 1;
            }
            prev = r;
        }
        count
    }

    #[test]
    fn critical_noise_separates_root_counts() {
        for n in [2, 5] {
            let s = critical_sigma_f(n).unwrap();
            assert!(s > critical_sigma_f_lower_bound(n));
            assert_eq!(crossings(&ModelParams::new(n, 1.01 * s).unwrap()), 0);
            assert!(crossings(&ModelParams::new(n, 0.99 * s).unwrap()) >= 2);
        }
    }

    #[test]
    fn limits_agree_with_engine() {
        for sf in [0.05, 0.15, 0.6] {
            let p = ModelParams::new(3, sf).unwrap();
            solve_limits_main_checked(&p, &SolveOptions { max_rounds: 20_000, tol: 1e-11 }).unwrap();
        }
    }

    #[test]
    fn windowed_scan_matches_full_grid() {
        for sf in [0.02, 0.1, 0.2] {
            let p = ModelParams::new(4, sf).unwrap();
            let h = sf * 1e-3;
            let steps = (4.0 / h) as usize;
            let full = (0..=steps).rev().map(|i| 2.0 - i as f64 * h).rev().find(|&x| effort_residual(x, &p) <= 0.0);
            let l = solve_limits_main(&p).unwrap();
            match full {
                Some(x) => assert!((l.x_e_bar.to_f64() - x).abs() <= h, "{sf}: {} vs {x}", l.x_e_bar),
                None => assert_eq!(l.x_e_bar, ExtReal::NegInf),
            }
        }
    }

    #[test]
    fn unique_above_critical() {
        let s = critical_sigma_f(4).unwrap();
        let l = solve_limits_main(&ModelParams::new(4, 1.1 * s).unwrap()).unwrap();
        assert!(l.unique());
        let l = solve_limits_main(&ModelParams::new(4, 0.9 * s).unwrap()).unwrap();
        assert!(!l.unique());
        assert!(l.theta_bar.to_f64() > 0.0);
    }
}
