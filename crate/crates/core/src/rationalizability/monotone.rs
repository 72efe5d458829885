//! Checks that the imitation profile (θ_L = 0, x_E = −∞, x_N = +∞) is the
//! only monotone equilibrium of the perfectly informed model.

use serde::Serialize;

use crate::beliefs::History;
use crate::error::{Error, Result};
use crate::payoffs::{br_follower, br_leader, ExtReal, ModelKind, ModelParams};
use crate::special::{std_normal_cdf, x_plus_reversed_hazard};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotoneReport {
    pub checks: Vec<Check>,
    /// Smallest value of the interior-equilibrium residual on the grid.
    pub b4_min: f64,
    pub b4_argmin: f64,
    pub passed: bool,
}

/// σ_F(y + λ(y)) + ((n+1)/(2n))Φ(y) with y = (x_E − θ_L)/σ_F. An interior
/// monotone equilibrium would need a zero; both terms are positive.
pub fn interior_residual(y: f64, params: &ModelParams) -> f64 {
    let n = params.n as f64;
    params.sigma_f * x_plus_reversed_hazard(y) + (n + 1.0) / (2.0 * n) * std_normal_cdf(y)
}

pub fn verify_monotone_equilibrium(params: &ModelParams) -> Result<MonotoneReport> {
    if params.kind() != ModelKind::Main {
        return Err(Error::invalid("monotone-equilibrium check needs sigma_l = 0 and Gaussian noise"));
    }
    let mut checks = Vec::new();
    let mut push = |name, passed, detail: String| checks.push(Check { name, passed, detail });

    let e = br_follower(0.0, ExtReal::NegInf, History::Effort, params)?;
    push("effort_best_response", e == ExtReal::NegInf, format!("br_follower(0, -inf, E) = {e}"));
    let n = br_follower(0.0, ExtReal::PosInf, History::NoEffort, params)?;
    push("no_effort_best_response", n == ExtReal::PosInf, format!("br_follower(0, +inf, N) = {n}"));
    let l = br_leader(ExtReal::NegInf, params)?;
    push("leader_best_response", l == 0.0, format!("br_leader(-inf) = {l}"));

    let (mut b4_min, mut b4_argmin) = (f64::INFINITY, 0.0);
    for i in 0..=60_000 {
        let y = -30.0 + i as f64 * 1e-3;
        let r = interior_residual(y, params);
        if r < b4_min {
            b4_min = r;
            b4_argmin = y;
        }
    }
    push("no_interior_equilibrium", b4_min > 0.0, format!("min residual {b4_min:.6e} at y = {b4_argmin:.3}"));

    let passed = checks.iter().all(|c| c.passed);
    Ok(MonotoneReport { checks, b4_min, b4_argmin, passed })
}
