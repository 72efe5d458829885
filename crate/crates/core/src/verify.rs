//! Invariant suites run by `ratbounds verify`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::beliefs::{rank_belief_main, History};
use crate::error::{Error, Result};
use crate::mc::{mc_follower_payoff, mc_posterior_mean, mc_rank_belief, McConfig};
use crate::noise::NoiseFamily;
use crate::payoffs::{follower_fixed_point_residual, posterior_mean, rank_belief, ExtReal, ModelParams};
use crate::rationalizability::{
    audit_trace, critical_sigma_f, critical_sigma_f_lower_bound, iterate_bounds_ext, iterate_bounds_logconcave,
    iterate_bounds_main, solve_limits_main, sufficient_sigma_l, verify_monotone_equilibrium, BoundsState, SolveOptions,
};
use crate::special::{owens_t, reversed_hazard, s_tilde, std_normal_cdf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Analytic,
    Mc,
    All,
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytic" => Ok(Suite::Analytic),
            "mc" => Ok(Suite::Mc),
            "all" => Ok(Suite::All),
            _ => Err(Error::invalid(format!("unknown suite {s:?} (expected analytic, mc or all)"))),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Analytic => "analytic",
            Suite::Mc => "mc",
            Suite::All => "all",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        CheckResult { name: name.to_string(), passed, detail: detail.into() }
    }

    fn from_result(name: &str, r: Result<(bool, String)>) -> Self {
        match r {
            Ok((passed, detail)) => CheckResult::new(name, passed, detail),
            Err(e) => CheckResult::new(name, false, format!("error: {e}")),
        }
    }
}

/// Options for the engine checks; small noise needs many rounds.
pub fn deep_options() -> SolveOptions {
    SolveOptions { max_rounds: 50_000, tol: 1e-11 }
}

/// Finite values within `tol`, or both beyond ±1e3 on the same side (a
/// noisy leader keeps divergent bounds finite but very large).
pub fn limits_match(a: ExtReal, b: ExtReal, tol: f64) -> bool {
    let (x, y) = (a.to_f64(), b.to_f64());
    if x.abs() > 1e3 || y.abs() > 1e3 {
        return x.signum() == y.signum() && x.abs() > 1e3 && y.abs() > 1e3;
    }
    (x - y).abs() <= tol
}

fn grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
}

fn worst<I: Iterator<Item = f64>>(it: I) -> f64 {
    it.fold(0.0, |m, v| if v.is_nan() { f64::INFINITY } else { m.max(v) })
}

pub fn owens_t_identities() -> Vec<CheckResult> {
    let zero = worst(grid(-5.0, 5.0, 41).map(|y| owens_t(y, 0.0).abs()));
    let origin = worst(grid(-4.0, 4.0, 33).map(|a| (owens_t(0.0, a) - a.atan() / (2.0 * PI)).abs()));
    let mut sym = 0.0f64;
    for y in grid(-4.0, 4.0, 17) {
        for a in grid(-3.0, 3.0, 13) {
            sym = sym.max((owens_t(y, a) - owens_t(-y, a)).abs()).max((owens_t(y, -a) + owens_t(y, a)).abs());
        }
    }
    vec![
        CheckResult::new("owens_t_zero_slope", zero == 0.0, format!("max |T(y,0)| = {zero:e}")),
        CheckResult::new("owens_t_origin", origin < 1e-12, format!("max |T(0,a) - atan(a)/2pi| = {origin:e}")),
        CheckResult::new("owens_t_symmetry", sym < 1e-14, format!("max odd/even defect = {sym:e}")),
    ]
}

pub fn s_tilde_limits() -> CheckResult {
    let low = s_tilde(-30.0, 0.5);
    let high = worst([0.1, 0.5, 0.9, 2.0].iter().map(|&nu| (s_tilde(30.0, nu) - 0.5).abs()));
    CheckResult::new(
        "s_tilde_limits",
        low > 0.0 && low < 1e-3 && high < 1e-9,
        format!("S(-30, 0.5) = {low:e}; max |S(30, nu) - 1/2| = {high:e}"),
    )
}

pub fn rank_total_probability() -> CheckResult {
    let mut defect = 0.0f64;
    for nu in [0.2, 0.6, 0.9] {
        for y in grid(-8.0, 8.0, 81) {
            let v = std_normal_cdf(y) * s_tilde(y, nu) + std_normal_cdf(-y) * (1.0 - s_tilde(-y, nu));
            defect = defect.max((v - 0.5).abs());
        }
    }
    for w in grid(-8.0, 8.0, 81) {
        let v = std_normal_cdf(w) * rank_belief_main(w, 0.0, History::Effort, 1.0)
            + std_normal_cdf(-w) * rank_belief_main(w, 0.0, History::NoEffort, 1.0);
        defect = defect.max((v - 0.5).abs());
    }
    CheckResult::new("rank_total_probability", defect < 1e-10, format!("max defect {defect:e}"))
}

/// λ′ by central differences against −λ(x)(x + λ(x)).
pub fn reversed_hazard_derivative() -> CheckResult {
    let h = 1e-5;
    let defect = worst(grid(-10.0, 10.0, 201).map(|x| {
        let d = (reversed_hazard(x + h) - reversed_hazard(x - h)) / (2.0 * h);
        let l = reversed_hazard(x);
        (d + l * (x + l)).abs()
    }));
    CheckResult::new("reversed_hazard_derivative", defect < 1e-8, format!("max defect {defect:e}"))
}

pub fn critical_noise_bounds() -> CheckResult {
    CheckResult::from_result(
        "critical_noise_bounds",
        (|| {
            let mut prev = 0.0;
            let mut margin = f64::INFINITY;
            let mut increasing = true;
            for n in 2..=10 {
                let s = critical_sigma_f(n)?;
                margin = margin.min(s - critical_sigma_f_lower_bound(n));
                increasing &= s > prev;
                prev = s;
            }
            Ok((margin > 1e-6 && increasing, format!("min margin {margin:.6e}; increasing in n: {increasing}")))
        })(),
    )
}

pub fn uniqueness_dichotomy(ns: &[usize]) -> CheckResult {
    CheckResult::from_result(
        "uniqueness_dichotomy",
        (|| {
            let mut ok = true;
            let mut detail = Vec::new();
            for &n in ns {
                let s = critical_sigma_f(n)?;
                let above = iterate_bounds_main(&ModelParams::new(n, 1.01 * s)?, &deep_options())?;
                let below = iterate_bounds_main(&ModelParams::new(n, 0.99 * s)?, &deep_options())?;
                let exact = above.limits.headline() == (ExtReal::Finite(0.0), ExtReal::NegInf, ExtReal::PosInf);
                ok &= above.unique && exact && !below.unique && above.converged && below.converged;
                detail.push(format!("n={n}: {} / {}", above.unique, below.unique));
            }
            Ok((ok, detail.join("; ")))
        })(),
    )
}

fn random_points(seed: u64, count: usize) -> Vec<(usize, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| (rng.gen_range(2..=10), 10f64.powf(rng.gen_range(-2.0..0.3)))).collect()
}

/// Engine and direct limit solver on random points; also audits every trace
/// and checks θ̄ < 1 and that a unique Effort branch forces x̲_N = +∞.
pub fn engine_agreement(seed: u64, count: usize) -> Vec<CheckResult> {
    let mut agree = (true, String::new());
    let mut audit = (true, String::new());
    let mut coupling = (true, String::new());
    for (n, sf) in random_points(seed, count) {
        let res = (|| {
            let p = ModelParams::new(n, sf)?;
            let r = iterate_bounds_main(&p, &deep_options())?;
            let l = solve_limits_main(&p)?;
            Ok::<_, Error>((r, l))
        })();
        let (r, l) = match res {
            Ok(v) => v,
            Err(e) => {
                agree = (false, format!("n={n} sigma_f={sf}: {e}"));
                continue;
            }
        };
        let (t, xe, xn) = r.limits.headline();
        let same = |a: ExtReal, b: ExtReal| match (a, b) {
            (ExtReal::Finite(x), ExtReal::Finite(y)) => (x - y).abs() <= 1e-6,
            (a, b) => a == b,
        };
        if !(r.converged && same(t, l.theta_bar) && same(xe, l.x_e_bar) && same(xn, l.x_n_lo)) && agree.0 {
            agree = (false, format!("n={n} sigma_f={sf}: engine {:?} vs {l:?}", r.limits.headline()));
        }
        if let Err(e) = audit_trace(&r.trace, r.model) {
            audit = (false, format!("n={n} sigma_f={sf}: {e}"));
        }
        let bad_coupling = xe == ExtReal::NegInf && xn != ExtReal::PosInf;
        if (bad_coupling || t.to_f64() >= 1.0) && coupling.0 {
            coupling = (false, format!("n={n} sigma_f={sf}: {:?}", r.limits));
        }
    }
    let msg = |d: String| if d.is_empty() { format!("{count} random points") } else { d };
    vec![
        CheckResult::new("engine_limit_agreement", agree.0, msg(agree.1)),
        CheckResult::new("monotone_sequence_audit", audit.0, msg(audit.1)),
        CheckResult::new("no_effort_coupling", coupling.0, msg(coupling.1)),
    ]
}

pub fn monotone_equilibrium(seed: u64, count: usize) -> CheckResult {
    CheckResult::from_result(
        "monotone_equilibrium",
        (|| {
            let mut min = f64::INFINITY;
            for (n, sf) in random_points(seed ^ 0x5eed, count) {
                let r = verify_monotone_equilibrium(&ModelParams::new(n, sf)?)?;
                if !r.passed {
                    return Ok((false, format!("n={n} sigma_f={sf}: {:?}", r.checks)));
                }
                min = min.min(r.b4_min);
            }
            Ok((min > 0.0, format!("{count} points; smallest interior residual {min:.6e}")))
        })(),
    )
}

/// Laplace noise at σ_F = (n−1)/n: bounds coincide at round 2.
pub fn logconcave_collapse() -> CheckResult {
    CheckResult::from_result(
        "logconcave_round_two",
        (|| {
            let p = ModelParams::new(4, 0.75)?.with_family(NoiseFamily::laplace(1.0)?)?;
            let r = iterate_bounds_logconcave(&p, &SolveOptions::default())?;
            let s2 = r.trace.get(2).copied().unwrap_or(BoundsState::initial());
            let want = (ExtReal::Finite(0.0), ExtReal::NegInf, ExtReal::PosInf);
            let ok = s2.is_unique(0.0) && s2.headline() == want && r.unique;
            Ok((ok, format!("round 2: {:?}; sandwich round {:?}", s2.headline(), r.sandwich_round)))
        })(),
    )
}

/// Near-perfect leader information reproduces the main model.
pub fn extension_consistency(n: usize) -> CheckResult {
    CheckResult::from_result(
        "extension_small_leader_noise",
        (|| {
            let s = critical_sigma_f(n)?;
            let mut detail = Vec::new();
            let mut ok = true;
            for f in [0.5, 2.0] {
                let main = solve_limits_main(&ModelParams::new(n, f * s)?)?;
                let ext = iterate_bounds_ext(&ModelParams::extension(n, f * s, 1e-6)?, &deep_options())?;
                let (t, xe, xn) = ext.limits.headline();
                let m = limits_match(t, main.theta_bar, 1e-3)
                    && limits_match(xe, main.x_e_bar, 1e-3)
                    && limits_match(xn, main.x_n_lo, 1e-3);
                ok &= m && ext.converged;
                detail.push(format!(
                    "{f}x: ({t}, {xe}, {xn}) vs ({}, {}, {})",
                    main.theta_bar, main.x_e_bar, main.x_n_lo
                ));
            }
            Ok((ok, detail.join("; ")))
        })(),
    )
}

pub fn extension_sufficiency(gamma: f64, n: usize) -> CheckResult {
    CheckResult::from_result(
        "extension_sufficient_noise",
        (|| {
            let b = sufficient_sigma_l(gamma, n)?;
            let sl = 1.05 * b.sigma_l_hat;
            let r = iterate_bounds_ext(&ModelParams::extension(n, gamma * sl, sl)?, &deep_options())?;
            Ok((r.unique && r.converged, format!("sigma_l_hat = {:.6}; unique at 1.05x: {}", b.sigma_l_hat, r.unique)))
        })(),
    )
}

pub fn analytic_suite(seed: u64) -> Vec<CheckResult> {
    let mut out = owens_t_identities();
    out.push(s_tilde_limits());
    out.push(rank_total_probability());
    out.push(reversed_hazard_derivative());
    out.push(critical_noise_bounds());
    out.push(uniqueness_dichotomy(&[2, 4, 8]));
    out.extend(engine_agreement(seed, 20));
    out.push(monotone_equilibrium(seed, 10));
    out.push(logconcave_collapse());
    out.push(extension_consistency(4));
    out.push(extension_sufficiency(1.0, 4));
    out
}

/// Points (x, z, σ_F, σ_L) at which closed forms are compared with sampling.
pub const ORACLE_GRID: [(f64, f64, f64, f64); 5] =
    [(0.0, 0.0, 1.0, 0.5), (1.0, 0.0, 1.0, 0.5), (0.3, 0.6, 0.2, 0.3), (-0.5, 0.2, 0.5, 1.0), (2.0, 0.4, 0.8, 0.2)];

/// Closed-form posterior means, rank beliefs and fixed-point residuals of
/// both information structures against Monte Carlo at `n_samples` draws.
/// Each check passes when every comparison lies within `k` standard errors.
pub fn mc_oracle_checks(seed: u64, n_samples: usize, k: f64) -> Vec<CheckResult> {
    type Closed = fn(f64, f64, History, &ModelParams) -> f64;
    let fixed_point: Closed = |x, z, h, p| follower_fixed_point_residual(x, z, h, p);
    let quantities: [(&str, Closed); 3] =
        [("posterior_mean", posterior_mean), ("rank_belief", rank_belief), ("fixed_point_residual", fixed_point)];
    let mut out = Vec::new();
    for (qi, (qname, closed)) in quantities.iter().enumerate() {
        for ext in [false, true] {
            let name = format!("mc_{qname}_{}", if ext { "extension" } else { "main" });
            let res = (|| {
                let mut worst_z = 0.0f64;
                for (gi, &(x, z, sf, sl)) in ORACLE_GRID.iter().enumerate() {
                    let p = if ext { ModelParams::extension(4, sf, sl)? } else { ModelParams::new(4, sf)? };
                    for (hi, h) in History::BOTH.into_iter().enumerate() {
                        let s = seed.wrapping_add((qi * 100 + gi * 10 + hi + if ext { 1000 } else { 0 }) as u64);
                        let cfg = McConfig::new(n_samples, s)?;
                        let est = match qi {
                            0 => mc_posterior_mean(x, z, h, &p, &cfg)?,
                            1 => mc_rank_belief(x, z, h, &p, &cfg)?,
                            _ => mc_follower_payoff(x, z, x, h, &p, &cfg)?,
                        };
                        worst_z = worst_z.max(est.z_score(closed(x, z, h, &p)).abs());
                    }
                }
                Ok((worst_z <= k, format!("worst |z| = {worst_z:.3} over {} cases", 2 * ORACLE_GRID.len())))
            })();
            out.push(CheckResult::from_result(&name, res));
        }
    }
    out
}

pub fn mc_suite(seed: u64) -> Vec<CheckResult> {
    mc_oracle_checks(seed, 1_000_000, 3.0)
}

pub fn run_suite(suite: Suite, seed: u64) -> Vec<CheckResult> {
    match suite {
        Suite::Analytic => analytic_suite(seed),
        Suite::Mc => mc_suite(seed),
        Suite::All => {
            let mut v = analytic_suite(seed);
            v.extend(mc_suite(seed));
            v
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names() {
        assert_eq!("mc".parse::<Suite>().unwrap(), Suite::Mc);
        assert!("bogus".parse::<Suite>().is_err());
    }

    #[test]
    fn identities_pass() {
        for c in owens_t_identities().into_iter().chain([
            s_tilde_limits(),
            rank_total_probability(),
            reversed_hazard_derivative(),
        ]) {
            assert!(c.passed, "{c:?}");
        }
    }

    #[test]
    fn matching_rule() {
        assert!(limits_match(ExtReal::Finite(-2e5), ExtReal::NegInf, 1e-3));
        assert!(!limits_match(ExtReal::Finite(2e5), ExtReal::NegInf, 1e-3));
        assert!(limits_match(ExtReal::Finite(0.3), ExtReal::Finite(0.3005), 1e-3));
    }
}
