//! Acceptance criteria. Prints one line per criterion and exits non-zero if
//! any criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ratbounds::beliefs::History;
use ratbounds::cli::solve_point;
use ratbounds::noise::NoiseFamily;
use ratbounds::payoffs::{follower_fixed_point_residual, ExtReal, ModelParams};
use ratbounds::rationalizability::*;
use ratbounds::special::{owens_t, reversed_hazard, s_tilde, std_normal_cdf, std_normal_pdf};
use ratbounds::verify::{limits_match, mc_oracle_checks};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn deep() -> SolveOptions {
    SolveOptions { max_rounds: 50_000, tol: 1e-11 }
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within_time(limit: Duration, start: Instant) -> Result<(), String> {
    let t = start.elapsed();
    if t < limit {
        Ok(())
    } else {
        Err(format!("took {t:.1?}, limit {limit:?}"))
    }
}

fn small_noise_limits() -> Outcome {
    let start = Instant::now();
    let mut parts = Vec::new();
    for n in [2, 4, 10] {
        let target = (n as f64 - 1.0) / (2.0 * n as f64);
        let p = ModelParams::new(n, 1e-3).map_err(|e| e.to_string())?;
        let r = iterate_bounds_main(&p, &SolveOptions { max_rounds: 50_000, tol: 1e-9 }).map_err(|e| e.to_string())?;
        let (t, xe, xn) = r.limits.headline();
        let ok = r.converged
            && (t.to_f64() - target).abs() <= 1e-2
            && (xe.to_f64() - target).abs() <= 1e-2
            && xn.to_f64() > 1e3;
        parts.push(format!("n={n}: theta_bar={:.5} x_e_bar={:.5} x_n_lo={xn}", t.to_f64(), xe.to_f64()));
        if !ok {
            return Err(parts.join("; "));
        }
    }
    within_time(Duration::from_secs(10), start)?;
    Ok(format!("{} in {:.1?}", parts.join("; "), start.elapsed()))
}

fn uniqueness_dichotomy() -> Outcome {
    let start = Instant::now();
    let mut parts = Vec::new();
    for n in [2, 4, 8] {
        let s = critical_sigma_f(n).map_err(|e| e.to_string())?;
        let run = |f: f64| {
            iterate_bounds_main(&ModelParams::new(n, f * s).unwrap(), &SolveOptions { max_rounds: 50_000, tol: 1e-9 })
                .map_err(|e| e.to_string())
        };
        let above = run(1.01)?;
        let below = run(0.99)?;
        let exact = above.limits.headline() == (ExtReal::Finite(0.0), ExtReal::NegInf, ExtReal::PosInf);
        parts.push(format!("n={n}: unique {} at 1.01, {} at 0.99", above.unique, below.unique));
        if !(above.unique && exact && !below.unique) {
            return Err(parts.join("; "));
        }
    }
    within_time(Duration::from_secs(30), start)?;
    Ok(parts.join("; "))
}

fn critical_noise_bound() -> Outcome {
    let mut prev = 0.0;
    let mut margin = f64::INFINITY;
    for n in 2..=10 {
        let s = critical_sigma_f(n).map_err(|e| e.to_string())?;
        let bound = (n as f64 - 1.0) / (8.0 * n as f64 * std_normal_pdf(0.0));
        margin = margin.min(s - bound);
        if s <= prev {
            return Err(format!("sigma_f_hat({n}) = {s} not above sigma_f_hat({}) = {prev}", n - 1));
        }
        prev = s;
    }
    check(margin > 1e-6, format!("smallest margin over the bound {margin:.4e}; increasing for n = 2..10"))
}

fn leader_bound_shape() -> Outcome {
    let hat = critical_sigma_f(4).map_err(|e| e.to_string())?;
    let pts: Vec<f64> = (0..41).map(|i| 10f64.powf(-2.0 + 2.0 * i as f64 / 40.0)).collect();
    let mut rows = Vec::new();
    for &sf in &pts {
        let r = solve_point(&ModelParams::new(4, sf).unwrap(), &SolveOptions::default()).map_err(|e| e.to_string())?;
        rows.push((sf, r.theta_bar.to_f64()));
    }
    for &(sf, t) in &rows {
        if sf > hat && t != 0.0 {
            return Err(format!("theta_bar = {t} at sigma_f = {sf} above {hat:.5}"));
        }
        if sf < hat && t.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err(format!("theta_bar = {t} at sigma_f = {sf} below {hat:.5}"));
        }
    }
    let left = rows[0].1;
    if (left - 0.375).abs() > 1e-2 {
        return Err(format!("left endpoint theta_bar = {left}"));
    }
    for w in rows.windows(2) {
        let ((s0, t0), (s1, t1)) = (w[0], w[1]);
        if s1 < hat && t1 > t0 {
            let peak = rows.iter().filter(|r| r.0 < hat).fold((0.0, 0.0), |m, r| if r.1 > m.1 { *r } else { m });
            return Err(format!(
                "theta_bar rises from {t0:.5} at sigma_f = {s0:.4} to {t1:.5} at {s1:.4} (peak {:.5} at {:.4}); \
                 zero above {hat:.5} and left endpoint {left:.5} hold",
                peak.1, peak.0
            ));
        }
    }
    Ok(format!("zero above {hat:.5}, decreasing below, left endpoint {left:.5}"))
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let checks = mc_oracle_checks(7, 1_000_000, 3.0);
    let failed: Vec<String> =
        checks.iter().filter(|c| !c.passed).map(|c| format!("{}: {}", c.name, c.detail)).collect();
    if !failed.is_empty() {
        return Err(failed.join("; "));
    }
    within_time(Duration::from_secs(120), start)?;
    let worst = checks.iter().map(|c| format!("{} {}", c.name, c.detail)).collect::<Vec<_>>().join("; ");
    Ok(format!("{} comparison groups in {:.1?} ({worst})", checks.len(), start.elapsed()))
}

fn sign_changes(f: impl Fn(f64) -> f64, lo: f64, hi: f64, step: f64) -> usize {
    let steps = ((hi - lo) / step) as usize;
    let mut prev = f(lo);
    let mut count = 0;
    for i in 1..=steps {
        let v = f(lo + i as f64 * step);
        if (v > 0.0) != (prev > 0.0) {
            count += 1;
        }
        prev = v;
    }
    count
}

fn extension() -> Outcome {
    let err = |e: ratbounds::Error| e.to_string();
    let b = sufficient_sigma_l(1.0, 4).map_err(err)?;
    let sl = 1.05 * b.sigma_l_hat;
    let high = iterate_bounds_ext(&ModelParams::extension(4, sl, sl).map_err(err)?, &deep()).map_err(err)?;
    if !high.unique {
        return Err(format!("not unique at sigma_l = {sl}: {:?}", high.limits));
    }

    let p = ModelParams::extension(4, 1e-3, 1e-3).map_err(err)?;
    let low = iterate_bounds_ext(&p, &deep()).map_err(err)?;
    // a leader threshold inside the rationalizable band [θ_lo, θ_hi]
    let z = 0.5 * (low.limits.theta_lo.to_f64() + low.limits.theta_hi.to_f64());
    let changes = sign_changes(|x| follower_fixed_point_residual(x, z, History::Effort, &p), -1.0, 1.0, 1e-5);
    if low.unique || changes < 2 {
        return Err(format!("sigma_l = 1e-3: unique = {}, {changes} sign changes", low.unique));
    }

    let hat = critical_sigma_f(4).map_err(err)?;
    for f in [0.5, 2.0] {
        let main = solve_limits_main(&ModelParams::new(4, f * hat).map_err(err)?).map_err(err)?;
        let ext = iterate_bounds_ext(&ModelParams::extension(4, f * hat, 1e-6).map_err(err)?, &deep()).map_err(err)?;
        let (t, xe, xn) = ext.limits.headline();
        if !(limits_match(t, main.theta_bar, 1e-3)
            && limits_match(xe, main.x_e_bar, 1e-3)
            && limits_match(xn, main.x_n_lo, 1e-3))
        {
            return Err(format!("sigma_l = 1e-6 at {f}x: ({t}, {xe}, {xn}) vs {main:?}"));
        }
    }
    Ok(format!(
        "sigma_l_hat = {:.5}, unique above it; at sigma_l = 1e-3 gap x_e {:.4} and {changes} sign changes at x_l = {z:.4}; small-noise limits match",
        b.sigma_l_hat,
        low.limits.x_e_hi.to_f64() - low.limits.x_e_lo.to_f64()
    ))
}

fn random_points(seed: u64, count: usize) -> Vec<(usize, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| (rng.gen_range(2..=10), 10f64.powf(rng.gen_range(-2.0..0.3)))).collect()
}

fn monotone_equilibrium() -> Outcome {
    let mut min = f64::INFINITY;
    for (n, sf) in random_points(99, 10) {
        let r = verify_monotone_equilibrium(&ModelParams::new(n, sf).unwrap()).map_err(|e| e.to_string())?;
        if !r.passed {
            return Err(format!("n={n} sigma_f={sf}: {:?}", r.checks));
        }
        min = min.min(r.b4_min);
    }
    check(min > 0.0, format!("10 points pass; smallest interior residual {min:.4e}"))
}

fn log_concave() -> Outcome {
    let err = |e: ratbounds::Error| e.to_string();
    let laplace = |sf: f64| ModelParams::new(4, sf)?.with_family(NoiseFamily::laplace(1.0)?);
    let r = iterate_bounds_logconcave(&laplace(0.75).map_err(err)?, &SolveOptions::default()).map_err(err)?;
    let s2 = r.trace[2];
    let collapsed = s2.is_unique(0.0) && s2.headline() == (ExtReal::Finite(0.0), ExtReal::NegInf, ExtReal::PosInf);
    if !collapsed || r.trace[1].is_unique(0.0) {
        return Err(format!("round 1 {:?}, round 2 {:?}", r.trace[1], s2));
    }
    let r = iterate_bounds_logconcave(&laplace(1e-3).map_err(err)?, &deep()).map_err(err)?;
    let t = r.theta_bar().to_f64();
    check(
        r.converged && (t - 0.375).abs() <= 5e-3,
        format!("collapse at round 2 for sigma_f = 0.75; theta_bar = {t:.5} at sigma_f = 1e-3"),
    )
}

fn special_identities() -> Outcome {
    let grid = |lo: f64, hi: f64, n: usize| (0..n).map(move |i| lo + (hi - lo) * i as f64 / (n - 1) as f64);
    let mut worst = 0.0f64;
    for y in grid(-6.0, 6.0, 25) {
        if owens_t(y, 0.0) != 0.0 {
            return Err(format!("T({y}, 0) = {}", owens_t(y, 0.0)));
        }
        for a in grid(-3.0, 3.0, 13) {
            worst = worst.max((owens_t(y, a) - owens_t(-y, a)).abs());
            worst = worst.max((owens_t(y, -a) + owens_t(y, a)).abs());
        }
    }
    let origin = grid(-5.0, 5.0, 21).map(|a| (owens_t(0.0, a) - a.atan() / (2.0 * PI)).abs()).fold(0.0, f64::max);
    let limits = s_tilde(-30.0, 0.5) < 1e-3 && s_tilde(-30.0, 0.5) > 0.0 && (s_tilde(30.0, 0.7) - 0.5).abs() < 1e-9;
    let mut total = 0.0f64;
    for nu in [0.1, 0.5, 0.9] {
        for y in grid(-8.0, 8.0, 161) {
            let v = std_normal_cdf(y) * s_tilde(y, nu) + std_normal_cdf(-y) * (1.0 - s_tilde(-y, nu));
            total = total.max((v - 0.5).abs());
        }
    }
    let h = 1e-5;
    let deriv = grid(-12.0, 12.0, 241)
        .map(|x| {
            let d = (reversed_hazard(x + h) - reversed_hazard(x - h)) / (2.0 * h);
            let l = reversed_hazard(x);
            (d + l * (x + l)).abs()
        })
        .fold(0.0, f64::max);
    check(
        worst < 1e-14 && origin < 1e-12 && limits && total < 1e-10 && deriv < 1e-8,
        format!("symmetry {worst:.1e}, T(0,a) {origin:.1e}, total probability {total:.1e}, lambda' {deriv:.1e}"),
    )
}

fn engine_consistency() -> Outcome {
    let mut worst = 0.0f64;
    for (n, sf) in random_points(2024, 20) {
        let p = ModelParams::new(n, sf).unwrap();
        let r = iterate_bounds_main(&p, &deep()).map_err(|e| e.to_string())?;
        let l = solve_limits_main(&p).map_err(|e| e.to_string())?;
        audit_trace(&r.trace, r.model).map_err(|e| format!("n={n} sigma_f={sf}: {e}"))?;
        let (t, xe, xn) = r.limits.headline();
        for (a, b) in [(t, l.theta_bar), (xe, l.x_e_bar), (xn, l.x_n_lo)] {
            match (a, b) {
                (ExtReal::Finite(x), ExtReal::Finite(y)) => worst = worst.max((x - y).abs()),
                (a, b) if a == b => {}
                _ => return Err(format!("n={n} sigma_f={sf}: infinity flags differ, {a} vs {b}")),
            }
        }
    }
    for (sf, sl) in [(0.3, 0.3), (0.1, 0.05), (1.0, 2.0)] {
        let r = iterate_bounds_ext(&ModelParams::extension(4, sf, sl).unwrap(), &deep()).map_err(|e| e.to_string())?;
        audit_trace(&r.trace, r.model).map_err(|e| e.to_string())?;
    }
    check(worst <= 1e-6, format!("20 points, largest finite gap {worst:.2e}; all traces pass the audit"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("limit reproduction at small follower noise", small_noise_limits),
        ("uniqueness dichotomy around the critical noise", uniqueness_dichotomy),
        ("critical noise lower bound and monotonicity in n", critical_noise_bound),
        ("shape of the leader bound in sigma_f", leader_bound_shape),
        ("closed forms against Monte Carlo", oracle_equivalence),
        ("noisy-leader sufficiency and multiplicity", extension),
        ("monotone-equilibrium suite", monotone_equilibrium),
        ("log-concave generalization", log_concave),
        ("special-function identities", special_identities),
        ("engine self-consistency", engine_consistency),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (tag, detail) = match f() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2} {tag} [{:.1?}] {name}: {detail}", i + 1, start.elapsed());
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
