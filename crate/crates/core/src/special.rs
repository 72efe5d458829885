//! Standard Gaussian primitives, the reversed hazard rate, Owen's T and the
//! rank-belief kernel S̃.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::quad::Quadrature;

pub const SQRT_2PI: f64 = 2.506_628_274_631_000_5;
pub const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Below this argument λ and log Φ switch to the Mills-ratio continued fraction.
const TAIL_SWITCH: f64 = -8.0;
const CF_DEPTH: usize = 80;

/// Rounding slack tolerated when clamping a probability into [0, 1].
pub const PROB_SLACK: f64 = 1e-12;

pub fn std_normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

pub fn log_std_normal_pdf(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

/// Φ(x); accepts ±∞.
pub fn std_normal_cdf(x: f64) -> f64 {
    if x == f64::INFINITY {
        1.0
    } else if x == f64::NEG_INFINITY {
        0.0
    } else {
        0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
    }
}

/// Φ(−x), accurate in the upper tail.
pub fn std_normal_sf(x: f64) -> f64 {
    std_normal_cdf(-x)
}

pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

// K(t) = 1/(t + 2/(t + 3/(t + ...))), so that λ(−t) = t + K(t).
fn mills_tail(t: f64) -> f64 {
    let mut d = t;
    for k in (2..=CF_DEPTH).rev() {
        d = t + k as f64 / d;
    }
    1.0 / d
}

/// log Φ(x), finite for every finite x.
pub fn log_std_normal_cdf(x: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else if x < TAIL_SWITCH {
        log_std_normal_pdf(x) - reversed_hazard(x).ln()
    } else if x > 0.0 {
        (-std_normal_sf(x)).ln_1p()
    } else {
        std_normal_cdf(x).ln()
    }
}

/// λ(x) = φ(x)/Φ(x).
pub fn reversed_hazard(x: f64) -> f64 {
    if x < TAIL_SWITCH {
        let t = -x;
        t + mills_tail(t)
    } else {
        std_normal_pdf(x) / std_normal_cdf(x)
    }
}

/// x + λ(x) without cancellation in the left tail.
pub fn x_plus_reversed_hazard(x: f64) -> f64 {
    if x < TAIL_SWITCH {
        mills_tail(-x)
    } else {
        x + reversed_hazard(x)
    }
}

/// λ′(x) = −λ(x)(x + λ(x)).
pub fn reversed_hazard_deriv(x: f64) -> f64 {
    -reversed_hazard(x) * x_plus_reversed_hazard(x)
}

/// Φ⁻¹(p) for p ∈ (0, 1).
pub fn std_normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    Normal::standard().inverse_cdf(p)
}

/// Solves log Φ(x) = `log_p` for x, usable far below the underflow of Φ.
pub fn std_normal_quantile_from_log(log_p: f64) -> f64 {
    if log_p >= 0.0 {
        return f64::INFINITY;
    }
    if log_p > -700.0 {
        let x = std_normal_quantile(log_p.exp());
        if x > -30.0 {
            return x;
        }
    }
    // Newton on log Φ; d/dx log Φ = λ(x), and log Φ is concave so iterates
    // started from the asymptotic guess converge monotonically.
    let mut x = -(-2.0 * log_p).sqrt();
    for _ in 0..100 {
        let step = (log_std_normal_cdf(x) - log_p) / reversed_hazard(x);
        x -= step;
        if step.abs() <= 1e-15 * x.abs().max(1.0) {
            break;
        }
    }
    x
}

/// Clamps a probability that may sit a rounding error outside [0, 1].
pub fn clamp_probability(p: f64) -> Result<f64> {
    if p.is_nan() {
        return Err(Error::NotANumber("probability"));
    }
    if !(-PROB_SLACK..=1.0 + PROB_SLACK).contains(&p) {
        return Err(Error::ProbabilityOutOfRange(p));
    }
    Ok(p.clamp(0.0, 1.0))
}

fn owens_quadrature() -> Quadrature {
    Quadrature { abs_tol: 1e-15, rel_tol: 1e-13, max_intervals: 400 }
}

// J(y, a) = ∫₀^a exp(−y²t²/2)/(1+t²) dt, so that T(y, a) = φ(y) J(y, a)/√(2π).
fn owens_j(y: f64, a: f64) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    let sign = a.signum();
    let mut upper = a.abs();
    let ay = y.abs();
    if ay > 0.0 {
        // the integrand is below e^{-40} beyond t = 9/|y|
        upper = upper.min(9.0 / ay);
    }
    let h = 0.5 * y * y;
    let est = owens_quadrature().estimate(|t| (-h * t * t).exp() / (1.0 + t * t), 0.0, upper);
    sign * est.value
}

/// Owen's T(y, a) = (1/2π) ∫₀^a exp(−(1+t²)y²/2)/(1+t²) dt.
pub fn owens_t(y: f64, a: f64) -> f64 {
    if a == 0.0 || y.is_infinite() {
        return 0.0;
    }
    std_normal_pdf(y) * owens_j(y, a) * FRAC_1_SQRT_2PI
}

// Weighted left-tail integral λ(−t) ∫₀^∞ e^{−ts − s²/2} g(s) ds for t ≥ 0,
// i.e. the conditional mean of g(X − t) given X > t.
fn upper_tail_mean<G: FnMut(f64) -> f64>(t: f64, mut g: G) -> f64 {
    let s_max = -t + (t * t + 80.0).sqrt();
    let est = owens_quadrature().estimate(|s| (-(t + 0.5 * s) * s).exp() * g(s), 0.0, s_max);
    reversed_hazard(-t) * est.value
}

/// S̃(y, ν) = 1/2 − T(y, ν)/Φ(y).
///
/// For y < 0 the difference is evaluated as E[Φ(−νX) | X > −y], which keeps
/// full relative accuracy as S̃ → 0.
pub fn s_tilde(y: f64, nu: f64) -> f64 {
    if y == f64::INFINITY {
        return 0.5;
    }
    if y == f64::NEG_INFINITY {
        return 0.0;
    }
    if y < 0.0 {
        let t = -y;
        upper_tail_mean(t, |s| std_normal_cdf(-nu * (t + s)))
    } else {
        0.5 - reversed_hazard(y) * owens_j(y, nu) * FRAC_1_SQRT_2PI
    }
}

/// ∂S̃/∂y = λ(y)(Φ(νy) − S̃(y, ν)).
pub fn s_tilde_dy(y: f64, nu: f64) -> f64 {
    if y.is_infinite() {
        return 0.0;
    }
    if y < 0.0 {
        let t = -y;
        let a = nu * t;
        let log_a = log_std_normal_cdf(-a);
        let pa = log_a.exp();
        // Φ(−a) − Φ(−b) for b ≥ a, formed as a ratio to avoid cancellation
        let inner = upper_tail_mean(t, |s| {
            let log_b = log_std_normal_cdf(-nu * (t + s));
            -pa * (log_b - log_a).exp_m1()
        });
        reversed_hazard(y) * inner
    } else {
        reversed_hazard(y) * (std_normal_cdf(nu * y) - s_tilde(y, nu))
    }
}

/// ∫ φ(η) Φ(a + bη) dη = Φ(a/√(1+b²)).
pub fn gauss_cdf_convolution(a: f64, b: f64) -> f64 {
    std_normal_cdf(a / (1.0 + b * b).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate;

    #[test]
    fn pdf_and_cdf_basics() {
        assert_eq!(std_normal_pdf(0.0), 0.398_942_280_401_432_7);
        assert_eq!(std_normal_cdf(0.0), 0.5);
        assert_eq!(std_normal_cdf(f64::INFINITY), 1.0);
        assert_eq!(std_normal_cdf(f64::NEG_INFINITY), 0.0);
        assert!(std_normal_pdf(8.0) < 1e-14);
    }

    #[test]
    fn continued_fraction_matches_direct_ratio_at_switch() {
        for &x in &[-8.0, -7.5, -8.5] {
            let direct = std_normal_pdf(x) / std_normal_cdf(x);
            let cf = -x + mills_tail(-x);
            assert!((direct - cf).abs() < 1e-12 * direct, "{x}: {direct} vs {cf}");
        }
    }

    #[test]
    fn log_cdf_is_continuous_across_branches() {
        for &x in &[-8.0, 0.0] {
            let l = log_std_normal_cdf(x - 1e-9);
            let r = log_std_normal_cdf(x + 1e-9);
            assert!((l - r).abs() < 1e-7);
        }
        // deep tail against the asymptotic series
        let x: f64 = -40.0;
        let asym = log_std_normal_pdf(x) - (-x).ln() + (-1.0 / (x * x) + 3.0 / x.powi(4)).ln_1p();
        assert!((log_std_normal_cdf(x) - asym).abs() < 1e-8);
    }

    #[test]
    fn quantile_from_log_inverts_deep_tail() {
        for &x in &[-3.0, -35.0, -60.0, -300.0] {
            let back = std_normal_quantile_from_log(log_std_normal_cdf(x));
            assert!((back - x).abs() < 1e-9 * x.abs(), "{x} -> {back}");
        }
    }

    #[test]
    fn owens_t_special_values() {
        assert_eq!(owens_t(1.3, 0.0), 0.0);
        assert!((owens_t(0.0, 1.0) - 0.125).abs() < 1e-15);
        let y: f64 = 0.7;
        let a = 0.4;
        let oracle = integrate(|t| (-(1.0 + t * t) * y * y / 2.0).exp() / (1.0 + t * t), 0.0, a).unwrap()
            / (2.0 * std::f64::consts::PI);
        assert!((owens_t(y, a) - oracle).abs() < 1e-12);
        // large |y| with a long slope interval
        assert!(owens_t(1e4, 5.0) == 0.0);
        let v = owens_t(12.0, 3.0);
        assert!(v > 0.0 && v < std_normal_sf(12.0));
    }

    #[test]
    fn s_tilde_branches_agree_at_zero() {
        for &nu in &[0.1, 0.577, 0.99, 2.0] {
            let l = s_tilde(-1e-12, nu);
            let r = s_tilde(0.0, nu);
            assert!((l - r).abs() < 1e-10, "nu={nu}: {l} vs {r}");
            let closed = 0.5 - nu.atan() / std::f64::consts::PI;
            assert!((r - closed).abs() < 1e-13);
        }
    }

    #[test]
    fn s_tilde_matches_definition_for_moderate_negative_y() {
        for &y in &[-0.5, -2.0, -4.0] {
            let def = 0.5 - owens_t(y, 0.6) / std_normal_cdf(y);
            assert!((s_tilde(y, 0.6) - def).abs() < 1e-11);
        }
    }

    #[test]
    fn s_tilde_derivative_matches_central_difference() {
        let h = 1e-5;
        for &nu in &[0.3, 0.8] {
            for &y in &[-12.0, -3.0, -0.4, 0.0, 0.7, 5.0] {
                let fd = (s_tilde(y + h, nu) - s_tilde(y - h, nu)) / (2.0 * h);
                let an = s_tilde_dy(y, nu);
                assert!((fd - an).abs() < 1e-8, "nu={nu} y={y}: {fd} vs {an}");
            }
        }
    }
}
