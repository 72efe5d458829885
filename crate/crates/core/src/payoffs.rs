//! Expected payoffs of the leader and the followers and the best-response
//! maps they induce.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::beliefs::{
    posterior_mean_ext, rank_belief_ext, rank_belief_main_with, truncated_mean_with, ExtPosterior, History,
};
use crate::error::{Error, Result};
use crate::noise::{NoiseFamily, NoiseKind, Side};
use crate::quad::Quadrature;
use crate::roots::{bracket_increasing, brent, brent_with_values, Bracket};
use crate::special::std_normal_cdf;

/// Finite thresholds beyond this magnitude are treated as divergent.
pub const DIVERGENCE_LIMIT: f64 = 1e6;
const ROOT_XTOL: f64 = 1e-12;

/// A real number or one of the two infinities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    NegInf,
    Finite(f64),
    PosInf,
}

impl ExtReal {
    /// Maps ±∞ floats to the sentinels; NaN is rejected.
    pub fn from_f64(x: f64) -> Result<Self> {
        if x.is_nan() {
            Err(Error::NotANumber("extended real"))
        } else if x == f64::INFINITY {
            Ok(ExtReal::PosInf)
        } else if x == f64::NEG_INFINITY {
            Ok(ExtReal::NegInf)
        } else {
            Ok(ExtReal::Finite(x))
        }
    }

    pub fn to_f64(self) -> f64 {
        match self {
            ExtReal::NegInf => f64::NEG_INFINITY,
            ExtReal::Finite(x) => x,
            ExtReal::PosInf => f64::INFINITY,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(x) => Some(x),
            _ => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn is_infinite(self) -> bool {
        !self.is_finite()
    }

    /// Promotes a finite value beyond ±`limit` to the matching infinity.
    pub fn promote(self, limit: f64) -> Self {
        match self {
            ExtReal::Finite(x) if x > limit => ExtReal::PosInf,
            ExtReal::Finite(x) if x < -limit => ExtReal::NegInf,
            other => other,
        }
    }
}

impl From<f64> for ExtReal {
    fn from(x: f64) -> Self {
        ExtReal::from_f64(x).expect("NaN is not an extended real")
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.to_f64().partial_cmp(&other.to_f64())
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::NegInf => f.write_str("-inf"),
            ExtReal::PosInf => f.write_str("+inf"),
            ExtReal::Finite(x) => write!(f, "{x}"),
        }
    }
}

impl FromStr for ExtReal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "-inf" | "-infinity" => Ok(ExtReal::NegInf),
            "+inf" | "inf" | "infinity" => Ok(ExtReal::PosInf),
            t => {
                t.parse::<f64>().map_err(|_| Error::invalid(format!("not a number: '{t}'"))).and_then(ExtReal::from_f64)
            }
        }
    }
}

// Infinities as the strings "-inf"/"+inf", finite values as JSON numbers.
impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(x) => s.serialize_f64(*x),
            ExtReal::NegInf => s.serialize_str("-inf"),
            ExtReal::PosInf => s.serialize_str("+inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Main,
    Extension,
    LogConcave,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Main => "main",
            ModelKind::Extension => "extension",
            ModelKind::LogConcave => "logconcave",
        })
    }
}

/// Game parameters. `sigma_l = 0` is the perfectly informed leader.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    pub n: usize,
    pub sigma_f: f64,
    pub sigma_l: f64,
    pub family: NoiseFamily,
}

impl ModelParams {
    pub fn new(n: usize, sigma_f: f64) -> Result<Self> {
        let p = ModelParams { n, sigma_f, sigma_l: 0.0, family: NoiseFamily::gaussian() };
        p.validate()?;
        Ok(p)
    }

    pub fn extension(n: usize, sigma_f: f64, sigma_l: f64) -> Result<Self> {
        ModelParams::new(n, sigma_f)?.with_sigma_l(sigma_l)
    }

    pub fn with_sigma_l(mut self, sigma_l: f64) -> Result<Self> {
        self.sigma_l = sigma_l;
        self.validate()?;
        Ok(self)
    }

    /// A Gaussian family with scale s is folded into σ_F, so Gaussian
    /// parameters always carry the unit family.
    pub fn with_family(mut self, family: NoiseFamily) -> Result<Self> {
        if family.kind() == NoiseKind::Gaussian {
            self.sigma_f *= family.scale();
            self.family = NoiseFamily::gaussian();
        } else {
            self.family = family;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::invalid(format!("need at least 2 followers, got n = {}", self.n)));
        }
        if !(self.sigma_f.is_finite() && self.sigma_f > 0.0) {
            return Err(Error::invalid(format!("sigma_f must be positive and finite, got {}", self.sigma_f)));
        }
        if !(self.sigma_l.is_finite() && self.sigma_l >= 0.0) {
            return Err(Error::invalid(format!("sigma_l must be nonnegative and finite, got {}", self.sigma_l)));
        }
        if self.sigma_l > 0.0 && !self.family.is_gaussian() {
            return Err(Error::Unsupported("a noisy leader is only modelled with Gaussian noise".into()));
        }
        Ok(())
    }

    pub fn kind(&self) -> ModelKind {
        if self.sigma_l > 0.0 {
            ModelKind::Extension
        } else if self.family.is_gaussian() {
            ModelKind::Main
        } else {
            ModelKind::LogConcave
        }
    }

    /// σ = √(σ_F² + σ_L²); equals σ_F in the main model.
    pub fn sigma(&self) -> f64 {
        self.sigma_f.hypot(self.sigma_l)
    }

    /// (n−1)/n, the weight on the miscoordination loss.
    pub fn weight(&self) -> f64 {
        (self.n as f64 - 1.0) / self.n as f64
    }

    pub fn gamma(&self) -> Option<f64> {
        (self.sigma_l > 0.0).then(|| self.sigma_f / self.sigma_l)
    }

    fn noise_cdf(&self, u: f64) -> f64 {
        self.family.cdf(u)
    }
}

/// Leader's expected payoff to Effort when followers use threshold `x_e`:
/// θ − F((x_E − θ)/σ_F), or x_L − Φ((x_E − x_L)/σ) with a noisy leader.
pub fn leader_payoff(theta_or_xl: f64, x_e: ExtReal, params: &ModelParams) -> f64 {
    match x_e {
        ExtReal::NegInf => theta_or_xl,
        ExtReal::PosInf => theta_or_xl - 1.0,
        ExtReal::Finite(x) => {
            if params.sigma_l > 0.0 {
                theta_or_xl - std_normal_cdf((x - theta_or_xl) / params.sigma())
            } else {
                theta_or_xl - params.noise_cdf((x - theta_or_xl) / params.sigma_f)
            }
        }
    }
}

/// Leader's indifference point; always in [0, 1].
pub fn br_leader(x_e: ExtReal, params: &ModelParams) -> Result<f64> {
    match x_e {
        ExtReal::NegInf => Ok(0.0),
        ExtReal::PosInf => Ok(1.0),
        ExtReal::Finite(_) => {
            let f = |t: f64| Ok(leader_payoff(t, x_e, params));
            brent(f, 0.0, 1.0, 1e-14)
        }
    }
}

/// E[F((x_h − θ)/σ_F)] under the follower's posterior: the probability
/// that a given opponent's signal lies below x_h.
pub fn miscoordination(x: f64, z: f64, x_h: ExtReal, h: History, params: &ModelParams) -> Result<f64> {
    let xh = match x_h {
        ExtReal::NegInf => return Ok(0.0),
        ExtReal::PosInf => return Ok(1.0),
        ExtReal::Finite(v) => v,
    };
    if params.sigma_l > 0.0 {
        let post = ExtPosterior::new(x, z, h, params.sigma_f, params.sigma_l)?;
        return post.smoothed_cdf(xh, params.sigma_f);
    }
    // θ = x + σ_F U with U > (z−x)/σ_F after Effort, below it after NoEffort
    let cut = (z - x) / params.sigma_f;
    let d = (xh - x) / params.sigma_f;
    let side = if h.is_effort() { Side::Above } else { Side::Below };
    params.family.conditional_mean(cut, side, |u| params.family.cdf(d - u))
}

/// Posterior mean of θ for type x under threshold z.
pub fn posterior_mean(x: f64, z: f64, h: History, params: &ModelParams) -> f64 {
    if params.sigma_l > 0.0 {
        posterior_mean_ext(x, z, h, params.sigma_f, params.sigma_l)
    } else {
        truncated_mean_with(x, z, h, params.sigma_f, &params.family)
    }
}

/// Follower type x's expected payoff to Effort given leader threshold z and
/// opponents' threshold x_h.
pub fn follower_payoff(x: f64, z: f64, x_h: ExtReal, h: History, params: &ModelParams) -> Result<f64> {
    let mean = posterior_mean(x, z, h, params);
    let m = miscoordination(x, z, x_h, h, params)?;
    Ok(mean - params.weight() * m - h.chi_n() / params.n as f64)
}

/// Conditional rank belief R^h(x; z) for the model in `params`.
pub fn rank_belief(x: f64, z: f64, h: History, params: &ModelParams) -> f64 {
    if params.sigma_l > 0.0 {
        rank_belief_ext(x, z, h, params.sigma_f, params.sigma_l)
    } else {
        rank_belief_main_with(x, z, h, params.sigma_f, &params.family)
    }
}

/// Payoff at x = x_h in closed form: E[θ] − ((n−1)/n) R^h(x_h; z) − χ_N/n.
pub fn follower_fixed_point_residual(x_h: f64, z: f64, h: History, params: &ModelParams) -> f64 {
    posterior_mean(x_h, z, h, params) - params.weight() * rank_belief(x_h, z, h, params) - h.chi_n() / params.n as f64
}

// E[F(c − S)] with S ~ Exp(η) in the family's own units: the limit of the
// miscoordination term as the truncation point runs off to infinity.
pub(crate) fn overshoot_cdf(family: &NoiseFamily, c: f64, sign: f64) -> Result<f64> {
    let eta = family.eta();
    if eta == 0.0 || c.is_infinite() {
        return Ok(family.cdf(c));
    }
    let quad = Quadrature::with_tolerance(1e-14, 1e-12);
    let g = |s: f64| (-s).exp() * family.cdf(c + sign * eta * s);
    Ok(quad.integrate(g, 0.0, 60.0)?.value)
}

/// Limit of the follower payoff as x → −∞ (Effort) or x → +∞ (NoEffort) in
/// the perfectly informed model; the only finite ends of the payoff.
///
/// After Effort the overshoot of U past the cut is asymptotically Exp(η), so
/// the miscoordination limit is E[F((x_E − z)/σ_F − S)], which collapses to
/// F((x_E − z)/σ_F) only for Gaussian noise.
pub fn follower_payoff_limit(z: f64, x_h: ExtReal, h: History, params: &ModelParams) -> Result<f64> {
    let sf = params.sigma_f;
    let eta = params.family.eta();
    let w = params.weight();
    let c = (x_h.to_f64() - z) / sf;
    match h {
        History::Effort => Ok(sf * eta + z - w * overshoot_cdf(&params.family, c, -1.0)?),
        History::NoEffort => Ok(-sf * eta + z - 1.0 / params.n as f64 - w * overshoot_cdf(&params.family, c, 1.0)?),
    }
}

/// The threshold type indifferent between actions, or the infinity the
/// indifference point escapes to (−∞ after Effort, +∞ after NoEffort).
pub fn br_follower(theta_or_xl: f64, x_prev: ExtReal, h: History, params: &ModelParams) -> Result<ExtReal> {
    br_follower_from(theta_or_xl, x_prev, h, params, None)
}

/// As [`br_follower`], starting the bracket search at `guess`.
pub fn br_follower_from(
    theta_or_xl: f64,
    x_prev: ExtReal,
    h: History,
    params: &ModelParams,
    guess: Option<f64>,
) -> Result<ExtReal> {
    let z = theta_or_xl;
    if params.sigma_l == 0.0 {
        let lim = follower_payoff_limit(z, x_prev, h, params)?;
        match h {
            // payoff increases from its finite lower limit to +∞
            History::Effort if lim >= 0.0 => return Ok(ExtReal::NegInf),
            // payoff rises from −∞ to its finite upper limit
            History::NoEffort if lim <= 0.0 => return Ok(ExtReal::PosInf),
            _ => {}
        }
    }
    let f = |x: f64| follower_payoff(x, z, x_prev, h, params);
    let start = guess.filter(|g| g.is_finite() && g.abs() < DIVERGENCE_LIMIT).unwrap_or(z);
    let step = 0.05 * params.sigma();
    match bracket_increasing(f, start, step, DIVERGENCE_LIMIT)? {
        Bracket::Found { lo, hi, f_lo, f_hi } => {
            if lo == hi {
                return Ok(ExtReal::Finite(lo));
            }
            let root = brent_with_values(f, lo, hi, f_lo, f_hi, ROOT_XTOL)?;
            Ok(ExtReal::Finite(root).promote(DIVERGENCE_LIMIT))
        }
        Bracket::Above => Ok(ExtReal::PosInf),
        Bracket::Below => Ok(ExtReal::NegInf),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beliefs::truncated_mean;
    use crate::special::std_normal_pdf;

    fn main4() -> ModelParams {
        ModelParams::new(4, 1.0).unwrap()
    }

    #[test]
    fn params_validation_and_kind() {
        assert!(ModelParams::new(1, 1.0).is_err());
        assert!(ModelParams::new(4, -1.0).is_err());
        assert!(ModelParams::new(4, 0.0).is_err());
        assert!(ModelParams::extension(4, 1.0, -0.1).is_err());
        assert_eq!(main4().kind(), ModelKind::Main);
        assert_eq!(ModelParams::extension(4, 1.0, 0.5).unwrap().kind(), ModelKind::Extension);
        let lc = main4().with_family(NoiseFamily::laplace(1.0).unwrap()).unwrap();
        assert_eq!(lc.kind(), ModelKind::LogConcave);
        assert!(lc.with_sigma_l(0.5).is_err());
        let g = main4().with_family(NoiseFamily::new(NoiseKind::Gaussian, 2.0).unwrap()).unwrap();
        assert_eq!(g.sigma_f, 2.0);
        assert!((ModelParams::extension(2, 3.0, 4.0).unwrap().sigma() - 5.0).abs() < 1e-15);
    }

    #[test]
    fn ext_real_order_and_text() {
        assert!(ExtReal::NegInf < ExtReal::Finite(-1e300));
        assert!(ExtReal::Finite(1e300) < ExtReal::PosInf);
        assert_eq!(ExtReal::Finite(2e6).promote(1e6), ExtReal::PosInf);
        assert_eq!(ExtReal::Finite(-2e6).promote(1e6), ExtReal::NegInf);
        assert_eq!("-inf".parse::<ExtReal>().unwrap(), ExtReal::NegInf);
        assert_eq!("0.5".parse::<ExtReal>().unwrap(), ExtReal::Finite(0.5));
        assert!(ExtReal::from_f64(f64::NAN).is_err());
        assert_eq!(serde_json::to_string(&ExtReal::PosInf).unwrap(), "\"+inf\"");
        assert_eq!(serde_json::to_string(&ExtReal::Finite(0.25)).unwrap(), "0.25");
    }

    #[test]
    fn leader_payoff_plug_ins() {
        let p = main4();
        assert_eq!(leader_payoff(0.3, ExtReal::NegInf, &p), 0.3);
        assert!((leader_payoff(0.3, ExtReal::PosInf, &p) + 0.7).abs() < 1e-15);
        assert_eq!(leader_payoff(0.5, ExtReal::Finite(0.5), &p), 0.0);
    }

    #[test]
    fn br_leader_matches_grid_scan() {
        let p = main4();
        assert_eq!(br_leader(ExtReal::NegInf, &p).unwrap(), 0.0);
        assert_eq!(br_leader(ExtReal::PosInf, &p).unwrap(), 1.0);
        let root = br_leader(ExtReal::Finite(0.5), &p).unwrap();
        // 1e-6 grid: the sign change brackets the root
        let k = (root * 1e6).floor();
        let (a, b) = (k * 1e-6, (k + 1.0) * 1e-6);
        let g = |t: f64| t - std_normal_cdf(0.5 - t);
        assert!(g(a) <= 0.0 && g(b) > 0.0);
        assert!(br_leader(ExtReal::Finite(0.6), &p).unwrap() > root);
    }

    #[test]
    fn follower_payoff_with_all_opponents_investing_is_the_mean() {
        let p = main4();
        let v = follower_payoff(0.3, 0.1, ExtReal::NegInf, History::Effort, &p).unwrap();
        assert_eq!(v, truncated_mean(0.3, 0.1, History::Effort, 1.0));
    }

    #[test]
    fn follower_payoff_deep_left_tail() {
        let p = main4();
        let x = -1e7;
        let v = follower_payoff(x, 0.0, ExtReal::PosInf, History::Effort, &p).unwrap();
        assert!((v - (0.0 - 0.75)).abs() < 1e-6);
    }

    #[test]
    fn follower_payoff_matches_direct_quadrature() {
        // (n, σ_F, x, z, x_h) = (4, 1, 0.5, 0, 0.5)
        let p = main4();
        let got = follower_payoff(0.5, 0.0, ExtReal::Finite(0.5), History::Effort, &p).unwrap();
        let q = Quadrature::with_tolerance(1e-13, 1e-12);
        let dens = |t: f64| std_normal_pdf(t - 0.5) / std_normal_cdf(0.5);
        let oracle = q.integrate(|t| dens(t) * (t - 0.75 * std_normal_cdf(0.5 - t)), 0.0, 14.0).unwrap().value;
        assert!((got - oracle).abs() < 1e-8, "{got} vs {oracle}");
    }

    #[test]
    fn payoff_at_threshold_equals_closed_form_residual() {
        let cases = [
            main4(),
            ModelParams::new(2, 0.3).unwrap(),
            ModelParams::extension(4, 1.0, 0.5).unwrap(),
            ModelParams::extension(3, 0.2, 0.9).unwrap(),
            main4().with_family(NoiseFamily::laplace(1.0).unwrap()).unwrap(),
            main4().with_family(NoiseFamily::logistic(0.7).unwrap()).unwrap(),
        ];
        for p in cases {
            for h in History::BOTH {
                for &(x, z) in &[(0.5, 0.0), (-0.4, 0.3), (1.2, 0.9), (0.0, 0.0)] {
                    let a = follower_payoff(x, z, ExtReal::Finite(x), h, &p).unwrap();
                    let b = follower_fixed_point_residual(x, z, h, &p);
                    assert!((a - b).abs() < 1e-7, "{p:?} {h:?} x={x} z={z}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn follower_payoff_monotone() {
        for p in [main4(), ModelParams::extension(4, 0.5, 0.5).unwrap()] {
            for h in History::BOTH {
                let base = follower_payoff(0.2, 0.3, ExtReal::Finite(0.4), h, &p).unwrap();
                assert!(follower_payoff(0.25, 0.3, ExtReal::Finite(0.4), h, &p).unwrap() > base);
                assert!(follower_payoff(0.2, 0.35, ExtReal::Finite(0.4), h, &p).unwrap() > base);
                assert!(follower_payoff(0.2, 0.3, ExtReal::Finite(0.45), h, &p).unwrap() < base);
            }
        }
    }

    #[test]
    fn payoff_limits_are_attained() {
        let families =
            [NoiseFamily::gaussian(), NoiseFamily::laplace(1.0).unwrap(), NoiseFamily::logistic(0.6).unwrap()];
        for fam in families {
            let p = ModelParams::new(4, 0.8).unwrap().with_family(fam).unwrap();
            let xh = ExtReal::Finite(0.3);
            let le = follower_payoff_limit(0.2, xh, History::Effort, &p).unwrap();
            let far = follower_payoff(-1e5, 0.2, xh, History::Effort, &p).unwrap();
            assert!((le - far).abs() < 2e-3, "{fam:?}: {le} vs {far}");
            let ln = follower_payoff_limit(0.2, xh, History::NoEffort, &p).unwrap();
            let far = follower_payoff(1e5, 0.2, xh, History::NoEffort, &p).unwrap();
            assert!((ln - far).abs() < 2e-3, "{fam:?}: {ln} vs {far}");
        }
    }

    #[test]
    fn fixed_point_residual_sign_patterns() {
        let p = ModelParams::new(4, 5.0).unwrap();
        let n = ModelParams::new(4, 1.0).unwrap();
        let tight = ModelParams::new(4, 0.05).unwrap();
        let mut prev = follower_fixed_point_residual(-1.0, 0.0, History::Effort, &tight);
        let mut changes = 0;
        for i in -20_000..=20_000 {
            let x = i as f64 * 1e-3;
            assert!(follower_fixed_point_residual(x, 0.0, History::Effort, &p) > 0.0);
            assert!(follower_fixed_point_residual(x, 0.0, History::NoEffort, &n) < 0.0);
            if x.abs() <= 1.0 {
                let r = follower_fixed_point_residual(x, 0.0, History::Effort, &tight);
                if r.signum() != prev.signum() {
                    changes += 1;
                }
                prev = r;
            }
        }
        assert!(changes >= 2);
    }

    #[test]
    fn br_follower_round_one_values() {
        let p = main4();
        assert_eq!(br_follower(1.0, ExtReal::NegInf, History::Effort, &p).unwrap(), ExtReal::NegInf);
        assert_eq!(br_follower(0.0, ExtReal::PosInf, History::NoEffort, &p).unwrap(), ExtReal::PosInf);
        // NoEffort, θ′ = 1, x_prev = −∞, (n, σ_F) = (2, 1): solves E[θ] = 1/n
        let p2 = ModelParams::new(2, 1.0).unwrap();
        let x = br_follower(1.0, ExtReal::NegInf, History::NoEffort, &p2).unwrap().finite().unwrap();
        let g = |x: f64| truncated_mean(x, 1.0, History::NoEffort, 1.0) - 0.5;
        assert!(g(x).abs() < 1e-11);
        let mut lo = -10.0;
        let mut hi = 10.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((x - lo).abs() < 1e-11);
    }

    #[test]
    fn br_follower_comparative_statics() {
        let p = ModelParams::new(4, 0.3).unwrap();
        // after NoEffort a root needs a leader threshold well above 1/n
        for (h, z) in [(History::Effort, 0.3), (History::NoEffort, 0.9)] {
            let base = br_follower(z, ExtReal::Finite(0.4), h, &p).unwrap().to_f64();
            assert!(base.is_finite());
            let up_theta = br_follower(z + 0.05, ExtReal::Finite(0.4), h, &p).unwrap().to_f64();
            let up_prev = br_follower(z, ExtReal::Finite(0.45), h, &p).unwrap().to_f64();
            assert!(up_theta < base, "{h:?}");
            assert!(up_prev > base, "{h:?}");
        }
    }

    #[test]
    fn extension_br_always_finite() {
        let p = ModelParams::extension(4, 0.5, 0.5).unwrap();
        for h in History::BOTH {
            for xp in [ExtReal::NegInf, ExtReal::PosInf, ExtReal::Finite(0.2)] {
                assert!(br_follower(0.4, xp, h, &p).unwrap().is_finite());
            }
        }
    }
}
