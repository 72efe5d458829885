//! Followers' posteriors about the state after observing a private signal and
//! the leader's action, and their conditional rank beliefs.
//!
//! Main model: the leader sees θ and follows a threshold `z`, so Effort
//! truncates the signal posterior N(x, σ_F²) to (z, ∞). Extension: the leader
//! sees x_L = θ + σ_L ε, so the truncation is soft.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{NoiseFamily, Side};
use crate::special::{s_tilde, std_normal_cdf, x_plus_reversed_hazard};

/// The first-stage action the followers observed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum History {
    Effort,
    NoEffort,
}

impl History {
    pub const BOTH: [History; 2] = [History::Effort, History::NoEffort];

    pub fn chi_e(self) -> f64 {
        match self {
            History::Effort => 1.0,
            History::NoEffort => 0.0,
        }
    }

    pub fn chi_n(self) -> f64 {
        1.0 - self.chi_e()
    }

    pub fn is_effort(self) -> bool {
        self == History::Effort
    }
}

impl fmt::Display for History {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            History::Effort => "E",
            History::NoEffort => "N",
        })
    }
}

impl FromStr for History {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "E" | "e" | "effort" => Ok(History::Effort),
            "N" | "n" | "noeffort" | "no-effort" => Ok(History::NoEffort),
            other => Err(Error::invalid(format!("unknown history '{other}'"))),
        }
    }
}

fn check_sigma(name: &str, s: f64) -> Result<()> {
    if s.is_finite() && s > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive and finite, got {s}")))
    }
}

/// Posterior mean of θ in the main model with Gaussian noise:
/// x + σ_F λ((x−z)/σ_F) after Effort, x − σ_F λ((z−x)/σ_F) after NoEffort.
pub fn truncated_mean(x: f64, z: f64, h: History, sigma_f: f64) -> f64 {
    let w = (x - z) / sigma_f;
    match h {
        // written around z so the left tail does not cancel
        History::Effort => z + sigma_f * x_plus_reversed_hazard(w),
        History::NoEffort => z - sigma_f * x_plus_reversed_hazard(-w),
    }
}

/// Posterior mean for a generic noise family: σ_F δ(w) + z or −σ_F ς(w) + z.
pub fn truncated_mean_with(x: f64, z: f64, h: History, sigma_f: f64, family: &NoiseFamily) -> f64 {
    let w = (x - z) / sigma_f;
    match h {
        History::Effort => z + sigma_f * family.delta(w),
        History::NoEffort => z - sigma_f * family.varsigma(w),
    }
}

/// A follower's posterior when the leader sees θ exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MainPosterior {
    pub x: f64,
    pub z: f64,
    pub history: History,
    pub sigma_f: f64,
    pub family: NoiseFamily,
}

impl MainPosterior {
    pub fn new(x: f64, z: f64, history: History, sigma_f: f64) -> Result<Self> {
        MainPosterior::with_family(x, z, history, sigma_f, NoiseFamily::gaussian())
    }

    pub fn with_family(x: f64, z: f64, history: History, sigma_f: f64, family: NoiseFamily) -> Result<Self> {
        check_sigma("sigma_f", sigma_f)?;
        if !(x.is_finite() && z.is_finite()) {
            return Err(Error::invalid("posterior signal and threshold must be finite"));
        }
        Ok(MainPosterior { x, z, history, sigma_f, family })
    }

    pub fn cdf(&self, theta: f64) -> f64 {
        posterior_cdf_main(theta, self)
    }

    pub fn mean(&self) -> f64 {
        truncated_mean_with(self.x, self.z, self.history, self.sigma_f, &self.family)
    }
}

/// CDF of the truncated posterior θ = x + σ_F U restricted to the side of z
/// the leader's action reveals. Ratios are formed in log space.
pub fn posterior_cdf_main(theta: f64, post: &MainPosterior) -> f64 {
    let MainPosterior { x, z, history, sigma_f, family } = *post;
    match history {
        History::Effort => {
            if theta <= z {
                return 0.0;
            }
            if theta == f64::INFINITY {
                return 1.0;
            }
            // 1 − F((x−θ)/σ_F) / F((x−z)/σ_F)
            let log_ratio = family.logcdf((x - theta) / sigma_f) - family.logcdf((x - z) / sigma_f);
            -log_ratio.exp_m1()
        }
        History::NoEffort => {
            if theta >= z {
                return 1.0;
            }
            if theta == f64::NEG_INFINITY {
                return 0.0;
            }
            let log_ratio = family.logcdf((theta - x) / sigma_f) - family.logcdf((z - x) / sigma_f);
            log_ratio.exp()
        }
    }
}

/// A follower's posterior when the leader's own signal carries noise σ_L.
///
/// With v = (x_L − x)/σ ~ N(0, 1), the leader's action reveals the side of
/// −(x−z)/σ on which v lies, and θ | v ~ N(x + (σ_F²/σ)v, τ²) with
/// τ = σ_Fσ_L/σ. Every expectation below integrates over v only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtPosterior {
    pub x: f64,
    pub z: f64,
    pub history: History,
    pub sigma_f: f64,
    pub sigma_l: f64,
}

impl ExtPosterior {
    pub fn new(x: f64, z: f64, history: History, sigma_f: f64, sigma_l: f64) -> Result<Self> {
        check_sigma("sigma_f", sigma_f)?;
        check_sigma("sigma_l", sigma_l)?;
        if !(x.is_finite() && z.is_finite()) {
            return Err(Error::invalid("posterior signal and threshold must be finite"));
        }
        Ok(ExtPosterior { x, z, history, sigma_f, sigma_l })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma_f.hypot(self.sigma_l)
    }

    pub fn tau(&self) -> f64 {
        self.sigma_f * self.sigma_l / self.sigma()
    }

    fn side(&self) -> (f64, Side) {
        let cut = (self.z - self.x) / self.sigma();
        match self.history {
            History::Effort => (cut, Side::Above),
            History::NoEffort => (cut, Side::Below),
        }
    }

    /// E[Φ((a − θ)/s)] under this posterior; `s = 0` gives the CDF at `a`.
    pub fn smoothed_cdf(&self, a: f64, s: f64) -> Result<f64> {
        if a == f64::INFINITY {
            return Ok(1.0);
        }
        if a == f64::NEG_INFINITY {
            return Ok(0.0);
        }
        let sigma = self.sigma();
        let slope = self.sigma_f * self.sigma_f / sigma;
        let spread = s.hypot(self.tau());
        let (cut, side) = self.side();
        let d = (a - self.x) / spread;
        let k = slope / spread;
        NoiseFamily::gaussian().conditional_mean(cut, side, |v| std_normal_cdf(d - k * v))
    }

    pub fn cdf(&self, theta: f64) -> Result<f64> {
        self.smoothed_cdf(theta, 0.0)
    }

    pub fn mean(&self) -> f64 {
        posterior_mean_ext(self.x, self.z, self.history, self.sigma_f, self.sigma_l)
    }
}

pub fn posterior_cdf_ext(theta: f64, post: &ExtPosterior) -> Result<f64> {
    post.cdf(theta)
}

/// x + (σ_F²/σ)λ((x−z)/σ) after Effort, x − (σ_F²/σ)λ((z−x)/σ) after NoEffort.
pub fn posterior_mean_ext(x: f64, z: f64, h: History, sigma_f: f64, sigma_l: f64) -> f64 {
    let sigma = sigma_f.hypot(sigma_l);
    let w = (x - z) / sigma;
    let a = sigma_f * sigma_f / sigma;
    let b = sigma_l * sigma_l / sigma;
    // x = z + σw = z + (σ_L²/σ)w + (σ_F²/σ)w, regrouped to avoid cancellation
    match h {
        History::Effort => z + b * w + a * x_plus_reversed_hazard(w),
        History::NoEffort => z + b * w - a * x_plus_reversed_hazard(-w),
    }
}

/// Probability another follower's signal is below x given the history:
/// ½[F((x−z)/σ_F) + χ_N].
pub fn rank_belief_main(x: f64, z: f64, h: History, sigma_f: f64) -> f64 {
    rank_belief_main_with(x, z, h, sigma_f, &NoiseFamily::gaussian())
}

pub fn rank_belief_main_with(x: f64, z: f64, h: History, sigma_f: f64, family: &NoiseFamily) -> f64 {
    0.5 * (family.cdf((x - z) / sigma_f) + h.chi_n())
}

/// Slope parameter α = σ_F/√(2σ_L² + σ_F²) of the noisy-leader rank belief.
pub fn rank_alpha(sigma_f: f64, sigma_l: f64) -> f64 {
    sigma_f / (2.0 * sigma_l * sigma_l + sigma_f * sigma_f).sqrt()
}

/// 1/2 − T(w, α)/Φ(w) after Effort and 1/2 + T(−w, α)/Φ(−w) after NoEffort,
/// w = (x−z)/σ.
pub fn rank_belief_ext(x: f64, z: f64, h: History, sigma_f: f64, sigma_l: f64) -> f64 {
    let sigma = sigma_f.hypot(sigma_l);
    let alpha = rank_alpha(sigma_f, sigma_l);
    let w = (x - z) / sigma;
    match h {
        History::Effort => s_tilde(w, alpha),
        History::NoEffort => 1.0 - s_tilde(-w, alpha),
    }
}
