//! Monte Carlo estimates of the posterior objects, independent of the closed
//! forms they are checked against.
//!
//! Draws are split into blocks of [`BLOCK`] samples. Block `b` uses the
//! ChaCha8 generator seeded with `seed` on stream `b`, so an estimate depends
//! only on `(seed, n_samples, antithetic)` and not on the thread count. Block
//! sums are combined in block order.

use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::beliefs::History;
use crate::error::{Error, Result};
use crate::payoffs::{ExtReal, ModelParams};
use crate::special::{log_std_normal_cdf, std_normal_cdf, std_normal_quantile, std_normal_quantile_from_log};

pub const BLOCK: usize = 1 << 16;
pub const MIN_SAMPLES: usize = 10_000;
/// Weighted estimates with a smaller effective sample size are refused.
pub const MIN_ESS: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McConfig {
    pub n_samples: usize,
    pub seed: u64,
    pub antithetic: bool,
}

impl McConfig {
    pub fn new(n_samples: usize, seed: u64) -> Result<Self> {
        let cfg = McConfig { n_samples, seed, antithetic: false };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn antithetic(mut self, on: bool) -> Self {
        self.antithetic = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples < MIN_SAMPLES {
            return Err(Error::invalid(format!("need at least {MIN_SAMPLES} samples, got {}", self.n_samples)));
        }
        Ok(())
    }
}

/// A Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
    pub n_samples: usize,
    /// Kish effective sample size; equals the draw count when unweighted.
    pub ess: f64,
}

impl Estimate {
    /// |mean − value| ≤ k·SE.
    pub fn brackets(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.se
    }

    /// Distance to `value` in standard errors.
    pub fn z_score(&self, value: f64) -> f64 {
        (self.mean - value) / self.se
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Sums {
    a: f64,
    b: f64,
    aa: f64,
    ab: f64,
    bb: f64,
    // unshifted weight sums for the effective sample size
    w: f64,
    ww: f64,
}

impl Sums {
    fn add(&mut self, a: f64, b: f64) {
        self.a += a;
        self.b += b;
        self.aa += a * a;
        self.ab += a * b;
        self.bb += b * b;
        self.w += b;
        self.ww += b * b;
    }

    fn merge(mut self, o: &Sums) -> Sums {
        self.a += o.a;
        self.b += o.b;
        self.aa += o.aa;
        self.ab += o.ab;
        self.bb += o.bb;
        self.w += o.w;
        self.ww += o.ww;
        self
    }
}

fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

// Ratio estimator Σa/Σb over draws of (a, b) = kernel(u), u ~ U(0,1). With
// antithetic sampling each unit is the pair kernel(u) + kernel(1 − u). The
// numerator is centred on a pilot estimate before accumulation.
fn ratio_estimate<K>(cfg: &McConfig, kernel: K) -> Result<Estimate>
where
    K: Fn(f64) -> (f64, f64) + Sync,
{
    cfg.validate()?;
    let unit = |u: f64| {
        if cfg.antithetic {
            let (a1, b1) = kernel(u);
            let (a2, b2) = kernel(1.0 - u);
            (a1 + a2, b1 + b2)
        } else {
            kernel(u)
        }
    };
    let units = if cfg.antithetic { cfg.n_samples.div_ceil(2) } else { cfg.n_samples };

    let mut pilot_rng = block_rng(cfg.seed, u64::MAX);
    let (mut pa, mut pb) = (0.0, 0.0);
    for _ in 0..1024 {
        let (a, b) = unit(pilot_rng.sample(Open01));
        pa += a;
        pb += b;
    }
    let shift = if pb > 0.0 && (pa / pb).is_finite() { pa / pb } else { 0.0 };

    let n_blocks = units.div_ceil(BLOCK);
    let blocks: Vec<Sums> = (0..n_blocks)
        .into_par_iter()
        .map(|blk| {
            let mut rng = block_rng(cfg.seed, blk as u64);
            let count = BLOCK.min(units - blk * BLOCK);
            let mut s = Sums::default();
            for _ in 0..count {
                let (a, b) = unit(rng.sample(Open01));
                s.add(a - shift * b, b);
            }
            s
        })
        .collect();
    let s = blocks.iter().fold(Sums::default(), |acc, b| acc.merge(b));

    if !(s.b > 0.0) || !s.a.is_finite() {
        return Err(Error::InsufficientSamples { ess: 0.0 });
    }
    let ess = s.w * s.w / s.ww;
    if !(ess >= MIN_ESS) {
        return Err(Error::InsufficientSamples { ess });
    }
    let r = s.a / s.b;
    let var = (s.aa - 2.0 * r * s.ab + r * r * s.bb).max(0.0);
    Ok(Estimate { mean: shift + r, se: var.sqrt() / s.b, n_samples: cfg.n_samples, ess })
}

// Maps u ∈ (0,1) to a posterior draw of θ with weight: exact inverse-CDF
// draws for the perfectly informed leader, normal draws weighted by the
// likelihood of the leader's action otherwise.
fn posterior_draw(x: f64, z: f64, h: History, p: &ModelParams) -> impl Fn(f64) -> (f64, f64) + Sync + '_ {
    let sf = p.sigma_f;
    let c = (z - x) / sf;
    let above = h.is_effort();
    move |u: f64| {
        if p.sigma_l > 0.0 {
            let theta = x + sf * std_normal_quantile(u);
            let d = (theta - z) / p.sigma_l;
            (theta, std_normal_cdf(if above { d } else { -d }))
        } else if p.family.is_gaussian() {
            let v = if above {
                -std_normal_quantile_from_log(u.ln() + log_std_normal_cdf(-c))
            } else {
                std_normal_quantile_from_log(u.ln() + log_std_normal_cdf(c))
            };
            (x + sf * v, 1.0)
        } else {
            let f = &p.family;
            let v = if above { -f.quantile(u * f.cdf(-c)) } else { f.quantile(u * f.cdf(c)) };
            (x + sf * v, 1.0)
        }
    }
}

fn posterior_expectation<G>(x: f64, z: f64, h: History, p: &ModelParams, cfg: &McConfig, g: G) -> Result<Estimate>
where
    G: Fn(f64) -> f64 + Sync,
{
    p.validate()?;
    let draw = posterior_draw(x, z, h, p);
    ratio_estimate(cfg, |u| {
        let (theta, w) = draw(u);
        (w * g(theta), w)
    })
}

/// E[θ | x, leader action h] by posterior sampling.
pub fn mc_posterior_mean(x: f64, z: f64, h: History, params: &ModelParams, cfg: &McConfig) -> Result<Estimate> {
    posterior_expectation(x, z, h, params, cfg, |t| t)
}

/// P(θ ≤ theta | x, leader action h).
pub fn mc_posterior_cdf(
    theta: f64,
    x: f64,
    z: f64,
    h: History,
    params: &ModelParams,
    cfg: &McConfig,
) -> Result<Estimate> {
    posterior_expectation(x, z, h, params, cfg, |t| if t <= theta { 1.0 } else { 0.0 })
}

/// Probability that another follower's signal is below x: E[F((x − θ)/σ_F)].
pub fn mc_rank_belief(x: f64, z: f64, h: History, params: &ModelParams, cfg: &McConfig) -> Result<Estimate> {
    let sf = params.sigma_f;
    posterior_expectation(x, z, h, params, cfg, |t| params.family.cdf((x - t) / sf))
}

/// E[θ − ((n−1)/n)F((x_h − θ)/σ_F)] − χ_N/n under the posterior of type x.
pub fn mc_follower_payoff(
    x: f64,
    z: f64,
    x_h: f64,
    h: History,
    params: &ModelParams,
    cfg: &McConfig,
) -> Result<Estimate> {
    if !x_h.is_finite() {
        return Err(Error::invalid("opponents' threshold must be finite"));
    }
    let sf = params.sigma_f;
    let w = params.weight();
    let cost = h.chi_n() / params.n as f64;
    posterior_expectation(x, z, h, params, cfg, |t| t - w * params.family.cdf((x_h - t) / sf) - cost)
}

/// Posterior mean by forward simulation and rejection: draw θ given x, then
/// the leader's signal given θ, keeping draws whose implied action is h.
pub fn mc_posterior_mean_rejection(
    x: f64,
    z: f64,
    h: History,
    params: &ModelParams,
    cfg: &McConfig,
) -> Result<Estimate> {
    params.validate()?;
    cfg.validate()?;
    let n_blocks = cfg.n_samples.div_ceil(BLOCK);
    let sf = params.sigma_f;
    let parts: Vec<(f64, f64, f64)> = (0..n_blocks)
        .into_par_iter()
        .map(|blk| {
            let mut rng = block_rng(cfg.seed, blk as u64);
            let count = BLOCK.min(cfg.n_samples - blk * BLOCK);
            let (mut k, mut s, mut ss) = (0.0, 0.0, 0.0);
            for _ in 0..count {
                let theta = x + sf * params.family.quantile(rng.sample(Open01));
                let e: f64 = rng.sample(Open01);
                let xl = theta + params.sigma_l * std_normal_quantile(e);
                if (xl > z) == h.is_effort() {
                    k += 1.0;
                    s += theta - x;
                    ss += (theta - x) * (theta - x);
                }
            }
            (k, s, ss)
        })
        .collect();
    let (k, s, ss) = parts.iter().fold((0.0, 0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1, a.2 + p.2));
    if k < MIN_ESS {
        return Err(Error::InsufficientSamples { ess: k });
    }
    let m = s / k;
    let var = (ss / k - m * m).max(0.0);
    Ok(Estimate { mean: x + m, se: (var / k).sqrt(), n_samples: cfg.n_samples, ess: k })
}

/// A monotone strategy profile: the leader exerts effort above `leader`,
/// followers above `effort` after Effort and above `no_effort` after NoEffort.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Profile {
    pub leader: ExtReal,
    pub effort: ExtReal,
    pub no_effort: ExtReal,
}

impl Profile {
    /// θ_L = 0, x_E = −∞, x_N = +∞: followers copy the leader.
    pub fn imitation() -> Self {
        Profile { leader: ExtReal::Finite(0.0), effort: ExtReal::NegInf, no_effort: ExtReal::PosInf }
    }

    /// Nobody ever exerts effort.
    pub fn never() -> Self {
        Profile { leader: ExtReal::PosInf, effort: ExtReal::PosInf, no_effort: ExtReal::PosInf }
    }

    /// The most pessimistic profile consistent with a set of bounds.
    pub fn from_upper_bounds(s: &crate::rationalizability::BoundsState) -> Self {
        Profile { leader: s.theta_hi, effort: s.x_e_hi, no_effort: s.x_n_hi }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Outcome {
    pub theta: f64,
    pub leader_effort: f64,
    pub follower_effort: f64,
    pub leader_payoff: Estimate,
    /// Average over followers.
    pub follower_payoff: Estimate,
}

fn above(v: f64, t: ExtReal) -> bool {
    match t {
        ExtReal::NegInf => true,
        ExtReal::PosInf => false,
        ExtReal::Finite(t) => v > t,
    }
}

fn moments(sum: f64, sq: f64, k: f64) -> (f64, f64) {
    let m = sum / k;
    (m, ((sq / k - m * m).max(0.0) / k).sqrt())
}

/// Simulates play of `profile` at each θ: u = θ + A − 1 for effort, where A
/// is the share of the other n players exerting effort, and 0 otherwise.
pub fn mc_game_outcome(
    profile: &Profile,
    theta_grid: &[f64],
    params: &ModelParams,
    cfg: &McConfig,
) -> Result<Vec<Outcome>> {
    params.validate()?;
    cfg.validate()?;
    let n = params.n;
    let nf = n as f64;
    theta_grid
        .iter()
        .enumerate()
        .map(|(i, &theta)| {
            let stream_base = (i as u64) << 32;
            let n_blocks = cfg.n_samples.div_ceil(BLOCK);
            let parts: Vec<[f64; 6]> = (0..n_blocks)
                .into_par_iter()
                .map(|blk| {
                    let mut rng = block_rng(cfg.seed, stream_base + blk as u64);
                    let count = BLOCK.min(cfg.n_samples - blk * BLOCK);
                    let mut acc = [0.0; 6];
                    let mut acts = vec![false; n];
                    for _ in 0..count {
                        let xl = theta + params.sigma_l * std_normal_quantile(rng.sample(Open01));
                        let lead = above(xl, profile.leader);
                        let t = if lead { profile.effort } else { profile.no_effort };
                        for a in acts.iter_mut() {
                            let xj = theta + params.sigma_f * params.family.quantile(rng.sample(Open01));
                            *a = above(xj, t);
                        }
                        let k = acts.iter().filter(|&&a| a).count() as f64;
                        let ul = if lead { theta + k / nf - 1.0 } else { 0.0 };
                        let others = |own: f64| (k - own + if lead { 1.0 } else { 0.0 }) / nf;
                        let uf =
                            acts.iter().map(|&a| if a { theta + others(1.0) - 1.0 } else { 0.0 }).sum::<f64>() / nf;
                        acc[0] += if lead { 1.0 } else { 0.0 };
                        acc[1] += k / nf;
                        acc[2] += ul;
                        acc[3] += ul * ul;
                        acc[4] += uf;
                        acc[5] += uf * uf;
                    }
                    acc
                })
                .collect();
            let mut tot = [0.0; 6];
            for p in &parts {
                for (t, v) in tot.iter_mut().zip(p) {
                    *t += v;
                }
            }
            let k = cfg.n_samples as f64;
            let est = |(mean, se): (f64, f64)| Estimate { mean, se, n_samples: cfg.n_samples, ess: k };
            Ok(Outcome {
                theta,
                leader_effort: tot[0] / k,
                follower_effort: tot[1] / k,
                leader_payoff: est(moments(tot[2], tot[3], k)),
                follower_payoff: est(moments(tot[4], tot[5], k)),
            })
        })
        .collect()
}
