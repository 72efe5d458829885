//! Sufficient leader noise for uniqueness when the leader observes θ with
//! noise.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::roots::{golden_max, grid_golden_max};
use crate::special::{reversed_hazard_deriv, s_tilde_dy, std_normal_pdf};

const Y_MAX: f64 = 50.0;
const GRID: usize = 4001;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SigmaLBound {
    pub gamma: f64,
    pub n: usize,
    /// Λ(γ) = max_y S′(y)/(1 + γ²(1 + λ′(y))).
    pub lambda_max: f64,
    /// Bound under which each follower fixed point is unique.
    pub sigma_l_hat1: f64,
    /// Bound under which the leader–follower composition contracts.
    pub sigma_l_hat2: f64,
    pub sigma_l_hat: f64,
}

fn slope(gamma: f64) -> f64 {
    gamma / (2.0 + gamma * gamma).sqrt()
}

/// Λ(γ), maximised over |y| ≤ 50 where the objective has decayed.
pub fn lambda_max(gamma: f64) -> f64 {
    let alpha = slope(gamma);
    let g2 = gamma * gamma;
    let f = |y: f64| s_tilde_dy(y, alpha) / (1.0 + g2 * (1.0 + reversed_hazard_deriv(y)));
    grid_golden_max(f, -Y_MAX, Y_MAX, GRID, 1e-10).1
}

/// Bounds M(σ_L, γ), M_f and M_g of the contraction argument, as functions of
/// σ_L for fixed γ and n.
pub struct Contraction {
    gamma: f64,
    weight: f64,
    alpha: f64,
    ys: Vec<f64>,
    lam_d: Vec<f64>,
    s_d: Vec<f64>,
}

impl Contraction {
    pub fn new(gamma: f64, n: usize) -> Result<Self> {
        check(gamma, n)?;
        let alpha = slope(gamma);
        let h = 2.0 * Y_MAX / (GRID - 1) as f64;
        let ys: Vec<f64> = (0..GRID).map(|i| -Y_MAX + i as f64 * h).collect();
        let lam_d = ys.iter().map(|&y| reversed_hazard_deriv(y)).collect();
        let s_d = ys.iter().map(|&y| s_tilde_dy(y, alpha)).collect();
        Ok(Contraction { gamma, weight: (n as f64 - 1.0) / n as f64, alpha, ys, lam_d, s_d })
    }

    fn coefficients(&self, sigma_l: f64) -> (f64, f64) {
        let g2 = self.gamma * self.gamma;
        (-g2 / (1.0 + g2), self.weight / (sigma_l * (1.0 + g2).sqrt()))
    }

    /// M(σ_L, γ) = max_y −(γ²/(1+γ²))λ′(y) + ((n−1)/(nσ_L√(1+γ²)))S′(y).
    pub fn m(&self, sigma_l: f64) -> f64 {
        let (a, b) = self.coefficients(sigma_l);
        let mut best = 0;
        for i in 1..self.ys.len() {
            if a * self.lam_d[i] + b * self.s_d[i] > a * self.lam_d[best] + b * self.s_d[best] {
                best = i;
            }
        }
        let grid_val = a * self.lam_d[best] + b * self.s_d[best];
        let lo = self.ys[best.saturating_sub(1)];
        let hi = self.ys[(best + 1).min(self.ys.len() - 1)];
        let f = |y: f64| a * reversed_hazard_deriv(y) + b * s_tilde_dy(y, self.alpha);
        golden_max(f, lo, hi, 1e-10).1.max(grid_val)
    }

    /// M_f = M/(M − 1), a lower bound on the slope of the follower's
    /// implicit best response.
    pub fn m_f(&self, sigma_l: f64) -> f64 {
        let m = self.m(sigma_l);
        m / (m - 1.0)
    }

    /// M_g = φ(0)/(σ_L√(1+γ²) + φ(0)).
    pub fn m_g(&self, sigma_l: f64) -> f64 {
        m_g(sigma_l, self.gamma)
    }

    /// M < 1 and [M_g·M_f]² < 1.
    pub fn contracts(&self, sigma_l: f64) -> bool {
        let m = self.m(sigma_l);
        m < 1.0 && (self.m_g(sigma_l) * m / (m - 1.0)).powi(2) < 1.0
    }
}

pub fn m_g(sigma_l: f64, gamma: f64) -> f64 {
    let p0 = std_normal_pdf(0.0);
    p0 / (sigma_l * (1.0 + gamma * gamma).sqrt() + p0)
}

fn check(gamma: f64, n: usize) -> Result<()> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::invalid(format!("gamma must be positive, got {gamma}")));
    }
    if n < 2 {
        return Err(Error::invalid(format!("need at least 2 followers, got n = {n}")));
    }
    Ok(())
}

/// σ̂_L(γ) = max{σ̂_L¹, σ̂_L²} for σ_F = γσ_L; uniqueness holds above it.
pub fn sufficient_sigma_l(gamma: f64, n: usize) -> Result<SigmaLBound> {
    check(gamma, n)?;
    let w = (n as f64 - 1.0) / n as f64;
    let lam = lambda_max(gamma);
    if !(lam.is_finite() && lam > 0.0) {
        return Err(Error::Consistency(format!("maximisation of the slope ratio gave {lam}")));
    }
    let hat1 = w * (1.0 + gamma * gamma).sqrt() * lam;

    let c = Contraction::new(gamma, n)?;
    let mut hi = hat1.max(1e-3);
    let mut lo = 0.0;
    while !c.contracts(hi) {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Consistency("contraction bound never drops below one".into()));
        }
    }
    while hi - lo > 1e-10 * hi {
        let mid = 0.5 * (lo + hi);
        if c.contracts(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(SigmaLBound { gamma, n, lambda_max: lam, sigma_l_hat1: hat1, sigma_l_hat2: hi, sigma_l_hat: hat1.max(hi) })
}
