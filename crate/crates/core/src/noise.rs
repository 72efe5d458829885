//! Symmetric, log-concave signal-noise families and their tail functionals.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{Estimate, Quadrature};
use crate::special::{
    log_std_normal_cdf, log_std_normal_pdf, reversed_hazard, std_normal_cdf, std_normal_pdf, std_normal_quantile,
    x_plus_reversed_hazard,
};

const LN_2: f64 = std::f64::consts::LN_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    Gaussian,
    Laplace,
    Logistic,
}

impl NoiseKind {
    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::Gaussian => "gaussian",
            NoiseKind::Laplace => "laplace",
            NoiseKind::Logistic => "logistic",
        }
    }

    // half-width (in scale units) beyond which tail mass is negligible
    fn tail_width(self) -> f64 {
        match self {
            NoiseKind::Gaussian => 9.0,
            NoiseKind::Laplace | NoiseKind::Logistic => 42.0,
        }
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(NoiseKind::Gaussian),
            "laplace" => Ok(NoiseKind::Laplace),
            "logistic" => Ok(NoiseKind::Logistic),
            other => Err(Error::invalid(format!("unknown noise family '{other}'"))),
        }
    }
}

/// Which side of a cut the conditioning event lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Above,
    Below,
}

/// A noise distribution with positive, symmetric, log-concave density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseFamily {
    kind: NoiseKind,
    scale: f64,
}

impl Default for NoiseFamily {
    fn default() -> Self {
        NoiseFamily::gaussian()
    }
}

// Targets are tight; only estimates that miss a looser floor are failures.
fn accept(est: Estimate) -> Result<f64> {
    if !est.value.is_finite() || est.error.is_nan() {
        return Err(Error::NotANumber("tail expectation"));
    }
    if est.error > 1e-9 * est.value.abs().max(1.0) {
        return Err(Error::Quadrature { estimate: est.value, error: est.error });
    }
    Ok(est.value)
}

fn softplus(v: f64) -> f64 {
    if v > 0.0 {
        v + (-v).exp().ln_1p()
    } else {
        v.exp().ln_1p()
    }
}

impl NoiseFamily {
    /// Validates the scale and checks log-concavity and symmetry of the
    /// density on a 2001-point grid over [−20, 20]·scale.
    pub fn new(kind: NoiseKind, scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::invalid(format!("noise scale must be positive and finite, got {scale}")));
        }
        let fam = NoiseFamily { kind, scale };
        fam.validate()?;
        Ok(fam)
    }

    pub fn gaussian() -> Self {
        NoiseFamily { kind: NoiseKind::Gaussian, scale: 1.0 }
    }

    pub fn laplace(scale: f64) -> Result<Self> {
        NoiseFamily::new(NoiseKind::Laplace, scale)
    }

    pub fn logistic(scale: f64) -> Result<Self> {
        NoiseFamily::new(NoiseKind::Logistic, scale)
    }

    fn validate(&self) -> Result<()> {
        let n = 2001;
        let h = 40.0 * self.scale / (n - 1) as f64;
        let lp: Vec<f64> = (0..n).map(|i| self.logpdf(-20.0 * self.scale + i as f64 * h)).collect();
        for i in 1..n - 1 {
            // weak inequality: the Laplace log-density is piecewise linear
            let d2 = lp[i + 1] - 2.0 * lp[i] + lp[i - 1];
            if d2 > 1e-12 {
                return Err(Error::invalid(format!(
                    "{} density is not log-concave near {}",
                    self.kind,
                    -20.0 * self.scale + i as f64 * h
                )));
            }
            let x = -20.0 * self.scale + i as f64 * h;
            if (lp[i] - self.logpdf(-x)).abs() > 1e-12 * lp[i].abs().max(1.0) {
                return Err(Error::invalid(format!("{} density is not symmetric", self.kind)));
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> NoiseKind {
        self.kind
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn is_gaussian(&self) -> bool {
        self.kind == NoiseKind::Gaussian
    }

    pub fn pdf(&self, u: f64) -> f64 {
        let v = u / self.scale;
        let f = match self.kind {
            NoiseKind::Gaussian => std_normal_pdf(v),
            NoiseKind::Laplace => 0.5 * (-v.abs()).exp(),
            NoiseKind::Logistic => {
                let e = (-v.abs()).exp();
                e / ((1.0 + e) * (1.0 + e))
            }
        };
        f / self.scale
    }

    pub fn logpdf(&self, u: f64) -> f64 {
        let v = u / self.scale;
        let l = match self.kind {
            NoiseKind::Gaussian => log_std_normal_pdf(v),
            NoiseKind::Laplace => -v.abs() - LN_2,
            NoiseKind::Logistic => -v.abs() - 2.0 * (-v.abs()).exp().ln_1p(),
        };
        l - self.scale.ln()
    }

    /// F(u); accepts ±∞.
    pub fn cdf(&self, u: f64) -> f64 {
        if u == f64::INFINITY {
            return 1.0;
        }
        if u == f64::NEG_INFINITY {
            return 0.0;
        }
        let v = u / self.scale;
        match self.kind {
            NoiseKind::Gaussian => std_normal_cdf(v),
            NoiseKind::Laplace => {
                if v < 0.0 {
                    0.5 * v.exp()
                } else {
                    1.0 - 0.5 * (-v).exp()
                }
            }
            NoiseKind::Logistic => {
                if v >= 0.0 {
                    1.0 / (1.0 + (-v).exp())
                } else {
                    let e = v.exp();
                    e / (1.0 + e)
                }
            }
        }
    }

    /// 1 − F(u) = F(−u).
    pub fn sf(&self, u: f64) -> f64 {
        self.cdf(-u)
    }

    pub fn logcdf(&self, u: f64) -> f64 {
        if u == f64::INFINITY {
            return 0.0;
        }
        if u == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        let v = u / self.scale;
        match self.kind {
            NoiseKind::Gaussian => log_std_normal_cdf(v),
            NoiseKind::Laplace => {
                if v < 0.0 {
                    v - LN_2
                } else {
                    (-0.5 * (-v).exp()).ln_1p()
                }
            }
            NoiseKind::Logistic => -softplus(-v),
        }
    }

    pub fn logsf(&self, u: f64) -> f64 {
        self.logcdf(-u)
    }

    /// Upper-tail hazard f(u)/(1 − F(u)).
    pub fn hazard(&self, u: f64) -> f64 {
        match self.kind {
            NoiseKind::Gaussian => reversed_hazard(-u / self.scale) / self.scale,
            _ => (self.logpdf(u) - self.logsf(u)).exp(),
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return f64::NEG_INFINITY;
        }
        if p >= 1.0 {
            return f64::INFINITY;
        }
        let v = match self.kind {
            NoiseKind::Gaussian => std_normal_quantile(p),
            NoiseKind::Laplace => {
                if p < 0.5 {
                    (2.0 * p).ln()
                } else {
                    -(2.0 * (1.0 - p)).ln()
                }
            }
            NoiseKind::Logistic => p.ln() - (-p).ln_1p(),
        };
        v * self.scale
    }

    /// η = lim_{u→−∞} F(u)/f(u): 0 for Gaussian, the scale otherwise.
    pub fn eta(&self) -> f64 {
        match self.kind {
            NoiseKind::Gaussian => 0.0,
            NoiseKind::Laplace | NoiseKind::Logistic => self.scale,
        }
    }

    /// δ(u) = ∫_{−∞}^u F / F(u); the Effort-history posterior mean is σ_F δ(w) + z.
    pub fn delta(&self, u: f64) -> f64 {
        let v = u / self.scale;
        let r = match self.kind {
            NoiseKind::Gaussian => x_plus_reversed_hazard(v),
            NoiseKind::Laplace => {
                if v <= 0.0 {
                    1.0
                } else {
                    let e = 0.5 * (-v).exp();
                    (v + e) / (1.0 - e)
                }
            }
            NoiseKind::Logistic => {
                if v >= 0.0 {
                    softplus(v) * (1.0 + (-v).exp())
                } else {
                    let e = v.exp();
                    let ratio = if e > 0.0 { e.ln_1p() / e } else { 1.0 };
                    ratio * (1.0 + e)
                }
            }
        };
        r * self.scale
    }

    /// ς(u) = ∫_u^∞ (1 − F) / (1 − F(u)); the NoEffort mean is −σ_F ς(w) + z.
    pub fn varsigma(&self, u: f64) -> f64 {
        let v = u / self.scale;
        let r = match self.kind {
            NoiseKind::Gaussian => {
                // upper Mills ratio minus the cut: f(v)/(1−F(v)) − v
                x_plus_reversed_hazard(-v)
            }
            NoiseKind::Laplace => {
                if v >= 0.0 {
                    1.0
                } else {
                    // ∫_v^∞ (1 − F) = −v + e^{v}/2 for v < 0
                    let e = 0.5 * v.exp();
                    (-v + e) / (1.0 - e)
                }
            }
            NoiseKind::Logistic => {
                // ∫_v^∞ (1 − F) = softplus(−v), 1 − F(v) = 1/(1 + e^{v})
                if v <= 0.0 {
                    softplus(-v) * (1.0 + v.exp())
                } else {
                    let e = (-v).exp();
                    let ratio = if e > 0.0 { e.ln_1p() / e } else { 1.0 };
                    ratio * (1.0 + e)
                }
            }
        };
        r * self.scale
    }

    // log f(c + s) − log f(c), without the cancellation of the Gaussian square
    fn log_density_ratio(&self, c: f64, s: f64) -> f64 {
        match self.kind {
            NoiseKind::Gaussian => {
                let (v, d) = (c / self.scale, s / self.scale);
                -d * (v + 0.5 * d)
            }
            _ => self.logpdf(c + s) - self.logpdf(c),
        }
    }

    /// E[g(U) | U > cut] (or `U < cut`) for U drawn from this family.
    pub fn conditional_mean<G: FnMut(f64) -> f64>(&self, cut: f64, side: Side, mut g: G) -> Result<f64> {
        match side {
            Side::Above => self.upper_mean(cut, g),
            Side::Below => self.upper_mean(-cut, |v| g(-v)),
        }
    }

    fn upper_mean<G: FnMut(f64) -> f64>(&self, cut: f64, mut g: G) -> Result<f64> {
        if cut.is_nan() {
            return Err(Error::NotANumber("conditioning cut"));
        }
        if cut == f64::INFINITY {
            return Err(Error::invalid("conditioning on an empty tail"));
        }
        let t0 = self.kind.tail_width() * self.scale;
        let quad = Quadrature::with_tolerance(1e-14, 1e-13);
        let total = if cut >= 0.0 {
            // shift to s = u − cut so the density ratio keeps full precision
            // even when cut is far out in the tail
            let hazard = self.hazard(cut);
            let width = (40.0 / hazard).min(t0);
            let mut integrand = |s: f64| (self.log_density_ratio(cut, s)).exp() * hazard * g(cut + s);
            accept(quad.estimate(&mut integrand, 0.0, width))?
        } else {
            let lo = cut.max(-t0);
            let log_norm = if cut == f64::NEG_INFINITY { 0.0 } else { self.logsf(cut) };
            let mut integrand = |u: f64| (self.logpdf(u) - log_norm).exp() * g(u);
            accept(quad.estimate(&mut integrand, lo, 0.0))? + accept(quad.estimate(&mut integrand, 0.0, t0))?
        };
        Ok(total)
    }
}
