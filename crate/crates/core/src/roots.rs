//! Bracketed scalar root finding and one-dimensional maximization.

use crate::error::{Error, Result};

const MAX_ITER: usize = 200;
const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Root of `f` on `[a, b]` with `f(a)` and `f(b)` of opposite sign.
///
/// Bisection safeguarded inverse-quadratic/secant steps (Brent); the bracket
/// always shrinks to width `xtol + 4ε|x|`.
pub fn brent<F>(mut f: F, a: f64, b: f64, xtol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let fa = f(a)?;
    let fb = f(b)?;
    brent_with_values(f, a, b, fa, fb, xtol)
}

/// As [`brent`] when `f(a)` and `f(b)` are already known.
pub fn brent_with_values<F>(mut f: F, a: f64, b: f64, fa: f64, fb: f64, xtol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.is_nan() || fb.is_nan() {
        return Err(Error::NotANumber("root bracket"));
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoBracket { lo: a, hi: b, f_lo: fa, f_hi: fb });
    }
    let (mut a, mut b, mut fa, mut fb) = (a, b, fa, fb);
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..MAX_ITER {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b)?;
        if fb.is_nan() {
            return Err(Error::NotANumber("root iterate"));
        }
    }
    Err(Error::RootNotConverged { iterations: MAX_ITER, lo: b.min(c), hi: b.max(c) })
}

/// Outcome of walking away from a starting point in search of a sign change.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bracket {
    /// `f(lo) < 0 < f(hi)` for an increasing function (values attached).
    Found {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },
    /// No sign change before |x| exceeded the limit; the root lies beyond it.
    Below,
    Above,
}

/// Brackets the root of an increasing function starting at `x0`, stepping by
/// `step` and doubling, until `|x| > limit`.
pub fn bracket_increasing<F>(mut f: F, x0: f64, step: f64, limit: f64) -> Result<Bracket>
where
    F: FnMut(f64) -> Result<f64>,
{
    let f0 = f(x0)?;
    if f0 == 0.0 {
        return Ok(Bracket::Found { lo: x0, hi: x0, f_lo: 0.0, f_hi: 0.0 });
    }
    let dir = if f0 < 0.0 { 1.0 } else { -1.0 };
    let (mut x, mut fx) = (x0, f0);
    let mut h = step.abs().max(f64::MIN_POSITIVE);
    loop {
        let next = x + dir * h;
        if next.abs() > limit {
            // one final probe at the limit itself
            let edge = dir * limit;
            if (edge - x) * dir > 0.0 {
                let fe = f(edge)?;
                if fe.signum() != fx.signum() {
                    return Ok(order(x, fx, edge, fe));
                }
            }
            return Ok(if dir > 0.0 { Bracket::Above } else { Bracket::Below });
        }
        let fn_ = f(next)?;
        if fn_.is_nan() {
            return Err(Error::NotANumber("bracket search"));
        }
        if fn_ == 0.0 || fn_.signum() != fx.signum() {
            return Ok(order(x, fx, next, fn_));
        }
        x = next;
        fx = fn_;
        h *= 2.0;
    }
}

fn order(x1: f64, f1: f64, x2: f64, f2: f64) -> Bracket {
    if x1 < x2 {
        Bracket::Found { lo: x1, hi: x2, f_lo: f1, f_hi: f2 }
    } else {
        Bracket::Found { lo: x2, hi: x1, f_lo: f2, f_hi: f1 }
    }
}

/// Maximizer of a unimodal `f` on `[a, b]` by golden-section search.
pub fn golden_max<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, xtol: f64) -> (f64, f64) {
    let (mut a, mut b) = (a.min(b), a.max(b));
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > xtol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Global maximum over a uniform grid followed by a golden-section polish
/// within one grid step of the best node.
pub fn grid_golden_max<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, points: usize, xtol: f64) -> (f64, f64) {
    let points = points.max(3);
    let h = (b - a) / (points - 1) as f64;
    let mut best = (a, f(a));
    for i in 1..points {
        let x = a + i as f64 * h;
        let v = f(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    let lo = (best.0 - h).max(a);
    let hi = (best.0 + h).min(b);
    let polished = golden_max(&mut f, lo, hi, xtol);
    if polished.1 >= best.1 {
        polished
    } else {
        best
    }
}
