//! The six dominance-bound sequences and their round-by-round audit.

use serde::Serialize;

use crate::beliefs::History;
use crate::error::{Error, Result};
use crate::payoffs::{
    br_follower_from, br_leader, follower_fixed_point_residual, leader_payoff, overshoot_cdf, ExtReal, ModelKind,
    ModelParams,
};

/// Two thresholds count as equal for the uniqueness verdict within this gap.
pub const UNIQUE_TOL: f64 = 1e-6;
/// Slack allowed by the monotonicity audit for rounding in the root finders.
pub const AUDIT_SLACK: f64 = 1e-10;

/// One round of leader and follower dominance bounds. In the noisy-leader
/// model the `theta_*` fields hold bounds on the leader's signal x_L.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundsState {
    pub round: usize,
    pub theta_lo: ExtReal,
    pub theta_hi: ExtReal,
    pub x_e_lo: ExtReal,
    pub x_e_hi: ExtReal,
    pub x_n_lo: ExtReal,
    pub x_n_hi: ExtReal,
}

impl BoundsState {
    /// Round 0: nothing has been eliminated yet.
    pub fn initial() -> Self {
        BoundsState {
            round: 0,
            theta_lo: ExtReal::NegInf,
            theta_hi: ExtReal::PosInf,
            x_e_lo: ExtReal::NegInf,
            x_e_hi: ExtReal::PosInf,
            x_n_lo: ExtReal::NegInf,
            x_n_hi: ExtReal::PosInf,
        }
    }

    /// (lower, upper) pairs in the order leader, Effort, NoEffort.
    pub fn pairs(&self) -> [(ExtReal, ExtReal); 3] {
        [(self.theta_lo, self.theta_hi), (self.x_e_lo, self.x_e_hi), (self.x_n_lo, self.x_n_hi)]
    }

    pub fn components(&self) -> [ExtReal; 6] {
        [self.theta_lo, self.theta_hi, self.x_e_lo, self.x_e_hi, self.x_n_lo, self.x_n_hi]
    }

    pub const NAMES: [&'static str; 6] = ["theta_lo", "theta_hi", "x_e_lo", "x_e_hi", "x_n_lo", "x_n_hi"];

    /// Every paired lower and upper bound coincides within `tol`.
    pub fn is_unique(&self, tol: f64) -> bool {
        self.pairs().iter().all(|&(lo, hi)| same(lo, hi, tol))
    }

    /// θ̄_L, x̄_E and x̲_N, the three bounds the main results are stated in.
    pub fn headline(&self) -> (ExtReal, ExtReal, ExtReal) {
        (self.theta_hi, self.x_e_hi, self.x_n_lo)
    }
}

/// Equal infinities, or finite values within `tol`.
pub fn same(a: ExtReal, b: ExtReal, tol: f64) -> bool {
    match (a, b) {
        (ExtReal::Finite(x), ExtReal::Finite(y)) => (x - y).abs() <= tol,
        (x, y) => x == y,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveOptions {
    pub max_rounds: usize,
    /// Convergence threshold on the per-round movement of every finite bound.
    pub tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { max_rounds: 500, tol: 1e-9 }
    }
}

impl SolveOptions {
    pub fn new(max_rounds: usize, tol: f64) -> Result<Self> {
        if max_rounds < 2 {
            return Err(Error::invalid(format!("max_rounds must be at least 2, got {max_rounds}")));
        }
        if !(tol.is_finite() && tol > 0.0) {
            return Err(Error::invalid(format!("tol must be positive, got {tol}")));
        }
        Ok(SolveOptions { max_rounds, tol })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Residual {
    pub equation: &'static str,
    pub value: f64,
}

/// ι_E^k and ι_N^k: the σ_F levels at or above which round k sends x̄_E to −∞
/// and x̲_N to +∞ under log-concave noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IotaRound {
    pub round: usize,
    pub iota_e: f64,
    pub iota_n: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub model: ModelKind,
    pub params: ModelParams,
    pub limits: BoundsState,
    pub unique: bool,
    pub converged: bool,
    pub rounds_used: usize,
    pub trace: Vec<BoundsState>,
    pub residuals: Vec<Residual>,
    /// Log-concave runs only.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub iota: Vec<IotaRound>,
    /// First round k with max ι^k ≤ σ_F < min ι^{k−1}.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sandwich_round: Option<usize>,
}

impl SolveReport {
    pub fn theta_bar(&self) -> ExtReal {
        self.limits.theta_hi
    }

    pub fn x_e_bar(&self) -> ExtReal {
        self.limits.x_e_hi
    }

    pub fn x_n_lo(&self) -> ExtReal {
        self.limits.x_n_lo
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().map(|r| r.value.abs()).fold(0.0, f64::max)
    }

    /// First round whose bounds already coincide, if any.
    pub fn collapse_round(&self) -> Option<usize> {
        self.trace.iter().find(|s| s.round > 0 && s.is_unique(0.0)).map(|s| s.round)
    }
}

fn guess(x: ExtReal) -> Option<f64> {
    x.finite()
}

// One application of the recursion; leader bounds first, then followers
// respond to the new leader bounds and their own previous bounds.
fn step(prev: &BoundsState, params: &ModelParams) -> Result<BoundsState> {
    let theta_lo = br_leader(prev.x_e_lo, params)?;
    let theta_hi = br_leader(prev.x_e_hi, params)?;
    let br = |z: f64, xp: ExtReal, h: History| br_follower_from(z, xp, h, params, guess(xp));
    Ok(BoundsState {
        round: prev.round + 1,
        theta_lo: ExtReal::Finite(theta_lo),
        theta_hi: ExtReal::Finite(theta_hi),
        x_e_lo: br(theta_hi, prev.x_e_lo, History::Effort)?,
        x_e_hi: br(theta_lo, prev.x_e_hi, History::Effort)?,
        x_n_lo: br(theta_hi, prev.x_n_lo, History::NoEffort)?,
        x_n_hi: br(theta_lo, prev.x_n_hi, History::NoEffort)?,
    })
}

fn settled(prev: &BoundsState, next: &BoundsState, tol: f64) -> bool {
    prev.components().iter().zip(next.components().iter()).all(|(&a, &b)| same(a, b, tol))
}

/// Checks one round against its predecessor: lower bounds never fall, upper
/// bounds never rise, and lower never exceeds upper. For the perfectly
/// informed leader the one-sided bounds are also pinned: θ̲ = 0, x̲_E = −∞
/// and x̄_N = +∞ from round 1 on, and θ̄ < 1 from round 2 on.
pub fn audit_step(prev: &BoundsState, next: &BoundsState, kind: ModelKind) -> Result<()> {
    let fail = |message: String| Err(Error::Audit { round: next.round, message });
    let p = prev.components();
    let c = next.components();
    for i in 0..6 {
        let (a, b) = (p[i].to_f64(), c[i].to_f64());
        let moved_wrong = if i % 2 == 0 { b < a - slack(a) } else { b > a + slack(a) };
        if moved_wrong {
            let dir = if i % 2 == 0 { "decreased" } else { "increased" };
            return fail(format!("{} {dir} from {} to {}", BoundsState::NAMES[i], p[i], c[i]));
        }
    }
    for (k, (lo, hi)) in next.pairs().iter().enumerate() {
        if lo.to_f64() > hi.to_f64() + slack(hi.to_f64()) {
            return fail(format!(
                "{} = {lo} exceeds {} = {hi}",
                BoundsState::NAMES[2 * k],
                BoundsState::NAMES[2 * k + 1]
            ));
        }
    }
    if kind != ModelKind::Extension && next.round >= 1 {
        if next.theta_lo != ExtReal::Finite(0.0) {
            return fail(format!("theta_lo = {} instead of 0", next.theta_lo));
        }
        if next.x_e_lo != ExtReal::NegInf {
            return fail(format!("x_e_lo = {} instead of -inf", next.x_e_lo));
        }
        if next.x_n_hi != ExtReal::PosInf {
            return fail(format!("x_n_hi = {} instead of +inf", next.x_n_hi));
        }
        if next.round >= 2 && next.theta_hi.to_f64() >= 1.0 {
            return fail(format!("theta_hi = {} is not below 1", next.theta_hi));
        }
    }
    Ok(())
}

fn slack(x: f64) -> f64 {
    if x.is_finite() {
        AUDIT_SLACK * x.abs().max(1.0)
    } else {
        0.0
    }
}

/// Audits a whole trace, reporting the first offending round.
pub fn audit_trace(trace: &[BoundsState], kind: ModelKind) -> Result<()> {
    for w in trace.windows(2) {
        audit_step(&w[0], &w[1], kind)?;
    }
    Ok(())
}

/// Indifference residuals of the limit system at a converged state; rows
/// with an infinite threshold have no equation and are omitted.
pub fn limit_residuals(s: &BoundsState, params: &ModelParams) -> Vec<Residual> {
    let mut out = Vec::new();
    if let Some(t) = s.theta_lo.finite() {
        out.push(Residual { equation: "leader_lo", value: leader_payoff(t, s.x_e_lo, params) });
    }
    if let Some(t) = s.theta_hi.finite() {
        out.push(Residual { equation: "leader_hi", value: leader_payoff(t, s.x_e_hi, params) });
    }
    let rows = [
        ("follower_e_lo", s.x_e_lo, s.theta_hi, History::Effort),
        ("follower_e_hi", s.x_e_hi, s.theta_lo, History::Effort),
        ("follower_n_lo", s.x_n_lo, s.theta_hi, History::NoEffort),
        ("follower_n_hi", s.x_n_hi, s.theta_lo, History::NoEffort),
    ];
    for (name, x, z, h) in rows {
        if let (Some(x), Some(z)) = (x.finite(), z.finite()) {
            out.push(Residual { equation: name, value: follower_fixed_point_residual(x, z, h, params) });
        }
    }
    out
}

fn run(params: &ModelParams, opts: &SolveOptions) -> Result<SolveReport> {
    params.validate()?;
    let opts = SolveOptions::new(opts.max_rounds, opts.tol)?;
    let kind = params.kind();
    let mut state = BoundsState::initial();
    let mut trace = vec![state];
    let mut converged = false;
    for _ in 0..opts.max_rounds {
        let next = step(&state, params)?;
        audit_step(&state, &next, kind)?;
        trace.push(next);
        let done = next.round >= 2 && settled(&state, &next, opts.tol);
        state = next;
        if done {
            converged = true;
            break;
        }
    }
    log::debug!("{kind} solve: {} rounds, converged = {converged}", state.round);
    Ok(SolveReport {
        model: kind,
        params: *params,
        limits: state,
        unique: state.is_unique(UNIQUE_TOL),
        converged,
        rounds_used: state.round,
        residuals: limit_residuals(&state, params),
        trace,
        iota: Vec::new(),
        sandwich_round: None,
    })
}

/// Iterates the six bound sequences for the perfectly informed leader with
/// Gaussian noise until every finite bound moves less than `tol` in a round.
/// Running out of rounds returns the partial report with `converged = false`.
pub fn iterate_bounds_main(params: &ModelParams, opts: &SolveOptions) -> Result<SolveReport> {
    if params.kind() != ModelKind::Main {
        return Err(Error::invalid("iterate_bounds_main needs sigma_l = 0 and Gaussian noise"));
    }
    run(params, opts)
}

/// As [`iterate_bounds_main`] for a leader who observes θ with noise σ_L.
pub fn iterate_bounds_ext(params: &ModelParams, opts: &SolveOptions) -> Result<SolveReport> {
    if params.kind() != ModelKind::Extension {
        return Err(Error::invalid("iterate_bounds_ext needs sigma_l > 0"));
    }
    run(params, opts)
}

/// The recursion under Laplace or logistic noise, with the ι diagnostics.
pub fn iterate_bounds_logconcave(params: &ModelParams, opts: &SolveOptions) -> Result<SolveReport> {
    if params.sigma_l > 0.0 {
        return Err(Error::invalid("log-concave iteration needs sigma_l = 0"));
    }
    if params.family.eta() == 0.0 {
        return Err(Error::invalid("noise family has a zero tail ratio; use iterate_bounds_main for Gaussian noise"));
    }
    let mut report = run(params, opts)?;
    report.iota = iota_sequence(&report.trace, params)?;
    report.sandwich_round = sandwich_round(&report.iota, params.sigma_f);
    Ok(report)
}

/// Dispatches on the model kind.
pub fn iterate_bounds(params: &ModelParams, opts: &SolveOptions) -> Result<SolveReport> {
    match params.kind() {
        ModelKind::Main => iterate_bounds_main(params, opts),
        ModelKind::Extension => iterate_bounds_ext(params, opts),
        ModelKind::LogConcave => iterate_bounds_logconcave(params, opts),
    }
}

/// ι_E^k = (n−1)/(nη)·E[F(x̄_E^{k−1}/σ_F − S)] and
/// ι_N^k = (1/η)[θ̄^k − 1/n − (n−1)/n·E[F((x̲_N^{k−1} − θ̄^k)/σ_F + S)]].
pub fn iota_sequence(trace: &[BoundsState], params: &ModelParams) -> Result<Vec<IotaRound>> {
    let eta = params.family.eta();
    let sf = params.sigma_f;
    let w = params.weight();
    let n = params.n as f64;
    let mut out = Vec::new();
    for pair in trace.windows(2) {
        let (prev, cur) = (&pair[0], &pair[1]);
        let theta_bar = cur.theta_hi.to_f64();
        let iota_e = w / eta * overshoot_cdf(&params.family, prev.x_e_hi.to_f64() / sf, -1.0)?;
        let c = (prev.x_n_lo.to_f64() - theta_bar) / sf;
        let iota_n = (theta_bar - 1.0 / n - w * overshoot_cdf(&params.family, c, 1.0)?) / eta;
        out.push(IotaRound { round: cur.round, iota_e, iota_n });
    }
    Ok(out)
}

fn sandwich_round(iota: &[IotaRound], sigma_f: f64) -> Option<usize> {
    let mut prev_min = f64::INFINITY;
    for r in iota {
        if r.iota_e.max(r.iota_n) <= sigma_f && sigma_f < prev_min {
            return Some(r.round);
        }
        prev_min = r.iota_e.min(r.iota_n);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> SolveOptions {
        SolveOptions { max_rounds: 20_000, tol: 1e-10 }
    }

    #[test]
    fn round_one_state() {
        for p in [ModelParams::new(4, 0.3).unwrap(), ModelParams::new(2, 2.0).unwrap()] {
            let r = iterate_bounds_main(&p, &opts()).unwrap();
            let s1 = r.trace[1];
            assert_eq!(s1.theta_lo, ExtReal::Finite(0.0));
            assert_eq!(s1.theta_hi, ExtReal::Finite(1.0));
            assert_eq!(s1.x_e_lo, ExtReal::NegInf);
            assert_eq!(s1.x_n_hi, ExtReal::PosInf);
            // x̄_E¹ solves E[θ | E, z = 0] = (n−1)/n
            let x = s1.x_e_hi.finite().unwrap();
            let m = crate::beliefs::truncated_mean(x, 0.0, History::Effort, p.sigma_f);
            assert!((m - p.weight()).abs() < 1e-10);
            assert!(s1.x_n_lo.is_finite());
        }
    }

    #[test]
    fn large_noise_gives_the_imitation_profile() {
        let p = ModelParams::new(4, 1.0).unwrap();
        let r = iterate_bounds_main(&p, &opts()).unwrap();
        assert!(r.converged && r.unique);
        assert_eq!(r.theta_bar(), ExtReal::Finite(0.0));
        assert_eq!(r.x_e_bar(), ExtReal::NegInf);
        assert_eq!(r.x_n_lo(), ExtReal::PosInf);
        audit_trace(&r.trace, r.model).unwrap();
    }

    #[test]
    fn small_noise_leaves_multiplicity() {
        let p = ModelParams::new(4, 0.05).unwrap();
        let r = iterate_bounds_main(&p, &opts()).unwrap();
        assert!(r.converged && !r.unique);
        let tb = r.theta_bar().finite().unwrap();
        // above 3/8: θ̄ ≈ x̄_E − σ_F Φ⁻¹(θ̄) with x̄_E ≈ 3/8
        assert!(tb > 0.375 && tb < 0.4, "{tb}");
        assert!(r.max_residual() < 1e-7, "{:?}", r.residuals);
    }

    #[test]
    fn audit_flags_wrong_direction() {
        let mut a = BoundsState::initial();
        a.round = 3;
        a.theta_lo = ExtReal::Finite(0.0);
        a.theta_hi = ExtReal::Finite(0.3);
        a.x_e_hi = ExtReal::Finite(0.2);
        a.x_n_lo = ExtReal::Finite(1.0);
        let mut b = a;
        b.round = 4;
        b.theta_hi = ExtReal::Finite(0.31);
        assert!(matches!(audit_step(&a, &b, ModelKind::Main), Err(Error::Audit { round: 4, .. })));
        b.theta_hi = ExtReal::Finite(0.29);
        audit_step(&a, &b, ModelKind::Main).unwrap();
        b.x_n_lo = ExtReal::Finite(0.9);
        assert!(audit_step(&a, &b, ModelKind::Main).is_err());
    }

    #[test]
    fn out_of_rounds_is_flagged() {
        let p = ModelParams::new(4, 0.05).unwrap();
        let r = iterate_bounds_main(&p, &SolveOptions { max_rounds: 3, tol: 1e-9 }).unwrap();
        assert!(!r.converged);
        assert_eq!(r.rounds_used, 3);
        assert!(SolveOptions::new(1, 1e-9).is_err());
    }

    #[test]
    fn kinds_are_enforced() {
        let ext = ModelParams::extension(4, 1.0, 1.0).unwrap();
        assert!(iterate_bounds_main(&ext, &opts()).is_err());
        assert!(iterate_bounds_logconcave(&ModelParams::new(4, 1.0).unwrap(), &opts()).is_err());
    }
}
