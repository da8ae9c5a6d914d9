//! The per-period pricing algorithm and full-trajectory simulation.
//!
//! Each firm carries two specifications of its opponent's behavior: a
//! constant-price model (estimated by recursive averaging) and a linear
//! reaction function (estimated by recursive least squares), plus a weight
//! `pi` on the reaction-function model updated from average forecast
//! profits. Within a period the order is fixed: intended prices from the
//! weighted recommendations, realized prices `p_i = b_i + eps_i`, belief
//! updates for both specifications (each firm regresses the opponent's
//! price on its own regressor price), per-specification profit tracking,
//! and finally the weight update.

use crate::market::{BeliefVector, MarketError, MarketParams};
use crate::rng::CounterRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LearnError {
    #[error("second-moment matrix singular beyond repair at period {period} (det = {det})")]
    SingularR { period: u64, det: f64 },
    #[error(transparent)]
    Market(#[from] MarketError),
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
}

/// Determinant threshold below which the regularizer kicks in.
const R_DET_EPS: f64 = 1e-10;
/// Ridge added to a near-singular second-moment matrix before inversion.
const R_RIDGE: f64 = 1e-8;

/// Symmetric 2x2 second-moment estimate of the regressor `[1, p]`. The
/// (1,1) entry is identically one (the constant regressor), so only the
/// two time-varying entries are tracked.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondMoment {
    pub r12: f64,
    pub r22: f64,
}

impl SecondMoment {
    /// Limit value at a stationary point with best response `b`:
    /// `[[1, b], [b, b^2 + sigma2]]`.
    pub fn relaxed(b: f64, sigma2: f64) -> Self {
        Self { r12: b, r22: b * b + sigma2 }
    }

    pub fn det(&self) -> f64 {
        self.r22 - self.r12 * self.r12
    }

    /// Solve `R x = rhs`, adding a small ridge if R is near singular.
    /// Errors only if the ridge still leaves the system unsolvable.
    pub fn solve(&self, rhs: [f64; 2], period: u64) -> Result<[f64; 2], LearnError> {
        let mut r11 = 1.0;
        let mut r22 = self.r22;
        let mut det = self.det();
        if det.abs() < R_DET_EPS {
            r11 += R_RIDGE;
            r22 += R_RIDGE;
            det = r11 * r22 - self.r12 * self.r12;
            if det.abs() < f64::EPSILON {
                return Err(LearnError::SingularR { period, det });
            }
        }
        Ok([
            (r22 * rhs[0] - self.r12 * rhs[1]) / det,
            (-self.r12 * rhs[0] + r11 * rhs[1]) / det,
        ])
    }
}

/// One firm's algorithm state at the start of a period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirmState {
    /// Weight on the reaction-function specification, kept inside
    /// `[pi_lo, pi_hi]`.
    pub pi: f64,
    /// Constant-price belief (recursive mean of opponent prices).
    pub alpha0: f64,
    /// Reaction-function belief (intercept, slope).
    pub alpha1: BeliefVector,
    /// Second-moment estimate for the reaction-function regression.
    pub r: SecondMoment,
    /// Average forecast profit of the constant-price specification.
    pub pibar0: f64,
    /// Average forecast profit of the reaction-function specification.
    pub pibar1: f64,
}

impl FirmState {
    /// State at the Nash self-confirming equilibrium: beliefs at
    /// `(p^N, 0)`, second moments at their limit, profit trackers at the
    /// Nash profit, and the model weight at `pi0`.
    pub fn at_sce_nash(params: &MarketParams, pi0: f64) -> Self {
        let pn = params.nash_price();
        Self {
            pi: pi0,
            alpha0: pn,
            alpha1: BeliefVector::constant(pn),
            r: SecondMoment::relaxed(pn, params.sigma2),
            pibar0: params.nash_profit(),
            pibar1: params.nash_profit(),
        }
    }
}

/// Step-size sequence for the recursive updates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GainSchedule {
    /// Fixed gain; tracks drift, never averages it away.
    Constant { value: f64 },
    /// `1/(t + offset)`. With `offset = 0` the recursive updates are exact
    /// sample statistics, but the full-weight first step then discards the
    /// initialization and the giant early steps can throw the slope onto
    /// its cap, where the intercept feedback loop is explosive. A positive
    /// offset counts the initialization as that many pseudo-observations
    /// (the usual informative-prior form of recursive least squares) and
    /// leaves the asymptotics unchanged.
    Decreasing {
        #[serde(default)]
        offset: u64,
    },
}

impl GainSchedule {
    pub fn constant(value: f64) -> Self {
        GainSchedule::Constant { value }
    }

    /// Literal `1/t` schedule.
    pub fn decreasing() -> Self {
        GainSchedule::Decreasing { offset: 0 }
    }

    /// Gain applied in period `t >= 1`.
    pub fn value(&self, t: u64) -> f64 {
        match self {
            GainSchedule::Constant { value } => *value,
            GainSchedule::Decreasing { offset } => 1.0 / (t + offset) as f64,
        }
    }

    pub fn validate(&self) -> Result<(), LearnError> {
        if let GainSchedule::Constant { value } = self {
            if !(*value > 0.0 && *value <= 1.0) {
                return Err(LearnError::InvalidConfig(format!(
                    "constant gain must lie in (0, 1], got {value}"
                )));
            }
        }
        Ok(())
    }
}

/// Which price each specification's forecast profit is judged against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ProfitEval {
    /// Each specification is scored on its own forecast of the opponent:
    /// the constant model against its estimated mean price, the reaction
    /// model against its predicted response to the counterfactual price.
    /// This is the evaluation consistent with each model's worldview and
    /// the default.
    #[default]
    Forecast,
    /// Both specifications are scored against the realized opponent price.
    Realized,
}

/// Specification choice of one firm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spec {
    M0,
    M1,
}

/// How prices are formed: the full model-averaging algorithm, or both firms
/// pinned to fixed specifications (the weight is clamped to 0 or 1 and not
/// updated).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpecMode {
    Averaging,
    Forced([Spec; 2]),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitCondition {
    /// Start at the Nash self-confirming equilibrium with weight 0.5.
    SceNash,
    Explicit([FirmState; 2]),
}

/// Full configuration of one simulation run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub params: MarketParams,
    pub gain: GainSchedule,
    pub horizon: u64,
    pub seed: u64,
    pub pi_lo: f64,
    pub pi_hi: f64,
    /// Lower clamp on the estimated reaction slope.
    pub alpha1_min: f64,
    /// The slope is clamped to `B/C - alpha1_margin` from above so the best
    /// response stays bounded.
    pub alpha1_margin: f64,
    pub profit_eval: ProfitEval,
    pub mode: SpecMode,
    pub init: InitCondition,
}

impl SimConfig {
    pub fn new(params: MarketParams, gain: GainSchedule, horizon: u64, seed: u64) -> Self {
        Self {
            params,
            gain,
            horizon,
            seed,
            pi_lo: 0.01,
            pi_hi: 0.99,
            alpha1_min: -2.0,
            alpha1_margin: 0.05,
            profit_eval: ProfitEval::default(),
            mode: SpecMode::Averaging,
            init: InitCondition::SceNash,
        }
    }

    /// Baseline run: default market, constant gain 0.01, 10^4 periods.
    pub fn baseline(seed: u64) -> Self {
        Self::new(MarketParams::baseline(), GainSchedule::constant(0.01), 10_000, seed)
    }

    pub fn validate(&self) -> Result<(), LearnError> {
        self.params.validate()?;
        self.gain.validate()?;
        if self.horizon < 1 {
            return Err(LearnError::InvalidConfig("horizon must be >= 1".into()));
        }
        if !(0.0 < self.pi_lo && self.pi_lo <= self.pi_hi && self.pi_hi < 1.0) {
            return Err(LearnError::InvalidConfig(format!(
                "need 0 < pi_lo <= pi_hi < 1, got [{}, {}]",
                self.pi_lo, self.pi_hi
            )));
        }
        if self.alpha1_margin <= 0.0 {
            return Err(LearnError::InvalidConfig("alpha1_margin must be > 0".into()));
        }
        Ok(())
    }

    pub fn slope_cap(&self) -> f64 {
        self.params.slope_bound() - self.alpha1_margin
    }

    fn initial_states(&self) -> [FirmState; 2] {
        let mut states = match self.init {
            InitCondition::SceNash => [FirmState::at_sce_nash(&self.params, 0.5); 2],
            InitCondition::Explicit(s) => s,
        };
        if let SpecMode::Forced(specs) = self.mode {
            for (st, spec) in states.iter_mut().zip(specs) {
                st.pi = match spec {
                    Spec::M0 => 0.0,
                    Spec::M1 => 1.0,
                };
            }
        } else {
            for st in &mut states {
                st.pi = st.pi.clamp(self.pi_lo, self.pi_hi);
            }
        }
        states
    }
}

/// Everything observable about one period, recorded after the updates.
#[derive(Debug, Clone, Copy)]
pub struct PeriodRecord {
    /// Realized prices `b + eps`.
    pub p: [f64; 2],
    /// Intended prices (weighted recommendations, before the shock).
    pub b: [f64; 2],
    pub eps: [f64; 2],
    /// Per-specification forecast profits of the period.
    pub prof0: [f64; 2],
    pub prof1: [f64; 2],
    pub states: [FirmState; 2],
}

/// Column-oriented record of a full run.
#[derive(Debug, Clone, Default)]
pub struct SimTrajectory {
    pub p: [Vec<f64>; 2],
    pub b: [Vec<f64>; 2],
    pub eps: [Vec<f64>; 2],
    pub pi: [Vec<f64>; 2],
    pub alpha0: [Vec<f64>; 2],
    pub alpha1_intercept: [Vec<f64>; 2],
    pub alpha1_slope: [Vec<f64>; 2],
    pub r12: [Vec<f64>; 2],
    pub r22: [Vec<f64>; 2],
    pub pibar0: [Vec<f64>; 2],
    pub pibar1: [Vec<f64>; 2],
    pub prof0: [Vec<f64>; 2],
    pub prof1: [Vec<f64>; 2],
}

impl SimTrajectory {
    fn with_capacity(n: usize) -> Self {
        let col = || [Vec::with_capacity(n), Vec::with_capacity(n)];
        Self {
            p: col(),
            b: col(),
            eps: col(),
            pi: col(),
            alpha0: col(),
            alpha1_intercept: col(),
            alpha1_slope: col(),
            r12: col(),
            r22: col(),
            pibar0: col(),
            pibar1: col(),
            prof0: col(),
            prof1: col(),
        }
    }

    fn push(&mut self, rec: &PeriodRecord) {
        for i in 0..2 {
            self.p[i].push(rec.p[i]);
            self.b[i].push(rec.b[i]);
            self.eps[i].push(rec.eps[i]);
            self.pi[i].push(rec.states[i].pi);
            self.alpha0[i].push(rec.states[i].alpha0);
            self.alpha1_intercept[i].push(rec.states[i].alpha1.alpha0);
            self.alpha1_slope[i].push(rec.states[i].alpha1.alpha1);
            self.r12[i].push(rec.states[i].r.r12);
            self.r22[i].push(rec.states[i].r.r22);
            self.pibar0[i].push(rec.states[i].pibar0);
            self.pibar1[i].push(rec.states[i].pibar1);
            self.prof0[i].push(rec.prof0[i]);
            self.prof1[i].push(rec.prof1[i]);
        }
    }

    pub fn len(&self) -> usize {
        self.p[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Time-average realized profit of firm `i`.
    pub fn mean_realized_profit(&self, params: &MarketParams, i: usize) -> f64 {
        let j = 1 - i;
        let n = self.len() as f64;
        self.p[i]
            .iter()
            .zip(&self.p[j])
            .map(|(&pi, &pj)| params.profit(pi, pj))
            .sum::<f64>()
            / n
    }
}

/// Weighted recommendation `(1 - pi) b0 + pi b1` given the current state.
pub fn intended_price(state: &FirmState, params: &MarketParams) -> Result<f64, MarketError> {
    let b0 = params.best_response(BeliefVector::constant(state.alpha0))?;
    let b1 = params.best_response(state.alpha1)?;
    Ok((1.0 - state.pi) * b0 + state.pi * b1)
}

/// Recursive mean update of the constant-price belief.
pub fn update_m0(alpha0: f64, p_opponent: f64, gain: f64) -> f64 {
    alpha0 + gain * (p_opponent - alpha0)
}

/// One recursive least squares step for the reaction-function belief.
///
/// The second-moment matrix is relaxed toward the regressor outer product
/// first and the updated matrix scales the coefficient step; with a `1/t`
/// gain this makes the recursion reproduce batch least squares exactly.
/// The forecast error uses the pre-update coefficients.
pub fn update_m1(
    alpha1: BeliefVector,
    r: SecondMoment,
    regressor_price: f64,
    p_opponent: f64,
    gain: f64,
    period: u64,
) -> Result<(BeliefVector, SecondMoment), LearnError> {
    let x = regressor_price;
    let r_new = SecondMoment {
        r12: r.r12 + gain * (x - r.r12),
        r22: r.r22 + gain * (x * x - r.r22),
    };
    let fe = p_opponent - alpha1.alpha0 - alpha1.alpha1 * x;
    let dir = r_new.solve([fe, x * fe], period)?;
    Ok((
        BeliefVector::new(alpha1.alpha0 + gain * dir[0], alpha1.alpha1 + gain * dir[1]),
        r_new,
    ))
}

/// Per-specification profits with both counterfactual prices evaluated
/// against the realized opponent price. The firm's own exploration shock is
/// shared across the two counterfactual prices `p^k = b^k + eps`.
pub fn counterfactual_profits(
    params: &MarketParams,
    b0: f64,
    b1: f64,
    eps_own: f64,
    p_opponent: f64,
) -> (f64, f64) {
    let p0 = b0 + eps_own;
    let p1 = b1 + eps_own;
    (params.profit(p0, p_opponent), params.profit(p1, p_opponent))
}

/// Per-specification forecast profits, each model judging its own
/// recommendation under its own view of the opponent: the constant model
/// forecasts the opponent at its estimated mean, the reaction model
/// forecasts the response `alpha0 + alpha1 * p^1` to its counterfactual
/// price.
pub fn forecast_profits(
    params: &MarketParams,
    state: &FirmState,
    b0: f64,
    b1: f64,
    eps_own: f64,
) -> (f64, f64) {
    let p0 = b0 + eps_own;
    let p1 = b1 + eps_own;
    let f0 = state.alpha0;
    let f1 = state.alpha1.alpha0 + state.alpha1.alpha1 * p1;
    (params.profit(p0, f0), params.profit(p1, f1))
}

/// Relax the average-profit trackers and move the model weight toward the
/// indicator of which tracker is larger (strict: ties count against the
/// reaction model). Returns the updated `(pibar0, pibar1, pi)`.
pub fn update_weights(
    state: &FirmState,
    prof0: f64,
    prof1: f64,
    gain: f64,
    pi_lo: f64,
    pi_hi: f64,
) -> (f64, f64, f64) {
    let pibar0 = state.pibar0 + gain * (prof0 - state.pibar0);
    let pibar1 = state.pibar1 + gain * (prof1 - state.pibar1);
    let indicator = if pibar1 > pibar0 { 1.0 } else { 0.0 };
    let pi = (state.pi + gain * (indicator - state.pi)).clamp(pi_lo, pi_hi);
    (pibar0, pibar1, pi)
}

/// Advance both firms one period. Deterministic given the shocks.
pub fn step(
    states: &[FirmState; 2],
    cfg: &SimConfig,
    gain: f64,
    shocks: [f64; 2],
    period: u64,
) -> Result<([FirmState; 2], PeriodRecord), LearnError> {
    let params = &cfg.params;
    let slope_cap = cfg.slope_cap();
    let mut b0 = [0.0; 2];
    let mut b1 = [0.0; 2];
    let mut b = [0.0; 2];
    for i in 0..2 {
        b0[i] = params.best_response(BeliefVector::constant(states[i].alpha0))?;
        // The stored slope is already clamped below the bound; clamp again
        // defensively in case of explicit inits near the edge.
        let belief = BeliefVector::new(
            states[i].alpha1.alpha0,
            states[i].alpha1.alpha1.min(slope_cap),
        );
        b1[i] = params.best_response(belief)?;
        b[i] = match cfg.mode {
            SpecMode::Averaging => (1.0 - states[i].pi) * b0[i] + states[i].pi * b1[i],
            SpecMode::Forced(specs) => match specs[i] {
                Spec::M0 => b0[i],
                Spec::M1 => b1[i],
            },
        };
    }
    let p = [b[0] + shocks[0], b[1] + shocks[1]];

    let mut next = *states;
    let mut prof0 = [0.0; 2];
    let mut prof1 = [0.0; 2];
    for i in 0..2 {
        let j = 1 - i;
        next[i].alpha0 = update_m0(states[i].alpha0, p[j], gain);
        // Reaction-function regressor: the specification's own price had it
        // been followed, including the firm's exploration shock.
        let regressor = b1[i] + shocks[i];
        let (mut belief, r) =
            update_m1(states[i].alpha1, states[i].r, regressor, p[j], gain, period)?;
        belief.alpha1 = belief.alpha1.clamp(cfg.alpha1_min, slope_cap);
        next[i].alpha1 = belief;
        next[i].r = r;

        let (f0, f1) = match cfg.profit_eval {
            ProfitEval::Forecast => forecast_profits(params, &states[i], b0[i], b1[i], shocks[i]),
            ProfitEval::Realized => counterfactual_profits(params, b0[i], b1[i], shocks[i], p[j]),
        };
        prof0[i] = f0;
        prof1[i] = f1;
        match cfg.mode {
            SpecMode::Averaging => {
                let (pb0, pb1, pi) =
                    update_weights(&states[i], f0, f1, gain, cfg.pi_lo, cfg.pi_hi);
                next[i].pibar0 = pb0;
                next[i].pibar1 = pb1;
                next[i].pi = pi;
            }
            SpecMode::Forced(_) => {
                // Profit trackers still relax; the weight stays pinned.
                next[i].pibar0 = states[i].pibar0 + gain * (f0 - states[i].pibar0);
                next[i].pibar1 = states[i].pibar1 + gain * (f1 - states[i].pibar1);
            }
        }
    }
    let rec = PeriodRecord { p, b, eps: shocks, prof0, prof1, states: next };
    Ok((next, rec))
}

/// Run a full simulation with shocks drawn from the counter RNG. Identical
/// `(seed, config)` give bit-identical trajectories.
pub fn simulate(cfg: &SimConfig) -> Result<SimTrajectory, LearnError> {
    cfg.validate()?;
    let rng = CounterRng::new(cfg.seed);
    let sd = cfg.params.sigma2.sqrt();
    simulate_with(cfg, |firm, t| rng.shock(firm, t, sd))
}

/// Simulation with an arbitrary shock source; the deterministic core of
/// [`simulate`], also used to exercise symmetry and noise-free behavior.
pub fn simulate_with(
    cfg: &SimConfig,
    shock: impl Fn(usize, u64) -> f64,
) -> Result<SimTrajectory, LearnError> {
    cfg.validate()?;
    let mut states = cfg.initial_states();
    let mut traj = SimTrajectory::with_capacity(cfg.horizon as usize);
    for t in 1..=cfg.horizon {
        let gain = cfg.gain.value(t);
        let shocks = [shock(0, t), shock(1, t)];
        let (next, rec) = step(&states, cfg, gain, shocks, t)?;
        traj.push(&rec);
        states = next;
    }
    Ok(traj)
}

/// A detected excursion of both intended prices above the collusive band.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Episode {
    /// First period (0-based index into the trajectory) inside the band.
    pub start: usize,
    /// Period of the maximal joint intended price.
    pub peak: usize,
    /// First period after `start` at which both intended prices have fallen
    /// below the release threshold, or the last period if still open.
    pub end: usize,
}

/// Hysteresis detection of collusive episodes on intended prices. An
/// episode opens when both intended prices exceed
/// `p^N + hi_frac (p^C - p^N)` and closes when both fall below
/// `p^N + lo_frac (p^C - p^N)`.
pub fn detect_episodes(
    b1: &[f64],
    b2: &[f64],
    params: &MarketParams,
    hi_frac: f64,
    lo_frac: f64,
) -> Vec<Episode> {
    assert_eq!(b1.len(), b2.len());
    assert!(
        0.0 < lo_frac && lo_frac < hi_frac && hi_frac < 1.0,
        "need 0 < lo_frac < hi_frac < 1"
    );
    let pn = params.nash_price();
    let span = params.cartel_price() - pn;
    let hi = pn + hi_frac * span;
    let lo = pn + lo_frac * span;
    let mut episodes = Vec::new();
    let mut open: Option<(usize, usize, f64)> = None; // (start, peak, peak value)
    for t in 0..b1.len() {
        let joint = b1[t].min(b2[t]);
        match open {
            None => {
                if b1[t] > hi && b2[t] > hi {
                    open = Some((t, t, joint));
                }
            }
            Some((start, peak, peak_val)) => {
                if joint > peak_val {
                    open = Some((start, t, joint));
                } else if b1[t] < lo && b2[t] < lo {
                    episodes.push(Episode { start, peak, end: t });
                    open = None;
                } else {
                    open = Some((start, peak, peak_val));
                }
            }
        }
    }
    if let Some((start, peak, _)) = open {
        episodes.push(Episode { start, peak, end: b1.len() - 1 });
    }
    episodes
}

/// Average profits of one cell of the specification game.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct PayoffCell {
    /// Mean over seeds of the time-average realized profit, per firm.
    pub mean: [f64; 2],
    /// Standard error over seeds.
    pub se: [f64; 2],
}

/// Time-average realized profits when both firms are pinned to each pure
/// specification pair. Rows index firm 1's specification (M0 then M1),
/// columns firm 2's. Runs fan out over seeds in parallel; the reduction
/// is order-independent by summation over a fixed seed order.
pub fn payoff_matrix_experiment(
    params: &MarketParams,
    gain: GainSchedule,
    horizon: u64,
    seeds: &[u64],
) -> Result<[[PayoffCell; 2]; 2], LearnError> {
    assert!(!seeds.is_empty(), "need at least one seed");
    let specs = [Spec::M0, Spec::M1];
    let mut out = [[PayoffCell::default(); 2]; 2];
    for (k, s1) in specs.iter().enumerate() {
        for (l, s2) in specs.iter().enumerate() {
            let profits: Vec<[f64; 2]> = seeds
                .par_iter()
                .map(|&seed| {
                    let mut cfg = SimConfig::new(*params, gain, horizon, seed);
                    cfg.mode = SpecMode::Forced([*s1, *s2]);
                    let traj = simulate(&cfg)?;
                    Ok([
                        traj.mean_realized_profit(params, 0),
                        traj.mean_realized_profit(params, 1),
                    ])
                })
                .collect::<Result<_, LearnError>>()?;
            let n = profits.len() as f64;
            for i in 0..2 {
                let mean = profits.iter().map(|p| p[i]).sum::<f64>() / n;
                let var = if profits.len() > 1 {
                    profits.iter().map(|p| (p[i] - mean).powi(2)).sum::<f64>() / (n - 1.0)
                } else {
                    0.0
                };
                out[k][l].mean[i] = mean;
                out[k][l].se[i] = (var / n).sqrt();
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> MarketParams {
        MarketParams::baseline()
    }

    #[test]
    fn intended_price_pure_and_mixed() {
        let m = base();
        let pn = m.nash_price();
        let mut st = FirmState::at_sce_nash(&m, 0.0);
        assert!((intended_price(&st, &m).unwrap() - pn).abs() < 1e-14);
        st.pi = 1.0;
        st.alpha1 = BeliefVector::new(0.0, 1.0);
        assert!((intended_price(&st, &m).unwrap() - m.cartel_price()).abs() < 1e-12);
        // Coinciding recommendations are invariant to the weight.
        st.pi = 0.5;
        st.alpha1 = BeliefVector::constant(pn);
        st.alpha0 = pn;
        assert!((intended_price(&st, &m).unwrap() - pn).abs() < 1e-14);
    }

    #[test]
    fn update_m0_basics() {
        assert_eq!(update_m0(0.7, 0.7, 0.3), 0.7);
        assert!((update_m0(0.7, 0.8, 0.01) - 0.701).abs() < 1e-15);
    }

    #[test]
    fn update_m0_decreasing_gain_is_sample_mean() {
        let rng = CounterRng::new(5);
        let xs: Vec<f64> = (0..200).map(|i| rng.normal_at(1, i)).collect();
        let mut a = 123.0; // initial value is forgotten at t = 1
        for (i, &x) in xs.iter().enumerate() {
            a = update_m0(a, x, 1.0 / (i as f64 + 1.0));
        }
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!((a - mean).abs() < 1e-12);
    }

    #[test]
    fn update_m1_zero_error_moves_only_r() {
        let alpha = BeliefVector::new(0.2, 0.3);
        let r = SecondMoment::relaxed(0.9, 0.01);
        let x = 1.1;
        let y = alpha.alpha0 + alpha.alpha1 * x; // zero forecast error
        let (a2, r2) = update_m1(alpha, r, x, y, 0.05, 1).unwrap();
        assert_eq!(a2, alpha);
        assert!(r2 != r);
    }

    #[test]
    fn update_weights_arithmetic_and_clamps() {
        let m = base();
        let mut st = FirmState::at_sce_nash(&m, 0.5);
        st.pibar0 = 0.0;
        st.pibar1 = 0.0;
        let (_, _, pi) = update_weights(&st, 0.1, 0.2, 0.01, 0.01, 0.99);
        assert!((pi - 0.505).abs() < 1e-15);
        // Clamp at the ceiling.
        st.pi = 0.99;
        let (_, _, pi) = update_weights(&st, 0.1, 0.2, 0.5, 0.01, 0.99);
        assert_eq!(pi, 0.99);
        // Ties are strict: indicator 0, pi decreases.
        st.pi = 0.5;
        let (_, _, pi) = update_weights(&st, 0.2, 0.2, 0.01, 0.01, 0.99);
        assert!(pi < 0.5);
    }

    #[test]
    fn pi_step_is_exact_gain_fraction() {
        let m = base();
        let mut st = FirmState::at_sce_nash(&m, 0.37);
        st.pibar0 = 0.0;
        st.pibar1 = 1.0;
        let gain = 0.02;
        let (_, _, pi) = update_weights(&st, 0.0, 1.0, gain, 0.01, 0.99);
        assert!((pi - st.pi - gain * (1.0 - st.pi)).abs() < 1e-15);
    }

    #[test]
    fn counterfactual_profit_values() {
        let m = base();
        let pn = m.nash_price();
        let (p0, p1) = counterfactual_profits(&m, pn, pn, 0.0, pn);
        assert!((p0 - 0.5917159763313609).abs() < 1e-12);
        assert_eq!(p0, p1);
        let pc = m.cartel_price();
        let (_, p1) = counterfactual_profits(&m, pn, pc, 0.0, pc);
        assert!((p1 - 0.8333333333333333).abs() < 1e-12);
    }

    #[test]
    fn noiseless_run_stays_at_nash() {
        let mut params = base();
        params.sigma2 = 0.0;
        let cfg = SimConfig::new(params, GainSchedule::constant(0.01), 500, 1);
        let traj = simulate(&cfg).unwrap();
        let pn = params.nash_price();
        for t in 0..traj.len() {
            for i in 0..2 {
                assert!((traj.p[i][t] - pn).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn stationary_step_fixes_beliefs() {
        let m = base();
        let cfg = SimConfig::new(m, GainSchedule::constant(0.02), 10, 1);
        let states = [FirmState::at_sce_nash(&m, 0.5); 2];
        let (next, rec) = step(&states, &cfg, 0.02, [0.0, 0.0], 1).unwrap();
        let pn = m.nash_price();
        assert!((rec.p[0] - pn).abs() < 1e-13 && (rec.p[1] - pn).abs() < 1e-13);
        for i in 0..2 {
            assert!((next[i].alpha0 - pn).abs() < 1e-13);
            assert!((next[i].alpha1.alpha0 - pn).abs() < 1e-13);
            assert!(next[i].alpha1.alpha1.abs() < 1e-13);
        }
    }

    #[test]
    fn symmetric_shocks_keep_states_symmetric() {
        let m = base();
        let cfg = SimConfig::new(m, GainSchedule::constant(0.01), 300, 1);
        let rng = CounterRng::new(11);
        let traj = simulate_with(&cfg, |_, t| rng.shock(0, t, 0.05)).unwrap();
        let t = traj.len() - 1;
        assert_eq!(traj.alpha0[0][t], traj.alpha0[1][t]);
        assert_eq!(traj.alpha1_slope[0][t], traj.alpha1_slope[1][t]);
        assert_eq!(traj.pi[0][t], traj.pi[1][t]);
    }

    #[test]
    fn single_shared_shock_step_raises_both_slopes_equally() {
        // One step from the Nash point with equal positive shocks: both
        // firms see the same two-point regression and raise their slope
        // estimates by the same amount. Oracle: the regression update is
        // gain * R^{-1} x * (forecast error) computed by hand.
        let m = base();
        let cfg = SimConfig::new(m, GainSchedule::constant(0.01), 1, 1);
        let states = [FirmState::at_sce_nash(&m, 0.5); 2];
        let e = 0.05;
        let (next, _) = step(&states, &cfg, 0.01, [e, e], 1).unwrap();
        assert!((next[0].alpha1.alpha1 - next[1].alpha1.alpha1).abs() < 1e-15);
        assert!(next[0].alpha1.alpha1 > 0.0);

        let pn = m.nash_price();
        let x = pn + e;
        let mut r = SecondMoment::relaxed(pn, m.sigma2);
        r = SecondMoment {
            r12: r.r12 + 0.01 * (x - r.r12),
            r22: r.r22 + 0.01 * (x * x - r.r22),
        };
        let fe = (pn + e) - pn; // opponent price minus forecast at slope 0
        let dir = r.solve([fe, x * fe], 1).unwrap();
        assert!((next[0].alpha1.alpha1 - 0.01 * dir[1]).abs() < 1e-12);
    }

    #[test]
    fn determinism_bitwise() {
        let cfg = SimConfig::baseline(424242);
        let a = simulate(&cfg).unwrap();
        let b = simulate(&cfg).unwrap();
        assert_eq!(a.p[0], b.p[0]);
        assert_eq!(a.pi[1], b.pi[1]);
        assert_eq!(a.r22[0], b.r22[0]);
    }

    #[test]
    fn firm_swap_symmetry() {
        // Swapping firm indices and shock streams swaps the trajectories.
        let m = base();
        let cfg = SimConfig::new(m, GainSchedule::constant(0.01), 400, 3);
        let rng = CounterRng::new(77);
        let fwd = simulate_with(&cfg, |firm, t| rng.shock(firm, t, 0.05)).unwrap();
        let swp = simulate_with(&cfg, |firm, t| rng.shock(1 - firm, t, 0.05)).unwrap();
        assert_eq!(fwd.p[0], swp.p[1]);
        assert_eq!(fwd.p[1], swp.p[0]);
        assert_eq!(fwd.alpha1_slope[0], swp.alpha1_slope[1]);
    }

    #[test]
    fn episode_detection_square_wave() {
        let m = base();
        let pn = m.nash_price();
        let pc = m.cartel_price();
        let flat = vec![pn; 50];
        assert!(detect_episodes(&flat, &flat, &m, 0.5, 0.25).is_empty());

        // Two rectangular excursions above the high threshold.
        let mut wave = vec![pn; 100];
        for t in 10..25 {
            wave[t] = pc;
        }
        for t in 60..80 {
            wave[t] = pc;
        }
        let eps = detect_episodes(&wave, &wave, &m, 0.5, 0.25);
        assert_eq!(eps.len(), 2);
        assert_eq!(eps[0].start, 10);
        assert!(eps[0].end >= 25);
    }

    #[test]
    fn forced_mode_keeps_weights_pinned() {
        let m = base();
        let mut cfg = SimConfig::new(m, GainSchedule::constant(0.01), 200, 9);
        cfg.mode = SpecMode::Forced([Spec::M1, Spec::M0]);
        let traj = simulate(&cfg).unwrap();
        assert!(traj.pi[0].iter().all(|&x| x == 1.0));
        assert!(traj.pi[1].iter().all(|&x| x == 0.0));
    }
}
