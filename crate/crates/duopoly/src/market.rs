//! Static market algebra for a differentiated-goods Bertrand duopoly.
//!
//! Demand for firm i is `q_i = A - B*p_i + C*p_j` with `A, B, C > 0` and
//! `B - C > 0`. Two benchmark symmetric outcomes anchor everything else:
//! the Nash price `p^N = A / (2B - C)` (fixed point of the static best
//! response) and the cartel price `p^C = A / (2(B - C))` (joint profit
//! maximizer). Firms hold linear beliefs about the opponent's reaction,
//! `p_j = alpha0 + alpha1 * p_i`; the best response to such a belief is
//! `b(alpha) = (A + C*alpha0) / (2(B - C*alpha1))`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MarketError {
    #[error("invalid market parameters: {0}")]
    InvalidParams(String),
    /// The belief slope makes the best-response denominator non-positive.
    #[error("degenerate belief: B - C*alpha1 = {denom} <= 0")]
    DegenerateBelief { denom: f64 },
}

/// Demand primitives and the exploration-shock variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketParams {
    /// Demand intercept A > 0.
    pub a: f64,
    /// Own-price slope B > 0.
    pub b: f64,
    /// Cross-price slope C > 0; goods are strategic complements.
    pub c: f64,
    /// Variance of the i.i.d. Gaussian price-exploration shock.
    pub sigma2: f64,
}

impl MarketParams {
    pub fn new(a: f64, b: f64, c: f64, sigma2: f64) -> Result<Self, MarketError> {
        let p = Self { a, b, c, sigma2 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), MarketError> {
        if !(self.a > 0.0 && self.b > 0.0 && self.c > 0.0) {
            return Err(MarketError::InvalidParams(format!(
                "need A, B, C > 0, got A={}, B={}, C={}",
                self.a, self.b, self.c
            )));
        }
        if self.b - self.c <= 0.0 {
            return Err(MarketError::InvalidParams(format!(
                "need B - C > 0 for well-defined Nash and cartel outcomes, got {}",
                self.b - self.c
            )));
        }
        if !(self.sigma2 >= 0.0) {
            return Err(MarketError::InvalidParams(format!(
                "need sigma2 >= 0, got {}",
                self.sigma2
            )));
        }
        Ok(())
    }

    /// Baseline calibration used throughout: A=1, B=1, C=0.7, sigma2=0.0025.
    pub fn baseline() -> Self {
        Self { a: 1.0, b: 1.0, c: 0.7, sigma2: 0.0025 }
    }

    /// Demand `A - B*p_own + C*p_other`. Not truncated at zero: every
    /// closed form downstream relies on the linear law holding everywhere.
    pub fn demand(&self, p_own: f64, p_other: f64) -> f64 {
        self.a - self.b * p_own + self.c * p_other
    }

    /// One-period profit `p_own * demand(p_own, p_other)`.
    pub fn profit(&self, p_own: f64, p_other: f64) -> f64 {
        p_own * self.demand(p_own, p_other)
    }

    /// Static Nash equilibrium price `A / (2B - C)`, the unique fixed point
    /// of `p -> best_response((p, 0))`.
    pub fn nash_price(&self) -> f64 {
        self.a / (2.0 * self.b - self.c)
    }

    /// Joint-profit-maximizing symmetric price `A / (2(B - C))`.
    pub fn cartel_price(&self) -> f64 {
        self.a / (2.0 * (self.b - self.c))
    }

    /// Profit of one firm at the symmetric Nash outcome.
    pub fn nash_profit(&self) -> f64 {
        let p = self.nash_price();
        self.profit(p, p)
    }

    /// Profit of one firm at the symmetric cartel outcome.
    pub fn cartel_profit(&self) -> f64 {
        let p = self.cartel_price();
        self.profit(p, p)
    }

    /// Myopic best response to the belief `p_j = alpha0 + alpha1 * p_i`:
    /// `(A + C*alpha0) / (2(B - C*alpha1))`.
    pub fn best_response(&self, belief: BeliefVector) -> Result<f64, MarketError> {
        let denom = self.b - self.c * belief.alpha1;
        if denom <= 0.0 {
            return Err(MarketError::DegenerateBelief { denom });
        }
        Ok((self.a + self.c * belief.alpha0) / (2.0 * denom))
    }

    /// Largest admissible belief slope before the best response blows up.
    pub fn slope_bound(&self) -> f64 {
        self.b / self.c
    }
}

/// Perceived linear reaction function `p_j = alpha0 + alpha1 * p_i`.
/// A constant-price belief is the special case `alpha1 = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeliefVector {
    pub alpha0: f64,
    pub alpha1: f64,
}

impl BeliefVector {
    pub fn new(alpha0: f64, alpha1: f64) -> Self {
        Self { alpha0, alpha1 }
    }

    /// Constant-price belief (zero slope).
    pub fn constant(alpha0: f64) -> Self {
        Self { alpha0, alpha1: 0.0 }
    }
}

/// A pair of beliefs and prices satisfying the four fixed-point conditions:
/// each firm's forecast is correct at the equilibrium prices and each price
/// is a best response to the firm's own belief.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfConfirmingEquilibrium {
    pub beliefs: [BeliefVector; 2],
    pub prices: [f64; 2],
}

/// The self-confirming equilibrium supporting the Nash outcome: both firms
/// believe the opponent charges a constant `p^N` and both charge `p^N`.
pub fn sce_nash(params: &MarketParams) -> SelfConfirmingEquilibrium {
    let pn = params.nash_price();
    SelfConfirmingEquilibrium {
        beliefs: [BeliefVector::constant(pn); 2],
        prices: [pn, pn],
    }
}

/// The self-confirming equilibrium supporting the cartel outcome: both firms
/// believe the opponent matches their price one-for-one (`alpha0 = 0,
/// alpha1 = 1`) and both charge `p^C`.
pub fn sce_collusive(params: &MarketParams) -> SelfConfirmingEquilibrium {
    let pc = params.cartel_price();
    SelfConfirmingEquilibrium {
        beliefs: [BeliefVector::new(0.0, 1.0); 2],
        prices: [pc, pc],
    }
}

/// Residuals of the four equilibrium conditions, in order: firm 1's forecast
/// of p2, firm 2's forecast of p1, firm 1's best-response condition, firm 2's
/// best-response condition. All four vanish at a self-confirming equilibrium.
pub fn sce_residuals(
    params: &MarketParams,
    sce: &SelfConfirmingEquilibrium,
) -> Result<[f64; 4], MarketError> {
    let [b1, b2] = sce.beliefs;
    let [p1, p2] = sce.prices;
    Ok([
        p2 - (b1.alpha0 + b1.alpha1 * p1),
        p1 - (b2.alpha0 + b2.alpha1 * p2),
        p1 - params.best_response(b1)?,
        p2 - params.best_response(b2)?,
    ])
}
