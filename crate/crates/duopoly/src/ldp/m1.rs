//! Rate-function computation for the reaction-function specification.
//!
//! The eight-component state stacks both firms' `(alpha0, alpha1, r12,
//! r22)`. The update increment `Psi` is quadratic in the two-dimensional
//! shock, so `<beta, Psi(theta, eps)>` has an exact decomposition
//! `V00 - V01 eps - eps' V11 eps / 2`, and the Gaussian integral gives
//!
//! ```text
//! H = V00 - log det(I + sigma2 V11) / 2
//!        + sigma2 V01 (I + sigma2 V11)^{-1} V01' / 2,
//! ```
//!
//! defined whenever `I + sigma2 V11` is positive definite. No closed form
//! exists for the minimum escape cost here; it is found by shooting the
//! Hamiltonian flow from the equilibrium and minimizing the accumulated
//! cost over the initial costate.

use super::{shoot, shoot_cost, EscapeSolution, LdSystem, LdpError};
use crate::dynamics::{vf_m1_vec, M1State};
use crate::market::{BeliefVector, MarketParams};
use crate::optim::NelderMead;
use crate::rng::CounterRng;
use rayon::prelude::*;

/// `<beta, Psi(theta, eps)>` for one concrete shock realization.
///
/// Layout per firm: `(alpha0, alpha1, r12, r22)`; the coefficient block of
/// `Psi` is premultiplied by the firm's current `R^{-1}`, the second-moment
/// block relaxes toward the regressor outer product.
pub fn psi_inner_product(
    theta: &[f64],
    beta: &[f64],
    eps: [f64; 2],
    params: &MarketParams,
) -> Result<f64, LdpError> {
    let mut total = 0.0;
    for i in 0..2 {
        let j = 1 - i;
        let o = 4 * i;
        let (a0, a1, r12, r22) = (theta[o], theta[o + 1], theta[o + 2], theta[o + 3]);
        let alpha_own = BeliefVector::new(a0, a1);
        let alpha_other = BeliefVector::new(theta[4 * j], theta[4 * j + 1]);
        let b_own = params
            .best_response(alpha_own)
            .map_err(|e| LdpError::Invalid(e.to_string()))?;
        let b_other = params
            .best_response(alpha_other)
            .map_err(|e| LdpError::Invalid(e.to_string()))?;
        let x = b_own + eps[i];
        let fe = b_other + eps[j] - a0 - a1 * x;
        let det = r22 - r12 * r12;
        if det.abs() < 1e-14 {
            return Err(LdpError::Invalid("singular second-moment matrix".into()));
        }
        let u0 = (r22 * fe - r12 * fe * x) / det;
        let u1 = (-r12 * fe + fe * x) / det;
        total += beta[o] * u0 + beta[o + 1] * u1;
        total += beta[o + 2] * (x - r12) + beta[o + 3] * (x * x - r22);
    }
    Ok(total)
}

/// Exact quadratic decomposition of `eps -> <beta, Psi(theta, eps)>`,
/// obtained by evaluating at the origin, at the signed basis vectors, and
/// at one mixed point; exact because the map is a quadratic form. Returns
/// `(V00, V01, V11)` with `V11` symmetric.
pub fn quadratic_decompose_m1(
    theta: &[f64],
    beta: &[f64],
    params: &MarketParams,
) -> Result<(f64, [f64; 2], [[f64; 2]; 2]), LdpError> {
    let f = |e1: f64, e2: f64| psi_inner_product(theta, beta, [e1, e2], params);
    let v00 = f(0.0, 0.0)?;
    let (fp1, fm1) = (f(1.0, 0.0)?, f(-1.0, 0.0)?);
    let (fp2, fm2) = (f(0.0, 1.0)?, f(0.0, -1.0)?);
    let v01 = [(fm1 - fp1) / 2.0, (fm2 - fp2) / 2.0];
    let d11 = 2.0 * v00 - fp1 - fm1;
    let d22 = 2.0 * v00 - fp2 - fm2;
    let fpp = f(1.0, 1.0)?;
    // f(1,1) = V00 - V01.(1,1) - (V11_11 + 2 V11_12 + V11_22)/2.
    let d12 = v00 - fpp - v01[0] - v01[1] - 0.5 * (d11 + d22);
    Ok((v00, v01, [[d11, d12], [d12, d22]]))
}

/// Log moment generating function of the update increment under Gaussian
/// shocks of variance `sigma2`. Errors with `MgfDiverges` when
/// `I + sigma2 V11` is not positive definite.
pub fn h_m1(
    theta: &[f64],
    beta: &[f64],
    params: &MarketParams,
    sigma2: f64,
) -> Result<f64, LdpError> {
    let (v00, v01, v11) = quadratic_decompose_m1(theta, beta, params)?;
    let m11 = 1.0 + sigma2 * v11[0][0];
    let m22 = 1.0 + sigma2 * v11[1][1];
    let m12 = sigma2 * v11[0][1];
    let det = m11 * m22 - m12 * m12;
    if m11 <= 0.0 || det <= 0.0 {
        return Err(LdpError::MgfDiverges);
    }
    // (I + sigma2 V11)^{-1} V01'.
    let w = [
        (m22 * v01[0] - m12 * v01[1]) / det,
        (-m12 * v01[0] + m11 * v01[1]) / det,
    ];
    Ok(v00 - 0.5 * det.ln() + 0.5 * sigma2 * (v01[0] * w[0] + v01[1] * w[1]))
}

/// The reaction-function system as a shootable control system. The exit
/// set is a ball in the stacked belief coordinates of both firms; the
/// second moments ride along freely.
pub struct M1Ld {
    pub params: MarketParams,
    pub sigma2: f64,
}

impl LdSystem for M1Ld {
    fn dim(&self) -> usize {
        8
    }

    fn equilibrium(&self) -> Vec<f64> {
        let mut p = self.params;
        p.sigma2 = self.sigma2;
        M1State::equilibrium(&p).to_vec().to_vec()
    }

    fn hamiltonian(&self, theta: &[f64], beta: &[f64]) -> Result<f64, LdpError> {
        h_m1(theta, beta, &self.params, self.sigma2)
    }

    fn drift(&self, theta: &[f64]) -> Result<Vec<f64>, LdpError> {
        let mut p = self.params;
        p.sigma2 = self.sigma2;
        vf_m1_vec(theta, &p).map_err(|e| LdpError::Invalid(e.to_string()))
    }

    fn exit_distance(&self, theta: &[f64]) -> f64 {
        let pn = self.params.nash_price();
        ((theta[0] - pn).powi(2)
            + theta[1].powi(2)
            + (theta[4] - pn).powi(2)
            + theta[5].powi(2))
        .sqrt()
    }
}

/// Search configuration for the rate-function minimization.
#[derive(Debug, Clone, Copy)]
pub struct RateSearchConfig {
    pub restarts: usize,
    pub seed: u64,
    /// Shooting horizon in continuous time.
    pub tmax: f64,
    /// Step used for the final re-shot of the best candidate.
    pub dt: f64,
    /// Coarser step used inside the search.
    pub search_dt: f64,
    /// Standard deviation of the Gaussian restart draws for the initial
    /// costate; costates scale like gradients of the potential, i.e. with
    /// 1/sigma2.
    pub beta_scale: f64,
    /// Cost assigned to shots that never exit, keeping the simplex finite.
    pub penalty: f64,
    pub nm_max_evals: usize,
}

impl RateSearchConfig {
    pub fn for_sigma2(sigma2: f64) -> Self {
        Self {
            restarts: 16,
            seed: 1,
            tmax: 50.0,
            dt: 0.005,
            search_dt: 0.02,
            beta_scale: 1.0 / sigma2,
            penalty: 1e6,
            nm_max_evals: 200,
        }
    }
}

/// Result of the minimum-cost search at one radius.
#[derive(Debug, Clone)]
pub struct RatePoint {
    pub rho: f64,
    pub cost: f64,
    pub exit_point: Vec<f64>,
    pub exit_time: f64,
    pub beta0: Vec<f64>,
}

/// Minimum escape cost over initial costates, by multi-start Nelder-Mead
/// over `beta0`. Restarts run in parallel; the winner is the lowest final
/// cost with ties broken by restart index, so the result is deterministic.
pub fn rate_function_m1(
    rho: f64,
    params: &MarketParams,
    sigma2: f64,
    cfg: &RateSearchConfig,
) -> Result<RatePoint, LdpError> {
    if rho <= 0.0 {
        return Err(LdpError::Invalid(format!("rho must be positive, got {rho}")));
    }
    if sigma2 <= 0.0 {
        return Err(LdpError::NonpositiveVariance(sigma2));
    }
    let sys = M1Ld { params: *params, sigma2 };
    let rng = CounterRng::new(cfg.seed);
    let cost_of = |beta0: &[f64], dt: f64| -> f64 {
        match shoot_cost(&sys, beta0, rho, cfg.tmax, dt) {
            Ok(c) if c.is_finite() && c >= -1e-9 => c.max(0.0),
            _ => cfg.penalty,
        }
    };

    let results: Vec<(usize, Vec<f64>, f64)> = (0..cfg.restarts)
        .into_par_iter()
        .map(|k| {
            // Restart draws on a dedicated stream per restart; a hierarchy
            // of scales helps both gentle and aggressive pushes.
            let scale = cfg.beta_scale * 10f64.powi(-((k % 4) as i32));
            let x0: Vec<f64> = (0..8)
                .map(|i| scale * rng.normal_at(100 + k as u64, i as u64))
                .collect();
            let nm = NelderMead {
                max_evals: cfg.nm_max_evals,
                ftol: 1e-10,
                xtol: 1e-12,
            };
            let r = nm.minimize(|b| cost_of(b, cfg.search_dt), &x0, 0.25 * scale.max(1e-3));
            (k, r.x, r.fx)
        })
        .collect();

    let mut best: Option<(usize, Vec<f64>, f64)> = None;
    for (k, x, fx) in results {
        if fx < cfg.penalty {
            let replace = match &best {
                None => true,
                Some((_, _, bfx)) => fx < *bfx,
            };
            if replace {
                best = Some((k, x, fx));
            }
        }
    }
    let (_, beta0, _) = best.ok_or(LdpError::AllShotsFailed(cfg.restarts))?;
    let sol: EscapeSolution = shoot(&sys, &beta0, rho, cfg.tmax, cfg.dt)?;
    Ok(RatePoint {
        rho,
        cost: sol.cost,
        exit_point: sol.exit_point,
        exit_time: sol.exit_time,
        beta0,
    })
}

/// Rate function on a grid of radii. Failures at a radius are reported as
/// `None` rather than aborting the sweep; the `running_max` of the costs
/// gives the weakly increasing envelope.
pub fn rate_curve_m1(
    rhos: &[f64],
    params: &MarketParams,
    sigma2: f64,
    cfg: &RateSearchConfig,
) -> Vec<(f64, Option<RatePoint>)> {
    rhos.iter()
        .map(|&rho| (rho, rate_function_m1(rho, params, sigma2, cfg).ok()))
        .collect()
}

/// Weakly increasing envelope of a cost sequence (ignores gaps).
pub fn running_max(costs: &[Option<f64>]) -> Vec<Option<f64>> {
    let mut best = f64::NEG_INFINITY;
    costs
        .iter()
        .map(|c| {
            c.map(|c| {
                best = best.max(c);
                best
            })
        })
        .collect()
}
