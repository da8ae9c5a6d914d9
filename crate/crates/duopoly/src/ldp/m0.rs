//! Closed-form rate function for the constant-price specification.
//!
//! The update increment is linear in the Gaussian shock, so everything is
//! explicit: `H(theta, beta) = <beta, g(theta)> + sigma2/2 |beta|^2`,
//! `L(theta, v) = |v|^2 / (2 sigma2)`, the quadratic potential `S` solves
//! the stationary Hamilton-Jacobi equation with `grad S = -(2/sigma2) g`,
//! and the cheapest escape path is the time reversal of the convergent
//! mean-dynamics path.

use super::{LdSystem, LdpError};
use crate::dynamics::{vf_m0, M0State};
use crate::market::MarketParams;

/// `H(theta, beta)` for the two-dimensional belief system.
pub fn h_m0(theta: &[f64; 2], beta: &[f64; 2], params: &MarketParams, sigma2: f64) -> f64 {
    let g = vf_m0(&M0State { a: *theta }, params);
    beta[0] * g[0] + beta[1] * g[1] + 0.5 * sigma2 * (beta[0] * beta[0] + beta[1] * beta[1])
}

/// Instantaneous cost of a mean-dynamics perturbation `v`; independent of
/// the state for this specification.
pub fn l_m0(_theta: &[f64; 2], v: &[f64; 2], sigma2: f64) -> Result<f64, LdpError> {
    if sigma2 <= 0.0 {
        return Err(LdpError::NonpositiveVariance(sigma2));
    }
    Ok((v[0] * v[0] + v[1] * v[1]) / (2.0 * sigma2))
}

/// Quadratic escape potential, normalized so `S(p^N, p^N) = 0`.
pub fn analytic_s_m0(a01: f64, a02: f64, params: &MarketParams, sigma2: f64) -> Result<f64, LdpError> {
    if sigma2 <= 0.0 {
        return Err(LdpError::NonpositiveVariance(sigma2));
    }
    let (a, b, c) = (params.a, params.b, params.c);
    let two_b = 2.0 * b;
    Ok(-(2.0 / sigma2)
        * (a / two_b * (a01 + a02) + c / two_b * a01 * a02
            - 0.5 * (a01 * a01 + a02 * a02)
            - a * a / (two_b * (two_b - c))))
}

/// Gradient of [`analytic_s_m0`]; equals `-(2/sigma2) g(theta)`.
pub fn grad_s_m0(theta: &[f64; 2], params: &MarketParams, sigma2: f64) -> [f64; 2] {
    let g = vf_m0(&M0State { a: *theta }, params);
    [-2.0 / sigma2 * g[0], -2.0 / sigma2 * g[1]]
}

/// Minimum of the potential over the circle of radius `r` around the
/// equilibrium, with the minimizing point. The minimum is attained on the
/// diagonal displacement and equals `(1 - C/(2B)) r^2 / sigma2`.
#[derive(Debug, Clone, Copy)]
pub struct SbarPoint {
    pub cost: f64,
    pub argmin: [f64; 2],
}

pub fn sbar_m0(r: f64, params: &MarketParams, sigma2: f64) -> Result<SbarPoint, LdpError> {
    if r <= 0.0 {
        return Err(LdpError::Invalid(format!("radius must be positive, got {r}")));
    }
    if sigma2 <= 0.0 {
        return Err(LdpError::NonpositiveVariance(sigma2));
    }
    let pn = params.nash_price();
    let eval = |phi: f64| {
        let p = [pn + r * phi.cos(), pn + r * phi.sin()];
        (analytic_s_m0(p[0], p[1], params, sigma2).unwrap(), p)
    };
    // Coarse scan then golden-section refinement of the angle.
    let n = 720;
    let mut best_phi = 0.0;
    let mut best = f64::INFINITY;
    for k in 0..n {
        let phi = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
        let (s, _) = eval(phi);
        if s < best {
            best = s;
            best_phi = phi;
        }
    }
    let golden = (5.0f64.sqrt() - 1.0) / 2.0;
    let width = 2.0 * std::f64::consts::PI / n as f64;
    let (mut lo, mut hi) = (best_phi - width, best_phi + width);
    let (mut x1, mut x2) = (hi - golden * (hi - lo), lo + golden * (hi - lo));
    let (mut f1, mut f2) = (eval(x1).0, eval(x2).0);
    for _ in 0..64 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - golden * (hi - lo);
            f1 = eval(x1).0;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + golden * (hi - lo);
            f2 = eval(x2).0;
        }
    }
    let (cost, argmin) = eval(0.5 * (lo + hi));
    Ok(SbarPoint { cost, argmin })
}

/// Escape path to `exit_point` and its accumulated cost.
#[derive(Debug, Clone)]
pub struct M0EscapePath {
    /// States from the equilibrium out to the exit point.
    pub thetas: Vec<[f64; 2]>,
    /// Optimal perturbation at each state, `v = -2 g(theta)`.
    pub vs: Vec<[f64; 2]>,
    pub cost: f64,
}

/// The cheapest path from the equilibrium to `exit_point` is the time
/// reversal of the mean-dynamics path that converges from `exit_point`;
/// along it the optimal perturbation is `v = sigma2 grad S = -2 g`. The
/// cost is accumulated by quadrature of `L(v)` along the reversed path.
pub fn escape_path_m0(
    exit_point: [f64; 2],
    params: &MarketParams,
    sigma2: f64,
    dt: f64,
    t_end: f64,
) -> Result<M0EscapePath, LdpError> {
    if sigma2 <= 0.0 {
        return Err(LdpError::NonpositiveVariance(sigma2));
    }
    // Integrate (theta, cost) forward along the convergent dynamics; the
    // cost rate 2 |g|^2 / sigma2 is invariant under time reversal.
    let vf = |x: &[f64]| {
        let g = vf_m0(&M0State { a: [x[0], x[1]] }, params);
        Ok(vec![g[0], g[1], 2.0 * (g[0] * g[0] + g[1] * g[1]) / sigma2])
    };
    let traj = crate::dynamics::integrate(vf, &[exit_point[0], exit_point[1], 0.0], t_end, dt)
        .map_err(|e| LdpError::Invalid(e.to_string()))?;
    let cost = traj.last()[2];
    let mut thetas: Vec<[f64; 2]> = traj.states.iter().rev().map(|x| [x[0], x[1]]).collect();
    let vs: Vec<[f64; 2]> = thetas
        .iter()
        .map(|th| {
            let g = vf_m0(&M0State { a: *th }, params);
            [-2.0 * g[0], -2.0 * g[1]]
        })
        .collect();
    // First entry is (numerically) the equilibrium, last the exit point.
    if let Some(first) = thetas.first_mut() {
        let pn = params.nash_price();
        debug_assert!((first[0] - pn).abs() < 1e-3 && (first[1] - pn).abs() < 1e-3);
    }
    Ok(M0EscapePath { thetas, vs, cost })
}

/// The belief system as a shootable control system.
pub struct M0Ld {
    pub params: MarketParams,
    pub sigma2: f64,
}

impl LdSystem for M0Ld {
    fn dim(&self) -> usize {
        2
    }

    fn equilibrium(&self) -> Vec<f64> {
        let pn = self.params.nash_price();
        vec![pn, pn]
    }

    fn hamiltonian(&self, theta: &[f64], beta: &[f64]) -> Result<f64, LdpError> {
        Ok(h_m0(
            &[theta[0], theta[1]],
            &[beta[0], beta[1]],
            &self.params,
            self.sigma2,
        ))
    }

    fn drift(&self, theta: &[f64]) -> Result<Vec<f64>, LdpError> {
        Ok(vf_m0(&M0State { a: [theta[0], theta[1]] }, &self.params).to_vec())
    }

    fn exit_distance(&self, theta: &[f64]) -> f64 {
        let pn = self.params.nash_price();
        ((theta[0] - pn).powi(2) + (theta[1] - pn).powi(2)).sqrt()
    }
}
