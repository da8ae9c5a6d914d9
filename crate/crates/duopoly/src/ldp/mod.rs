//! Large-deviation machinery: H-functionals, Legendre cost, Hamiltonian
//! shooting, and escape-time experiments.
//!
//! Writing the recursive updates as `theta_t = theta_{t-1} + lambda *
//! Psi(theta_t, eps_t)`, the log moment generating function of the update
//! increment, `H(theta, beta) = log E exp <beta, Psi(theta, eps)>`, prices
//! perturbations `v` of the mean dynamics through its Legendre transform
//! `L(theta, v)`. The cheapest perturbation path that pushes beliefs from
//! the stable point to the boundary of a ball solves a deterministic
//! control problem whose extremals satisfy `theta' = H_beta`,
//! `beta' = -H_theta`; the minimized cost is the rate function, governing
//! both the probability and the expected time of an escape.

pub mod escape_times;
pub mod m0;
pub mod m1;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LdpError {
    #[error("moment generating function diverges (I + sigma2 V11 not positive definite)")]
    MgfDiverges,
    #[error("no exit from the target set within the shooting horizon")]
    NoExit,
    #[error("all {0} restarts failed to exit")]
    AllShotsFailed(usize),
    #[error("sigma2 must be positive, got {0}")]
    NonpositiveVariance(f64),
    #[error("invalid argument: {0}")]
    Invalid(String),
}

/// A deterministic control system for escape-cost computations.
pub trait LdSystem: Sync {
    fn dim(&self) -> usize;
    /// The stable stationary point the escape starts from.
    fn equilibrium(&self) -> Vec<f64>;
    /// Log moment generating function of the update increment.
    fn hamiltonian(&self, theta: &[f64], beta: &[f64]) -> Result<f64, LdpError>;
    /// Mean dynamics (drift) `psi(theta) = H_beta(theta, 0)`.
    fn drift(&self, theta: &[f64]) -> Result<Vec<f64>, LdpError>;
    /// Distance of the escape-relevant block from the equilibrium; the
    /// exit set for radius `rho` is where this reaches `rho`.
    fn exit_distance(&self, theta: &[f64]) -> f64;
}

/// Point along a shot path.
#[derive(Debug, Clone)]
pub struct LdState {
    pub t: f64,
    pub theta: Vec<f64>,
    pub beta: Vec<f64>,
    /// Accumulated cost up to `t`; nondecreasing, zero at the start.
    pub cost: f64,
}

/// A shot that reached the exit boundary.
#[derive(Debug, Clone)]
pub struct EscapeSolution {
    pub path: Vec<LdState>,
    pub exit_time: f64,
    pub exit_point: Vec<f64>,
    pub cost: f64,
}

/// Hamiltonian vector field by central differences of `h`, plus the running
/// cost rate `<beta, theta'> - H` (exact along extremals by duality).
/// Returns `(theta_dot, beta_dot, cost_rate)`.
pub fn hamiltonian_vf<H>(
    theta: &[f64],
    beta: &[f64],
    h: H,
) -> Result<(Vec<f64>, Vec<f64>, f64), LdpError>
where
    H: Fn(&[f64], &[f64]) -> Result<f64, LdpError>,
{
    let n = theta.len();
    let h0 = h(theta, beta)?;
    let mut theta_dot = vec![0.0; n];
    let mut beta_dot = vec![0.0; n];
    let mut bp = beta.to_vec();
    let mut tp = theta.to_vec();
    for k in 0..n {
        let db = 1e-5 * (1.0 + beta[k].abs());
        bp[k] = beta[k] + db;
        let hb_p = h(theta, &bp)?;
        bp[k] = beta[k] - db;
        let hb_m = h(theta, &bp)?;
        bp[k] = beta[k];
        theta_dot[k] = (hb_p - hb_m) / (2.0 * db);

        let dt = 1e-5 * (1.0 + theta[k].abs());
        tp[k] = theta[k] + dt;
        let ht_p = h(&tp, beta)?;
        tp[k] = theta[k] - dt;
        let ht_m = h(&tp, beta)?;
        tp[k] = theta[k];
        beta_dot[k] = -(ht_p - ht_m) / (2.0 * dt);
    }
    let cost_rate = beta.iter().zip(&theta_dot).map(|(b, d)| b * d).sum::<f64>() - h0;
    Ok((theta_dot, beta_dot, cost_rate))
}

/// Integrate the Hamiltonian flow from the equilibrium with costate
/// `beta0` until the exit distance crosses `rho` (the crossing step is
/// bisected to 1e-8) or time exceeds `tmax`.
pub fn shoot(
    sys: &dyn LdSystem,
    beta0: &[f64],
    rho: f64,
    tmax: f64,
    dt: f64,
) -> Result<EscapeSolution, LdpError> {
    shoot_impl(sys, beta0, rho, tmax, dt, true)
}

/// Cost-only variant used inside the rate-function search.
pub fn shoot_cost(
    sys: &dyn LdSystem,
    beta0: &[f64],
    rho: f64,
    tmax: f64,
    dt: f64,
) -> Result<f64, LdpError> {
    shoot_impl(sys, beta0, rho, tmax, dt, false).map(|s| s.cost)
}

fn shoot_impl(
    sys: &dyn LdSystem,
    beta0: &[f64],
    rho: f64,
    tmax: f64,
    dt: f64,
    record: bool,
) -> Result<EscapeSolution, LdpError> {
    if rho <= 0.0 {
        return Err(LdpError::Invalid(format!("rho must be positive, got {rho}")));
    }
    let n = sys.dim();
    assert_eq!(beta0.len(), n, "beta0 dimension mismatch");
    let h = |th: &[f64], be: &[f64]| sys.hamiltonian(th, be);

    // One RK4 step on the stacked (theta, beta, cost) state.
    let rk4 = |theta: &[f64], beta: &[f64], cost: f64, hstep: f64| -> Result<(Vec<f64>, Vec<f64>, f64), LdpError> {
        let (t1, b1, c1) = hamiltonian_vf(theta, beta, h)?;
        let mix = |base: &[f64], dir: &[f64], w: f64| -> Vec<f64> {
            base.iter().zip(dir).map(|(x, d)| x + w * d).collect()
        };
        let (t2, b2, c2) = hamiltonian_vf(&mix(theta, &t1, 0.5 * hstep), &mix(beta, &b1, 0.5 * hstep), h)?;
        let (t3, b3, c3) = hamiltonian_vf(&mix(theta, &t2, 0.5 * hstep), &mix(beta, &b2, 0.5 * hstep), h)?;
        let (t4, b4, c4) = hamiltonian_vf(&mix(theta, &t3, hstep), &mix(beta, &b3, hstep), h)?;
        let mut theta_n = theta.to_vec();
        let mut beta_n = beta.to_vec();
        for i in 0..n {
            theta_n[i] += hstep / 6.0 * (t1[i] + 2.0 * t2[i] + 2.0 * t3[i] + t4[i]);
            beta_n[i] += hstep / 6.0 * (b1[i] + 2.0 * b2[i] + 2.0 * b3[i] + b4[i]);
            if !theta_n[i].is_finite() || !beta_n[i].is_finite() {
                return Err(LdpError::MgfDiverges);
            }
        }
        let cost_n = cost + hstep / 6.0 * (c1 + 2.0 * c2 + 2.0 * c3 + c4);
        Ok((theta_n, beta_n, cost_n))
    };

    let mut theta = sys.equilibrium();
    let mut beta = beta0.to_vec();
    let mut cost = 0.0;
    let mut t = 0.0;
    let mut path = Vec::new();
    if record {
        path.push(LdState { t, theta: theta.clone(), beta: beta.clone(), cost });
    }

    while t < tmax {
        let (theta_n, beta_n, cost_n) = rk4(&theta, &beta, cost, dt)?;
        if sys.exit_distance(&theta_n) >= rho {
            // Bisect the step fraction for the crossing point.
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            let mut best = (theta_n.clone(), beta_n.clone(), cost_n, 1.0);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                let (tm, bm, cm) = rk4(&theta, &beta, cost, mid * dt)?;
                let d = sys.exit_distance(&tm);
                if d >= rho {
                    best = (tm, bm, cm, mid);
                    hi = mid;
                } else {
                    lo = mid;
                }
                if (sys.exit_distance(&best.0) - rho).abs() < 1e-8 {
                    break;
                }
            }
            let exit_time = t + best.3 * dt;
            if record {
                path.push(LdState {
                    t: exit_time,
                    theta: best.0.clone(),
                    beta: best.1.clone(),
                    cost: best.2,
                });
            }
            return Ok(EscapeSolution {
                path,
                exit_time,
                exit_point: best.0,
                cost: best.2,
            });
        }
        theta = theta_n;
        beta = beta_n;
        cost = cost_n;
        t += dt;
        if record {
            path.push(LdState { t, theta: theta.clone(), beta: beta.clone(), cost });
        }
    }
    Err(LdpError::NoExit)
}
