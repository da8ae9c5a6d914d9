//! Deterministic mean dynamics of the learning algorithm.
//!
//! As the gain shrinks, the recursive estimates track ordinary differential
//! equations. Under the constant-price specification the belief pair obeys
//! the linear system `da_i/dt = b((a_j, 0)) - a_i`. Under the reaction
//! specification each firm's `(alpha0, alpha1)` obeys
//! `d(alpha_i)/dt = R_i^{-1} g_i(alpha)` with the update force
//!
//! ```text
//! g_i = [ G_i ;  G_i b(alpha_i) - alpha1_i sigma2 ],
//! G_i = b(alpha_j) - alpha0_i - alpha1_i b(alpha_i),
//! ```
//!
//! while `R_i` relaxes toward `[[1, b_i], [b_i, b_i^2 + sigma2]]`. The sole
//! stationary point has both beliefs at `(p^N, 0)`; its local geometry, the
//! reduced slope dynamics on the self-reinforcing region, and the stability
//! diagnostics along the ray toward the collusive belief `(0, 1)` are all
//! computed here.

use crate::market::{BeliefVector, MarketError, MarketParams};
use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynError {
    #[error(transparent)]
    Market(#[from] MarketError),
    #[error("state left the admissible region at t = {t}")]
    NonFinite { t: f64 },
    #[error("threshold quadratic has no real roots (sigma2 too large)")]
    NoRealRoots,
    #[error("no sign change found in [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },
}

/// Both firms' constant-price beliefs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct M0State {
    pub a: [f64; 2],
}

/// Mean dynamics of the constant-price specification:
/// `da_i/dt = (A + C a_j) / (2B) - a_i`.
pub fn vf_m0(state: &M0State, params: &MarketParams) -> [f64; 2] {
    let b = |a: f64| (params.a + params.c * a) / (2.0 * params.b);
    [b(state.a[1]) - state.a[0], b(state.a[0]) - state.a[1]]
}

/// Jacobian of [`vf_m0`]; constant because the system is linear. Its
/// eigenvalues are `-1 +/- C/(2B)`.
pub fn m0_jacobian(params: &MarketParams) -> [[f64; 2]; 2] {
    let k = params.c / (2.0 * params.b);
    [[-1.0, k], [k, -1.0]]
}

pub fn m0_eigenvalues(params: &MarketParams) -> [f64; 2] {
    let k = params.c / (2.0 * params.b);
    [-1.0 + k, -1.0 - k]
}

/// One firm's belief block under the reaction specification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct M1Firm {
    pub alpha: BeliefVector,
    pub r12: f64,
    pub r22: f64,
}

/// Both firms' reaction-function beliefs and second moments (8 components;
/// the (1,1) entry of each second-moment matrix is pinned at one).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct M1State {
    pub firms: [M1Firm; 2],
}

impl M1State {
    /// The unique stationary point: beliefs `(p^N, 0)`, second moments at
    /// their relaxed values.
    pub fn equilibrium(params: &MarketParams) -> Self {
        let pn = params.nash_price();
        let firm = M1Firm {
            alpha: BeliefVector::constant(pn),
            r12: pn,
            r22: pn * pn + params.sigma2,
        };
        Self { firms: [firm; 2] }
    }

    pub fn to_vec(&self) -> [f64; 8] {
        let f = &self.firms;
        [
            f[0].alpha.alpha0,
            f[0].alpha.alpha1,
            f[0].r12,
            f[0].r22,
            f[1].alpha.alpha0,
            f[1].alpha.alpha1,
            f[1].r12,
            f[1].r22,
        ]
    }

    pub fn from_slice(x: &[f64]) -> Self {
        assert_eq!(x.len(), 8);
        let firm = |o: usize| M1Firm {
            alpha: BeliefVector::new(x[o], x[o + 1]),
            r12: x[o + 2],
            r22: x[o + 3],
        };
        Self { firms: [firm(0), firm(4)] }
    }

    /// Euclidean distance of the stacked `(alpha0, alpha1)` pairs from the
    /// equilibrium beliefs.
    pub fn alpha_distance(&self, params: &MarketParams) -> f64 {
        let pn = params.nash_price();
        let f = &self.firms;
        ((f[0].alpha.alpha0 - pn).powi(2)
            + f[0].alpha.alpha1.powi(2)
            + (f[1].alpha.alpha0 - pn).powi(2)
            + f[1].alpha.alpha1.powi(2))
        .sqrt()
    }
}

/// Update force `g_i` for firm `i` given both belief vectors.
pub fn m1_force(
    alpha_own: BeliefVector,
    alpha_other: BeliefVector,
    params: &MarketParams,
) -> Result<[f64; 2], DynError> {
    let b_own = params.best_response(alpha_own)?;
    let b_other = params.best_response(alpha_other)?;
    let g0 = b_other - alpha_own.alpha0 - alpha_own.alpha1 * b_own;
    Ok([g0, g0 * b_own - alpha_own.alpha1 * params.sigma2])
}

/// Full mean dynamics of the reaction specification, second moments
/// included.
pub fn vf_m1(state: &M1State, params: &MarketParams) -> Result<M1State, DynError> {
    let mut out = *state;
    for i in 0..2 {
        let j = 1 - i;
        let f = state.firms[i];
        let g = m1_force(f.alpha, state.firms[j].alpha, params)?;
        let det = f.r22 - f.r12 * f.r12;
        if det.abs() < 1e-14 {
            return Err(DynError::NonFinite { t: 0.0 });
        }
        // R^{-1} g with R = [[1, r12], [r12, r22]].
        let d0 = (f.r22 * g[0] - f.r12 * g[1]) / det;
        let d1 = (-f.r12 * g[0] + g[1]) / det;
        let b = params.best_response(f.alpha)?;
        out.firms[i] = M1Firm {
            alpha: BeliefVector::new(d0, d1),
            r12: b - f.r12,
            r22: b * b + params.sigma2 - f.r22,
        };
    }
    Ok(out)
}

/// Vector-field adapter for the 8-component flattened state.
pub fn vf_m1_vec(x: &[f64], params: &MarketParams) -> Result<Vec<f64>, DynError> {
    let d = vf_m1(&M1State::from_slice(x), params)?;
    Ok(d.to_vec().to_vec())
}

/// Closed-form 4x4 Jacobian of the belief-block update force at the
/// equilibrium, in coordinates `(alpha0_1, alpha1_1, alpha0_2, alpha1_2)`.
pub fn m1_alpha_jacobian(params: &MarketParams, sigma2: f64) -> [[f64; 4]; 4] {
    let pn = params.nash_price();
    let k = params.c / (2.0 * params.b);
    [
        [-1.0, -2.0 * pn, k, 2.0 * pn],
        [-pn, -2.0 * pn * pn - sigma2, pn * k, 2.0 * pn * pn],
        [k, 2.0 * pn, -1.0, -2.0 * pn],
        [pn * k, 2.0 * pn * pn, -pn, -2.0 * pn * pn - sigma2],
    ]
}

/// Eigenvalues of [`m1_alpha_jacobian`] in closed form: `-1 + C/(2B)`,
/// `-sigma2`, and the conjugate pair
/// `-(1 + C/2B + 4 p_N^2 + sigma2)/2 +/- sqrt(...)/2`. All four are real
/// and negative; two vanish as `sigma2 -> 0`, which is the weak direction
/// the escape dynamics exploit.
pub fn m1_alpha_eigenvalues(params: &MarketParams, sigma2: f64) -> [f64; 4] {
    let pn = params.nash_price();
    let k = params.c / (2.0 * params.b);
    let s = 1.0 + k + 4.0 * pn * pn + sigma2;
    let disc = (s * s - 4.0 * (1.0 + k) * sigma2).sqrt();
    [-1.0 + k, -sigma2, 0.5 * (-s + disc), 0.5 * (-s - disc)]
}

/// Central-difference Jacobian of a generic vector field.
pub fn numeric_jacobian<F>(f: F, x: &[f64]) -> Result<DMatrix<f64>, DynError>
where
    F: Fn(&[f64]) -> Result<Vec<f64>, DynError>,
{
    let n = x.len();
    let f0 = f(x)?;
    let m = f0.len();
    let mut jac = DMatrix::zeros(m, n);
    for j in 0..n {
        let h = 1e-6 * (1.0 + x[j].abs());
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[j] += h;
        xm[j] -= h;
        let fp = f(&xp)?;
        let fm = f(&xm)?;
        for i in 0..m {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}

/// Fixed-step integration record.
#[derive(Debug, Clone)]
pub struct OdeTrajectory {
    pub t: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub dt: f64,
    pub method: &'static str,
}

impl OdeTrajectory {
    pub fn last(&self) -> &[f64] {
        self.states.last().expect("trajectory is never empty")
    }
}

/// Classical fourth-order Runge-Kutta with a fixed step.
pub fn integrate<F>(vf: F, y0: &[f64], t_end: f64, dt: f64) -> Result<OdeTrajectory, DynError>
where
    F: Fn(&[f64]) -> Result<Vec<f64>, DynError>,
{
    assert!(dt > 0.0 && t_end > 0.0, "need dt > 0 and t_end > 0");
    let mut t = 0.0;
    let mut y = y0.to_vec();
    let mut traj = OdeTrajectory {
        t: vec![0.0],
        states: vec![y.clone()],
        dt,
        method: "rk4",
    };
    let n = y.len();
    while t < t_end - 1e-12 {
        let h = dt.min(t_end - t);
        let k1 = vf(&y)?;
        let mut y2 = vec![0.0; n];
        for i in 0..n {
            y2[i] = y[i] + 0.5 * h * k1[i];
        }
        let k2 = vf(&y2)?;
        for i in 0..n {
            y2[i] = y[i] + 0.5 * h * k2[i];
        }
        let k3 = vf(&y2)?;
        for i in 0..n {
            y2[i] = y[i] + h * k3[i];
        }
        let k4 = vf(&y2)?;
        for i in 0..n {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            if !y[i].is_finite() {
                return Err(DynError::NonFinite { t });
            }
        }
        t += h;
        traj.t.push(t);
        traj.states.push(y.clone());
    }
    Ok(traj)
}

/// Reduced dynamics of the two slope estimates on the symmetric
/// self-reinforcing path, with intercepts and price means eliminated:
/// `dx_i/dt = x1 x2 C^2 p_N^2 / (x_i^2 C^2 p_N^2 + sigma2) - x_i`.
pub fn reduced_slope_vf(a11: f64, a12: f64, params: &MarketParams, sigma2: f64) -> (f64, f64) {
    let cpn2 = (params.c * params.nash_price()).powi(2);
    let num = a11 * a12 * cpn2;
    (
        num / (a11 * a11 * cpn2 + sigma2) - a11,
        num / (a12 * a12 * cpn2 + sigma2) - a12,
    )
}

/// Boundaries of the self-reinforcing slope region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub alpha_lo: f64,
    pub alpha_hi: f64,
    /// Upper edge of the asymmetric wedge,
    /// `sqrt(alpha_lo C^2 p_N^2 - sigma2) / (C p_N)`.
    pub beta_lo: f64,
}

/// Real roots of the threshold quadratic
/// `C^2 p_N^2 (pi_opp - x) x - 4 sigma2 (B - C x)^2 = 0`. Between the
/// roots, symmetric slope beliefs are self-reinforcing: the exact
/// symmetric slope dynamics point outward. Errors when `sigma2` is large
/// enough that the region vanishes.
pub fn self_reinforcing_thresholds(
    params: &MarketParams,
    sigma2: f64,
    pi_opp: f64,
) -> Result<Thresholds, DynError> {
    let cpn2 = (params.c * params.nash_price()).powi(2);
    let (b, c_) = (params.b, params.c);
    // Quadratic q2 x^2 + q1 x + q0.
    let q2 = -(cpn2 + 4.0 * sigma2 * c_ * c_);
    let q1 = cpn2 * pi_opp + 8.0 * sigma2 * b * c_;
    let q0 = -4.0 * sigma2 * b * b;
    let disc = q1 * q1 - 4.0 * q2 * q0;
    if disc < 0.0 {
        return Err(DynError::NoRealRoots);
    }
    let sq = disc.sqrt();
    let r1 = (-q1 + sq) / (2.0 * q2);
    let r2 = (-q1 - sq) / (2.0 * q2);
    let (alpha_lo, alpha_hi) = if r1 < r2 { (r1, r2) } else { (r2, r1) };
    if alpha_hi <= 0.0 {
        return Err(DynError::NoRealRoots);
    }
    let inner = alpha_lo * cpn2 - sigma2;
    let beta_lo = if inner > 0.0 {
        inner.sqrt() / (params.c * params.nash_price())
    } else {
        0.0
    };
    Ok(Thresholds { alpha_lo, alpha_hi, beta_lo })
}

/// Straight-line distance from the equilibrium belief `(p^N, 0)` to the
/// collusive belief `(0, 1)` in one firm's belief plane.
pub fn collusion_ray_length(params: &MarketParams) -> f64 {
    let pn = params.nash_price();
    (pn * pn + 1.0).sqrt()
}

/// Symmetric belief point a distance `r` along the ray from `(p^N, 0)`
/// toward `(0, 1)`.
pub fn ray_point(r: f64, params: &MarketParams) -> BeliefVector {
    let pn = params.nash_price();
    let len = collusion_ray_length(params);
    BeliefVector::new(pn - r * pn / len, r / len)
}

/// Inner product of the displacement from equilibrium with the belief
/// update force `g` at the symmetric ray point `x*(r)`, summed over both
/// firms. Negative values mean the force points back toward the
/// equilibrium; the sign pattern over `r` is negative, positive, negative,
/// with the first crossing defining the stability radius. (The update
/// force does not involve the second moments, so holding them at their
/// relaxed values is immaterial here.)
pub fn direction_along_ray(r: f64, params: &MarketParams, sigma2: f64) -> Result<f64, DynError> {
    if r == 0.0 {
        return Ok(0.0);
    }
    let pn = params.nash_price();
    let len = collusion_ray_length(params);
    let alpha = ray_point(r, params);
    let mut p = *params;
    p.sigma2 = sigma2;
    let g = m1_force(alpha, alpha, &p)?;
    // Unit displacement u = (-p^N, 1) / len, same for both firms.
    Ok(2.0 * r * (-pn * g[0] + g[1]) / len)
}

/// Smallest positive root of [`direction_along_ray`], located by scan and
/// bisection to 1e-8. Errors if the direction never turns positive below
/// the ray length.
pub fn stability_radius(params: &MarketParams, sigma2: f64) -> Result<f64, DynError> {
    assert!(sigma2 > 0.0, "stability radius needs sigma2 > 0");
    let len = collusion_ray_length(params);
    let n = 4000;
    let mut prev_r = 0.0;
    let mut prev_v = 0.0;
    for k in 1..=n {
        let r = len * k as f64 / n as f64;
        let v = direction_along_ray(r, params, sigma2)?;
        if v > 0.0 {
            // Bisect the bracketing interval [prev_r, r].
            let (mut lo, mut hi) = (prev_r, r);
            let mut flo = prev_v;
            while hi - lo > 1e-8 {
                let mid = 0.5 * (lo + hi);
                let fm = direction_along_ray(mid, params, sigma2)?;
                if (flo <= 0.0) == (fm <= 0.0) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            return Ok(0.5 * (lo + hi));
        }
        prev_r = r;
        prev_v = v;
    }
    Err(DynError::NoSignChange { lo: 0.0, hi: len })
}
