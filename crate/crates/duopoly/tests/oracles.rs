//! Independent-oracle checks: every closed form or recursive scheme with a
//! brute-force or textbook counterpart is verified against it here.

use duopoly::dynamics::{vf_m0, M0State, M1State};
use duopoly::ldp::m0::{analytic_s_m0, h_m0, sbar_m0, M0Ld};
use duopoly::ldp::m1::{h_m1, psi_inner_product};
use duopoly::ldp::{shoot, LdSystem};
use duopoly::learning::{update_m1, SecondMoment};
use duopoly::market::{BeliefVector, MarketParams};
use duopoly::rng::CounterRng;

/// Batch ordinary least squares on `(x, y)` with an intercept, by the
/// normal equations.
fn batch_ols(x: &[f64], y: &[f64]) -> [f64; 2] {
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sy: f64 = y.iter().sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let det = n * sxx - sx * sx;
    [(sxx * sy - sx * sxy) / det, (n * sxy - sx * sy) / det]
}

#[test]
fn rls_reproduces_batch_ols() {
    // Recursive least squares with 1/t gain, seeded from the first two
    // observations, must match the batch solution at every horizon.
    let rng = CounterRng::new(2024);
    let mut worst: f64 = 0.0;
    for ds in 0..20u64 {
        let t_total = 500;
        let xs: Vec<f64> = (0..t_total)
            .map(|i| 1.0 + 0.5 * rng.normal_at(10 + ds, i))
            .collect();
        let b0 = rng.normal_at(50 + ds, 0);
        let b1 = rng.normal_at(50 + ds, 1);
        let ys: Vec<f64> = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| b0 + b1 * x + 0.3 * rng.normal_at(90 + ds, i as u64))
            .collect();

        // Initialize from the first two observations.
        let init = batch_ols(&xs[..2], &ys[..2]);
        let mut alpha = BeliefVector::new(init[0], init[1]);
        let mut r = SecondMoment {
            r12: (xs[0] + xs[1]) / 2.0,
            r22: (xs[0] * xs[0] + xs[1] * xs[1]) / 2.0,
        };
        for t in 3..=t_total as u64 {
            let gain = 1.0 / t as f64;
            let (a, rr) =
                update_m1(alpha, r, xs[t as usize - 1], ys[t as usize - 1], gain, t).unwrap();
            alpha = a;
            r = rr;
        }
        let ols = batch_ols(&xs, &ys);
        let rel0 = ((alpha.alpha0 - ols[0]) / ols[0]).abs();
        let rel1 = ((alpha.alpha1 - ols[1]) / ols[1]).abs();
        worst = worst.max(rel0).max(rel1);
    }
    assert!(worst <= 1e-6, "max relative coefficient error {worst}");
}

#[test]
fn h_m0_matches_monte_carlo_log_mgf() {
    // log E exp <beta, Psi> over 10^6 Gaussian draws, at 5 random
    // admissible (theta, beta), to 3 decimals.
    let m = MarketParams::baseline();
    let s2: f64 = 0.0025;
    let sd = s2.sqrt();
    let rng = CounterRng::new(5150);
    for k in 0..5u64 {
        let theta = [
            0.77 + 0.2 * rng.normal_at(1, 2 * k),
            0.77 + 0.2 * rng.normal_at(1, 2 * k + 1),
        ];
        let beta = [2.0 * rng.normal_at(2, 2 * k), 2.0 * rng.normal_at(2, 2 * k + 1)];
        let g = vf_m0(&M0State { a: theta }, &m);
        let n = 1_000_000u64;
        let mut acc = 0.0f64;
        for i in 0..n {
            // Psi = g(theta) + eps with eps the opponent shock per entry.
            let e1 = sd * rng.normal_at(10 + k, i);
            let e2 = sd * rng.normal_at(20 + k, i);
            acc += (beta[0] * (g[0] + e2) + beta[1] * (g[1] + e1)).exp();
        }
        let mc = (acc / n as f64).ln();
        let closed = h_m0(&theta, &beta, &m, s2);
        assert!(
            (mc - closed).abs() < 1e-3,
            "point {k}: MC {mc} vs closed {closed}"
        );
    }
}

#[test]
fn h_m1_matches_monte_carlo_log_mgf() {
    // Same oracle for the quadratic-in-shocks system, to 2 decimals.
    let m = MarketParams::baseline();
    let s2: f64 = 0.0025;
    let sd = s2.sqrt();
    let rng = CounterRng::new(616);
    let eq = M1State::equilibrium(&m).to_vec();
    let mut tested = 0u32;
    let mut k = 0u64;
    while tested < 5 {
        k += 1;
        let mut theta = eq.to_vec();
        for (i, t) in theta.iter_mut().enumerate() {
            *t += 0.03 * rng.normal_at(30 + i as u64, k);
        }
        theta[3] = theta[3].max(theta[2] * theta[2] + 1e-3);
        theta[7] = theta[7].max(theta[6] * theta[6] + 1e-3);
        let beta: Vec<f64> = (0..8).map(|i| 1.5 * rng.normal_at(40 + i, k)).collect();
        let closed = match h_m1(&theta, &beta, &m, s2) {
            Ok(h) => h,
            Err(_) => continue, // inadmissible draw; try another
        };
        let n = 1_000_000u64;
        let mut acc = 0.0f64;
        for i in 0..n {
            let e = [sd * rng.normal_at(60 + k, i), sd * rng.normal_at(80 + k, i)];
            acc += psi_inner_product(&theta, &beta, e, &m).unwrap().exp();
        }
        let mc = (acc / n as f64).ln();
        assert!(
            (mc - closed).abs() < 1e-2,
            "point {k}: MC {mc} vs closed {closed}"
        );
        tested += 1;
    }
}

#[test]
fn m0_cost_chain_three_routes_agree() {
    // The same escape cost three independent ways: the closed-form
    // potential, the path integral over the reversed mean dynamics, and
    // the Hamiltonian shot on the potential graph.
    let m = MarketParams::baseline();
    let s2: f64 = 0.0025;
    let r = 0.12;
    let direction = std::f64::consts::FRAC_1_SQRT_2;
    let pn = m.nash_price();
    let exit = [pn + r * direction, pn + r * direction];

    let closed = analytic_s_m0(exit[0], exit[1], &m, s2).unwrap();
    let path = duopoly::ldp::m0::escape_path_m0(exit, &m, s2, 0.002, 30.0).unwrap();
    assert!((path.cost - closed).abs() < 1e-3, "path {} closed {closed}", path.cost);

    let sys = M0Ld { params: m, sigma2: s2 };
    let d = 1e-4;
    let start = [pn + d * direction, pn + d * direction];
    let beta0 = duopoly::ldp::m0::grad_s_m0(&start, &m, s2);
    let shot = shoot(&sys, &beta0, r, 100.0, 0.005).unwrap();
    assert!((shot.cost - closed).abs() < 1e-3, "shot {} closed {closed}", shot.cost);

    // And the circle minimum agrees with the diagonal value.
    let sbar = sbar_m0(r, &m, s2).unwrap();
    assert!((sbar.cost - closed).abs() < 1e-6);
}

#[test]
fn m1_equilibrium_is_free_under_zero_costate() {
    let m = MarketParams::baseline();
    let sys = duopoly::ldp::m1::M1Ld { params: m, sigma2: 0.0025 };
    let eq = sys.equilibrium();
    let psi = sys.drift(&eq).unwrap();
    for v in psi {
        assert!(v.abs() < 1e-10);
    }
    assert!(matches!(
        shoot(&sys, &vec![0.0; 8], 0.2, 3.0, 0.01),
        Err(duopoly::ldp::LdpError::NoExit)
    ));
}
