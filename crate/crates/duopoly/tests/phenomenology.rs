//! Behavior of the simulated market at the baseline calibration: recurrent
//! collusive episodes, the forced-specification payoff pattern, long-run
//! convergence under the decreasing gain, and agreement between simulated
//! paths and the mean-dynamics ODE as the gain shrinks.

use duopoly::dynamics::{integrate, vf_m0, M0State};
use duopoly::learning::{
    detect_episodes, payoff_matrix_experiment, simulate, GainSchedule, SimConfig, Spec, SpecMode,
};
use duopoly::market::MarketParams;
use duopoly::rng::CounterRng;

#[test]
fn baseline_run_has_recurrent_episodes() {
    let m = MarketParams::baseline();
    let fan = CounterRng::new(71);
    let mut with_episode = 0;
    for k in 0..10 {
        let cfg = SimConfig::baseline(fan.run_seed(k));
        let traj = simulate(&cfg).unwrap();
        let eps = detect_episodes(&traj.b[0], &traj.b[1], &m, 0.5, 0.25);
        if !eps.is_empty() {
            with_episode += 1;
        }
    }
    assert!(with_episode >= 8, "episodes in only {with_episode}/10 runs");
}

#[test]
fn payoff_matrix_pattern() {
    // Shortened version of the forced-specification experiment: the
    // reaction-reaction cell clearly exceeds the others, which cluster at
    // the one-shot equilibrium profit.
    let m = MarketParams::baseline();
    let fan = CounterRng::new(99);
    let seeds: Vec<u64> = (0..5).map(|k| fan.run_seed(k)).collect();
    let cells =
        payoff_matrix_experiment(&m, GainSchedule::constant(0.01), 20_000, &seeds).unwrap();
    let nash = m.nash_profit();
    let m0m0 = cells[0][0].mean[0];
    let m1m1 = cells[1][1].mean[0];
    assert!((m0m0 - nash).abs() < 0.01, "constant-constant cell {m0m0}");
    assert!(m1m1 > nash + 0.04, "reaction-reaction cell {m1m1}");
    for (k, l) in [(0, 1), (1, 0)] {
        for i in 0..2 {
            assert!(
                (cells[k][l].mean[i] - nash).abs() < 0.01,
                "off-diagonal cell ({k},{l}) firm {i}: {}",
                cells[k][l].mean[i]
            );
        }
    }
    // Symmetric cells are symmetric across firms within a few s.e.
    let diff = (cells[1][1].mean[0] - cells[1][1].mean[1]).abs();
    let se = cells[1][1].se[0] + cells[1][1].se[1];
    assert!(diff < 4.0 * se.max(1e-4), "asymmetry {diff} vs se {se}");
}

#[test]
fn decreasing_gain_converges_to_equilibrium_beliefs() {
    // With the 1/t gain, the reaction-function estimates settle on the
    // equilibrium beliefs: slope near zero, intercept near the one-shot
    // equilibrium price.
    let m = MarketParams::baseline();
    let pn = m.nash_price();
    let fan = CounterRng::new(31337);
    let mut good = 0;
    for k in 0..10 {
        let mut cfg = SimConfig::new(m, GainSchedule::Decreasing { offset: 200 }, 200_000, fan.run_seed(k));
        cfg.mode = SpecMode::Averaging;
        let traj = simulate(&cfg).unwrap();
        let t = traj.len() - 1;
        let ok = (0..2).all(|i| {
            traj.alpha1_slope[i][t].abs() < 0.1 && (traj.alpha1_intercept[i][t] - pn).abs() < 0.05
        });
        if ok {
            good += 1;
        }
    }
    assert!(good >= 8, "converged in only {good}/10 runs");
}

#[test]
fn average_profit_approaches_equilibrium_profit_under_decreasing_gain() {
    let m = MarketParams::baseline();
    let fan = CounterRng::new(40);
    let mut good = 0;
    for k in 0..6 {
        let cfg = SimConfig::new(m, GainSchedule::Decreasing { offset: 200 }, 100_000, fan.run_seed(k));
        let traj = simulate(&cfg).unwrap();
        // Average realized profit over the second half.
        let half = traj.len() / 2;
        let mean: f64 = (half..traj.len())
            .map(|t| m.profit(traj.p[0][t], traj.p[1][t]))
            .sum::<f64>()
            / half as f64;
        if (mean - m.nash_profit()).abs() < 0.01 {
            good += 1;
        }
    }
    assert!(good >= 5, "profit converged in only {good}/6 runs");
}

#[test]
fn simulated_beliefs_track_ode_as_gain_shrinks() {
    // Constant-price spec from a displaced start: the simulated belief
    // path, interpolated on the continuous scale tau = gain * t, deviates
    // from the ODE solution by less as the gain shrinks.
    let m = MarketParams::baseline();
    let pn = m.nash_price();
    let a0 = [pn + 0.3, pn - 0.2];
    let horizon_cont = 4.0;
    let ode = integrate(
        |x: &[f64]| Ok(vf_m0(&M0State { a: [x[0], x[1]] }, &m).to_vec()),
        &a0,
        horizon_cont,
        1e-3,
    )
    .unwrap();
    let ode_at = |tau: f64| -> [f64; 2] {
        let idx = ((tau / 1e-3).round() as usize).min(ode.states.len() - 1);
        [ode.states[idx][0], ode.states[idx][1]]
    };

    let fan = CounterRng::new(4242);
    let mut devs = Vec::new();
    for &gain in &[0.01, 0.005, 0.0025] {
        let horizon = (horizon_cont / gain) as u64;
        let mut total = 0.0;
        let n_seeds = 10;
        for k in 0..n_seeds {
            let mut cfg = SimConfig::new(m, GainSchedule::constant(gain), horizon, fan.run_seed(k));
            cfg.mode = SpecMode::Forced([Spec::M0, Spec::M0]);
            let mut init = [duopoly::learning::FirmState::at_sce_nash(&m, 0.5); 2];
            init[0].alpha0 = a0[0];
            init[1].alpha0 = a0[1];
            cfg.init = duopoly::learning::InitCondition::Explicit(init);
            let traj = simulate(&cfg).unwrap();
            let mut worst: f64 = 0.0;
            for t in 0..traj.len() {
                let tau = gain * (t as f64 + 1.0);
                let target = ode_at(tau);
                let d = ((traj.alpha0[0][t] - target[0]).powi(2)
                    + (traj.alpha0[1][t] - target[1]).powi(2))
                .sqrt();
                worst = worst.max(d);
            }
            total += worst;
        }
        devs.push(total / n_seeds as f64);
    }
    assert!(
        devs[0] > devs[1] && devs[1] > devs[2],
        "deviations not shrinking: {devs:?}"
    );
}

#[test]
fn episode_spacing_grows_as_gain_shrinks() {
    // Mean spacing between detected episodes under the averaging algorithm
    // increases when the gain drops from 0.02 to 0.005. Pooled over seeds;
    // small-gain runs get a longer horizon so spacings are measurable.
    let m = MarketParams::baseline();
    let fan = CounterRng::new(510);
    let mean_spacing = |gain: f64, horizon: u64| -> f64 {
        let mut spacings = Vec::new();
        let mut last_end: Option<usize> = None;
        for k in 0..20 {
            let mut cfg = SimConfig::baseline(fan.run_seed(1000 + k));
            cfg.gain = GainSchedule::constant(gain);
            cfg.horizon = horizon;
            let traj = simulate(&cfg).unwrap();
            let eps = detect_episodes(&traj.b[0], &traj.b[1], &m, 0.5, 0.25);
            last_end = None;
            for e in &eps {
                if let Some(prev) = last_end {
                    spacings.push((e.start - prev) as f64);
                }
                last_end = Some(e.end);
            }
        }
        assert!(!spacings.is_empty(), "no consecutive episodes at gain {gain}");
        spacings.iter().sum::<f64>() / spacings.len() as f64
    };
    let fast = mean_spacing(0.02, 20_000);
    let slow = mean_spacing(0.005, 60_000);
    assert!(
        slow > 1.5 * fast,
        "spacing did not grow: gain 0.02 -> {fast}, gain 0.005 -> {slow}"
    );
}
