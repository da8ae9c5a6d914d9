//! Monte Carlo first-exit times of the simulated learning system, used to
//! check the escape-time side of the rate-function theory: as the gain
//! shrinks, `lambda * log E[tau]` approaches the minimum escape cost, with
//! `tau` measured on the interpolated (continuous) time scale
//! `tau = lambda * periods`.

use crate::learning::{LearnError, SimConfig, Spec, SpecMode};
use crate::market::MarketParams;
use crate::rng::CounterRng;
use rayon::prelude::*;

/// Exit statistics for one gain.
#[derive(Debug, Clone)]
pub struct ScalingRow {
    pub gain: f64,
    /// Mean first-exit period count (capped runs enter at the cap).
    pub mean_periods: f64,
    /// Standard error of the period count across seeds.
    pub se_periods: f64,
    /// Mean exit time on the continuous scale, `gain * mean_periods`.
    pub mean_tau: f64,
    /// `gain * log(mean_tau)`, the quantity that stabilizes as the gain
    /// shrinks.
    pub gain_log_mean_tau: f64,
    /// Number of runs that hit the period cap without exiting.
    pub censored: usize,
    /// Unit exit directions in the stacked belief coordinates, one row per
    /// seed that exited.
    pub exit_directions: Vec<[f64; 4]>,
}

/// First period at which the stacked beliefs of a run pinned to the
/// reaction specification leave the ball of radius `rho`, or `cap` if
/// censored. Also returns the unit exit direction when the run exits.
pub fn first_exit_period(
    params: &MarketParams,
    gain: f64,
    seed: u64,
    rho: f64,
    cap: u64,
) -> Result<(u64, Option<[f64; 4]>), LearnError> {
    let mut cfg = SimConfig::new(
        *params,
        crate::learning::GainSchedule::constant(gain),
        1,
        seed,
    );
    cfg.mode = SpecMode::Forced([Spec::M1, Spec::M1]);
    cfg.validate()?;
    let pn = params.nash_price();
    let rng = CounterRng::new(seed);
    let sd = params.sigma2.sqrt();

    // Step manually so the run can stop at the exit without materializing
    // a full trajectory.
    let mut states = [crate::learning::FirmState::at_sce_nash(params, 1.0); 2];
    for st in &mut states {
        st.pi = 1.0;
    }
    for t in 1..=cap {
        let shocks = [rng.shock(0, t, sd), rng.shock(1, t, sd)];
        let (next, _) = crate::learning::step(&states, &cfg, gain, shocks, t)?;
        states = next;
        let d = [
            states[0].alpha1.alpha0 - pn,
            states[0].alpha1.alpha1,
            states[1].alpha1.alpha0 - pn,
            states[1].alpha1.alpha1,
        ];
        let norm = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2] + d[3] * d[3]).sqrt();
        if norm >= rho {
            return Ok((t, Some([d[0] / norm, d[1] / norm, d[2] / norm, d[3] / norm])));
        }
    }
    Ok((cap, None))
}

/// Mean first-exit times for each gain, over `n_seeds` seeds fanned out
/// from `master_seed`.
pub fn escape_time_scaling(
    params: &MarketParams,
    gains: &[f64],
    rho: f64,
    n_seeds: u64,
    master_seed: u64,
    cap: u64,
) -> Result<Vec<ScalingRow>, LearnError> {
    assert!(gains.len() >= 2, "need at least two gains to compare");
    let fan = CounterRng::new(master_seed);
    let seeds: Vec<u64> = (0..n_seeds).map(|k| fan.run_seed(k)).collect();
    gains
        .iter()
        .map(|&gain| {
            let results: Vec<(u64, Option<[f64; 4]>)> = seeds
                .par_iter()
                .map(|&s| first_exit_period(params, gain, s, rho, cap))
                .collect::<Result<_, _>>()?;
            let n = results.len() as f64;
            let mean = results.iter().map(|(t, _)| *t as f64).sum::<f64>() / n;
            let var = results
                .iter()
                .map(|(t, _)| (*t as f64 - mean).powi(2))
                .sum::<f64>()
                / (n - 1.0).max(1.0);
            let censored = results.iter().filter(|(_, d)| d.is_none()).count();
            let mean_tau = gain * mean;
            Ok(ScalingRow {
                gain,
                mean_periods: mean,
                se_periods: (var / n).sqrt(),
                mean_tau,
                gain_log_mean_tau: gain * mean_tau.ln(),
                censored,
                exit_directions: results.into_iter().filter_map(|(_, d)| d).collect(),
            })
        })
        .collect()
}

/// Mean angular dispersion of exit directions around their mean direction.
pub fn direction_dispersion(dirs: &[[f64; 4]]) -> f64 {
    if dirs.is_empty() {
        return f64::NAN;
    }
    let mut mean = [0.0; 4];
    for d in dirs {
        for i in 0..4 {
            mean[i] += d[i];
        }
    }
    let norm = mean.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return f64::NAN;
    }
    for m in &mut mean {
        *m /= norm;
    }
    dirs.iter()
        .map(|d| {
            let dot: f64 = d.iter().zip(&mean).map(|(a, b)| a * b).sum();
            dot.clamp(-1.0, 1.0).acos()
        })
        .sum::<f64>()
        / dirs.len() as f64
}
