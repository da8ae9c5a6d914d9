//! Derivative-free simplex minimization (Nelder-Mead), used by the
//! rate-function search where the objective is a shooting cost with no
//! usable gradient.

/// Standard Nelder-Mead coefficients with adaptive shrink for moderate
/// dimensions.
#[derive(Debug, Clone, Copy)]
pub struct NelderMead {
    pub max_evals: usize,
    /// Stop when the simplex function values span less than this.
    pub ftol: f64,
    /// Stop when the simplex collapses below this diameter.
    pub xtol: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self { max_evals: 400, ftol: 1e-8, xtol: 1e-8 }
    }
}

#[derive(Debug, Clone)]
pub struct NmResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub evals: usize,
}

impl NelderMead {
    /// Minimize `f` from `x0`, building the initial simplex by stepping
    /// `step` along each coordinate.
    pub fn minimize<F>(&self, mut f: F, x0: &[f64], step: f64) -> NmResult
    where
        F: FnMut(&[f64]) -> f64,
    {
        let n = x0.len();
        let mut evals = 0usize;
        let mut eval = |x: &[f64], evals: &mut usize| {
            *evals += 1;
            f(x)
        };

        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        let fx0 = eval(x0, &mut evals);
        simplex.push((x0.to_vec(), fx0));
        for i in 0..n {
            let mut x = x0.to_vec();
            x[i] += if x[i] == 0.0 { step } else { step * (1.0 + x[i].abs()) };
            let fx = eval(&x, &mut evals);
            simplex.push((x, fx));
        }

        let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
        while evals < self.max_evals {
            simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
            let spread = simplex[n].1 - simplex[0].1;
            let diam = simplex[1..]
                .iter()
                .map(|(x, _)| {
                    x.iter()
                        .zip(&simplex[0].0)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max)
                })
                .fold(0.0, f64::max);
            if spread.abs() < self.ftol || diam < self.xtol {
                break;
            }

            // Centroid of all but the worst point.
            let mut centroid = vec![0.0; n];
            for (x, _) in &simplex[..n] {
                for i in 0..n {
                    centroid[i] += x[i] / n as f64;
                }
            }
            let worst = simplex[n].clone();
            let reflect: Vec<f64> = (0..n)
                .map(|i| centroid[i] + alpha * (centroid[i] - worst.0[i]))
                .collect();
            let fr = eval(&reflect, &mut evals);

            if fr < simplex[0].1 {
                let expand: Vec<f64> = (0..n)
                    .map(|i| centroid[i] + gamma * (reflect[i] - centroid[i]))
                    .collect();
                let fe = eval(&expand, &mut evals);
                simplex[n] = if fe < fr { (expand, fe) } else { (reflect, fr) };
            } else if fr < simplex[n - 1].1 {
                simplex[n] = (reflect, fr);
            } else {
                let contract: Vec<f64> = (0..n)
                    .map(|i| centroid[i] + rho * (worst.0[i] - centroid[i]))
                    .collect();
                let fc = eval(&contract, &mut evals);
                if fc < worst.1 {
                    simplex[n] = (contract, fc);
                } else {
                    // Shrink toward the best vertex.
                    let best = simplex[0].0.clone();
                    for v in simplex.iter_mut().skip(1) {
                        for i in 0..n {
                            v.0[i] = best[i] + sigma * (v.0[i] - best[i]);
                        }
                        v.1 = eval(&v.0, &mut evals);
                    }
                }
            }
        }
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        NmResult { x: simplex[0].0.clone(), fx: simplex[0].1, evals }
    }
}
