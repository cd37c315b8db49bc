//! Derivative-free local minimization (Nelder–Mead simplex).

use alloc::vec::Vec;

pub(crate) struct Minimum {
    pub x: Vec<f64>,
    pub fx: f64,
    pub evals: usize,
    pub converged: bool,
}

pub(crate) struct NelderMead {
    pub max_evals: usize,
    pub ftol: f64,
    pub xtol: f64,
}

impl NelderMead {
    /// Minimizes `f` from `x0` with an initial simplex of per-coordinate
    /// offsets `step`. Infinite values are allowed and mark infeasible
    /// points. After a first convergence the search restarts once around
    /// the best point to guard against a collapsed simplex.
    pub fn minimize(&self, mut f: impl FnMut(&[f64]) -> f64, x0: &[f64], step: &[f64]) -> Minimum {
        let mut evals = 0;
        let mut best = Minimum { x: x0.to_vec(), fx: f64::INFINITY, evals: 0, converged: false };
        let mut start = x0.to_vec();
        let mut scale: Vec<f64> = step.to_vec();
        for _round in 0..3 {
            let (x, fx, converged) = self.run(&mut f, &start, &scale, &mut evals);
            let gain = best.fx - fx;
            if fx < best.fx {
                best.x = x;
                best.fx = fx;
            }
            best.converged = converged;
            if !converged || evals >= self.max_evals || !(gain > self.ftol * (1.0 + fx.abs())) {
                break;
            }
            start.clone_from(&best.x);
            scale.iter_mut().for_each(|s| *s *= 0.1);
        }
        best.evals = evals;
        best
    }

    fn run(
        &self,
        f: &mut impl FnMut(&[f64]) -> f64,
        x0: &[f64],
        step: &[f64],
        evals: &mut usize,
    ) -> (Vec<f64>, f64, bool) {
        let n = x0.len();
        let mut eval = |x: &[f64], evals: &mut usize| {
            *evals += 1;
            let v = f(x);
            if v.is_nan() {
                f64::INFINITY
            } else {
                v
            }
        };
        let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
        let mut fv: Vec<f64> = Vec::with_capacity(n + 1);
        simplex.push(x0.to_vec());
        fv.push(eval(x0, evals));
        for i in 0..n {
            let mut x = x0.to_vec();
            x[i] += step[i];
            fv.push(eval(&x, evals));
            simplex.push(x);
        }
        loop {
            // order vertices by value, ties keep insertion order
            let mut order: Vec<usize> = (0..=n).collect();
            order.sort_by(|&a, &b| fv[a].total_cmp(&fv[b]));
            simplex = order.iter().map(|&i| simplex[i].clone()).collect();
            fv = order.iter().map(|&i| fv[i]).collect();

            let spread = fv[n] - fv[0];
            let size = simplex[1..]
                .iter()
                .flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
                .fold(0.0, f64::max);
            if fv[0].is_finite() && spread <= self.ftol * (1.0 + fv[0].abs()) && size <= self.xtol {
                return (simplex.swap_remove(0), fv[0], true);
            }
            if *evals >= self.max_evals {
                return (simplex.swap_remove(0), fv[0], false);
            }

            let centroid: Vec<f64> =
                (0..n).map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64).collect();
            let along =
                |t: f64| -> Vec<f64> { centroid.iter().zip(&simplex[n]).map(|(c, w)| c + t * (c - w)).collect() };
            let xr = along(1.0);
            let fr = eval(&xr, evals);
            if fr < fv[0] {
                let xe = along(2.0);
                let fe = eval(&xe, evals);
                if fe < fr {
                    simplex[n] = xe;
                    fv[n] = fe;
                } else {
                    simplex[n] = xr;
                    fv[n] = fr;
                }
            } else if fr < fv[n - 1] {
                simplex[n] = xr;
                fv[n] = fr;
            } else {
                let (xc, fc) = if fr < fv[n] {
                    let xc = along(0.5);
                    let fc = eval(&xc, evals);
                    (xc, fc)
                } else {
                    let xc = along(-0.5);
                    let fc = eval(&xc, evals);
                    (xc, fc)
                };
                if fc < fv[n].min(fr) {
                    simplex[n] = xc;
                    fv[n] = fc;
                } else {
                    for i in 1..=n {
                        let x: Vec<f64> = simplex[i].iter().zip(&simplex[0]).map(|(a, b)| b + 0.5 * (a - b)).collect();
                        fv[i] = eval(&x, evals);
                        simplex[i] = x;
                    }
                }
            }
        }
    }
}
