//! Finite Markov decision processes encoded as grid control problems, plus
//! brute-force reference solutions that share no code with the solver.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stodyn_core::{ControlProblem, DiscreteNoise, Policy, RectGrid};

/// Transition probabilities are multiples of `1/draws`: each (state, action)
/// pair owns `draws` equally likely target states. The first target is
/// always state 0, so every stationary policy is unichain and aperiodic.
#[derive(Debug, Clone)]
pub struct FiniteMdp {
    pub states: usize,
    pub actions: usize,
    pub draws: usize,
    pub cost: Vec<f64>,
    pub targets: Vec<usize>,
    noise: DiscreteNoise,
}

impl FiniteMdp {
    pub fn random(seed: u64, states: usize, actions: usize, draws: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cost = (0..states * actions).map(|_| rng.random_range(0.0..10.0)).collect();
        let mut targets = Vec::with_capacity(states * actions * draws);
        for _ in 0..states * actions {
            targets.push(0);
            for _ in 1..draws {
                targets.push(rng.random_range(0..states));
            }
        }
        Self::from_parts(states, actions, draws, cost, targets)
    }

    pub fn from_parts(states: usize, actions: usize, draws: usize, cost: Vec<f64>, targets: Vec<usize>) -> Self {
        assert_eq!(cost.len(), states * actions);
        assert_eq!(targets.len(), states * actions * draws);
        let noise =
            DiscreteNoise::new((0..draws).map(|k| k as f64).collect(), vec![1.0 / draws as f64; draws]).unwrap();
        Self { states, actions, draws, cost, targets, noise }
    }

    pub fn grid(&self) -> RectGrid {
        RectGrid::new(&[(0.0, (self.states - 1) as f64, self.states)]).unwrap()
    }

    pub fn policy(&self, actions: &[usize]) -> Policy {
        let grid = self.grid();
        Policy::from_fn(&grid, 1, |x, u| u[0] = actions[x[0].round() as usize] as f64).unwrap()
    }

    /// Reads back the action chosen at every state.
    pub fn actions_of(&self, policy: &Policy) -> Vec<usize> {
        policy.components()[0].values().iter().map(|&u| u.round() as usize).collect()
    }

    /// Row-major `states × states` transition matrix of a deterministic policy.
    pub fn matrix(&self, policy: &[usize]) -> Vec<f64> {
        let n = self.states;
        let mut p = vec![0.0; n * n];
        for s in 0..n {
            let base = (s * self.actions + policy[s]) * self.draws;
            for &t in &self.targets[base..base + self.draws] {
                p[s * n + t] += 1.0 / self.draws as f64;
            }
        }
        p
    }

    /// Solves `J + h(s) = c(s) + Σ P(s,t) h(t)` with `h(reference) = 0`
    /// directly. Returns `(J, h)`.
    pub fn evaluate_exact(&self, policy: &[usize], reference: usize) -> (f64, Vec<f64>) {
        let n = self.states;
        let p = self.matrix(policy);
        // unknowns: h_0..h_{n-1}, J
        let m = n + 1;
        let mut a = vec![0.0; m * m];
        let mut b = vec![0.0; m];
        for s in 0..n {
            for t in 0..n {
                a[s * m + t] = -p[s * n + t];
            }
            a[s * m + s] += 1.0;
            a[s * m + n] = 1.0;
            b[s] = self.cost[s * self.actions + policy[s]];
        }
        a[n * m + reference] = 1.0;
        let x = gauss(a, b, m);
        (x[n], x[..n].to_vec())
    }

    /// Best average cost over every deterministic stationary policy.
    pub fn enumerate_optimum(&self) -> (f64, Vec<usize>) {
        let mut policy = vec![0; self.states];
        let mut best = (f64::INFINITY, policy.clone());
        loop {
            let (j, _) = self.evaluate_exact(&policy, 0);
            if j < best.0 {
                best = (j, policy.clone());
            }
            // odometer increment
            let mut i = 0;
            loop {
                if i == self.states {
                    return best;
                }
                policy[i] += 1;
                if policy[i] < self.actions {
                    break;
                }
                policy[i] = 0;
                i += 1;
            }
        }
    }
}

impl ControlProblem for FiniteMdp {
    fn state_dim(&self) -> usize {
        1
    }

    fn control_dim(&self) -> usize {
        1
    }

    fn noise(&self) -> &DiscreteNoise {
        &self.noise
    }

    fn control_candidates(&self, _state: &[f64], out: &mut Vec<f64>) {
        out.extend((0..self.actions).map(|a| a as f64));
    }

    fn dynamics(&self, state: &[f64], control: &[f64], noise: f64, next: &mut [f64]) {
        let s = state[0].round() as usize;
        let a = control[0].round() as usize;
        next[0] = self.targets[(s * self.actions + a) * self.draws + noise as usize] as f64;
    }

    fn stage_cost(&self, state: &[f64], control: &[f64], _noise: f64) -> f64 {
        self.cost[state[0].round() as usize * self.actions + control[0].round() as usize]
    }
}

/// Dense Gaussian elimination with partial pivoting.
pub fn gauss(mut a: Vec<f64>, mut b: Vec<f64>, n: usize) -> Vec<f64> {
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs())).unwrap();
        assert!(a[piv * n + col].abs() > 1e-14, "singular system");
        if piv != col {
            for k in 0..n {
                a.swap(piv * n + k, col * n + k);
            }
            b.swap(piv, col);
        }
        for r in col + 1..n {
            let f = a[r * n + col] / a[col * n + col];
            if f != 0.0 {
                for k in col..n {
                    a[r * n + k] -= f * a[col * n + k];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut s = b[r];
        for k in r + 1..n {
            s -= a[r * n + k] * x[k];
        }
        x[r] = s / a[r * n + r];
    }
    x
}
