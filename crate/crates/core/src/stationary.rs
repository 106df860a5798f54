//! Joint state-action measures and stationary distributions.

use crate::bellman::MixedKernel;
use crate::discretize::FiniteSMDP;
use crate::{Error, Result};

/// A probability vector over state-action cells, `index = s * n_actions + x`.
#[derive(Clone, Debug, PartialEq)]
pub struct JointMeasure {
    pub n_states: usize,
    pub n_actions: usize,
    pub weights: Vec<f64>,
}

impl JointMeasure {
    /// Checks shape, nonnegativity and normalization (to 1e-10).
    pub fn new(n_states: usize, n_actions: usize, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != n_states * n_actions {
            return Err(Error::Shape(format!("{} weights for {n_states}x{n_actions} cells", weights.len())));
        }
        let sum: f64 = weights.iter().sum();
        if weights.iter().any(|w| !(*w >= 0.0)) || (sum - 1.0).abs() > 1e-10 {
            return Err(Error::Domain(format!("joint measure is not a probability vector (sum {sum})")));
        }
        Ok(JointMeasure { n_states, n_actions, weights })
    }

    /// `m(s, x) = m_S(s) policy(x | s)`.
    pub fn from_marginal(marginal: &[f64], policy: &Policy) -> Self {
        let na = policy.n_actions;
        let mut weights = vec![0.0; marginal.len() * na];
        for (s, ms) in marginal.iter().enumerate() {
            for x in 0..na {
                weights[s * na + x] = ms * policy.prob(s, x);
            }
        }
        JointMeasure { n_states: marginal.len(), n_actions: na, weights }
    }

    /// Point mass on `(s, x)`.
    pub fn point(n_states: usize, n_actions: usize, s: usize, x: usize) -> Self {
        let mut weights = vec![0.0; n_states * n_actions];
        weights[s * n_actions + x] = 1.0;
        JointMeasure { n_states, n_actions, weights }
    }

    #[inline]
    pub fn get(&self, s: usize, x: usize) -> f64 {
        self.weights[s * self.n_actions + x]
    }

    pub fn marginal(&self) -> Vec<f64> {
        self.weights.chunks(self.n_actions).map(|c| c.iter().sum()).collect()
    }

    /// Conditional action distribution; uniform on states without mass.
    pub fn policy(&self) -> Policy {
        let na = self.n_actions;
        let mut probs = Vec::with_capacity(self.weights.len());
        for c in self.weights.chunks(na) {
            let t: f64 = c.iter().sum();
            if t > 0.0 {
                probs.extend(c.iter().map(|w| w / t));
            } else {
                probs.extend(std::iter::repeat_n(1.0 / na as f64, na));
            }
        }
        Policy { n_states: self.n_states, n_actions: na, probs }
    }

    pub fn tv(&self, other: &JointMeasure) -> f64 {
        tv(&self.weights, &other.weights)
    }

    /// `(1 - lambda) self + lambda other`.
    pub fn mix(&self, other: &JointMeasure, lambda: f64) -> JointMeasure {
        let weights = self.weights.iter().zip(&other.weights).map(|(a, b)| (1.0 - lambda) * a + lambda * b).collect();
        JointMeasure { n_states: self.n_states, n_actions: self.n_actions, weights }
    }

    /// Variance of state coordinate `axis` under the marginal, using cell centers.
    pub fn state_variance(&self, f: &FiniteSMDP, axis: usize) -> f64 {
        let ms = self.marginal();
        let c = |s: usize| f.states.axes[axis].centers[f.states.unflatten(s)[axis]];
        let mean: f64 = ms.iter().enumerate().map(|(s, w)| w * c(s)).sum();
        ms.iter().enumerate().map(|(s, w)| w * (c(s) - mean).powi(2)).sum()
    }
}

/// Total-variation distance `0.5 sum |a - b|`.
pub fn tv(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// A randomized stationary policy, `probs[s * n_actions + x] = policy(x | s)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Policy {
    pub n_states: usize,
    pub n_actions: usize,
    pub probs: Vec<f64>,
}

impl Policy {
    pub fn new(n_states: usize, n_actions: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != n_states * n_actions {
            return Err(Error::Shape(format!("{} policy entries for {n_states}x{n_actions}", probs.len())));
        }
        for (s, row) in probs.chunks(n_actions).enumerate() {
            let t: f64 = row.iter().sum();
            if row.iter().any(|p| !(*p >= 0.0)) || (t - 1.0).abs() > 1e-10 {
                return Err(Error::Domain(format!("policy row {s} is not a distribution (sum {t})")));
            }
        }
        Ok(Policy { n_states, n_actions, probs })
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        Policy { n_states, n_actions, probs: vec![1.0 / n_actions as f64; n_states * n_actions] }
    }

    /// Deterministic policy playing `actions[s]`.
    pub fn pure(n_actions: usize, actions: &[usize]) -> Self {
        let mut probs = vec![0.0; actions.len() * n_actions];
        for (s, x) in actions.iter().enumerate() {
            probs[s * n_actions + x] = 1.0;
        }
        Policy { n_states: actions.len(), n_actions, probs }
    }

    /// Uniform over each state's listed actions.
    pub fn uniform_over(n_actions: usize, sets: &[Vec<usize>]) -> Self {
        let mut probs = vec![0.0; sets.len() * n_actions];
        for (s, set) in sets.iter().enumerate() {
            for x in set {
                probs[s * n_actions + x] = 1.0 / set.len() as f64;
            }
        }
        Policy { n_states: sets.len(), n_actions, probs }
    }

    #[inline]
    pub fn prob(&self, s: usize, x: usize) -> f64 {
        self.probs[s * self.n_actions + x]
    }
}

/// Result of [`stationary_distribution`].
#[derive(Clone, Debug, PartialEq)]
pub struct Stationary {
    pub measure: JointMeasure,
    /// TV distance between the returned marginal and its one-step image.
    pub residual: f64,
    pub iterations: usize,
    /// Whether oscillation triggered 0.5 damping.
    pub damped: bool,
}

/// One step of the state chain: image of `marginal` under `policy` and `kernel`.
pub fn push_forward(f: &FiniteSMDP, kernel: &MixedKernel, marginal: &[f64], policy: &Policy, out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    let na = f.n_actions();
    for (w, tr) in &kernel.components {
        let mut agg = vec![0.0; tr.keys.n_keys()];
        for (s, ms) in marginal.iter().enumerate() {
            if *ms == 0.0 {
                continue;
            }
            for x in 0..na {
                let p = policy.prob(s, x);
                if p != 0.0 {
                    agg[tr.keys.key(s, x)] += ms * p;
                }
            }
        }
        for (k, a) in agg.iter().enumerate() {
            if *a != 0.0 {
                tr.rows[k].scatter(&f.states, w * a, out);
            }
        }
    }
}

/// Stationary marginal of the chain `P(s -> s') = sum_x policy(x|s) Q(s'|s,x)`
/// by power iteration from `init` (default: the model's `q0`), stopping when
/// the one-step TV change is at most `eps_tv`. Period-2 oscillation switches
/// on 0.5 damping.
pub fn stationary_distribution(
    f: &FiniteSMDP,
    kernel: &MixedKernel,
    policy: &Policy,
    init: Option<&[f64]>,
    eps_tv: f64,
    max_iter: usize,
) -> Result<Stationary> {
    let n = f.n_states();
    if policy.n_states != n || policy.n_actions != f.n_actions() {
        return Err(Error::Shape("policy does not match the grid".into()));
    }
    let mut p = init.unwrap_or(&f.q0).to_vec();
    if p.len() != n {
        return Err(Error::Shape(format!("initial distribution has {} entries for {n} states", p.len())));
    }
    let mut prev = p.clone();
    let mut img = vec![0.0; n];
    let mut damped = false;
    let mut residual = f64::INFINITY;
    for it in 0..max_iter {
        push_forward(f, kernel, &p, policy, &mut img);
        residual = tv(&img, &p);
        if residual <= eps_tv {
            return Ok(Stationary { measure: JointMeasure::from_marginal(&p, policy), residual, iterations: it, damped });
        }
        if !damped && it >= 1 && tv(&img, &prev) < 0.5 * residual {
            damped = true;
        }
        std::mem::swap(&mut prev, &mut p);
        if damped {
            for ((pn, a), b) in p.iter_mut().zip(&img).zip(&prev) {
                *pn = 0.5 * (a + b);
            }
        } else {
            p.copy_from_slice(&img);
        }
    }
    Err(Error::NonConvergence { iterations: max_iter, residual })
}

/// TV distance between the state marginal of `m` and its one-step image
/// under `kernel` (the policy is the conditional of `m` itself).
pub fn stationarity_residual(f: &FiniteSMDP, m: &JointMeasure, kernel: &MixedKernel) -> Result<f64> {
    if m.n_states != f.n_states() || m.n_actions != f.n_actions() {
        return Err(Error::Shape("measure does not match the grid".into()));
    }
    let ms = m.marginal();
    let mut img = vec![0.0; f.n_states()];
    for (w, tr) in &kernel.components {
        let mut agg = vec![0.0; tr.keys.n_keys()];
        for s in 0..m.n_states {
            for x in 0..m.n_actions {
                let v = m.get(s, x);
                if v != 0.0 {
                    agg[tr.keys.key(s, x)] += v;
                }
            }
        }
        for (k, a) in agg.iter().enumerate() {
            if *a != 0.0 {
                tr.rows[k].scatter(&f.states, w * a, &mut img);
            }
        }
    }
    Ok(tv(&ms, &img))
}
