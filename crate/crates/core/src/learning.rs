//! Bayesian learning on the parameter grid.

use crate::bellman::{correspondence_from_q, q_values, solve_bellman_from, MixedKernel};
use crate::discretize::FiniteSMDP;
use crate::divergence::closest_parameters;
use crate::stationary::{tv, JointMeasure, Policy};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

/// Name of the random generator recorded in traces.
pub const GENERATOR: &str = "ChaCha8";

/// A probability vector over the parameter grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Belief {
    pub weights: Vec<f64>,
}

impl Belief {
    /// Checks nonnegativity and normalization (to 1e-10).
    pub fn new(weights: Vec<f64>) -> Result<Belief> {
        let sum: f64 = weights.iter().sum();
        if weights.is_empty() || weights.iter().any(|w| !(*w >= 0.0)) || (sum - 1.0).abs() > 1e-10 {
            return Err(Error::Domain(format!("belief is not a probability vector (sum {sum})")));
        }
        Ok(Belief { weights })
    }

    pub fn uniform(n: usize) -> Belief {
        Belief { weights: vec![1.0 / n as f64; n] }
    }

    pub fn point(n: usize, i: usize) -> Belief {
        let mut weights = vec![0.0; n];
        weights[i] = 1.0;
        Belief { weights }
    }

    /// Uniform over `set`.
    pub fn uniform_on(n: usize, set: &[usize]) -> Belief {
        let mut weights = vec![0.0; n];
        for i in set {
            weights[*i] = 1.0 / set.len() as f64;
        }
        Belief { weights }
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.weights.len()).filter(|i| self.weights[*i] > 0.0).collect()
    }

    /// Posterior mean of every parameter coordinate.
    pub fn mean(&self, f: &FiniteSMDP) -> Vec<f64> {
        let d = f.spec.params.dim();
        let mut out = vec![0.0; d];
        for (w, p) in self.weights.iter().zip(&f.params.points) {
            for k in 0..d {
                out[k] += w * p[k];
            }
        }
        out
    }
}

/// Posterior after observing the transition `(s, x) -> next` (grid indices),
/// using the model's cell probabilities as likelihoods.
pub fn bayes_update(mu: &Belief, s: usize, x: usize, next: usize, f: &FiniteSMDP) -> Result<Belief> {
    if mu.weights.len() != f.n_params() {
        return Err(Error::Shape(format!("belief over {} parameters, grid has {}", mu.weights.len(), f.n_params())));
    }
    let multi = f.states.unflatten(next);
    let mut post: Vec<f64> = mu
        .weights
        .iter()
        .enumerate()
        .map(|(t, w)| if *w > 0.0 { w * f.model[t].row(s, x).prob(&multi) } else { 0.0 })
        .collect();
    let denom: f64 = post.iter().sum();
    if !(denom > 0.0) {
        return Err(Error::ImpossibleObservation);
    }
    post.iter_mut().for_each(|p| *p /= denom);
    // A second pass brings the sum to 1 within a few ulps.
    let sum: f64 = post.iter().sum();
    post.iter_mut().for_each(|p| *p /= sum);
    Ok(Belief { weights: post })
}

#[derive(Clone, Debug, PartialEq)]
pub enum PolicyMode {
    /// Re-solve the Bellman equation treating the current posterior as
    /// permanent; play the lowest-index optimal action.
    AnticipatedUtility,
    Fixed(Policy),
}

#[derive(Clone, Debug, PartialEq)]
pub struct LearningOptions {
    pub horizon: usize,
    pub resolve_every: usize,
    pub seed: u64,
    /// Value-iteration accuracy for anticipated-utility policies.
    pub eps_value: f64,
    /// Posterior weights below this are left out of the planning kernel.
    pub prune: f64,
}

impl LearningOptions {
    pub fn new(horizon: usize, seed: u64) -> Self {
        LearningOptions { horizon, resolve_every: 100, seed, eps_value: 1e-8, prune: 1e-10 }
    }

    pub fn with_resolve_every(mut self, n: usize) -> Self {
        self.resolve_every = n;
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LearningTrace {
    /// `(s_k, x_k)` for `k = 0 .. horizon`.
    pub history: Vec<(usize, usize)>,
    /// Posterior after `k` observations, at each checkpoint `k`.
    pub beliefs: Vec<(usize, Belief)>,
    /// Empirical frequency of the first `k` state-action pairs, at each checkpoint.
    pub freq: Vec<(usize, JointMeasure)>,
    pub seed: u64,
    pub generator: &'static str,
}

/// `10, 32, 100, 316, ...` up to `horizon`, always ending at `horizon`.
pub fn checkpoints(horizon: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut j = 2;
    loop {
        let k = 10f64.powf(j as f64 / 2.0).round() as usize;
        if k >= horizon {
            break;
        }
        out.push(k);
        j += 1;
    }
    out.push(horizon);
    out
}

fn draw(weights: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}

fn plan(f: &FiniteSMDP, mu: &Belief, opts: &LearningOptions, warm: &mut Option<Vec<f64>>) -> Result<Vec<usize>> {
    let kept: Vec<(usize, f64)> = mu.weights.iter().copied().enumerate().filter(|(_, w)| *w > opts.prune).collect();
    let total: f64 = kept.iter().map(|(_, w)| w).sum();
    let kernel = MixedKernel { components: kept.iter().map(|(t, w)| (w / total, &f.model[*t])).collect() };
    let v = solve_bellman_from(f, &kernel, opts.eps_value, warm.as_deref())?;
    let q = q_values(f, &kernel, &v);
    let scale = v.values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    *warm = Some(v.values);
    Ok(correspondence_from_q(&q, f.n_actions(), 1e-9 * (1.0 + scale)).first())
}

/// Simulates `horizon` periods of a Bayesian agent facing the true kernel.
pub fn simulate_learning(f: &FiniteSMDP, mode: &PolicyMode, prior: &Belief, opts: &LearningOptions) -> Result<LearningTrace> {
    if opts.horizon == 0 || opts.resolve_every == 0 {
        return Err(Error::Domain("horizon and resolve_every must be positive".into()));
    }
    if prior.weights.len() != f.n_params() {
        return Err(Error::Shape("prior does not match the parameter grid".into()));
    }
    if let PolicyMode::Fixed(p) = mode {
        if p.n_states != f.n_states() || p.n_actions != f.n_actions() {
            return Err(Error::Shape("policy does not match the grid".into()));
        }
    }
    let (n, na) = (f.n_states(), f.n_actions());
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let marks = checkpoints(opts.horizon);
    let mut next_mark = 0;
    let mut mu = prior.clone();
    let mut counts = vec![0u64; n * na];
    let mut history = Vec::with_capacity(opts.horizon);
    let mut beliefs = Vec::new();
    let mut freq = Vec::new();
    let mut actions: Vec<usize> = vec![0; n];
    let mut warm = None;
    let mut s = draw(&f.q0, &mut rng);
    for k in 0..opts.horizon {
        let x = match mode {
            PolicyMode::AnticipatedUtility => {
                if k % opts.resolve_every == 0 && na > 1 {
                    actions = plan(f, &mu, opts, &mut warm)?;
                }
                actions[s]
            }
            PolicyMode::Fixed(p) => draw(&p.probs[s * na..(s + 1) * na], &mut rng),
        };
        let next = f.truth.row(s, x).sample(&f.states, &mut rng);
        mu = bayes_update(&mu, s, x, next, f)?;
        history.push((s, x));
        counts[s * na + x] += 1;
        if k + 1 == marks[next_mark] {
            let total = (k + 1) as f64;
            let weights = counts.iter().map(|c| *c as f64 / total).collect();
            freq.push((k + 1, JointMeasure { n_states: n, n_actions: na, weights }));
            beliefs.push((k + 1, mu.clone()));
            next_mark += 1;
        }
        s = next;
    }
    Ok(LearningTrace { history, beliefs, freq, seed: opts.seed, generator: GENERATOR })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Identification {
    pub identified: bool,
    /// The pair of band parameters whose kernels differ most, with their
    /// sup-TV distance over the support of `m`.
    pub witness: Option<(usize, usize, f64)>,
}

/// Whether all near-minimizers of `K_Q(m, .)` induce the same kernel (to
/// `tol` in TV) at every state-action cell charged by `m`.
pub fn identification_check(f: &FiniteSMDP, m: &JointMeasure, tol: f64) -> Result<Identification> {
    let band = closest_parameters(m, f, Some(tol))?.argmin;
    if band.len() < 2 {
        return Ok(Identification { identified: true, witness: None });
    }
    let keys = &f.model[band[0]].keys;
    let support: BTreeSet<usize> = (0..m.n_states)
        .flat_map(|s| (0..m.n_actions).map(move |x| (s, x)))
        .filter(|(s, x)| m.get(*s, *x) > 0.0)
        .map(|(s, x)| keys.key(s, x))
        .collect();
    let dense: Vec<Vec<Vec<f64>>> =
        band.iter().map(|t| support.iter().map(|k| f.model[*t].rows[*k].dense(&f.states)).collect()).collect();
    let mut worst: Option<(usize, usize, f64)> = None;
    for i in 0..band.len() {
        for j in i + 1..band.len() {
            let d = dense[i].iter().zip(&dense[j]).map(|(a, b)| tv(a, b)).fold(0.0, f64::max);
            if worst.is_none_or(|w| d > w.2) {
                worst = Some((band[i], band[j], d));
            }
        }
    }
    let identified = worst.is_none_or(|w| w.2 <= tol);
    Ok(Identification { identified, witness: if identified { None } else { worst } })
}
