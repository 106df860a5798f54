//! Searching for and verifying equilibria of a finite SMDP.

use crate::bellman::{correspondence_from_q, mix_kernel, q_values, solve_bellman, solve_bellman_from, MixedKernel};
use crate::discretize::{discretize_smdp, FiniteSMDP, GridSizes, TruncationLadder};
use crate::divergence::{closest_parameters, default_tolerance, weighted_kl, weighted_kl_all};
use crate::learning::Belief;
use crate::model::{AxisLaw, SMDPSpec, Spacing};
use crate::special::norm_cdf;
use crate::stationary::{stationarity_residual, stationary_distribution, JointMeasure, Policy};
use crate::{Error, ExtReal, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::VecDeque;

/// Acceptance thresholds for the three equilibrium conditions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub optimality: f64,
    /// `None` uses [`default_tolerance`] of the minimal divergence.
    pub belief: Option<f64>,
    pub stationarity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { optimality: 1e-6, belief: None, stationarity: 1e-8 }
    }
}

impl Tolerances {
    fn belief_for(&self, min: f64) -> f64 {
        self.belief.unwrap_or_else(|| default_tolerance(min))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveOptions {
    /// Weight on the new stationary measure in `m_{k+1} = (1-l) m_k + l target`.
    pub damping: f64,
    pub tolerances: Tolerances,
    pub max_outer: usize,
    /// Randomized restarts tried when the first run does not converge.
    pub restarts: usize,
    pub seed: u64,
    /// Relative gap under which Q-values count as tied in best responses.
    pub tie_tol: f64,
    /// Every `window` iterations the average of recent targets is tested.
    pub window: usize,
    pub max_stationary_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            damping: 0.5,
            tolerances: Tolerances::default(),
            max_outer: 200,
            restarts: 4,
            seed: 0,
            tie_tol: 1e-9,
            window: 8,
            max_stationary_iter: 1_000_000,
        }
    }
}

impl SolveOptions {
    fn eps_value(&self) -> f64 {
        (self.tolerances.optimality / 4.0).min(self.tie_tol / 4.0)
    }

    fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::Config(format!("damping {} outside (0, 1]", self.damping)));
        }
        if self.max_outer == 0 || self.window == 0 {
            return Err(Error::Config("max_outer and window must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceEntry {
    /// Grid indices of the divergence minimizers at `m_k`.
    pub argmin: Vec<usize>,
    pub policy_hash: u64,
    pub tv_step: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquilibriumReport {
    pub m: JointMeasure,
    pub nu: Belief,
    /// Max over the support of `m` of `max_x' Q(s,x') - Q(s,x)` under `Q_nu`.
    pub optimality_gap: f64,
    /// Max over the support of `nu` of `K(m, theta) - min K(m, .)`.
    pub belief_gap: ExtReal,
    pub stationarity_residual: f64,
    pub kl_min: ExtReal,
    pub tolerances: Tolerances,
    /// Optimal actions per state under `Q_nu`, within the optimality tolerance.
    pub optimal: Vec<Vec<usize>>,
    pub converged: bool,
    pub iterations: usize,
    pub trace: Vec<TraceEntry>,
    /// Whether every iterate had a single divergence minimizer.
    pub singleton_argmin: bool,
    pub restart: usize,
}

impl EquilibriumReport {
    /// Largest gap relative to its tolerance.
    pub fn score(&self) -> f64 {
        let t = &self.tolerances;
        let b = match self.belief_gap {
            ExtReal::Finite(g) => g / t.belief_for(self.kl_min.finite().unwrap_or(0.0)),
            ExtReal::Infinite => f64::INFINITY,
        };
        (self.optimality_gap / t.optimality).max(b).max(self.stationarity_residual / t.stationarity)
    }

    /// Posterior mean of the parameter.
    pub fn theta_mean(&self, f: &FiniteSMDP) -> Vec<f64> {
        self.nu.mean(f)
    }
}

/// FNV-1a over the optimal-action sets.
pub fn policy_hash(sets: &[Vec<usize>]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    let mut eat = |v: u64| {
        for b in v.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
    };
    for set in sets {
        eat(set.len() as u64);
        for x in set {
            eat(*x as u64);
        }
    }
    h
}

/// Recomputes the three equilibrium conditions for `(m, nu)`.
pub fn verify_equilibrium(f: &FiniteSMDP, m: &JointMeasure, nu: &Belief, tol: &Tolerances) -> Result<EquilibriumReport> {
    if m.n_states != f.n_states() || m.n_actions != f.n_actions() {
        return Err(Error::Shape("measure does not match the grid".into()));
    }
    let kernel = mix_kernel(nu, f)?;
    let v = solve_bellman(f, &kernel, tol.optimality / 8.0)?;
    let q = q_values(f, &kernel, &v);
    let na = f.n_actions();
    let mut optimality_gap = 0.0f64;
    for s in 0..f.n_states() {
        let row = &q[s * na..(s + 1) * na];
        let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for x in 0..na {
            if m.get(s, x) > 0.0 {
                optimality_gap = optimality_gap.max(best - row[x]);
            }
        }
    }
    let optimal = correspondence_from_q(&q, na, tol.optimality).actions;

    let values = weighted_kl_all(m, f)?;
    let kl_min = values.iter().copied().fold(ExtReal::Infinite, ExtReal::min);
    let mut belief_gap = ExtReal::ZERO;
    for (t, w) in nu.weights.iter().enumerate() {
        if *w > 0.0 {
            let g = match kl_min {
                ExtReal::Finite(k) => values[t].minus(k),
                ExtReal::Infinite => ExtReal::Infinite,
            };
            belief_gap = belief_gap.max(g);
        }
    }
    let stat = stationarity_residual(f, m, &MixedKernel::truth(f))?;
    let converged = optimality_gap <= tol.optimality
        && stat <= tol.stationarity
        && match (belief_gap, kl_min) {
            (ExtReal::Finite(g), ExtReal::Finite(k)) => g <= tol.belief_for(k),
            _ => false,
        };
    Ok(EquilibriumReport {
        m: m.clone(),
        nu: nu.clone(),
        optimality_gap,
        belief_gap,
        stationarity_residual: stat,
        kl_min,
        tolerances: *tol,
        optimal,
        converged,
        iterations: 0,
        trace: Vec::new(),
        singleton_argmin: false,
        restart: 0,
    })
}

fn band_belief(f: &FiniteSMDP, m: &JointMeasure, tol: &Tolerances) -> Result<(Vec<usize>, Belief)> {
    let band = closest_parameters(m, f, tol.belief)?.argmin;
    let nu = Belief::uniform_on(f.n_params(), &band);
    Ok((band, nu))
}

fn random_measure(f: &FiniteSMDP, rng: &mut ChaCha8Rng) -> JointMeasure {
    // Exponential weights give a uniform draw from the simplex.
    let mut w: Vec<f64> = (0..f.n_states() * f.n_actions()).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let sum: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= sum);
    JointMeasure { n_states: f.n_states(), n_actions: f.n_actions(), weights: w }
}

/// Pure lowest-index best response to `rho U(a) + (1 - rho) U(b)`.
fn best_response(
    f: &FiniteSMDP,
    opts: &SolveOptions,
    a: &[usize],
    b: &[usize],
    rho: f64,
    warm: &mut Option<Vec<f64>>,
) -> Result<(Belief, Vec<usize>)> {
    let mut w = vec![0.0; f.n_params()];
    for t in a {
        w[*t] += rho / a.len() as f64;
    }
    for t in b {
        w[*t] += (1.0 - rho) / b.len() as f64;
    }
    let nu = Belief { weights: w };
    let kernel = mix_kernel(&nu, f)?;
    let v = solve_bellman_from(f, &kernel, opts.eps_value(), warm.as_deref())?;
    let q = q_values(f, &kernel, &v);
    let scale = v.values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    *warm = Some(v.values);
    Ok((nu, correspondence_from_q(&q, f.n_actions(), opts.tie_tol * (1.0 + scale)).first()))
}

/// Divergence of `m` from band `a` minus from band `b` (band averages).
fn band_difference(f: &FiniteSMDP, m: &JointMeasure, a: &[usize], b: &[usize]) -> Result<f64> {
    let mean = |set: &[usize]| -> Result<f64> {
        let mut sum = 0.0;
        for t in set {
            sum += weighted_kl(m, *t, f)?.finite().unwrap_or(f64::INFINITY);
        }
        Ok(sum / set.len() as f64)
    };
    Ok(mean(a)? - mean(b)?)
}

/// When best responses alternate between bands `a` and `b` (the response to
/// `a` favours `b` and vice versa), looks for an equilibrium with a belief
/// mixing the two bands. Bisection on the mixing weight locates the belief at
/// which the best response switches; a second bisection mixes the two
/// adjacent policies until both bands fit equally well.
fn two_band_candidate(f: &FiniteSMDP, opts: &SolveOptions, a: &[usize], b: &[usize]) -> Result<Option<EquilibriumReport>> {
    let truth = MixedKernel::truth(f);
    let tol = &opts.tolerances;
    let na = f.n_actions();
    let stationary = |p: &Policy| -> Result<JointMeasure> {
        Ok(stationary_distribution(f, &truth, p, None, tol.stationarity / 4.0, opts.max_stationary_iter)?.measure)
    };
    let pure = |x: &[usize]| Policy::pure(na, x);
    let mut warm = None;
    let (_, mut p_hi) = best_response(f, opts, a, b, 1.0, &mut warm)?;
    let (_, mut p_lo) = best_response(f, opts, a, b, 0.0, &mut warm)?;
    let d_hi = band_difference(f, &stationary(&pure(&p_hi))?, a, b)?;
    let d_lo = band_difference(f, &stationary(&pure(&p_lo))?, a, b)?;
    if !(d_hi > 0.0 && d_lo < 0.0) {
        return Ok(None);
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > 1e-14 && p_lo != p_hi {
        let mid = 0.5 * (lo + hi);
        let (_, p) = best_response(f, opts, a, b, mid, &mut warm)?;
        let d = band_difference(f, &stationary(&pure(&p))?, a, b)?;
        if d > 0.0 {
            hi = mid;
            p_hi = p;
        } else {
            lo = mid;
            p_lo = p;
        }
    }
    let (nu, _) = best_response(f, opts, a, b, 0.5 * (lo + hi), &mut warm)?;
    let mixed = |w: f64| {
        let mut probs = vec![0.0; f.n_states() * na];
        for s in 0..f.n_states() {
            probs[s * na + p_lo[s]] += 1.0 - w;
            probs[s * na + p_hi[s]] += w;
        }
        Policy { n_states: f.n_states(), n_actions: na, probs }
    };
    let (mut wl, mut wh) = (0.0f64, 1.0f64);
    let mut m = stationary(&mixed(0.5))?;
    for _ in 0..64 {
        let w = 0.5 * (wl + wh);
        m = stationary(&mixed(w))?;
        let d = band_difference(f, &m, a, b)?;
        if d.abs() <= 1e-3 * tol.belief_for(0.0) {
            break;
        }
        if d > 0.0 {
            wh = w;
        } else {
            wl = w;
        }
    }
    Ok(Some(verify_equilibrium(f, &m, &nu, tol)?))
}

struct Search<'a> {
    f: &'a FiniteSMDP,
    opts: &'a SolveOptions,
    best: Option<EquilibriumReport>,
}

impl Search<'_> {
    /// Keeps the better of the current best and `rep`; true if `rep` converged.
    fn offer(&mut self, rep: EquilibriumReport) -> bool {
        let done = rep.converged;
        if self.best.as_ref().is_none_or(|b| rep.score() < b.score()) {
            self.best = Some(rep);
        }
        done
    }

    fn run(mut self, restart: usize) -> Result<EquilibriumReport> {
        let (f, opts) = (self.f, self.opts);
        let tol = &opts.tolerances;
        let truth = MixedKernel::truth(f);
        let eps_v = opts.eps_value();
        let mut m = if restart == 0 {
            let uniform = Policy::uniform(f.n_states(), f.n_actions());
            stationary_distribution(f, &truth, &uniform, None, tol.stationarity, opts.max_stationary_iter)?.measure
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ (restart as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            random_measure(f, &mut rng)
        };
        let mut warm: Option<Vec<f64>> = None;
        let mut marginal: Option<Vec<f64>> = None;
        let mut window: VecDeque<JointMeasure> = VecDeque::new();
        let mut trace = Vec::new();
        let finish = |mut rep: EquilibriumReport, trace: &Vec<TraceEntry>| {
            rep.iterations = trace.len();
            rep.singleton_argmin = trace.iter().all(|e: &TraceEntry| e.argmin.len() == 1);
            rep.trace = trace.clone();
            rep.restart = restart;
            rep
        };
        for _ in 0..opts.max_outer {
            let (band, nu) = band_belief(f, &m, tol)?;
            let kernel = mix_kernel(&nu, f)?;
            let v = solve_bellman_from(f, &kernel, eps_v, warm.as_deref())?;
            let q = q_values(f, &kernel, &v);
            let scale = v.values.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            let corr = correspondence_from_q(&q, f.n_actions(), opts.tie_tol * (1.0 + scale));
            warm = Some(v.values);
            let policy = Policy::uniform_over(f.n_actions(), &corr.actions);
            let st = stationary_distribution(f, &truth, &policy, marginal.as_deref(), tol.stationarity / 4.0, opts.max_stationary_iter)?;
            let target = st.measure;
            marginal = Some(target.marginal());

            let next = m.mix(&target, opts.damping);
            trace.push(TraceEntry { argmin: band.clone(), policy_hash: policy_hash(&corr.actions), tv_step: next.tv(&m) });

            // The best response is itself an equilibrium when it keeps the band.
            let (tband, _) = band_belief(f, &target, tol)?;
            if tband == band {
                let rep = verify_equilibrium(f, &target, &nu, tol)?;
                if self.offer(finish(rep, &trace)) {
                    break;
                }
            }
            window.push_back(target);
            if window.len() > opts.window {
                window.pop_front();
            }
            if trace.len() % opts.window == 0 && window.len() == opts.window {
                let mut avg = window[0].clone();
                for (i, w) in window.iter().enumerate().skip(1) {
                    avg = avg.mix(w, 1.0 / (i + 1) as f64);
                }
                let (_, anu) = band_belief(f, &avg, tol)?;
                let rep = verify_equilibrium(f, &avg, &anu, tol)?;
                if self.offer(finish(rep, &trace)) {
                    break;
                }
            }
            // Two bands taking turns over a whole window.
            if trace.len() % opts.window == 0 && trace.len() >= opts.window {
                let recent = &trace[trace.len() - opts.window..];
                let mut bands: Vec<&Vec<usize>> = recent.iter().map(|e| &e.argmin).collect();
                bands.sort();
                bands.dedup();
                if bands.len() == 2 {
                    let (a, b) = (&band, if *bands[0] == band { bands[1] } else { bands[0] });
                    if let Some(rep) = two_band_candidate(f, opts, a, b)? {
                        if self.offer(finish(rep, &trace)) {
                            break;
                        }
                    }
                }
            }
            let step = trace.last().map_or(f64::INFINITY, |e| e.tv_step);
            m = next;
            if step <= tol.stationarity {
                let (_, mnu) = band_belief(f, &m, tol)?;
                let rep = verify_equilibrium(f, &m, &mnu, tol)?;
                if self.offer(finish(rep, &trace)) {
                    break;
                }
            }
        }
        let mut best = match self.best {
            Some(b) => b,
            None => {
                let (_, nu) = band_belief(f, &m, tol)?;
                finish(verify_equilibrium(f, &m, &nu, tol)?, &trace)
            }
        };
        // Report the whole run's trace, whichever candidate won.
        best.iterations = trace.len();
        best.singleton_argmin = trace.iter().all(|e| e.argmin.len() == 1);
        best.trace = trace;
        Ok(best)
    }
}

/// Damped best-response search. The first run starts from the stationary
/// measure of the uniform policy; if it does not converge, `restarts` runs
/// from seeded random measures follow in parallel. Returns the candidate with
/// the smallest relative gap (ties go to the earlier run).
pub fn solve_berk_nash(f: &FiniteSMDP, opts: &SolveOptions) -> Result<EquilibriumReport> {
    opts.validate()?;
    let first = Search { f, opts, best: None }.run(0)?;
    if first.converged || opts.restarts == 0 {
        return Ok(first);
    }
    let others: Vec<EquilibriumReport> =
        (1..=opts.restarts).into_par_iter().map(|r| Search { f, opts, best: None }.run(r)).collect::<Result<_>>()?;
    let mut best = first;
    for rep in others {
        if (rep.converged && !best.converged) || (rep.converged == best.converged && rep.score() < best.score()) {
            best = rep;
        }
    }
    Ok(best)
}

/// Norm-like function for [`lyapunov_check`].
#[derive(Clone, Debug, PartialEq)]
pub enum Lyapunov {
    /// The state axis norm: `|s|`, or `|ln s|` on log-spaced axes.
    AbsNorm,
    /// Piecewise linear through `(s, V(s))` points, constant beyond the ends.
    Tabulated(Vec<(f64, f64)>),
}

impl Lyapunov {
    fn eval(&self, spec: &SMDPSpec, s: f64) -> f64 {
        match self {
            Lyapunov::AbsNorm => spec.state_axes[0].norm(s),
            Lyapunov::Tabulated(pts) => {
                if s <= pts[0].0 {
                    return pts[0].1;
                }
                for w in pts.windows(2) {
                    if s <= w[1].0 {
                        let t = (s - w[0].0) / (w[1].0 - w[0].0);
                        return w[0].1 + t * (w[1].1 - w[0].1);
                    }
                }
                pts[pts.len() - 1].1
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LyapunovResult {
    /// `V` decays at rate at least `alpha` away from a bounded set.
    pub alpha: f64,
    pub beta: f64,
    pub pass: bool,
    /// `(s, x, E[V(s')] / V(s))` at the sample with the largest drift ratio.
    pub witness: Option<(f64, f64, f64)>,
}

/// `E|N(mu, sd^2)|`.
fn folded_normal_mean(mu: f64, sd: f64) -> f64 {
    if sd == 0.0 {
        return mu.abs();
    }
    sd * (2.0 / std::f64::consts::PI).sqrt() * (-mu * mu / (2.0 * sd * sd)).exp() + mu * (1.0 - 2.0 * norm_cdf(-mu / sd))
}

const QUAD_CELLS: usize = 4000;

fn drift(spec: &SMDPSpec, v: &Lyapunov, s: f64, x: f64) -> Result<f64> {
    let axis = &spec.state_axes[0];
    let law = spec.true_kernel.laws(None, &[s], x)?.remove(0);
    if let (Lyapunov::AbsNorm, AxisLaw::Normal { mean, sd }, Spacing::Linear) = (v, &law, axis.spacing) {
        return Ok(folded_normal_mean(*mean, *sd));
    }
    let (lo, hi, log) = match &law {
        AxisLaw::Normal { mean, sd } => (mean - 12.0 * sd, mean + 12.0 * sd, false),
        AxisLaw::LogNormal { mu, sigma } => ((mu - 12.0 * sigma).exp(), (mu + 12.0 * sigma).exp(), true),
        AxisLaw::TruncExp { bound, scale, .. } => (0.0, bound * scale, false),
        AxisLaw::Uniform { lo, hi } => (*lo, *hi, false),
        AxisLaw::Table(p) => (0.0, p.len() as f64, false),
    };
    if !(hi > lo) {
        // Point mass.
        return Ok(v.eval(spec, lo));
    }
    let edge = |i: usize| {
        let t = i as f64 / QUAD_CELLS as f64;
        if log {
            (lo.ln() + t * (hi.ln() - lo.ln())).exp()
        } else {
            lo + t * (hi - lo)
        }
    };
    let mut total = 0.0;
    let mut mass = 0.0;
    for i in 0..QUAD_CELLS {
        let (a, b) = (edge(i), edge(i + 1));
        let p = law.mass(a, b)?;
        total += p * v.eval(spec, 0.5 * (a + b));
        mass += p;
    }
    Ok(total / mass)
}

/// Fits `E[V(s') | s, x] <= (1 - alpha) V(s) + beta` over the samples: the
/// slope `1 - alpha` is the largest drift ratio among samples with `V` at
/// least half its sampled maximum, and `beta` is the smallest intercept that
/// covers every sample. Passes iff `alpha` lies in `(0, 1]`.
pub fn lyapunov_check(spec: &SMDPSpec, v: &Lyapunov, states: &[f64], actions: &[f64]) -> Result<LyapunovResult> {
    if states.is_empty() || actions.is_empty() {
        return Err(Error::Domain("empty sample set".into()));
    }
    if spec.state_dim() != 1 {
        return Err(Error::Unsupported("the Lyapunov check handles one-dimensional states".into()));
    }
    if matches!(v, Lyapunov::Tabulated(p) if p.is_empty()) {
        return Err(Error::Domain("empty tabulated Lyapunov function".into()));
    }
    let mut samples = Vec::with_capacity(states.len() * actions.len());
    for s in states {
        for x in actions {
            samples.push((*s, *x, v.eval(spec, *s), drift(spec, v, *s, *x)?));
        }
    }
    let vmax = samples.iter().fold(0.0f64, |m, t| m.max(t.2));
    let mut kappa = f64::NEG_INFINITY;
    let mut witness = None;
    for (s, x, vs, d) in &samples {
        if *vs > 0.0 && *vs >= 0.5 * vmax {
            let r = d / vs;
            if r > kappa {
                kappa = r;
                witness = Some((*s, *x, r));
            }
        }
    }
    if !kappa.is_finite() {
        return Err(Error::Domain("V vanishes on every sample".into()));
    }
    let kappa = kappa.max(0.0);
    let beta = samples.iter().fold(0.0f64, |b, (_, _, vs, d)| b.max(d - kappa * vs));
    let alpha = 1.0 - kappa;
    let pass = alpha > 0.0 && alpha <= 1.0;
    Ok(LyapunovResult { alpha, beta, pass, witness: if pass { None } else { witness } })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LadderOptions {
    pub solve: SolveOptions,
    /// Share of cells at each end of an unbounded axis counted as boundary.
    pub boundary_fraction: f64,
    pub escape_threshold: f64,
    /// Escape is also declared when the top level keeps less than this share
    /// of the first level's mass on the first level's box.
    pub retention: f64,
}

impl Default for LadderOptions {
    fn default() -> Self {
        LadderOptions { solve: SolveOptions::default(), boundary_fraction: 0.05, escape_threshold: 0.1, retention: 0.5 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    EquilibriumFound,
    MassEscape,
    /// No escape detected, but the top-level search did not converge.
    Unconverged,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::EquilibriumFound => "equilibrium-found",
            Verdict::MassEscape => "mass-escape",
            Verdict::Unconverged => "unconverged",
        })
    }
}

#[derive(Clone, Debug)]
pub struct LadderLevel {
    pub bounds: Vec<(f64, f64)>,
    pub states: Vec<usize>,
    pub report: EquilibriumReport,
    pub boundary_mass: f64,
    /// Stationary mass on the first level's box.
    pub inner_mass: f64,
}

#[derive(Clone, Debug)]
pub struct LadderDiagnosis {
    pub levels: Vec<LadderLevel>,
    pub verdict: Verdict,
}

/// Cell counts at a level, keeping the first level's cell width on
/// truncated axes.
fn level_sizes(spec: &SMDPSpec, first: &[(f64, f64)], level: &[(f64, f64)], base: &[usize]) -> Vec<usize> {
    (0..base.len())
        .map(|i| {
            if spec.state_axes[i].is_bounded() {
                return base[i];
            }
            let width = |b: (f64, f64)| match spec.state_axes[i].spacing {
                Spacing::Log => b.1.ln() - b.0.ln(),
                _ => b.1 - b.0,
            };
            ((base[i] as f64) * width(level[i]) / width(first[i])).round().max(1.0) as usize
        })
        .collect()
}

fn boundary_mass(f: &FiniteSMDP, marginal: &[f64], fraction: f64) -> f64 {
    let dims = f.states.dims();
    let band: Vec<usize> = dims.iter().map(|n| ((fraction * *n as f64).ceil() as usize).max(1)).collect();
    let truncated: Vec<bool> = f.spec.state_axes.iter().map(|a| !a.is_bounded()).collect();
    (0..f.n_states())
        .filter(|s| {
            let multi = f.states.unflatten(*s);
            (0..dims.len()).any(|k| truncated[k] && (multi[k] < band[k] || multi[k] >= dims[k] - band[k]))
        })
        .map(|s| marginal[s])
        .sum()
}

/// Solves each level of `ladder` and decides whether the stationary mass
/// stays put or escapes to the truncation boundary. `sizes.states` are the
/// cell counts at the first level.
pub fn ladder_diagnose(spec: &SMDPSpec, ladder: &TruncationLadder, sizes: &GridSizes, opts: &LadderOptions) -> Result<LadderDiagnosis> {
    if ladder.levels.is_empty() {
        return Err(Error::Domain("empty ladder".into()));
    }
    let first = &ladder.levels[0];
    let mut levels = Vec::new();
    for bounds in &ladder.levels {
        let states = level_sizes(spec, first, bounds, &sizes.states);
        let f = discretize_smdp(spec, bounds, &GridSizes { states: states.clone(), ..sizes.clone() })?;
        let report = solve_berk_nash(&f, &opts.solve)?;
        let marginal = report.m.marginal();
        let boundary = boundary_mass(&f, &marginal, opts.boundary_fraction);
        let inner = (0..f.n_states())
            .filter(|s| f.states.center(*s).iter().zip(first).all(|(c, (lo, hi))| c >= lo && c <= hi))
            .map(|s| marginal[s])
            .sum();
        levels.push(LadderLevel { bounds: bounds.clone(), states, report, boundary_mass: boundary, inner_mass: inner });
    }
    let top = &levels[levels.len() - 1];
    let escape = if levels.len() < 2 {
        false
    } else {
        let rising = levels.windows(2).all(|w| w[1].boundary_mass >= w[0].boundary_mass);
        let fleeing = top.inner_mass < opts.retention * levels[0].inner_mass;
        (rising && top.boundary_mass > opts.escape_threshold) || fleeing
    };
    let verdict = if escape {
        Verdict::MassEscape
    } else if top.report.converged {
        Verdict::EquilibriumFound
    } else {
        Verdict::Unconverged
    };
    Ok(LadderDiagnosis { levels, verdict })
}
