//! Value iteration under a mixture of model kernels.

use crate::discretize::{FiniteSMDP, Row, Transition};
use crate::learning::Belief;
use crate::model::Growth;
use crate::{Error, Result};
use rayon::prelude::*;

/// Sweeps of growing sup-change tolerated before giving up.
const DIVERGENCE_RUN: usize = 10;

/// `sum_c w_c Q_c`: a weighted mixture of grid kernels, kept lazily.
#[derive(Clone, Debug)]
pub struct MixedKernel<'a> {
    pub components: Vec<(f64, &'a Transition)>,
}

impl<'a> MixedKernel<'a> {
    pub fn truth(f: &'a FiniteSMDP) -> Self {
        MixedKernel { components: vec![(1.0, &f.truth)] }
    }

    pub fn model(f: &'a FiniteSMDP, t: usize) -> Self {
        MixedKernel { components: vec![(1.0, &f.model[t])] }
    }

    pub fn rows(&self, s: usize, x: usize) -> Vec<(f64, &'a Row)> {
        self.components.iter().map(|(w, tr)| (*w, tr.row(s, x))).collect()
    }

    pub fn prob(&self, f: &FiniteSMDP, s: usize, x: usize, next: usize) -> f64 {
        let multi = f.states.unflatten(next);
        self.components.iter().map(|(w, tr)| w * tr.row(s, x).prob(&multi)).sum()
    }

    /// The full row `Q(. | s, x)` over the grid.
    pub fn dense_row(&self, f: &FiniteSMDP, s: usize, x: usize) -> Vec<f64> {
        let mut out = vec![0.0; f.n_states()];
        for (w, tr) in &self.components {
            tr.row(s, x).scatter(&f.states, *w, &mut out);
        }
        out
    }
}

/// `Q_nu = sum_theta nu(theta) Q_theta`. Parameters with zero weight are skipped.
pub fn mix_kernel<'a>(nu: &Belief, f: &'a FiniteSMDP) -> Result<MixedKernel<'a>> {
    if nu.weights.len() != f.n_params() {
        return Err(Error::Shape(format!("belief over {} parameters, grid has {}", nu.weights.len(), f.n_params())));
    }
    let sum: f64 = nu.weights.iter().sum();
    if (sum - 1.0).abs() > 1e-10 {
        return Err(Error::Domain(format!("belief sums to {sum}")));
    }
    let components = nu.weights.iter().zip(&f.model).filter(|(w, _)| **w > 0.0).map(|(w, tr)| (*w, tr)).collect();
    Ok(MixedKernel { components })
}

/// `|V(s)| <= intercept + slope * norm(s)` on the grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrowthCertificate {
    pub intercept: f64,
    pub slope: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValueFunction {
    pub values: Vec<f64>,
    /// Sup-norm change of the last sweep.
    pub sup_residual: f64,
    pub iterations: usize,
    /// Linear growth envelope, for state-bounded payoffs.
    pub growth: Option<GrowthCertificate>,
}

/// Expected one-period payoff `r(s, x)` under `kernel`.
pub fn expected_payoffs(f: &FiniteSMDP, kernel: &MixedKernel) -> Vec<f64> {
    let na = f.n_actions();
    (0..f.n_states() * na)
        .into_par_iter()
        .map(|i| f.expected_payoff(i / na, i % na, &kernel.rows(i / na, i % na)))
        .collect()
}

fn continuation(f: &FiniteSMDP, kernel: &MixedKernel, v: &[f64]) -> Vec<Vec<f64>> {
    kernel.components.iter().map(|(_, tr)| tr.rows.par_iter().map(|r| r.expect(&f.states, v)).collect()).collect()
}

/// `Q(s, x) = r(s, x) + delta sum_c w_c E_c[V]`.
fn fill_q(f: &FiniteSMDP, kernel: &MixedKernel, r: &[f64], ev: &[Vec<f64>], s: usize, out: &mut [f64]) {
    let na = f.n_actions();
    for (x, q) in out.iter_mut().enumerate() {
        let mut cont = 0.0;
        for ((w, tr), e) in kernel.components.iter().zip(ev) {
            cont += w * e[tr.keys.key(s, x)];
        }
        *q = r[s * na + x] + f.discount * cont;
    }
}

/// Value iteration from `V = 0` until the sup-change is at most
/// `eps_v (1 - delta) / (2 delta)`, so that `|V - V*| <= eps_v`.
pub fn solve_bellman(f: &FiniteSMDP, kernel: &MixedKernel, eps_v: f64) -> Result<ValueFunction> {
    solve_bellman_from(f, kernel, eps_v, None)
}

/// [`solve_bellman`] started from `init`.
pub fn solve_bellman_from(f: &FiniteSMDP, kernel: &MixedKernel, eps_v: f64, init: Option<&[f64]>) -> Result<ValueFunction> {
    if !(eps_v > 0.0) {
        return Err(Error::Domain(format!("value tolerance {eps_v} must be positive")));
    }
    let delta = f.discount;
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::Domain(format!("discount {delta} is outside [0, 1)")));
    }
    let n = f.n_states();
    let na = f.n_actions();
    let threshold = if delta == 0.0 { f64::INFINITY } else { eps_v * (1.0 - delta) / (2.0 * delta) };
    let r = expected_payoffs(f, kernel);
    let mut v = match init {
        Some(v0) if v0.len() == n => v0.to_vec(),
        Some(v0) => return Err(Error::Shape(format!("initial value has {} entries for {n} states", v0.len()))),
        None => vec![0.0; n],
    };
    let mut prev_change = f64::INFINITY;
    let mut growing = 0;
    let mut iterations = 0;
    loop {
        iterations += 1;
        let ev = continuation(f, kernel, &v);
        let next: Vec<f64> = (0..n)
            .into_par_iter()
            .map_init(
                || vec![0.0; na],
                |q, s| {
                    fill_q(f, kernel, &r, &ev, s, q);
                    q.iter().copied().fold(f64::NEG_INFINITY, f64::max)
                },
            )
            .collect();
        let change = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let scale = next.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        v = next;
        // Below a few ulps of |V| the change is rounding noise.
        if change <= threshold.max(8.0 * f64::EPSILON * (1.0 + scale)) {
            let growth = certificate(f, &v);
            return Ok(ValueFunction { values: v, sup_residual: change, iterations, growth });
        }
        if !change.is_finite() {
            return Err(Error::ContractionFailure(growing));
        }
        growing = if change > prev_change { growing + 1 } else { 0 };
        if growing >= DIVERGENCE_RUN {
            return Err(Error::ContractionFailure(growing));
        }
        prev_change = change;
    }
}

fn certificate(f: &FiniteSMDP, v: &[f64]) -> Option<GrowthCertificate> {
    let Growth::StateBounded { b, .. } = f.spec.payoff.growth else { return None };
    let slope = b / (1.0 - f.discount);
    let intercept = v
        .iter()
        .enumerate()
        .map(|(s, val)| {
            let norm = f.states.center(s).iter().zip(&f.spec.state_axes).map(|(c, ax)| ax.norm(*c)).fold(0.0, f64::max);
            val.abs() - slope * norm
        })
        .fold(0.0, f64::max);
    Some(GrowthCertificate { intercept, slope })
}

/// `Q(s, x)` for every cell, `index = s * n_actions + x`.
pub fn q_values(f: &FiniteSMDP, kernel: &MixedKernel, v: &ValueFunction) -> Vec<f64> {
    let na = f.n_actions();
    let r = expected_payoffs(f, kernel);
    let ev = continuation(f, kernel, &v.values);
    let mut q = vec![0.0; f.n_states() * na];
    q.par_chunks_mut(na).enumerate().for_each(|(s, out)| fill_q(f, kernel, &r, &ev, s, out));
    q
}

/// Per-state actions whose Q-value is within `gap` of the best.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyCorrespondence {
    pub actions: Vec<Vec<usize>>,
    pub gap: f64,
}

impl PolicyCorrespondence {
    /// Lowest-index optimal action per state.
    pub fn first(&self) -> Vec<usize> {
        self.actions.iter().map(|a| a[0]).collect()
    }
}

pub fn optimal_actions(f: &FiniteSMDP, kernel: &MixedKernel, v: &ValueFunction, gap: f64) -> PolicyCorrespondence {
    correspondence_from_q(&q_values(f, kernel, v), f.n_actions(), gap)
}

pub(crate) fn correspondence_from_q(q: &[f64], na: usize, gap: f64) -> PolicyCorrespondence {
    let actions = q
        .chunks(na)
        .map(|row| {
            let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (0..na).filter(|x| row[*x] >= best - gap).collect()
        })
        .collect();
    PolicyCorrespondence { actions, gap }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{chain, tabulated};

    #[test]
    fn geometric_series() {
        let f = tabulated(1, 1, vec![1.0], vec![vec![1.0]], vec![1.0], 0.9);
        let v = solve_bellman(&f, &MixedKernel::truth(&f), 1e-10).unwrap();
        assert!((v.values[0] - 10.0).abs() <= 1e-10);
    }

    #[test]
    fn zero_payoff_is_zero_in_one_sweep() {
        let f = chain(&[&[0.9, 0.1], &[0.2, 0.8]]);
        let v = solve_bellman(&f, &MixedKernel::truth(&f), 1e-9).unwrap();
        assert_eq!(v.values, vec![0.0, 0.0]);
        assert_eq!(v.iterations, 1);
        assert_eq!(optimal_actions(&f, &MixedKernel::truth(&f), &v, 0.0).first(), vec![0, 0]);
    }

    #[test]
    fn mixture_of_tables() {
        // Two models over two states and one action.
        let a = vec![1.0, 0.0, 0.0, 1.0];
        let b = vec![0.5, 0.5, 0.5, 0.5];
        let f = tabulated(2, 1, a.clone(), vec![a.clone(), b], vec![0.0; 4], 0.5);
        let point = mix_kernel(&Belief::point(2, 0), &f).unwrap();
        assert_eq!(point.components.len(), 1);
        assert_eq!(point.dense_row(&f, 0, 0), vec![1.0, 0.0]);
        let half = mix_kernel(&Belief::uniform(2), &f).unwrap();
        assert_eq!(half.dense_row(&f, 1, 0), vec![0.25, 0.75]);
        assert!((half.prob(&f, 0, 0, 1) - 0.25).abs() < 1e-15);
        assert!(matches!(mix_kernel(&Belief::uniform(3), &f), Err(Error::Shape(_))));
    }

    #[test]
    fn two_action_choice() {
        // Action 1 pays 1 now and moves to the absorbing state 1 that pays 0;
        // action 0 pays 0.6 forever at state 0.
        let truth = vec![
            1.0, 0.0, 0.0, 1.0, //
            0.0, 1.0, 0.0, 1.0,
        ];
        let pay = vec![0.6, 0.6, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        let f = tabulated(2, 2, truth.clone(), vec![truth], pay, 0.5);
        let k = MixedKernel::truth(&f);
        let v = solve_bellman(&f, &k, 1e-12).unwrap();
        assert!((v.values[0] - 1.2).abs() < 1e-12 && v.values[1].abs() < 1e-12);
        let opt = optimal_actions(&f, &k, &v, 1e-9);
        assert_eq!(opt.actions, vec![vec![0], vec![0, 1]]);
        let q = q_values(&f, &k, &v);
        assert!((q[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bad_tolerance_is_domain_error() {
        let f = chain(&[&[1.0]]);
        assert!(matches!(solve_bellman(&f, &MixedKernel::truth(&f), 0.0), Err(Error::Domain(_))));
    }
}
