//! Truncation ladders and finite approximations of continuous SMDPs.
//!
//! Kernels are restricted to a compact level box and renormalized by the mass
//! they put on it. State cells partition the box; cell probabilities are exact
//! CDF differences. A transition is stored once per distinct *dependency key*
//! (the state axes and action the kernel actually reads), as a product of
//! per-axis probability windows.

use crate::model::{AxisLaw, KernelSpec, PayoffKind, SMDPSpec, Spacing};
use crate::{Error, ExtReal, Result};
use rand::Rng;
use rayon::prelude::*;
use std::sync::Arc;

/// Entries below this at the ends of a row window are dropped.
const TRIM: f64 = 1e-14;
/// Below this, probabilities are recomputed in log scale.
const TINY: f64 = 1e-280;

#[derive(Clone, Debug, PartialEq)]
pub struct TruncationLadder {
    /// Nested level boxes, one interval per state axis.
    pub levels: Vec<Vec<(f64, f64)>>,
    /// Smallest kernel mass of a level box seen on the check grid.
    pub min_kernel_mass: f64,
    /// `ln` of `min_kernel_mass`, kept separately because it may underflow.
    pub log_min_kernel_mass: f64,
}

/// Points at which [`truncation_bounds`] checks kernel masses.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckGrid {
    pub states_per_axis: usize,
    pub actions: usize,
    pub params_per_axis: usize,
}

impl Default for CheckGrid {
    fn default() -> Self {
        CheckGrid { states_per_axis: 21, actions: 11, params_per_axis: 5 }
    }
}

/// The level box of radius `radius`: `{norm(s) <= radius}` on unbounded axes,
/// the declared bounds on bounded ones.
pub fn level_box(spec: &SMDPSpec, radius: f64) -> Vec<(f64, f64)> {
    spec.state_axes.iter().map(|a| a.level_interval(radius)).collect()
}

/// Builds levels `{norm(s) <= base_radius * k}` and checks that every kernel
/// puts positive mass on each level at every check point.
pub fn truncation_bounds(spec: &SMDPSpec, n_levels: usize, base_radius: f64, check: &CheckGrid) -> Result<TruncationLadder> {
    spec.validate()?;
    if !(base_radius > 0.0) {
        return Err(Error::Domain(format!("base radius {base_radius} must be positive")));
    }
    if n_levels == 0 {
        return Err(Error::Domain("at least one level is required".into()));
    }
    let compact = spec.state_axes.iter().all(|a| a.is_bounded());
    let levels: Vec<Vec<(f64, f64)>> = if compact {
        vec![level_box(spec, base_radius)]
    } else {
        (1..=n_levels).map(|k| level_box(spec, base_radius * k as f64)).collect()
    };
    let actions = spec.actions.grid(check.actions);
    let pcounts = vec![check.params_per_axis; spec.params.dim()];
    let params = ParamGrid::new(spec, &param_axes(spec, &pcounts))?;

    let mut min_log = 0.0f64;
    for (li, level) in levels.iter().enumerate() {
        let axes: Vec<Vec<f64>> = level.iter().map(|(lo, hi)| Spacing::Linear.points(*lo, *hi, check.states_per_axis)).collect();
        let mut idx = vec![0usize; axes.len()];
        loop {
            let s: Vec<f64> = idx.iter().zip(&axes).map(|(i, a)| a[*i]).collect();
            for &x in &actions {
                let mut kernels: Vec<(&KernelSpec, Option<&[f64]>)> = vec![(&spec.true_kernel, None)];
                kernels.extend(params.points.iter().map(|p| (&spec.model_family, Some(p.as_slice()))));
                for (k, theta) in kernels {
                    let laws = k.laws(theta, &s, x)?;
                    let mut lm = 0.0;
                    for (law, (lo, hi)) in laws.iter().zip(level) {
                        lm += law.log_mass(*lo, *hi)?;
                    }
                    if lm == f64::NEG_INFINITY || lm.is_nan() {
                        return Err(Error::TruncationFailure { level: li + 1, state: s.clone(), action: x });
                    }
                    min_log = min_log.min(lm);
                }
            }
            if !advance(&mut idx, &axes.iter().map(Vec::len).collect::<Vec<_>>()) {
                break;
            }
        }
    }
    Ok(TruncationLadder { levels, min_kernel_mass: min_log.exp(), log_min_kernel_mass: min_log })
}

/// Increments a mixed-radix counter, last digit fastest. Returns false on wrap.
fn advance(idx: &mut [usize], dims: &[usize]) -> bool {
    for k in (0..idx.len()).rev() {
        idx[k] += 1;
        if idx[k] < dims[k] {
            return true;
        }
        idx[k] = 0;
    }
    false
}

/// `(lo, hi, n)` per parameter axis over the whole parameter box.
pub fn param_axes(spec: &SMDPSpec, counts: &[usize]) -> Vec<(f64, f64, usize)> {
    spec.params.lo.iter().zip(&spec.params.hi).zip(counts).map(|((l, h), n)| (*l, *h, *n)).collect()
}

/// Cell layout of one state axis.
#[derive(Clone, Debug, PartialEq)]
pub struct AxisGrid {
    pub edges: Vec<f64>,
    pub centers: Vec<f64>,
}

impl AxisGrid {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Index of the cell containing `v`, clamped to the grid.
    pub fn locate(&self, v: f64) -> usize {
        let n = self.len();
        let i = self.edges.partition_point(|e| *e <= v);
        i.saturating_sub(1).min(n - 1)
    }
}

/// Product grid of state cells, flattened row-major (last axis fastest).
#[derive(Clone, Debug, PartialEq)]
pub struct StateGrid {
    pub axes: Vec<AxisGrid>,
    pub strides: Vec<usize>,
}

impl StateGrid {
    fn new(axes: Vec<AxisGrid>) -> Self {
        let mut strides = vec![1; axes.len()];
        for k in (0..axes.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * axes[k + 1].len();
        }
        StateGrid { axes, strides }
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(AxisGrid::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dims(&self) -> Vec<usize> {
        self.axes.iter().map(AxisGrid::len).collect()
    }

    pub fn unflatten(&self, s: usize) -> Vec<usize> {
        self.strides.iter().zip(&self.axes).map(|(st, a)| (s / st) % a.len()).collect()
    }

    pub fn index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn center(&self, s: usize) -> Vec<f64> {
        self.unflatten(s).iter().zip(&self.axes).map(|(i, a)| a.centers[*i]).collect()
    }

    pub fn cell(&self, s: usize) -> Vec<(f64, f64)> {
        self.unflatten(s).iter().zip(&self.axes).map(|(i, a)| (a.edges[*i], a.edges[*i + 1])).collect()
    }

    /// Flat index of the cell containing `point` (clamped).
    pub fn locate(&self, point: &[f64]) -> usize {
        let multi: Vec<usize> = self.axes.iter().zip(point).map(|(a, v)| a.locate(*v)).collect();
        self.index(&multi)
    }
}

/// Parameter grid: the product of per-axis points, first axis slowest.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamGrid {
    pub axes: Vec<Vec<f64>>,
    pub points: Vec<Vec<f64>>,
    /// Axes on which nonpositive grid values were moved to the smallest
    /// positive grid value (and merged), to keep kernels nondegenerate.
    pub adjusted_axes: Vec<usize>,
}

impl ParamGrid {
    pub fn new(spec: &SMDPSpec, axes: &[(f64, f64, usize)]) -> Result<ParamGrid> {
        if axes.len() != spec.params.dim() {
            return Err(Error::Shape(format!("{} parameter grid axes for a {}-dimensional parameter", axes.len(), spec.params.dim())));
        }
        let positive = spec.model_family.positive_params();
        let mut out = Vec::with_capacity(axes.len());
        let mut adjusted = Vec::new();
        for (k, &(lo, hi, n)) in axes.iter().enumerate() {
            if n == 0 {
                return Err(Error::Domain(format!("parameter axis {k} has no grid points")));
            }
            if lo < spec.params.lo[k] - 1e-12 || hi > spec.params.hi[k] + 1e-12 || lo > hi {
                return Err(Error::Domain(format!("parameter grid [{lo}, {hi}] leaves the parameter box on axis {k}")));
            }
            let mut pts = if n == 1 { vec![0.5 * (lo + hi)] } else { Spacing::Linear.points(lo, hi, n) };
            if positive.contains(&k) && pts.iter().any(|p| *p <= 0.0) {
                let smallest = pts.iter().copied().filter(|p| *p > 0.0).fold(f64::INFINITY, f64::min);
                if !smallest.is_finite() {
                    return Err(Error::Domain(format!("parameter axis {k} has no positive grid value")));
                }
                for p in pts.iter_mut().filter(|p| **p <= 0.0) {
                    *p = smallest;
                }
                pts.dedup();
                adjusted.push(k);
            }
            out.push(pts);
        }
        let dims: Vec<usize> = out.iter().map(Vec::len).collect();
        let mut points = Vec::new();
        let mut idx = vec![0; dims.len()];
        loop {
            points.push(idx.iter().zip(&out).map(|(i, a)| a[*i]).collect());
            if !advance(&mut idx, &dims) {
                break;
            }
        }
        Ok(ParamGrid { axes: out, points, adjusted_axes: adjusted })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index of the grid point nearest to `theta` (Euclidean).
    pub fn nearest(&self, theta: &[f64]) -> usize {
        let d = |p: &[f64]| p.iter().zip(theta).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        (0..self.len()).min_by(|i, j| d(&self.points[*i]).total_cmp(&d(&self.points[*j]))).unwrap_or(0)
    }
}

/// Maps `(s, x)` to the row of a kernel that depends only on some state axes
/// and possibly the action.
#[derive(Clone, Debug, PartialEq)]
pub struct KeyMap {
    pub axis_dep: Vec<bool>,
    pub action_dep: bool,
    n_actions: usize,
    state_key: Vec<u32>,
    rep_state: Vec<usize>,
}

impl KeyMap {
    pub fn new(grid: &StateGrid, n_actions: usize, axis_dep: Vec<bool>, action_dep: bool) -> KeyMap {
        let dims = grid.dims();
        let mut dep_strides = vec![0; dims.len()];
        let mut acc = 1;
        for k in (0..dims.len()).rev() {
            if axis_dep[k] {
                dep_strides[k] = acc;
                acc *= dims[k];
            }
        }
        let mut rep_state = vec![usize::MAX; acc];
        let state_key = (0..grid.len())
            .map(|s| {
                let key: usize = grid.unflatten(s).iter().zip(&dep_strides).map(|(i, st)| i * st).sum();
                if rep_state[key] == usize::MAX {
                    rep_state[key] = s;
                }
                key as u32
            })
            .collect();
        KeyMap { axis_dep, action_dep, n_actions, state_key, rep_state }
    }

    #[inline]
    pub fn key(&self, s: usize, x: usize) -> usize {
        let k = self.state_key[s] as usize;
        if self.action_dep {
            k * self.n_actions + x
        } else {
            k
        }
    }

    pub fn n_keys(&self) -> usize {
        self.rep_state.len() * if self.action_dep { self.n_actions } else { 1 }
    }

    /// Some `(s, x)` with this key.
    pub fn representative(&self, key: usize) -> (usize, usize) {
        if self.action_dep {
            (self.rep_state[key / self.n_actions], key % self.n_actions)
        } else {
            (self.rep_state[key], 0)
        }
    }
}

/// Probabilities of one axis on the contiguous cells `start..start + probs.len()`.
#[derive(Clone, Debug, PartialEq)]
pub struct Factor {
    pub start: usize,
    pub probs: Vec<f64>,
}

impl Factor {
    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        if i < self.start {
            return 0.0;
        }
        self.probs.get(i - self.start).copied().unwrap_or(0.0)
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (j, p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return self.start + j;
            }
        }
        // Rounding left u above the running sum; take the last positive cell.
        let last = self.probs.iter().rposition(|p| *p > 0.0).unwrap_or(0);
        self.start + last
    }
}

/// A transition row: independent per-axis factors.
#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub factors: Vec<Factor>,
    /// Expected cell center per axis.
    pub means: Vec<f64>,
}

impl Row {
    pub fn prob(&self, multi: &[usize]) -> f64 {
        self.factors.iter().zip(multi).map(|(f, i)| f.get(*i)).product()
    }

    /// `sum_{s'} p(s') v[s']`.
    pub fn expect(&self, grid: &StateGrid, v: &[f64]) -> f64 {
        expect_rec(&self.factors, &grid.strides, v, 0)
    }

    /// `out[s'] += w p(s')`.
    pub fn scatter(&self, grid: &StateGrid, w: f64, out: &mut [f64]) {
        scatter_rec(&self.factors, &grid.strides, w, out, 0)
    }

    pub fn dense(&self, grid: &StateGrid) -> Vec<f64> {
        let mut out = vec![0.0; grid.len()];
        self.scatter(grid, 1.0, &mut out);
        out
    }

    pub fn sample<R: Rng + ?Sized>(&self, grid: &StateGrid, rng: &mut R) -> usize {
        self.factors.iter().zip(&grid.strides).map(|(f, st)| f.sample(rng) * st).sum()
    }
}

fn expect_rec(factors: &[Factor], strides: &[usize], v: &[f64], base: usize) -> f64 {
    let f = &factors[0];
    if factors.len() == 1 {
        if strides[0] == 1 {
            let seg = &v[base + f.start..base + f.start + f.probs.len()];
            return f.probs.iter().zip(seg).map(|(p, x)| p * x).sum();
        }
        return f.probs.iter().enumerate().map(|(j, p)| p * v[base + (f.start + j) * strides[0]]).sum();
    }
    f.probs
        .iter()
        .enumerate()
        .map(|(j, p)| p * expect_rec(&factors[1..], &strides[1..], v, base + (f.start + j) * strides[0]))
        .sum()
}

fn scatter_rec(factors: &[Factor], strides: &[usize], w: f64, out: &mut [f64], base: usize) {
    let f = &factors[0];
    if factors.len() == 1 {
        for (j, p) in f.probs.iter().enumerate() {
            out[base + (f.start + j) * strides[0]] += w * p;
        }
        return;
    }
    for (j, p) in f.probs.iter().enumerate() {
        let wp = w * p;
        if wp != 0.0 {
            scatter_rec(&factors[1..], &strides[1..], wp, out, base + (f.start + j) * strides[0]);
        }
    }
}

/// A kernel on the grid: rows indexed through a [`KeyMap`].
#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub keys: Arc<KeyMap>,
    pub rows: Vec<Row>,
}

impl Transition {
    #[inline]
    pub fn row(&self, s: usize, x: usize) -> &Row {
        &self.rows[self.keys.key(s, x)]
    }
}

/// Divergence rows `KL(Q(s,x) || Q_theta(s,x))`, stored per parameter and
/// per key of the union of the true and model dependencies.
#[derive(Clone, Debug, PartialEq)]
pub struct KlTable {
    pub keys: Arc<KeyMap>,
    pub values: Vec<Vec<ExtReal>>,
}

#[derive(Clone, Debug, PartialEq)]
enum PayoffTable {
    /// `pi = f[s,x] + g[s,x] * center(s')[axis]`.
    Affine { f: Vec<f64>, g: Vec<f64>, axis: Option<usize> },
    Dense(Vec<f64>),
}

/// Cell counts for [`discretize_smdp`].
#[derive(Clone, Debug, PartialEq)]
pub struct GridSizes {
    pub states: Vec<usize>,
    pub actions: usize,
    /// `(lo, hi, points)` per parameter axis.
    pub params: Vec<(f64, f64, usize)>,
}

/// A finite SMDP on a grid.
#[derive(Clone, Debug)]
pub struct FiniteSMDP {
    pub spec: SMDPSpec,
    pub level: Vec<(f64, f64)>,
    pub states: StateGrid,
    pub actions: Vec<f64>,
    pub params: ParamGrid,
    pub truth: Transition,
    pub model: Vec<Transition>,
    pub kl: KlTable,
    pub discount: f64,
    pub q0: Vec<f64>,
    /// Parameters with an infinite divergence row somewhere on the grid.
    pub flagged_params: Vec<usize>,
    payoff: PayoffTable,
}

impl FiniteSMDP {
    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn n_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    /// `Q(s' | s, x)`.
    pub fn truth_prob(&self, s: usize, x: usize, next: usize) -> f64 {
        self.truth.row(s, x).prob(&self.states.unflatten(next))
    }

    /// `Q_theta(s' | s, x)` for parameter index `t`.
    pub fn model_prob(&self, t: usize, s: usize, x: usize, next: usize) -> f64 {
        self.model[t].row(s, x).prob(&self.states.unflatten(next))
    }

    /// Payoff at cell centers.
    pub fn payoff(&self, s: usize, x: usize, next: usize) -> f64 {
        match &self.payoff {
            PayoffTable::Affine { f, g, axis } => {
                let i = s * self.n_actions() + x;
                match axis {
                    Some(k) => f[i] + g[i] * self.states.axes[*k].centers[self.states.unflatten(next)[*k]],
                    None => f[i],
                }
            }
            PayoffTable::Dense(v) => v[(s * self.n_actions() + x) * self.n_states() + next],
        }
    }

    /// Expected payoff at `(s, x)` when the next state is drawn from the
    /// weighted mixture of `rows`.
    pub fn expected_payoff(&self, s: usize, x: usize, rows: &[(f64, &Row)]) -> f64 {
        let i = s * self.n_actions() + x;
        match &self.payoff {
            PayoffTable::Affine { f, g, axis } => match axis {
                Some(k) if g[i] != 0.0 => f[i] + g[i] * rows.iter().map(|(w, r)| w * r.means[*k]).sum::<f64>(),
                _ => f[i],
            },
            PayoffTable::Dense(v) => {
                let n = self.n_states();
                let pi = &v[i * n..(i + 1) * n];
                rows.iter().map(|(w, r)| w * r.expect(&self.states, pi)).sum()
            }
        }
    }

    /// Multiplies the payoff by `c`.
    pub fn scale_payoff(&mut self, c: f64) {
        match &mut self.payoff {
            PayoffTable::Affine { f, g, .. } => f.iter_mut().chain(g.iter_mut()).for_each(|v| *v *= c),
            PayoffTable::Dense(v) => v.iter_mut().for_each(|v| *v *= c),
        }
    }

    /// Adds `c` to the payoff.
    pub fn shift_payoff(&mut self, c: f64) {
        match &mut self.payoff {
            PayoffTable::Affine { f, .. } => f.iter_mut().for_each(|v| *v += c),
            PayoffTable::Dense(v) => v.iter_mut().for_each(|v| *v += c),
        }
    }

    /// Largest `|pi|` over the grid.
    pub fn payoff_sup(&self) -> f64 {
        match &self.payoff {
            PayoffTable::Dense(v) => v.iter().fold(0.0, |m, x| m.max(x.abs())),
            PayoffTable::Affine { f, g, axis } => {
                let ext = axis.map_or(0.0, |k| {
                    let c = &self.states.axes[k].centers;
                    c[0].abs().max(c[c.len() - 1].abs())
                });
                f.iter().zip(g).fold(0.0, |m, (a, b)| m.max(a.abs() + b.abs() * ext))
            }
        }
    }
}

/// Per-axis probabilities over every cell, before trimming.
struct FullAxis {
    p: Vec<f64>,
    lp: Vec<f64>,
}

fn full_axis(law: &AxisLaw, edges: &[f64]) -> Result<Option<FullAxis>> {
    let n = edges.len() - 1;
    let mut m = Vec::with_capacity(n);
    for j in 0..n {
        m.push(law.mass(edges[j], edges[j + 1])?);
    }
    let total: f64 = m.iter().sum();
    if total > 1e-200 {
        let lt = total.ln();
        let mut lp = Vec::with_capacity(n);
        for j in 0..n {
            lp.push(if m[j] > TINY { m[j].ln() - lt } else { law.log_mass(edges[j], edges[j + 1])? - lt });
        }
        let p = m.iter().map(|v| v / total).collect();
        return Ok(Some(FullAxis { p, lp }));
    }
    // The box sits in the far tail: renormalize in log scale.
    let mut lm = Vec::with_capacity(n);
    for j in 0..n {
        lm.push(law.log_mass(edges[j], edges[j + 1])?);
    }
    let top = lm.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY || top.is_nan() {
        return Ok(None);
    }
    let lt = top + lm.iter().map(|v| (v - top).exp()).sum::<f64>().ln();
    let lp: Vec<f64> = lm.iter().map(|v| v - lt).collect();
    let p = lp.iter().map(|v| v.exp()).collect();
    Ok(Some(FullAxis { p, lp }))
}

fn trimmed(full: &FullAxis) -> Factor {
    let first = full.p.iter().position(|p| *p >= TRIM).or_else(|| full.p.iter().position(|p| *p > 0.0)).unwrap_or(0);
    let last = full.p.iter().rposition(|p| *p >= TRIM).or_else(|| full.p.iter().rposition(|p| *p > 0.0)).unwrap_or(0);
    let mut probs = full.p[first..=last].to_vec();
    let dropped = full.p[..first].iter().chain(&full.p[last + 1..]).any(|p| *p > 0.0);
    if dropped {
        let kept: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= kept);
    }
    Factor { start: first, probs }
}

/// `KL(p || q)` on one axis, with log-scale terms where masses are tiny.
fn axis_kl(p: &FullAxis, q: &FullAxis) -> ExtReal {
    let mut acc = 0.0;
    for j in 0..p.p.len() {
        let pj = p.p[j];
        if pj == 0.0 {
            continue;
        }
        if q.lp[j] == f64::NEG_INFINITY {
            return ExtReal::Infinite;
        }
        let qj = q.p[j];
        acc += if pj > TINY && qj > TINY { pj * (pj / qj).ln() } else { pj * (p.lp[j] - q.lp[j]) };
    }
    ExtReal::Finite(acc.max(0.0))
}

struct RowSet {
    transition: Transition,
    full: Vec<Vec<FullAxis>>,
}

fn build_rows(kernel: &KernelSpec, theta: Option<&[f64]>, grid: &StateGrid, actions: &[f64], keys: Arc<KeyMap>) -> Result<RowSet> {
    let built: Vec<(Row, Vec<FullAxis>)> = (0..keys.n_keys())
        .into_par_iter()
        .map(|key| {
            let (s, x) = keys.representative(key);
            let center = grid.center(s);
            let laws = kernel.laws(theta, &center, actions[x])?;
            let mut full = Vec::with_capacity(laws.len());
            for (k, law) in laws.iter().enumerate() {
                match full_axis(law, &grid.axes[k].edges)? {
                    Some(f) => full.push(f),
                    None => {
                        return Err(Error::Domain(format!(
                            "kernel puts no mass on the level box at state {center:?}, action {} (parameter {theta:?})",
                            actions[x]
                        )))
                    }
                }
            }
            let factors: Vec<Factor> = full.iter().map(trimmed).collect();
            let means = factors
                .iter()
                .zip(&grid.axes)
                .map(|(f, a)| f.probs.iter().enumerate().map(|(j, p)| p * a.centers[f.start + j]).sum())
                .collect();
            Ok((Row { factors, means }, full))
        })
        .collect::<Result<_>>()?;
    let (rows, full): (Vec<Row>, Vec<Vec<FullAxis>>) = built.into_iter().unzip();
    Ok(RowSet { transition: Transition { keys, rows }, full })
}

/// Discretizes `spec` on the level box `level`.
pub fn discretize_smdp(spec: &SMDPSpec, level: &[(f64, f64)], sizes: &GridSizes) -> Result<FiniteSMDP> {
    spec.validate()?;
    let d = spec.state_dim();
    if level.len() != d || sizes.states.len() != d {
        return Err(Error::Shape(format!("level box / grid sizes must have {d} axes")));
    }
    let mut axes = Vec::with_capacity(d);
    for (k, ((lo, hi), n)) in level.iter().zip(&sizes.states).enumerate() {
        let ax = &spec.state_axes[k];
        if !(lo.is_finite() && hi.is_finite() && lo < hi) || *lo < ax.lo || *hi > ax.hi {
            return Err(Error::Domain(format!("level interval [{lo}, {hi}] is not a compact subset of axis `{}`", ax.name)));
        }
        if *n == 0 {
            return Err(Error::Domain(format!("axis `{}` needs at least one cell", ax.name)));
        }
        let edges = ax.spacing.edges(*lo, *hi, *n);
        let centers = (0..*n).map(|i| ax.spacing.center(*lo, *hi, *n, i)).collect();
        axes.push(AxisGrid { edges, centers });
    }
    let grid = StateGrid::new(axes);
    let actions = spec.actions.grid(sizes.actions);
    let params = ParamGrid::new(spec, &sizes.params)?;
    let nx = actions.len();

    let (tdeps, tact) = spec.true_kernel.dependencies(d);
    let (mdeps, mact) = spec.model_family.dependencies(d);
    let udeps: Vec<bool> = tdeps.iter().zip(&mdeps).map(|(a, b)| *a || *b).collect();
    let tkeys = Arc::new(KeyMap::new(&grid, nx, tdeps, tact));
    let mkeys = Arc::new(KeyMap::new(&grid, nx, mdeps, mact));
    let ukeys = Arc::new(KeyMap::new(&grid, nx, udeps, tact || mact));

    let truth = build_rows(&spec.true_kernel, None, &grid, &actions, tkeys.clone())?;
    let pairs: Vec<(usize, usize)> = (0..ukeys.n_keys())
        .map(|u| {
            let (s, x) = ukeys.representative(u);
            (tkeys.key(s, x), mkeys.key(s, x))
        })
        .collect();

    let per_param: Vec<(Transition, Vec<ExtReal>)> = params
        .points
        .par_iter()
        .map(|theta| {
            let rs = build_rows(&spec.model_family, Some(theta), &grid, &actions, mkeys.clone())?;
            let kl = pairs
                .iter()
                .map(|&(tk, mk)| {
                    truth.full[tk].iter().zip(&rs.full[mk]).fold(ExtReal::ZERO, |acc, (p, q)| acc + axis_kl(p, q))
                })
                .collect();
            Ok((rs.transition, kl))
        })
        .collect::<Result<_>>()?;
    let (model, values): (Vec<Transition>, Vec<Vec<ExtReal>>) = per_param.into_iter().unzip();
    let flagged_params = values.iter().enumerate().filter(|(_, v)| v.iter().any(|k| !k.is_finite())).map(|(t, _)| t).collect();

    let payoff = payoff_table(spec, &grid, &actions)?;
    let q0 = match &spec.initial {
        crate::model::InitialDist::Uniform => vec![1.0 / grid.len() as f64; grid.len()],
        crate::model::InitialDist::Point(p) => {
            let mut q = vec![0.0; grid.len()];
            q[grid.locate(p)] = 1.0;
            q
        }
    };
    let fsmdp = FiniteSMDP {
        spec: spec.clone(),
        level: level.to_vec(),
        states: grid,
        actions,
        params,
        truth: truth.transition,
        model,
        kl: KlTable { keys: ukeys, values },
        discount: spec.discount,
        q0,
        flagged_params,
        payoff,
    };
    check_growth(&fsmdp)?;
    Ok(fsmdp)
}

fn payoff_table(spec: &SMDPSpec, grid: &StateGrid, actions: &[f64]) -> Result<PayoffTable> {
    let (n, nx) = (grid.len(), actions.len());
    if let PayoffKind::Tabulated { n_states, n_actions, values } = &spec.payoff.kind {
        if *n_states != n || *n_actions != nx {
            return Err(Error::Shape(format!("tabulated payoff is {n_states}x{n_actions}, grid is {n}x{nx}")));
        }
        return Ok(PayoffTable::Dense(values.clone()));
    }
    let mut f = Vec::with_capacity(n * nx);
    let mut g = Vec::with_capacity(n * nx);
    let mut axis = None;
    for s in 0..n {
        let c = grid.center(s);
        for &x in actions {
            let (fv, gv, ax) = spec.payoff.affine(&c, x).expect("affine payoff");
            if !(fv.is_finite() && gv.is_finite()) {
                return Err(Error::Domain(format!("payoff is not finite at state {c:?}, action {x}")));
            }
            f.push(fv);
            g.push(gv);
            axis = ax;
        }
    }
    Ok(PayoffTable::Affine { f, g, axis })
}

/// Checks the declared linear growth bound on a deterministic sample of
/// grid triples.
fn check_growth(f: &FiniteSMDP) -> Result<()> {
    let crate::model::Growth::StateBounded { a, b } = f.spec.payoff.growth else {
        return Ok(());
    };
    let norm = |s: usize| -> f64 {
        f.states.center(s).iter().zip(&f.spec.state_axes).map(|(v, ax)| ax.norm(*v)).fold(0.0, f64::max)
    };
    let step = |n: usize| (n / 64).max(1);
    let (n, nx) = (f.n_states(), f.n_actions());
    for s in (0..n).step_by(step(n)).chain([n - 1]) {
        for x in (0..nx).step_by(step(nx)).chain([nx - 1]) {
            for t in (0..n).step_by(step(n)).chain([n - 1]) {
                let v = f.payoff(s, x, t);
                if v.abs() > a + b * norm(s).max(norm(t)) + 1e-9 {
                    return Err(Error::Domain(format!("payoff {v} at ({s}, {x}, {t}) violates the declared growth bound")));
                }
            }
        }
    }
    Ok(())
}
