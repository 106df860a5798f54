//! Continuous model declarations: domains, kernel families and payoffs.

mod doc;

pub use doc::{build_smdp, parse_document, GridHints, ModelDocument, SolveHints};

use crate::special::{log_normal_mass, log_trunc_exp_mass, normal_mass, trunc_exp_mass};
use crate::{Error, Result};

/// How grid cells are laid out along a bounded interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Spacing {
    Linear,
    /// Uniform in `ln s`; requires a positive lower bound.
    Log,
    /// Uniform in `u` where `s = lo + (hi - lo) u^p`; refines near `lo` for `p > 1`.
    Power(f64),
}

impl Spacing {
    /// `n + 1` cell edges of `[lo, hi]`.
    pub fn edges(self, lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|i| self.point(lo, hi, i as f64 / n as f64)).collect()
    }

    /// Representative point of cell `i` of `n`: the image of the midpoint in
    /// the spacing's own coordinate.
    pub fn center(self, lo: f64, hi: f64, n: usize, i: usize) -> f64 {
        self.point(lo, hi, (i as f64 + 0.5) / n as f64)
    }

    /// `n` points from `lo` to `hi` inclusive.
    pub fn points(self, lo: f64, hi: f64, n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![lo];
        }
        (0..n).map(|i| self.point(lo, hi, i as f64 / (n - 1) as f64)).collect()
    }

    fn point(self, lo: f64, hi: f64, u: f64) -> f64 {
        if u <= 0.0 {
            return lo;
        }
        if u >= 1.0 {
            return hi;
        }
        match self {
            Spacing::Linear => lo + (hi - lo) * u,
            Spacing::Log => (lo.ln() + (hi.ln() - lo.ln()) * u).exp(),
            Spacing::Power(p) => lo + (hi - lo) * u.powf(p),
        }
    }
}

/// One coordinate of the state space.
#[derive(Clone, Debug, PartialEq)]
pub struct StateAxis {
    pub name: String,
    /// May be `-inf`.
    pub lo: f64,
    /// May be `+inf`.
    pub hi: f64,
    pub spacing: Spacing,
}

impl StateAxis {
    pub fn new(name: &str, lo: f64, hi: f64) -> Self {
        StateAxis { name: name.to_string(), lo, hi, spacing: Spacing::Linear }
    }

    pub fn with_spacing(mut self, spacing: Spacing) -> Self {
        self.spacing = spacing;
        self
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    /// Norm-like size of a coordinate: `|s|`, or `|ln s|` on log axes.
    pub fn norm(&self, v: f64) -> f64 {
        match self.spacing {
            Spacing::Log => v.ln().abs(),
            _ => v.abs(),
        }
    }

    /// The sublevel set `{norm <= radius}` intersected with the axis bounds.
    /// Bounded axes are never truncated.
    pub fn level_interval(&self, radius: f64) -> (f64, f64) {
        if self.is_bounded() {
            return (self.lo, self.hi);
        }
        let (lo, hi) = match self.spacing {
            Spacing::Log => ((-radius).exp(), radius.exp()),
            _ => (-radius, radius),
        };
        (lo.max(self.lo), hi.min(self.hi))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ActionDomain {
    Interval { lo: f64, hi: f64, spacing: Spacing },
    /// A finite action set.
    Points(Vec<f64>),
}

impl ActionDomain {
    pub fn interval(lo: f64, hi: f64) -> Self {
        ActionDomain::Interval { lo, hi, spacing: Spacing::Linear }
    }

    /// Grid of `n` actions. Finite sets ignore `n`.
    pub fn grid(&self, n: usize) -> Vec<f64> {
        match self {
            ActionDomain::Interval { lo, hi, spacing } => {
                if lo == hi {
                    vec![*lo]
                } else {
                    spacing.points(*lo, *hi, n.max(1))
                }
            }
            ActionDomain::Points(p) => p.clone(),
        }
    }
}

/// A compact box of parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamDomain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl ParamDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        ParamDomain { lo, hi }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }
}

/// A kernel coefficient: a literal or a coordinate of the parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Coef {
    Const(f64),
    Param(usize),
}

impl Coef {
    pub fn eval(self, theta: Option<&[f64]>) -> Result<f64> {
        match self {
            Coef::Const(v) => Ok(v),
            Coef::Param(i) => match theta {
                Some(t) if i < t.len() => Ok(t[i]),
                Some(t) => Err(Error::Shape(format!("param[{i}] used with a {}-dimensional parameter", t.len()))),
                None => Err(Error::Config(format!("coefficient bound to param[{i}] evaluated without a parameter"))),
            },
        }
    }

    fn is_zero(self) -> bool {
        self == Coef::Const(0.0)
    }

    fn param(self) -> Option<usize> {
        match self {
            Coef::Param(i) => Some(i),
            Coef::Const(_) => None,
        }
    }
}

/// Upper end of a truncated-exponential support.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TruncBound {
    Fixed(Coef),
    /// `k * theta`.
    RateMultiple(f64),
}

/// Transition probabilities of a row-stochastic matrix family, one matrix per
/// table. Entry `(s, x, s')` of table `t` is at `((s * n_actions + x) * n_states + s')`.
///
/// States are the unit cells `[i, i+1)` of a `[0, n_states]` axis and actions
/// are indexed by their rounded value. A model family picks table
/// `round(param[0])`.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub n_states: usize,
    pub n_actions: usize,
    pub tables: Vec<Vec<f64>>,
}

impl Table {
    fn row(&self, t: usize, s: usize, x: usize) -> &[f64] {
        let off = (s * self.n_actions + x) * self.n_states;
        &self.tables[t][off..off + self.n_states]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum KernelSpec {
    /// `s' = a s + c x + d + b xi`.
    GaussianLinear { a: Coef, c: Coef, d: Coef, b: Coef },
    /// `ln s' = alpha + beta ln(x s) + gamma s[shock_axis] + sigma xi`.
    LognormalLinear { alpha: Coef, beta: Coef, gamma: Coef, sigma: Coef, shock_axis: Option<usize> },
    /// `s' = x^action_power * eps`, `eps` exponential with mean parameter
    /// `theta` truncated to `[0, bound]`.
    TruncatedExponential { theta: Coef, bound: TruncBound, action_power: f64 },
    Uniform { lo: Coef, hi: Coef },
    /// Independent coordinates; component `i` generates axis `i`.
    Product(Vec<KernelSpec>),
    Tabulated(Table),
}

impl KernelSpec {
    pub fn gaussian(a: Coef, b: Coef) -> Self {
        KernelSpec::GaussianLinear { a, c: Coef::Const(0.0), d: Coef::Const(0.0), b }
    }

    /// Laws of the next state's coordinates at `(s, x)`.
    pub fn laws(&self, theta: Option<&[f64]>, s: &[f64], x: f64) -> Result<Vec<AxisLaw>> {
        match self {
            KernelSpec::Product(parts) => parts.iter().enumerate().map(|(i, k)| k.axis_law(theta, s, i, x)).collect(),
            k => Ok(vec![k.axis_law(theta, s, 0, x)?]),
        }
    }

    fn axis_law(&self, theta: Option<&[f64]>, s: &[f64], axis: usize, x: f64) -> Result<AxisLaw> {
        let own = s[axis];
        match self {
            KernelSpec::GaussianLinear { a, c, d, b } => {
                let sd = b.eval(theta)?;
                if sd < 0.0 {
                    return Err(Error::Domain(format!("negative gaussian scale {sd}")));
                }
                let mean = a.eval(theta)? * own + c.eval(theta)? * x + d.eval(theta)?;
                Ok(AxisLaw::Normal { mean, sd })
            }
            KernelSpec::LognormalLinear { alpha, beta, gamma, sigma, shock_axis } => {
                let sd = sigma.eval(theta)?;
                if sd < 0.0 {
                    return Err(Error::Domain(format!("negative lognormal scale {sd}")));
                }
                let b = beta.eval(theta)?;
                let mut mu = alpha.eval(theta)?;
                if b != 0.0 {
                    let base = x * own;
                    if base <= 0.0 {
                        return Err(Error::Domain(format!("lognormal kernel needs x*s > 0, got {base}")));
                    }
                    mu += b * base.ln();
                }
                if let Some(j) = shock_axis {
                    mu += gamma.eval(theta)? * s[*j];
                }
                Ok(AxisLaw::LogNormal { mu, sigma: sd })
            }
            KernelSpec::TruncatedExponential { theta: rate, bound, action_power } => {
                let t = rate.eval(theta)?;
                if !(t > 0.0) {
                    return Err(Error::Domain(format!("truncated-exponential rate must be positive, got {t}")));
                }
                let b = match bound {
                    TruncBound::Fixed(c) => c.eval(theta)?,
                    TruncBound::RateMultiple(k) => k * t,
                };
                if !(b > 0.0) {
                    return Err(Error::Domain(format!("truncated-exponential bound must be positive, got {b}")));
                }
                let scale = if *action_power == 0.0 { 1.0 } else { x.powf(*action_power) };
                if !(scale > 0.0 && scale.is_finite()) {
                    return Err(Error::Domain(format!("action {x} gives a degenerate shock scale")));
                }
                Ok(AxisLaw::TruncExp { theta: t, bound: b, scale })
            }
            KernelSpec::Uniform { lo, hi } => {
                let (l, h) = (lo.eval(theta)?, hi.eval(theta)?);
                if !(h > l) {
                    return Err(Error::Domain(format!("uniform kernel needs lo < hi, got [{l}, {h}]")));
                }
                Ok(AxisLaw::Uniform { lo: l, hi: h })
            }
            KernelSpec::Tabulated(table) => {
                let t = match theta {
                    Some(th) => th[0].round() as i64,
                    None => 0,
                };
                if t < 0 || t as usize >= table.tables.len() {
                    return Err(Error::Range(format!("no table for parameter index {t}")));
                }
                let si = own.floor();
                let xi = x.round();
                if si < 0.0 || si as usize >= table.n_states || xi < 0.0 || xi as usize >= table.n_actions {
                    return Err(Error::Range(format!("tabulated kernel queried at state {own}, action {x}")));
                }
                Ok(AxisLaw::Table(table.row(t as usize, si as usize, xi as usize).to_vec()))
            }
            KernelSpec::Product(_) => Err(Error::Config("nested product kernels are not supported".into())),
        }
    }

    /// Which state axes and whether the action enter the law of the next state.
    pub fn dependencies(&self, n_axes: usize) -> (Vec<bool>, bool) {
        let mut axes = vec![false; n_axes];
        let mut action = false;
        match self {
            KernelSpec::Product(parts) => {
                for (i, p) in parts.iter().enumerate() {
                    p.component_deps(i, &mut axes, &mut action);
                }
            }
            k => k.component_deps(0, &mut axes, &mut action),
        }
        (axes, action)
    }

    fn component_deps(&self, own: usize, axes: &mut [bool], action: &mut bool) {
        match self {
            KernelSpec::GaussianLinear { a, c, .. } => {
                axes[own] |= !a.is_zero();
                *action |= !c.is_zero();
            }
            KernelSpec::LognormalLinear { beta, gamma, shock_axis, .. } => {
                if !beta.is_zero() {
                    axes[own] = true;
                    *action = true;
                }
                if let Some(j) = shock_axis {
                    axes[*j] |= !gamma.is_zero();
                }
            }
            KernelSpec::TruncatedExponential { action_power, .. } => *action |= *action_power != 0.0,
            KernelSpec::Uniform { .. } => {}
            KernelSpec::Tabulated(_) => {
                axes[own] = true;
                *action = true;
            }
            KernelSpec::Product(_) => {}
        }
    }

    fn components(&self) -> Vec<&KernelSpec> {
        match self {
            KernelSpec::Product(parts) => parts.iter().collect(),
            k => vec![k],
        }
    }

    /// Parameter coordinates used as a scale, rate or support bound; grid
    /// values at or below zero there give degenerate kernels.
    pub fn positive_params(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for k in self.components() {
            match k {
                KernelSpec::GaussianLinear { b, .. } => out.extend(b.param()),
                KernelSpec::LognormalLinear { sigma, .. } => out.extend(sigma.param()),
                KernelSpec::TruncatedExponential { theta, bound, .. } => {
                    out.extend(theta.param());
                    if let TruncBound::Fixed(c) = bound {
                        out.extend(c.param());
                    }
                }
                _ => {}
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    fn coefs(&self) -> Vec<Coef> {
        let mut out = Vec::new();
        for k in self.components() {
            match k {
                KernelSpec::GaussianLinear { a, c, d, b } => out.extend([*a, *c, *d, *b]),
                KernelSpec::LognormalLinear { alpha, beta, gamma, sigma, .. } => out.extend([*alpha, *beta, *gamma, *sigma]),
                KernelSpec::TruncatedExponential { theta, bound, .. } => {
                    out.push(*theta);
                    if let TruncBound::Fixed(c) = bound {
                        out.push(*c);
                    }
                }
                KernelSpec::Uniform { lo, hi } => out.extend([*lo, *hi]),
                _ => {}
            }
        }
        out
    }

    fn validate(&self, spec: &SMDPSpec, role: &str) -> Result<()> {
        let n = spec.state_axes.len();
        match self {
            KernelSpec::Product(parts) if parts.len() != n => {
                return Err(Error::Config(format!("{role} kernel has {} components for {n} state axes", parts.len())))
            }
            KernelSpec::Product(_) => {}
            _ if n != 1 => return Err(Error::Config(format!("{role} kernel must be a product over {n} state axes"))),
            _ => {}
        }
        for (i, k) in self.components().into_iter().enumerate() {
            match k {
                KernelSpec::Product(_) => return Err(Error::Config("nested product kernels are not supported".into())),
                KernelSpec::LognormalLinear { shock_axis: Some(j), .. } if *j >= n => {
                    return Err(Error::Config(format!("{role} kernel shock axis {j} out of range")))
                }
                KernelSpec::TruncatedExponential { theta, bound, .. } => {
                    if let Coef::Const(t) = theta {
                        if !(*t > 0.0) {
                            return Err(Error::Domain(format!("{role} kernel: truncated-exponential rate {t} must be positive")));
                        }
                    }
                    let ok = match bound {
                        TruncBound::Fixed(Coef::Const(b)) => *b > 0.0,
                        TruncBound::RateMultiple(k) => *k > 0.0,
                        TruncBound::Fixed(Coef::Param(_)) => true,
                    };
                    if !ok {
                        return Err(Error::Domain(format!("{role} kernel: truncated-exponential bound must be positive")));
                    }
                }
                KernelSpec::Tabulated(t) => {
                    let axis = &spec.state_axes[i];
                    if axis.lo != 0.0 || axis.hi != t.n_states as f64 {
                        return Err(Error::Config(format!("{role} tabulated kernel needs state axis [0, {}]", t.n_states)));
                    }
                    for table in &t.tables {
                        if table.len() != t.n_states * t.n_actions * t.n_states {
                            return Err(Error::Shape(format!("{role} table has {} entries", table.len())));
                        }
                        for row in table.chunks(t.n_states) {
                            let sum: f64 = row.iter().sum();
                            if row.iter().any(|p| *p < 0.0) || (sum - 1.0).abs() > 1e-8 {
                                return Err(Error::Domain(format!("{role} table row {row:?} is not a probability vector")));
                            }
                        }
                    }
                }
                _ => {}
            }
        }
        for c in self.coefs() {
            match c {
                Coef::Param(i) if i >= spec.params.dim() => {
                    return Err(Error::Config(format!("{role} kernel uses param[{i}] but the parameter has {} coordinates", spec.params.dim())))
                }
                Coef::Param(_) if role == "true" => return Err(Error::Config("the true kernel cannot depend on the parameter".into())),
                Coef::Const(v) if !v.is_finite() => return Err(Error::Domain(format!("{role} kernel coefficient {v} is not finite"))),
                _ => {}
            }
        }
        Ok(())
    }
}

/// Law of one coordinate of the next state.
#[derive(Clone, Debug, PartialEq)]
pub enum AxisLaw {
    Normal { mean: f64, sd: f64 },
    /// `ln s' ~ N(mu, sigma^2)`.
    LogNormal { mu: f64, sigma: f64 },
    /// `s' = scale * eps`.
    TruncExp { theta: f64, bound: f64, scale: f64 },
    Uniform { lo: f64, hi: f64 },
    Table(Vec<f64>),
}

impl AxisLaw {
    /// Probability of `[lo, hi]`.
    pub fn mass(&self, lo: f64, hi: f64) -> Result<f64> {
        Ok(match self {
            AxisLaw::Normal { mean, sd } => normal_mass(lo, hi, *mean, *sd),
            AxisLaw::LogNormal { mu, sigma } => {
                if hi <= 0.0 {
                    0.0
                } else {
                    normal_mass(log_or_neg_inf(lo), hi.ln(), *mu, *sigma)
                }
            }
            AxisLaw::TruncExp { theta, bound, scale } => trunc_exp_mass(lo / scale, hi / scale, *theta, *bound),
            AxisLaw::Uniform { lo: a, hi: b } => ((hi.min(*b) - lo.max(*a)) / (b - a)).max(0.0),
            AxisLaw::Table(p) => table_range(p, lo, hi)?.iter().sum(),
        })
    }

    /// `ln` of [`AxisLaw::mass`], computed without underflow where possible.
    pub fn log_mass(&self, lo: f64, hi: f64) -> Result<f64> {
        Ok(match self {
            AxisLaw::Normal { mean, sd } => log_normal_mass(lo, hi, *mean, *sd),
            AxisLaw::LogNormal { mu, sigma } => {
                if hi <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    log_normal_mass(log_or_neg_inf(lo), hi.ln(), *mu, *sigma)
                }
            }
            AxisLaw::TruncExp { theta, bound, scale } => log_trunc_exp_mass(lo / scale, hi / scale, *theta, *bound),
            _ => self.mass(lo, hi)?.ln(),
        })
    }

    /// Expected value of the coordinate.
    pub fn mean(&self) -> f64 {
        match self {
            AxisLaw::Normal { mean, .. } => *mean,
            AxisLaw::LogNormal { mu, sigma } => (mu + 0.5 * sigma * sigma).exp(),
            AxisLaw::TruncExp { theta, bound, scale } => scale * crate::special::trunc_exp_mean(*theta, *bound),
            AxisLaw::Uniform { lo, hi } => 0.5 * (lo + hi),
            AxisLaw::Table(p) => p.iter().enumerate().map(|(i, q)| q * (i as f64 + 0.5)).sum(),
        }
    }
}

fn log_or_neg_inf(v: f64) -> f64 {
    if v <= 0.0 {
        f64::NEG_INFINITY
    } else {
        v.ln()
    }
}

fn table_range(p: &[f64], lo: f64, hi: f64) -> Result<&[f64]> {
    let aligned = |v: f64| v.is_finite() && v.fract() == 0.0 && v >= 0.0 && v <= p.len() as f64;
    if !aligned(lo) || !aligned(hi) || hi < lo {
        return Err(Error::Range(format!("cell [{lo}, {hi}] is not a union of cells of the {}-cell table", p.len())));
    }
    Ok(&p[lo as usize..hi as usize])
}

/// Probability that the next state lands in the box `cell` (one interval per axis).
pub fn kernel_mass(kernel: &KernelSpec, theta: Option<&[f64]>, s: &[f64], x: f64, cell: &[(f64, f64)]) -> Result<f64> {
    let laws = kernel.laws(theta, s, x)?;
    if laws.len() != cell.len() {
        return Err(Error::Shape(format!("cell has {} axes, kernel has {}", cell.len(), laws.len())));
    }
    let mut p = 1.0;
    for (law, (lo, hi)) in laws.iter().zip(cell) {
        p *= law.mass(*lo, *hi)?;
    }
    Ok(p)
}

#[derive(Clone, Debug, PartialEq)]
pub enum PayoffKind {
    Constant(f64),
    /// `pi = s'[axis]`.
    NextState { axis: usize },
    /// `pi = z ln(y - x y)` with `y = s[wealth_axis]`, `z = s[shock_axis]` (1 if absent).
    LogConsumption { wealth_axis: usize, shock_axis: Option<usize> },
    /// `pi = z ln x - x e'` with `e' = s'[cost_axis]`.
    ProductionCost { shock_axis: usize, cost_axis: usize },
    /// `pi = z x e' - x^2` with `e' = s'[price_axis]`.
    RevenueCost { shock_axis: usize, price_axis: usize },
    /// `values[(s * n_actions + x) * n_states + s']` on a tabulated state axis.
    Tabulated { n_states: usize, n_actions: usize, values: Vec<f64> },
}

/// Growth class of the payoff.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Growth {
    Bounded,
    /// `|pi(s, x, s')| <= a + b max(|s|, |s'|)`.
    StateBounded { a: f64, b: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct PayoffSpec {
    pub kind: PayoffKind,
    pub growth: Growth,
}

impl PayoffSpec {
    pub fn new(kind: PayoffKind, growth: Growth) -> Self {
        PayoffSpec { kind, growth }
    }

    pub fn zero() -> Self {
        PayoffSpec::new(PayoffKind::Constant(0.0), Growth::Bounded)
    }

    pub fn eval(&self, s: &[f64], x: f64, next: &[f64]) -> f64 {
        match &self.kind {
            PayoffKind::Tabulated { n_states, n_actions, values } => {
                let (i, a, j) = (s[0].floor() as usize, x.round() as usize, next[0].floor() as usize);
                values[(i * n_actions + a) * n_states + j]
            }
            _ => {
                let (f, g, axis) = self.affine(s, x).expect("non-tabulated payoffs are affine in the next state");
                match axis {
                    Some(k) => f + g * next[k],
                    None => f,
                }
            }
        }
    }

    /// Writes the payoff as `f + g * s'[axis]`; `None` for tabulated payoffs.
    pub fn affine(&self, s: &[f64], x: f64) -> Option<(f64, f64, Option<usize>)> {
        match &self.kind {
            PayoffKind::Constant(c) => Some((*c, 0.0, None)),
            PayoffKind::NextState { axis } => Some((0.0, 1.0, Some(*axis))),
            PayoffKind::LogConsumption { wealth_axis, shock_axis } => {
                let z = shock_axis.map_or(1.0, |k| s[k]);
                let c = s[*wealth_axis] * (1.0 - x);
                Some((if z == 0.0 { 0.0 } else { z * c.ln() }, 0.0, None))
            }
            PayoffKind::ProductionCost { shock_axis, cost_axis } => {
                let z = s[*shock_axis];
                Some((if z == 0.0 { 0.0 } else { z * x.ln() }, -x, Some(*cost_axis)))
            }
            PayoffKind::RevenueCost { shock_axis, price_axis } => Some((-x * x, s[*shock_axis] * x, Some(*price_axis))),
            PayoffKind::Tabulated { .. } => None,
        }
    }

    fn validate(&self, n_axes: usize) -> Result<()> {
        let axes: Vec<usize> = match &self.kind {
            PayoffKind::NextState { axis } => vec![*axis],
            PayoffKind::LogConsumption { wealth_axis, shock_axis } => std::iter::once(*wealth_axis).chain(*shock_axis).collect(),
            PayoffKind::ProductionCost { shock_axis, cost_axis } => vec![*shock_axis, *cost_axis],
            PayoffKind::RevenueCost { shock_axis, price_axis } => vec![*shock_axis, *price_axis],
            PayoffKind::Tabulated { n_states, n_actions, values } => {
                if values.len() != n_states * n_actions * n_states {
                    return Err(Error::Shape(format!("tabulated payoff has {} entries", values.len())));
                }
                vec![0]
            }
            PayoffKind::Constant(c) => {
                if !c.is_finite() {
                    return Err(Error::Domain("constant payoff is not finite".into()));
                }
                vec![]
            }
        };
        if let Some(a) = axes.iter().find(|a| **a >= n_axes) {
            return Err(Error::Config(format!("payoff refers to state axis {a} of {n_axes}")));
        }
        if let Growth::StateBounded { a, b } = self.growth {
            if !(a >= 0.0 && b >= 0.0) {
                return Err(Error::Domain("payoff growth constants must be nonnegative".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitialDist {
    /// Uniform over the grid cells.
    Uniform,
    /// All mass on the cell containing the point (clamped into the box).
    Point(Vec<f64>),
}

/// A continuous subjective Markov decision process.
#[derive(Clone, Debug, PartialEq)]
pub struct SMDPSpec {
    pub state_axes: Vec<StateAxis>,
    pub actions: ActionDomain,
    pub params: ParamDomain,
    pub true_kernel: KernelSpec,
    pub model_family: KernelSpec,
    pub payoff: PayoffSpec,
    pub discount: f64,
    pub initial: InitialDist,
}

impl SMDPSpec {
    pub fn state_dim(&self) -> usize {
        self.state_axes.len()
    }

    /// A finite SMDP given by tables, all laid out as
    /// `[(s * n_actions + x) * n_states + s']`. State `i` is the cell `[i, i+1)`,
    /// action `x` is the point `x`, parameter `t` selects `models[t]`.
    /// Discretize it with `n_states` cells and a `(0, T-1, T)` parameter axis.
    pub fn tabulated(n_states: usize, n_actions: usize, truth: Vec<f64>, models: Vec<Vec<f64>>, payoff: Vec<f64>, discount: f64) -> Result<SMDPSpec> {
        if n_states == 0 || n_actions == 0 || models.is_empty() {
            return Err(Error::Shape("tabulated SMDP needs states, actions and at least one model table".into()));
        }
        let len = n_states * n_actions * n_states;
        if truth.len() != len || payoff.len() != len || models.iter().any(|m| m.len() != len) {
            return Err(Error::Shape(format!("tables must have {len} entries")));
        }
        let spec = SMDPSpec {
            state_axes: vec![StateAxis::new("s", 0.0, n_states as f64)],
            actions: ActionDomain::Points((0..n_actions).map(|x| x as f64).collect()),
            params: ParamDomain::new(vec![0.0], vec![(models.len() - 1) as f64]),
            true_kernel: KernelSpec::Tabulated(Table { n_states, n_actions, tables: vec![truth] }),
            model_family: KernelSpec::Tabulated(Table { n_states, n_actions, tables: models }),
            payoff: PayoffSpec::new(PayoffKind::Tabulated { n_states, n_actions, values: payoff }, Growth::Bounded),
            discount,
            initial: InitialDist::Uniform,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Checks every declared invariant.
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.discount) {
            return Err(Error::Domain(format!("discount {} is outside [0, 1)", self.discount)));
        }
        if self.state_axes.is_empty() {
            return Err(Error::Config("state space has no axes".into()));
        }
        for ax in &self.state_axes {
            if !(ax.lo < ax.hi) || ax.lo.is_nan() || ax.hi.is_nan() {
                return Err(Error::Domain(format!("state axis `{}` has empty bounds [{}, {}]", ax.name, ax.lo, ax.hi)));
            }
            match ax.spacing {
                Spacing::Log if ax.lo < 0.0 => return Err(Error::Domain(format!("log-spaced axis `{}` must be nonnegative", ax.name))),
                Spacing::Power(p) if !ax.is_bounded() || !(p > 0.0) => {
                    return Err(Error::Domain(format!("power-spaced axis `{}` must be bounded with a positive exponent", ax.name)))
                }
                _ => {}
            }
        }
        match &self.actions {
            ActionDomain::Interval { lo, hi, spacing } => {
                if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                    return Err(Error::Domain(format!("action interval [{lo}, {hi}] is not compact")));
                }
                if matches!(spacing, Spacing::Log) && *lo <= 0.0 {
                    return Err(Error::Domain("log-spaced actions need a positive lower bound".into()));
                }
            }
            ActionDomain::Points(p) => {
                if p.is_empty() || p.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Domain("finite action set must be nonempty and finite".into()));
                }
            }
        }
        let pd = &self.params;
        if pd.lo.len() != pd.hi.len() || pd.lo.is_empty() {
            return Err(Error::Shape("parameter box bounds disagree in dimension".into()));
        }
        for (l, h) in pd.lo.iter().zip(&pd.hi) {
            if !(l.is_finite() && h.is_finite()) || l > h {
                return Err(Error::Domain(format!("parameter box [{l}, {h}] is not compact")));
            }
        }
        self.true_kernel.validate(self, "true")?;
        self.model_family.validate(self, "model")?;
        self.payoff.validate(self.state_dim())?;
        if let InitialDist::Point(p) = &self.initial {
            if p.len() != self.state_dim() {
                return Err(Error::Shape("initial point dimension".into()));
            }
        }
        Ok(())
    }
}
