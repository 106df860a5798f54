//! Ready-made models with closed-form equilibrium quantities.

use crate::discretize::GridSizes;
use crate::model::{
    ActionDomain, Coef, Growth, InitialDist, KernelSpec, ParamDomain, PayoffKind, PayoffSpec, SMDPSpec, Spacing, StateAxis,
    TruncBound,
};
use crate::special::trunc_exp_rate_for_mean;
use crate::{Error, Result};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExampleId {
    /// Consumption-savings with a log-normal wealth process.
    Savings,
    /// Producer with a misspecified cost shock.
    Cost,
    /// Gaussian AR(1) with one action and zero payoff.
    Ar1,
    /// Gaussian AR(1) whose drift the agent controls, payoff `s'`.
    Ar1Action,
    /// Producer with a misspecified price shock.
    Revenue,
}

impl ExampleId {
    pub const ALL: [ExampleId; 5] = [ExampleId::Savings, ExampleId::Cost, ExampleId::Ar1, ExampleId::Ar1Action, ExampleId::Revenue];

    pub fn name(self) -> &'static str {
        match self {
            ExampleId::Savings => "savings",
            ExampleId::Cost => "cost",
            ExampleId::Ar1 => "ar1",
            ExampleId::Ar1Action => "ar1-action",
            ExampleId::Revenue => "revenue",
        }
    }

    /// Constants that must be supplied, then optional ones with defaults.
    fn constants(self) -> (&'static [&'static str], &'static [(&'static str, f64)]) {
        match self {
            ExampleId::Ar1 => (&["a0", "b0"], &[("delta", 0.9)]),
            ExampleId::Ar1Action => (&["a0", "b0", "c0"], &[("delta", 0.9)]),
            ExampleId::Savings => (
                &[],
                &[("alpha_star", 0.0), ("beta_star", 0.5), ("gamma_star", 1.0), ("delta", 0.9), ("eps", 1e-3), ("beta", f64::NAN), ("z", 0.5)],
            ),
            ExampleId::Cost => (&[], &[("mean", 1.0), ("k", 10.0), ("q", 2.0), ("bstar", 3.0), ("delta", 0.9), ("eps", 1e-2)]),
            ExampleId::Revenue => (&[], &[("mean", 1.0), ("k", 300.0), ("r", 0.5), ("bstar", 3.0), ("delta", 0.9), ("eps", 1e-4)]),
        }
    }
}

impl fmt::Display for ExampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExampleId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExampleId::ALL.into_iter().find(|e| e.name() == s).ok_or_else(|| Error::Config(format!("unknown example `{s}`")))
    }
}

/// Resolved constants of an example.
struct Consts(BTreeMap<String, f64>);

impl Consts {
    fn resolve(id: ExampleId, params: &BTreeMap<String, f64>) -> Result<Consts> {
        let (required, optional) = id.constants();
        for key in params.keys() {
            if !required.contains(&key.as_str()) && !optional.iter().any(|(k, _)| k == key) && !(id == ExampleId::Savings && key == "alpha_model") {
                return Err(Error::Config(format!("example {id} has no constant `{key}`")));
            }
        }
        let mut out = BTreeMap::new();
        for key in required {
            let v = params.get(*key).ok_or_else(|| Error::MissingConstant(format!("{key} (example {id})")))?;
            out.insert(key.to_string(), *v);
        }
        for (key, default) in optional {
            out.insert(key.to_string(), *params.get(*key).unwrap_or(default));
        }
        if let Some(v) = params.get("alpha_model") {
            out.insert("alpha_model".into(), *v);
        }
        for (k, v) in &out {
            if !v.is_finite() && !(k == "beta" && v.is_nan()) {
                return Err(Error::Domain(format!("constant {k} = {v} is not finite")));
            }
        }
        Ok(Consts(out))
    }

    fn get(&self, k: &str) -> f64 {
        self.0[k]
    }
}

/// `E_theta[eps] = theta / K` for the exponential with mean `theta` truncated
/// to `[0, k theta]`.
pub fn truncation_constant(k: f64) -> f64 {
    (1.0 - (-k).exp()) / (1.0 - (k + 1.0) * (-k).exp())
}

/// Optimal saved fraction in the savings example under belief `beta`.
pub fn savings_fraction(delta: f64, beta: f64, z: f64) -> f64 {
    let db = delta * beta;
    0.5 * db / ((1.0 - db) * z + 0.5 * db)
}

fn check_discount(d: f64) -> Result<()> {
    if !(0.0..1.0).contains(&d) {
        return Err(Error::Domain(format!("delta = {d} outside [0, 1)")));
    }
    Ok(())
}

/// Builds the example's continuous SMDP.
pub fn make_example(id: ExampleId, params: &BTreeMap<String, f64>) -> Result<SMDPSpec> {
    let c = Consts::resolve(id, params)?;
    let delta = c.get("delta");
    check_discount(delta)?;
    let spec = match id {
        ExampleId::Ar1 => SMDPSpec {
            state_axes: vec![StateAxis::new("s", f64::NEG_INFINITY, f64::INFINITY)],
            actions: ActionDomain::Points(vec![0.0]),
            params: ParamDomain::new(vec![0.0, 0.1], vec![2.0, 1.0]),
            true_kernel: KernelSpec::gaussian(Coef::Const(c.get("a0")), Coef::Const(c.get("b0"))),
            model_family: KernelSpec::gaussian(Coef::Param(0), Coef::Param(1)),
            payoff: PayoffSpec::zero(),
            discount: delta,
            initial: InitialDist::Point(vec![0.0]),
        },
        ExampleId::Ar1Action => {
            let a_hi = if c.get("a0") < 1.0 { 1.0 } else { 2.0 };
            SMDPSpec {
                state_axes: vec![StateAxis::new("s", f64::NEG_INFINITY, f64::INFINITY)],
                actions: ActionDomain::interval(-1.0, 1.0),
                params: ParamDomain::new(vec![0.0, 0.0, -1.0], vec![a_hi, 1.0, 1.0]),
                true_kernel: KernelSpec::GaussianLinear {
                    a: Coef::Const(c.get("a0")),
                    c: Coef::Const(c.get("c0")),
                    d: Coef::Const(0.0),
                    b: Coef::Const(c.get("b0")),
                },
                model_family: KernelSpec::GaussianLinear { a: Coef::Param(0), c: Coef::Param(2), d: Coef::Const(0.0), b: Coef::Param(1) },
                payoff: PayoffSpec::new(PayoffKind::NextState { axis: 0 }, Growth::StateBounded { a: 0.0, b: 1.0 }),
                discount: delta,
                initial: InitialDist::Point(vec![0.0]),
            }
        }
        ExampleId::Savings => {
            let (beta, gamma, eps) = (c.get("beta_star"), c.get("gamma_star"), c.get("eps"));
            if !(0.0..1.0).contains(&beta) || delta * beta >= 1.0 {
                return Err(Error::Domain(format!("savings needs 0 <= beta* < 1 and delta beta* < 1, got beta* = {beta}")));
            }
            if !(eps > 0.0 && eps < 0.5) {
                return Err(Error::Domain(format!("eps = {eps} outside (0, 0.5)")));
            }
            let alpha = c.get("alpha_star");
            let alpha_model = c.0.get("alpha_model").copied().unwrap_or(alpha + 0.5 * gamma);
            let z = KernelSpec::Uniform { lo: Coef::Const(0.0), hi: Coef::Const(1.0) };
            SMDPSpec {
                state_axes: vec![StateAxis::new("y", 0.0, f64::INFINITY).with_spacing(Spacing::Log), StateAxis::new("z", 0.0, 1.0)],
                actions: ActionDomain::interval(eps, 1.0 - eps),
                params: ParamDomain::new(vec![0.0], vec![1.0]),
                true_kernel: KernelSpec::Product(vec![
                    KernelSpec::LognormalLinear {
                        alpha: Coef::Const(alpha),
                        beta: Coef::Const(beta),
                        gamma: Coef::Const(gamma),
                        sigma: Coef::Const(1.0),
                        shock_axis: Some(1),
                    },
                    z.clone(),
                ]),
                model_family: KernelSpec::Product(vec![
                    KernelSpec::LognormalLinear {
                        alpha: Coef::Const(alpha_model),
                        beta: Coef::Param(0),
                        gamma: Coef::Const(0.0),
                        sigma: Coef::Const(1.0),
                        shock_axis: None,
                    },
                    z,
                ]),
                payoff: PayoffSpec::new(
                    PayoffKind::LogConsumption { wealth_axis: 0, shock_axis: Some(1) },
                    Growth::StateBounded { a: -eps.ln(), b: 1.0 },
                ),
                discount: delta,
                initial: InitialDist::Point(vec![1.0, 0.5]),
            }
        }
        ExampleId::Cost | ExampleId::Revenue => producer(id, &c)?,
    };
    spec.validate()?;
    Ok(spec)
}

/// Shared layout of the two producer examples: state `(z, e)` with `z`
/// i.i.d. uniform and `e` the shock implied by the agent's linear model.
fn producer(id: ExampleId, c: &Consts) -> Result<SMDPSpec> {
    let (mean, k, eps, bmult) = (c.get("mean"), c.get("k"), c.get("eps"), c.get("bstar"));
    if !(mean > 0.0 && k > 0.0 && eps > 0.0 && bmult > 2.0) {
        return Err(Error::Domain("mean, k, eps must be positive and bstar > 2".into()));
    }
    let kk = truncation_constant(k);
    let bstar = bmult * mean;
    let rate = trunc_exp_rate_for_mean(mean, bstar).ok_or_else(|| Error::Domain("no truncated exponential has this mean".into()))?;
    let x_hi = (mean / 4.0).powf(2.0 / 3.0).max((mean / kk.sqrt()).powf(2.0 / 3.0)) + 1.0;
    // Revenue optima scale like z, so actions need constant relative resolution.
    let (power, theta_hi, spacing, action_spacing, payoff) = match id {
        ExampleId::Cost => {
            let q = c.get("q");
            (q - 1.0, ((kk + 1.0) / 2.0).sqrt() * mean + 1.0, Spacing::Linear, Spacing::Linear, PayoffKind::ProductionCost { shock_axis: 0, cost_axis: 1 })
        }
        _ => {
            let r = c.get("r");
            (r - 1.0, 2.0 * kk * mean + 1.0, Spacing::Power(2.0), Spacing::Log, PayoffKind::RevenueCost { shock_axis: 0, price_axis: 1 })
        }
    };
    if eps >= x_hi {
        return Err(Error::Domain(format!("eps = {eps} leaves no actions")));
    }
    // Largest shock the truth can produce on the action range.
    let e_truth = bstar * eps.powf(power).max(x_hi.powf(power));
    // The revenue model's support k theta dwarfs the truth's for large k; its
    // tail beyond the truth's range carries no usable mass.
    let e_hi = if id == ExampleId::Cost { e_truth.max(k * theta_hi) } else { e_truth };
    let z = KernelSpec::Uniform { lo: Coef::Const(0.0), hi: Coef::Const(1.0) };
    Ok(SMDPSpec {
        state_axes: vec![StateAxis::new("z", 0.0, 1.0).with_spacing(spacing), StateAxis::new("e", 0.0, e_hi).with_spacing(spacing)],
        actions: ActionDomain::Interval { lo: eps, hi: x_hi, spacing: action_spacing },
        params: ParamDomain::new(vec![0.0], vec![theta_hi]),
        true_kernel: KernelSpec::Product(vec![
            z.clone(),
            KernelSpec::TruncatedExponential { theta: Coef::Const(rate), bound: TruncBound::Fixed(Coef::Const(bstar)), action_power: power },
        ]),
        model_family: KernelSpec::Product(vec![
            z,
            KernelSpec::TruncatedExponential { theta: Coef::Param(0), bound: TruncBound::RateMultiple(k), action_power: 0.0 },
        ]),
        payoff: PayoffSpec::new(payoff, Growth::Bounded),
        discount: c.get("delta"),
        initial: InitialDist::Uniform,
    })
}

/// Suggested grid: cell counts plus the truncation radius for unbounded axes.
#[derive(Clone, Debug, PartialEq)]
pub struct ExampleGrid {
    pub sizes: GridSizes,
    pub radius: f64,
}

pub fn default_grid(id: ExampleId, spec: &SMDPSpec) -> ExampleGrid {
    let p = &spec.params;
    let axis = |i: usize, n: usize| (p.lo[i], p.hi[i], n);
    let (states, actions, params, radius) = match id {
        ExampleId::Ar1 => (vec![401], 1, vec![axis(0, 21), axis(1, 10)], 10.0),
        ExampleId::Ar1Action => (vec![201], 5, vec![axis(0, 5), axis(1, 5), axis(2, 5)], 10.0),
        ExampleId::Savings => (vec![60, 10], 41, vec![axis(0, 21)], 6.0),
        ExampleId::Cost => (vec![20, 80], 40, vec![axis(0, 161)], 0.0),
        ExampleId::Revenue => (vec![20, 40], 40, vec![axis(0, 161)], 0.0),
    };
    ExampleGrid { sizes: GridSizes { states, actions, params }, radius }
}

/// Closed-form equilibrium quantities of an example.
#[derive(Clone, Debug, PartialEq)]
pub struct ExampleOracle {
    pub id: ExampleId,
    pub quantities: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    /// No equilibrium exists (unit root).
    pub no_equilibrium: bool,
}

pub fn oracle(id: ExampleId, params: &BTreeMap<String, f64>) -> Result<ExampleOracle> {
    let c = Consts::resolve(id, params)?;
    let mut q = BTreeMap::new();
    let mut notes = Vec::new();
    let mut no_equilibrium = false;
    match id {
        ExampleId::Ar1 | ExampleId::Ar1Action => {
            let (a0, b0) = (c.get("a0"), c.get("b0"));
            if a0 >= 1.0 && b0 > 0.0 {
                no_equilibrium = true;
                notes.push("unit root: the chain has no stationary distribution".into());
            } else {
                q.insert("stationary_variance".into(), b0 * b0 / (1.0 - a0 * a0));
                notes.push("stationary law N(mean, b0^2 / (1 - a0^2))".into());
                if id == ExampleId::Ar1Action {
                    let c0 = c.get("c0");
                    let sign = if c0 > 0.0 { 1.0 } else if c0 < 0.0 { -1.0 } else { 0.0 };
                    q.insert("optimal_action".into(), sign);
                    q.insert("stationary_mean".into(), c0 * sign / (1.0 - a0));
                    notes.push("x = sign(c0) is dominant; every action is optimal when c0 = 0".into());
                } else {
                    q.insert("stationary_mean".into(), 0.0);
                }
            }
        }
        ExampleId::Savings => {
            let (delta, beta_star) = (c.get("delta"), c.get("beta_star"));
            let beta = if c.get("beta").is_nan() { beta_star } else { c.get("beta") };
            q.insert("beta_star".into(), beta_star);
            q.insert("policy_fraction".into(), savings_fraction(delta, beta, c.get("z")));
            notes.push("saved fraction A_z(beta) = 0.5 delta beta / ((1 - delta beta) z + 0.5 delta beta)".into());
            notes.push("the equilibrium beta lies in (0, beta*)".into());
        }
        ExampleId::Cost => {
            let (mean, kk) = (c.get("mean"), truncation_constant(c.get("k")));
            let theta = (kk * mean / 2.0).sqrt();
            q.insert("K".into(), kk);
            q.insert("theta_star".into(), theta);
            q.insert("x_star_slope".into(), kk / theta);
            notes.push("theta* = sqrt(K E / 2), x*(z) = K z / theta*".into());
        }
        ExampleId::Revenue => {
            let (mean, kk) = (c.get("mean"), truncation_constant(c.get("k")));
            let theta = 2.0 * (kk * mean).powf(2.0 / 3.0);
            q.insert("K".into(), kk);
            q.insert("theta_star".into(), theta);
            q.insert("x_star_slope".into(), theta / (2.0 * kk));
            q.insert("theta_fixed_point".into(), 2.0 * mean.powf(2.0 / 3.0) * kk.powf(1.0 / 3.0));
            notes.push("theta* = 2 (K E)^(2/3), x*(z) = z theta* / (2 K)".into());
            notes.push("theta_fixed_point solves theta = E_m[e'] exactly; equal to theta* when K = 1".into());
        }
    }
    Ok(ExampleOracle { id, quantities: q, notes, no_equilibrium })
}
