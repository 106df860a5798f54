//! Hand-built 2-state, 2-action, 2-parameter SMDP and naive reference
//! implementations used to cross-check the solver.
#![allow(dead_code)]

use berknash::discretize::{discretize_smdp, level_box, FiniteSMDP, GridSizes};
use berknash::model::SMDPSpec;

pub const N: usize = 2;
pub const NA: usize = 2;
pub const DELTA: f64 = 0.9;
pub const COST: f64 = 0.3;

/// `P(s' = 1 | s, x)` for the truth and the two models. Model 0 is right
/// about action 1, model 1 about action 0, so neither action is a best
/// response to the parameter it makes closest.
pub fn up(table: usize, s: usize, x: usize) -> f64 {
    let base = match (table, x) {
        (0, 0) => 0.3,
        (0, _) => 0.6,
        (1, 0) => 0.5,
        (1, _) => 0.6,
        (_, 0) => 0.3,
        _ => 0.9,
    };
    base + 0.05 * s as f64
}

fn table(t: usize) -> Vec<f64> {
    let mut v = Vec::new();
    for s in 0..N {
        for x in 0..NA {
            let p = up(t, s, x);
            v.extend([1.0 - p, p]);
        }
    }
    v
}

/// Action 1 costs more in state 1, so at most one state can be indifferent.
pub fn payoff(s: usize, x: usize, next: usize) -> f64 {
    next as f64 - (COST + 0.1 * s as f64) * x as f64
}

pub fn hand_spec() -> SMDPSpec {
    let mut pay = Vec::new();
    for s in 0..N {
        for x in 0..NA {
            for next in 0..N {
                pay.push(payoff(s, x, next));
            }
        }
    }
    // Table 0 is the truth; tables 1 and 2 are models 0 and 1.
    SMDPSpec::tabulated(N, NA, table(0), vec![table(1), table(2)], pay, DELTA).unwrap()
}

pub fn hand() -> FiniteSMDP {
    let spec = hand_spec();
    discretize_smdp(&spec, &level_box(&spec, 0.0), &GridSizes { states: vec![N], actions: NA, params: vec![(0.0, 1.0, 2)] }).unwrap()
}

/// `P(next | s, x)`; `table` 0 is the truth, 1 + t is model t.
pub fn prob(table: usize, s: usize, x: usize, next: usize) -> f64 {
    let p = up(table, s, x);
    if next == 1 {
        p
    } else {
        1.0 - p
    }
}

pub fn naive_kl(m: &[f64], t: usize) -> f64 {
    let mut k = 0.0;
    for s in 0..N {
        for x in 0..NA {
            let w = m[s * NA + x];
            if w == 0.0 {
                continue;
            }
            for next in 0..N {
                let p = prob(0, s, x, next);
                if p > 0.0 {
                    k += w * p * (p / prob(1 + t, s, x, next)).ln();
                }
            }
        }
    }
    k
}

/// Value of the `nu`-mixed model by plain value iteration, to 1e-13.
pub fn naive_values(nu: &[f64]) -> Vec<f64> {
    let mut v = vec![0.0; N];
    loop {
        let next: Vec<f64> = (0..N).map(|s| (0..NA).map(|x| naive_q(nu, &v, s, x)).fold(f64::NEG_INFINITY, f64::max)).collect();
        let change = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = next;
        if change < 1e-14 {
            return v;
        }
    }
}

pub fn naive_q(nu: &[f64], v: &[f64], s: usize, x: usize) -> f64 {
    let mut q = 0.0;
    for (t, w) in nu.iter().enumerate() {
        for next in 0..N {
            q += w * prob(1 + t, s, x, next) * (payoff(s, x, next) + DELTA * v[next]);
        }
    }
    q
}

/// Stationary law of the true chain under `policy[s][x]`, from the 2x2
/// balance equation.
pub fn naive_stationary(policy: &[[f64; NA]; N]) -> [f64; 2] {
    let p = |s: usize, next: usize| (0..NA).map(|x| policy[s][x] * prob(0, s, x, next)).sum::<f64>();
    let (a, b) = (p(0, 1), p(1, 0));
    [b / (a + b), a / (a + b)]
}

/// Continuous violation of the equilibrium conditions: m-weighted
/// optimality gap + nu-weighted divergence excess + stationarity residual.
/// Zero exactly at equilibria.
pub fn violation(m: &[f64], nu: &[f64]) -> f64 {
    let v = naive_values(nu);
    let mut opt = 0.0;
    for s in 0..N {
        let q: Vec<f64> = (0..NA).map(|x| naive_q(nu, &v, s, x)).collect();
        let best = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for x in 0..NA {
            opt += m[s * NA + x] * (best - q[x]);
        }
    }
    opt + violation_without_optimality(m, nu)
}

/// Exhaustive search over the mesh `{k / res}` of Δ(S×X) × Δ(Θ).
/// Returns the minimizing `(m, nu, violation)`.
pub fn brute_force(res: usize) -> (Vec<f64>, Vec<f64>, f64) {
    let h = 1.0 / res as f64;
    let mut best = (Vec::new(), Vec::new(), f64::INFINITY);
    for j in 0..=res {
        let nu = [j as f64 * h, 1.0 - j as f64 * h];
        let v = naive_values(&nu);
        let gaps: Vec<f64> = (0..N)
            .flat_map(|s| {
                let q: Vec<f64> = (0..NA).map(|x| naive_q(&nu, &v, s, x)).collect();
                let b = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                q.into_iter().map(move |qx| b - qx)
            })
            .collect();
        for a in 0..=res {
            for b in 0..=res - a {
                for c in 0..=res - a - b {
                    let d = res - a - b - c;
                    let m = [a as f64 * h, b as f64 * h, c as f64 * h, d as f64 * h];
                    let opt: f64 = m.iter().zip(&gaps).map(|(w, g)| w * g).sum();
                    if opt >= best.2 {
                        continue;
                    }
                    let total = opt + violation_without_optimality(&m, &nu);
                    if total < best.2 {
                        best = (m.to_vec(), nu.to_vec(), total);
                    }
                }
            }
        }
    }
    best
}

fn violation_without_optimality(m: &[f64], nu: &[f64]) -> f64 {
    let k = [naive_kl(m, 0), naive_kl(m, 1)];
    let kmin = k[0].min(k[1]);
    let belief = nu[0] * (k[0] - kmin) + nu[1] * (k[1] - kmin);
    let ms = [m[0] + m[1], m[2] + m[3]];
    let mut img = [0.0; 2];
    for s in 0..N {
        for x in 0..NA {
            for (next, i) in img.iter_mut().enumerate() {
                *i += m[s * NA + x] * prob(0, s, x, next);
            }
        }
    }
    belief + 0.5 * ((img[0] - ms[0]).abs() + (img[1] - ms[1]).abs())
}
