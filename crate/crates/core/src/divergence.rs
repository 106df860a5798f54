//! Relative entropy, weighted KL divergence and closest parameters.

use crate::discretize::FiniteSMDP;
use crate::stationary::JointMeasure;
use crate::{Error, ExtReal, Result};
use rayon::prelude::*;

/// `K_Q(m, theta)` over the parameter grid and the near-minimizers.
#[derive(Clone, Debug, PartialEq)]
pub struct KlProfile {
    pub values: Vec<ExtReal>,
    /// Indices with `K <= min K + tolerance`, ascending.
    pub argmin: Vec<usize>,
    pub tolerance: f64,
}

impl KlProfile {
    pub fn min(&self) -> ExtReal {
        self.values.iter().copied().fold(ExtReal::Infinite, ExtReal::min)
    }
}

/// `sum_i p_i ln(p_i / q_i)` with `0 ln 0 = 0` and `p_i > 0, q_i = 0 -> inf`.
pub fn relative_entropy_row(p: &[f64], q: &[f64]) -> Result<ExtReal> {
    if p.len() != q.len() {
        return Err(Error::Shape(format!("relative entropy of vectors of length {} and {}", p.len(), q.len())));
    }
    for v in [p, q] {
        let s: f64 = v.iter().sum();
        if (s - 1.0).abs() > 1e-10 || v.iter().any(|x| *x < 0.0) {
            return Err(Error::Domain(format!("not a probability vector (sum {s})")));
        }
    }
    let mut acc = 0.0;
    for (pi, qi) in p.iter().zip(q) {
        if *pi == 0.0 {
            continue;
        }
        if *qi == 0.0 {
            return Ok(ExtReal::Infinite);
        }
        acc += pi * (pi / qi).ln();
    }
    Ok(ExtReal::Finite(acc))
}

fn aggregate(m: &JointMeasure, f: &FiniteSMDP) -> Result<Vec<f64>> {
    if m.n_states != f.n_states() || m.n_actions != f.n_actions() {
        return Err(Error::Shape(format!(
            "measure is {}x{}, grid is {}x{}",
            m.n_states,
            m.n_actions,
            f.n_states(),
            f.n_actions()
        )));
    }
    let keys = &f.kl.keys;
    let mut agg = vec![0.0; keys.n_keys()];
    for s in 0..m.n_states {
        for x in 0..m.n_actions {
            let w = m.get(s, x);
            if w != 0.0 {
                agg[keys.key(s, x)] += w;
            }
        }
    }
    Ok(agg)
}

fn dot(agg: &[f64], row: &[ExtReal]) -> ExtReal {
    let mut acc = 0.0;
    for (w, k) in agg.iter().zip(row) {
        if *w == 0.0 {
            continue;
        }
        match k {
            ExtReal::Finite(v) => acc += w * v,
            ExtReal::Infinite => return ExtReal::Infinite,
        }
    }
    ExtReal::Finite(acc)
}

/// `K_Q(m, theta_t) = sum_{s,x} m(s,x) KL(Q(s,x) || Q_theta(s,x))`; cells
/// with `m = 0` never contribute, even when their divergence is infinite.
pub fn weighted_kl(m: &JointMeasure, t: usize, f: &FiniteSMDP) -> Result<ExtReal> {
    if t >= f.n_params() {
        return Err(Error::Shape(format!("parameter index {t} of {}", f.n_params())));
    }
    Ok(dot(&aggregate(m, f)?, &f.kl.values[t]))
}

/// [`weighted_kl`] for every grid parameter.
pub fn weighted_kl_all(m: &JointMeasure, f: &FiniteSMDP) -> Result<Vec<ExtReal>> {
    let agg = aggregate(m, f)?;
    Ok(f.kl.values.par_iter().map(|row| dot(&agg, row)).collect())
}

/// Band width used when no tolerance is given: `1e-8 (1 + |min K|)`.
pub fn default_tolerance(min: f64) -> f64 {
    1e-8 * (1.0 + min.abs())
}

/// All grid parameters within `tol` of the minimal weighted divergence.
/// `tol = None` uses [`default_tolerance`].
pub fn closest_parameters(m: &JointMeasure, f: &FiniteSMDP, tol: Option<f64>) -> Result<KlProfile> {
    let values = weighted_kl_all(m, f)?;
    profile(values, tol)
}

pub(crate) fn profile(values: Vec<ExtReal>, tol: Option<f64>) -> Result<KlProfile> {
    let min = values.iter().copied().fold(ExtReal::Infinite, ExtReal::min);
    let ExtReal::Finite(min) = min else {
        return Err(Error::NoDominatingParameter);
    };
    let tolerance = tol.unwrap_or_else(|| default_tolerance(min));
    if !(tolerance >= 0.0) {
        return Err(Error::Domain(format!("band tolerance {tolerance} must be nonnegative")));
    }
    let argmin = values.iter().enumerate().filter(|(_, v)| **v <= ExtReal::Finite(min + tolerance)).map(|(i, _)| i).collect();
    Ok(KlProfile { values, argmin, tolerance })
}

/// Minimizer of a divergence profile between grid points: along each
/// parameter axis, the vertex of the parabola through the grid minimizer and
/// its two neighbours. Axes where the minimizer sits on the edge, or a
/// neighbour is infinite, keep the grid coordinate.
pub fn interpolated_minimizer(f: &FiniteSMDP, values: &[ExtReal]) -> Vec<f64> {
    let grid = &f.params;
    let t = (0..values.len()).fold(0, |b, i| if values[i] < values[b] { i } else { b });
    let mut out = grid.points[t].clone();
    let mut stride = 1;
    for k in (0..grid.axes.len()).rev() {
        let axis = &grid.axes[k];
        let j = (t / stride) % axis.len();
        if j > 0 && j + 1 < axis.len() {
            if let (ExtReal::Finite(y0), ExtReal::Finite(y1), ExtReal::Finite(y2)) =
                (values[t - stride], values[t], values[t + stride])
            {
                let (x0, x1, x2) = (axis[j - 1], axis[j], axis[j + 1]);
                let num = (x1 - x0).powi(2) * (y1 - y2) - (x1 - x2).powi(2) * (y1 - y0);
                let den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
                if den != 0.0 {
                    out[k] = (x1 - 0.5 * num / den).clamp(x0, x2);
                }
            }
        }
        stride *= axis.len();
    }
    out
}
