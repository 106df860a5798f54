//! Plain-text artifacts: CSV tables and key/value reports.
//!
//! Every artifact starts with `#`-prefixed header lines supplied by the
//! caller. Numbers use Rust's shortest round-trip formatting.

use crate::discretize::FiniteSMDP;
use crate::equilibrium::EquilibriumReport;
use crate::learning::{Belief, LearningTrace};
use crate::stationary::JointMeasure;
use crate::ExtReal;
use std::fmt::Write;

fn start(header: &[String]) -> String {
    let mut out = String::new();
    for h in header {
        let _ = writeln!(out, "# {h}");
    }
    out
}

fn state_columns(f: &FiniteSMDP) -> String {
    f.spec.state_axes.iter().map(|a| a.name.clone()).collect::<Vec<_>>().join(",")
}

fn theta_columns(f: &FiniteSMDP) -> String {
    (0..f.spec.params.dim()).map(|i| format!("theta{i}")).collect::<Vec<_>>().join(",")
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Cells of `m` with positive weight: state centers, action, weight.
pub fn measure_csv(f: &FiniteSMDP, m: &JointMeasure, header: &[String]) -> String {
    let mut out = start(header);
    let _ = writeln!(out, "{},x,weight", state_columns(f));
    for s in 0..m.n_states {
        for x in 0..m.n_actions {
            let w = m.get(s, x);
            if w > 0.0 {
                let _ = writeln!(out, "{},{},{}", join(&f.states.center(s)), f.actions[x], w);
            }
        }
    }
    out
}

pub fn belief_csv(f: &FiniteSMDP, nu: &Belief, header: &[String]) -> String {
    let mut out = start(header);
    let _ = writeln!(out, "{},weight", theta_columns(f));
    for (p, w) in f.params.points.iter().zip(&nu.weights) {
        let _ = writeln!(out, "{},{}", join(p), w);
    }
    out
}

pub fn kl_csv(f: &FiniteSMDP, values: &[ExtReal], header: &[String]) -> String {
    let mut out = start(header);
    let _ = writeln!(out, "{},kl", theta_columns(f));
    for (p, v) in f.params.points.iter().zip(values) {
        let _ = writeln!(out, "{},{}", join(p), v);
    }
    out
}

pub fn trace_csv(rep: &EquilibriumReport, header: &[String]) -> String {
    let mut out = start(header);
    out.push_str("iteration,argmin,policy_hash,tv_step\n");
    for (i, e) in rep.trace.iter().enumerate() {
        let argmin = e.argmin.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(";");
        let _ = writeln!(out, "{},{},{:016x},{}", i, argmin, e.policy_hash, e.tv_step);
    }
    out
}

/// `key = value` lines.
pub fn report_text(pairs: &[(String, String)], header: &[String]) -> String {
    let mut out = start(header);
    for (k, v) in pairs {
        let _ = writeln!(out, "{k} = {v}");
    }
    out
}

/// Summary entries of an equilibrium report.
pub fn report_pairs(f: &FiniteSMDP, rep: &EquilibriumReport) -> Vec<(String, String)> {
    let top = rep.nu.weights.iter().copied().enumerate().fold((0, f64::NEG_INFINITY), |b, (i, w)| if w > b.1 { (i, w) } else { b });
    let mut v = vec![
        ("converged".to_string(), rep.converged.to_string()),
        ("iterations".into(), rep.iterations.to_string()),
        ("restart".into(), rep.restart.to_string()),
        ("optimality_gap".into(), rep.optimality_gap.to_string()),
        ("belief_gap".into(), rep.belief_gap.to_string()),
        ("stationarity_residual".into(), rep.stationarity_residual.to_string()),
        ("kl_min".into(), rep.kl_min.to_string()),
        ("tol_optimality".into(), rep.tolerances.optimality.to_string()),
        ("tol_belief".into(), rep.tolerances.belief.map_or("default".into(), |b| b.to_string())),
        ("tol_stationarity".into(), rep.tolerances.stationarity.to_string()),
        ("singleton_argmin".into(), rep.singleton_argmin.to_string()),
        ("theta_mean".into(), join(&rep.theta_mean(f))),
        ("theta_mode".into(), join(&f.params.points[top.0])),
        ("theta_mode_weight".into(), top.1.to_string()),
    ];
    v.push(("states".into(), f.n_states().to_string()));
    v.push(("actions".into(), f.n_actions().to_string()));
    v.push(("params".into(), f.n_params().to_string()));
    v
}

pub fn history_csv(f: &FiniteSMDP, t: &LearningTrace, header: &[String]) -> String {
    let mut out = start(header);
    let _ = writeln!(out, "k,{},x", state_columns(f));
    for (k, (s, x)) in t.history.iter().enumerate() {
        let _ = writeln!(out, "{},{},{}", k, join(&f.states.center(*s)), f.actions[*x]);
    }
    out
}

/// Posterior snapshots; only parameters with positive weight are listed.
pub fn beliefs_csv(f: &FiniteSMDP, t: &LearningTrace, header: &[String]) -> String {
    let mut out = start(header);
    let _ = writeln!(out, "k,{},weight", theta_columns(f));
    for (k, b) in &t.beliefs {
        for (p, w) in f.params.points.iter().zip(&b.weights) {
            if *w > 0.0 {
                let _ = writeln!(out, "{},{},{}", k, join(p), w);
            }
        }
    }
    out
}

pub fn frequencies_csv(f: &FiniteSMDP, t: &LearningTrace, header: &[String]) -> String {
    let mut out = start(header);
    let _ = writeln!(out, "k,{},x,weight", state_columns(f));
    for (k, m) in &t.freq {
        for s in 0..m.n_states {
            for x in 0..m.n_actions {
                let w = m.get(s, x);
                if w > 0.0 {
                    let _ = writeln!(out, "{},{},{},{}", k, join(&f.states.center(s)), f.actions[x], w);
                }
            }
        }
    }
    out
}

/// State cells with their bounds, initial mass and representative point.
pub fn grid_csv(f: &FiniteSMDP, header: &[String]) -> String {
    let mut out = start(header);
    let names: Vec<String> = f.spec.state_axes.iter().map(|a| a.name.clone()).collect();
    let bounds: Vec<String> = names.iter().map(|n| format!("{n}_lo,{n}_hi")).collect();
    let _ = writeln!(out, "index,{},{},q0", names.join(","), bounds.join(","));
    for s in 0..f.n_states() {
        let cell: Vec<f64> = f.states.cell(s).iter().flat_map(|(a, b)| [*a, *b]).collect();
        let _ = writeln!(out, "{},{},{},{}", s, join(&f.states.center(s)), join(&cell), f.q0[s]);
    }
    out
}

pub fn actions_csv(f: &FiniteSMDP, header: &[String]) -> String {
    let mut out = start(header);
    out.push_str("index,x\n");
    for (i, x) in f.actions.iter().enumerate() {
        let _ = writeln!(out, "{i},{x}");
    }
    out
}

pub fn params_csv(f: &FiniteSMDP, header: &[String]) -> String {
    let mut out = start(header);
    let _ = writeln!(out, "index,{},flagged", theta_columns(f));
    for (i, p) in f.params.points.iter().enumerate() {
        let _ = writeln!(out, "{},{},{}", i, join(p), f.flagged_params.contains(&i));
    }
    out
}

/// Nonzero entries of the true transition, one line per `(s, x, s')`.
pub fn truth_csv(f: &FiniteSMDP, header: &[String]) -> String {
    let mut out = start(header);
    out.push_str("s,x,next,prob\n");
    for s in 0..f.n_states() {
        for x in 0..f.n_actions() {
            let row = f.truth.row(s, x).dense(&f.states);
            for (j, p) in row.iter().enumerate() {
                if *p > 0.0 {
                    let _ = writeln!(out, "{s},{x},{j},{p}");
                }
            }
        }
    }
    out
}
