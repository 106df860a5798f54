use berknash::bellman::{mix_kernel, optimal_actions, solve_bellman};
use berknash::discretize::{discretize_smdp, level_box, GridSizes};
use berknash::equilibrium::{solve_berk_nash, verify_equilibrium, SolveOptions, Tolerances};
use berknash::examples::{make_example, oracle, savings_fraction, ExampleId};
use berknash::learning::Belief;
use berknash::stationary::{JointMeasure, Policy};
use std::collections::BTreeMap;

fn consts(kv: &[(&str, f64)]) -> BTreeMap<String, f64> {
    kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn ar1_action(c0: f64) -> berknash::discretize::FiniteSMDP {
    let spec = make_example(ExampleId::Ar1Action, &consts(&[("a0", 0.5), ("b0", 1.0), ("c0", c0)])).unwrap();
    let sizes = GridSizes { states: vec![101], actions: 5, params: vec![(0.0, 1.0, 5), (0.0, 1.0, 5), (-1.0, 1.0, 5)] };
    discretize_smdp(&spec, &level_box(&spec, 10.0), &sizes).unwrap()
}

#[test]
fn dominant_action_follows_sign() {
    for (c0, want) in [(1.0, 4), (-1.0, 0)] {
        let f = ar1_action(c0);
        let rep = solve_berk_nash(&f, &SolveOptions::default()).unwrap();
        assert!(rep.converged);
        for (s, ms) in rep.m.marginal().iter().enumerate() {
            if *ms > 0.0 {
                assert_eq!(rep.m.get(s, want), *ms, "c0 {c0} state {s}");
            }
        }
    }
}

#[test]
fn zero_drift_makes_every_action_optimal() {
    let f = ar1_action(0.0);
    let rep = solve_berk_nash(&f, &SolveOptions::default()).unwrap();
    assert!(rep.converged);
    let spread = JointMeasure::from_marginal(&rep.m.marginal(), &Policy::uniform(f.n_states(), 5));
    let again = verify_equilibrium(&f, &spread, &rep.nu, &Tolerances::default()).unwrap();
    assert!(again.converged);
    assert!(again.optimal.iter().all(|set| set.len() == 5));
}

#[test]
fn savings_policy_under_point_belief() {
    let spec = make_example(ExampleId::Savings, &BTreeMap::new()).unwrap();
    let radius = 6.0;
    let sizes = GridSizes { states: vec![40, 8], actions: 31, params: vec![(0.0, 1.0, 11)] };
    let f = discretize_smdp(&spec, &level_box(&spec, radius), &sizes).unwrap();
    let step = f.actions[1] - f.actions[0];
    for beta in [0.3, 0.5, 0.7] {
        let t = f.params.nearest(&[beta]);
        let k = mix_kernel(&Belief::point(f.n_params(), t), &f).unwrap();
        let v = solve_bellman(&f, &k, 1e-9).unwrap();
        let opt = optimal_actions(&f, &k, &v, 1e-9).first();
        for s in 0..f.n_states() {
            let c = f.states.center(s);
            if c[0].ln().abs() <= radius / 2.0 {
                let want = savings_fraction(0.9, f.params.points[t][0], c[1]);
                assert!((f.actions[opt[s]] - want).abs() <= step, "beta {beta} y {} z {}", c[0], c[1]);
            }
        }
    }
}

#[test]
fn savings_equilibrium_belief_below_truth() {
    let spec = make_example(ExampleId::Savings, &BTreeMap::new()).unwrap();
    let sizes = GridSizes { states: vec![40, 8], actions: 31, params: vec![(0.0, 1.0, 11)] };
    let f = discretize_smdp(&spec, &level_box(&spec, 6.0), &sizes).unwrap();
    let rep = solve_berk_nash(&f, &SolveOptions::default()).unwrap();
    assert!(rep.converged);
    let beta_m = rep.theta_mean(&f)[0];
    assert!(beta_m > 0.0 && beta_m < 0.5, "{beta_m}");
}

#[test]
fn cost_equilibrium_near_closed_form() {
    let o = oracle(ExampleId::Cost, &BTreeMap::new()).unwrap();
    let spec = make_example(ExampleId::Cost, &BTreeMap::new()).unwrap();
    let sizes = GridSizes { states: vec![20, 80], actions: 40, params: vec![(0.4, 1.2, 161)] };
    let f = discretize_smdp(&spec, &level_box(&spec, 0.0), &sizes).unwrap();
    let rep = solve_berk_nash(&f, &SolveOptions::default()).unwrap();
    assert!(rep.converged);
    let theta = rep.theta_mean(&f)[0];
    assert!((theta / o.quantities["theta_star"] - 1.0).abs() < 0.02, "{theta}");
}

#[test]
fn revenue_equilibrium_near_closed_form() {
    let o = oracle(ExampleId::Revenue, &BTreeMap::new()).unwrap();
    let spec = make_example(ExampleId::Revenue, &BTreeMap::new()).unwrap();
    let sizes = GridSizes { states: vec![20, 40], actions: 40, params: vec![(1.0, 3.0, 161)] };
    let f = discretize_smdp(&spec, &level_box(&spec, 0.0), &sizes).unwrap();
    let rep = solve_berk_nash(&f, &SolveOptions::default()).unwrap();
    assert!(rep.converged);
    let theta = rep.theta_mean(&f)[0];
    assert!((theta / o.quantities["theta_star"] - 1.0).abs() < 0.02, "{theta}");
}

#[test]
fn oracles_are_pure() {
    for id in ExampleId::ALL {
        let p = match id {
            ExampleId::Ar1 => consts(&[("a0", 0.5), ("b0", 1.0)]),
            ExampleId::Ar1Action => consts(&[("a0", 0.5), ("b0", 1.0), ("c0", 1.0)]),
            _ => BTreeMap::new(),
        };
        assert_eq!(oracle(id, &p).unwrap(), oracle(id, &p).unwrap());
    }
    let unit_root = oracle(ExampleId::Ar1, &consts(&[("a0", 1.0), ("b0", 1.0)])).unwrap();
    assert!(unit_root.no_equilibrium);
}
