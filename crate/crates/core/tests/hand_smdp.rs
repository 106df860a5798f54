mod common;

use berknash::bellman::{mix_kernel, solve_bellman, MixedKernel};
use berknash::divergence::weighted_kl;
use berknash::equilibrium::{solve_berk_nash, verify_equilibrium, SolveOptions, Tolerances};
use berknash::learning::Belief;
use berknash::stationary::{stationary_distribution, JointMeasure, Policy};
use common::*;

const MEASURES: [[f64; 4]; 4] = [[0.25, 0.25, 0.25, 0.25], [1.0, 0.0, 0.0, 0.0], [0.1, 0.2, 0.3, 0.4], [0.0, 0.45, 0.05, 0.5]];

#[test]
fn weighted_kl_matches_naive() {
    let f = hand();
    for w in MEASURES {
        let m = JointMeasure::new(N, NA, w.to_vec()).unwrap();
        for t in 0..2 {
            let k = weighted_kl(&m, t, &f).unwrap().finite().unwrap();
            assert!((k - naive_kl(&w, t)).abs() < 1e-8, "m {w:?} t {t}: {k} vs {}", naive_kl(&w, t));
        }
    }
}

#[test]
fn stationary_matches_naive() {
    let f = hand();
    for p in [[[1.0, 0.0], [0.0, 1.0]], [[0.5, 0.5], [0.5, 0.5]], [[0.2, 0.8], [0.9, 0.1]], [[0.0, 1.0], [0.0, 1.0]]] {
        let policy = Policy::new(N, NA, p.iter().flatten().copied().collect()).unwrap();
        let st = stationary_distribution(&f, &MixedKernel::truth(&f), &policy, None, 1e-14, 100_000).unwrap();
        let want = naive_stationary(&p);
        let got = st.measure.marginal();
        assert!((got[0] - want[0]).abs() < 1e-8 && (got[1] - want[1]).abs() < 1e-8, "{got:?} vs {want:?}");
    }
}

#[test]
fn bellman_matches_naive() {
    let f = hand();
    for nu in [[1.0, 0.0], [0.0, 1.0], [0.6, 0.4], [0.25, 0.75]] {
        let k = mix_kernel(&Belief::new(nu.to_vec()).unwrap(), &f).unwrap();
        let v = solve_bellman(&f, &k, 1e-10).unwrap();
        let want = naive_values(&nu);
        for s in 0..N {
            assert!((v.values[s] - want[s]).abs() < 1e-8, "nu {nu:?} s {s}: {} vs {}", v.values[s], want[s]);
        }
    }
}

#[test]
fn solver_matches_mesh_search() {
    let f = hand();
    let rep = solve_berk_nash(&f, &SolveOptions::default()).unwrap();
    assert!(rep.converged);
    let res = 40;
    let (m, nu, score) = brute_force(res);
    let h = 1.0 / res as f64;
    let dm = m.iter().zip(&rep.m.weights).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let dn = (nu[0] - rep.nu.weights[0]).abs();
    assert!(dm <= h && dn <= h, "mesh {m:?} {nu:?} ({score}) vs solver {:?} {:?}", rep.m.weights, rep.nu.weights);
    // The solver's point is a zero of the same violation measure.
    assert!(violation(&rep.m.weights, &rep.nu.weights) < 1e-5);
}

#[test]
fn verify_round_trip() {
    let f = hand();
    let rep = solve_berk_nash(&f, &SolveOptions::default()).unwrap();
    let again = verify_equilibrium(&f, &rep.m, &rep.nu, &Tolerances::default()).unwrap();
    assert!(again.converged);
    assert!(again.optimality_gap <= 1e-6 && again.stationarity_residual <= 1e-8);
}
