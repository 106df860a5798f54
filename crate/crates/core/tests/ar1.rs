use berknash::bellman::MixedKernel;
use berknash::discretize::{discretize_smdp, level_box, truncation_bounds, CheckGrid, FiniteSMDP, GridSizes};
use berknash::divergence::{closest_parameters, weighted_kl};
use berknash::equilibrium::{lyapunov_check, solve_berk_nash, verify_equilibrium, Lyapunov, SolveOptions, Tolerances};
use berknash::examples::{make_example, ExampleId};
use berknash::learning::Belief;
use berknash::model::SMDPSpec;
use berknash::special::norm_cdf;
use berknash::stationary::{stationarity_residual, stationary_distribution, tv, JointMeasure, Policy};
use std::collections::BTreeMap;

fn ar1(a0: f64, b0: f64) -> SMDPSpec {
    let p: BTreeMap<String, f64> = [("a0".to_string(), a0), ("b0".to_string(), b0)].into();
    make_example(ExampleId::Ar1, &p).unwrap()
}

fn grid(spec: &SMDPSpec, n: usize, radius: f64, params: Vec<(f64, f64, usize)>) -> FiniteSMDP {
    discretize_smdp(spec, &level_box(spec, radius), &GridSizes { states: vec![n], actions: 1, params }).unwrap()
}

fn closed_form_kl(a0: f64, b0: f64, a: f64, b: f64, s: f64) -> f64 {
    (b / b0).ln() + (b0 * b0 + (a0 * s - a * s).powi(2)) / (2.0 * b * b) - 0.5
}

#[test]
fn stationary_law_is_normal() {
    let spec = ar1(0.5, 1.0);
    let f = grid(&spec, 401, 10.0, vec![(0.5, 0.5, 1), (1.0, 1.0, 1)]);
    let st = stationary_distribution(&f, &MixedKernel::truth(&f), &Policy::uniform(401, 1), None, 1e-12, 1_000_000).unwrap();
    let sd = (4.0f64 / 3.0).sqrt();
    let want: Vec<f64> = (0..401)
        .map(|i| {
            let c = f.states.cell(i)[0];
            norm_cdf(c.1 / sd) - norm_cdf(c.0 / sd)
        })
        .collect();
    assert!(tv(&st.measure.marginal(), &want) < 0.02);
    assert!(stationarity_residual(&f, &st.measure, &MixedKernel::truth(&f)).unwrap() <= 1e-12);
}

#[test]
fn correctly_specified_equilibrium() {
    let spec = ar1(0.5, 1.0);
    let f = grid(&spec, 201, 10.0, vec![(0.0, 2.0, 21), (0.1, 1.0, 10)]);
    let rep = solve_berk_nash(&f, &SolveOptions::default()).unwrap();
    assert!(rep.converged);
    let truth = f.params.nearest(&[0.5, 1.0]);
    assert!(rep.nu.weights[truth] >= 0.99);
    assert!((rep.m.state_variance(&f, 0) / (4.0 / 3.0) - 1.0).abs() < 0.03);
    assert!(rep.kl_min.finite().unwrap() < 1e-12);
}

#[test]
fn verify_detects_wrong_belief_and_nonstationary_measure() {
    let spec = ar1(0.5, 1.0);
    let f = grid(&spec, 201, 10.0, vec![(0.0, 2.0, 21), (0.1, 1.0, 10)]);
    let st = stationary_distribution(&f, &MixedKernel::truth(&f), &Policy::uniform(201, 1), None, 1e-12, 1_000_000).unwrap();
    let wrong = Belief::point(f.n_params(), f.params.nearest(&[0.9, 1.0]));
    let rep = verify_equilibrium(&f, &st.measure, &wrong, &Tolerances::default()).unwrap();
    assert!(rep.belief_gap.finite().unwrap() > 0.0);
    assert!(!rep.converged);

    let uniform = JointMeasure::new(201, 1, vec![1.0 / 201.0; 201]).unwrap();
    let right = Belief::point(f.n_params(), f.params.nearest(&[0.5, 1.0]));
    let rep = verify_equilibrium(&f, &uniform, &right, &Tolerances::default()).unwrap();
    assert!(rep.stationarity_residual > 0.1);
}

#[test]
fn argmin_is_the_truth() {
    let spec = ar1(0.5, 1.0);
    let f = grid(&spec, 201, 10.0, vec![(0.0, 2.0, 21), (0.1, 1.0, 10)]);
    let st = stationary_distribution(&f, &MixedKernel::truth(&f), &Policy::uniform(201, 1), None, 1e-12, 1_000_000).unwrap();
    let prof = closest_parameters(&st.measure, &f, None).unwrap();
    assert_eq!(prof.argmin, vec![f.params.nearest(&[0.5, 1.0])]);
}

#[test]
fn degenerate_measure_divergence() {
    // theta = (0.7, 1), s = 1: 0.04 / 2 = 0.02.
    let spec = ar1(0.5, 1.0);
    assert!((closed_form_kl(0.5, 1.0, 0.7, 1.0, 1.0) - 0.02).abs() < 1e-15);
    let f = grid(&spec, 800, 10.0, vec![(0.7, 0.7, 1), (1.0, 1.0, 1)]);
    let c = f.states.locate(&[1.0]);
    let k = weighted_kl(&JointMeasure::point(800, 1, c, 0), 0, &f).unwrap().finite().unwrap();
    let s = f.states.center(c)[0];
    assert!((k - closed_form_kl(0.5, 1.0, 0.7, 1.0, s)).abs() < 1e-5);
}

/// The cell containing `s` has `s` as its left edge at every resolution
/// used, so the error is dominated by the `h/2` offset and halves.
#[test]
fn divergence_error_halves_with_cell_width() {
    let spec = ar1(0.5, 1.0);
    let mut count = 0;
    for a in [0.2, 0.8, 1.2] {
        for b in [0.7, 1.0] {
            for s in [-2.0, 1.0, 2.5] {
                let errs: Vec<f64> = [200, 400, 800]
                    .iter()
                    .map(|&n| {
                        let f = grid(&spec, n, 10.0, vec![(a, a, 1), (b, b, 1)]);
                        let c = f.states.locate(&[s]);
                        let k = weighted_kl(&JointMeasure::point(n, 1, c, 0), 0, &f).unwrap().finite().unwrap();
                        k - closed_form_kl(0.5, 1.0, a, b, s)
                    })
                    .collect();
                for w in errs.windows(2) {
                    let r = w[1] / w[0];
                    assert!((0.4..=0.6).contains(&r), "a {a} b {b} s {s}: errors {errs:?}");
                }
                count += 1;
            }
        }
    }
    assert!(count >= 12);
}

#[test]
fn lyapunov_certificates() {
    let states: Vec<f64> = (0..200).map(|i| 20.0 * i as f64 / 199.0).collect();
    let r = lyapunov_check(&ar1(0.5, 1.0), &Lyapunov::AbsNorm, &states, &[0.0]).unwrap();
    assert!(r.pass);
    assert!((r.alpha - 0.5).abs() < 0.025);
    assert!((r.beta / (2.0 / std::f64::consts::PI).sqrt() - 1.0).abs() < 0.05);
    for a0 in [1.0, 1.2] {
        let r = lyapunov_check(&ar1(a0, 1.0), &Lyapunov::AbsNorm, &states, &[0.0]).unwrap();
        assert!(!r.pass);
        let (_, _, ratio) = r.witness.unwrap();
        assert!(ratio >= 1.0 - 1e-9);
    }
}

#[test]
fn ladder_levels() {
    let l = truncation_bounds(&ar1(0.5, 1.0), 3, 5.0, &CheckGrid::default()).unwrap();
    assert_eq!(l.levels, vec![vec![(-5.0, 5.0)], vec![(-10.0, 10.0)], vec![(-15.0, 15.0)]]);
}
