use roughwave::noise::{RotatedGrid, RotatedSampler};
use roughwave::sigma::SigmaFn;
use roughwave::solver::{
    cone_cross_check, pull_back, solve, solve_marching, solve_picard, Scheme, SolverConfig, Termination,
};
use roughwave::Exec;

fn sampler(n: usize) -> RotatedSampler {
    RotatedSampler::new(0.75, 0.5, RotatedGrid::new(0.5, n).unwrap()).unwrap()
}

#[test]
fn both_schemes_vanish_on_the_initial_line() {
    let s = sampler(16);
    let x = s.sample(3, 0);
    let cfg = SolverConfig::default();
    for scheme in [Scheme::Marching, Scheme::Picard] {
        let r = solve(&x, &SigmaFn::bump(), &SolverConfig { scheme, ..cfg }).unwrap();
        for i in 0..=16 {
            for j in 0..=16 - i {
                assert_eq!(r.y_rotated.at(i, j), 0.0, "{scheme:?} ({i}, {j})");
            }
        }
    }
}

#[test]
fn converged_picard_is_within_ten_tolerances_of_marching() {
    let s = sampler(24);
    for seed in 0..4 {
        let x = s.sample(seed, 0);
        let cfg = SolverConfig { picard_tol: 1e-9, ..SolverConfig::default() };
        let m = solve_marching(&x, &SigmaFn::tanh(), &cfg).unwrap();
        let p = solve_picard(&x, &SigmaFn::tanh(), &cfg).unwrap();
        assert_eq!(p.diagnostics.termination, Termination::Tolerance);
        let d = m.y_rotated.values().iter().zip(p.y_rotated.values()).fold(0.0f64, |a, (u, v)| a.max((u - v).abs()));
        assert!(d <= 10.0 * cfg.picard_tol, "seed {seed}: {d}");
    }
}

#[test]
fn execution_strategy_does_not_change_the_result() {
    let x = sampler(24).sample(9, 0);
    let seq = SolverConfig { exec: Exec::Sequential, ..SolverConfig::default() };
    let par = SolverConfig { exec: Exec::Parallel, ..SolverConfig::default() };
    for sig in [SigmaFn::bump(), SigmaFn::constant(1.0)] {
        let a = solve_marching(&x, &sig, &seq).unwrap();
        let b = solve_marching(&x, &sig, &par).unwrap();
        assert_eq!(a.y_rotated, b.y_rotated);
    }
}

#[test]
fn seminorms_stay_bounded_under_refinement() {
    // γ + γ̂ = 1.5 for (H, ν) = (0.75, 0.5); κ = κ̂ = 0.6 lies below each
    let s = sampler(64);
    let cfg = SolverConfig { kappa: 0.6, kappa_hat: 0.6, ..SolverConfig::default() };
    cfg.check_noise_exponents(0.75, 0.75).unwrap();
    for seed in 0..3 {
        let fine = s.sample(seed, 0);
        let coarse = fine.restrict(2).unwrap();
        let nf = solve_marching(&fine, &SigmaFn::bump(), &cfg).unwrap().diagnostics.seminorms;
        let nc = solve_marching(&coarse, &SigmaFn::bump(), &cfg).unwrap().diagnostics.seminorms;
        assert!(nf.total.is_finite());
        assert!(nf.total / nc.total < 2.0, "seed {seed}: {} vs {}", nf.total, nc.total);
    }
}

#[test]
fn target_exponents_outside_the_window_are_rejected() {
    let cfg = SolverConfig { kappa: 0.2, ..SolverConfig::default() };
    assert!(cfg.check_noise_exponents(0.75, 0.75).is_err());
    assert!(SolverConfig::default().check_noise_exponents(0.45, 0.9).is_err());
}

#[test]
fn sine_coefficient_keeps_the_zero_solution() {
    // no initial data and σ(0) = 0: y ≡ 0 solves the equation
    let x = sampler(16).sample(2, 0);
    let r = solve_marching(&x, &SigmaFn::sin(), &SolverConfig::default()).unwrap();
    assert!(r.y_rotated.values().iter().all(|&v| v == 0.0));
}

#[test]
fn pulled_back_solution_vanishes_at_time_zero() {
    let x = sampler(16).sample(1, 0);
    let r = solve_marching(&x, &SigmaFn::bump(), &SolverConfig::default()).unwrap();
    let pts: Vec<(f64, f64)> = (0..=20).map(|k| (0.0, -0.35 + 0.035 * k as f64)).collect();
    assert!(pull_back(&r.y_rotated, &pts).unwrap().iter().all(|v| v.abs() < 1e-14));
    let inner: Vec<(f64, f64)> = (1..10).map(|k| (0.05 * k as f64, 0.0)).collect();
    assert!(pull_back(&r.y_rotated, &inner).unwrap().iter().all(|v| v.is_finite()));
}

#[test]
fn cone_integral_reproduces_marching_at_probe_nodes() {
    let x = sampler(48).sample(5, 0);
    let cfg = SolverConfig::default();
    for sig in [SigmaFn::bump(), SigmaFn::tanh(), SigmaFn::constant(-1.5)] {
        let y = solve_marching(&x, &sig, &cfg).unwrap().y_rotated;
        let check = cone_cross_check(&x, &y, &sig, &cfg).unwrap();
        assert!(check.passed && check.probes >= 9, "{check:?}");
        assert!(check.worst < 1e-13, "{check:?}");
    }
}

#[test]
fn cone_cross_check_detects_a_wrong_solution() {
    let x = sampler(32).sample(5, 0);
    let cfg = SolverConfig::default();
    let sig = SigmaFn::bump();
    let y = solve_marching(&x, &sig, &cfg).unwrap().y_rotated.map(|v| v * (1.0 + 1e-6)).unwrap();
    assert!(!cone_cross_check(&x, &y, &sig, &cfg).unwrap().passed);
}
