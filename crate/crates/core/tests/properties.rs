//! Invariants of the linear algebra, smoothing and solver layers, checked on
//! generated inputs.

mod common;

use common::{random_psd, random_symmetric, unit_vector};
use dspca::smoothing::{f_mu_and_grad, project_box, u_star};
use dspca::solver::MAX_ITERS_CAP;
use dspca::{
    dominant_eigenvector, lambda_max, solve_penalized, sym_eig, LoadingVector, SmoothSolver, SolverParams,
    SymMatrix, DEFAULT_ZERO_THRESHOLD,
};
use proptest::prelude::*;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn eig_reconstructs(n in 1usize..=50, seed in any::<u64>()) {
        let z = random_symmetric(n, seed, 5.0);
        let eig = sym_eig(&z).unwrap();
        let err = eig.reconstruct().sub(&z).frobenius_norm() / z.frobenius_norm();
        prop_assert!(err <= 1e-8, "relative error {err}");
        prop_assert!(eig.values.windows(2).all(|w| w[0] >= w[1]));
        for i in 0..n {
            let v = eig.vector(i);
            let lead = v.iter().copied().fold(0.0_f64, |m, x| if x.abs() > m.abs() { x } else { m });
            prop_assert!(lead > 0.0);
        }
    }

    #[test]
    fn lambda_max_is_variational_upper_bound(n in 1usize..=20, seed in any::<u64>()) {
        let z = random_symmetric(n, seed, 3.0);
        let top = lambda_max(&z).unwrap();
        for t in 0..100u64 {
            let v = unit_vector(n, seed.wrapping_add(t + 1));
            prop_assert!(z.quad_form(&v) <= top + 1e-12 * (1.0 + top.abs()));
        }
    }

    #[test]
    fn l1_of_rank_one(x in prop::collection::vec(-10.0f64..10.0, 1..30)) {
        let s: f64 = x.iter().map(|v| v.abs()).sum();
        let got = SymMatrix::rank_one(&x, 1.0).l1_norm_all();
        prop_assert!((got - s * s).abs() <= 1e-12 * (s * s).max(f64::MIN_POSITIVE));
    }

    #[test]
    fn dominant_eigenvector_contract(n in 1usize..=12, seed in any::<u64>()) {
        let x = random_psd(n, seed);
        let v = dominant_eigenvector(&x, DEFAULT_ZERO_THRESHOLD).unwrap();
        prop_assert!((v.norm() - 1.0).abs() < 1e-12);
        prop_assert_eq!(v.cardinality, v.values.iter().filter(|x| **x != 0.0).count());
        let max = v.values.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        prop_assert!(v.values.iter().all(|x| *x == 0.0 || x.abs() > DEFAULT_ZERO_THRESHOLD * max * 0.999));
        prop_assert!(v.values.iter().copied().fold(f64::NEG_INFINITY, f64::max) >= max - 1e-15);
    }

    #[test]
    fn u_star_on_spectahedron(n in 1usize..=30, seed in any::<u64>(), log_mu in -4.0f64..1.0) {
        let z = random_symmetric(n, seed, 2.0);
        let mu = 10f64.powf(log_mu);
        let s = u_star(&z, mu).unwrap();
        prop_assert!((s.x.trace() - 1.0).abs() <= 1e-10);
        let min_eig = sym_eig(&s.x).unwrap().values[n - 1];
        prop_assert!(min_eig >= -1e-12, "min eigenvalue {min_eig}");
        let top = lambda_max(&z).unwrap();
        let slack = mu * (n as f64).ln();
        prop_assert!(s.value <= top + 1e-9 && top <= s.value + slack + 1e-9);
    }

    #[test]
    fn gradient_matches_central_differences(n in 2usize..=12, seed in any::<u64>()) {
        let a = random_psd(n, seed);
        let u = random_symmetric(n, seed ^ 1, 0.5);
        let e = random_symmetric(n, seed ^ 2, 1.0);
        let e = e.scaled(1.0 / e.frobenius_norm());
        let mu = 0.1;
        let t = 1e-5;
        let g = f_mu_and_grad(&a, &u, mu).unwrap();
        let plus = f_mu_and_grad(&a, &u.add(&e.scaled(t)), mu).unwrap().value;
        let minus = f_mu_and_grad(&a, &u.add(&e.scaled(-t)), mu).unwrap().value;
        let fd = (plus - minus) / (2.0 * t);
        let exact = g.x.dot(&e);
        let scale = exact.abs().max(g.x.frobenius_norm());
        prop_assert!((fd - exact).abs() <= 1e-4 * scale, "fd {fd} vs {exact}");
    }

    #[test]
    fn box_projection(n in 1usize..=10, seed in any::<u64>(), bound in 0.1f64..3.0) {
        let v = random_symmetric(n, seed, 5.0);
        let p = project_box(&v, bound);
        prop_assert!(p.max_abs() <= bound);
        prop_assert_eq!(project_box(&p, bound), p.clone());
        for i in 0..n {
            for j in 0..n {
                prop_assert_eq!(p[(i, j)], p[(j, i)]);
                if v[(i, j)].abs() <= bound {
                    prop_assert_eq!(p[(i, j)], v[(i, j)]);
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn solver_iterates_stay_in_box(n in 2usize..=8, seed in any::<u64>(), rho in 0.05f64..1.0) {
        let a = random_psd(n, seed);
        let params = SolverParams::auto(n, 1e-2).unwrap().with_gap_check_every(10);
        let mut solver = SmoothSolver::new(&a, rho, &params).unwrap();
        loop {
            let done = solver.step().unwrap();
            let s = solver.state();
            prop_assert!(s.u.max_abs() <= 1.0 && s.y.max_abs() <= 1.0 && s.w.max_abs() <= 1.0);
            if done {
                break;
            }
        }
        prop_assert!(solver.trace().iter().all(|row| row.gap >= -1e-8));
        let (sol, _) = solver.finish();
        prop_assert!(sol.dual_obj >= sol.primal_obj - 1e-8);
        prop_assert!(sol.gap >= -1e-8);
        if sol.converged {
            prop_assert!(sol.gap <= 1e-2);
        }
        prop_assert!((sol.x.trace() - 1.0).abs() <= 1e-8);
        prop_assert!(sym_eig(&sol.x).unwrap().values[n - 1] >= -1e-8);
        prop_assert!(sol.u.max_abs() <= rho + 1e-12);
    }
}

#[test]
fn auto_params_follow_the_constants() {
    for n in [2usize, 10, 100] {
        let eps = 1e-3;
        let p = SolverParams::auto(n, eps).unwrap();
        let log_n = (n as f64).ln();
        assert!((p.mu - eps / (2.0 * log_n)).abs() <= 1e-15 * p.mu.max(1.0));
        assert!((p.lipschitz - 2.0 * log_n / eps).abs() <= 1e-9 * p.lipschitz);
        assert_eq!(p.d1, (n * n) as f64 / 2.0);
        let bound = ((4.0 / eps) * (p.d1 * p.d2).sqrt()).ceil() as usize;
        assert_eq!(p.iteration_bound(), bound);
        assert_eq!(p.effective_max_iters(), (2 * bound).min(MAX_ITERS_CAP));
    }
    // when the fixed cap does not bind, the cap covers the worst-case bound
    let p = SolverParams::auto(4, 1.0).unwrap();
    assert!(p.effective_max_iters() >= p.iteration_bound());
}

#[test]
fn diagonal_penalized_optimum() {
    // For diagonal A the optimum is max_i (A_ii − ρ) at X = e_i e_iᵀ; random
    // feasible points never beat it.
    let a = SymMatrix::from_diagonal(&[5.0, 1.0, 1.0]);
    let rho = 0.5;
    let sol = solve_penalized(&a, rho, &SolverParams::auto(3, 1e-3).unwrap()).unwrap();
    assert!((sol.primal_obj - 4.5).abs() <= 1e-3);
    let x = dominant_eigenvector(&sol.x, DEFAULT_ZERO_THRESHOLD).unwrap();
    assert_eq!(x, LoadingVector::basis(3, 0));
    for seed in 0..200 {
        let m = random_psd(3, seed);
        let x = m.scaled(1.0 / m.trace());
        assert!(a.dot(&x) - rho * x.l1_norm_all() <= 4.5 + 1e-12);
    }
}

#[test]
fn cardinality_shrinks_with_penalty() {
    // not strictly monotone in theory; allow one reversal per grid
    for seed in 0..3 {
        let a = random_psd(8, 100 + seed);
        let top = a.max_abs();
        let grid: Vec<f64> = (0..20).map(|i| top * 10f64.powf(-2.0 + 2.0 * i as f64 / 19.0)).collect();
        let cards: Vec<usize> = grid
            .iter()
            .map(|&rho| {
                let sol = solve_penalized(&a, rho, &SolverParams::auto(8, 1e-4 * top).unwrap()).unwrap();
                dominant_eigenvector(&sol.x, DEFAULT_ZERO_THRESHOLD).unwrap().cardinality
            })
            .collect();
        let reversals = cards.windows(2).filter(|w| w[1] > w[0]).count();
        assert!(reversals <= 1, "seed {seed}: cardinalities {cards:?}");
        assert_eq!(*cards.last().unwrap(), 1, "{cards:?}");
    }
}

#[test]
fn solver_is_deterministic() {
    let a = random_psd(6, 9);
    let params = SolverParams::auto(6, 1e-3).unwrap();
    let run = || {
        let mut s = SmoothSolver::new(&a, 0.2, &params).unwrap();
        while !s.step().unwrap() {}
        let (sol, trace) = s.finish();
        (sol.x, trace.iter().map(|r| (r.iteration, r.gap.to_bits())).collect::<Vec<_>>())
    };
    assert_eq!(run(), run());
}
