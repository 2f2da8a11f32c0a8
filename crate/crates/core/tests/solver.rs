use std::f64::consts::PI;
use std::sync::Arc;

use dphase::field::{Affine, Constant};
use dphase::nonlinearity::{Nonlinearity, Power, F1};
use dphase::solver::{
    find_upper_constant, minimize_phi, phi_plus, solve_branch, solve_negative, solve_positive, truncation_h_plus,
    Branch, Reaction, SolveOptions,
};
use dphase::{build_mesh, Domain, Error, Exponents, FemFunction, Point, Problem};

fn interval_problem(n: usize, p: f64, q: f64, mu: f64) -> Problem {
    let mesh = Arc::new(build_mesh(Domain::unit_interval(), n).unwrap());
    Problem::new(mesh, Exponents::new(p, q, 1).unwrap(), Arc::new(Constant(mu))).unwrap()
}

fn cubic() -> Arc<dyn Nonlinearity> {
    Arc::new(Power {
        coefficient: 1.0,
        r: 4.0,
    })
}

/// Constant source: `φ` is quadratic for `p = 2`, `μ = 0`.
struct Source(f64);

impl Reaction for Source {
    fn h(&self, _: &Point, _: f64) -> f64 {
        self.0
    }
    fn big_h(&self, _: &Point, s: f64) -> f64 {
        self.0 * s
    }
}

#[test]
fn quadratic_energy_matches_linear_solve() {
    let n = 32;
    let pr = interval_problem(n, 2.0, 3.0, 0.0);
    let u0 = FemFunction::zeros(pr.mesh().clone());
    let rep = minimize_phi(&pr, &Source(1.0), &u0, 1e-12, 200, "stiffness").unwrap();

    // Tridiagonal solve of (2u_i - u_{i-1} - u_{i+1}) / h = h by the Thomas algorithm.
    let h = 1.0 / n as f64;
    let m = n - 1;
    let (mut c, mut d) = (vec![0.0; m], vec![0.0; m]);
    for i in 0..m {
        let denom = 2.0 / h + if i > 0 { c[i - 1] / h } else { 0.0 };
        c[i] = -1.0 / h / denom;
        d[i] = (h + if i > 0 { d[i - 1] / h } else { 0.0 }) / denom;
    }
    let mut x = vec![0.0; m];
    for i in (0..m).rev() {
        x[i] = d[i] - if i + 1 < m { c[i] * x[i + 1] } else { 0.0 };
    }
    let dofs = rep.solution.dofs();
    for (i, (a, b)) in dofs.iter().zip(&x).enumerate() {
        assert!((a - b).abs() < 1e-10, "dof {i}: {a} vs {b}");
        // P1 is nodally exact for -u'' = 1 in 1D.
        let xi = (i + 1) as f64 * h;
        assert!((a - 0.5 * xi * (1.0 - xi)).abs() < 1e-10);
    }
}

#[test]
fn two_solutions_on_interval() {
    let pr = interval_problem(64, 2.0, 3.0, 0.0);
    let lambda = 2.0 * PI * PI;
    let opts = SolveOptions {
        tol: 1e-8,
        ..SolveOptions::default()
    };
    let pos = solve_positive(&pr, cubic(), lambda, &opts).unwrap();
    let neg = solve_negative(&pr, cubic(), lambda, &opts).unwrap();
    assert!(pos.phi_value < 0.0 && neg.phi_value < 0.0);
    assert!(pos.min_value >= -1e-8 && neg.max_value <= 1e-8);
    assert!(pos.max_value <= lambda.sqrt() + 1e-6);
    assert!(pos.original_residual <= 1e-8 && neg.original_residual <= 1e-8);
    assert_eq!(pos.bar, Some(8.0));
    assert_eq!(neg.bar, Some(-8.0));
    for (a, b) in pos.solution.values().iter().zip(neg.solution.values()) {
        assert!((a + b).abs() <= 1e-10 * pos.solution.sup_norm());
    }
    // The seed is the most negative point of the scan.
    let u1 = dphase::eigen::solve_first_eigenpair_with(pr.mesh(), 2.0, &opts.eigen_options()).unwrap();
    let trunc = truncation_h_plus(cubic(), lambda, 2.0, 8.0).unwrap();
    let seed_phi = pos.seed_phi.unwrap();
    for k in 0..=20 {
        let t = 0.5f64.powi(k);
        assert!(phi_plus(&pr, &trunc, &u1.eigenfunction.scaled(t)) >= seed_phi);
    }
    assert!(pos.phi_value <= seed_phi);
}

#[test]
fn energy_decreases_monotonically() {
    let pr = interval_problem(48, 2.0, 3.0, 1.0);
    let rep = solve_positive(&pr, cubic(), 30.0, &SolveOptions::default()).unwrap();
    for w in rep.phi_history.windows(2) {
        assert!(w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0));
    }
}

#[test]
fn branch_sign_and_bound_across_parameters() {
    for (p, q, mu, lambda) in [(2.0, 3.0, 0.5, 25.0), (3.0, 4.0, 0.3, 60.0), (1.6, 2.4, 1.0, 15.0)] {
        let pr = interval_problem(48, p, q, mu);
        let eigen = dphase::solver::first_eigenpair(&pr, &SolveOptions::default()).unwrap();
        assert!(lambda > eigen.lambda, "p = {p}: λ1 = {}", eigen.lambda);
        let rep = solve_branch(&pr, cubic(), lambda, Branch::Positive, &eigen, &SolveOptions::default()).unwrap();
        let bar = find_upper_constant(cubic().as_ref(), lambda, p, &[[0.5, 0.0]], 1e12).unwrap();
        assert!(rep.min_value >= -1e-6 * bar && rep.max_value <= bar * (1.0 + 1e-6), "p = {p}");
        assert!(rep.phi_value < 0.0);
    }
}

#[test]
fn square_with_weighted_phase() {
    let mesh = Arc::new(build_mesh(Domain::unit_square(), 8).unwrap());
    let pr = Problem::new(mesh, Exponents::new(1.2, 1.4, 2).unwrap(), Arc::new(Affine { a: 0.0, b: 1.0 })).unwrap();
    let f: Arc<dyn Nonlinearity> = Arc::new(F1 {
        a: Arc::new(Constant(1.0)),
        r: 1.5,
    });
    let opts = SolveOptions {
        tol: 1e-8,
        eigen_tol: 1e-7,
        ..SolveOptions::default()
    };
    let eigen = dphase::solver::first_eigenpair(&pr, &opts).unwrap();
    let rep = solve_branch(&pr, f, 2.0 * eigen.lambda, Branch::Positive, &eigen, &opts).unwrap();
    let bar = rep.bar.unwrap();
    assert!(rep.min_value >= -1e-6 * bar && rep.max_value <= bar * (1.0 + 1e-6));
    assert!(rep.original_residual <= 1e-8);
}

#[test]
fn gate_and_superlinearity_errors() {
    let pr = interval_problem(32, 2.0, 3.0, 0.0);
    let opts = SolveOptions::default();
    let eigen = dphase::solver::first_eigenpair(&pr, &opts).unwrap();
    let err = solve_branch(&pr, cubic(), 0.5 * eigen.lambda, Branch::Negative, &eigen, &opts).unwrap_err();
    assert!(matches!(err, Error::Gate { .. }));
    let linear: Arc<dyn Nonlinearity> = Arc::new(Power {
        coefficient: 1.0,
        r: 2.0,
    });
    let err = solve_branch(&pr, linear, 2.0 * eigen.lambda, Branch::Positive, &eigen, &opts).unwrap_err();
    assert!(matches!(err, Error::Superlinearity { .. }), "{err}");
}
