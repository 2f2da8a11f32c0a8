use std::f64::consts::PI;
use std::sync::Arc;

use dphase::eigen::signed_pow;
use dphase::field::Constant;
use dphase::nonlinearity::Power;
use dphase::solver::{solve_positive, SolveOptions};
use dphase::verify::{moser_identity_check, sup_norm_report, weak_residual};
use dphase::{build_mesh, interpolate, Domain, Exponents, Point, Problem};

fn problem(n: usize, mu: f64) -> Problem {
    let mesh = Arc::new(build_mesh(Domain::unit_interval(), n).unwrap());
    Problem::new(mesh, Exponents::new(2.0, 3.0, 1).unwrap(), Arc::new(Constant(mu))).unwrap()
}

#[test]
fn manufactured_residual_decreases() {
    let mut res = Vec::new();
    for n in [4, 8, 16, 32] {
        let pr = problem(n, 0.0);
        let u = interpolate(pr.mesh(), |x| (PI * x[0]).sin());
        res.push(weak_residual(&pr, &u, &|x, _| PI * PI * (PI * x[0]).sin()).euclidean);
    }
    for w in res.windows(2) {
        assert!(w[0] / w[1] >= 3.5, "{res:?}");
    }
}

#[test]
fn manufactured_residual_in_two_dimensions() {
    let mut res = Vec::new();
    for n in [4, 8, 16] {
        let mesh = Arc::new(build_mesh(Domain::unit_square(), n).unwrap());
        let pr = Problem::new(mesh, Exponents::new(2.0, 3.0, 2).unwrap(), Arc::new(Constant(0.0))).unwrap();
        let exact = |x: &Point| (PI * x[0]).sin() * (PI * x[1]).sin();
        let u = interpolate(pr.mesh(), exact);
        res.push(weak_residual(&pr, &u, &|x, _| 2.0 * PI * PI * exact(x)).euclidean);
    }
    for w in res.windows(2) {
        assert!(w[1] < w[0], "{res:?}");
    }
}

#[test]
fn moser_gap_shrinks_for_solver_output() {
    let lambda = 2.0 * PI * PI;
    let f = Arc::new(Power {
        coefficient: 1.0,
        r: 4.0,
    });
    let mut gaps = Vec::new();
    for n in [64, 128, 256] {
        let pr = problem(n, 0.0);
        let rep = solve_positive(&pr, f.clone(), lambda, &SolveOptions::default()).unwrap();
        let u = &rep.solution;
        let g = |_: &Point, s: f64, _: &Point| lambda * s - s * s * s;
        let m = moser_identity_check(&pr, u, &g, u.sup_norm() / 2.0, 1.0).unwrap();
        assert!(m.mu_terms_nonnegative(1e-12));
        gaps.push(m.gap);
        let sup = sup_norm_report(u, rep.bar);
        assert_eq!(sup.within_bar, Some(true));
    }
    assert!(gaps[1] < gaps[0] && gaps[2] < gaps[1], "{gaps:?}");
}

#[test]
fn moser_with_weight_and_inactive_truncation() {
    let lambda = 30.0;
    let pr = problem(96, 1.0);
    let f = Arc::new(Power {
        coefficient: 1.0,
        r: 4.0,
    });
    let rep = solve_positive(&pr, f, lambda, &SolveOptions::default()).unwrap();
    let u = &rep.solution;
    let g = |_: &Point, s: f64, _: &Point| lambda * signed_pow(s, 1.0) - s * s * s;
    let m = moser_identity_check(&pr, u, &g, 2.0 * u.sup_norm(), 1.0).unwrap();
    // Truncation inactive: v = u^3 and the four terms reduce to weighted gradient integrals.
    assert!(m.lhs_terms[2] > 0.0 && m.lhs_terms[3] > 0.0);
    assert!((m.lhs_terms[1] - 2.0 * m.lhs_terms[0]).abs() < 1e-12 * m.lhs_terms[0]);
    assert!((m.lhs_terms[3] - 2.0 * m.lhs_terms[2]).abs() < 1e-12 * m.lhs_terms[2]);
    assert!(m.gap < 1e-2 * m.rhs.abs());
}
