#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::f64::consts::PI;
use std::fs;
use std::process::{Command as Process, ExitCode};
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dphase::eigen::solve_first_eigenpair;
use dphase::field::{Affine, Constant, Field};
use dphase::nonlinearity::{Nonlinearity, Power};
use dphase::orlicz::{check_sandwich, luxemburg_norm, modulus};
use dphase::solver::{first_eigenpair, solve_branch, Branch, SolveOptions, SolveReport};
use dphase::verify::{moser_identity_check, weak_residual};
use dphase::{build_mesh, interpolate, Domain, Exponents, FemFunction, Mesh, Point, Problem};

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn mesh(domain: Domain, n: usize) -> Arc<Mesh> {
    Arc::new(build_mesh(domain, n).unwrap())
}

fn eigen_benchmark(domain: Domain, n: usize, r: f64, exact: f64, rel: f64, seconds: Option<f64>) -> Outcome {
    let m = mesh(domain, n);
    let start = Instant::now();
    let pair = solve_first_eigenpair(&m, r, 1e-8, 5000).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed().as_secs_f64();
    let err = (pair.lambda - exact).abs() / exact;
    let fast = seconds.is_none_or(|s| elapsed < s);
    check(
        err <= rel && fast,
        format!("lambda = {:.6}, reference = {exact:.6}, rel err = {err:.2e}, {elapsed:.2}s", pair.lambda),
    )
}

fn closed_form(r: f64) -> f64 {
    let pi_r = 2.0 * PI / (r * (PI / r).sin());
    (r - 1.0) * pi_r.powf(r)
}

fn criterion_3() -> Outcome {
    let exact = closed_form(3.0);
    let base = eigen_benchmark(Domain::unit_interval(), 512, 3.0, exact, 0.02, None)?;
    // Cross-check the closed form against a dense mesh.
    let dense = solve_first_eigenpair(&mesh(Domain::unit_interval(), 4096), 3.0, 1e-9, 5000)
        .map_err(|e| e.to_string())?
        .lambda;
    let rel = (dense - exact).abs() / exact;
    check(rel < 1e-3, format!("{base}; dense n=4096 gives {dense:.6} (rel {rel:.1e})"))
}

fn criterion_4_problem(n: usize) -> Problem {
    Problem::new(mesh(Domain::unit_interval(), n), Exponents::new(2.0, 3.0, 1).unwrap(), Arc::new(Constant(0.0))).unwrap()
}

fn cubic() -> Arc<dyn Nonlinearity> {
    Arc::new(Power {
        coefficient: 1.0,
        r: 4.0,
    })
}

const LAMBDA_4: f64 = 2.0 * PI * PI;

fn solve_4(n: usize) -> Result<(SolveReport, SolveReport), String> {
    let pr = criterion_4_problem(n);
    let opts = SolveOptions {
        tol: 1e-8,
        ..SolveOptions::default()
    };
    let eigen = first_eigenpair(&pr, &opts).map_err(|e| e.to_string())?;
    let pos = solve_branch(&pr, cubic(), LAMBDA_4, Branch::Positive, &eigen, &opts).map_err(|e| e.to_string())?;
    let neg = solve_branch(&pr, cubic(), LAMBDA_4, Branch::Negative, &eigen, &opts).map_err(|e| e.to_string())?;
    Ok((pos, neg))
}

fn criterion_4() -> Outcome {
    let (pos, neg) = solve_4(256)?;
    let sup = pos.solution.sup_norm();
    let mirror = pos
        .solution
        .values()
        .iter()
        .zip(neg.solution.values())
        .map(|(a, b)| (a + b).abs())
        .fold(0.0, f64::max)
        / sup;
    let ok = pos.phi_value < 0.0
        && neg.phi_value < 0.0
        && pos.min_value >= -1e-8
        && neg.max_value <= 1e-8
        && sup <= LAMBDA_4.sqrt() + 1e-6
        && pos.original_residual <= 1e-8
        && neg.original_residual <= 1e-8
        && mirror <= 1e-10;
    check(
        ok,
        format!(
            "phi+ = {:.6}, phi- = {:.6}, min u+ = {:.1e}, max u- = {:.1e}, |u+|inf = {sup:.6} <= {:.6}, residuals {:.1e}/{:.1e}, mirror {mirror:.1e}",
            pos.phi_value,
            neg.phi_value,
            pos.min_value,
            neg.max_value,
            LAMBDA_4.sqrt(),
            pos.original_residual,
            neg.original_residual
        ),
    )
}

const CONFIG_4: &str = "\
[domain]
kind = interval
resolution = 256

[exponents]
p = 2
q = 3

[mu]
kind = constant
value = 0

[f]
kind = power
r = 4

[lambda]
values = 19.739208802178716

[solver]
tol = 1e-8
";

fn binary(args: &[&str]) -> i32 {
    Process::new(env!("CARGO_BIN_EXE_dphase"))
        .args(args)
        .arg("--quiet")
        .output()
        .unwrap()
        .status
        .code()
        .unwrap_or(-1)
}

fn criterion_5(dir: &std::path::Path) -> Outcome {
    let cfg = dir.join("gate.cfg");
    let text = CONFIG_4.replace("values = 19.739208802178716", "mode = multiple\nvalues = 0.5");
    fs::write(&cfg, text).unwrap();
    let out = dir.join("gate_out");
    let code = binary(&["solve", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let no_solution = !out.join("u_plus.csv").exists();
    check(code == 3 && no_solution, format!("exit code {code}, solution written: {}", !no_solution))
}

fn random_dofs(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let scale = 10f64.powf(rng.gen_range(-3.0..2.0));
    (0..n).map(|_| scale * rng.gen_range(-1.0..1.0)).collect()
}

fn random_weight(rng: &mut ChaCha8Rng) -> Arc<dyn Field> {
    match rng.gen_range(0..3) {
        0 => Arc::new(Constant(0.0)),
        1 => Arc::new(Constant(rng.gen_range(0.0..3.0))),
        _ => Arc::new(Affine {
            a: rng.gen_range(0.0..1.0),
            b: rng.gen_range(0.0..2.0),
        }),
    }
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let meshes = [mesh(Domain::unit_interval(), 24), mesh(Domain::unit_square(), 6)];
    let (mut sandwich, mut homogeneity, mut unit_ball) = (0, 0, 0);
    for i in 0..1000 {
        let m = &meshes[i % 2];
        let p = rng.gen_range(1.1..4.0);
        let q = p + rng.gen_range(0.05..3.0);
        let exps = Exponents::new(p, q, m.dim()).unwrap();
        let mu = random_weight(&mut rng);
        let u = FemFunction::from_dofs(m.clone(), &random_dofs(&mut rng, m.num_dofs()));
        if !check_sandwich(&u, mu.as_ref(), &exps).unwrap().holds {
            sandwich += 1;
        }
        let t = rng.gen_range(-4.0..4.0);
        let n = luxemburg_norm(&u, mu.as_ref(), &exps).unwrap();
        let nt = luxemburg_norm(&u.scaled(t), mu.as_ref(), &exps).unwrap();
        if (nt - t.abs() * n).abs() > 1e-8 * (1.0 + t.abs() * n) {
            homogeneity += 1;
        }
        if n > 0.0 {
            let rho = modulus(&u.scaled(1.0 / n), mu.as_ref(), &exps).unwrap();
            if (rho - 1.0).abs() > 1e-8 {
                unit_ball += 1;
            }
        }
    }
    let mut tau = 1.5f64;
    for _ in 0..60 {
        tau -= (tau * tau * tau - tau - 1.0) / (3.0 * tau * tau - 1.0);
    }
    let one = interpolate(&meshes[0], |_| 1.0);
    let worked = luxemburg_norm(&one, &Constant(1.0), &Exponents::new(2.0, 3.0, 1).unwrap()).unwrap();
    let worked_err = (worked - tau).abs();
    check(
        sandwich == 0 && homogeneity == 0 && unit_ball == 0 && worked_err <= 1e-8,
        format!(
            "violations: sandwich {sandwich}, homogeneity {homogeneity}, unit ball {unit_ball}; worked instance {worked:.10} vs root {tau:.10}"
        ),
    )
}

/// `(2u_i - u_{i-1} - u_{i+1}) / h` on a uniform interval mesh.
fn stencil(m: &Mesh, u: &FemFunction) -> Vec<f64> {
    let h = 1.0 / m.resolution() as f64;
    let v = u.values();
    (1..m.num_vertices() - 1).map(|i| (2.0 * v[i] - v[i - 1] - v[i + 1]) / h).collect()
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let meshes = [mesh(Domain::unit_interval(), 24), mesh(Domain::unit_square(), 6)];
    let (mut worst_gap, mut worst_grad, mut worst_linear) = (f64::INFINITY, 0.0f64, 0.0f64);
    for i in 0..1000 {
        let m = &meshes[i % 2];
        let mu = random_weight(&mut rng);
        let p = rng.gen_range(1.1..4.0);
        let q = p + rng.gen_range(0.05..3.0);
        let pr = Problem::new(m.clone(), Exponents::new(p, q, m.dim()).unwrap(), mu.clone()).unwrap();
        let u = FemFunction::from_dofs(m.clone(), &random_dofs(&mut rng, m.num_dofs()));
        let v = FemFunction::from_dofs(m.clone(), &random_dofs(&mut rng, m.num_dofs()));
        worst_gap = worst_gap.min(pr.monotonicity_gap(&u, &v));

        let p2 = rng.gen_range(2.0..4.0);
        let q2 = p2 + rng.gen_range(0.05..2.0);
        let pr2 = Problem::new(m.clone(), Exponents::new(p2, q2, m.dim()).unwrap(), mu).unwrap();
        if u.sup_norm() > 0.0 && v.sup_norm() > 0.0 {
            let h = 1e-6 * u.sup_norm() / v.sup_norm();
            worst_grad = worst_grad.max(pr2.gradient_check(&u, &v, h));
        }
    }
    let m = mesh(Domain::unit_interval(), 64);
    let pr = Problem::new(m.clone(), Exponents::new(2.0, 3.0, 1).unwrap(), Arc::new(Constant(0.0))).unwrap();
    for _ in 0..20 {
        let u = FemFunction::from_dofs(m.clone(), &random_dofs(&mut rng, m.num_dofs()));
        let a = pr.apply_a(&u);
        for (x, y) in a.as_slice().iter().zip(stencil(&m, &u)) {
            worst_linear = worst_linear.max((x - y).abs() / (1.0 + y.abs()));
        }
    }
    check(
        worst_gap >= -1e-12 && worst_grad <= 1e-5 && worst_linear <= 1e-12,
        format!("min monotonicity gap {worst_gap:.2e}, max gradient check {worst_grad:.2e}, linear action error {worst_linear:.1e}"),
    )
}

fn criterion_8() -> Outcome {
    let mut gaps = Vec::new();
    let mut min_mu_term = f64::INFINITY;
    for n in [256, 512, 1024, 2048] {
        let (pos, _) = solve_4(n)?;
        let u = &pos.solution;
        let pr = criterion_4_problem(n);
        let g = |_: &Point, s: f64, _: &Point| LAMBDA_4 * s - s * s * s;
        let rep = moser_identity_check(&pr, u, &g, u.sup_norm() / 2.0, 1.0).map_err(|e| e.to_string())?;
        min_mu_term = min_mu_term.min(rep.lhs_terms[2]).min(rep.lhs_terms[3]);
        gaps.push(rep.gap);
    }
    let decreasing = gaps.windows(2).all(|w| w[1] < w[0]);
    check(
        min_mu_term >= -1e-12 && decreasing,
        format!("mu-terms min {min_mu_term:.1e}, gaps [{}] at n = 256..2048", sci(&gaps)),
    )
}

fn sci(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:.2e}")).collect::<Vec<_>>().join(", ")
}

fn criterion_9() -> Outcome {
    let mut res = Vec::new();
    for n in [4, 8, 16, 32] {
        let m = mesh(Domain::unit_interval(), n);
        let pr = Problem::new(m.clone(), Exponents::new(2.0, 3.0, 1).unwrap(), Arc::new(Constant(0.0))).unwrap();
        let u = interpolate(&m, |x| (PI * x[0]).sin());
        res.push(weak_residual(&pr, &u, &|x, _| PI * PI * (PI * x[0]).sin()).euclidean);
    }
    let ratios: Vec<f64> = res.windows(2).map(|w| w[0] / w[1]).collect();
    check(
        ratios.iter().all(|&r| r >= 3.5),
        format!("residuals [{}], ratios {ratios:.1?}", sci(&res)),
    )
}

fn criterion_10(dir: &std::path::Path) -> Outcome {
    let cfg = dir.join("c4.cfg");
    fs::write(&cfg, CONFIG_4).unwrap();
    let mut files = Vec::new();
    for k in 0..2 {
        let out = dir.join(format!("run{k}"));
        let code = binary(&["solve", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        if code != 0 {
            return Err(format!("run {k} exited with {code}"));
        }
        let mut bytes = Vec::new();
        for name in ["summary.csv", "solve_summary.txt", "u_plus.csv", "u_minus.csv", "eigenpair.csv"] {
            bytes.push(fs::read(out.join(name)).unwrap());
        }
        files.push(bytes);
    }
    check(files[0] == files[1], format!("{} files compared byte for byte", files[0].len()))
}

fn main() -> ExitCode {
    let dir = tempfile::tempdir().unwrap();
    let criteria: Vec<Criterion> = vec![
        ("1 eigenvalue, interval", Box::new(|| {
            eigen_benchmark(Domain::unit_interval(), 256, 2.0, PI * PI, 0.01, Some(5.0))
        })),
        ("2 eigenvalue, square", Box::new(|| {
            eigen_benchmark(Domain::unit_square(), 64, 2.0, 2.0 * PI * PI, 0.02, Some(60.0))
        })),
        ("3 nonlinear eigenvalue", Box::new(criterion_3)),
        ("4 two solutions", Box::new(criterion_4)),
        ("5 gate", Box::new(|| criterion_5(dir.path()))),
        ("6 Orlicz properties", Box::new(criterion_6)),
        ("7 operator properties", Box::new(criterion_7)),
        ("8 truncated test identity", Box::new(criterion_8)),
        ("9 manufactured residual", Box::new(criterion_9)),
        ("10 determinism", Box::new(|| criterion_10(dir.path()))),
    ];
    let mut failed = 0;
    for (name, run) in &criteria {
        match run() {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
