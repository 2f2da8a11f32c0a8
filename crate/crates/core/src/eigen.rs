//! First Dirichlet eigenpair of the `r`-Laplacian by Rayleigh-quotient descent.
//!
//! The iteration starts from a positive bump, takes preconditioned gradient
//! steps on `R(u) = ‖∇u‖_r^r / ‖u‖_r^r` with Armijo backtracking and
//! renormalizes to `‖u‖_r = 1` after every step. For `r = 2` with the default
//! strategy a full step is exactly one step of inverse iteration.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::descent::{build_descent, gradient_norms, DescentContext, LineSearch};
use crate::error::{invalid, Error, Result};
use crate::function::{for_each_quad_point, interpolate, FemFunction};
use crate::linalg::dot;
use crate::mesh::{Domain, Mesh};
use crate::operator::{flux_action, power_factor, DualVector};
use crate::quadrature::QuadratureRule;
use crate::registry::Params;

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub r: f64,
    pub lambda: f64,
    /// Positive in the interior, `‖·‖_r = 1`.
    pub eigenfunction: FemFunction,
    pub iterations: usize,
    /// `‖A_r(u) - λ |u|^{r-2} u‖` over interior basis functions.
    pub residual: f64,
    /// Largest one-sided outward normal derivative estimate at the boundary;
    /// negative for a Hopf-type profile. Diagnostic only.
    pub max_normal_derivative: f64,
}

impl EigenPair {
    pub fn summary_line(&self) -> String {
        format!(
            "r = {}, lambda = {}, iterations = {}, residual = {:e}",
            self.r, self.lambda, self.iterations, self.residual
        )
    }
}

#[derive(Debug, Clone)]
pub struct EigenOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub strategy: String,
    pub strategy_params: Params,
}

impl EigenOptions {
    pub fn new(tol: f64, max_iter: usize) -> Self {
        Self {
            tol,
            max_iter,
            strategy: "kacanov".to_string(),
            strategy_params: Params::new(),
        }
    }
}

/// `sign(s) |s|^e`.
pub fn signed_pow(s: f64, e: f64) -> f64 {
    if s == 0.0 {
        0.0
    } else {
        s.signum() * s.abs().powf(e)
    }
}

fn lr_power(u: &FemFunction, r: f64, quad: &QuadratureRule) -> f64 {
    let mut total = 0.0;
    for_each_quad_point(u.mesh(), quad, |qp| {
        total += qp.weight * u.value_at(qp.element, &qp.bary).abs().powf(r)
    });
    total
}

fn gradient_power(u: &FemFunction, r: f64) -> f64 {
    let mesh = u.mesh();
    (0..mesh.num_elements())
        .map(|e| {
            let g = crate::operator::norm(&u.element_gradient(e));
            mesh.geometry(e).measure * g.powf(r)
        })
        .sum()
}

/// `∫ |u|^{r-2} u φ_i dx` for every interior basis function.
fn lower_order_action(u: &FemFunction, r: f64, quad: &QuadratureRule) -> DualVector {
    let mesh = u.mesh();
    let mut out = vec![0.0; mesh.num_dofs()];
    for_each_quad_point(mesh, quad, |qp| {
        let w = qp.weight * signed_pow(u.value_at(qp.element, &qp.bary), r - 1.0);
        for (k, &v) in mesh.element(qp.element).iter().enumerate() {
            if let Some(i) = mesh.dof(v) {
                out[i] += w * qp.bary[k];
            }
        }
    });
    DualVector(out)
}

fn check_exponent(r: f64) -> Result<()> {
    if !(r > 1.0) || !r.is_finite() {
        return Err(invalid(format!("eigenvalue exponent must exceed 1, got {r}")));
    }
    Ok(())
}

/// `‖∇u‖_r^r / ‖u‖_r^r`.
pub fn rayleigh_quotient(u: &FemFunction, r: f64) -> Result<f64> {
    check_exponent(r)?;
    let quad = QuadratureRule::default_for(u.mesh().dim());
    let den = lr_power(u, r, &quad);
    if den == 0.0 {
        return Err(invalid("Rayleigh quotient of the zero function"));
    }
    Ok(gradient_power(u, r) / den)
}

/// `u / ‖u‖_r`.
pub fn normalize_lr(u: &FemFunction, r: f64) -> Result<FemFunction> {
    check_exponent(r)?;
    let quad = QuadratureRule::default_for(u.mesh().dim());
    let norm = lr_power(u, r, &quad).powf(1.0 / r);
    if norm == 0.0 {
        return Err(invalid("cannot normalize the zero function"));
    }
    Ok(u.scaled(1.0 / norm))
}

/// Product of `sin(π t)` over each coordinate, mapped to the domain.
pub fn positive_bump(mesh: &Arc<Mesh>) -> FemFunction {
    match mesh.domain() {
        Domain::Interval { a, b } => {
            interpolate(mesh, |x| (PI * (x[0] - a) / (b - a)).sin().max(0.0))
        }
        Domain::Rectangle { x0, x1, y0, y1 } => interpolate(mesh, |x| {
            ((PI * (x[0] - x0) / (x1 - x0)).sin() * (PI * (x[1] - y0) / (y1 - y0)).sin()).max(0.0)
        }),
    }
    .with_zero_boundary()
}

struct Rayleigh {
    r: f64,
    quad: QuadratureRule,
}

impl Rayleigh {
    fn value(&self, u: &FemFunction) -> f64 {
        let den = lr_power(u, self.r, &self.quad);
        gradient_power(u, self.r) / den
    }

    /// Gradient of the quotient and the eigen-residual `A_r(u) - R B(u)`.
    fn gradient(&self, u: &FemFunction) -> (f64, DualVector, DualVector) {
        let r = self.r;
        let den = lr_power(u, r, &self.quad);
        let quotient = gradient_power(u, r) / den;
        let a = flux_action(u, |_, g| power_factor(g, r));
        let b = lower_order_action(u, r, &self.quad);
        let residual = DualVector(
            a.0.iter()
                .zip(&b.0)
                .map(|(x, y)| x - quotient * y)
                .collect(),
        );
        let grad = DualVector(residual.0.iter().map(|v| r * v / den).collect());
        (quotient, grad, residual)
    }
}

/// Largest one-sided estimate of `∂u/∂n` over boundary vertices with an
/// interior neighbour along the inward normal.
fn max_normal_derivative(u: &FemFunction) -> f64 {
    let mesh = u.mesh();
    let x = mesh.vertices();
    let normal = |v: usize| -> Option<[f64; 2]> {
        let p = x[v];
        match mesh.domain() {
            Domain::Interval { a, .. } => Some([if p[0] == a { -1.0 } else { 1.0 }, 0.0]),
            Domain::Rectangle { x0, x1, y0, y1 } => {
                let sides = [
                    (p[0] == x0, [-1.0, 0.0]),
                    (p[0] == x1, [1.0, 0.0]),
                    (p[1] == y0, [0.0, -1.0]),
                    (p[1] == y1, [0.0, 1.0]),
                ];
                let hits: Vec<_> = sides.iter().filter(|s| s.0).collect();
                (hits.len() == 1).then(|| hits[0].1)
            }
        }
    };
    let mut worst = f64::NEG_INFINITY;
    for (a, b) in mesh.edges() {
        let (bd, inner) = match (mesh.dof(a), mesh.dof(b)) {
            (None, Some(_)) => (a, b),
            (Some(_), None) => (b, a),
            _ => continue,
        };
        let Some(n) = normal(bd) else { continue };
        let d = [x[bd][0] - x[inner][0], x[bd][1] - x[inner][1]];
        let len = d[0].hypot(d[1]);
        if (d[0] * n[0] + d[1] * n[1]) < 0.999 * len {
            continue;
        }
        worst = worst.max((u.values()[bd] - u.values()[inner]) / len);
    }
    worst
}

pub fn solve_first_eigenpair(mesh: &Arc<Mesh>, r: f64, tol: f64, max_iter: usize) -> Result<EigenPair> {
    solve_first_eigenpair_with(mesh, r, &EigenOptions::new(tol, max_iter))
}

pub fn solve_first_eigenpair_with(mesh: &Arc<Mesh>, r: f64, opts: &EigenOptions) -> Result<EigenPair> {
    check_exponent(r)?;
    if mesh.num_dofs() == 0 {
        return Err(invalid("mesh has no interior vertices"));
    }
    let mut strategy = build_descent(&opts.strategy, &opts.strategy_params)?;
    let rayleigh = Rayleigh {
        r,
        quad: QuadratureRule::default_for(mesh.dim()),
    };
    let line_search = LineSearch::default();
    let mut u = normalize_lr(&positive_bump(mesh), r)?;
    let mut best: Option<(f64, FemFunction)> = None;
    let mut last_decrease = f64::INFINITY;

    for iter in 0..=opts.max_iter {
        let (quotient, grad, residual) = rayleigh.gradient(&u);
        let res = residual.norm();
        if best.as_ref().is_none_or(|(b, _)| res < *b) {
            best = Some((res, u.clone()));
        }
        if iter > 0 && last_decrease < opts.tol && res <= 10.0 * opts.tol {
            return finish(u, r, quotient, iter, res);
        }
        if iter == opts.max_iter {
            break;
        }
        let norms = gradient_norms(&u);
        let ctx = DescentContext {
            mesh,
            gradient_norms: &norms,
            p: r,
            q: r,
            mu: &[],
            lumped_curvature: &[],
        };
        // the curvature of ‖∇u‖_r^r carries an extra factor r
        let d: Vec<f64> = strategy
            .direction(&ctx, grad.as_slice())?
            .into_iter()
            .map(|v| v / r)
            .collect();
        let dir = FemFunction::from_dofs(mesh.clone(), &d);
        let slope = dot(grad.as_slice(), &d);
        let step = line_search.search(
            quotient,
            slope,
            quotient,
            |a| rayleigh.value(&u.axpy(a, &dir)),
            |a| rayleigh.gradient(&u.axpy(a, &dir)).1.pair(&d),
        );
        let Some(step) = step else {
            // stalled at rounding level
            if res <= 10.0 * opts.tol {
                return finish(u, r, quotient, iter, res);
            }
            break;
        };
        u = normalize_lr(&u.axpy(step.alpha, &dir), r)?;
        last_decrease = ((quotient - step.value) / quotient).max(0.0);
    }
    let (res, best) = best.unwrap();
    Err(Error::Convergence {
        what: "first eigenpair",
        iterations: opts.max_iter,
        residual: res,
        best: Box::new(best),
    })
}

fn finish(mut u: FemFunction, r: f64, lambda: f64, iterations: usize, residual: f64) -> Result<EigenPair> {
    let dofs = u.dofs();
    if dofs.iter().sum::<f64>() < 0.0 {
        u = u.scaled(-1.0);
    }
    let min_interior = u.dofs().into_iter().fold(f64::INFINITY, f64::min);
    if !(min_interior > 0.0) {
        return Err(Error::Positivity {
            min_value: min_interior,
        });
    }
    let max_normal_derivative = max_normal_derivative(&u);
    Ok(EigenPair {
        r,
        lambda,
        eigenfunction: u,
        iterations,
        residual,
        max_normal_derivative,
    })
}
