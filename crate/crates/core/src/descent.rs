//! Descent-direction strategies and the Armijo line-search minimizer.
//!
//! Every strategy turns the discrete gradient `r` of an objective into a
//! direction `d = -P^{-1} r` with a symmetric positive definite `P`, so `d` is
//! always a descent direction. Strategies are registered by name:
//!
//! * `steepest`: `P = I`
//! * `stiffness`: `P` = Laplacian stiffness matrix, factored once
//! * `kacanov`: `P` = stiffness weighted by the curvature of the principal part at the current iterate
//! * `newton`: `kacanov` plus the convex part of the lower-order curvature, lumped on the diagonal

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::function::FemFunction;
use crate::linalg::{dot, norm2, BandCholesky};
use crate::mesh::Mesh;
use crate::operator::{assemble_stiffness, DualVector};
use crate::registry::{Params, Registry};

/// State a strategy may look at when building its preconditioner.
pub struct DescentContext<'a> {
    pub mesh: &'a Mesh,
    /// `|∇u|` per element.
    pub gradient_norms: &'a [f64],
    pub p: f64,
    pub q: f64,
    /// Mean weight per element; empty when the weighted term is absent.
    pub mu: &'a [f64],
    /// Non-negative diagonal curvature of the lower-order terms; may be empty.
    pub lumped_curvature: &'a [f64],
}

impl DescentContext<'_> {
    /// Curvature of the principal part along the gradient, regularized so it
    /// stays positive and finite.
    fn element_weights(&self, regularization: f64) -> Vec<f64> {
        let gmax = self.gradient_norms.iter().fold(0.0, |m: f64, &g| m.max(g));
        let delta = if gmax > 0.0 { regularization * gmax } else { 1.0 };
        self.gradient_norms
            .iter()
            .enumerate()
            .map(|(e, &g)| {
                let g2 = g * g + delta * delta;
                let mut w = (self.p - 1.0) * g2.powf(0.5 * (self.p - 2.0));
                if let Some(&m) = self.mu.get(e) {
                    if m != 0.0 {
                        w += m * (self.q - 1.0) * g2.powf(0.5 * (self.q - 2.0));
                    }
                }
                w
            })
            .collect()
    }
}

pub trait DescentDirection: Send {
    fn name(&self) -> &'static str;

    /// Descent direction for the gradient `gradient` (interior entries).
    fn direction(&mut self, ctx: &DescentContext<'_>, gradient: &[f64]) -> Result<Vec<f64>>;
}

struct Steepest;

impl DescentDirection for Steepest {
    fn name(&self) -> &'static str {
        "steepest"
    }

    fn direction(&mut self, _: &DescentContext<'_>, gradient: &[f64]) -> Result<Vec<f64>> {
        Ok(gradient.iter().map(|g| -g).collect())
    }
}

#[derive(Default)]
struct Stiffness {
    factor: Option<(usize, BandCholesky)>,
}

impl DescentDirection for Stiffness {
    fn name(&self) -> &'static str {
        "stiffness"
    }

    fn direction(&mut self, ctx: &DescentContext<'_>, gradient: &[f64]) -> Result<Vec<f64>> {
        let n = ctx.mesh.num_dofs();
        if self.factor.as_ref().map(|(m, _)| *m) != Some(n) {
            let ones = vec![1.0; ctx.mesh.num_elements()];
            self.factor = Some((n, assemble_stiffness(ctx.mesh, &ones).cholesky()?));
        }
        let (_, chol) = self.factor.as_ref().unwrap();
        Ok(chol.solve(gradient).into_iter().map(|v| -v).collect())
    }
}

struct Kacanov {
    regularization: f64,
    with_lumped: bool,
}

impl DescentDirection for Kacanov {
    fn name(&self) -> &'static str {
        if self.with_lumped {
            "newton"
        } else {
            "kacanov"
        }
    }

    fn direction(&mut self, ctx: &DescentContext<'_>, gradient: &[f64]) -> Result<Vec<f64>> {
        let weights = ctx.element_weights(self.regularization);
        let mut k = assemble_stiffness(ctx.mesh, &weights);
        if self.with_lumped {
            for (i, &c) in ctx.lumped_curvature.iter().enumerate() {
                if c > 0.0 {
                    k.add(i, i, c);
                }
            }
        }
        Ok(k.cholesky()?.solve(gradient).into_iter().map(|v| -v).collect())
    }
}

pub type DescentRegistry = Registry<dyn DescentDirection>;

pub fn descent_registry() -> DescentRegistry {
    let mut reg = DescentRegistry::new("descent strategy");
    reg.register("steepest", "plain negative gradient", &[], |_, _| Ok(Box::new(Steepest)))
        .register("stiffness", "Laplacian-preconditioned gradient", &[], |_, _| {
            Ok(Box::<Stiffness>::default())
        })
        .register(
            "kacanov",
            "gradient preconditioned by the linearized principal part",
            &["regularization"],
            |p, _| {
                Ok(Box::new(Kacanov {
                    regularization: p.get_or("regularization", 1e-3),
                    with_lumped: false,
                }))
            },
        )
        .register(
            "newton",
            "kacanov plus convex lower-order curvature",
            &["regularization"],
            |p, _| {
                Ok(Box::new(Kacanov {
                    regularization: p.get_or("regularization", 1e-3),
                    with_lumped: true,
                }))
            },
        );
    reg
}

pub fn build_descent(name: &str, params: &Params) -> Result<Box<dyn DescentDirection>> {
    descent_registry().build(name, params, &())
}

/// Armijo backtracking with an approximate-Wolfe fallback for steps whose
/// decrease is below the rounding noise of the objective.
#[derive(Debug, Clone, Copy)]
pub struct LineSearch {
    pub sufficient_decrease: f64,
    pub shrink: f64,
    pub max_halvings: usize,
    /// Relative rounding level of objective values.
    pub noise: f64,
}

impl Default for LineSearch {
    fn default() -> Self {
        Self {
            sufficient_decrease: 1e-4,
            shrink: 0.5,
            max_halvings: 60,
            noise: 1e-11,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Step {
    pub alpha: f64,
    pub value: f64,
    /// Accepted through the derivative test rather than plain Armijo.
    pub approximate: bool,
}

impl LineSearch {
    /// Searches `alpha = 1, shrink, shrink^2, ...`. `value(alpha)` evaluates
    /// the objective along the ray; `slope_at(alpha)` its directional derivative.
    pub fn search(
        &self,
        f0: f64,
        slope: f64,
        scale: f64,
        mut value: impl FnMut(f64) -> f64,
        mut slope_at: impl FnMut(f64) -> f64,
    ) -> Option<Step> {
        if !(slope < 0.0) {
            return None;
        }
        let noise = self.noise * scale.max(f0.abs());
        let mut alpha = 1.0;
        for _ in 0..=self.max_halvings {
            let f = value(alpha);
            if f.is_finite() {
                if f <= f0 + self.sufficient_decrease * alpha * slope {
                    return Some(Step {
                        alpha,
                        value: f,
                        approximate: false,
                    });
                }
                if f <= f0 + noise
                    && slope_at(alpha) <= (1.0 - 2.0 * self.sufficient_decrease) * slope.abs()
                {
                    return Some(Step {
                        alpha,
                        value: f,
                        approximate: true,
                    });
                }
            }
            alpha *= self.shrink;
        }
        None
    }
}

/// A smooth functional on Dirichlet-conforming P1 functions.
pub trait Objective {
    fn mesh(&self) -> &Arc<Mesh>;
    fn value(&self, u: &FemFunction) -> f64;
    /// Magnitude of the terms summed in `value`, for the rounding noise estimate.
    fn value_scale(&self, u: &FemFunction) -> f64;
    fn gradient(&self, u: &FemFunction) -> DualVector;
    /// Exponents and per-element weights of the principal part.
    fn principal(&self) -> (f64, f64, &[f64]);
    fn lumped_curvature(&self, _u: &FemFunction) -> Vec<f64> {
        Vec::new()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MinimizeOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub line_search: LineSearch,
}

impl MinimizeOptions {
    pub fn new(tol: f64, max_iter: usize) -> Self {
        Self {
            tol,
            max_iter,
            line_search: LineSearch::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MinimizeOutcome {
    pub solution: FemFunction,
    pub value: f64,
    pub residual: f64,
    pub initial_residual: f64,
    pub iterations: usize,
    /// Objective value after each accepted step, starting with the initial value.
    pub history: Vec<f64>,
    pub approximate_steps: usize,
}

pub(crate) fn gradient_norms(u: &FemFunction) -> Vec<f64> {
    (0..u.mesh().num_elements())
        .map(|e| crate::operator::norm(&u.element_gradient(e)))
        .collect()
}

/// Descent with Armijo backtracking until `‖r‖ <= tol (1 + ‖r_0‖)`.
pub fn minimize(
    objective: &dyn Objective,
    u0: &FemFunction,
    strategy: &mut dyn DescentDirection,
    opts: &MinimizeOptions,
) -> Result<MinimizeOutcome> {
    let mesh = objective.mesh().clone();
    let mut u = u0.clone().with_zero_boundary();
    let mut value = objective.value(&u);
    let mut grad = objective.gradient(&u);
    let r0 = grad.norm();
    let target = opts.tol * (1.0 + r0);
    let mut history = vec![value];
    let mut approximate_steps = 0;
    let mut best = (grad.norm(), u.clone());
    let (p, q, mu) = objective.principal();

    for iter in 0..=opts.max_iter {
        let res = grad.norm();
        if res < best.0 {
            best = (res, u.clone());
        }
        if res <= target {
            return Ok(MinimizeOutcome {
                solution: u,
                value,
                residual: res,
                initial_residual: r0,
                iterations: iter,
                history,
                approximate_steps,
            });
        }
        if iter == opts.max_iter {
            break;
        }
        let norms = gradient_norms(&u);
        let lumped = objective.lumped_curvature(&u);
        let ctx = DescentContext {
            mesh: &mesh,
            gradient_norms: &norms,
            p,
            q,
            mu,
            lumped_curvature: &lumped,
        };
        let d = strategy.direction(&ctx, grad.as_slice())?;
        let dir = FemFunction::from_dofs(mesh.clone(), &d);
        let slope = dot(grad.as_slice(), &d);
        let scale = objective.value_scale(&u);
        let step = opts.line_search.search(
            value,
            slope,
            scale,
            |a| objective.value(&u.axpy(a, &dir)),
            |a| objective.gradient(&u.axpy(a, &dir)).pair(&d),
        );
        let Some(step) = step else {
            log::debug!("line search failed at iteration {iter} (residual {res:e})");
            break;
        };
        if step.approximate {
            approximate_steps += 1;
        }
        u = u.axpy(step.alpha, &dir);
        value = step.value;
        grad = objective.gradient(&u);
        history.push(value);
        if !norm2(grad.as_slice()).is_finite() {
            break;
        }
    }
    Err(Error::Convergence {
        what: "energy minimization",
        iterations: history.len() - 1,
        residual: best.0,
        best: Box::new(best.1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn armijo_accepts_full_step_on_quadratic() {
        // f(a) = (a - 1)^2 from f0 = 1, slope -2
        let ls = LineSearch::default();
        let s = ls
            .search(1.0, -2.0, 1.0, |a| (a - 1.0) * (a - 1.0), |a| 2.0 * (a - 1.0))
            .unwrap();
        assert_eq!(s.alpha, 1.0);
        assert!(!s.approximate);
    }

    #[test]
    fn armijo_backtracks() {
        // minimizer at a = 0.1
        let ls = LineSearch::default();
        let f = |a: f64| (a - 0.1).powi(2) - 0.01;
        let s = ls.search(0.0, -0.2, 1.0, f, |a| 2.0 * (a - 0.1)).unwrap();
        assert!(s.alpha < 0.2 && s.value < 0.0);
    }

    #[test]
    fn rejects_ascent_direction() {
        let ls = LineSearch::default();
        assert!(ls.search(0.0, 1.0, 1.0, |a| a, |_| 1.0).is_none());
    }

    #[test]
    fn registry_lists_strategies() {
        let names: Vec<_> = descent_registry().names().collect();
        assert_eq!(names, vec!["kacanov", "newton", "steepest", "stiffness"]);
        assert_eq!(build_descent("newton", &Params::new()).unwrap().name(), "newton");
        assert!(build_descent("lbfgs", &Params::new()).is_err());
    }
}
