//! Constant-sign solutions by truncation and energy minimization.
//!
//! For `λ` above the first eigenvalue of the `p`-Laplacian the pipeline
//!
//! 1. finds a constant `ū` (or `v̄ < 0`) where the reaction changes sign,
//! 2. truncates `λ|s|^{p-2}s - f(x, s)` outside `[0, ū]` (or `[v̄, 0]`),
//! 3. seeds with the scaled eigenfunction that gives the most negative energy,
//! 4. minimizes the truncated energy `φ±`,
//! 5. checks sign, bound, negative energy and the residual of the
//!    untruncated equation.

use std::sync::Arc;

use crate::descent::{build_descent, minimize, MinimizeOptions, Objective};
use crate::eigen::{signed_pow, solve_first_eigenpair_with, EigenOptions, EigenPair};
use crate::error::{invalid, Error, Result};
use crate::function::{for_each_quad_point, FemFunction};
use crate::mesh::{Mesh, Point};
use crate::nonlinearity::{check_hf, HfReport, HfSampling, Nonlinearity};
use crate::operator::{DualVector, Problem};
use crate::orlicz::{check_hypotheses, HypothesisReport};
use crate::registry::Params;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Positive,
    Negative,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Positive => 1.0,
            Branch::Negative => -1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Branch::Positive => "positive",
            Branch::Negative => "negative",
        }
    }
}

/// `λ|s|^{p-2}s - f(x, s)`.
fn reaction(f: &dyn Nonlinearity, lambda: f64, p: f64, x: &Point, s: f64) -> f64 {
    lambda * signed_pow(s, p - 1.0) - f.value(x, s)
}

pub const DEFAULT_CAP: f64 = 1_099_511_627_776.0; // 2^40

/// Walks `sign * 1, 2, 4, ...` up to `cap` and returns the first level where
/// the reaction has the sign that makes it a barrier at every sample.
fn find_constant(
    f: &dyn Nonlinearity,
    lambda: f64,
    p: f64,
    samples: &[Point],
    cap: f64,
    branch: Branch,
) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(invalid(format!("lambda must be positive, got {lambda}")));
    }
    if !(cap > 1.0) {
        return Err(invalid(format!("cap must exceed 1, got {cap}")));
    }
    let origin = [[0.0, 0.0]];
    let samples = if samples.is_empty() { &origin[..] } else { samples };
    let mut level = 1.0;
    while level <= cap {
        let s = branch.sign() * level;
        let ok = samples.iter().all(|x| {
            let v = reaction(f, lambda, p, x, s);
            match branch {
                Branch::Positive => v <= 0.0,
                Branch::Negative => v >= 0.0,
            }
        });
        if ok {
            return Ok(s);
        }
        level *= 2.0;
    }
    Err(Error::Superlinearity { cap })
}

/// Smallest `ū` in `1, 2, 4, ... <= cap` with `λū^{p-1} - f(x, ū) <= 0` at every sample.
pub fn find_upper_constant(f: &dyn Nonlinearity, lambda: f64, p: f64, samples: &[Point], cap: f64) -> Result<f64> {
    find_constant(f, lambda, p, samples, cap, Branch::Positive)
}

/// Largest `v̄` in `-1, -2, -4, ... >= -cap` with `λ|v̄|^{p-2}v̄ - f(x, v̄) >= 0` at every sample.
pub fn find_lower_constant(f: &dyn Nonlinearity, lambda: f64, p: f64, samples: &[Point], cap: f64) -> Result<f64> {
    find_constant(f, lambda, p, samples, cap, Branch::Negative)
}

/// A lower-order term `h(x, s)` with primitive `H(x, s) = ∫_0^s h(x, t) dt`.
pub trait Reaction: Send + Sync {
    fn h(&self, x: &Point, s: f64) -> f64;
    fn big_h(&self, x: &Point, s: f64) -> f64;

    /// `∂h/∂s`, by central differences unless overridden.
    fn h_slope(&self, x: &Point, s: f64) -> f64 {
        let d = 1e-6 * (1.0 + s.abs());
        (self.h(x, s + d) - self.h(x, s - d)) / (2.0 * d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationData {
    pub branch: Branch,
    /// `ū > 0` on the positive branch, `v̄ < 0` on the negative one.
    pub bar: f64,
    pub lambda: f64,
    pub p: f64,
}

/// The truncated reaction `h±` and its primitive `H±`.
#[derive(Clone)]
pub struct Truncation {
    f: Arc<dyn Nonlinearity>,
    data: TruncationData,
}

impl std::fmt::Debug for Truncation {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fm.debug_struct("Truncation")
            .field("f", &self.f.name())
            .field("data", &self.data)
            .finish()
    }
}

impl Truncation {
    pub fn new(f: Arc<dyn Nonlinearity>, data: TruncationData) -> Result<Self> {
        let ok = match data.branch {
            Branch::Positive => data.bar > 0.0,
            Branch::Negative => data.bar < 0.0,
        };
        if !ok || !data.bar.is_finite() {
            return Err(invalid(format!(
                "truncation level {} has the wrong sign for the {} branch",
                data.bar,
                data.branch.label()
            )));
        }
        Ok(Self { f, data })
    }

    pub fn data(&self) -> &TruncationData {
        &self.data
    }

    /// The untruncated right-hand side `λ|s|^{p-2}s - f(x, s)`.
    pub fn original(&self, x: &Point, s: f64) -> f64 {
        reaction(self.f.as_ref(), self.data.lambda, self.data.p, x, s)
    }

    fn original_primitive(&self, x: &Point, s: f64) -> f64 {
        self.data.lambda * s.abs().powf(self.data.p) / self.data.p - self.f.primitive(x, s)
    }

    /// Whether `s` lies on the inactive side (where the truncation is zero).
    fn cut(&self, s: f64) -> bool {
        self.data.branch.sign() * s < 0.0
    }

    /// Whether `s` lies beyond the truncation level.
    fn beyond(&self, s: f64) -> bool {
        self.data.branch.sign() * (s - self.data.bar) > 0.0
    }
}

impl Reaction for Truncation {
    fn h(&self, x: &Point, s: f64) -> f64 {
        if self.cut(s) {
            0.0
        } else if self.beyond(s) {
            self.original(x, self.data.bar)
        } else {
            self.original(x, s)
        }
    }

    fn big_h(&self, x: &Point, s: f64) -> f64 {
        if self.cut(s) {
            0.0
        } else if self.beyond(s) {
            let bar = self.data.bar;
            self.original_primitive(x, bar) + self.original(x, bar) * (s - bar)
        } else {
            self.original_primitive(x, s)
        }
    }
}

/// `h+` for the positive branch.
pub fn truncation_h_plus(f: Arc<dyn Nonlinearity>, lambda: f64, p: f64, u_bar: f64) -> Result<Truncation> {
    Truncation::new(
        f,
        TruncationData {
            branch: Branch::Positive,
            bar: u_bar,
            lambda,
            p,
        },
    )
}

/// `h-` for the negative branch.
pub fn truncation_h_minus(f: Arc<dyn Nonlinearity>, lambda: f64, p: f64, v_bar: f64) -> Result<Truncation> {
    Truncation::new(
        f,
        TruncationData {
            branch: Branch::Negative,
            bar: v_bar,
            lambda,
            p,
        },
    )
}

/// `φ(u) = ∫ (|∇u|^p/p + μ|∇u|^q/q) dx - ∫ H(x, u) dx` as a minimization objective.
pub struct Phi<'a> {
    pub problem: &'a Problem,
    pub reaction: &'a dyn Reaction,
}

impl Phi<'_> {
    pub fn reaction_vector(&self, u: &FemFunction) -> DualVector {
        self.problem.reaction_vector(u, &|x, s| self.reaction.h(x, s))
    }
}

impl Objective for Phi<'_> {
    fn mesh(&self) -> &Arc<Mesh> {
        self.problem.mesh()
    }

    fn value(&self, u: &FemFunction) -> f64 {
        self.problem.energy(u) - self.problem.reaction_integral(u, &|x, s| self.reaction.big_h(x, s))
    }

    fn value_scale(&self, u: &FemFunction) -> f64 {
        self.problem.energy(u)
            + self
                .problem
                .reaction_integral(u, &|x, s| self.reaction.big_h(x, s).abs())
    }

    fn gradient(&self, u: &FemFunction) -> DualVector {
        &self.problem.apply_a(u) - &self.reaction_vector(u)
    }

    fn principal(&self) -> (f64, f64, &[f64]) {
        (self.problem.p(), self.problem.q(), self.problem.mu_means())
    }

    fn lumped_curvature(&self, u: &FemFunction) -> Vec<f64> {
        let mesh = self.problem.mesh();
        let mut out = vec![0.0; mesh.num_dofs()];
        for_each_quad_point(mesh, self.problem.quadrature(), |qp| {
            let s = u.value_at(qp.element, &qp.bary);
            let c = (-self.reaction.h_slope(&qp.x, s)).max(0.0);
            if c == 0.0 || !c.is_finite() {
                return;
            }
            for (k, &v) in mesh.element(qp.element).iter().enumerate() {
                if let Some(i) = mesh.dof(v) {
                    out[i] += qp.weight * c * qp.bary[k];
                }
            }
        });
        out
    }
}

/// `φ(u)` for a given reaction.
pub fn phi(problem: &Problem, reaction: &dyn Reaction, u: &FemFunction) -> f64 {
    Phi { problem, reaction }.value(u)
}

/// `φ+(u)` with the positive truncation.
pub fn phi_plus(problem: &Problem, h_plus: &Truncation, u: &FemFunction) -> f64 {
    phi(problem, h_plus, u)
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Absolute residual tolerance for the branch solves.
    pub tol: f64,
    pub max_iter: usize,
    pub eigen_tol: f64,
    pub eigen_max_iter: usize,
    /// Bound tolerance relative to `|ū|`.
    pub tol_bound_rel: f64,
    pub cap: f64,
    pub descent: String,
    pub descent_params: Params,
    /// Seeds `t = 2^0, 2^-1, ..., 2^-seed_levels`.
    pub seed_levels: u32,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 5000,
            eigen_tol: 1e-8,
            eigen_max_iter: 5000,
            tol_bound_rel: 1e-6,
            cap: DEFAULT_CAP,
            descent: "newton".to_string(),
            descent_params: Params::new(),
            seed_levels: 20,
        }
    }
}

impl SolveOptions {
    pub fn eigen_options(&self) -> EigenOptions {
        EigenOptions::new(self.eigen_tol, self.eigen_max_iter)
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub branch: Option<Branch>,
    pub solution: FemFunction,
    pub phi_value: f64,
    /// Residual of the minimized (possibly truncated) equation.
    pub residual_dual_norm: f64,
    /// Residual of the untruncated equation; equal to the above when no truncation is involved.
    pub original_residual: f64,
    pub iterations: usize,
    pub min_value: f64,
    pub max_value: f64,
    pub bar: Option<f64>,
    pub lambda: Option<f64>,
    pub lambda1: Option<f64>,
    pub seed_t: Option<f64>,
    pub seed_phi: Option<f64>,
    /// Objective value after each accepted step.
    pub phi_history: Vec<f64>,
    pub hypotheses: Option<HypothesisReport>,
    pub hf: Option<HfReport>,
}

impl SolveReport {
    /// Flat `key = value` lines.
    pub fn to_summary(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "none".to_string(), |v| v.to_string());
        let mut s = String::new();
        let branch = self.branch.map_or("none", Branch::label);
        s.push_str(&format!("branch = {branch}\n"));
        s.push_str(&format!("lambda = {}\n", opt(self.lambda)));
        s.push_str(&format!("lambda1 = {}\n", opt(self.lambda1)));
        s.push_str(&format!("bar = {}\n", opt(self.bar)));
        s.push_str(&format!("seed_t = {}\n", opt(self.seed_t)));
        s.push_str(&format!("seed_phi = {}\n", opt(self.seed_phi)));
        s.push_str(&format!("phi = {}\n", self.phi_value));
        s.push_str(&format!("residual = {:e}\n", self.residual_dual_norm));
        s.push_str(&format!("original_residual = {:e}\n", self.original_residual));
        s.push_str(&format!("iterations = {}\n", self.iterations));
        s.push_str(&format!("min_value = {}\n", self.min_value));
        s.push_str(&format!("max_value = {}\n", self.max_value));
        s.push_str(&format!("sup_norm = {}\n", self.solution.sup_norm()));
        if let Some(h) = &self.hypotheses {
            s.push_str(&h.to_summary());
        }
        if let Some(hf) = &self.hf {
            s.push_str(&hf.to_summary());
        }
        s
    }
}

/// Minimizes `φ` for `reaction` from `u0` until the residual drops below
/// `tol (1 + ‖r_0‖)`.
pub fn minimize_phi(
    problem: &Problem,
    reaction: &dyn Reaction,
    u0: &FemFunction,
    tol: f64,
    max_iter: usize,
    descent: &str,
) -> Result<SolveReport> {
    let objective = Phi { problem, reaction };
    let mut strategy = build_descent(descent, &Params::new())?;
    let out = minimize(&objective, u0, strategy.as_mut(), &MinimizeOptions::new(tol, max_iter))?;
    Ok(SolveReport {
        branch: None,
        min_value: out.solution.min_value(),
        max_value: out.solution.max_value(),
        phi_value: out.value,
        residual_dual_norm: out.residual,
        original_residual: out.residual,
        iterations: out.iterations,
        solution: out.solution,
        bar: None,
        lambda: None,
        lambda1: None,
        seed_t: None,
        seed_phi: None,
        phi_history: out.history,
        hypotheses: None,
        hf: None,
    })
}

/// Points where barrier inequalities and growth checks are sampled: mesh
/// vertices and quadrature points.
pub fn sample_points(problem: &Problem) -> Vec<Point> {
    let mut pts = problem.mesh().vertices().to_vec();
    for_each_quad_point(problem.mesh(), problem.quadrature(), |qp| pts.push(qp.x));
    pts
}

fn hf_sampling(problem: &Problem) -> HfSampling {
    let verts = problem.mesh().vertices();
    let stride = (verts.len() / 25).max(1);
    HfSampling::new(verts.iter().step_by(stride).copied().collect())
}

/// Computes the first eigenpair of the `p`-Laplacian for `problem`.
pub fn first_eigenpair(problem: &Problem, opts: &SolveOptions) -> Result<EigenPair> {
    solve_first_eigenpair_with(problem.mesh(), problem.p(), &opts.eigen_options())
}

/// Runs the truncation pipeline for one branch with a precomputed eigenpair.
pub fn solve_branch(
    problem: &Problem,
    f: Arc<dyn Nonlinearity>,
    lambda: f64,
    branch: Branch,
    eigen: &EigenPair,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    let p = problem.p();
    if (eigen.r - p).abs() > 1e-15 || eigen.eigenfunction.values().len() != problem.mesh().num_vertices() {
        return Err(invalid("eigenpair does not belong to this problem"));
    }
    if !(lambda > eigen.lambda) {
        return Err(Error::Gate {
            lambda,
            lambda1: eigen.lambda,
        });
    }
    let hypotheses = check_hypotheses(problem.exps(), problem.mu().as_ref(), problem.mesh());
    let hf = check_hf(f.as_ref(), p, problem.q(), &hf_sampling(problem));
    if !hf.all_pass() {
        log::warn!("growth hypotheses look violated for {}", f.name());
    }

    let samples = sample_points(problem);
    let bar = find_constant(f.as_ref(), lambda, p, &samples, opts.cap, branch)?;
    let trunc = Truncation::new(
        f,
        TruncationData {
            branch,
            bar,
            lambda,
            p,
        },
    )?;

    let objective = Phi {
        problem,
        reaction: &trunc,
    };
    let u1 = &eigen.eigenfunction;
    let (seed_t, seed_phi) = (0..=opts.seed_levels)
        .map(|k| {
            let t = 0.5f64.powi(k as i32);
            (t, objective.value(&u1.scaled(branch.sign() * t)))
        })
        .fold((f64::NAN, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
    if !(seed_phi < 0.0) {
        return Err(Error::Seed { best_value: seed_phi });
    }
    let seed = u1.scaled(branch.sign() * seed_t);
    let r0 = objective.gradient(&seed).norm();

    let mut strategy = build_descent(&opts.descent, &opts.descent_params)?;
    let out = minimize(
        &objective,
        &seed,
        strategy.as_mut(),
        &MinimizeOptions::new(opts.tol / (1.0 + r0), opts.max_iter),
    )?;

    let u = out.solution;
    let original = (&problem.apply_a(&u) - &problem.reaction_vector(&u, &|x, s| trunc.original(x, s))).norm();
    let report = SolveReport {
        branch: Some(branch),
        min_value: u.min_value(),
        max_value: u.max_value(),
        phi_value: out.value,
        residual_dual_norm: out.residual,
        original_residual: original,
        iterations: out.iterations,
        solution: u,
        bar: Some(bar),
        lambda: Some(lambda),
        lambda1: Some(eigen.lambda),
        seed_t: Some(seed_t),
        seed_phi: Some(seed_phi),
        phi_history: out.history,
        hypotheses: Some(hypotheses),
        hf: Some(hf),
    };
    verify_branch(&report, bar, opts)?;
    Ok(report)
}

fn verify_branch(report: &SolveReport, bar: f64, opts: &SolveOptions) -> Result<()> {
    let tol_bound = opts.tol_bound_rel * bar.abs();
    let (lo, hi) = if bar > 0.0 { (0.0, bar) } else { (bar, 0.0) };
    if report.min_value < lo - tol_bound || report.max_value > hi + tol_bound {
        return Err(Error::Verification(format!(
            "nodal range [{}, {}] leaves [{lo}, {hi}] by more than {tol_bound:e}",
            report.min_value, report.max_value
        )));
    }
    if !(report.phi_value < 0.0) {
        return Err(Error::Verification(format!(
            "energy {} is not negative; the minimizer may be trivial",
            report.phi_value
        )));
    }
    if !(report.original_residual <= opts.tol) {
        return Err(Error::Verification(format!(
            "residual of the untruncated equation {:e} exceeds {:e}",
            report.original_residual, opts.tol
        )));
    }
    Ok(())
}

/// Nonnegative solution: eigenpair, `ū`, seed, minimization of `φ+`, checks.
pub fn solve_positive(problem: &Problem, f: Arc<dyn Nonlinearity>, lambda: f64, opts: &SolveOptions) -> Result<SolveReport> {
    let eigen = first_eigenpair(problem, opts)?;
    solve_branch(problem, f, lambda, Branch::Positive, &eigen, opts)
}

/// Nonpositive solution, mirroring [`solve_positive`] with `h-` and `v̄`.
pub fn solve_negative(problem: &Problem, f: Arc<dyn Nonlinearity>, lambda: f64, opts: &SolveOptions) -> Result<SolveReport> {
    let eigen = first_eigenpair(problem, opts)?;
    solve_branch(problem, f, lambda, Branch::Negative, &eigen, opts)
}
