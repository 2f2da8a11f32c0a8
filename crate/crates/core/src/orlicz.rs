//! Musielak-Orlicz modulus for `H(x, t) = t^p + μ(x) t^q`, its Luxemburg
//! norm, the weighted seminorm, and structural hypothesis checks.

use crate::error::{invalid, Result};
use crate::field::Field;
use crate::function::{for_each_quad_point, FemFunction};
use crate::mesh::Mesh;
use crate::quadrature::QuadratureRule;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponents {
    pub p: f64,
    pub q: f64,
    /// Dimension used by the hypothesis checks; may differ from the mesh dimension.
    pub n: usize,
}

impl Exponents {
    pub fn new(p: f64, q: f64, n: usize) -> Result<Self> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(invalid(format!("p > 1 required, got {p}")));
        }
        if !(q > p) || !q.is_finite() {
            return Err(invalid(format!("p < q required, got p = {p}, q = {q}")));
        }
        if n == 0 {
            return Err(invalid("dimension N must be at least 1"));
        }
        Ok(Self { p, q, n })
    }

    pub fn critical_exponent(&self) -> f64 {
        critical_exponent(self.p, self.n)
    }
}

/// Sobolev critical exponent `Np / (N - p)`, infinite when `p >= N`.
pub fn critical_exponent(p: f64, n: usize) -> f64 {
    let n = n as f64;
    if p < n {
        n * p / (n - p)
    } else {
        f64::INFINITY
    }
}

/// The two pieces of the modulus: `∫|u|^p` and `∫μ|u|^q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulusParts {
    pub power: f64,
    pub weighted: f64,
}

impl ModulusParts {
    pub fn total(&self) -> f64 {
        self.power + self.weighted
    }

    /// Modulus of `u / tau`.
    pub fn scaled(&self, tau: f64, exps: &Exponents) -> f64 {
        self.power * tau.powf(-exps.p) + self.weighted * tau.powf(-exps.q)
    }
}

/// Evaluates `μ` at a point and rejects negative samples.
pub(crate) fn sample_weight(mu: &dyn Field, x: &crate::mesh::Point) -> Result<f64> {
    let m = mu.value(x);
    if m < 0.0 || !m.is_finite() {
        return Err(invalid(format!(
            "weight must be finite and non-negative, got {m} at ({}, {})",
            x[0], x[1]
        )));
    }
    Ok(m)
}

pub fn modulus_parts_with(
    u: &FemFunction,
    mu: &dyn Field,
    exps: &Exponents,
    quad: &QuadratureRule,
) -> Result<ModulusParts> {
    let mut parts = ModulusParts {
        power: 0.0,
        weighted: 0.0,
    };
    let mut bad = None;
    for_each_quad_point(u.mesh(), quad, |qp| {
        if bad.is_some() {
            return;
        }
        let m = match sample_weight(mu, &qp.x) {
            Ok(m) => m,
            Err(e) => {
                bad = Some(e);
                return;
            }
        };
        let a = u.value_at(qp.element, &qp.bary).abs();
        parts.power += qp.weight * a.powf(exps.p);
        if m != 0.0 {
            parts.weighted += qp.weight * m * a.powf(exps.q);
        }
    });
    match bad {
        Some(e) => Err(e),
        None => Ok(parts),
    }
}

pub fn modulus_parts(u: &FemFunction, mu: &dyn Field, exps: &Exponents) -> Result<ModulusParts> {
    modulus_parts_with(u, mu, exps, &QuadratureRule::default_for(u.mesh().dim()))
}

/// `ρ_H(u) = ∫ (|u|^p + μ|u|^q) dx`.
pub fn modulus(u: &FemFunction, mu: &dyn Field, exps: &Exponents) -> Result<f64> {
    Ok(modulus_parts(u, mu, exps)?.total())
}

const BISECTION_STEPS: usize = 60;

/// Smallest `τ > 0` with `ρ(u/τ) <= 1`, given the modulus pieces of `u`.
///
/// Brackets from `τ = 1` by doubling or halving, then bisects.
pub fn luxemburg_from_parts(parts: &ModulusParts, exps: &Exponents) -> f64 {
    if parts.total() == 0.0 {
        return 0.0;
    }
    let rho = |tau: f64| parts.scaled(tau, exps);
    let (mut lo, mut hi);
    if rho(1.0) > 1.0 {
        hi = 1.0;
        while rho(hi) > 1.0 {
            hi *= 2.0;
        }
        lo = 0.5 * hi;
    } else {
        lo = 1.0;
        while rho(lo) <= 1.0 {
            lo *= 0.5;
        }
        hi = 2.0 * lo;
    }
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if rho(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 * hi {
            break;
        }
    }
    hi
}

/// `‖u‖_H = inf{τ > 0 : ρ_H(u/τ) <= 1}`.
pub fn luxemburg_norm(u: &FemFunction, mu: &dyn Field, exps: &Exponents) -> Result<f64> {
    Ok(luxemburg_from_parts(&modulus_parts(u, mu, exps)?, exps))
}

/// `‖u‖_{q,μ} = (∫ μ|u|^q dx)^{1/q}`.
pub fn seminorm_q_mu(u: &FemFunction, mu: &dyn Field, q: f64) -> Result<f64> {
    // the p slot is irrelevant for the weighted part
    let exps = Exponents {
        p: 1.0,
        q,
        n: u.mesh().dim(),
    };
    Ok(modulus_parts(u, mu, &exps)?.weighted.powf(1.0 / q))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichReport {
    pub lhs: f64,
    pub mid: f64,
    pub rhs: f64,
    pub norm: f64,
    pub holds: bool,
}

const SANDWICH_SLACK: f64 = 1e-10;

/// Evaluates `min{τ^p, τ^q} <= ρ(u) <= max{τ^p, τ^q}` for `τ = ‖·‖_H`.
pub fn sandwich_from_parts(parts: &ModulusParts, exps: &Exponents) -> SandwichReport {
    let norm = luxemburg_from_parts(parts, exps);
    let a = norm.powf(exps.p);
    let b = norm.powf(exps.q);
    let (lhs, rhs) = (a.min(b), a.max(b));
    let mid = parts.total();
    let slack = SANDWICH_SLACK * rhs.max(mid);
    SandwichReport {
        lhs,
        mid,
        rhs,
        norm,
        holds: lhs <= mid + slack && mid <= rhs + slack,
    }
}

pub fn check_sandwich(u: &FemFunction, mu: &dyn Field, exps: &Exponents) -> Result<SandwichReport> {
    Ok(sandwich_from_parts(&modulus_parts(u, mu, exps)?, exps))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    pub p_less_than_q: bool,
    pub q_less_than_n: bool,
    pub ratio_below_bound: bool,
    pub mu_nonnegative: bool,
    pub mu_min: f64,
    pub lipschitz_estimate: f64,
    pub critical_exponent: f64,
    pub mesh_dim: usize,
}

impl HypothesisReport {
    pub fn all_hold(&self) -> bool {
        self.p_less_than_q
            && self.q_less_than_n
            && self.ratio_below_bound
            && self.mu_nonnegative
            && self.lipschitz_estimate.is_finite()
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if !self.p_less_than_q {
            w.push("p < q fails".to_string());
        }
        if !self.q_less_than_n {
            w.push("q < N fails".to_string());
        }
        if !self.ratio_below_bound {
            w.push("q/p < 1 + 1/N fails".to_string());
        }
        if !self.mu_nonnegative {
            w.push(format!("weight takes negative values (min {})", self.mu_min));
        }
        if self.mesh_dim < 2 {
            w.push("one-dimensional mesh (the theory assumes N >= 2)".to_string());
        }
        w
    }

    pub fn to_summary(&self) -> String {
        format!(
            "p_less_than_q = {}\nq_less_than_n = {}\nratio_below_bound = {}\nmu_nonnegative = {}\nmu_min = {}\nlipschitz_estimate = {}\ncritical_exponent = {}\nmesh_dim = {}\n",
            self.p_less_than_q,
            self.q_less_than_n,
            self.ratio_below_bound,
            self.mu_nonnegative,
            self.mu_min,
            self.lipschitz_estimate,
            self.critical_exponent,
            self.mesh_dim
        )
    }
}

/// Report-only check of the exponent conditions and of the weight. The
/// Lipschitz constant is the largest difference quotient over mesh edges.
pub fn check_hypotheses(exps: &Exponents, mu: &dyn Field, mesh: &Mesh) -> HypothesisReport {
    let n = exps.n as f64;
    let quad = QuadratureRule::default_for(mesh.dim());
    let mut mu_min = mesh
        .vertices()
        .iter()
        .map(|x| mu.value(x))
        .fold(f64::INFINITY, f64::min);
    for_each_quad_point(mesh, &quad, |qp| mu_min = mu_min.min(mu.value(&qp.x)));
    let lipschitz = mesh
        .edges()
        .map(|(a, b)| {
            let (xa, xb) = (&mesh.vertices()[a], &mesh.vertices()[b]);
            (mu.value(xa) - mu.value(xb)).abs() / crate::mesh::distance(xa, xb)
        })
        .fold(0.0, f64::max);
    let report = HypothesisReport {
        p_less_than_q: exps.p < exps.q,
        q_less_than_n: exps.q < n,
        ratio_below_bound: exps.q / exps.p < 1.0 + 1.0 / n,
        mu_nonnegative: mu_min >= 0.0,
        mu_min,
        lipschitz_estimate: lipschitz,
        critical_exponent: exps.critical_exponent(),
        mesh_dim: mesh.dim(),
    };
    for w in report.warnings() {
        log::warn!("hypothesis check: {w}");
    }
    report
}
