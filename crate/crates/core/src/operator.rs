//! The double phase operator `A(u) = -div(|∇u|^{p-2}∇u + μ|∇u|^{q-2}∇u)` in
//! weak form on P1 functions, and the matching energy.
//!
//! Gradients are constant per element, so both the operator and the energy
//! reduce to element sums once the per-element mean of `μ` is known. The
//! mean is taken with the problem's quadrature rule.

use std::ops::{Index, Sub};
use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::field::Field;
use crate::function::{for_each_quad_point, FemFunction};
use crate::linalg::{dot, norm2, BandMatrix};
use crate::mesh::{Mesh, Point};
use crate::orlicz::{sample_weight, Exponents, ModulusParts};
use crate::quadrature::QuadratureRule;

/// Pairings of a functional with the interior nodal basis functions.
#[derive(Debug, Clone, PartialEq)]
pub struct DualVector(pub Vec<f64>);

impl DualVector {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Euclidean norm over interior entries; this is the "dual norm" used for
    /// all residual tolerances.
    pub fn norm(&self) -> f64 {
        norm2(&self.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Action on a discrete test function given by its interior values.
    pub fn pair(&self, dofs: &[f64]) -> f64 {
        dot(&self.0, dofs)
    }
}

impl Index<usize> for DualVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl Sub for &DualVector {
    type Output = DualVector;
    fn sub(self, rhs: &DualVector) -> DualVector {
        DualVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

/// `|g|^{s-2}`-type factor extended by zero at `g = 0`.
#[inline]
pub(crate) fn power_factor(gnorm: f64, s: f64) -> f64 {
    if gnorm == 0.0 {
        0.0
    } else {
        gnorm.powf(s - 2.0)
    }
}

#[inline]
pub(crate) fn norm(g: &Point) -> f64 {
    g[0].hypot(g[1])
}

/// `Σ_e |K| c_e(|∇u|) ∇u · ∇φ_i` for every interior basis function.
pub(crate) fn flux_action(
    u: &FemFunction,
    coefficient: impl Fn(usize, f64) -> f64,
) -> DualVector {
    let mesh = u.mesh();
    let mut out = vec![0.0; mesh.num_dofs()];
    for e in 0..mesh.num_elements() {
        let g = u.element_gradient(e);
        let c = coefficient(e, norm(&g));
        if c == 0.0 {
            continue;
        }
        let geo = mesh.geometry(e);
        for (k, &v) in mesh.element(e).iter().enumerate() {
            if let Some(i) = mesh.dof(v) {
                let b = &geo.basis_gradients[k];
                out[i] += geo.measure * c * (g[0] * b[0] + g[1] * b[1]);
            }
        }
    }
    DualVector(out)
}

/// Stiffness matrix on interior dofs with per-element weights.
pub fn assemble_stiffness(mesh: &Mesh, weights: &[f64]) -> BandMatrix {
    let mut k = BandMatrix::zeros(mesh.num_dofs(), mesh.dof_bandwidth());
    for e in 0..mesh.num_elements() {
        let geo = mesh.geometry(e);
        let nodes = mesh.element(e);
        for (a, &va) in nodes.iter().enumerate() {
            let Some(i) = mesh.dof(va) else { continue };
            for (b, &vb) in nodes.iter().enumerate().take(a + 1) {
                let Some(j) = mesh.dof(vb) else { continue };
                let ga = &geo.basis_gradients[a];
                let gb = &geo.basis_gradients[b];
                let v = weights[e] * geo.measure * (ga[0] * gb[0] + ga[1] * gb[1]);
                if a == b || i != j {
                    k.add(i, j, v);
                }
            }
        }
    }
    k
}

#[derive(Clone)]
pub struct Problem {
    mesh: Arc<Mesh>,
    exps: Exponents,
    mu: Arc<dyn Field>,
    quad: QuadratureRule,
    mu_mean: Vec<f64>,
}

impl std::fmt::Debug for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Problem")
            .field("exps", &self.exps)
            .field("mu", &self.mu.describe())
            .field("elements", &self.mesh.num_elements())
            .finish()
    }
}

impl Problem {
    pub fn new(mesh: Arc<Mesh>, exps: Exponents, mu: Arc<dyn Field>) -> Result<Self> {
        let quad = QuadratureRule::default_for(mesh.dim());
        Self::with_quadrature(mesh, exps, mu, quad)
    }

    pub fn with_quadrature(
        mesh: Arc<Mesh>,
        exps: Exponents,
        mu: Arc<dyn Field>,
        quad: QuadratureRule,
    ) -> Result<Self> {
        if quad.dim() != mesh.dim() {
            return Err(invalid("quadrature rule dimension does not match the mesh"));
        }
        let mut integral = vec![0.0; mesh.num_elements()];
        let mut bad = None;
        for_each_quad_point(&mesh, &quad, |qp| match sample_weight(mu.as_ref(), &qp.x) {
            Ok(m) => integral[qp.element] += qp.weight * m,
            Err(e) => {
                bad.get_or_insert(e);
            }
        });
        if let Some(e) = bad {
            return Err(e);
        }
        let mu_mean = integral
            .iter()
            .enumerate()
            .map(|(e, s)| s / mesh.geometry(e).measure)
            .collect();
        Ok(Self {
            mesh,
            exps,
            mu,
            quad,
            mu_mean,
        })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn exps(&self) -> &Exponents {
        &self.exps
    }

    pub fn p(&self) -> f64 {
        self.exps.p
    }

    pub fn q(&self) -> f64 {
        self.exps.q
    }

    pub fn mu(&self) -> &Arc<dyn Field> {
        &self.mu
    }

    pub fn quadrature(&self) -> &QuadratureRule {
        &self.quad
    }

    /// Mean of `μ` over element `e`.
    pub fn mu_mean(&self, e: usize) -> f64 {
        self.mu_mean[e]
    }

    pub fn mu_means(&self) -> &[f64] {
        &self.mu_mean
    }

    /// `|g|^{p-2} + μ_e |g|^{q-2}`, zero at `g = 0`.
    pub fn flux_coefficient(&self, e: usize, gnorm: f64) -> f64 {
        let mu = self.mu_mean[e];
        let mut c = power_factor(gnorm, self.exps.p);
        if mu != 0.0 {
            c += mu * power_factor(gnorm, self.exps.q);
        }
        c
    }

    /// `⟨A(u), φ_i⟩` for every interior basis function.
    pub fn apply_a(&self, u: &FemFunction) -> DualVector {
        flux_action(u, |e, g| self.flux_coefficient(e, g))
    }

    /// `∫ (|∇u|^p / p + μ |∇u|^q / q) dx`.
    pub fn energy(&self, u: &FemFunction) -> f64 {
        let parts = self.gradient_modulus_parts(u);
        parts.power / self.exps.p + parts.weighted / self.exps.q
    }

    /// `‖∇u‖_p^p` and `‖∇u‖_{q,μ}^q`.
    pub fn gradient_modulus_parts(&self, u: &FemFunction) -> ModulusParts {
        let mut parts = ModulusParts {
            power: 0.0,
            weighted: 0.0,
        };
        for e in 0..self.mesh.num_elements() {
            let g = norm(&u.element_gradient(e));
            if g == 0.0 {
                continue;
            }
            let m = self.mesh.geometry(e).measure;
            parts.power += m * g.powf(self.exps.p);
            if self.mu_mean[e] != 0.0 {
                parts.weighted += m * self.mu_mean[e] * g.powf(self.exps.q);
            }
        }
        parts
    }

    /// Central-difference check of `apply_a` against `energy` along `v`;
    /// returns the relative discrepancy.
    pub fn gradient_check(&self, u: &FemFunction, v: &FemFunction, h: f64) -> f64 {
        let fd = (self.energy(&u.axpy(h, v)) - self.energy(&u.axpy(-h, v))) / (2.0 * h);
        let exact = self.apply_a(u).pair(&v.dofs());
        let scale = exact.abs().max(fd.abs());
        if scale == 0.0 {
            0.0
        } else {
            (fd - exact).abs() / scale
        }
    }

    /// `⟨A(u) - A(v), u - v⟩`, accumulated element by element.
    pub fn monotonicity_gap(&self, u: &FemFunction, v: &FemFunction) -> f64 {
        let mut gap = 0.0;
        for e in 0..self.mesh.num_elements() {
            let gu = u.element_gradient(e);
            let gv = v.element_gradient(e);
            let cu = self.flux_coefficient(e, norm(&gu));
            let cv = self.flux_coefficient(e, norm(&gv));
            let diff = [cu * gu[0] - cv * gv[0], cu * gu[1] - cv * gv[1]];
            let dg = [gu[0] - gv[0], gu[1] - gv[1]];
            gap += self.mesh.geometry(e).measure * (diff[0] * dg[0] + diff[1] * dg[1]);
        }
        gap
    }

    /// `∫ h(x, u(x)) φ_i dx` for every interior basis function.
    pub fn reaction_vector(&self, u: &FemFunction, h: &dyn Fn(&Point, f64) -> f64) -> DualVector {
        let mut out = vec![0.0; self.mesh.num_dofs()];
        for_each_quad_point(&self.mesh, &self.quad, |qp| {
            let s = u.value_at(qp.element, &qp.bary);
            let val = qp.weight * h(&qp.x, s);
            if val == 0.0 {
                return;
            }
            for (k, &v) in self.mesh.element(qp.element).iter().enumerate() {
                if let Some(i) = self.mesh.dof(v) {
                    out[i] += val * qp.bary[k];
                }
            }
        });
        DualVector(out)
    }

    /// `∫ H(x, u(x)) dx`.
    pub fn reaction_integral(&self, u: &FemFunction, big_h: &dyn Fn(&Point, f64) -> f64) -> f64 {
        let mut total = 0.0;
        for_each_quad_point(&self.mesh, &self.quad, |qp| {
            total += qp.weight * big_h(&qp.x, u.value_at(qp.element, &qp.bary));
        });
        total
    }
}
