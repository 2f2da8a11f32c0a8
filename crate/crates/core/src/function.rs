//! Piecewise-linear functions on a mesh, quadrature loops and CSV export.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::mesh::{Mesh, Point};
use crate::quadrature::QuadratureRule;

/// A quadrature point mapped onto a physical element. `weight` already
/// includes the element Jacobian.
#[derive(Debug, Clone, Copy)]
pub struct QuadPoint {
    pub element: usize,
    pub x: Point,
    pub bary: [f64; 3],
    pub weight: f64,
}

/// Visits every mapped quadrature point in element order.
pub fn for_each_quad_point(mesh: &Mesh, quad: &QuadratureRule, mut visit: impl FnMut(&QuadPoint)) {
    let scale = 1.0 / quad.reference_measure();
    for e in 0..mesh.num_elements() {
        let jac = mesh.geometry(e).measure * scale;
        for (bary, w) in quad.points().iter().zip(quad.weights()) {
            visit(&QuadPoint {
                element: e,
                x: mesh.map_point(e, bary),
                bary: *bary,
                weight: w * jac,
            });
        }
    }
}

/// Integrates `integrand(x, element)` over the mesh with `quad`.
pub fn integrate(mesh: &Mesh, quad: &QuadratureRule, integrand: impl Fn(&Point, usize) -> f64) -> f64 {
    let mut total = 0.0;
    for_each_quad_point(mesh, quad, |qp| total += qp.weight * integrand(&qp.x, qp.element));
    total
}

#[derive(Debug, Clone)]
pub struct FemFunction {
    mesh: Arc<Mesh>,
    values: Vec<f64>,
}

impl FemFunction {
    pub fn new(mesh: Arc<Mesh>, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.num_vertices() {
            return Err(invalid(format!(
                "expected {} nodal values, got {}",
                mesh.num_vertices(),
                values.len()
            )));
        }
        Ok(Self { mesh, values })
    }

    pub fn zeros(mesh: Arc<Mesh>) -> Self {
        let n = mesh.num_vertices();
        Self {
            mesh,
            values: vec![0.0; n],
        }
    }

    /// Builds a Dirichlet-conforming function from interior (degree-of-freedom) values.
    pub fn from_dofs(mesh: Arc<Mesh>, dofs: &[f64]) -> Self {
        assert_eq!(dofs.len(), mesh.num_dofs());
        let mut values = vec![0.0; mesh.num_vertices()];
        for (&v, &d) in mesh.interior_vertices().iter().zip(dofs) {
            values[v] = d;
        }
        Self { mesh, values }
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn dofs(&self) -> Vec<f64> {
        self.mesh
            .interior_vertices()
            .iter()
            .map(|&v| self.values[v])
            .collect()
    }

    pub fn is_dirichlet_conforming(&self) -> bool {
        self.mesh
            .boundary_mask()
            .iter()
            .zip(&self.values)
            .all(|(&b, &v)| !b || v == 0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Sets all boundary values to zero.
    pub fn with_zero_boundary(mut self) -> Self {
        for (v, &b) in self.values.iter_mut().zip(self.mesh.boundary_mask()) {
            if b {
                *v = 0.0;
            }
        }
        self
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            mesh: self.mesh.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `self + c * other` on the same mesh.
    pub fn axpy(&self, c: f64, other: &Self) -> Self {
        debug_assert!(Arc::ptr_eq(&self.mesh, &other.mesh) || self.values.len() == other.values.len());
        Self {
            mesh: self.mesh.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + c * b)
                .collect(),
        }
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Value of the interpolant at barycentric coordinates of element `e`.
    pub fn value_at(&self, e: usize, bary: &[f64; 3]) -> f64 {
        self.mesh
            .element(e)
            .iter()
            .enumerate()
            .map(|(k, &v)| bary[k] * self.values[v])
            .sum()
    }

    /// Constant gradient of the interpolant on element `e`; the second entry is
    /// zero on one-dimensional meshes.
    pub fn element_gradient(&self, e: usize) -> Point {
        let grads = &self.mesh.geometry(e).basis_gradients;
        let mut g = [0.0; 2];
        for (k, &v) in self.mesh.element(e).iter().enumerate() {
            g[0] += self.values[v] * grads[k][0];
            g[1] += self.values[v] * grads[k][1];
        }
        g
    }

    /// CSV with columns `x,value` (1D) or `x,y,value` (2D), one row per vertex.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let two_d = self.mesh.dim() == 2;
        out.push_str(if two_d { "x,y,value\n" } else { "x,value\n" });
        for (x, v) in self.mesh.vertices().iter().zip(&self.values) {
            if two_d {
                let _ = writeln!(out, "{},{},{}", x[0], x[1], v);
            } else {
                let _ = writeln!(out, "{},{}", x[0], v);
            }
        }
        out
    }

    /// Reads a CSV written by [`FemFunction::to_csv`] back onto `mesh`,
    /// checking that vertex coordinates match.
    pub fn from_csv(mesh: Arc<Mesh>, text: &str) -> Result<Self> {
        let two_d = mesh.dim() == 2;
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| invalid("empty CSV"))?;
        let expected = if two_d { "x,y,value" } else { "x,value" };
        if header.trim() != expected {
            return Err(invalid(format!("CSV header `{header}`, expected `{expected}`")));
        }
        let mut values = Vec::with_capacity(mesh.num_vertices());
        for (row, line) in lines.enumerate() {
            let fields: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| invalid(format!("CSV row {}: {e}", row + 2)))?;
            let ncols = if two_d { 3 } else { 2 };
            if fields.len() != ncols {
                return Err(invalid(format!("CSV row {} has {} columns", row + 2, fields.len())));
            }
            let x = mesh
                .vertices()
                .get(row)
                .ok_or_else(|| invalid("CSV has more rows than the mesh has vertices"))?;
            let tol = 1e-12 * (1.0 + x[0].abs() + x[1].abs());
            if (fields[0] - x[0]).abs() > tol || (two_d && (fields[1] - x[1]).abs() > tol) {
                return Err(invalid(format!("CSV row {} does not match vertex {row}", row + 2)));
            }
            values.push(fields[ncols - 1]);
        }
        Self::new(mesh, values)
    }
}

/// Nodal interpolant of `field`.
pub fn interpolate(mesh: &Arc<Mesh>, field: impl Fn(&Point) -> f64) -> FemFunction {
    FemFunction {
        mesh: mesh.clone(),
        values: mesh.vertices().iter().map(field).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_mesh, Domain};
    use std::f64::consts::PI;

    fn interval(n: usize) -> Arc<Mesh> {
        Arc::new(build_mesh(Domain::unit_interval(), n).unwrap())
    }

    fn square(n: usize) -> Arc<Mesh> {
        Arc::new(build_mesh(Domain::unit_square(), n).unwrap())
    }

    #[test]
    fn interpolation_examples() {
        let m = interval(2);
        assert!(interpolate(&m, |_| 1.0).values().iter().all(|&v| v == 1.0));
        assert_eq!(interpolate(&m, |x| x[0]).values(), &[0.0, 0.5, 1.0]);
        let s = interpolate(&interval(7), |x| (PI * x[0]).sin());
        assert_eq!(s.values()[0], 0.0);
    }

    #[test]
    fn gradients_of_affine_fields() {
        let m = interval(5);
        let u = interpolate(&m, |x| x[0]);
        for e in 0..m.num_elements() {
            assert!((u.element_gradient(e)[0] - 1.0).abs() < 1e-12);
        }
        let c = interpolate(&m, |_| 3.0);
        assert_eq!(c.element_gradient(2), [0.0, 0.0]);
        let sq = square(4);
        let w = interpolate(&sq, |x| x[0] + 2.0 * x[1]);
        for e in 0..sq.num_elements() {
            let g = w.element_gradient(e);
            assert!((g[0] - 1.0).abs() < 1e-12 && (g[1] - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn integration_examples() {
        let q1 = QuadratureRule::default_for(1);
        let m = interval(3);
        assert!((integrate(&m, &q1, |_, _| 1.0) - 1.0).abs() < 1e-14);
        assert!((integrate(&m, &q1, |x, _| x[0]) - 0.5).abs() < 1e-14);
        let q2 = QuadratureRule::default_for(2);
        assert!((integrate(&square(3), &q2, |_, _| 1.0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn integration_of_quartic_is_exact() {
        let q2 = QuadratureRule::default_for(2);
        let v = integrate(&square(3), &q2, |x, _| x[0].powi(2) * x[1].powi(2));
        assert!((v - 1.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn refinement_error_is_second_order() {
        // midpoint rule has an O(h^2) error for a smooth integrand
        let q = QuadratureRule::gauss_segment(1).unwrap();
        let f = |x: &Point, _: usize| (3.0 * x[0]).exp();
        let exact = ((3.0f64).exp() - 1.0) / 3.0;
        let e1 = (integrate(&interval(8), &q, f) - exact).abs();
        let e2 = (integrate(&interval(16), &q, f) - exact).abs();
        assert!((e1 / e2 - 4.0).abs() < 0.1, "ratio {}", e1 / e2);
    }

    #[test]
    fn csv_round_trip() {
        let m = square(3);
        let u = interpolate(&m, |x| (x[0] * 1.7).sin() + x[1] / 3.0);
        let back = FemFunction::from_csv(m.clone(), &u.to_csv()).unwrap();
        assert_eq!(back.values(), u.values());
        let bad = u.to_csv().replace("x,y,value", "a,b,c");
        assert!(FemFunction::from_csv(m, &bad).is_err());
    }

    #[test]
    fn dof_round_trip() {
        let m = square(4);
        let u = interpolate(&m, |x| x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1]));
        assert!(u.is_dirichlet_conforming());
        let again = FemFunction::from_dofs(m, &u.dofs());
        assert_eq!(again.values(), u.values());
    }
}
