//! Post hoc checks on computed solutions: weak residuals, growth bounds on a
//! convection term `g(x, s, ξ)`, the truncated test-function identity used for
//! `L∞` bounds, and sup norms.

use crate::error::{invalid, Result};
use crate::function::FemFunction;
use crate::mesh::Point;
use crate::operator::{norm, Problem};
use crate::orlicz::critical_exponent;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualReport {
    pub max_abs: f64,
    pub euclidean: f64,
}

/// Residual of `-div a(∇u) = rhs(x, u)` tested against every interior basis function.
pub fn weak_residual(problem: &Problem, u: &FemFunction, rhs: &dyn Fn(&Point, f64) -> f64) -> ResidualReport {
    let r = &problem.apply_a(u) - &problem.reaction_vector(u, rhs);
    ResidualReport {
        max_abs: r.max_abs(),
        euclidean: r.norm(),
    }
}

/// Constants of the bound `|g(x, s, ξ)| <= c1 |ξ|^{p(r-1)/r} + c2 |s|^{r-1} + c3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub r: f64,
}

impl GrowthConstants {
    /// Validates `c_i >= 0` and `q < r <= p*` in dimension `n`.
    pub fn new(c1: f64, c2: f64, c3: f64, r: f64, p: f64, q: f64, n: usize) -> Result<Self> {
        if !(c1 >= 0.0 && c2 >= 0.0 && c3 >= 0.0) {
            return Err(invalid(format!("growth constants must be nonnegative, got {c1}, {c2}, {c3}")));
        }
        let crit = critical_exponent(p, n);
        if !(r > q && r <= crit) {
            return Err(invalid(format!("growth exponent r = {r} must satisfy {q} < r <= {crit}")));
        }
        Ok(Self { c1, c2, c3, r })
    }

    pub fn bound(&self, p: f64, s: f64, xi: f64) -> f64 {
        let r = self.r;
        self.c1 * xi.powf(p * (r - 1.0) / r) + self.c2 * s.abs().powf(r - 1.0) + self.c3
    }
}

#[derive(Debug, Clone)]
pub struct HgSampling {
    pub points: Vec<Point>,
    pub s_values: Vec<f64>,
    /// Gradient magnitudes; each is sampled along both coordinate axes.
    pub xi_norms: Vec<f64>,
}

impl HgSampling {
    pub fn new(points: Vec<Point>) -> Self {
        let mut s_values = vec![0.0];
        for k in -4..=6 {
            let v = 2f64.powi(2 * k);
            s_values.push(v);
            s_values.push(-v);
        }
        let mut xi_norms = vec![0.0];
        xi_norms.extend((-4..=6).map(|k| 2f64.powi(2 * k)));
        Self {
            points,
            s_values,
            xi_norms,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HgReport {
    pub samples: usize,
    pub violations: usize,
    /// Largest `|g| / bound` over the samples.
    pub max_ratio: f64,
    /// Smallest `c` such that `c1 = c2 = c3 = c` bounds every sample.
    pub fitted_constant: f64,
    /// The fitting ratio keeps growing along the largest sampled `|s|` or `|ξ|`.
    pub diverging: bool,
}

impl HgReport {
    pub fn passes(&self) -> bool {
        self.violations == 0
    }

    pub fn to_summary(&self) -> String {
        format!(
            "hg_samples = {}\nhg_violations = {}\nhg_max_ratio = {}\nhg_fitted_constant = {}\nhg_diverging = {}\n",
            self.samples, self.violations, self.max_ratio, self.fitted_constant, self.diverging
        )
    }
}

/// `true` when the tail of `ratios` is strictly increasing and ends well above its start.
fn tail_diverges(ratios: &[f64]) -> bool {
    let finite: Vec<f64> = ratios.iter().copied().filter(|v| !v.is_nan()).collect();
    if finite.len() < 4 {
        return false;
    }
    let tail = &finite[finite.len() - 4..];
    tail.windows(2).all(|w| w[1] > w[0] || w[1] == f64::INFINITY) && tail[3] > 10.0 * tail[0].max(f64::MIN_POSITIVE)
}

/// Samples the growth bound of `g` on a grid of `(x, s, ξ)`.
pub fn check_hg(
    g: &dyn Fn(&Point, f64, &Point) -> f64,
    constants: &GrowthConstants,
    p: f64,
    sampling: &HgSampling,
) -> HgReport {
    let unit = GrowthConstants {
        c1: 1.0,
        c2: 1.0,
        c3: 1.0,
        r: constants.r,
    };
    let mut report = HgReport {
        samples: 0,
        violations: 0,
        max_ratio: 0.0,
        fitted_constant: 0.0,
        diverging: false,
    };
    let origin = [[0.0, 0.0]];
    let points = if sampling.points.is_empty() { &origin[..] } else { &sampling.points[..] };
    let mut s_ratios = vec![0.0f64; sampling.s_values.len()];
    let mut xi_ratios = vec![0.0f64; sampling.xi_norms.len()];
    for x in points {
        for (i, &s) in sampling.s_values.iter().enumerate() {
            for (j, &m) in sampling.xi_norms.iter().enumerate() {
                for xi in [[m, 0.0], [0.0, m]] {
                    let v = g(x, s, &xi).abs();
                    let bound = constants.bound(p, s, m);
                    report.samples += 1;
                    if !(v <= bound * (1.0 + 1e-12)) {
                        report.violations += 1;
                    }
                    let ratio = if bound > 0.0 {
                        v / bound
                    } else if v > 0.0 {
                        f64::INFINITY
                    } else {
                        0.0
                    };
                    report.max_ratio = report.max_ratio.max(ratio);
                    let fit = v / unit.bound(p, s, m);
                    report.fitted_constant = report.fitted_constant.max(fit);
                    s_ratios[i] = s_ratios[i].max(fit);
                    xi_ratios[j] = xi_ratios[j].max(fit);
                }
            }
        }
    }
    // Order the s-ratios by |s| so growth in either direction is seen.
    let mut by_abs: Vec<(f64, f64)> = sampling.s_values.iter().map(|s| s.abs()).zip(s_ratios).collect();
    by_abs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (s, r) in by_abs {
        match merged.last_mut() {
            Some(last) if last.0 == s => last.1 = last.1.max(r),
            _ => merged.push((s, r)),
        }
    }
    let s_tail: Vec<f64> = merged.into_iter().map(|(_, r)| r).collect();
    report.diverging = tail_diverges(&s_tail) || tail_diverges(&xi_ratios);
    report
}

/// Splits a simplex with `corners` vertices (2 or 3) along the zero set of the
/// affine function with nodal values `level` and calls `visit` with each piece
/// as barycentric corners plus its fraction of the simplex measure.
fn for_each_piece(corners: usize, level: &[f64; 3], mut visit: impl FnMut(&[[f64; 3]], f64)) {
    let mut simplex: Vec<[f64; 3]> = Vec::with_capacity(3);
    for k in 0..corners {
        let mut b = [0.0; 3];
        b[k] = 1.0;
        simplex.push(b);
    }
    let lv = &level[..corners];
    if lv.iter().all(|&d| d <= 0.0) || lv.iter().all(|&d| d >= 0.0) {
        visit(&simplex, 1.0);
        return;
    }
    for side in [-1.0, 1.0] {
        // Clip the closed simplex to {side * level >= 0}.
        let mut poly: Vec<[f64; 3]> = Vec::new();
        let edges = if corners == 2 { 1 } else { 3 };
        for k in 0..edges {
            let (a, b) = (k, (k + 1) % corners);
            let (da, db) = (side * level[a], side * level[b]);
            if da >= 0.0 {
                poly.push(simplex[a]);
            }
            if da * db < 0.0 {
                let t = da / (da - db);
                let mut c = [0.0; 3];
                for i in 0..3 {
                    c[i] = simplex[a][i] + t * (simplex[b][i] - simplex[a][i]);
                }
                poly.push(c);
            }
            if corners == 2 && db >= 0.0 {
                poly.push(simplex[b]);
            }
        }
        if corners == 2 {
            if poly.len() == 2 {
                let fraction = (poly[1][1] - poly[0][1]).abs();
                visit(&poly, fraction);
            }
            continue;
        }
        for i in 1..poly.len().saturating_sub(1) {
            let tri = [poly[0], poly[i], poly[i + 1]];
            let fraction = det3(&tri).abs();
            if fraction > 0.0 {
                visit(&tri, fraction);
            }
        }
    }
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

#[derive(Debug, Clone, PartialEq)]
pub struct MoserReport {
    pub h: f64,
    pub kappa: f64,
    /// `∫|∇u|^p u_h^{κp}`, `κp∫|∇u|^{p-2}∇u·∇u_h u_h^{κp-1} u`, and the two `μ`-weighted analogues.
    pub lhs_terms: [f64; 4],
    /// `∫ g(x, u, ∇u) u u_h^{κp}`.
    pub rhs: f64,
    pub gap: f64,
}

impl MoserReport {
    pub fn lhs(&self) -> f64 {
        self.lhs_terms.iter().sum()
    }

    pub fn mu_terms_nonnegative(&self, slack: f64) -> bool {
        self.lhs_terms[2] >= -slack && self.lhs_terms[3] >= -slack
    }

    pub fn to_summary(&self) -> String {
        let t = &self.lhs_terms;
        format!(
            "moser_h = {}\nmoser_kappa = {}\nmoser_lhs = {} {} {} {}\nmoser_rhs = {}\nmoser_gap = {:e}\n",
            self.h, self.kappa, t[0], t[1], t[2], t[3], self.rhs, self.gap
        )
    }
}

/// Tests the equation with `v = u u_h^{κp}`, `u_h = min(u, h)` evaluated at
/// quadrature points, and reports each integral and the identity gap.
/// Elements crossed by the level `u = h` are split along it first so the kink
/// of `u_h` does not pollute the gap with quadrature error.
pub fn moser_identity_check(
    problem: &Problem,
    u: &FemFunction,
    g: &dyn Fn(&Point, f64, &Point) -> f64,
    h: f64,
    kappa: f64,
) -> Result<MoserReport> {
    if !(h > 0.0 && kappa > 0.0) {
        return Err(invalid(format!("need h > 0 and kappa > 0, got h = {h}, kappa = {kappa}")));
    }
    if u.min_value() < -1e-10 {
        return Err(invalid(format!("u must be nonnegative, min nodal value {}", u.min_value())));
    }
    let (p, q) = (problem.p(), problem.q());
    let kp = kappa * p;
    let mesh = problem.mesh();
    let quad = problem.quadrature();
    let scale = 1.0 / quad.reference_measure();
    let mut lhs = [0.0; 4];
    let mut rhs = 0.0;
    for e in 0..mesh.num_elements() {
        let nodes = mesh.element(e);
        let mut level = [0.0; 3];
        for (k, &v) in nodes.iter().enumerate() {
            level[k] = u.values()[v] - h;
        }
        let grad = u.element_gradient(e);
        let gn = norm(&grad);
        let mu = problem.mu_mean(e);
        let (gp, gq) = (gn.powf(p), gn.powf(q));
        let jac = mesh.geometry(e).measure * scale;
        for_each_piece(nodes.len(), &level, |piece, fraction| {
            for (b, w) in quad.points().iter().zip(quad.weights()) {
                let mut bary = [0.0; 3];
                for (corner, &bk) in piece.iter().zip(b) {
                    for i in 0..3 {
                        bary[i] += bk * corner[i];
                    }
                }
                let weight = w * jac * fraction;
                let s = u.value_at(e, &bary).max(0.0);
                let x = mesh.map_point(e, &bary);
                let uh = s.min(h);
                let wgt = uh.powf(kp);
                // Where u < h, ∇u_h = ∇u and u_h^{κp-1} u = u^{κp}; elsewhere ∇u_h = 0.
                let active = if s < h { kp * wgt } else { 0.0 };
                lhs[0] += weight * gp * wgt;
                lhs[1] += weight * gp * active;
                lhs[2] += weight * mu * gq * wgt;
                lhs[3] += weight * mu * gq * active;
                rhs += weight * g(&x, s, &grad) * s * wgt;
            }
        });
    }
    let gap = (lhs.iter().sum::<f64>() - rhs).abs();
    Ok(MoserReport {
        h,
        kappa,
        lhs_terms: lhs,
        rhs,
        gap,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupNormReport {
    pub sup: f64,
    /// `sup <= bar + 1e-6 bar`; `None` without a bar.
    pub within_bar: Option<bool>,
}

pub fn sup_norm_report(u: &FemFunction, bar: Option<f64>) -> SupNormReport {
    let sup = u.sup_norm();
    SupNormReport {
        sup,
        within_bar: bar.map(|b| {
            let b = b.abs();
            sup <= b + 1e-6 * b
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Constant;
    use crate::mesh::{build_mesh, Domain};
    use crate::orlicz::Exponents;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn problem(n: usize, p: f64, q: f64, mu: f64) -> Problem {
        let mesh = Arc::new(build_mesh(Domain::unit_interval(), n).unwrap());
        Problem::new(mesh, Exponents::new(p, q, 2).unwrap(), Arc::new(Constant(mu))).unwrap()
    }

    #[test]
    fn zero_residual() {
        let pr = problem(8, 2.0, 3.0, 1.0);
        let r = weak_residual(&pr, &FemFunction::zeros(pr.mesh().clone()), &|_, _| 0.0);
        assert_eq!(r.euclidean, 0.0);
        assert_eq!(r.max_abs, 0.0);
    }

    #[test]
    fn growth_constants_validate() {
        assert!(GrowthConstants::new(1.0, 1.0, 1.0, 3.5, 2.0, 3.0, 1).is_ok());
        assert!(GrowthConstants::new(1.0, 1.0, 1.0, 3.0, 2.0, 3.0, 1).is_err());
        assert!(GrowthConstants::new(-1.0, 1.0, 1.0, 3.5, 2.0, 3.0, 1).is_err());
        // p* = 6 in dimension 3 for p = 2.
        assert!(GrowthConstants::new(1.0, 1.0, 1.0, 7.0, 2.0, 3.0, 3).is_err());
    }

    #[test]
    fn growth_check_examples() {
        let sampling = HgSampling::new(vec![[0.2, 0.0], [0.7, 0.0]]);
        let zero = GrowthConstants::new(0.0, 0.0, 0.0, 4.0, 2.0, 3.0, 1).unwrap();
        assert!(check_hg(&|_, _, _| 0.0, &zero, 2.0, &sampling).passes());

        let (lambda, a, r) = (5.0, 2.0, 4.0);
        let g = move |_: &Point, s: f64, _: &Point| lambda * s - a * s.abs().powf(r - 2.0) * s;
        let c = GrowthConstants::new(0.0, lambda + a, lambda, r, 2.0, 3.0, 1).unwrap();
        let rep = check_hg(&g, &c, 2.0, &sampling);
        assert!(rep.passes(), "{rep:?}");
        assert!(!rep.diverging);

        let exp = |_: &Point, s: f64, _: &Point| s.abs().exp();
        let big = GrowthConstants::new(1e3, 1e3, 1e3, r, 2.0, 3.0, 1).unwrap();
        let rep = check_hg(&exp, &big, 2.0, &sampling);
        assert!(!rep.passes());
        assert!(rep.diverging);
    }

    #[test]
    fn moser_small_kappa_matches_residual_pairing() {
        let pr = problem(64, 2.0, 3.0, 0.5);
        let u = crate::function::interpolate(pr.mesh(), |x: &Point| (PI * x[0]).sin());
        let g = |_: &Point, s: f64, _: &Point| 3.0 * s;
        let rep = moser_identity_check(&pr, &u, &g, 10.0, 1e-8).unwrap();
        let r = &pr.apply_a(&u) - &pr.reaction_vector(&u, &|_, s| 3.0 * s);
        let pairing = r.pair(&u.dofs());
        let signed = rep.lhs() - rep.rhs;
        assert!((signed - pairing).abs() < 1e-6, "{signed} {pairing}");
        assert!(rep.mu_terms_nonnegative(1e-12));
    }

    #[test]
    fn moser_rejects_negative_input() {
        let pr = problem(8, 2.0, 3.0, 0.0);
        let u = FemFunction::zeros(pr.mesh().clone()).map(|_| -1.0).with_zero_boundary();
        assert!(moser_identity_check(&pr, &u, &|_, _, _| 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn sup_norm_examples() {
        let pr = problem(16, 2.0, 3.0, 0.0);
        let z = FemFunction::zeros(pr.mesh().clone());
        assert_eq!(sup_norm_report(&z, None).sup, 0.0);
        let u = crate::function::interpolate(pr.mesh(), |x: &Point| (PI * x[0]).sin());
        let rep = sup_norm_report(&u, Some(1.0));
        assert!(rep.sup <= 1.0);
        assert_eq!(rep.within_bar, Some(true));
    }
}
