//! Element quadrature rules in barycentric form and adaptive scalar quadrature.

// Tabulated nodes and weights are kept at their published digits.
#![allow(clippy::excessive_precision)]

use crate::error::{invalid, Result};

/// A quadrature rule on the reference simplex, stored in barycentric
/// coordinates. Weights sum to the reference measure (1 for the unit segment,
/// 1/2 for the unit triangle).
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    dim: usize,
    points: Vec<[f64; 3]>,
    weights: Vec<f64>,
    degree: usize,
}

impl QuadratureRule {
    /// Gauss-Legendre rule with `n` points (1 to 3) on the unit segment.
    pub fn gauss_segment(n: usize) -> Result<Self> {
        let (xs, ws): (Vec<f64>, Vec<f64>) = match n {
            1 => (vec![0.5], vec![1.0]),
            2 => {
                let d = 0.5 / 3f64.sqrt();
                (vec![0.5 - d, 0.5 + d], vec![0.5, 0.5])
            }
            3 => {
                let d = 0.5 * (0.6f64).sqrt();
                (
                    vec![0.5 - d, 0.5, 0.5 + d],
                    vec![5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0],
                )
            }
            _ => return Err(invalid(format!("no {n}-point Gauss rule available"))),
        };
        Ok(Self {
            dim: 1,
            points: xs.iter().map(|&x| [1.0 - x, x, 0.0]).collect(),
            weights: ws,
            degree: 2 * n - 1,
        })
    }

    /// Symmetric triangle rules of degree 1, 2 or 4.
    pub fn triangle(degree: usize) -> Result<Self> {
        let (points, weights, degree) = match degree {
            1 => (vec![[1.0 / 3.0; 3]], vec![0.5], 1),
            2 => {
                let (a, b) = (2.0 / 3.0, 1.0 / 6.0);
                (vec![[a, b, b], [b, a, b], [b, b, a]], vec![1.0 / 6.0; 3], 2)
            }
            3 | 4 => {
                let a1 = 0.445_948_490_915_964_886_32;
                let w1 = 0.223_381_589_678_011_465_70 / 2.0;
                let a2 = 0.091_576_213_509_770_743_46;
                let w2 = 0.109_951_743_655_321_867_64 / 2.0;
                let orbit = |a: f64| {
                    let b = 1.0 - 2.0 * a;
                    [[a, a, b], [a, b, a], [b, a, a]]
                };
                let mut pts = orbit(a1).to_vec();
                pts.extend(orbit(a2));
                (pts, vec![w1, w1, w1, w2, w2, w2], 4)
            }
            _ => return Err(invalid(format!("no degree-{degree} triangle rule available"))),
        };
        Ok(Self {
            dim: 2,
            points,
            weights,
            degree,
        })
    }

    /// Default rule for `dim`: 3-point Gauss on segments, the 6-point degree-4 rule on triangles.
    pub fn default_for(dim: usize) -> Self {
        match dim {
            1 => Self::gauss_segment(3).unwrap(),
            _ => Self::triangle(4).unwrap(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn reference_measure(&self) -> f64 {
        if self.dim == 1 {
            1.0
        } else {
            0.5
        }
    }
}

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const GAUSS7_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = GK_WEIGHTS[7] * fc;
    let mut gauss = GAUSS7_WEIGHTS[3] * fc;
    for i in 0..7 {
        let dx = h * GK_NODES[i];
        let pair = f(c - dx) + f(c + dx);
        kronrod += GK_WEIGHTS[i] * pair;
        if i % 2 == 1 {
            gauss += GAUSS7_WEIGHTS[i / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: usize) -> f64 {
    let (value, err) = gk15(f, a, b);
    if depth == 0 || err <= tol.max(1e-15 * value.abs()) || !err.is_finite() {
        return value;
    }
    let m = 0.5 * (a + b);
    adaptive(f, a, m, 0.5 * tol, depth - 1) + adaptive(f, m, b, 0.5 * tol, depth - 1)
}

/// Adaptive Gauss-Kronrod quadrature of `f` over `[a, b]` (either orientation),
/// splitting first at the supplied `breaks` lying strictly inside.
pub fn integrate_scalar<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breaks: &[f64]) -> f64 {
    if a == b {
        return 0.0;
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut nodes = vec![lo];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&t| t > lo && t < hi).collect();
    inner.sort_by(f64::total_cmp);
    nodes.extend(inner);
    nodes.push(hi);
    let tol = 1e-14 * (hi - lo).max(1.0);
    let total: f64 = nodes
        .windows(2)
        .map(|w| adaptive(&f, w[0], w[1], tol, 40))
        .sum();
    sign * total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn monomial_on_reference(rule: &QuadratureRule, i: i32, j: i32) -> f64 {
        rule.points()
            .iter()
            .zip(rule.weights())
            .map(|(b, w)| w * b[1].powi(i) * b[2].powi(j))
            .sum()
    }

    fn factorial(n: i32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    #[test]
    fn weights_sum_to_reference_measure() {
        for n in 1..=3 {
            let r = QuadratureRule::gauss_segment(n).unwrap();
            assert!((r.weights().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
        for d in [1, 2, 4] {
            let r = QuadratureRule::triangle(d).unwrap();
            assert!((r.weights().iter().sum::<f64>() - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn segment_rules_exact_on_monomials() {
        for n in 1..=3 {
            let r = QuadratureRule::gauss_segment(n).unwrap();
            for k in 0..=r.degree() as i32 {
                let exact = 1.0 / (k as f64 + 1.0);
                assert!((monomial_on_reference(&r, k, 0) - exact).abs() < 1e-14, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn triangle_rules_exact_on_monomials() {
        // int_T x^i y^j = i! j! / (i + j + 2)!
        for d in [1, 2, 4] {
            let r = QuadratureRule::triangle(d).unwrap();
            for i in 0..=d as i32 {
                for j in 0..=(d as i32 - i) {
                    let exact = factorial(i) * factorial(j) / factorial(i + j + 2);
                    let got = monomial_on_reference(&r, i, j);
                    assert!((got - exact).abs() < 1e-14, "deg={d} i={i} j={j}");
                }
            }
        }
    }

    #[test]
    fn scalar_quadrature() {
        let v = integrate_scalar(|t| t.sin(), 0.0, std::f64::consts::PI, &[]);
        assert!((v - 2.0).abs() < 1e-13);
        let back = integrate_scalar(|t| t * t, 2.0, 0.0, &[]);
        assert!((back + 8.0 / 3.0).abs() < 1e-13);
        let kink = integrate_scalar(|t: f64| t.abs(), -1.0, 2.0, &[0.0]);
        assert!((kink - 2.5).abs() < 1e-13);
        assert_eq!(integrate_scalar(|t| t, 3.0, 3.0, &[]), 0.0);
    }
}
