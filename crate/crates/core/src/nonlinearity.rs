//! Reaction terms `f(x, s)` with their primitives `F(x, s) = ∫_0^s f(x, t) dt`,
//! a registry of the built-in families, and a sampling check of the growth
//! hypotheses (bounded on bounded sets, superlinear at infinity, sublinear
//! at the origin).

use std::fmt;
use std::sync::Arc;

use crate::eigen::signed_pow;
use crate::error::{invalid, Result};
use crate::field::{Constant, Field};
use crate::mesh::Point;
use crate::orlicz::Exponents;
use crate::quadrature::integrate_scalar;
use crate::registry::{Params, Registry};

pub trait Nonlinearity: Send + Sync {
    fn name(&self) -> String;

    fn value(&self, x: &Point, s: f64) -> f64;

    /// `∫_0^s f(x, t) dt`; numerical unless overridden.
    fn primitive(&self, x: &Point, s: f64) -> f64 {
        integrate_scalar(|t| self.value(x, t), 0.0, s, &self.breakpoints())
    }

    /// Values of `s` where `f` is not smooth.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

impl fmt::Debug for dyn Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// `c |s|^{r-2} s`.
#[derive(Debug, Clone, Copy)]
pub struct Power {
    pub coefficient: f64,
    pub r: f64,
}

impl Nonlinearity for Power {
    fn name(&self) -> String {
        format!("power(c = {}, r = {})", self.coefficient, self.r)
    }

    fn value(&self, _: &Point, s: f64) -> f64 {
        self.coefficient * signed_pow(s, self.r - 1.0)
    }

    fn primitive(&self, _: &Point, s: f64) -> f64 {
        self.coefficient * s.abs().powf(self.r) / self.r
    }
}

/// `a(x) |s|^{r-2} s`.
#[derive(Clone)]
pub struct F1 {
    pub a: Arc<dyn Field>,
    pub r: f64,
}

impl Nonlinearity for F1 {
    fn name(&self) -> String {
        format!("f1(a = {}, r = {})", self.a.describe(), self.r)
    }

    fn value(&self, x: &Point, s: f64) -> f64 {
        self.a.value(x) * signed_pow(s, self.r - 1.0)
    }

    fn primitive(&self, x: &Point, s: f64) -> f64 {
        self.a.value(x) * s.abs().powf(self.r) / self.r
    }
}

/// `a(x) |s|^{q-2} s ln(1 + |s|)`; the primitive is computed numerically.
#[derive(Clone)]
pub struct F2 {
    pub a: Arc<dyn Field>,
    pub q: f64,
}

impl Nonlinearity for F2 {
    fn name(&self) -> String {
        format!("f2(a = {}, q = {})", self.a.describe(), self.q)
    }

    fn value(&self, x: &Point, s: f64) -> f64 {
        self.a.value(x) * signed_pow(s, self.q - 1.0) * s.abs().ln_1p()
    }

    fn primitive(&self, x: &Point, s: f64) -> f64 {
        // even in s, so integrate on [0, |s|]
        let q = self.q;
        self.a.value(x) * integrate_scalar(|t| t.powf(q - 1.0) * t.ln_1p(), 0.0, s.abs(), &[])
    }
}

/// The three-branch example with exponential growth in both directions and
/// an `x`-dependent right branch.
#[derive(Debug, Clone, Copy)]
pub struct F3 {
    pub p: f64,
    pub q: f64,
}

impl Nonlinearity for F3 {
    fn name(&self) -> String {
        format!("f3(p = {}, q = {})", self.p, self.q)
    }

    fn value(&self, x: &Point, s: f64) -> f64 {
        if s < -1.0 {
            signed_pow(s, self.q - 1.0) * (-s - 1.0).exp()
        } else if s <= 1.0 {
            0.5 * s.abs().powf(self.p) * ((s - 1.0) * (s + 1.0).cos() + s + 1.0)
        } else {
            let r = x[0].hypot(x[1]);
            (1.0 + (s - 1.0) * r) * s.powf(self.q - 1.0) * (s - 1.0).exp()
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        vec![-1.0, 0.0, 1.0]
    }
}

type ScalarFn = Box<dyn Fn(&Point, f64) -> f64 + Send + Sync>;

/// A user-supplied reaction; without a primitive, `F` is integrated numerically.
pub struct CustomNonlinearity {
    name: String,
    f: ScalarFn,
    big_f: Option<ScalarFn>,
}

impl CustomNonlinearity {
    pub fn new(name: &str, f: impl Fn(&Point, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.to_string(),
            f: Box::new(f),
            big_f: None,
        }
    }

    pub fn with_primitive(mut self, big_f: impl Fn(&Point, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.big_f = Some(Box::new(big_f));
        self
    }
}

impl Nonlinearity for CustomNonlinearity {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn value(&self, x: &Point, s: f64) -> f64 {
        (self.f)(x, s)
    }

    fn primitive(&self, x: &Point, s: f64) -> f64 {
        match &self.big_f {
            Some(big_f) => big_f(x, s),
            None => integrate_scalar(|t| (self.f)(x, t), 0.0, s, &[]),
        }
    }
}

pub type NonlinearityRegistry = Registry<dyn Nonlinearity, Exponents>;

fn exponent_param(params: &Params, key: &str, default: f64) -> Result<f64> {
    let v = params.get_or(key, default);
    if !(v > 1.0) || !v.is_finite() {
        return Err(invalid(format!("parameter `{key}` must exceed 1, got {v}")));
    }
    Ok(v)
}

/// Registry with `power`, `f1`, `f2` and `f3`.
pub fn nonlinearity_registry() -> NonlinearityRegistry {
    let mut reg = NonlinearityRegistry::new("nonlinearity");
    reg.register("power", "c |s|^{r-2} s", &["coefficient", "r"], |p, _| {
        let r = exponent_param(p, "r", p.require("r")?)?;
        Ok(Box::new(Power {
            coefficient: p.get_or("coefficient", 1.0),
            r,
        }))
    })
    .register("f1", "a |s|^{r-2} s", &["a", "r"], |p, _| {
        let r = exponent_param(p, "r", p.require("r")?)?;
        Ok(Box::new(F1 {
            a: Arc::new(Constant(p.get_or("a", 1.0))),
            r,
        }))
    })
    .register("f2", "a |s|^{q-2} s ln(1 + |s|)", &["a", "q"], |p, exps| {
        Ok(Box::new(F2 {
            a: Arc::new(Constant(p.get_or("a", 1.0))),
            q: exponent_param(p, "q", exps.q)?,
        }))
    })
    .register("f3", "three-branch exponential example", &["p", "q"], |p, exps| {
        Ok(Box::new(F3 {
            p: exponent_param(p, "p", exps.p)?,
            q: exponent_param(p, "q", exps.q)?,
        }))
    });
    reg
}

pub fn build_nonlinearity(name: &str, params: &Params, exps: &Exponents) -> Result<Arc<dyn Nonlinearity>> {
    nonlinearity_registry().build(name, params, exps).map(Arc::from)
}

/// Sampling plan for [`check_hf`].
#[derive(Debug, Clone)]
pub struct HfSampling {
    pub points: Vec<Point>,
    /// Half-width of the `s` range for the boundedness check.
    pub bound_range: f64,
    pub bound_samples: usize,
    /// Levels `|s|` for the superlinearity ratios, increasing.
    pub large: Vec<f64>,
    /// Levels `|s|` for the origin ratios, decreasing.
    pub small: Vec<f64>,
    /// The superlinear ratio must exceed this at the largest level.
    pub threshold: f64,
}

impl HfSampling {
    pub fn new(points: Vec<Point>) -> Self {
        Self {
            points,
            bound_range: 10.0,
            bound_samples: 201,
            large: vec![1e1, 1e2, 1e3, 1e4],
            small: vec![1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6],
            threshold: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HfReport {
    pub bounded: bool,
    pub max_abs_on_range: f64,
    pub superlinear: bool,
    /// `(|s|, min over x and sign of f(x,s) s / |s|^q)`.
    pub superlinear_ratios: Vec<(f64, f64)>,
    pub sublinear_at_origin: bool,
    /// `(|s|, max over x and sign of |f(x,s) / (|s|^{p-2} s)|)`.
    pub origin_ratios: Vec<(f64, f64)>,
}

impl HfReport {
    pub fn all_pass(&self) -> bool {
        self.bounded && self.superlinear && self.sublinear_at_origin
    }

    pub fn to_summary(&self) -> String {
        let fmt = |v: &[(f64, f64)]| {
            v.iter()
                .map(|(s, r)| format!("{s:e}:{r:e}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        format!(
            "hf_bounded = {}\nhf_max_abs_on_range = {}\nhf_superlinear = {}\nhf_superlinear_ratios = {}\nhf_sublinear_at_origin = {}\nhf_origin_ratios = {}\n",
            self.bounded,
            self.max_abs_on_range,
            self.superlinear,
            fmt(&self.superlinear_ratios),
            self.sublinear_at_origin,
            fmt(&self.origin_ratios)
        )
    }
}

/// Report-only sampling of the growth hypotheses; limits are not certified.
pub fn check_hf(f: &dyn Nonlinearity, p: f64, q: f64, sampling: &HfSampling) -> HfReport {
    let xs: Vec<Point> = if sampling.points.is_empty() {
        vec![[0.0, 0.0]]
    } else {
        sampling.points.clone()
    };
    let mut max_abs = 0.0f64;
    let n = sampling.bound_samples.max(2);
    for k in 0..n {
        let s = -sampling.bound_range + 2.0 * sampling.bound_range * k as f64 / (n - 1) as f64;
        for x in &xs {
            max_abs = max_abs.max(f.value(x, s).abs());
        }
    }
    let bounded = max_abs.is_finite();

    let superlinear_ratios: Vec<(f64, f64)> = sampling
        .large
        .iter()
        .map(|&s| {
            let worst = xs
                .iter()
                .flat_map(|x| [s, -s].map(|t| f.value(x, t) * t / t.abs().powf(q)))
                .fold(f64::INFINITY, |m, v| if v.is_nan() { f64::NEG_INFINITY } else { m.min(v) });
            (s, worst)
        })
        .collect();
    // overflow to +inf counts as growth
    let increasing = superlinear_ratios
        .windows(2)
        .all(|w| w[1].1 > w[0].1 || w[1].1 == f64::INFINITY);
    let superlinear = increasing
        && superlinear_ratios
            .last()
            .is_some_and(|r| r.1 > sampling.threshold);

    let origin_ratios: Vec<(f64, f64)> = sampling
        .small
        .iter()
        .map(|&s| {
            let worst = xs
                .iter()
                .flat_map(|x| [s, -s].map(|t| (f.value(x, t) / signed_pow(t, p - 1.0)).abs()))
                .fold(0.0f64, f64::max);
            (s, worst)
        })
        .collect();
    let decreasing = origin_ratios.windows(2).all(|w| w[1].1 < w[0].1);
    let sublinear_at_origin = decreasing
        && match (origin_ratios.first(), origin_ratios.last()) {
            (Some(a), Some(b)) => b.1 <= 0.5 * a.1,
            _ => false,
        };

    HfReport {
        bounded,
        max_abs_on_range: max_abs,
        superlinear,
        superlinear_ratios,
        sublinear_at_origin,
        origin_ratios,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exps() -> Exponents {
        Exponents::new(2.0, 3.0, 2).unwrap()
    }

    fn fd_check(f: &dyn Nonlinearity, x: &Point, s: f64) {
        let h = 1e-5;
        let fd = (f.primitive(x, s + h) - f.primitive(x, s - h)) / (2.0 * h);
        let v = f.value(x, s);
        assert!((fd - v).abs() <= 1e-6 * (1.0 + v.abs()), "{}: s={s} fd={fd} f={v}", f.name());
    }

    #[test]
    fn primitives_vanish_at_zero_and_match_derivative() {
        let e = exps();
        let reg = nonlinearity_registry();
        let builtins: Vec<Arc<dyn Nonlinearity>> = vec![
            Arc::from(reg.build("power", &Params::new().with("r", 4.0).with("coefficient", 2.0), &e).unwrap()),
            Arc::from(reg.build("f1", &Params::new().with("r", 3.5).with("a", 0.7), &e).unwrap()),
            Arc::from(reg.build("f2", &Params::new(), &e).unwrap()),
            Arc::from(reg.build("f3", &Params::new(), &e).unwrap()),
        ];
        for f in &builtins {
            for x in [[0.0, 0.0], [0.3, 0.4]] {
                assert_eq!(f.primitive(&x, 0.0), 0.0);
                for s in [-2.3, -1.01, -0.4, 0.05, 0.7, 0.98, 1.9] {
                    fd_check(f.as_ref(), &x, s);
                }
            }
        }
    }

    #[test]
    fn f3_is_continuous_at_branch_points() {
        let f = F3 { p: 1.5, q: 2.5 };
        let x = [0.3, 0.1];
        for s in [-1.0, 1.0] {
            let l = f.value(&x, s - 1e-12);
            let r = f.value(&x, s + 1e-12);
            assert!((l - r).abs() < 1e-9, "s={s}: {l} vs {r}");
        }
        assert_eq!(f.value(&x, 1.0), 1.0);
        assert_eq!(f.value(&x, -1.0), -1.0);
    }

    #[test]
    fn custom_primitive_by_quadrature() {
        let f = CustomNonlinearity::new("cubic", |_, s| s * s * s);
        assert!((f.primitive(&[0.0, 0.0], 2.0) - 4.0).abs() < 1e-12);
        let g = CustomNonlinearity::new("cubic", |_, s| s * s * s).with_primitive(|_, s| s.powi(4) / 4.0);
        assert_eq!(g.primitive(&[0.0, 0.0], 2.0), 4.0);
    }

    #[test]
    fn hf_examples() {
        let sampling = HfSampling::new(vec![[0.0, 0.0], [0.5, 0.5], [1.0, 0.2]]);
        let f1 = F1 {
            a: Arc::new(Constant(1.0)),
            r: 4.0,
        };
        assert!(check_hf(&f1, 2.0, 3.0, &sampling).all_pass());

        let p = 1.7;
        let homogeneous = CustomNonlinearity::new("p-1 power", move |_, s| signed_pow(s, p - 1.0));
        let rep = check_hf(&homogeneous, p, 3.0, &sampling);
        assert!(!rep.sublinear_at_origin);
        assert!(rep.origin_ratios.iter().all(|r| (r.1 - 1.0).abs() < 1e-12));

        let linear = CustomNonlinearity::new("linear", |_, s| s);
        let rep = check_hf(&linear, 2.0, 3.0, &sampling);
        assert!(!rep.superlinear);
        assert!(rep.superlinear_ratios.windows(2).all(|w| w[1].1 < w[0].1));
    }

    #[test]
    fn example_families_pass_hf() {
        let sampling = HfSampling::new(vec![[0.1, 0.2], [0.9, 0.9]]);
        let e = Exponents::new(1.5, 2.5, 3).unwrap();
        for (name, params) in [
            ("f1", Params::new().with("r", 3.0)),
            ("f2", Params::new()),
            ("f3", Params::new()),
        ] {
            let f = build_nonlinearity(name, &params, &e).unwrap();
            let rep = check_hf(f.as_ref(), e.p, e.q, &sampling);
            assert!(rep.all_pass(), "{name}: {rep:?}");
        }
    }
}
