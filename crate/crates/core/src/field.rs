//! Scalar fields x -> R used for the weight μ and for coefficients of the
//! built-in reactions, with a registry of named builtins.

use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::mesh::Point;
use crate::registry::{Params, Registry};

pub trait Field: Send + Sync {
    fn value(&self, x: &Point) -> f64;

    fn describe(&self) -> String {
        "custom".to_string()
    }
}

impl fmt::Debug for dyn Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

/// Adapts a closure into a [`Field`].
pub struct FnField<F>(pub F);

impl<F: Fn(&Point) -> f64 + Send + Sync> Field for FnField<F> {
    fn value(&self, x: &Point) -> f64 {
        (self.0)(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constant(pub f64);

impl Field for Constant {
    fn value(&self, _: &Point) -> f64 {
        self.0
    }

    fn describe(&self) -> String {
        format!("constant({})", self.0)
    }
}

/// `a + b * x1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine {
    pub a: f64,
    pub b: f64,
}

impl Field for Affine {
    fn value(&self, x: &Point) -> f64 {
        self.a + self.b * x[0]
    }

    fn describe(&self) -> String {
        format!("affine({} + {} x1)", self.a, self.b)
    }
}

/// `scale * 4 x1 (1 - x1)`, times `4 x2 (1 - x2)` when `two_d`. Vanishes on the
/// boundary of the unit cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub scale: f64,
    pub two_d: bool,
}

impl Field for Bump {
    fn value(&self, x: &Point) -> f64 {
        let b = 4.0 * x[0] * (1.0 - x[0]);
        let b = if self.two_d { b * 4.0 * x[1] * (1.0 - x[1]) } else { b };
        self.scale * b
    }

    fn describe(&self) -> String {
        format!("bump({})", self.scale)
    }
}

/// `scale * |x - center|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Radial {
    pub scale: f64,
    pub center: Point,
}

impl Field for Radial {
    fn value(&self, x: &Point) -> f64 {
        self.scale * crate::mesh::distance(x, &self.center)
    }

    fn describe(&self) -> String {
        format!("radial({})", self.scale)
    }
}

/// Context for building fields: the spatial dimension.
#[derive(Debug, Clone, Copy)]
pub struct FieldContext {
    pub dim: usize,
}

pub type FieldRegistry = Registry<dyn Field, FieldContext>;

/// Registry with `constant`, `affine`, `bump` and `radial`.
pub fn field_registry() -> FieldRegistry {
    let mut reg = FieldRegistry::new("weight field");
    reg.register("constant", "c", &["value"], |p, _| {
        Ok(Box::new(Constant(p.require("value")?)))
    })
    .register("affine", "a + b*x1", &["a", "b"], |p, _| {
        Ok(Box::new(Affine {
            a: p.get_or("a", 0.0),
            b: p.get_or("b", 0.0),
        }))
    })
    .register("bump", "scale * 4x(1-x) [* 4y(1-y)]", &["scale"], |p, ctx| {
        Ok(Box::new(Bump {
            scale: p.get_or("scale", 1.0),
            two_d: ctx.dim == 2,
        }))
    })
    .register("radial", "scale * |x - c|", &["scale", "cx", "cy"], |p, _| {
        Ok(Box::new(Radial {
            scale: p.get_or("scale", 1.0),
            center: [p.get_or("cx", 0.0), p.get_or("cy", 0.0)],
        }))
    });
    reg
}

/// Builds a field by name from the default registry.
pub fn build_field(name: &str, params: &Params, dim: usize) -> Result<Arc<dyn Field>> {
    if dim == 0 {
        return Err(invalid("dimension must be positive"));
    }
    field_registry()
        .build(name, params, &FieldContext { dim })
        .map(Arc::from)
}
