//! Uniform simplicial meshes of intervals and axis-aligned rectangles.

use crate::error::{invalid, Result};

/// A point in the plane. One-dimensional meshes keep the second coordinate at zero.
pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Interval { a: f64, b: f64 },
    Rectangle { x0: f64, x1: f64, y0: f64, y1: f64 },
}

impl Domain {
    pub fn unit_interval() -> Self {
        Domain::Interval { a: 0.0, b: 1.0 }
    }

    pub fn unit_square() -> Self {
        Domain::Rectangle {
            x0: 0.0,
            x1: 1.0,
            y0: 0.0,
            y1: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Interval { .. } => 1,
            Domain::Rectangle { .. } => 2,
        }
    }

    pub fn measure(&self) -> f64 {
        match *self {
            Domain::Interval { a, b } => b - a,
            Domain::Rectangle { x0, x1, y0, y1 } => (x1 - x0) * (y1 - y0),
        }
    }
}

/// Per-element affine map data: measure and the constant gradients of the
/// barycentric basis functions.
#[derive(Debug, Clone, Copy)]
pub struct ElementGeometry {
    pub measure: f64,
    pub basis_gradients: [Point; 3],
}

#[derive(Debug, Clone)]
pub struct Mesh {
    domain: Domain,
    resolution: usize,
    vertices: Vec<Point>,
    // unused third slot is `usize::MAX` for segments
    elements: Vec<[usize; 3]>,
    boundary: Vec<bool>,
    geometry: Vec<ElementGeometry>,
    dof_of_vertex: Vec<Option<usize>>,
    interior: Vec<usize>,
}

/// Builds a uniform mesh with `resolution` cells per axis. Rectangular cells
/// are split along the diagonal from the lower-left to the upper-right corner,
/// both triangles counterclockwise.
pub fn build_mesh(domain: Domain, resolution: usize) -> Result<Mesh> {
    if resolution == 0 {
        return Err(invalid("mesh resolution must be at least 1"));
    }
    let (vertices, elements, boundary) = match domain {
        Domain::Interval { a, b } => {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(invalid(format!("degenerate interval [{a}, {b}]")));
            }
            let n = resolution;
            let h = (b - a) / n as f64;
            let vertices: Vec<Point> = (0..=n)
                .map(|i| {
                    let x = if i == n { b } else { a + i as f64 * h };
                    [x, 0.0]
                })
                .collect();
            let elements = (0..n).map(|i| [i, i + 1, usize::MAX]).collect();
            let boundary = (0..=n).map(|i| i == 0 || i == n).collect();
            (vertices, elements, boundary)
        }
        Domain::Rectangle { x0, x1, y0, y1 } => {
            if !(x0.is_finite() && x1.is_finite() && y0.is_finite() && y1.is_finite())
                || x0 >= x1
                || y0 >= y1
            {
                return Err(invalid(format!(
                    "degenerate rectangle [{x0}, {x1}] x [{y0}, {y1}]"
                )));
            }
            let n = resolution;
            let hx = (x1 - x0) / n as f64;
            let hy = (y1 - y0) / n as f64;
            let coord = |lo: f64, hi: f64, step: f64, i: usize| {
                if i == n {
                    hi
                } else {
                    lo + i as f64 * step
                }
            };
            let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
            let mut boundary = Vec::with_capacity((n + 1) * (n + 1));
            for j in 0..=n {
                for i in 0..=n {
                    vertices.push([coord(x0, x1, hx, i), coord(y0, y1, hy, j)]);
                    boundary.push(i == 0 || i == n || j == 0 || j == n);
                }
            }
            let id = |i: usize, j: usize| j * (n + 1) + i;
            let mut elements = Vec::with_capacity(2 * n * n);
            for j in 0..n {
                for i in 0..n {
                    elements.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                    elements.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
                }
            }
            (vertices, elements, boundary)
        }
    };
    Mesh::from_parts(domain, resolution, vertices, elements, boundary)
}

impl Mesh {
    fn from_parts(
        domain: Domain,
        resolution: usize,
        vertices: Vec<Point>,
        elements: Vec<[usize; 3]>,
        boundary: Vec<bool>,
    ) -> Result<Self> {
        let dim = domain.dim();
        let mut geometry = Vec::with_capacity(elements.len());
        for (e, nodes) in elements.iter().enumerate() {
            let nodes = &nodes[..dim + 1];
            if nodes.iter().any(|&v| v >= vertices.len()) {
                return Err(invalid(format!("element {e} references a missing vertex")));
            }
            let g = element_geometry(dim, nodes.iter().map(|&v| vertices[v]));
            if !(g.measure > 0.0) {
                return Err(invalid(format!("element {e} has non-positive measure")));
            }
            geometry.push(g);
        }
        let mut dof_of_vertex = vec![None; vertices.len()];
        let mut interior = Vec::new();
        for (v, &on_boundary) in boundary.iter().enumerate() {
            if !on_boundary {
                dof_of_vertex[v] = Some(interior.len());
                interior.push(v);
            }
        }
        Ok(Self {
            domain,
            resolution,
            vertices,
            elements,
            boundary,
            geometry,
            dof_of_vertex,
            interior,
        })
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    /// Vertex indices of element `e` (two for segments, three for triangles).
    pub fn element(&self, e: usize) -> &[usize] {
        &self.elements[e][..self.dim() + 1]
    }

    pub fn geometry(&self, e: usize) -> &ElementGeometry {
        &self.geometry[e]
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.boundary
    }

    /// Vertices carrying a degree of freedom, in degree-of-freedom order.
    pub fn interior_vertices(&self) -> &[usize] {
        &self.interior
    }

    pub fn num_dofs(&self) -> usize {
        self.interior.len()
    }

    pub fn dof(&self, vertex: usize) -> Option<usize> {
        self.dof_of_vertex[vertex]
    }

    /// Sum of element measures.
    pub fn measure(&self) -> f64 {
        self.geometry.iter().map(|g| g.measure).sum()
    }

    /// Largest element edge length.
    pub fn mesh_size(&self) -> f64 {
        self.edges()
            .map(|(a, b)| distance(&self.vertices[a], &self.vertices[b]))
            .fold(0.0, f64::max)
    }

    /// Element edges as vertex pairs (shared edges appear once per element).
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.num_elements()).flat_map(move |e| {
            let nodes = self.element(e);
            let k = nodes.len();
            (0..k).flat_map(move |i| ((i + 1)..k).map(move |j| (nodes[i], nodes[j])))
        })
    }

    /// Bandwidth of the interior coupling pattern in degree-of-freedom numbering.
    pub fn dof_bandwidth(&self) -> usize {
        self.edges()
            .filter_map(|(a, b)| Some(self.dof(a)?.abs_diff(self.dof(b)?)))
            .max()
            .unwrap_or(0)
    }

    /// Maps barycentric coordinates on element `e` to physical coordinates.
    pub fn map_point(&self, e: usize, bary: &[f64; 3]) -> Point {
        let mut x = [0.0; 2];
        for (k, &v) in self.element(e).iter().enumerate() {
            x[0] += bary[k] * self.vertices[v][0];
            x[1] += bary[k] * self.vertices[v][1];
        }
        x
    }
}

pub(crate) fn distance(a: &Point, b: &Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn element_geometry(dim: usize, mut pts: impl Iterator<Item = Point>) -> ElementGeometry {
    match dim {
        1 => {
            let a = pts.next().unwrap()[0];
            let b = pts.next().unwrap()[0];
            let len = b - a;
            ElementGeometry {
                measure: len.abs(),
                basis_gradients: [[-1.0 / len, 0.0], [1.0 / len, 0.0], [0.0, 0.0]],
            }
        }
        _ => {
            let p0 = pts.next().unwrap();
            let p1 = pts.next().unwrap();
            let p2 = pts.next().unwrap();
            let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
            let grad = |a: Point, b: Point| [(a[1] - b[1]) / det, (b[0] - a[0]) / det];
            ElementGeometry {
                measure: 0.5 * det,
                basis_gradients: [grad(p1, p2), grad(p2, p0), grad(p0, p1)],
            }
        }
    }
}
