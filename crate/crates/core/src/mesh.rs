//! Uniform periodic triangulation of the unit square torus.
//!
//! Each of the `n × n` squares is split along its lower-left to upper-right
//! diagonal into a lower triangle `(v00, v10, v11)` and an upper triangle
//! `(v00, v11, v01)`, both counter-clockwise. Local facet `f` of an element
//! is the edge opposite local vertex `f`, traversed counter-clockwise from
//! vertex `f + 1` to vertex `f + 2`.
//!
//! Periodic identification is done on integer lattice indices; vertex
//! coordinates are stored as canonical representatives in `[0, 1)²` and
//! element geometry is kept in an unwrapped frame anchored at local vertex 0.

use crate::error::{Result, TqgError};
use crate::quadrature::LineRule;

/// One side of a facet: an element and the local facet index within it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FacetSide {
    pub element: usize,
    pub local: usize,
}

/// A facet shared by exactly two elements.
#[derive(Clone, Copy, Debug)]
pub struct Facet {
    pub minus: FacetSide,
    pub plus: FacetSide,
    /// Unit normal pointing from the minus element into the plus element.
    pub normal: [f64; 2],
    pub length: f64,
}

/// Affine map from the reference triangle onto an element.
#[derive(Clone, Copy, Debug)]
pub struct ElementGeometry {
    /// Unwrapped coordinate of local vertex 0.
    pub origin: [f64; 2],
    /// Columns are `x1 - x0` and `x2 - x0`.
    pub jacobian: [[f64; 2]; 2],
    pub inv_jacobian: [[f64; 2]; 2],
    pub det: f64,
}

impl ElementGeometry {
    fn from_vertices(x: [[f64; 2]; 3]) -> Self {
        let a = [x[1][0] - x[0][0], x[1][1] - x[0][1]];
        let b = [x[2][0] - x[0][0], x[2][1] - x[0][1]];
        let jacobian = [[a[0], b[0]], [a[1], b[1]]];
        let det = a[0] * b[1] - b[0] * a[1];
        let inv_jacobian = [
            [b[1] / det, -b[0] / det],
            [-a[1] / det, a[0] / det],
        ];
        Self { origin: x[0], jacobian, inv_jacobian, det }
    }

    /// Reference coordinates to physical (unwrapped) coordinates.
    #[inline]
    pub fn map(&self, xi: [f64; 2]) -> [f64; 2] {
        let j = &self.jacobian;
        [
            self.origin[0] + j[0][0] * xi[0] + j[0][1] * xi[1],
            self.origin[1] + j[1][0] * xi[0] + j[1][1] * xi[1],
        ]
    }

    /// Physical (unwrapped) coordinates to reference coordinates.
    #[inline]
    pub fn inverse_map(&self, x: [f64; 2]) -> [f64; 2] {
        let d = [x[0] - self.origin[0], x[1] - self.origin[1]];
        let k = &self.inv_jacobian;
        [k[0][0] * d[0] + k[0][1] * d[1], k[1][0] * d[0] + k[1][1] * d[1]]
    }

    /// Pushes a reference gradient forward: `J^{-T} ∇̂`.
    #[inline]
    pub fn physical_gradient(&self, g: [f64; 2]) -> [f64; 2] {
        let k = &self.inv_jacobian;
        [k[0][0] * g[0] + k[1][0] * g[1], k[0][1] * g[0] + k[1][1] * g[1]]
    }
}

#[derive(Clone, Debug)]
pub struct MeshTopology {
    n: usize,
    vertices: Vec<[f64; 2]>,
    elements: Vec<[usize; 3]>,
    geometry: Vec<ElementGeometry>,
    facets: Vec<Facet>,
    element_facets: Vec<[usize; 3]>,
}

/// Lattice offsets of the lower and upper triangle vertices within a square.
const LOWER: [[usize; 2]; 3] = [[0, 0], [1, 0], [1, 1]];
const UPPER: [[usize; 2]; 3] = [[0, 0], [1, 1], [0, 1]];

/// Reference-triangle endpoints of local facet `f`, in traversal order.
pub fn reference_facet_endpoints(f: usize) -> ([f64; 2], [f64; 2]) {
    const V: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
    (V[(f + 1) % 3], V[(f + 2) % 3])
}

impl MeshTopology {
    /// Builds the periodic mesh with `n` cells per side.
    pub fn periodic(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(TqgError::InvalidParameter("mesh needs at least one cell per side".into()));
        }
        let h = 1.0 / n as f64;
        let vertex = |i: usize, j: usize| (j % n) * n + (i % n);

        let mut vertices = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                vertices.push([i as f64 * h, j as f64 * h]);
            }
        }

        let mut elements = Vec::with_capacity(2 * n * n);
        let mut geometry = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                for pattern in [LOWER, UPPER] {
                    let idx = pattern.map(|[di, dj]| vertex(i + di, j + dj));
                    let coords = pattern.map(|[di, dj]| [(i + di) as f64 * h, (j + dj) as f64 * h]);
                    elements.push(idx);
                    geometry.push(ElementGeometry::from_vertices(coords));
                }
            }
        }

        let lower = |i: usize, j: usize| 2 * ((j % n) * n + (i % n));
        let upper = |i: usize, j: usize| lower(i, j) + 1;
        let s2 = std::f64::consts::FRAC_1_SQRT_2;

        let mut facets = Vec::with_capacity(3 * n * n);
        let mut element_facets = vec![[usize::MAX; 3]; 2 * n * n];
        let mut push = |minus: FacetSide, plus: FacetSide, normal: [f64; 2], length: f64| {
            let id = facets.len();
            element_facets[minus.element][minus.local] = id;
            element_facets[plus.element][plus.local] = id;
            facets.push(Facet { minus, plus, normal, length });
        };
        for j in 0..n {
            for i in 0..n {
                // bottom edge: lower(i,j) facet 2 | upper(i,j-1) facet 0
                push(
                    FacetSide { element: lower(i, j), local: 2 },
                    FacetSide { element: upper(i, j + n - 1), local: 0 },
                    [0.0, -1.0],
                    h,
                );
                // left edge: upper(i,j) facet 1 | lower(i-1,j) facet 0
                push(
                    FacetSide { element: upper(i, j), local: 1 },
                    FacetSide { element: lower(i + n - 1, j), local: 0 },
                    [-1.0, 0.0],
                    h,
                );
                // diagonal: lower(i,j) facet 1 | upper(i,j) facet 2
                push(
                    FacetSide { element: lower(i, j), local: 1 },
                    FacetSide { element: upper(i, j), local: 2 },
                    [-s2, s2],
                    h * std::f64::consts::SQRT_2,
                );
            }
        }

        Ok(Self { n, vertices, elements, geometry, facets, element_facets })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cell_size(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn elements(&self) -> &[[usize; 3]] {
        &self.elements
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn num_facets(&self) -> usize {
        self.facets.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn geometry(&self, element: usize) -> &ElementGeometry {
        &self.geometry[element]
    }

    /// Global facet index of each local facet of `element`.
    pub fn element_facets(&self, element: usize) -> [usize; 3] {
        self.element_facets[element]
    }

    pub fn element_area(&self, element: usize) -> f64 {
        0.5 * self.geometry[element].det
    }

    /// Unwrapped vertex coordinates of `element`.
    pub fn element_coords(&self, element: usize) -> [[f64; 2]; 3] {
        let g = &self.geometry[element];
        [g.map([0.0, 0.0]), g.map([1.0, 0.0]), g.map([0.0, 1.0])]
    }

    /// Periodic lattice lookup: vertex index for integer lattice position `(i, j)`.
    pub fn vertex_at(&self, i: i64, j: i64) -> usize {
        let n = self.n as i64;
        (j.rem_euclid(n) * n + i.rem_euclid(n)) as usize
    }

    /// Normal of `facet` as seen from `element` (one of its two sides).
    pub fn outward_normal(&self, facet: usize, element: usize) -> [f64; 2] {
        let f = &self.facets[facet];
        if f.minus.element == element {
            f.normal
        } else {
            [-f.normal[0], -f.normal[1]]
        }
    }

    /// Element containing the point `(x, y)` (wrapped onto the torus) and the
    /// corresponding reference coordinates.
    pub fn locate(&self, x: f64, y: f64) -> (usize, [f64; 2]) {
        let n = self.n as f64;
        let xs = x.rem_euclid(1.0) * n;
        let ys = y.rem_euclid(1.0) * n;
        let i = (xs.floor() as usize).min(self.n - 1);
        let j = (ys.floor() as usize).min(self.n - 1);
        let (fx, fy) = (xs - i as f64, ys - j as f64);
        let base = 2 * (j * self.n + i);
        let element = if fx >= fy { base } else { base + 1 };
        let g = &self.geometry[element];
        let p = [(i as f64 + fx) / n, (j as f64 + fy) / n];
        (element, g.inverse_map(p))
    }

    /// Gauss–Legendre points on `facet` in the minus element's frame,
    /// wrapped to `[0, 1)²`, with weights summing to the facet length.
    pub fn facet_quadrature(&self, facet: usize, order: usize) -> Result<Vec<([f64; 2], f64)>> {
        if order == 0 {
            return Err(TqgError::InvalidParameter("facet quadrature order must be ≥ 1".into()));
        }
        let f = self
            .facets
            .get(facet)
            .ok_or_else(|| TqgError::InvalidParameter(format!("facet index {facet} out of range")))?;
        let rule = LineRule::with_exactness(order);
        let g = &self.geometry[f.minus.element];
        let (a, b) = reference_facet_endpoints(f.minus.local);
        let (pa, pb) = (g.map(a), g.map(b));
        Ok(rule
            .points
            .iter()
            .zip(&rule.weights)
            .map(|(s, w)| {
                let p = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
                ([p[0].rem_euclid(1.0), p[1].rem_euclid(1.0)], w * f.length)
            })
            .collect())
    }
}
