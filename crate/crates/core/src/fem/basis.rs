//! Nodal Lagrange basis on the reference triangle with equispaced nodes.
//!
//! Node ordering: the three vertices, then the `k - 1` interior nodes of
//! local facets 0, 1, 2 in facet traversal order, then cell-interior nodes.

use crate::mesh::reference_facet_endpoints;

#[derive(Clone, Debug)]
pub struct LagrangeBasis {
    degree: usize,
    /// Barycentric multi-indices `(a0, a1, a2)` with `a0 + a1 + a2 = k`.
    multi: Vec<[usize; 3]>,
    nodes: Vec<[f64; 2]>,
}

/// Barycentric coordinates `(1 - ξ - η, ξ, η)`.
#[inline]
fn barycentric(xi: [f64; 2]) -> [f64; 3] {
    [1.0 - xi[0] - xi[1], xi[0], xi[1]]
}

const DLAMBDA: [[f64; 2]; 3] = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];

impl LagrangeBasis {
    pub fn new(degree: usize) -> Self {
        assert!((1..=3).contains(&degree), "supported degrees are 1..=3");
        let k = degree;
        let mut multi = Vec::new();
        for v in 0..3 {
            let mut a = [0; 3];
            a[v] = k;
            multi.push(a);
        }
        for f in 0..3 {
            let (start, end) = ((f + 1) % 3, (f + 2) % 3);
            for m in 1..k {
                let mut a = [0; 3];
                a[start] = k - m;
                a[end] = m;
                multi.push(a);
            }
        }
        for a1 in 1..k {
            for a2 in 1..k {
                if a1 + a2 < k {
                    multi.push([k - a1 - a2, a1, a2]);
                }
            }
        }
        let nodes = multi
            .iter()
            .map(|a| [a[1] as f64 / k as f64, a[2] as f64 / k as f64])
            .collect();
        Self { degree, multi, nodes }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.multi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.multi.is_empty()
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    /// Number of interior nodes per facet.
    pub fn facet_interior(&self) -> usize {
        self.degree - 1
    }

    /// Local index of the `m`-th interior node (`m` in `1..k`) of facet `f`.
    pub fn facet_node(&self, f: usize, m: usize) -> usize {
        3 + f * (self.degree - 1) + (m - 1)
    }

    /// Number of cell-interior nodes.
    pub fn cell_interior(&self) -> usize {
        self.len() - 3 * self.degree
    }

    /// `P_m(λ) = Π_{j<m} (kλ - j)/(j + 1)` and its derivative.
    #[inline]
    fn factor(&self, m: usize, lambda: f64) -> (f64, f64) {
        let k = self.degree as f64;
        let mut value = 1.0;
        let mut deriv = 0.0;
        for j in 0..m {
            let jf = j as f64;
            let term = (k * lambda - jf) / (jf + 1.0);
            deriv = deriv * term + value * k / (jf + 1.0);
            value *= term;
        }
        (value, deriv)
    }

    pub fn eval(&self, xi: [f64; 2], out: &mut [f64]) {
        let l = barycentric(xi);
        for (o, a) in out.iter_mut().zip(&self.multi) {
            *o = (0..3).map(|c| self.factor(a[c], l[c]).0).product();
        }
    }

    /// Reference-coordinate gradients.
    pub fn grad(&self, xi: [f64; 2], out: &mut [[f64; 2]]) {
        let l = barycentric(xi);
        for (o, a) in out.iter_mut().zip(&self.multi) {
            let f: [(f64, f64); 3] = std::array::from_fn(|c| self.factor(a[c], l[c]));
            let mut g = [0.0; 2];
            for c in 0..3 {
                let others: f64 = (0..3).filter(|&d| d != c).map(|d| f[d].0).product();
                g[0] += f[c].1 * DLAMBDA[c][0] * others;
                g[1] += f[c].1 * DLAMBDA[c][1] * others;
            }
            *o = g;
        }
    }

    /// Reference-coordinate Hessians `[∂ξξ, ∂ξη, ∂ηη]`.
    pub fn hessian(&self, xi: [f64; 2], out: &mut [[f64; 3]]) {
        let l = barycentric(xi);
        for (o, a) in out.iter_mut().zip(&self.multi) {
            let f: [(f64, f64, f64); 3] = std::array::from_fn(|c| self.factor2(a[c], l[c]));
            let mut h = [0.0; 3];
            for c in 0..3 {
                for d in 0..3 {
                    let coeff = if c == d {
                        let others: f64 = (0..3).filter(|&e| e != c).map(|e| f[e].0).product();
                        f[c].2 * others
                    } else {
                        let e = 3 - c - d;
                        f[c].1 * f[d].1 * f[e].0
                    };
                    h[0] += coeff * DLAMBDA[c][0] * DLAMBDA[d][0];
                    h[1] += coeff * DLAMBDA[c][0] * DLAMBDA[d][1];
                    h[2] += coeff * DLAMBDA[c][1] * DLAMBDA[d][1];
                }
            }
            *o = h;
        }
    }

    #[inline]
    fn factor2(&self, m: usize, lambda: f64) -> (f64, f64, f64) {
        let k = self.degree as f64;
        let (mut v, mut d1, mut d2) = (1.0, 0.0, 0.0);
        for j in 0..m {
            let jf = j as f64;
            let t = (k * lambda - jf) / (jf + 1.0);
            let dt = k / (jf + 1.0);
            d2 = d2 * t + 2.0 * d1 * dt;
            d1 = d1 * t + v * dt;
            v *= t;
        }
        (v, d1, d2)
    }

    /// Reference point at parameter `s ∈ [0, 1]` along local facet `f`.
    pub fn facet_point(f: usize, s: f64) -> [f64; 2] {
        let (a, b) = reference_facet_endpoints(f);
        [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
    }
}
