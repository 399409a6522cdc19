//! Gauss–Legendre line rules and collapsed (Duffy) product rules on the
//! reference triangle `{(ξ, η) : ξ, η ≥ 0, ξ + η ≤ 1}`.

/// Gauss–Legendre nodes and weights on `[0, 1]` with `m` points.
///
/// Exact for polynomials of degree `2m - 1`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1, "gauss_legendre needs at least one point");
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m {
        // Chebyshev initial guess, then Newton on P_m.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(m, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(m, x);
        if d != 0.0 {
            dp = d;
        }
        // map [-1, 1] -> [0, 1]
        nodes[m - 1 - i] = 0.5 * (x + 1.0);
        weights[m - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre_with_derivative(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if m == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=m {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let mf = m as f64;
    let d = mf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// A quadrature rule on `[0, 1]`.
#[derive(Clone, Debug)]
pub struct LineRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub exactness: usize,
}

impl LineRule {
    pub fn with_exactness(degree: usize) -> Self {
        let m = degree / 2 + 1;
        let (points, weights) = gauss_legendre(m);
        Self { points, weights, exactness: 2 * m - 1 }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// A quadrature rule on the reference triangle.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub exactness: usize,
}

impl QuadratureRule {
    /// Conical product rule exact for total degree `degree`.
    ///
    /// The Duffy map `(u, v) -> (u, v (1 - u))` carries an extra factor
    /// `(1 - u)`, so the `u` direction needs one more degree of exactness.
    pub fn triangle(degree: usize) -> Self {
        let mu = degree.div_ceil(2) + 1;
        let mv = degree / 2 + 1;
        let (un, uw) = gauss_legendre(mu);
        let (vn, vw) = gauss_legendre(mv);
        let mut points = Vec::with_capacity(mu * mv);
        let mut weights = Vec::with_capacity(mu * mv);
        for (u, wu) in un.iter().zip(&uw) {
            for (v, wv) in vn.iter().zip(&vw) {
                points.push([*u, v * (1.0 - u)]);
                weights.push(wu * wv * (1.0 - u));
            }
        }
        Self { points, weights, exactness: degree }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}
