/// Inverse of a small dense row-major matrix by Gauss–Jordan elimination
/// with partial pivoting. Panics on a singular matrix.
pub(crate) fn invert(n: usize, a: &[f64]) -> Vec<f64> {
    let mut m = a.to_vec();
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r, &s| m[r * n + col].abs().total_cmp(&m[s * n + col].abs()))
            .unwrap();
        assert!(m[pivot * n + col].abs() > 1e-300, "singular matrix");
        if pivot != col {
            for j in 0..n {
                m.swap(pivot * n + j, col * n + j);
                inv.swap(pivot * n + j, col * n + j);
            }
        }
        let d = m[col * n + col];
        for j in 0..n {
            m[col * n + j] /= d;
            inv[col * n + j] /= d;
        }
        for r in 0..n {
            if r != col {
                let factor = m[r * n + col];
                if factor != 0.0 {
                    for j in 0..n {
                        m[r * n + j] -= factor * m[col * n + j];
                        inv[r * n + j] -= factor * inv[col * n + j];
                    }
                }
            }
        }
    }
    inv
}
