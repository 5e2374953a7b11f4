//! Cyclic Jacobi eigenvalues for small dense symmetric matrices.

/// Off-diagonal Frobenius norm at which the sweep stops, relative to the
/// matrix norm.
const OFF_DIAG_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

/// Eigenvalues of the symmetric `dim x dim` matrix stored row-major in `a`,
/// sorted ascending. Only the upper triangle is trusted.
pub fn symmetric_eigenvalues(a: &[f64], dim: usize) -> Vec<f64> {
    assert_eq!(a.len(), dim * dim);
    let mut m = a.to_vec();
    for i in 0..dim {
        for j in 0..i {
            m[i * dim + j] = m[j * dim + i];
        }
    }
    let scale = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    if scale == 0.0 {
        return vec![0.0; dim];
    }

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..dim)
            .flat_map(|i| (i + 1..dim).map(move |j| (i, j)))
            .map(|(i, j)| 2.0 * m[i * dim + j] * m[i * dim + j])
            .sum::<f64>()
            .sqrt();
        if off <= OFF_DIAG_TOL * scale {
            break;
        }
        for p in 0..dim {
            for q in p + 1..dim {
                rotate(&mut m, dim, p, q);
            }
        }
    }

    let mut eig: Vec<f64> = (0..dim).map(|i| m[i * dim + i]).collect();
    eig.sort_by(f64::total_cmp);
    eig
}

/// Applies the Jacobi rotation that zeroes `m[p][q]`.
fn rotate(m: &mut [f64], dim: usize, p: usize, q: usize) {
    let apq = m[p * dim + q];
    if apq == 0.0 {
        return;
    }
    let app = m[p * dim + p];
    let aqq = m[q * dim + q];
    let theta = (aqq - app) / (2.0 * apq);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    for k in 0..dim {
        let mkp = m[k * dim + p];
        let mkq = m[k * dim + q];
        m[k * dim + p] = c * mkp - s * mkq;
        m[k * dim + q] = s * mkp + c * mkq;
    }
    for k in 0..dim {
        let mpk = m[p * dim + k];
        let mqk = m[q * dim + k];
        m[p * dim + k] = c * mpk - s * mqk;
        m[q * dim + k] = s * mpk + c * mqk;
    }
    m[p * dim + q] = 0.0;
    m[q * dim + p] = 0.0;
}
