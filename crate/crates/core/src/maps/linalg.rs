pub type Mat = [[f64; 3]; 3];

pub fn det(m: &Mat, d: usize) -> f64 {
    match d {
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        _ => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
    }
}

pub fn inverse(m: &Mat, d: usize) -> Mat {
    let mut out = [[0.0; 3]; 3];
    let dt = det(m, d);
    match d {
        1 => out[0][0] = 1.0 / m[0][0],
        2 => {
            out[0][0] = m[1][1] / dt;
            out[0][1] = -m[0][1] / dt;
            out[1][0] = -m[1][0] / dt;
            out[1][1] = m[0][0] / dt;
        }
        _ => {
            for i in 0..3 {
                for j in 0..3 {
                    let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
                    let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
                    out[i][j] = (m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]) / dt;
                }
            }
        }
    }
    out
}

/// Spectral norm (largest singular value).
pub fn op_norm(m: &Mat, d: usize) -> f64 {
    match d {
        1 => m[0][0].abs(),
        2 => {
            // Half sum of σ1 + σ2 and |σ1 - σ2|; free of cancellation near
            // isometries.
            let (a, b, c, d) = (m[0][0], m[0][1], m[1][0], m[1][1]);
            ((a + d).hypot(c - b) + (a - d).hypot(b + c)) / 2.0
        }
        _ => {
            let mut a = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    a[i][j] = (0..3).map(|k| m[k][i] * m[k][j]).sum();
                }
            }
            max_eigen_sym3(a).max(0.0).sqrt()
        }
    }
}

/// Largest eigenvalue of a symmetric 3x3 matrix by cyclic Jacobi sweeps.
fn max_eigen_sym3(mut a: Mat) -> f64 {
    for _ in 0..50 {
        let off = a[0][1].powi(2) + a[0][2].powi(2) + a[1][2].powi(2);
        if off < 1e-30 * (a[0][0].powi(2) + a[1][1].powi(2) + a[2][2].powi(2) + 1e-300) {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            if a[p][q] == 0.0 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            let mut b = a;
            for k in 0..3 {
                b[k][p] = c * a[k][p] - s * a[k][q];
                b[k][q] = s * a[k][p] + c * a[k][q];
            }
            let mut r = b;
            for k in 0..3 {
                r[p][k] = c * b[p][k] - s * b[q][k];
                r[q][k] = s * b[p][k] + c * b[q][k];
            }
            a = r;
        }
    }
    a[0][0].max(a[1][1]).max(a[2][2])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shear_singular_value() {
        let m = [[1.0, 1.0, 0.0], [0.0, 1.0, 0.0], [0.0; 3]];
        let want = ((3.0 + 5f64.sqrt()) / 2.0).sqrt();
        assert!((op_norm(&m, 2) - want).abs() < 1e-14);
    }

    #[test]
    fn three_d_norm_matches_two_d_block() {
        let m = [[1.0, 8.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.5]];
        let two = [[1.0, 8.0, 0.0], [0.0, 1.0, 0.0], [0.0; 3]];
        assert!((op_norm(&m, 3) - op_norm(&two, 2)).abs() < 1e-12);
    }

    #[test]
    fn inverse_times_matrix_is_identity() {
        let m = [[2.0, 1.0, 0.5], [0.3, 1.5, -1.0], [0.0, 0.7, 1.1]];
        let inv = inverse(&m, 3);
        for i in 0..3 {
            for j in 0..3 {
                let v: f64 = (0..3).map(|k| m[i][k] * inv[k][j]).sum();
                assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }
}
