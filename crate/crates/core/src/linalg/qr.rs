use super::Matrix;

/// Householder QR: returns `(Q, R)` with `Q` square orthogonal (m x m) and
/// `R` upper-trapezoidal (m x n).
pub fn householder_qr(a: &Matrix) -> (Matrix, Matrix) {
    let (m, n) = a.shape();
    let mut r = a.clone();
    let mut q = Matrix::identity(m);
    let mut v = vec![0.0; m];

    for k in 0..n.min(m.saturating_sub(1)) {
        let mut norm_x = 0.0;
        for i in k..m {
            norm_x += r[(i, k)] * r[(i, k)];
        }
        let norm_x = norm_x.sqrt();
        if norm_x == 0.0 {
            continue;
        }
        let alpha = if r[(k, k)] >= 0.0 { -norm_x } else { norm_x };
        for i in 0..m {
            v[i] = if i < k { 0.0 } else { r[(i, k)] };
        }
        v[k] -= alpha;
        let vnorm2: f64 = v[k..].iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }

        // R <- (I - 2vvᵀ/vᵀv) R
        for j in 0..n {
            let s: f64 = (k..m).map(|i| v[i] * r[(i, j)]).sum::<f64>() * 2.0 / vnorm2;
            for i in k..m {
                r[(i, j)] -= s * v[i];
            }
        }
        // Q <- Q (I - 2vvᵀ/vᵀv)
        for i in 0..m {
            let s: f64 = (k..m).map(|j| q[(i, j)] * v[j]).sum::<f64>() * 2.0 / vnorm2;
            for j in k..m {
                q[(i, j)] -= s * v[j];
            }
        }
        for i in k + 1..m {
            r[(i, k)] = 0.0;
        }
    }
    (q, r)
}
