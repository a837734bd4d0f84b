use serde::{Deserialize, Serialize};

use super::{dot, norm, LinalgError, Matrix, Result};

/// Sweep cap for the one-sided Jacobi iteration.
pub const MAX_JACOBI_SWEEPS: usize = 80;

/// Thin, truncated singular value decomposition `m ≈ u · diag(sigma) · vt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvdResult {
    pub u: Matrix,
    pub sigma: Vec<f64>,
    pub vt: Matrix,
}

impl SvdResult {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// `u · diag(sigma) · vt`.
    pub fn reconstruct(&self) -> Matrix {
        let mut us = self.u.clone();
        for r in 0..us.rows() {
            for (c, s) in self.sigma.iter().enumerate() {
                us[(r, c)] *= s;
            }
        }
        us.matmul(&self.vt).expect("svd factors conform")
    }
}

/// Leading `k` singular triples of `m`.
///
/// One-sided Jacobi on the columns of `m` (or of `mᵀ` when `m` is wide).
/// Each left singular vector is sign-fixed so its largest-magnitude entry is
/// nonnegative; the matching right vector flips with it.
pub fn svd(m: &Matrix, k: usize) -> Result<SvdResult> {
    let (rows, cols) = m.shape();
    let min_dim = rows.min(cols);
    if k == 0 || k > min_dim {
        return Err(LinalgError::InvalidArgument(format!(
            "svd rank bound {k} outside 1..={min_dim} for {rows}x{cols}"
        )));
    }

    // Jacobi works on a tall matrix; wide inputs are handled through the transpose.
    let (left, sigma, right) = if rows >= cols {
        jacobi(m)?
    } else {
        let (l, s, r) = jacobi(&m.transpose())?;
        (r, s, l)
    };

    let mut u = Matrix::zeros(rows, k);
    let mut vt = Matrix::zeros(k, cols);
    for j in 0..k {
        let mut uj = left[j].clone();
        let mut vj = right[j].clone();
        let pivot = uj.iter().fold(0.0_f64, |best, &x| if x.abs() > best.abs() { x } else { best });
        if pivot < 0.0 {
            uj.iter_mut().for_each(|x| *x = -*x);
            vj.iter_mut().for_each(|x| *x = -*x);
        }
        u.set_column(j, &uj);
        for (c, v) in vj.iter().enumerate() {
            vt[(j, c)] = *v;
        }
    }
    Ok(SvdResult {
        u,
        sigma: sigma[..k].to_vec(),
        vt,
    })
}

type Columns = Vec<Vec<f64>>;

/// Full thin decomposition of a tall matrix (rows >= cols). Returns left
/// vectors, singular values (descending) and right vectors, all as columns.
fn jacobi(a: &Matrix) -> Result<(Columns, Vec<f64>, Columns)> {
    let (m, n) = a.shape();
    let mut w: Columns = (0..n).map(|c| a.column(c)).collect();
    let mut v: Columns = (0..n)
        .map(|c| {
            let mut e = vec![0.0; n];
            e[c] = 1.0;
            e
        })
        .collect();

    let tol = f64::EPSILON * (m as f64).max(1.0);
    let mut converged = false;
    for _sweep in 0..MAX_JACOBI_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(&w[p], &w[p]);
                let beta = dot(&w[q], &w[q]);
                let gamma = dot(&w[p], &w[q]);
                if alpha == 0.0 || beta == 0.0 || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut w, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(LinalgError::NoConvergence {
            sweeps: MAX_JACOBI_SWEEPS,
        });
    }

    let mut order: Vec<(f64, usize)> = w.iter().enumerate().map(|(i, col)| (norm(col), i)).collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let sigma_max = order.first().map_or(0.0, |o| o.0);
    let negligible = sigma_max * f64::EPSILON * (m.max(n) as f64);

    let mut sigma = Vec::with_capacity(n);
    let mut left: Columns = Vec::with_capacity(n);
    let mut right: Columns = Vec::with_capacity(n);
    let mut missing = Vec::new();
    for (slot, &(s, i)) in order.iter().enumerate() {
        right.push(v[i].clone());
        if s > negligible && s > 0.0 {
            sigma.push(s);
            left.push(w[i].iter().map(|x| x / s).collect());
        } else {
            sigma.push(0.0);
            left.push(Vec::new());
            missing.push(slot);
        }
    }
    complete_basis(&mut left, &missing, m);
    Ok((left, sigma, right))
}

fn rotate(cols: &mut Columns, p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(q);
    let cp = &mut lo[p];
    let cq = &mut hi[0];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let xp = *x;
        let xq = *y;
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

/// Fills null-space slots with unit vectors orthogonal to every other column.
fn complete_basis(cols: &mut Columns, missing: &[usize], m: usize) {
    let mut candidate = 0;
    for &slot in missing {
        loop {
            assert!(candidate < m, "cannot complete orthonormal basis");
            let mut e = vec![0.0; m];
            e[candidate] = 1.0;
            candidate += 1;
            // Two passes of Gram-Schmidt keep the result orthogonal to working precision.
            for _ in 0..2 {
                for other in cols.iter().filter(|c| !c.is_empty()) {
                    let proj = dot(&e, other);
                    for (x, o) in e.iter_mut().zip(other) {
                        *x -= proj * o;
                    }
                }
            }
            let len = norm(&e);
            if len > 0.5 {
                cols[slot] = e.iter().map(|x| x / len).collect();
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_has_unit_spectrum() {
        let r = svd(&Matrix::identity(3), 3).unwrap();
        assert_eq!(r.sigma, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn diagonal_gives_signed_permutations() {
        let d = Matrix::from_diag(&[1.0, 3.0, 2.0]);
        let r = svd(&d, 3).unwrap();
        assert_eq!(r.sigma, vec![3.0, 2.0, 1.0]);
        for m in [&r.u, &r.vt] {
            for row in 0..3 {
                let nonzero: Vec<f64> = m.row(row).iter().copied().filter(|x| *x != 0.0).collect();
                assert_eq!(nonzero.len(), 1);
                assert_eq!(nonzero[0].abs(), 1.0);
            }
        }
        assert!(r.reconstruct().max_abs_diff(&d).unwrap() < 1e-15);
    }

    #[test]
    fn rank_bound_checked() {
        let m = Matrix::identity(2);
        assert!(svd(&m, 0).is_err());
        assert!(svd(&m, 3).is_err());
    }

    #[test]
    fn rank_deficient_still_orthonormal() {
        // Rank-1 4x3.
        let m = Matrix::from_fn(4, 3, |r, c| (r as f64 + 1.0) * (c as f64 - 1.5));
        let r = svd(&m, 3).unwrap();
        assert!(r.sigma[1] < 1e-12 && r.sigma[2] < 1e-12);
        let utu = r.u.t_matmul(&r.u).unwrap();
        assert!(utu.max_abs_diff(&Matrix::identity(3)).unwrap() < 1e-12);
        assert!(r.reconstruct().max_abs_diff(&m).unwrap() < 1e-12);
    }

    #[test]
    fn wide_input_goes_through_transpose() {
        let m = Matrix::from_fn(2, 5, |r, c| ((r + 2 * c) % 3) as f64 + 0.5 * r as f64);
        let r = svd(&m, 2).unwrap();
        assert_eq!(r.u.shape(), (2, 2));
        assert_eq!(r.vt.shape(), (2, 5));
        assert!(r.reconstruct().max_abs_diff(&m).unwrap() < 1e-12);
    }

    #[test]
    fn sign_convention_holds() {
        let m = Matrix::from_fn(6, 3, |r, c| ((r * 5 + c * 7) % 9) as f64 - 4.0);
        let r = svd(&m, 3).unwrap();
        for j in 0..3 {
            let col = r.u.column(j);
            let pivot = col.iter().fold(0.0_f64, |b, &x| if x.abs() > b.abs() { x } else { b });
            assert!(pivot >= 0.0);
        }
    }
}
