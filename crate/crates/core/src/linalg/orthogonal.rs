use rand::Rng;
use rand_distr::StandardNormal;

use super::{householder_qr, LinalgError, Matrix, Result};

/// Block-diagonal random orthogonal matrix.
///
/// The diagonal holds `ceil(n / block_size)` blocks (all of size `block_size`
/// except a smaller trailing one); each block is the sign-corrected Q factor of
/// a standard Gaussian matrix, so it is Haar-distributed within its block.
pub fn random_orthogonal<R: Rng + ?Sized>(n: usize, block_size: usize, rng: &mut R) -> Result<Matrix> {
    if n == 0 || block_size == 0 {
        return Err(LinalgError::InvalidArgument(format!(
            "random_orthogonal needs n >= 1 and block_size >= 1 (got n={n}, block_size={block_size})"
        )));
    }
    let mut out = Matrix::zeros(n, n);
    let mut start = 0;
    while start < n {
        let size = block_size.min(n - start);
        let gaussian = Matrix::from_fn(size, size, |_, _| rng.sample(StandardNormal));
        let (mut q, r) = householder_qr(&gaussian);
        for j in 0..size {
            if r[(j, j)] < 0.0 {
                for i in 0..size {
                    q[(i, j)] = -q[(i, j)];
                }
            }
        }
        out.set_block(start, start, &q);
        start += size;
    }
    Ok(out)
}
