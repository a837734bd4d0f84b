use super::{dot, norm, LinalgError, Matrix, Result};

const SYMMETRY_TOL: f64 = 1e-10;

/// Dominant eigenpair estimate from power iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct DominantEigen {
    /// Unit-norm eigenvector estimate after the last step.
    pub vector: Vec<f64>,
    /// Rayleigh quotient of the last iterate.
    pub value: f64,
    /// Rayleigh quotient after every step.
    pub trace: Vec<f64>,
}

/// Power iteration from the normalized all-ones start vector.
pub fn power_iteration(a: &Matrix, steps: usize) -> Result<DominantEigen> {
    power_iteration_from(a, steps, None)
}

/// Power iteration from an optional start vector (warm start).
///
/// Each step computes `a_l = A a_{l-1} / ‖A a_{l-1}‖` and
/// `alpha_l = (A a_l)ᵀ a_l / a_lᵀ a_l`. If the start vector is annihilated by
/// `A`, the column of `A` with the largest norm seeds a restart.
pub fn power_iteration_from(a: &Matrix, steps: usize, start: Option<&[f64]>) -> Result<DominantEigen> {
    let n = a.rows();
    let asym = a.asymmetry().ok_or_else(|| {
        LinalgError::InvalidArgument(format!("power iteration needs a square matrix, got {:?}", a.shape()))
    })?;
    if asym > SYMMETRY_TOL * a.max_abs().max(1.0) {
        return Err(LinalgError::NotSymmetric(asym));
    }
    if steps == 0 || n == 0 {
        return Err(LinalgError::InvalidArgument("power iteration needs steps >= 1 and n >= 1".into()));
    }

    let mut x = match start {
        Some(s) if s.len() == n && norm(s) > 0.0 => {
            let len = norm(s);
            s.iter().map(|v| v / len).collect()
        }
        Some(s) if s.len() != n => {
            return Err(LinalgError::ShapeMismatch {
                op: "power_iteration start",
                left: a.shape(),
                right: (s.len(), 1),
            })
        }
        _ => vec![1.0 / (n as f64).sqrt(); n],
    };

    let mut trace = Vec::with_capacity(steps);
    let mut value = 0.0;
    for _ in 0..steps {
        let mut y = a.matvec(&x)?;
        let mut len = norm(&y);
        if len == 0.0 {
            let (best, best_norm) = (0..n)
                .map(|c| (c, norm(&a.column(c))))
                .fold((0, 0.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
            if best_norm == 0.0 {
                return Err(LinalgError::NoDominantEigenvector);
            }
            y = a.column(best);
            len = best_norm;
        }
        x = y.iter().map(|v| v / len).collect();
        let ax = a.matvec(&x)?;
        value = dot(&ax, &x) / dot(&x, &x);
        trace.push(value);
    }
    Ok(DominantEigen { vector: x, value, trace })
}
