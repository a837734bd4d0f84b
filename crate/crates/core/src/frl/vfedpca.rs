use super::transcript::{Message, PayloadKind, Protocol, Role, Transcript};
use super::{FedRepresentation, FrlConfig, FrlError, FrlInput, FrlMethod, Result};
use crate::linalg::{norm, power_iteration_from, Matrix};

/// A party's dominant eigenpair of `S_iᵀ S_i / |X_i|`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalEigen {
    pub vector: Vec<f64>,
    pub value: f64,
}

/// Local power iteration on `A_i = S_iᵀ S_i / |X_i|`.
pub fn vfedpca_local(s_i: &Matrix, iter_num: usize, warm_start: Option<&[f64]>) -> Result<LocalEigen> {
    let width = s_i.cols();
    if width == 0 {
        return Err(FrlError::Shape("party holds no features".into()));
    }
    let a = s_i.t_matmul(s_i)?.scale(1.0 / width as f64);
    let est = power_iteration_from(&a, iter_num, warm_start)?;
    Ok(LocalEigen {
        vector: est.vector,
        value: est.value,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregation {
    pub u: Vec<f64>,
    pub weights: Vec<f64>,
    /// `u` vanished through cancellation.
    pub degenerate: bool,
}

/// `u = Σ w_i a_i` with `w_i = α_i / Σ_j α_j`.
pub fn vfedpca_aggregate(pairs: &[(Vec<f64>, f64)]) -> Result<Aggregation> {
    let Some((first, _)) = pairs.first() else {
        return Err(FrlError::InvalidArgument("aggregation needs at least one eigenpair".into()));
    };
    let dim = first.len();
    if let Some((v, _)) = pairs.iter().find(|(v, _)| v.len() != dim) {
        return Err(FrlError::Shape(format!("eigenvector dimensions differ: {dim} vs {}", v.len())));
    }
    if pairs.iter().any(|(_, a)| *a < 0.0 || !a.is_finite()) {
        return Err(FrlError::InvalidArgument("eigenvalues must be finite and nonnegative".into()));
    }
    let total: f64 = pairs.iter().map(|(_, a)| a).sum();
    if total <= 0.0 {
        return Err(FrlError::InvalidArgument("all eigenvalues are zero".into()));
    }
    let weights: Vec<f64> = pairs.iter().map(|(_, a)| a / total).collect();
    let mut u = vec![0.0; dim];
    for ((v, _), w) in pairs.iter().zip(&weights) {
        for (acc, x) in u.iter_mut().zip(v) {
            *acc += w * x;
        }
    }
    let scale = pairs.iter().map(|(v, _)| norm(v)).fold(0.0, f64::max);
    let degenerate = norm(&u) <= 1e-12 * scale.max(f64::MIN_POSITIVE);
    Ok(Aggregation { u, weights, degenerate })
}

/// Federated representation from a feature-space direction `u` (length |X_t|).
///
/// The shared samples' scores `z = S_t u` give `M = S_tᵀ z`, and the result is
/// `S_t (M Mᵀ) / ‖M Mᵀ‖_F`, shape |I_s| x |X_t|. When `u` is an exact unit
/// eigenvector of `S_tᵀ S_t` this is the rank-1 PCA reconstruction `S_t u uᵀ`.
pub fn vfedpca_reconstruct(s_t: &Matrix, u: &[f64]) -> Result<Matrix> {
    if u.len() != s_t.cols() {
        return Err(FrlError::Shape(format!(
            "direction of length {} does not match |X_t| = {}",
            u.len(),
            s_t.cols()
        )));
    }
    let scores = s_t.matvec(u)?;
    let m = s_t.t_matvec(&scores)?;
    if norm(&m) == 0.0 {
        return Err(FrlError::RepresentationCollapsed);
    }
    let outer = Matrix::from_fn(m.len(), m.len(), |i, j| m[i] * m[j]);
    let fro = outer.frobenius_norm();
    Ok(s_t.matmul(&outer)?.scale(1.0 / fro))
}

#[derive(Debug, Clone, PartialEq)]
pub struct VfedpcaOutcome {
    pub representation: FedRepresentation,
    /// Aggregated direction after the last period, in the padded `|X_td|` frame.
    pub direction: Vec<f64>,
    pub weights: Vec<f64>,
}

/// `period_num` rounds of local power iteration and server aggregation,
/// followed by reconstruction at the task party.
///
/// Local eigenvectors live in different feature spaces, so each party pads its
/// vector into the joint `|X_td|` frame at its own column offset before upload.
/// The task party reconstructs from its own slice of the final direction.
pub fn vfedpca_run(input: &FrlInput, cfg: &FrlConfig, transcript: &mut Transcript) -> Result<VfedpcaOutcome> {
    let session = input.session(Protocol::Vfedpca);
    let blocks: Vec<(Role, &Matrix)> = std::iter::once((Role::Task(input.task.party_id.clone()), &input.task.shared))
        .chain(input.data.iter().map(|b| (Role::Data(b.party_id.clone()), &b.shared)))
        .collect();
    let total = input.total_features();
    let mut offsets = Vec::with_capacity(blocks.len());
    let mut acc = 0;
    for (_, m) in &blocks {
        offsets.push(acc);
        acc += m.cols();
    }
    if cfg.period_num == 0 || cfg.iter_num == 0 {
        return Err(FrlError::InvalidArgument("period_num and iter_num must be >= 1".into()));
    }

    let mut direction: Option<Vec<f64>> = None;
    let mut weights = Vec::new();
    let mut warnings = Vec::new();
    for period in 0..cfg.period_num {
        let mut uploads = Vec::with_capacity(blocks.len());
        for ((role, s_i), &off) in blocks.iter().zip(&offsets) {
            let width = s_i.cols();
            let warm: Option<Vec<f64>> = if cfg.warm_start {
                direction.as_ref().map(|u| u[off..off + width].to_vec())
            } else {
                None
            };
            let local = vfedpca_local(s_i, cfg.iter_num, warm.as_deref())?;
            let mut padded = vec![0.0; total];
            padded[off..off + width].copy_from_slice(&local.vector);
            let delivered = transcript.send(
                &session,
                Message::new(
                    Protocol::Vfedpca,
                    role.clone(),
                    Role::Server,
                    PayloadKind::LocalEigenpair,
                    vec![Matrix::column_vector(&padded)?, Matrix::column_vector(&[local.value])?],
                ),
            );
            uploads.push((delivered.parts[0].column(0), delivered.parts[1][(0, 0)]));
        }
        let agg = vfedpca_aggregate(&uploads)?;
        if agg.degenerate {
            warnings.push(format!("period {period}: aggregated direction cancelled to zero"));
        }
        let mut received = None;
        for (role, _) in &blocks {
            let delivered = transcript.send(
                &session,
                Message::new(
                    Protocol::Vfedpca,
                    Role::Server,
                    role.clone(),
                    PayloadKind::AggregatedDirection,
                    vec![Matrix::column_vector(&agg.u)?],
                ),
            );
            if matches!(role, Role::Task(_)) {
                received = Some(delivered.parts[0].column(0));
            }
        }
        direction = received;
        weights = agg.weights;
    }

    let direction = direction.expect("at least one period ran");
    let task_width = input.task.shared.cols();
    let task_slice = &direction[..task_width];
    let matrix = vfedpca_reconstruct(&input.task.shared, task_slice)?;
    Ok(VfedpcaOutcome {
        representation: FedRepresentation {
            ids: input.ids.clone(),
            rank: matrix.cols(),
            matrix,
            method: FrlMethod::Vfedpca,
            warnings,
        },
        direction,
        weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_one_converges_in_one_step() {
        let u = [1.0, -2.0, 0.5];
        let v = [0.6, 0.8];
        let s = Matrix::from_fn(3, 2, |r, c| u[r] * v[c]);
        let out = vfedpca_local(&s, 1, None).unwrap();
        assert!((out.vector[0].abs() - 0.6).abs() < 1e-12);
        assert!((out.vector[1].abs() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn aggregate_examples() {
        let a = vec![1.0, 0.0];
        let single = vfedpca_aggregate(&[(a.clone(), 2.5)]).unwrap();
        assert_eq!(single.u, a);
        assert_eq!(single.weights, vec![1.0]);

        let d = vec![0.0, 1.0];
        let two = vfedpca_aggregate(&[(a.clone(), 3.0), (d, 1.0)]).unwrap();
        assert_eq!(two.u, vec![0.75, 0.25]);

        let neg = vec![-1.0, 0.0];
        let cancel = vfedpca_aggregate(&[(a, 1.0), (neg, 1.0)]).unwrap();
        assert!(cancel.degenerate);
        assert!(cancel.u.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn aggregate_errors() {
        assert!(vfedpca_aggregate(&[]).is_err());
        assert!(vfedpca_aggregate(&[(vec![1.0], 1.0), (vec![1.0, 0.0], 1.0)]).is_err());
        assert!(vfedpca_aggregate(&[(vec![1.0], 0.0)]).is_err());
        assert!(vfedpca_aggregate(&[(vec![1.0], -1.0)]).is_err());
    }

    #[test]
    fn reconstruct_rank_one_and_collapse() {
        let s = Matrix::from_fn(4, 2, |r, c| if r == c { 1.0 } else { 0.0 });
        let x = vfedpca_reconstruct(&s, &[1.0, 0.0]).unwrap();
        assert_eq!(x.shape(), (4, 2));
        let nonzero = x.iter().filter(|v| **v != 0.0).count();
        assert_eq!(nonzero, 1);
        assert_eq!(
            vfedpca_reconstruct(&Matrix::zeros(3, 2), &[1.0, 0.0]),
            Err(FrlError::RepresentationCollapsed)
        );
        assert!(vfedpca_reconstruct(&s, &[1.0, 0.0, 0.0]).is_err());
    }
}
