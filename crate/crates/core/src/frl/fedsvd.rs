use rand::Rng;
use serde::{Deserialize, Serialize};

use super::transcript::{Message, PayloadKind, Protocol, Role, Transcript};
use super::{FedRepresentation, FrlConfig, FrlError, FrlInput, FrlMethod, Result};
use crate::linalg::{random_orthogonal, svd, Matrix};

/// Relative gap under which neighbouring singular values count as repeated.
const DEGENERATE_GAP: f64 = 1e-10;

/// Orthogonal masks: `a` (|I_s| x |I_s|) and the row blocks `B_k`
/// (|X_k| x |X_td|) of an orthogonal `B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskingKeys {
    pub a: Matrix,
    pub b_parts: Vec<Matrix>,
}

impl MaskingKeys {
    /// `A = I`, `B = I`: masking becomes zero-padding. For tests.
    pub fn identity(n_shared: usize, feature_sizes: &[usize]) -> Self {
        let total: usize = feature_sizes.iter().sum();
        let eye = Matrix::identity(total);
        let mut offset = 0;
        let b_parts = feature_sizes
            .iter()
            .map(|&k| {
                let part = eye.block(offset, 0, k, total);
                offset += k;
                part
            })
            .collect();
        Self {
            a: Matrix::identity(n_shared),
            b_parts,
        }
    }

    /// The full `B = [B_1; B_2; ...]`.
    pub fn b(&self) -> Matrix {
        let parts: Vec<&Matrix> = self.b_parts.iter().collect();
        Matrix::vstack(&parts).expect("mask blocks share a width")
    }
}

/// Draws `A` and `B` block-diagonally and splits `B` by party feature counts.
pub fn fedsvd_keygen<R: Rng + ?Sized>(
    n_shared: usize,
    feature_sizes: &[usize],
    block_size: usize,
    rng: &mut R,
) -> Result<MaskingKeys> {
    if n_shared == 0 || feature_sizes.is_empty() || feature_sizes.contains(&0) {
        return Err(FrlError::InvalidArgument(format!(
            "keygen needs n_shared >= 1 and nonzero party widths (got {n_shared}, {feature_sizes:?})"
        )));
    }
    let total: usize = feature_sizes.iter().sum();
    let a = random_orthogonal(n_shared, block_size, rng)?;
    let b = random_orthogonal(total, block_size, rng)?;
    let mut offset = 0;
    let b_parts = feature_sizes
        .iter()
        .map(|&k| {
            let part = b.block(offset, 0, k, total);
            offset += k;
            part
        })
        .collect();
    Ok(MaskingKeys { a, b_parts })
}

/// `Ŝ_k = A S_k B_k`.
pub fn fedsvd_mask(s_k: &Matrix, a: &Matrix, b_k: &Matrix) -> Result<Matrix> {
    if a.rows() != a.cols() || a.cols() != s_k.rows() || s_k.cols() != b_k.rows() {
        return Err(FrlError::Shape(format!(
            "mask: A {:?}, S_k {:?}, B_k {:?} do not conform",
            a.shape(),
            s_k.shape(),
            b_k.shape()
        )));
    }
    Ok(a.matmul(s_k)?.matmul(b_k)?)
}

/// A data holder's side of the masking step.
pub trait FedSvdParty {
    fn role(&self) -> Role;
    fn width(&self) -> usize;
    /// The matrix uploaded to the server after receiving `(A, B_k)`.
    fn upload(&self, a: &Matrix, b_k: &Matrix) -> Result<Matrix>;
}

/// Uploads `A S_k B_k` and nothing else.
pub struct HonestParty<'a> {
    pub role: Role,
    pub shared: &'a Matrix,
}

impl FedSvdParty for HonestParty<'_> {
    fn role(&self) -> Role {
        self.role.clone()
    }

    fn width(&self) -> usize {
        self.shared.cols()
    }

    fn upload(&self, a: &Matrix, b_k: &Matrix) -> Result<Matrix> {
        fedsvd_mask(self.shared, a, b_k)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FedSvdOutcome {
    pub representation: FedRepresentation,
    /// Full spectrum of the masked sum, as seen by the server.
    pub server_singular_values: Vec<f64>,
}

/// Key generation, masking, server-side decomposition and task-side recovery.
pub fn fedsvd_run<R: Rng + ?Sized>(
    input: &FrlInput,
    cfg: &FrlConfig,
    rng: &mut R,
    transcript: &mut Transcript,
) -> Result<FedSvdOutcome> {
    let widths: Vec<usize> = std::iter::once(input.task.shared.cols())
        .chain(input.data.iter().map(|b| b.shared.cols()))
        .collect();
    let keys = fedsvd_keygen(input.ids.len(), &widths, cfg.block_size, rng)?;
    let task = HonestParty {
        role: Role::Task(input.task.party_id.clone()),
        shared: &input.task.shared,
    };
    let data: Vec<HonestParty<'_>> = input
        .data
        .iter()
        .map(|b| HonestParty {
            role: Role::Data(b.party_id.clone()),
            shared: &b.shared,
        })
        .collect();
    let data_refs: Vec<&dyn FedSvdParty> = data.iter().map(|p| p as &dyn FedSvdParty).collect();
    fedsvd_run_with(input, &task, &data_refs, &keys, cfg, transcript)
}

/// Protocol body with caller-supplied keys and party behaviour.
///
/// `input` supplies ids and the session name; the uploads come from the
/// `FedSvdParty` implementations, so a test double can misbehave.
pub fn fedsvd_run_with(
    input: &FrlInput,
    task: &dyn FedSvdParty,
    data: &[&dyn FedSvdParty],
    keys: &MaskingKeys,
    cfg: &FrlConfig,
    transcript: &mut Transcript,
) -> Result<FedSvdOutcome> {
    let session = input.session(Protocol::Fedsvd);
    let n_shared = input.ids.len();
    let parties: Vec<&dyn FedSvdParty> = std::iter::once(task).chain(data.iter().copied()).collect();
    if keys.b_parts.len() != parties.len() {
        return Err(FrlError::Shape(format!(
            "{} mask blocks for {} parties",
            keys.b_parts.len(),
            parties.len()
        )));
    }
    let total: usize = parties.iter().map(|p| p.width()).sum();
    let rank = cfg.rank.unwrap_or(task.width());
    if rank == 0 || rank > n_shared.min(total) {
        return Err(FrlError::InvalidArgument(format!(
            "rank r = {rank} must lie in 1..=min(|I_s| = {n_shared}, |X_td| = {total})"
        )));
    }

    // 1. key distribution, 2. local masking and upload.
    let mut uploads = Vec::with_capacity(parties.len());
    for (party, b_k) in parties.iter().zip(&keys.b_parts) {
        let delivered = transcript.send(
            &session,
            Message::new(
                Protocol::Fedsvd,
                Role::KeyGenerator,
                party.role(),
                PayloadKind::MaskingKey,
                vec![keys.a.clone(), b_k.clone()],
            ),
        );
        let masked = party.upload(&delivered.parts[0], &delivered.parts[1])?;
        let delivered = transcript.send(
            &session,
            Message::new(Protocol::Fedsvd, party.role(), Role::Server, PayloadKind::MaskedMatrix, vec![masked]),
        );
        uploads.extend(delivered.parts);
    }

    // 3. server: A [S_t | S_d ...] B = sum_k A S_k B_k.
    let mut combined = Matrix::zeros(n_shared, total);
    for up in &uploads {
        combined = combined.add(up).map_err(|_| {
            FrlError::Shape(format!("upload {:?} is not {n_shared}x{total}", up.shape()))
        })?;
    }
    let full = svd(&combined, n_shared.min(total))?;
    let sigma = full.sigma.clone();
    let mut warnings = Vec::new();
    let scale = sigma[0].max(f64::MIN_POSITIVE);
    for j in 0..rank.min(sigma.len() - 1) {
        if (sigma[j] - sigma[j + 1]) <= DEGENERATE_GAP * scale {
            warnings.push(format!(
                "singular values {} and {} are within {DEGENERATE_GAP:e} (relative): {} vs {}",
                j + 1,
                j + 2,
                sigma[j],
                sigma[j + 1]
            ));
        }
    }
    let u_hat = full.u.leading_cols(rank);
    let mut reply = vec![u_hat];
    if cfg.scale_by_sigma {
        reply.push(Matrix::column_vector(&sigma[..rank])?);
    }
    let delivered = transcript.send(
        &session,
        Message::new(Protocol::Fedsvd, Role::Server, task.role(), PayloadKind::SvdResult, reply),
    );

    // 4. task: U = Aᵀ Û.
    let mut u = keys.a.t_matmul(&delivered.parts[0])?;
    if let Some(s) = delivered.parts.get(1) {
        for r in 0..u.rows() {
            for c in 0..rank {
                u[(r, c)] *= s[(c, 0)];
            }
        }
    }

    Ok(FedSvdOutcome {
        representation: FedRepresentation {
            ids: input.ids.clone(),
            matrix: u,
            rank,
            method: FrlMethod::Fedsvd,
            warnings,
        },
        server_singular_values: sigma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::SampleId;
    use crate::frl::PartyBlock;
    use crate::seed::rng;
    use rand_distr::StandardNormal;

    fn gaussian(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut g = rng(seed);
        Matrix::from_fn(rows, cols, |_, _| g.sample(StandardNormal))
    }

    fn input(st: Matrix, sd: Matrix) -> FrlInput {
        let ids = (0..st.rows()).map(SampleId::from).collect();
        FrlInput::new(
            ids,
            PartyBlock {
                party_id: "t".into(),
                shared: st,
            },
            vec![PartyBlock {
                party_id: "d1".into(),
                shared: sd,
            }],
        )
        .unwrap()
    }

    #[test]
    fn keygen_shapes() {
        let keys = fedsvd_keygen(4, &[2, 3], 100, &mut rng(0)).unwrap();
        assert_eq!(keys.a.shape(), (4, 4));
        assert_eq!(keys.b_parts[0].shape(), (2, 5));
        assert_eq!(keys.b_parts[1].shape(), (3, 5));
        let b = keys.b();
        assert!(b.t_matmul(&b).unwrap().max_abs_diff(&Matrix::identity(5)).unwrap() < 1e-10);
        assert!(keys.a.t_matmul(&keys.a).unwrap().max_abs_diff(&Matrix::identity(4)).unwrap() < 1e-10);
    }

    #[test]
    fn identity_mask_zero_pads() {
        let s = gaussian(3, 2, 1);
        let keys = MaskingKeys::identity(3, &[2, 1]);
        let masked = fedsvd_mask(&s, &keys.a, &keys.b_parts[0]).unwrap();
        assert_eq!(masked.shape(), (3, 3));
        assert_eq!(masked.leading_cols(2), s);
        assert!(masked.column(2).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn mask_shape_errors() {
        let s = gaussian(3, 2, 1);
        assert!(fedsvd_mask(&s, &Matrix::identity(4), &Matrix::identity(2)).is_err());
        assert!(fedsvd_mask(&s, &Matrix::identity(3), &Matrix::identity(3)).is_err());
    }

    #[test]
    fn masked_upload_shares_no_raw_column() {
        let s = gaussian(6, 2, 5);
        let keys = fedsvd_keygen(6, &[2, 3], 100, &mut rng(6)).unwrap();
        let masked = fedsvd_mask(&s, &keys.a, &keys.b_parts[0]).unwrap();
        for c in 0..masked.cols() {
            for raw in 0..s.cols() {
                let diff: f64 = masked
                    .column(c)
                    .iter()
                    .zip(s.column(raw))
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                assert!(diff > 1e-6);
            }
        }
    }

    #[test]
    fn identity_keys_recover_plain_left_vectors() {
        let st = gaussian(12, 3, 2);
        let sd = gaussian(12, 4, 3);
        let inp = input(st.clone(), sd.clone());
        let keys = MaskingKeys::identity(12, &[3, 4]);
        let task = HonestParty {
            role: Role::Task("t".into()),
            shared: &st,
        };
        let data = HonestParty {
            role: Role::Data("d1".into()),
            shared: &sd,
        };
        let out = fedsvd_run_with(&inp, &task, &[&data], &keys, &FrlConfig::default(), &mut Transcript::new()).unwrap();
        let direct = svd(&Matrix::hstack(&[&st, &sd]).unwrap(), 3).unwrap();
        assert!(out.representation.matrix.max_abs_diff(&direct.u).unwrap() < 1e-12);
        assert_eq!(out.representation.rank, 3);
    }

    #[test]
    fn transcript_has_expected_edges() {
        let inp = input(gaussian(10, 2, 7), gaussian(10, 3, 8));
        let mut t = Transcript::new();
        fedsvd_run(&inp, &FrlConfig::default(), &mut rng(1), &mut t).unwrap();
        let kinds: Vec<(String, String, PayloadKind)> = t
            .records()
            .iter()
            .map(|r| (r.sender.to_string(), r.receiver.to_string(), r.kind))
            .collect();
        assert_eq!(
            kinds,
            vec![
                ("keygen".into(), "task:t".into(), PayloadKind::MaskingKey),
                ("task:t".into(), "server".into(), PayloadKind::MaskedMatrix),
                ("keygen".into(), "data:d1".into(), PayloadKind::MaskingKey),
                ("data:d1".into(), "server".into(), PayloadKind::MaskedMatrix),
                ("server".into(), "task:t".into(), PayloadKind::SvdResult),
            ]
        );
        assert_eq!(t.records()[4].shapes, vec![(10, 2)]);
    }

    #[test]
    fn rank_bound_enforced() {
        let inp = input(gaussian(3, 2, 7), gaussian(3, 3, 8));
        let cfg = FrlConfig {
            rank: Some(4),
            ..FrlConfig::default()
        };
        assert!(fedsvd_run(&inp, &cfg, &mut rng(0), &mut Transcript::new()).is_err());
    }

    #[test]
    fn repeated_singular_values_warn() {
        // Orthogonal columns with equal norms: every singular value is 1.
        let st = Matrix::identity(4).leading_cols(2);
        let sd = Matrix::identity(4).block(0, 2, 4, 2);
        let out = fedsvd_run(&input(st, sd), &FrlConfig::default(), &mut rng(3), &mut Transcript::new()).unwrap();
        assert!(!out.representation.warnings.is_empty());
    }

    #[test]
    fn scaled_factor_matches_sigma() {
        let st = gaussian(15, 3, 11);
        let sd = gaussian(15, 2, 12);
        let cfg = FrlConfig {
            scale_by_sigma: true,
            ..FrlConfig::default()
        };
        let out = fedsvd_run(&input(st, sd), &cfg, &mut rng(4), &mut Transcript::new()).unwrap();
        for c in 0..3 {
            let len = crate::linalg::norm(&out.representation.matrix.column(c));
            assert!((len - out.server_singular_values[c]).abs() < 1e-9);
        }
    }
}
