//! Federated representation learning over shared samples.
//!
//! Two protocols produce the shared samples' federated latent representation:
//!
//! * [`fedsvd`]: a trusted key generator hands every party the orthogonal
//!   mask `A` and its row block `B_k` of a second orthogonal mask `B`. Parties
//!   upload `A S_k B_k`; the server sums the uploads (which equals
//!   `A [S_t | S_d ...] B`), decomposes the sum and returns only the truncated
//!   left factor to the task party, who unmasks it with `Aᵀ`.
//! * [`vfedpca`]: parties run local power iteration on `S_kᵀ S_k / |X_k|`,
//!   the server averages the eigenvectors weighted by their eigenvalues, and
//!   the task party projects its shared block onto the aggregated direction.
//!
//! Roles only interact through [`Message`]s logged in a [`Transcript`].

pub mod fedsvd;
pub mod transcript;
pub mod vfedpca;

pub use fedsvd::{
    fedsvd_keygen, fedsvd_mask, fedsvd_run, fedsvd_run_with, FedSvdOutcome, FedSvdParty, HonestParty, MaskingKeys,
};
pub use transcript::{
    column_digests, matrix_digest, Message, PayloadKind, Protocol, Role, Transcript, TranscriptRecord,
};
pub use vfedpca::{
    vfedpca_aggregate, vfedpca_local, vfedpca_reconstruct, vfedpca_run, Aggregation, LocalEigen, VfedpcaOutcome,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::SampleId;
use crate::linalg::{LinalgError, Matrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrlError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("shape: {0}")]
    Shape(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("representation collapsed: S_tᵀu is zero")]
    RepresentationCollapsed,
}

pub type Result<T> = std::result::Result<T, FrlError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrlMethod {
    #[default]
    Fedsvd,
    Vfedpca,
}

/// Protocol parameters. Defaults are FedSVD with 100-wide mask blocks and
/// VFedPCA with 100 local iterations over 10 warm-started periods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FrlConfig {
    pub method: FrlMethod,
    /// Latent width `r`; `None` means the task party's feature count.
    pub rank: Option<usize>,
    pub block_size: usize,
    pub iter_num: usize,
    pub period_num: usize,
    pub warm_start: bool,
    /// Scale the recovered left factor by the singular values.
    pub scale_by_sigma: bool,
}

impl Default for FrlConfig {
    fn default() -> Self {
        Self {
            method: FrlMethod::Fedsvd,
            rank: None,
            block_size: 100,
            iter_num: 100,
            period_num: 10,
            warm_start: true,
            scale_by_sigma: false,
        }
    }
}

/// One party's row-aligned block of the shared samples.
#[derive(Debug, Clone, PartialEq)]
pub struct PartyBlock {
    pub party_id: String,
    pub shared: Matrix,
}

/// Everything the protocols need: aligned shared blocks of the task party and
/// one or more data parties.
#[derive(Debug, Clone, PartialEq)]
pub struct FrlInput {
    pub ids: Vec<SampleId>,
    pub task: PartyBlock,
    pub data: Vec<PartyBlock>,
}

impl FrlInput {
    pub fn new(ids: Vec<SampleId>, task: PartyBlock, data: Vec<PartyBlock>) -> Result<Self> {
        let n = ids.len();
        if n == 0 {
            return Err(FrlError::InvalidArgument("no shared samples".into()));
        }
        for block in std::iter::once(&task).chain(&data) {
            if block.shared.rows() != n {
                return Err(FrlError::Shape(format!(
                    "party `{}` holds {} shared rows, expected {n}",
                    block.party_id,
                    block.shared.rows()
                )));
            }
            if block.shared.cols() == 0 {
                return Err(FrlError::Shape(format!("party `{}` holds no features", block.party_id)));
            }
        }
        Ok(Self { ids, task, data })
    }

    pub fn total_features(&self) -> usize {
        self.task.shared.cols() + self.data.iter().map(|b| b.shared.cols()).sum::<usize>()
    }

    pub fn session(&self, protocol: Protocol) -> String {
        let parties: Vec<&str> = std::iter::once(self.task.party_id.as_str())
            .chain(self.data.iter().map(|b| b.party_id.as_str()))
            .collect();
        let name = match protocol {
            Protocol::Fedsvd => "fedsvd",
            Protocol::Vfedpca => "vfedpca",
        };
        format!("{name}:{}", parties.join("+"))
    }
}

/// Latent vectors of the shared samples, row-aligned with `ids`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FedRepresentation {
    pub ids: Vec<SampleId>,
    pub matrix: Matrix,
    pub rank: usize,
    pub method: FrlMethod,
    /// Protocol notes such as near-degenerate singular values.
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl FedRepresentation {
    /// Writes `id,z0,z1,...` rows.
    pub fn write_csv(&self, path: &std::path::Path) -> std::io::Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["id".to_owned()];
        header.extend((0..self.matrix.cols()).map(|c| format!("z{c}")));
        w.write_record(&header)?;
        for (r, id) in self.ids.iter().enumerate() {
            let mut rec = vec![id.0.clone()];
            rec.extend(self.matrix.row(r).iter().map(f64::to_string));
            w.write_record(&rec)?;
        }
        w.flush()
    }
}

/// Runs the configured protocol. Mask randomness comes from `seed`.
pub fn run_frl(input: &FrlInput, cfg: &FrlConfig, seed: u64, transcript: &mut Transcript) -> Result<FedRepresentation> {
    match cfg.method {
        FrlMethod::Fedsvd => {
            let mut rng = crate::seed::tagged_rng(seed, &format!("keygen:{}", input.session(Protocol::Fedsvd)));
            Ok(fedsvd_run(input, cfg, &mut rng, transcript)?.representation)
        }
        FrlMethod::Vfedpca => Ok(vfedpca_run(input, cfg, transcript)?.representation),
    }
}
