use serde::{Deserialize, Serialize};

use super::{EncoderParams, LrdError, Result};
use crate::dataset::SampleId;
use crate::linalg::Matrix;

/// A trained encoder and the data party whose federated representation it
/// distilled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartyEncoder {
    pub party_id: String,
    pub params: EncoderParams,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum ColumnSource {
    Raw { column: usize },
    Encoder { party_id: String, component: usize },
}

/// Rows `⟨x, Enc_1(x), …, Enc_n(x)⟩`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnrichedRepresentation {
    pub ids: Vec<SampleId>,
    pub matrix: Matrix,
    pub provenance: Vec<ColumnSource>,
}

/// Concatenates the raw features with each encoder's latent output, in order.
pub fn enrich(encoders: &[PartyEncoder], ids: &[SampleId], x: &Matrix) -> Result<EnrichedRepresentation> {
    if ids.len() != x.rows() {
        return Err(LrdError::Shape(format!("{} ids for {} rows", ids.len(), x.rows())));
    }
    let mut provenance: Vec<ColumnSource> = (0..x.cols()).map(|column| ColumnSource::Raw { column }).collect();
    let mut latents = Vec::with_capacity(encoders.len());
    for e in encoders {
        if e.params.input_width != x.cols() {
            return Err(LrdError::Shape(format!(
                "encoder of `{}` takes {} features, rows have {}",
                e.party_id,
                e.params.input_width,
                x.cols()
            )));
        }
        let z = e.params.encode(x)?;
        provenance.extend((0..z.cols()).map(|component| ColumnSource::Encoder {
            party_id: e.party_id.clone(),
            component,
        }));
        latents.push(z);
    }
    let parts: Vec<&Matrix> = std::iter::once(x).chain(&latents).collect();
    Ok(EnrichedRepresentation {
        ids: ids.to_vec(),
        matrix: Matrix::hstack(&parts)?,
        provenance,
    })
}
