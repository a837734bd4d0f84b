//! Append-only log of every cross-party message.
//!
//! Records carry shapes and SHA-256 digests, never payload values, so a
//! transcript can be published and audited against the parties' raw data.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::linalg::Matrix;

/// A protocol participant.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Role {
    KeyGenerator,
    Server,
    Task(String),
    Data(String),
}

impl Role {
    pub fn is_party(&self) -> bool {
        matches!(self, Role::Task(_) | Role::Data(_))
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Role::KeyGenerator => f.write_str("keygen"),
            Role::Server => f.write_str("server"),
            Role::Task(id) => write!(f, "task:{id}"),
            Role::Data(id) => write!(f, "data:{id}"),
        }
    }
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "keygen" => Ok(Role::KeyGenerator),
            "server" => Ok(Role::Server),
            _ => match s.split_once(':') {
                Some(("task", id)) => Ok(Role::Task(id.to_owned())),
                Some(("data", id)) => Ok(Role::Data(id.to_owned())),
                _ => Err(format!("unknown role `{s}`")),
            },
        }
    }
}

impl From<Role> for String {
    fn from(r: Role) -> String {
        r.to_string()
    }
}

impl TryFrom<String> for Role {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    Fedsvd,
    Vfedpca,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayloadKind {
    /// Orthogonal masks `A` and the receiving party's block `B_k`.
    MaskingKey,
    /// `A S_k B_k`.
    MaskedMatrix,
    /// Server's truncated left factor (and singular values when requested).
    SvdResult,
    /// Padded local eigenvector and its eigenvalue.
    LocalEigenpair,
    /// Aggregated direction `u`.
    AggregatedDirection,
    /// Anything else. Never produced by an honest party.
    RawMatrix,
}

impl fmt::Display for PayloadKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("kind serializes");
        f.write_str(s.as_str().unwrap_or("?"))
    }
}

/// An in-flight message. Only its digest survives in the transcript.
#[derive(Debug, Clone)]
pub struct Message {
    pub protocol: Protocol,
    pub from: Role,
    pub to: Role,
    pub kind: PayloadKind,
    pub parts: Vec<Matrix>,
}

impl Message {
    pub fn new(protocol: Protocol, from: Role, to: Role, kind: PayloadKind, parts: Vec<Matrix>) -> Self {
        Self {
            protocol,
            from,
            to,
            kind,
            parts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub step: usize,
    /// Protocol session, e.g. `fedsvd:t+d1`.
    pub session: String,
    pub protocol: Protocol,
    pub sender: Role,
    pub receiver: Role,
    pub kind: PayloadKind,
    pub shapes: Vec<(usize, usize)>,
    /// Digest over all parts.
    pub digest: String,
    pub part_digests: Vec<String>,
    /// Digest of every column of every part, as an `n x 1` matrix.
    pub column_digests: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    records: Vec<TranscriptRecord>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    /// Logs `msg` and hands it over for delivery.
    pub fn send(&mut self, session: &str, msg: Message) -> Message {
        let part_digests: Vec<String> = msg.parts.iter().map(matrix_digest).collect();
        let column_digests = msg.parts.iter().flat_map(column_digests).collect();
        let mut h = Sha256::new();
        h.update(format!("{}|{}|{}|", msg.from, msg.to, msg.kind).as_bytes());
        for d in &part_digests {
            h.update(d.as_bytes());
        }
        self.records.push(TranscriptRecord {
            step: self.records.len(),
            session: session.to_owned(),
            protocol: msg.protocol,
            sender: msg.from.clone(),
            receiver: msg.to.clone(),
            kind: msg.kind,
            shapes: msg.parts.iter().map(Matrix::shape).collect(),
            digest: hex::encode(h.finalize()),
            part_digests,
            column_digests,
        });
        msg
    }

    pub fn records(&self) -> &[TranscriptRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Number of records addressed to, or sent by, a data party.
    pub fn data_party_messages(&self) -> usize {
        self.records
            .iter()
            .filter(|r| matches!(r.sender, Role::Data(_)) || matches!(r.receiver, Role::Data(_)))
            .count()
    }

    /// Digest of the whole log.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for r in &self.records {
            h.update(r.session.as_bytes());
            h.update(r.digest.as_bytes());
        }
        hex::encode(h.finalize())
    }

    pub fn extend(&mut self, other: Transcript) {
        for mut r in other.records {
            r.step = self.records.len();
            self.records.push(r);
        }
    }
}

/// SHA-256 over the shape and little-endian bytes of `m`.
pub fn matrix_digest(m: &Matrix) -> String {
    let mut h = Sha256::new();
    h.update((m.rows() as u64).to_le_bytes());
    h.update((m.cols() as u64).to_le_bytes());
    for v in m.iter() {
        // -0.0 and 0.0 hash alike.
        let v = if *v == 0.0 { 0.0 } else { *v };
        h.update(v.to_le_bytes());
    }
    hex::encode(h.finalize())
}

/// Digest of each column of `m`, viewed as an `rows x 1` matrix.
pub fn column_digests(m: &Matrix) -> Vec<String> {
    (0..m.cols())
        .map(|c| matrix_digest(&Matrix::new(m.rows(), 1, m.column(c)).expect("finite column")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roles_round_trip_through_strings() {
        for r in [
            Role::KeyGenerator,
            Role::Server,
            Role::Task("t".into()),
            Role::Data("d2".into()),
        ] {
            let s = serde_json::to_string(&r).unwrap();
            assert_eq!(serde_json::from_str::<Role>(&s).unwrap(), r);
        }
        assert!("nobody".parse::<Role>().is_err());
    }

    #[test]
    fn column_digest_matches_vector_digest() {
        let m = Matrix::from_fn(3, 2, |r, c| (r + 10 * c) as f64);
        let col = Matrix::column_vector(&m.column(1)).unwrap();
        assert_eq!(column_digests(&m)[1], matrix_digest(&col));
        assert_ne!(matrix_digest(&m), matrix_digest(&m.transpose()));
    }

    #[test]
    fn records_are_numbered_in_order() {
        let mut t = Transcript::new();
        let m = Matrix::identity(2);
        for _ in 0..3 {
            t.send(
                "s",
                Message::new(
                    Protocol::Fedsvd,
                    Role::Task("t".into()),
                    Role::Server,
                    PayloadKind::MaskedMatrix,
                    vec![m.clone()],
                ),
            );
        }
        let steps: Vec<usize> = t.records().iter().map(|r| r.step).collect();
        assert_eq!(steps, vec![0, 1, 2]);
        assert_eq!(t.records()[0].column_digests.len(), 2);
        assert_eq!(t.data_party_messages(), 0);
    }
}
