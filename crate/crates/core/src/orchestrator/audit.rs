//! Checks a transcript against the parties' raw inputs.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{OrchestratorError, Result};
use crate::frl::{column_digests, matrix_digest, PayloadKind, Protocol, Role, Transcript, TranscriptRecord};
use crate::linalg::Matrix;

/// Raw matrices per party id, as fed to the protocols.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawViews {
    pub views: Vec<(String, Matrix)>,
}

impl RawViews {
    pub fn push(&mut self, party_id: &str, m: Matrix) {
        self.views.push((party_id.to_owned(), m));
    }

    /// Writes `<name>.<party>.csv` files with full-precision values.
    pub fn write_dir(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for (k, (party, m)) in self.views.iter().enumerate() {
            let mut w = csv::Writer::from_path(dir.join(format!("view{k:03}.{party}.csv")))?;
            w.write_record((0..m.cols()).map(|c| format!("x{c}")))?;
            for r in 0..m.rows() {
                w.write_record(m.row(r).iter().map(f64::to_string))?;
            }
            w.flush()?;
        }
        Ok(())
    }

    /// Reads every `*.csv` in `dir`; the party id is the last dot-separated
    /// part of the file stem.
    pub fn read_dir(dir: &Path) -> Result<Self> {
        let io = |e: std::io::Error| OrchestratorError::runtime("audit", format!("{}: {e}", dir.display()));
        let mut paths: Vec<_> = std::fs::read_dir(dir)
            .map_err(io)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .collect();
        paths.sort();
        let mut out = Self::default();
        for path in paths {
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
            let party = stem.rsplit('.').next().unwrap_or(stem).to_owned();
            let bad = |m: String| OrchestratorError::runtime("audit", format!("{}: {m}", path.display()));
            let mut rdr = csv::Reader::from_path(&path).map_err(|e| bad(e.to_string()))?;
            let mut rows = Vec::new();
            for rec in rdr.records() {
                let rec = rec.map_err(|e| bad(e.to_string()))?;
                let row: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
                rows.push(row.map_err(|e| bad(e.to_string()))?);
            }
            let m = Matrix::from_rows(&rows).map_err(|e| bad(e.to_string()))?;
            out.push(&party, m);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub step: usize,
    pub session: String,
    pub sender: Role,
    pub receiver: Role,
    pub kind: PayloadKind,
    pub reasons: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditReport {
    pub records: usize,
    pub violations: Vec<Violation>,
    /// `sender -> receiver` (roles with ids) to the payload kinds seen.
    pub edges: BTreeMap<String, BTreeSet<PayloadKind>>,
    /// Kinds received or sent by the server, per protocol.
    pub server_kinds: BTreeMap<String, BTreeSet<PayloadKind>>,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

fn allowed(protocol: Protocol, from: &Role, to: &Role, kind: PayloadKind) -> bool {
    use PayloadKind::*;
    match protocol {
        Protocol::Fedsvd => matches!(
            (from, to, kind),
            (Role::KeyGenerator, Role::Task(_) | Role::Data(_), MaskingKey)
                | (Role::Task(_) | Role::Data(_), Role::Server, MaskedMatrix)
                | (Role::Server, Role::Task(_), SvdResult)
        ),
        Protocol::Vfedpca => matches!(
            (from, to, kind),
            (Role::Task(_) | Role::Data(_), Role::Server, LocalEigenpair)
                | (Role::Server, Role::Task(_) | Role::Data(_), AggregatedDirection)
        ),
    }
}

fn record_digests(r: &TranscriptRecord) -> impl Iterator<Item = &String> {
    r.part_digests.iter().chain(&r.column_digests)
}

/// Flags every record that carries a raw matrix or raw column of any party,
/// or a payload kind the protocol never sends on that edge. One violation per
/// offending record.
pub fn audit_transcript(t: &Transcript, raw: &RawViews) -> AuditReport {
    let mut raw_digests: HashMap<String, String> = HashMap::new();
    for (party, m) in &raw.views {
        raw_digests.insert(matrix_digest(m), format!("matrix of {party}"));
        for (c, d) in column_digests(m).into_iter().enumerate() {
            raw_digests.entry(d).or_insert_with(|| format!("column {c} of {party}"));
        }
    }
    let mut violations = Vec::new();
    let mut edges: BTreeMap<String, BTreeSet<PayloadKind>> = BTreeMap::new();
    let mut server_kinds: BTreeMap<String, BTreeSet<PayloadKind>> = BTreeMap::new();
    for r in t.records() {
        edges
            .entry(format!("{} -> {}", r.sender, r.receiver))
            .or_default()
            .insert(r.kind);
        if r.sender == Role::Server || r.receiver == Role::Server {
            let p = serde_json::to_value(r.protocol).expect("protocol serializes");
            server_kinds
                .entry(p.as_str().unwrap_or("?").to_owned())
                .or_default()
                .insert(r.kind);
        }
        let mut reasons = Vec::new();
        let mut leaked: Vec<&str> = record_digests(r)
            .filter_map(|d| raw_digests.get(d).map(String::as_str))
            .collect();
        leaked.dedup();
        if !leaked.is_empty() {
            reasons.push(format!("raw data in payload: {}", leaked.join(", ")));
        }
        if r.kind == PayloadKind::RawMatrix || !allowed(r.protocol, &r.sender, &r.receiver, r.kind) {
            reasons.push(format!("{} not allowed on {} -> {}", r.kind, r.sender, r.receiver));
        }
        if !reasons.is_empty() {
            violations.push(Violation {
                step: r.step,
                session: r.session.clone(),
                sender: r.sender.clone(),
                receiver: r.receiver.clone(),
                kind: r.kind,
                reasons,
            });
        }
    }
    AuditReport {
        records: t.len(),
        violations,
        edges,
        server_kinds,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frl::Message;

    #[test]
    fn raw_column_and_wrong_kind_are_flagged_once_each() {
        let s = Matrix::from_fn(4, 2, |r, c| (r * 3 + c) as f64 + 0.5);
        let mut raw = RawViews::default();
        raw.push("t", s.clone());
        let mut t = Transcript::new();
        let task = Role::Task("t".into());
        // A single raw column smuggled into an otherwise allowed message.
        let col = Matrix::column_vector(&s.column(1)).unwrap();
        t.send("x", Message::new(Protocol::Vfedpca, task.clone(), Role::Server, PayloadKind::LocalEigenpair, vec![col]));
        // Allowed kind, clean payload.
        t.send(
            "x",
            Message::new(Protocol::Vfedpca, Role::Server, task.clone(), PayloadKind::AggregatedDirection, vec![Matrix::identity(1)]),
        );
        // Wrong direction for the kind.
        t.send(
            "x",
            Message::new(Protocol::Fedsvd, Role::Server, Role::Data("d1".into()), PayloadKind::SvdResult, vec![Matrix::identity(2)]),
        );
        let rep = audit_transcript(&t, &raw);
        assert_eq!(rep.violations.len(), 2);
        assert_eq!(rep.violations[0].step, 0);
        assert_eq!(rep.violations[1].step, 2);
        assert_eq!(rep.edges.len(), 3);
    }

    #[test]
    fn views_survive_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut raw = RawViews::default();
        raw.push("t", Matrix::from_fn(3, 2, |r, c| (r as f64 + 0.1) / (c as f64 + 3.0)));
        raw.push("d1", Matrix::from_fn(3, 1, |r, _| -(r as f64) * 1e-17));
        raw.write_dir(dir.path()).unwrap();
        let back = RawViews::read_dir(dir.path()).unwrap();
        assert_eq!(back, raw);
    }
}
