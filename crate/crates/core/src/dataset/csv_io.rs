use std::collections::BTreeSet;
use std::io::Read;
use std::path::Path;

use super::{Dataset, DatasetError, Result, SampleId};
use crate::linalg::Matrix;

/// Wisconsin diagnostic breast cancer data: 569 rows, `id`, `diagnosis` (M/B)
/// and 30 real-valued features.
pub const BREAST_CSV: &str = include_str!("../../data/wdbc.csv");

/// The bundled Breast dataset with `diagnosis` encoded B=0, M=1.
pub fn load_breast() -> Result<Dataset> {
    load_csv_reader(BREAST_CSV.as_bytes(), Some("id"), Some("diagnosis"))
}

/// Reads a comma-separated file with a header row.
///
/// Every column other than the id and label columns must be numeric. Labels
/// that all parse as integers map to class ids in ascending numeric order;
/// otherwise the distinct strings are sorted and numbered, so `B`/`M` become
/// 0/1. Without an id column, ids are the 0-based row numbers.
pub fn load_csv(path: impl AsRef<Path>, id_column: Option<&str>, label_column: Option<&str>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_csv_reader(file, id_column, label_column)
}

pub fn load_csv_reader<R: Read>(reader: R, id_column: Option<&str>, label_column: Option<&str>) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DatasetError::MissingColumn(name.to_owned()))
    };
    let id_idx = id_column.map(find).transpose()?;
    let label_idx = label_column.map(find).transpose()?;
    let feature_idx: Vec<usize> = (0..headers.len())
        .filter(|i| Some(*i) != id_idx && Some(*i) != label_idx)
        .collect();

    let mut ids = Vec::new();
    let mut raw_labels = Vec::new();
    let mut data = Vec::new();
    for (n, record) in rdr.records().enumerate() {
        let record = record?;
        let row = n + 1;
        ids.push(match id_idx {
            Some(i) => SampleId(record[i].to_owned()),
            None => SampleId::from(n),
        });
        if let Some(i) = label_idx {
            raw_labels.push(record[i].to_owned());
        }
        for &c in &feature_idx {
            let cell = &record[c];
            let value: f64 = cell.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| DatasetError::NonNumeric {
                row,
                column: headers[c].clone(),
                value: cell.to_owned(),
            })?;
            data.push(value);
        }
    }
    if ids.is_empty() {
        return Err(DatasetError::NoDataRows);
    }

    let features = Matrix::new(ids.len(), feature_idx.len(), data)?;
    let names = feature_idx.iter().map(|&i| headers[i].clone()).collect();
    match label_idx {
        None => Dataset::new(ids, features, None, names),
        Some(_) => {
            let (labels, label_names) = encode_labels(&raw_labels);
            Ok(Dataset::new(ids, features, Some(labels), names)?.with_label_names(label_names))
        }
    }
}

fn encode_labels(raw: &[String]) -> (Vec<usize>, Vec<String>) {
    let numeric: Option<Vec<i64>> = raw.iter().map(|s| s.parse().ok()).collect();
    match numeric {
        Some(values) => {
            let distinct: Vec<i64> = values.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
            let labels = values.iter().map(|v| distinct.binary_search(v).unwrap()).collect();
            (labels, distinct.iter().map(i64::to_string).collect())
        }
        None => {
            let distinct: Vec<&String> = raw.iter().collect::<BTreeSet<_>>().into_iter().collect();
            let labels = raw.iter().map(|v| distinct.binary_search(&v).unwrap()).collect();
            (labels, distinct.into_iter().cloned().collect())
        }
    }
}
