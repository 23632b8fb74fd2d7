//! Feature-set files: CSV for static vectors, a framed binary container for
//! sequences.
//!
//! The binary container starts with the magic `SNSQ` and a little-endian `u32`
//! version. Each frame is a `u32` metadata length, that many bytes of JSON
//! metadata, `u32` rows, `u32` cols and `rows × cols` little-endian `f64` values.

use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::data::{FeatureRecord, Partition, Provenance, Sample};
use crate::error::{Error, Result};
use crate::nn::DenseMatrix;

const MAGIC: &[u8; 4] = b"SNSQ";
const VERSION: u32 = 1;

fn malformed(path: &Path, reason: impl Into<String>) -> Error {
    Error::Malformed {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn provenance_str(p: Provenance) -> (&'static str, String) {
    match p {
        Provenance::Generated { member } => (p.as_str(), member.to_string()),
        _ => (p.as_str(), String::new()),
    }
}

fn parse_provenance(kind: &str, member: &str) -> Option<Provenance> {
    Some(match kind {
        "real" => Provenance::Real,
        "generated" => Provenance::Generated {
            member: member.parse().ok()?,
        },
        "smote" => Provenance::Smote,
        "transformed" => Provenance::Transformed,
        "replicated" => Provenance::Replicated,
        _ => return None,
    })
}

/// Columns `label,partition,provenance,member,group,f0..f{d-1}`. Values use the
/// shortest round-tripping decimal form.
pub fn write_features_csv(path: impl AsRef<Path>, records: &[FeatureRecord]) -> Result<()> {
    let dim = records.first().map_or(0, |r| r.payload.feature_dim());
    let mut w = csv::Writer::from_path(path.as_ref())?;
    let mut header: Vec<String> = ["label", "partition", "provenance", "member", "group"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((0..dim).map(|i| format!("f{i}")));
    w.write_record(&header)?;
    for r in records {
        let v = r.payload.as_static()?;
        if v.len() != dim {
            return Err(Error::dims("feature row", dim, v.len()));
        }
        let (kind, member) = provenance_str(r.provenance);
        let mut row = vec![
            r.label.to_string(),
            r.partition.as_str().to_string(),
            kind.to_string(),
            member,
            r.group.map_or(String::new(), |g| g.to_string()),
        ];
        row.extend(v.iter().map(|x| x.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_features_csv(path: impl AsRef<Path>) -> Result<Vec<FeatureRecord>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path)?;
    let width = reader.headers()?.len();
    if width < 5 {
        return Err(malformed(path, "expected label,partition,provenance,member,group columns"));
    }
    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let bad = |what: &str| malformed(path, format!("row {i}: bad {what}"));
        let label = row[0].parse().map_err(|_| bad("label"))?;
        let partition = Partition::parse(&row[1]).ok_or_else(|| bad("partition"))?;
        let provenance = parse_provenance(&row[2], &row[3]).ok_or_else(|| bad("provenance"))?;
        let group = if row[4].is_empty() {
            None
        } else {
            Some(row[4].parse().map_err(|_| bad("group"))?)
        };
        let values: Vec<f64> = row
            .iter()
            .skip(5)
            .map(|v| v.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad("value"))?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(bad("non-finite value"));
        }
        out.push(FeatureRecord {
            payload: Sample::Static(values),
            label,
            partition,
            provenance,
            group,
        });
    }
    Ok(out)
}

/// Writes `(metadata, matrix)` frames to the binary container.
pub fn write_frames<M: Serialize>(path: impl AsRef<Path>, frames: &[(M, &DenseMatrix)]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path.as_ref())?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    for (meta, m) in frames {
        let json = serde_json::to_vec(meta)?;
        w.write_all(&(json.len() as u32).to_le_bytes())?;
        w.write_all(&json)?;
        w.write_all(&(m.rows() as u32).to_le_bytes())?;
        w.write_all(&(m.cols() as u32).to_le_bytes())?;
        for v in m.values() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_u32(r: &mut impl Read) -> std::io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub fn read_frames<M: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<(M, DenseMatrix)>> {
    let path = path.as_ref();
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|_| malformed(path, "missing header"))?;
    if &magic != MAGIC {
        return Err(malformed(path, "not a frame container"));
    }
    let version = read_u32(&mut r).map_err(|_| malformed(path, "missing version"))?;
    if version != VERSION {
        return Err(malformed(path, format!("unsupported version {version}")));
    }
    let mut out = Vec::new();
    loop {
        let len = match read_u32(&mut r) {
            Ok(n) => n as usize,
            Err(e) if e.kind() == ErrorKind::UnexpectedEof => break,
            Err(e) => return Err(e.into()),
        };
        let truncated = |_| malformed(path, format!("frame {} truncated", out.len()));
        let mut json = vec![0u8; len];
        r.read_exact(&mut json).map_err(truncated)?;
        let meta: M = serde_json::from_slice(&json)?;
        let rows = read_u32(&mut r).map_err(truncated)? as usize;
        let cols = read_u32(&mut r).map_err(truncated)? as usize;
        let mut values = vec![0.0; rows * cols];
        let mut b = [0u8; 8];
        for v in &mut values {
            r.read_exact(&mut b).map_err(truncated)?;
            *v = f64::from_le_bytes(b);
        }
        out.push((meta, DenseMatrix::from_vec(rows, cols, values)?));
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct RecordMeta {
    label: usize,
    partition: Partition,
    provenance: Provenance,
    group: Option<usize>,
}

pub fn write_sequences(path: impl AsRef<Path>, records: &[FeatureRecord]) -> Result<()> {
    let frames = records
        .iter()
        .map(|r| {
            Ok((
                RecordMeta {
                    label: r.label,
                    partition: r.partition,
                    provenance: r.provenance,
                    group: r.group,
                },
                r.payload.as_sequence()?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    write_frames(path, &frames)
}

pub fn read_sequences(path: impl AsRef<Path>) -> Result<Vec<FeatureRecord>> {
    Ok(read_frames::<RecordMeta>(path)?
        .into_iter()
        .map(|(m, x)| FeatureRecord {
            payload: Sample::Sequence(x),
            label: m.label,
            partition: m.partition,
            provenance: m.provenance,
            group: m.group,
        })
        .collect())
}

/// Reads a feature file, picking the format from its first bytes.
pub fn read_feature_file(path: impl AsRef<Path>) -> Result<Vec<FeatureRecord>> {
    let path = path.as_ref();
    let mut head = [0u8; 4];
    let n = File::open(path)?.read(&mut head)?;
    if n == 4 && &head == MAGIC {
        read_sequences(path)
    } else {
        read_features_csv(path)
    }
}

/// Writes CSV for static records and the frame container for sequences.
pub fn write_feature_file(path: impl AsRef<Path>, records: &[FeatureRecord]) -> Result<()> {
    match records.first().map(|r| &r.payload) {
        Some(Sample::Sequence(_)) => write_sequences(path, records),
        _ => write_features_csv(path, records),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let records = vec![
            FeatureRecord {
                payload: Sample::Static(vec![0.1, -1e-300, 3.0 / 7.0]),
                label: 2,
                partition: Partition::Devel,
                provenance: Provenance::Generated { member: 3 },
                group: Some(7),
            },
            FeatureRecord::real(Sample::Static(vec![1.0, 2.0, f64::MIN_POSITIVE]), 0, Partition::Train),
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        write_feature_file(&path, &records).unwrap();
        assert_eq!(read_feature_file(&path).unwrap(), records);
    }

    #[test]
    fn sequence_round_trip_is_exact() {
        let m = DenseMatrix::from_vec(3, 2, vec![0.1, 0.2, 0.3, -0.4, 1e10, 7.0 / 3.0]).unwrap();
        let mut r = FeatureRecord::real(Sample::Sequence(m), 1, Partition::Test);
        r.group = Some(4);
        let records = vec![r.clone(), FeatureRecord { provenance: Provenance::Smote, ..r }];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.bin");
        write_feature_file(&path, &records).unwrap();
        assert_eq!(read_feature_file(&path).unwrap(), records);
    }

    #[test]
    fn truncated_container_is_malformed() {
        let m = DenseMatrix::zeros(4, 4);
        let records = vec![FeatureRecord::real(Sample::Sequence(m), 0, Partition::Train)];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.bin");
        write_sequences(&path, &records).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(read_sequences(&path), Err(Error::Malformed { .. })));
    }
}
