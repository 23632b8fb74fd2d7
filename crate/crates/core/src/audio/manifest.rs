use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::Partition;
use crate::error::{Error, Result};

/// One manifest row: `file,label,partition`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub label: String,
    pub partition: Partition,
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h.trim() == name).ok_or_else(|| Error::Malformed {
            path: path.to_path_buf(),
            reason: format!("missing column {name:?}"),
        })
    };
    let (f, l, p) = (col("file")?, col("label")?, col("partition")?);
    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let partition = Partition::parse(&row[p]).ok_or_else(|| Error::Malformed {
            path: path.to_path_buf(),
            reason: format!("row {i}: unknown partition {:?}", &row[p]),
        })?;
        out.push(ManifestEntry {
            file: row[f].trim().to_string(),
            label: row[l].trim().to_string(),
            partition,
        });
    }
    Ok(out)
}

pub fn write_manifest(path: impl AsRef<Path>, entries: &[ManifestEntry]) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref())?;
    for e in entries {
        w.serialize(e)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_dev_alias() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let entries = vec![
            ManifestEntry { file: "a.wav".into(), label: "V".into(), partition: Partition::Train },
            ManifestEntry { file: "b.wav".into(), label: "E".into(), partition: Partition::Test },
        ];
        write_manifest(&path, &entries).unwrap();
        assert_eq!(read_manifest(&path).unwrap(), entries);
        std::fs::write(&path, "label,file,partition\nO,c.wav,dev\n").unwrap();
        assert_eq!(read_manifest(&path).unwrap()[0].partition, Partition::Devel);
        std::fs::write(&path, "file,label,partition\nc.wav,O,holdout\n").unwrap();
        assert!(read_manifest(&path).is_err());
    }
}
