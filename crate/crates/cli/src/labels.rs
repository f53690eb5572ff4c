//! Cluster label CSV files: two columns, `cell_id,cluster`.

use std::collections::HashMap;
use std::path::Path;

use anyhow::{bail, Context};
use scbench_core::metrics::Partition;

pub fn write_labels_csv(
    path: &Path,
    cell_ids: &[String],
    partition: &Partition,
) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    w.write_record(["cell_id", "cluster"])?;
    for (id, label) in cell_ids.iter().zip(partition.labels()) {
        w.write_record([id.as_str(), &label.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Read a labels file and align it to `cell_ids` order. The file must cover
/// exactly the same cell set (any order); raw label values may be arbitrary
/// strings and are densified in first-occurrence order.
pub fn read_labels_csv(path: &Path, cell_ids: &[String]) -> anyhow::Result<Partition> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut by_id: HashMap<String, String> = HashMap::new();
    for record in r.records() {
        let record = record.with_context(|| format!("reading {}", path.display()))?;
        if record.len() < 2 {
            bail!("{}: rows need cell_id and cluster columns", path.display());
        }
        if by_id
            .insert(record[0].to_string(), record[1].to_string())
            .is_some()
        {
            bail!("{}: duplicate cell id {:?}", path.display(), &record[0]);
        }
    }
    if by_id.len() != cell_ids.len() {
        bail!(
            "{}: {} labeled cells but the matrix has {}",
            path.display(),
            by_id.len(),
            cell_ids.len()
        );
    }
    let raw: Vec<&String> = cell_ids
        .iter()
        .map(|id| {
            by_id
                .get(id)
                .ok_or_else(|| anyhow::anyhow!("{}: no label for cell {id:?}", path.display()))
        })
        .collect::<anyhow::Result<_>>()?;
    Ok(Partition::from_raw_labels(raw)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::TempDir;

    #[test]
    fn round_trip_and_alignment() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("labels.csv");
        let ids: Vec<String> = vec!["a".into(), "b".into(), "c".into()];
        let p = Partition::from_labels(vec![1, 0, 1]).unwrap();
        write_labels_csv(&path, &ids, &p).unwrap();

        let back = read_labels_csv(&path, &ids).unwrap();
        assert_eq!(back.labels(), &[0, 1, 0]); // densified, same grouping

        // Different matrix order still aligns by id.
        let reordered: Vec<String> = vec!["c".into(), "a".into(), "b".into()];
        let aligned = read_labels_csv(&path, &reordered).unwrap();
        assert_eq!(aligned.labels(), &[0, 0, 1]);
    }

    #[test]
    fn rejects_mismatched_cell_sets() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("labels.csv");
        let ids: Vec<String> = vec!["a".into(), "b".into()];
        let p = Partition::from_labels(vec![0, 1]).unwrap();
        write_labels_csv(&path, &ids, &p).unwrap();

        let other: Vec<String> = vec!["a".into(), "x".into()];
        assert!(read_labels_csv(&path, &other).is_err());
        let fewer: Vec<String> = vec!["a".into()];
        assert!(read_labels_csv(&path, &fewer).is_err());
    }
}
