//! Training and preference CSV files: `M` level columns followed by `M` gain columns, with a
//! header row (`level_0,...,level_{M-1},gain_0,...,gain_{M-1}`).

use std::path::Path;

use nnhac_core::{BandLevels, TrainingSet};

use crate::{Error, Result};

pub fn header(bands: usize) -> Vec<String> {
    (0..bands)
        .map(|m| format!("level_{m}"))
        .chain((0..bands).map(|m| format!("gain_{m}")))
        .collect()
}

pub fn read_dataset(path: &Path, bands: usize) -> Result<TrainingSet> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::data(path, e.to_string()))?;
    let head = reader
        .headers()
        .map_err(|e| Error::data(path, e.to_string()))?
        .clone();
    if head.len() != 2 * bands {
        return Err(Error::data(
            path,
            format!(
                "expected {} columns ({bands} levels, {bands} gains), header has {}",
                2 * bands,
                head.len()
            ),
        ));
    }
    let labelled = head.iter().enumerate().all(|(i, name)| {
        let prefix = if i < bands { "level" } else { "gain" };
        name.to_ascii_lowercase().starts_with(prefix)
    });
    if !labelled {
        return Err(Error::data(
            path,
            format!(
                "missing or invalid header; expected {}",
                header(bands).join(",")
            ),
        ));
    }
    let mut set = TrainingSet::default();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::data(path, e.to_string()))?;
        let values = record
            .iter()
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::data(path, format!("row {}: {e}", row + 1)))?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::data(
                path,
                format!("row {}: non-finite value", row + 1),
            ));
        }
        let (levels, gains) = values.split_at(bands);
        set.inputs.push(BandLevels::new(levels.to_vec()));
        set.targets.push(gains.to_vec());
    }
    Ok(set)
}

pub fn write_dataset(path: &Path, set: &TrainingSet) -> Result<()> {
    let bands = set.inputs.first().map_or(0, BandLevels::len);
    let mut writer = csv::Writer::from_path(path).map_err(|e| Error::data(path, e.to_string()))?;
    let to_err = |e: csv::Error| Error::data(path, e.to_string());
    writer.write_record(header(bands)).map_err(to_err)?;
    for (x, t) in set.inputs.iter().zip(&set.targets) {
        let row: Vec<String> = x.as_slice().iter().chain(t).map(f64::to_string).collect();
        writer.write_record(row).map_err(to_err)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}
