//! Long-format longitudinal table: one row per participant-wave.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use super::DataError;

/// One participant-wave observation. `values` is parallel to the owning
/// table's feature-name list; `None` is a missing cell.
#[derive(Debug, Clone, PartialEq)]
pub struct LongRecord {
    pub pid: String,
    pub wave: usize,
    pub values: Vec<Option<f64>>,
}

/// Long-format table. (pid, wave) pairs are unique and every record carries
/// the same feature set; both are enforced at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct LongTable {
    feature_names: Vec<String>,
    records: Vec<LongRecord>,
    targets: BTreeMap<String, u8>,
}

impl LongTable {
    pub fn new(
        feature_names: Vec<String>,
        records: Vec<LongRecord>,
        targets: BTreeMap<String, u8>,
    ) -> Result<Self, DataError> {
        let mut seen = std::collections::HashSet::new();
        for record in &records {
            if record.wave == 0 {
                return Err(DataError::ZeroWave { pid: record.pid.clone() });
            }
            if record.values.len() != feature_names.len() {
                return Err(DataError::FeatureCountMismatch {
                    pid: record.pid.clone(),
                    wave: record.wave,
                    got: record.values.len(),
                    expected: feature_names.len(),
                });
            }
            if !seen.insert((record.pid.clone(), record.wave)) {
                return Err(DataError::DuplicateRecord {
                    pid: record.pid.clone(),
                    wave: record.wave,
                });
            }
        }
        Ok(Self { feature_names, records, targets })
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn records(&self) -> &[LongRecord] {
        &self.records
    }

    pub fn targets(&self) -> &BTreeMap<String, u8> {
        &self.targets
    }

    /// Read a long-format CSV with header `pid,wave,<feature...>[,y]`.
    /// Empty cells are missing values. When the `y` column is present every
    /// row of a participant must carry the same label.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self, DataError> {
        let mut csv = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers = csv.headers()?.clone();
        let cols: Vec<&str> = headers.iter().collect();
        if cols.len() < 2 || cols[0] != "pid" || cols[1] != "wave" {
            return Err(DataError::Parse {
                line: 1,
                msg: "long CSV header must start with pid,wave".into(),
            });
        }
        let has_target = cols.last() == Some(&"y");
        let feature_end = if has_target { cols.len() - 1 } else { cols.len() };
        let feature_names: Vec<String> =
            cols[2..feature_end].iter().map(|s| s.to_string()).collect();

        let mut records = Vec::new();
        let mut targets = BTreeMap::new();
        for (idx, row) in csv.records().enumerate() {
            let line = idx + 2;
            let row = row?;
            if row.len() != cols.len() {
                return Err(DataError::Parse {
                    line,
                    msg: format!("expected {} fields, got {}", cols.len(), row.len()),
                });
            }
            let pid = row[0].to_string();
            let wave: usize = row[1]
                .parse()
                .map_err(|_| DataError::Parse { line, msg: format!("bad wave '{}'", &row[1]) })?;
            let mut values = Vec::with_capacity(feature_names.len());
            for field in row.iter().take(feature_end).skip(2) {
                values.push(parse_cell(field, line)?);
            }
            if has_target {
                let raw = &row[cols.len() - 1];
                if !raw.is_empty() {
                    let label = parse_label(raw, line)?;
                    if let Some(&prev) = targets.get(&pid) {
                        if prev != label {
                            return Err(DataError::Parse {
                                line,
                                msg: format!("conflicting labels for participant {pid}"),
                            });
                        }
                    } else {
                        targets.insert(pid.clone(), label);
                    }
                }
            }
            records.push(LongRecord { pid, wave, values });
        }
        Self::new(feature_names, records, targets)
    }

    pub fn read_csv_path<P: AsRef<Path>>(path: P) -> Result<Self, DataError> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    /// Write the table as `pid,wave,<feature...>,y` (the `y` column is
    /// omitted when no targets exist). Missing cells are written empty.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), DataError> {
        let mut csv = csv::Writer::from_writer(writer);
        let mut header = vec!["pid".to_string(), "wave".to_string()];
        header.extend(self.feature_names.iter().cloned());
        let has_target = !self.targets.is_empty();
        if has_target {
            header.push("y".into());
        }
        csv.write_record(&header)?;
        for record in &self.records {
            let mut row = vec![record.pid.clone(), record.wave.to_string()];
            for value in &record.values {
                row.push(format_cell(*value));
            }
            if has_target {
                row.push(match self.targets.get(&record.pid) {
                    Some(label) => label.to_string(),
                    None => String::new(),
                });
            }
            csv.write_record(&row)?;
        }
        csv.flush()?;
        Ok(())
    }

    pub fn write_csv_path<P: AsRef<Path>>(&self, path: P) -> Result<(), DataError> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

pub(super) fn parse_cell(field: &str, line: usize) -> Result<Option<f64>, DataError> {
    if field.is_empty() {
        return Ok(None);
    }
    let value: f64 = field
        .parse()
        .map_err(|_| DataError::Parse { line, msg: format!("bad numeric cell '{field}'") })?;
    if !value.is_finite() {
        return Err(DataError::Parse { line, msg: format!("non-finite cell '{field}'") });
    }
    Ok(Some(value))
}

pub(super) fn parse_label(field: &str, line: usize) -> Result<u8, DataError> {
    match field {
        "0" => Ok(0),
        "1" => Ok(1),
        other => Err(DataError::Parse { line, msg: format!("label '{other}' is not 0 or 1") }),
    }
}

pub(super) fn format_cell(value: Option<f64>) -> String {
    match value {
        Some(v) => {
            // Integers are the common case for survey data; keep them short.
            if v.fract() == 0.0 && v.abs() < 1e15 {
                format!("{}", v as i64)
            } else {
                format!("{v}")
            }
        }
        None => String::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(pid: &str, wave: usize, values: &[Option<f64>]) -> LongRecord {
        LongRecord { pid: pid.into(), wave, values: values.to_vec() }
    }

    #[test]
    fn rejects_duplicate_participant_wave() {
        let err = LongTable::new(
            vec!["age".into()],
            vec![record("p1", 1, &[Some(1.0)]), record("p1", 1, &[Some(2.0)])],
            BTreeMap::new(),
        )
        .unwrap_err();
        match err {
            DataError::DuplicateRecord { pid, wave } => {
                assert_eq!(pid, "p1");
                assert_eq!(wave, 1);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn csv_round_trip_preserves_missing_cells() {
        let table = LongTable::new(
            vec!["age".into(), "ill".into()],
            vec![
                record("p1", 1, &[Some(56.0), None]),
                record("p1", 2, &[None, Some(1.0)]),
            ],
            BTreeMap::from([("p1".into(), 1u8)]),
        )
        .unwrap();
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        let back = LongTable::read_csv(&buf[..]).unwrap();
        assert_eq!(back, table);
    }

    #[test]
    fn read_rejects_conflicting_labels() {
        let csv = "pid,wave,age,y\np1,1,56,0\np1,2,58,1\n";
        let err = LongTable::read_csv(csv.as_bytes()).unwrap_err();
        assert!(matches!(err, DataError::Parse { line: 3, .. }));
    }

    #[test]
    fn read_without_target_column() {
        let csv = "pid,wave,age\np1,1,56\n";
        let table = LongTable::read_csv(csv.as_bytes()).unwrap();
        assert!(table.targets().is_empty());
        assert_eq!(table.records()[0].values, vec![Some(56.0)]);
    }
}
