//! Short/wide-format table: one row per participant, one column per
//! (feature, wave) pair in feature-major order.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use super::long::{format_cell, parse_cell, parse_label, LongRecord, LongTable};
use super::DataError;
use crate::matrix::LabeledMatrix;

/// Donor wave for each of the five waves when filling missing values:
/// w1 from w2, w2 from w1, w3 from w4, w4 from w5 and w5 from w4.
const IMPUTE_DONOR: [usize; 5] = [2, 1, 4, 5, 4];

/// Wide table with columns `[f1w1..f1wW, f2w1..f2wW, ...]`. The ascending
/// wave order inside each feature block is what makes a width-W, stride-W
/// convolution read exactly one feature at a time.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveTable {
    participant_ids: Vec<String>,
    feature_names: Vec<String>,
    wave_count: usize,
    values: Vec<Option<f64>>,
    target: Option<Vec<u8>>,
}

impl WaveTable {
    pub fn new(
        participant_ids: Vec<String>,
        feature_names: Vec<String>,
        wave_count: usize,
        values: Vec<Option<f64>>,
        target: Option<Vec<u8>>,
    ) -> Result<Self, DataError> {
        assert!(wave_count >= 1, "wave_count must be >= 1");
        let cols = feature_names.len() * wave_count;
        if values.len() != participant_ids.len() * cols {
            return Err(DataError::Matrix(crate::matrix::MatrixError::ShapeMismatch {
                len: values.len(),
                rows: participant_ids.len(),
                cols,
            }));
        }
        if let Some(target) = &target {
            if target.len() != participant_ids.len() {
                return Err(DataError::Matrix(crate::matrix::MatrixError::LabelLengthMismatch {
                    labels: target.len(),
                    rows: participant_ids.len(),
                }));
            }
        }
        Ok(Self { participant_ids, feature_names, wave_count, values, target })
    }

    pub fn n_rows(&self) -> usize {
        self.participant_ids.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn wave_count(&self) -> usize {
        self.wave_count
    }

    pub fn n_cols(&self) -> usize {
        self.feature_names.len() * self.wave_count
    }

    pub fn participant_ids(&self) -> &[String] {
        &self.participant_ids
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn target(&self) -> Option<&[u8]> {
        self.target.as_deref()
    }

    /// Flat column index of (feature, wave); `wave` is 1-based.
    pub fn col_index(&self, feature: usize, wave: usize) -> usize {
        debug_assert!(wave >= 1 && wave <= self.wave_count);
        feature * self.wave_count + (wave - 1)
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|f| f == name)
    }

    /// Column range covering every wave of one feature.
    pub fn feature_columns(&self, feature: usize) -> std::ops::Range<usize> {
        feature * self.wave_count..(feature + 1) * self.wave_count
    }

    pub fn cell(&self, row: usize, feature: usize, wave: usize) -> Option<f64> {
        self.values[row * self.n_cols() + self.col_index(feature, wave)]
    }

    pub fn row(&self, row: usize) -> &[Option<f64>] {
        let cols = self.n_cols();
        &self.values[row * cols..(row + 1) * cols]
    }

    /// Pivot a long table into wide format. Only participants with exactly
    /// one record for each wave `1..=wave_count` are kept; the rest are
    /// dropped and counted (second return value).
    pub fn pivot_long_to_wide(
        long: &LongTable,
        wave_count: usize,
    ) -> Result<(Self, usize), DataError> {
        assert!(wave_count >= 1, "wave_count must be >= 1");
        let n_features = long.feature_names().len();

        // Group record indices by participant, preserving first appearance.
        let mut order: Vec<&str> = Vec::new();
        let mut by_pid: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, record) in long.records().iter().enumerate() {
            let entry = by_pid.entry(&record.pid).or_default();
            if entry.is_empty() {
                order.push(&record.pid);
            }
            entry.push(i);
        }

        let mut participant_ids = Vec::new();
        let mut values = Vec::new();
        let mut dropped = 0usize;
        for pid in order {
            let indices = &by_pid[pid];
            let mut waves: Vec<usize> =
                indices.iter().map(|&i| long.records()[i].wave).collect();
            waves.sort_unstable();
            let complete = waves.len() == wave_count && waves.iter().copied().eq(1..=wave_count);
            if !complete {
                dropped += 1;
                continue;
            }
            participant_ids.push(pid.to_string());
            let start = values.len();
            values.resize(start + n_features * wave_count, None);
            for &i in indices {
                let record = &long.records()[i];
                for (feature, value) in record.values.iter().enumerate() {
                    values[start + feature * wave_count + (record.wave - 1)] = *value;
                }
            }
        }

        let target = if long.targets().is_empty() {
            None
        } else {
            let mut labels = Vec::with_capacity(participant_ids.len());
            for pid in &participant_ids {
                match long.targets().get(pid) {
                    Some(&label) => labels.push(label),
                    None => return Err(DataError::MissingTarget { pid: pid.clone() }),
                }
            }
            Some(labels)
        };

        let table = Self::new(
            participant_ids,
            long.feature_names().to_vec(),
            wave_count,
            values,
            target,
        )?;
        Ok((table, dropped))
    }

    /// Expand back to long format (inverse of `pivot_long_to_wide` for
    /// complete participants).
    pub fn to_long(&self) -> LongTable {
        let mut records = Vec::with_capacity(self.n_rows() * self.wave_count);
        for row in 0..self.n_rows() {
            for wave in 1..=self.wave_count {
                let values = (0..self.n_features()).map(|f| self.cell(row, f, wave)).collect();
                records.push(LongRecord {
                    pid: self.participant_ids[row].clone(),
                    wave,
                    values,
                });
            }
        }
        let targets = match &self.target {
            Some(target) => self
                .participant_ids
                .iter()
                .cloned()
                .zip(target.iter().copied())
                .collect(),
            None => BTreeMap::new(),
        };
        LongTable::new(self.feature_names.clone(), records, targets)
            .expect("wide table is structurally valid")
    }

    /// Keep a feature (its whole wave block) iff the missing fraction of its
    /// `wave` column is strictly below `threshold`. Block order is preserved.
    pub fn filter_features_by_missingness(
        &self,
        wave: usize,
        threshold: f64,
    ) -> Result<Self, DataError> {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(DataError::BadThreshold { got: threshold });
        }
        if wave < 1 || wave > self.wave_count {
            return Err(DataError::WaveOutOfRange { wave, waves: self.wave_count });
        }
        let n = self.n_rows();
        let keep: Vec<usize> = (0..self.n_features())
            .filter(|&f| {
                let missing = (0..n).filter(|&r| self.cell(r, f, wave).is_none()).count();
                let fraction = if n == 0 { 0.0 } else { missing as f64 / n as f64 };
                fraction < threshold
            })
            .collect();
        Ok(self.select_features(&keep))
    }

    fn select_features(&self, features: &[usize]) -> Self {
        let cols = self.n_cols();
        let mut values = Vec::with_capacity(self.n_rows() * features.len() * self.wave_count);
        for row in 0..self.n_rows() {
            let base = row * cols;
            for &f in features {
                values.extend_from_slice(
                    &self.values[base + f * self.wave_count..base + (f + 1) * self.wave_count],
                );
            }
        }
        Self {
            participant_ids: self.participant_ids.clone(),
            feature_names: features.iter().map(|&f| self.feature_names[f].clone()).collect(),
            wave_count: self.wave_count,
            values,
            target: self.target.clone(),
        }
    }

    /// Fill missing cells from the adjacent wave of the same feature, one
    /// pass, donors read from the original (pre-pass) values. Cells whose
    /// donor is also missing stay missing; the count of cells still missing
    /// afterwards is returned. Defined for 5-wave tables only.
    pub fn impute_adjacent_waves(&self) -> Result<(Self, usize), DataError> {
        if self.wave_count != IMPUTE_DONOR.len() {
            return Err(DataError::UnsupportedWaveCount { got: self.wave_count });
        }
        let mut out = self.clone();
        let mut remaining = 0usize;
        let cols = self.n_cols();
        for row in 0..self.n_rows() {
            let base = row * cols;
            for feature in 0..self.n_features() {
                let block = base + feature * self.wave_count;
                for wave in 1..=self.wave_count {
                    if self.values[block + wave - 1].is_none() {
                        let donor = self.values[block + IMPUTE_DONOR[wave - 1] - 1];
                        out.values[block + wave - 1] = donor;
                        if donor.is_none() {
                            remaining += 1;
                        }
                    }
                }
            }
        }
        Ok((out, remaining))
    }

    /// Drop rows that still contain missing cells (e.g. after imputation
    /// when the donor was missing too). Returns the kept table and the
    /// number of dropped rows.
    pub fn drop_incomplete_rows(&self) -> (Self, usize) {
        let keep: Vec<usize> = (0..self.n_rows())
            .filter(|&r| self.row(r).iter().all(|cell| cell.is_some()))
            .collect();
        let dropped = self.n_rows() - keep.len();
        (self.select_rows(&keep), dropped)
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let cols = self.n_cols();
        let mut values = Vec::with_capacity(rows.len() * cols);
        for &r in rows {
            values.extend_from_slice(&self.values[r * cols..(r + 1) * cols]);
        }
        Self {
            participant_ids: rows.iter().map(|&r| self.participant_ids[r].clone()).collect(),
            feature_names: self.feature_names.clone(),
            wave_count: self.wave_count,
            values,
            target: self
                .target
                .as_ref()
                .map(|t| rows.iter().map(|&r| t[r]).collect()),
        }
    }

    pub fn count_missing(&self) -> usize {
        self.values.iter().filter(|cell| cell.is_none()).count()
    }

    /// Lower into a dense labeled matrix. Requires a target and no missing
    /// cells.
    pub fn to_labeled_matrix(&self) -> Result<LabeledMatrix, DataError> {
        let target = self.target.as_ref().ok_or(DataError::NoTarget)?;
        let cols = self.n_cols();
        let mut x = Vec::with_capacity(self.values.len());
        for (i, cell) in self.values.iter().enumerate() {
            match cell {
                Some(value) => x.push(*value),
                None => {
                    let row = i / cols;
                    let col = i % cols;
                    return Err(DataError::MissingValue {
                        pid: self.participant_ids[row].clone(),
                        feature: self.feature_names[col / self.wave_count].clone(),
                        wave: col % self.wave_count + 1,
                    });
                }
            }
        }
        Ok(LabeledMatrix::new(x, target.clone(), cols)?)
    }

    /// Read a wide CSV with header `pid,<feature>_w<k>,...[,y]`, feature
    /// major with ascending waves.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self, DataError> {
        let mut csv = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers = csv.headers()?.clone();
        let cols: Vec<&str> = headers.iter().collect();
        if cols.is_empty() || cols[0] != "pid" {
            return Err(DataError::Parse { line: 1, msg: "wide CSV header must start with pid".into() });
        }
        let has_target = cols.last() == Some(&"y");
        let value_cols = &cols[1..if has_target { cols.len() - 1 } else { cols.len() }];
        let (feature_names, wave_count) = parse_wide_header(value_cols)?;

        let mut participant_ids = Vec::new();
        let mut values = Vec::new();
        let mut target = if has_target { Some(Vec::new()) } else { None };
        for (idx, row) in csv.records().enumerate() {
            let line = idx + 2;
            let row = row?;
            if row.len() != cols.len() {
                return Err(DataError::Parse {
                    line,
                    msg: format!("expected {} fields, got {}", cols.len(), row.len()),
                });
            }
            participant_ids.push(row[0].to_string());
            for field in row.iter().take(1 + value_cols.len()).skip(1) {
                values.push(parse_cell(field, line)?);
            }
            if let Some(target) = &mut target {
                target.push(parse_label(&row[cols.len() - 1], line)?);
            }
        }
        Self::new(participant_ids, feature_names, wave_count, values, target)
    }

    pub fn read_csv_path<P: AsRef<Path>>(path: P) -> Result<Self, DataError> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), DataError> {
        let mut csv = csv::Writer::from_writer(writer);
        let mut header = vec!["pid".to_string()];
        for feature in &self.feature_names {
            for wave in 1..=self.wave_count {
                header.push(format!("{feature}_w{wave}"));
            }
        }
        if self.target.is_some() {
            header.push("y".into());
        }
        csv.write_record(&header)?;
        for row in 0..self.n_rows() {
            let mut record = vec![self.participant_ids[row].clone()];
            for cell in self.row(row) {
                record.push(format_cell(*cell));
            }
            if let Some(target) = &self.target {
                record.push(target[row].to_string());
            }
            csv.write_record(&record)?;
        }
        csv.flush()?;
        Ok(())
    }

    pub fn write_csv_path<P: AsRef<Path>>(&self, path: P) -> Result<(), DataError> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// Recover feature names and wave count from `<feature>_w<k>` column names,
/// insisting on feature-major order with ascending, contiguous waves.
fn parse_wide_header(cols: &[&str]) -> Result<(Vec<String>, usize), DataError> {
    let bad = |msg: String| DataError::Parse { line: 1, msg };
    let mut parsed = Vec::with_capacity(cols.len());
    for col in cols {
        let (name, wave) = col
            .rsplit_once("_w")
            .and_then(|(name, wave)| wave.parse::<usize>().ok().map(|w| (name, w)))
            .ok_or_else(|| bad(format!("column '{col}' is not of the form <feature>_w<k>")))?;
        if wave == 0 {
            return Err(bad(format!("column '{col}' has wave 0")));
        }
        parsed.push((name.to_string(), wave));
    }
    if parsed.is_empty() {
        return Err(bad("wide CSV has no value columns".into()));
    }
    let wave_count = parsed.iter().take_while(|(n, _)| *n == parsed[0].0).count();
    if cols.len() % wave_count != 0 {
        return Err(bad("column count is not a multiple of the wave count".into()));
    }
    let mut feature_names = Vec::new();
    for chunk in parsed.chunks(wave_count) {
        for (i, (name, wave)) in chunk.iter().enumerate() {
            if *name != chunk[0].0 || *wave != i + 1 {
                return Err(bad(format!(
                    "columns are not feature-major with ascending waves near '{}_w{}'",
                    name, wave
                )));
            }
        }
        feature_names.push(chunk[0].0.clone());
    }
    Ok((feature_names, wave_count))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_from_csv(text: &str) -> WaveTable {
        WaveTable::read_csv(text.as_bytes()).unwrap()
    }

    /// Three participants, three features, three waves: the worked
    /// short/long-format example.
    fn example_long() -> LongTable {
        let csv = "\
pid,wave,age,sex,illness,y
P1,1,56,1,0,0
P1,2,58,1,1,0
P1,3,60,1,1,0
P2,1,62,0,0,0
P2,2,64,0,0,0
P2,3,66,0,1,0
P3,1,70,1,1,1
P3,2,72,1,1,1
P3,3,74,1,1,1
";
        LongTable::read_csv(csv.as_bytes()).unwrap()
    }

    #[test]
    fn pivot_matches_worked_example() {
        let (wide, dropped) = WaveTable::pivot_long_to_wide(&example_long(), 3).unwrap();
        assert_eq!(dropped, 0);
        assert_eq!(wide.participant_ids(), ["P1", "P2", "P3"]);
        assert_eq!(wide.feature_names(), ["age", "sex", "illness"]);
        let expect = |row: usize, values: [f64; 9]| {
            for (col, v) in values.iter().enumerate() {
                assert_eq!(wide.row(row)[col], Some(*v));
            }
        };
        expect(0, [56.0, 58.0, 60.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0]);
        expect(1, [62.0, 64.0, 66.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        expect(2, [70.0, 72.0, 74.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0]);
        assert_eq!(wide.target(), Some(&[0u8, 0, 1][..]));
    }

    #[test]
    fn pivot_single_cell_identity() {
        let long = LongTable::read_csv("pid,wave,a\np,1,7\n".as_bytes()).unwrap();
        let (wide, dropped) = WaveTable::pivot_long_to_wide(&long, 1).unwrap();
        assert_eq!(dropped, 0);
        assert_eq!(wide.n_rows(), 1);
        assert_eq!(wide.n_cols(), 1);
        assert_eq!(wide.cell(0, 0, 1), Some(7.0));
    }

    #[test]
    fn pivot_drops_incomplete_participants() {
        let csv = "\
pid,wave,a
p1,1,1
p1,2,2
p1,3,3
p2,1,4
p2,2,5
p3,1,6
p3,2,7
p3,3,8
";
        let long = LongTable::read_csv(csv.as_bytes()).unwrap();
        let (wide, dropped) = WaveTable::pivot_long_to_wide(&long, 3).unwrap();
        assert_eq!(dropped, 1);
        assert_eq!(wide.participant_ids(), ["p1", "p3"]);
    }

    #[test]
    fn pivot_round_trip_through_long() {
        let (wide, _) = WaveTable::pivot_long_to_wide(&example_long(), 3).unwrap();
        let (again, dropped) = WaveTable::pivot_long_to_wide(&wide.to_long(), 3).unwrap();
        assert_eq!(dropped, 0);
        assert_eq!(again, wide);
    }

    #[test]
    fn missingness_filter_tests_reference_wave_only() {
        // 100 rows, feature "a": 3 missing in wave 1 -> dropped at 0.03 (not < 0.03).
        // Feature "b": 2 missing in wave 1 but 50 in wave 3 -> retained.
        let mut ids = Vec::new();
        let mut values = Vec::new();
        for i in 0..100 {
            ids.push(format!("p{i}"));
            let a1 = if i < 3 { None } else { Some(1.0) };
            let b1 = if i < 2 { None } else { Some(1.0) };
            let b3 = if i < 50 { None } else { Some(1.0) };
            values.extend_from_slice(&[a1, Some(1.0), Some(1.0), b1, Some(1.0), b3]);
        }
        let table =
            WaveTable::new(ids, vec!["a".into(), "b".into()], 3, values, None).unwrap();
        let filtered = table.filter_features_by_missingness(1, 0.03).unwrap();
        assert_eq!(filtered.feature_names(), ["b"]);

        // Zero missing in the reference wave is always retained.
        let all = table.filter_features_by_missingness(2, 0.03).unwrap();
        assert_eq!(all.feature_names(), ["a", "b"]);
    }

    #[test]
    fn impute_follows_donor_map() {
        let csv = "pid,a_w1,a_w2,a_w3,a_w4,a_w5\np,,3,,,7\n";
        let table = table_from_csv(csv);
        let (imputed, remaining) = table.impute_adjacent_waves().unwrap();
        let got: Vec<Option<f64>> = imputed.row(0).to_vec();
        assert_eq!(got, vec![Some(3.0), Some(3.0), None, Some(7.0), Some(7.0)]);
        assert_eq!(remaining, 1);
    }

    #[test]
    fn impute_no_missing_is_identity() {
        let csv = "pid,a_w1,a_w2,a_w3,a_w4,a_w5\np,1,2,3,4,5\n";
        let table = table_from_csv(csv);
        let (imputed, remaining) = table.impute_adjacent_waves().unwrap();
        assert_eq!(imputed, table);
        assert_eq!(remaining, 0);
    }

    #[test]
    fn impute_mutual_missing_donors_stay_missing() {
        let csv = "pid,a_w1,a_w2,a_w3,a_w4,a_w5\np,,,1,1,1\n";
        let table = table_from_csv(csv);
        let (imputed, remaining) = table.impute_adjacent_waves().unwrap();
        let got: Vec<Option<f64>> = imputed.row(0).to_vec();
        assert_eq!(got, vec![None, None, Some(1.0), Some(1.0), Some(1.0)]);
        assert_eq!(remaining, 2);
    }

    #[test]
    fn impute_rejects_other_wave_counts() {
        let csv = "pid,a_w1,a_w2\np,1,\n";
        let table = table_from_csv(csv);
        let err = table.impute_adjacent_waves().unwrap_err();
        assert!(matches!(err, DataError::UnsupportedWaveCount { got: 2 }));
    }

    #[test]
    fn wide_csv_round_trip() {
        let csv = "pid,age_w1,age_w2,ill_w1,ill_w2,y\np1,56,58,0,1,0\np2,60,,1,1,1\n";
        let table = table_from_csv(csv);
        assert_eq!(table.wave_count(), 2);
        assert_eq!(table.cell(1, 0, 2), None);
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        assert_eq!(WaveTable::read_csv(&buf[..]).unwrap(), table);
    }

    #[test]
    fn wide_header_must_be_feature_major() {
        let csv = "pid,a_w1,b_w1,a_w2,b_w2\np,1,2,3,4\n";
        let err = WaveTable::read_csv(csv.as_bytes()).unwrap_err();
        assert!(matches!(err, DataError::Parse { .. }));
    }

    #[test]
    fn to_matrix_requires_complete_cells_and_target() {
        let with_missing = table_from_csv("pid,a_w1,y\np1,,1\n");
        assert!(matches!(
            with_missing.to_labeled_matrix().unwrap_err(),
            DataError::MissingValue { .. }
        ));
        let no_target = table_from_csv("pid,a_w1\np1,1\n");
        assert!(matches!(no_target.to_labeled_matrix().unwrap_err(), DataError::NoTarget));
    }

    #[test]
    fn drop_incomplete_rows_counts() {
        let table = table_from_csv("pid,a_w1,y\np1,1,0\np2,,1\np3,3,0\n");
        let (kept, dropped) = table.drop_incomplete_rows();
        assert_eq!(dropped, 1);
        assert_eq!(kept.participant_ids(), ["p1", "p3"]);
        assert_eq!(kept.target(), Some(&[0u8, 0][..]));
    }
}
