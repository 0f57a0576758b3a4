//! Seeded stratified train/holdout splitting.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{DataError, WaveTable};

#[derive(Debug, Clone)]
pub struct SplitResult {
    pub train: WaveTable,
    pub holdout: WaveTable,
    pub seed: u64,
}

/// Split rows into train/holdout so that each class is represented in the
/// train set in proportion `train_fraction`, up to rounding.
///
/// Rounding rule: per class, round half up; if the per-class counts do not
/// sum to round-half-up(n * fraction), the class with the largest rounding
/// error in the correcting direction is adjusted by one (ties go to class
/// 0). Row assignment within a class is a seeded shuffle; output tables
/// keep the input row order.
pub fn stratified_split(
    table: &WaveTable,
    train_fraction: f64,
    seed: u64,
) -> Result<SplitResult, DataError> {
    let target = table.target().ok_or(DataError::NoTarget)?;
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DataError::BadFraction { got: train_fraction });
    }
    let mut class_rows: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (row, &label) in target.iter().enumerate() {
        class_rows[label as usize].push(row);
    }
    for label in 0..2u8 {
        if class_rows[label as usize].is_empty() {
            return Err(DataError::EmptyClass { label });
        }
    }

    let counts = [class_rows[0].len(), class_rows[1].len()];
    let mut take = [
        round_half_up(counts[0] as f64 * train_fraction),
        round_half_up(counts[1] as f64 * train_fraction),
    ];
    let desired_total = round_half_up(target.len() as f64 * train_fraction);
    while take[0] + take[1] != desired_total {
        let errors = [
            take[0] as f64 - counts[0] as f64 * train_fraction,
            take[1] as f64 - counts[1] as f64 * train_fraction,
        ];
        if take[0] + take[1] > desired_total {
            let class = if errors[0] >= errors[1] { 0 } else { 1 };
            take[class] -= 1;
        } else {
            let class = if errors[0] <= errors[1] { 0 } else { 1 };
            take[class] += 1;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_rows = Vec::new();
    let mut holdout_rows = Vec::new();
    for (class, rows) in class_rows.iter_mut().enumerate() {
        rows.shuffle(&mut rng);
        train_rows.extend_from_slice(&rows[..take[class]]);
        holdout_rows.extend_from_slice(&rows[take[class]..]);
    }
    train_rows.sort_unstable();
    holdout_rows.sort_unstable();

    Ok(SplitResult {
        train: table.select_rows(&train_rows),
        holdout: table.select_rows(&holdout_rows),
        seed,
    })
}

fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::WaveTable;

    fn table(n: usize, positives: usize) -> WaveTable {
        let ids = (0..n).map(|i| format!("p{i}")).collect();
        let values = (0..n).map(|i| Some(i as f64)).collect();
        let target = (0..n).map(|i| u8::from(i < positives)).collect();
        WaveTable::new(ids, vec!["x".into()], 1, values, Some(target)).unwrap()
    }

    #[test]
    fn preserves_class_proportions_exactly() {
        let split = stratified_split(&table(1000, 10), 0.8, 7).unwrap();
        assert_eq!(split.train.n_rows(), 800);
        assert_eq!(split.holdout.n_rows(), 200);
        let positives = |t: &WaveTable| t.target().unwrap().iter().filter(|&&y| y == 1).count();
        assert_eq!(positives(&split.train), 8);
        assert_eq!(positives(&split.holdout), 2);
    }

    #[test]
    fn double_split_follows_rounding_rule() {
        // 800 rows, 8 positives -> 792 * 0.8 = 633.6 -> 634; 8 * 0.8 = 6.4 -> 6.
        let split = stratified_split(&table(1000, 10), 0.8, 7).unwrap();
        let inner = stratified_split(&split.train, 0.8, 8).unwrap();
        assert_eq!(inner.train.n_rows(), 640);
        let positives = inner.train.target().unwrap().iter().filter(|&&y| y == 1).count();
        assert_eq!(positives, 6);
    }

    #[test]
    fn deterministic_in_seed() {
        let input = table(100, 20);
        let a = stratified_split(&input, 0.8, 99).unwrap();
        let b = stratified_split(&input, 0.8, 99).unwrap();
        assert_eq!(a.train, b.train);
        assert_eq!(a.holdout, b.holdout);
        let c = stratified_split(&input, 0.8, 100).unwrap();
        assert_ne!(a.train.participant_ids(), c.train.participant_ids());
    }

    #[test]
    fn rows_are_disjoint_and_cover_input() {
        let input = table(101, 13);
        let split = stratified_split(&input, 0.7, 3).unwrap();
        let mut ids: Vec<&String> = split
            .train
            .participant_ids()
            .iter()
            .chain(split.holdout.participant_ids())
            .collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), input.n_rows());
    }

    #[test]
    fn rejects_single_class_naming_it() {
        let ids = vec!["a".into(), "b".into()];
        let t = WaveTable::new(ids, vec!["x".into()], 1, vec![Some(1.0), Some(2.0)], Some(vec![1, 1]))
            .unwrap();
        match stratified_split(&t, 0.5, 0).unwrap_err() {
            DataError::EmptyClass { label } => assert_eq!(label, 0),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_degenerate_fraction() {
        let t = table(10, 5);
        assert!(matches!(
            stratified_split(&t, 1.0, 0).unwrap_err(),
            DataError::BadFraction { .. }
        ));
    }
}
