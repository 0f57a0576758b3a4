//! Property tests for the resamplers: segment geometry of synthetics,
//! duplicate-only ROS, cleaner guarantees, balance contracts, determinism
//! and the neighbour index against a brute-force scan.

use proptest::prelude::*;

use wavecnn::resample::{
    adasyn, edited_nearest_neighbours, random_oversample, smote, squared_distance, tomek_links,
    Method, NeighborModel, ResampleParams, TomekPolicy,
};
use wavecnn::LabeledMatrix;

/// Strategy for a small two-class instance with label 1 as the minority
/// (possibly at parity). Values are drawn from a coarse 0.25 grid so exact
/// distance ties are common.
fn instance() -> impl Strategy<Value = LabeledMatrix> {
    (1..5usize, 2..12usize, 0..28usize).prop_flat_map(|(d, minority, extra)| {
        let majority = minority + extra;
        let n = minority + majority;
        proptest::collection::vec(-8..8i32, n * d).prop_map(move |cells| {
            let x: Vec<f64> = cells.into_iter().map(|v| f64::from(v) * 0.25).collect();
            let y: Vec<u8> = (0..n).map(|i| u8::from(i < minority)).collect();
            LabeledMatrix::new(x, y, d).unwrap()
        })
    })
}

/// True when `point` lies on the segment from `a` to `b`: a single lambda in
/// [0, 1] reproduces every coordinate within 1e-9. Duplicate endpoints fall
/// back to an exact equality check.
fn on_segment(point: &[f64], a: &[f64], b: &[f64]) -> bool {
    let mut lambda = None;
    for ((&p, &ai), &bi) in point.iter().zip(a).zip(b) {
        let span = bi - ai;
        if span.abs() < 1e-12 {
            if (p - ai).abs() > 1e-9 {
                return false;
            }
            continue;
        }
        let here = (p - ai) / span;
        match lambda {
            None => lambda = Some(here),
            Some(l) if (l - here).abs() > 1e-9 => return false,
            Some(_) => {}
        }
    }
    lambda.is_none_or(|l| (-1e-9..=1.0 + 1e-9).contains(&l))
}

fn synthetic_rows_lie_on_minority_segments(
    before: &LabeledMatrix,
    after: &LabeledMatrix,
) -> Result<(), TestCaseError> {
    let minority: Vec<&[f64]> =
        before.indices_of(1).iter().map(|&i| before.row(i)).collect();
    for row in before.n_rows()..after.n_rows() {
        prop_assert_eq!(after.label(row), 1);
        let point = after.row(row);
        let ok = minority.iter().enumerate().any(|(i, a)| {
            minority[i..].iter().any(|b| on_segment(point, a, b))
        });
        prop_assert!(ok, "synthetic row {} off every minority segment", row);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Every SMOTE and ADASYN synthetic interpolates some minority pair.
    #[test]
    fn smote_and_adasyn_synthetics_sit_on_minority_segments(
        data in instance(),
        k in 1..7usize,
        seed in any::<u64>(),
    ) {
        let (s, _) = smote(&data, k, seed).unwrap();
        synthetic_rows_lie_on_minority_segments(&data, &s)?;
        let (a, _) = adasyn(&data, k, 1.0, seed).unwrap();
        synthetic_rows_lie_on_minority_segments(&data, &a)?;
    }

    /// ROS appends only exact copies of minority rows, below an unchanged
    /// original block.
    #[test]
    fn ros_appends_only_minority_duplicates(data in instance(), seed in any::<u64>()) {
        let (out, _) = random_oversample(&data, seed).unwrap();
        for row in 0..data.n_rows() {
            prop_assert_eq!(out.row(row), data.row(row));
            prop_assert_eq!(out.label(row), data.label(row));
        }
        let minority: Vec<&[f64]> =
            data.indices_of(1).iter().map(|&i| data.row(i)).collect();
        for row in data.n_rows()..out.n_rows() {
            prop_assert_eq!(out.label(row), 1);
            prop_assert!(minority.iter().any(|m| *m == out.row(row)));
        }
    }

    /// The cleaners never add rows and, under the default policy, never
    /// remove minority rows.
    #[test]
    fn cleaners_only_remove_majority_rows(data in instance(), k_enn in 1..6usize) {
        let minority_count = data.indices_of(1).len();

        let (enn, report) = edited_nearest_neighbours(&data, k_enn).unwrap();
        prop_assert!(enn.n_rows() <= data.n_rows());
        prop_assert_eq!(enn.indices_of(1).len(), minority_count);
        prop_assert!(report.removed_rows.iter().all(|&r| data.label(r) == 0));

        let (tomek, report) = tomek_links(&data, TomekPolicy::MajorityOnly).unwrap();
        prop_assert!(tomek.n_rows() <= data.n_rows());
        prop_assert_eq!(tomek.indices_of(1).len(), minority_count);
        prop_assert!(report.removed_rows.iter().all(|&r| data.label(r) == 0));

        let (both, _) = tomek_links(&data, TomekPolicy::Both).unwrap();
        prop_assert!(both.n_rows() <= data.n_rows());
    }

    /// ROS and SMOTE balance the classes exactly; ADASYN at beta = 1 may
    /// miss parity by at most the original minority count.
    #[test]
    fn oversamplers_hit_the_balance_contract(
        data in instance(),
        k in 1..7usize,
        seed in any::<u64>(),
    ) {
        let minority_count = data.indices_of(1).len();

        let (ros, _) = random_oversample(&data, seed).unwrap();
        prop_assert_eq!(ros.indices_of(0).len(), ros.indices_of(1).len());

        let (sm, _) = smote(&data, k, seed).unwrap();
        prop_assert_eq!(sm.indices_of(0).len(), sm.indices_of(1).len());

        let (ad, _) = adasyn(&data, k, 1.0, seed).unwrap();
        let gap = ad.indices_of(0).len().abs_diff(ad.indices_of(1).len());
        prop_assert!(gap <= minority_count, "adasyn parity gap {}", gap);
    }

    /// Identical (input, parameters, seed) gives bit-identical output for
    /// every method, report included.
    #[test]
    fn resampling_is_deterministic(data in instance(), seed in any::<u64>()) {
        let params = ResampleParams::default();
        for method in [
            Method::Ros,
            Method::Smote,
            Method::Adasyn,
            Method::Enn,
            Method::Tomek,
            Method::SmoteEnn,
            Method::SmoteTomek,
        ] {
            let (a, report_a) = method.apply(&data, &params, seed).unwrap();
            let (b, report_b) = method.apply(&data, &params, seed).unwrap();
            prop_assert_eq!(a.values(), b.values(), "{} values differ", method);
            prop_assert_eq!(a.labels(), b.labels(), "{} labels differ", method);
            prop_assert_eq!(report_a, report_b, "{} reports differ", method);
        }
    }

    /// The neighbour index agrees with a brute-force O(n^2) scan, ties
    /// (lowest index first) included.
    #[test]
    fn neighbor_model_matches_brute_force_scan(
        data in instance(),
        k in 1..10usize,
        query in 0..40usize,
    ) {
        let model = NeighborModel::new(data.values(), data.n_cols());
        let query = query % data.n_rows();

        let mut brute: Vec<usize> = (0..data.n_rows()).filter(|&j| j != query).collect();
        brute.sort_by(|&a, &b| {
            squared_distance(data.row(query), data.row(a))
                .partial_cmp(&squared_distance(data.row(query), data.row(b)))
                .unwrap()
                .then(a.cmp(&b))
        });
        brute.truncate(k);

        let got = model.k_nearest(data.row(query), k, Some(query));
        prop_assert_eq!(got, brute);
    }
}
