//! Randomized invariants over the metric and ranking primitives.

use proptest::prelude::*;

use benchguard::metrics::{auroc, average_precision, macro_f1_at, ScoredLabels};
use benchguard::rankaudit::competition_ranks;

fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<u8>)> {
    (2usize..60).prop_flat_map(|n| {
        (
            prop::collection::vec(0.0f64..=1.0, n),
            prop::collection::vec(0u8..=1, n),
        )
    })
}

proptest! {
    #[test]
    fn auroc_and_ap_stay_in_unit_interval((scores, mut labels) in instance()) {
        labels[0] = 0;
        let last = labels.len() - 1;
        labels[last] = 1;
        let data = ScoredLabels::new(scores, labels).unwrap();
        let a = auroc(&data).unwrap();
        let p = average_precision(&data).unwrap();
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!((0.0..=1.0).contains(&p));
    }

    #[test]
    fn auroc_is_symmetric_under_label_and_score_flip((scores, mut labels) in instance()) {
        labels[0] = 0;
        let last = labels.len() - 1;
        labels[last] = 1;
        let flipped_scores: Vec<f64> = scores.iter().map(|s| 1.0 - s).collect();
        let flipped_labels: Vec<u8> = labels.iter().map(|l| 1 - l).collect();
        let a = auroc(&ScoredLabels::new(scores, labels).unwrap()).unwrap();
        let b = auroc(&ScoredLabels::new(flipped_scores, flipped_labels).unwrap()).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn macro_f1_never_exceeds_one((scores, mut labels) in instance()) {
        labels[0] = 0;
        let last = labels.len() - 1;
        labels[last] = 1;
        let v = macro_f1_at(&scores, &labels, 0.5).unwrap();
        prop_assert!((0.0..=1.0).contains(&v));
    }

    #[test]
    fn competition_ranks_are_a_valid_assignment(values in prop::collection::vec(0.0f64..1.0, 1..40)) {
        let ranks = competition_ranks(&values);
        prop_assert_eq!(ranks.len(), values.len());
        // best value holds rank 1; every rank is within 1..=n
        prop_assert!(ranks.contains(&1));
        prop_assert!(ranks.iter().all(|&r| r >= 1 && r <= values.len()));
        // equal values share a rank, larger values rank strictly better
        for i in 0..values.len() {
            for j in 0..values.len() {
                if values[i] == values[j] {
                    prop_assert_eq!(ranks[i], ranks[j]);
                } else if values[i] > values[j] {
                    prop_assert!(ranks[i] < ranks[j]);
                }
            }
        }
    }
}
