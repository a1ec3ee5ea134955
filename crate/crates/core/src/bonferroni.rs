use std::collections::BTreeSet;

/// Bonferroni test of one family at `level`.
///
/// Returns the 0-based positions `j` with `p[j] <= level / n`. Equality
/// rejects. A level of zero (or below) rejects nothing, even a p-value of 0.
pub fn bonferroni_reject(p_values: &[f64], level: f64) -> BTreeSet<usize> {
    if level <= 0.0 || p_values.is_empty() {
        return BTreeSet::new();
    }
    let threshold = bonferroni_threshold(level, p_values.len());
    p_values
        .iter()
        .enumerate()
        .filter(|&(_, &p)| p <= threshold)
        .map(|(j, _)| j)
        .collect()
}

/// Per-hypothesis critical value `level / n`.
pub fn bonferroni_threshold(level: f64, n: usize) -> f64 {
    level / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ephesus_first_family() {
        assert_eq!(
            bonferroni_reject(&[0.0121, 0.0337], 0.04),
            BTreeSet::from([0])
        );
    }

    #[test]
    fn ephesus_second_family_retest() {
        assert_eq!(
            bonferroni_reject(&[0.0084, 0.0160], 0.0325),
            BTreeSet::from([0, 1])
        );
    }

    #[test]
    fn zero_level_rejects_nothing() {
        assert!(bonferroni_reject(&[0.0, 0.3], 0.0).is_empty());
    }

    #[test]
    fn equality_rejects() {
        assert_eq!(bonferroni_reject(&[0.025, 0.5], 0.05), BTreeSet::from([0]));
    }

    proptest! {
        #[test]
        fn monotone_in_level(
            p in prop::collection::vec(0.0f64..=1.0, 1..6),
            a in 0.0f64..0.5,
            extra in 0.0f64..0.5,
        ) {
            let low = bonferroni_reject(&p, a);
            let high = bonferroni_reject(&p, a + extra);
            prop_assert!(low.is_subset(&high));
        }

        #[test]
        fn nothing_below_threshold_rejects_nothing(
            n in 1usize..6,
            alpha in 0.001f64..0.2,
            gaps in prop::collection::vec(1e-9f64..1.0, 6),
        ) {
            let cut = alpha / n as f64;
            let p: Vec<f64> = gaps[..n].iter().map(|g| (cut + g * (1.0 - cut)).min(1.0)).collect();
            prop_assume!(p.iter().all(|&v| v > cut));
            prop_assert!(bonferroni_reject(&p, alpha).is_empty());
        }
    }
}
