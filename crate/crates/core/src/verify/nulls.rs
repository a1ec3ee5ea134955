use std::collections::BTreeSet;

use crate::error::{GatekeepingError, Result};

/// Which hypotheses of each family are true nulls.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NullConfiguration {
    sizes: Vec<usize>,
    sets: Vec<BTreeSet<usize>>,
}

impl NullConfiguration {
    /// `sets[i]` holds 0-based positions of true nulls in family `i`.
    pub fn new(sizes: &[usize], sets: Vec<BTreeSet<usize>>) -> Result<Self> {
        if sets.len() != sizes.len() {
            return Err(GatekeepingError::DimensionMismatch {
                what: "null configuration families",
                expected: sizes.len(),
                found: sets.len(),
            });
        }
        for (i, (set, &n)) in sets.iter().zip(sizes).enumerate() {
            if let Some(&j) = set.iter().find(|&&j| j >= n) {
                return Err(GatekeepingError::NullOutOfRange {
                    family: i + 1,
                    hypothesis: j + 1,
                    size: n,
                });
            }
        }
        Ok(Self {
            sizes: sizes.to_vec(),
            sets,
        })
    }

    pub fn all_null(sizes: &[usize]) -> Self {
        Self {
            sizes: sizes.to_vec(),
            sets: sizes.iter().map(|&n| (0..n).collect()).collect(),
        }
    }

    pub fn none_null(sizes: &[usize]) -> Self {
        Self {
            sizes: sizes.to_vec(),
            sets: vec![BTreeSet::new(); sizes.len()],
        }
    }

    /// The first `counts[i]` hypotheses of family `i` are true nulls.
    pub fn leading(sizes: &[usize], counts: &[usize]) -> Result<Self> {
        let sets = counts.iter().map(|&t| (0..t).collect()).collect();
        Self::new(sizes, sets)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn sets(&self) -> &[BTreeSet<usize>] {
        &self.sets
    }

    pub fn count(&self, family: usize) -> usize {
        self.sets[family].len()
    }

    /// `|T_i| / n_i`.
    pub fn fraction(&self, family: usize) -> f64 {
        self.sets[family].len() as f64 / self.sizes[family] as f64
    }

    pub fn is_null(&self, family: usize, hypothesis: usize) -> bool {
        self.sets[family].contains(&hypothesis)
    }

    /// True when any rejected hypothesis is a true null.
    pub fn has_false_rejection(&self, rejected: &[BTreeSet<usize>]) -> bool {
        rejected
            .iter()
            .zip(&self.sets)
            .any(|(r, t)| !r.is_disjoint(t))
    }
}
