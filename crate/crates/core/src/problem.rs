//! Validated inputs shared by every engine: families, transition matrices,
//! the assembled problem and the p-values it is run against.
//!
//! Everything here is immutable once constructed. Positions in vectors are
//! 0-based; error values and rendered output use 1-based family numbers.

use std::collections::HashSet;

use crate::error::{GatekeepingError, Result};

/// Absolute tolerance for row sums and the initial-level sum.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// One ordered family of null hypotheses with its initial share of alpha.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilySpec {
    label: String,
    hypotheses: Vec<String>,
    initial_level: f64,
}

impl FamilySpec {
    /// `number` is the 1-based position used in error messages.
    pub fn new(
        number: usize,
        label: impl Into<String>,
        hypotheses: Vec<String>,
        initial_level: f64,
    ) -> Result<Self> {
        if hypotheses.is_empty() {
            return Err(GatekeepingError::EmptyFamily { family: number });
        }
        let mut seen = HashSet::with_capacity(hypotheses.len());
        for h in &hypotheses {
            if !seen.insert(h.as_str()) {
                return Err(GatekeepingError::DuplicateHypothesis {
                    family: number,
                    label: h.clone(),
                });
            }
        }
        if !initial_level.is_finite() || initial_level < 0.0 {
            return Err(GatekeepingError::LevelOutOfRange {
                family: number,
                level: initial_level,
                alpha: f64::NAN,
            });
        }
        Ok(Self {
            label: label.into(),
            hypotheses,
            initial_level,
        })
    }

    /// Family `number` with `size` hypotheses labelled `H<number><j>`.
    pub fn numbered(number: usize, size: usize, initial_level: f64) -> Result<Self> {
        let hypotheses = (1..=size)
            .map(|j| hypothesis_label(&number.to_string(), j))
            .collect();
        Self::new(number, format!("F{number}"), hypotheses, initial_level)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn hypotheses(&self) -> &[String] {
        &self.hypotheses
    }

    pub fn size(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn initial_level(&self) -> f64 {
        self.initial_level
    }
}

/// `H11`, `H12`, ... while both parts are single digits, `H12.10` otherwise.
pub(crate) fn hypothesis_label(family: &str, j: usize) -> String {
    if family.len() <= 2 && j < 10 {
        format!("H{family}{j}")
    } else {
        format!("H{family}.{j}")
    }
}

/// Row-stochastic, zero-diagonal matrix of level-transfer proportions.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    entries: Vec<Vec<f64>>,
}

impl TransitionMatrix {
    /// Validates `entries` against the three transition-matrix conditions:
    /// entries in `[0, 1]`, zero diagonal, rows summing to one.
    pub fn new(entries: Vec<Vec<f64>>) -> Result<Self> {
        let m = entries.len();
        if m < 2 {
            return Err(GatekeepingError::MatrixShape {
                rows: m,
                cols: entries.first().map_or(0, Vec::len),
            });
        }
        for row in &entries {
            if row.len() != m {
                return Err(GatekeepingError::MatrixShape {
                    rows: m,
                    cols: row.len(),
                });
            }
        }
        for (i, row) in entries.iter().enumerate() {
            for (j, &g) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&g) {
                    return Err(GatekeepingError::EntryOutOfRange {
                        row: i + 1,
                        col: j + 1,
                        value: g,
                    });
                }
            }
            if row[i] != 0.0 {
                return Err(GatekeepingError::NonZeroDiagonal {
                    row: i + 1,
                    value: row[i],
                });
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > SUM_TOLERANCE {
                return Err(GatekeepingError::RowSumNotOne { row: i + 1, sum });
            }
        }
        Ok(Self { entries })
    }

    /// Full transfer from every family to the next one and nothing else.
    ///
    /// The last row is all zero, so this matrix is sub-stochastic and would
    /// be refused by [`TransitionMatrix::new`]. It is the configuration under
    /// which singleton families reproduce the fallback procedure.
    pub fn upper_shift(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(GatekeepingError::MatrixShape { rows: m, cols: m });
        }
        let entries = (0..m)
            .map(|i| (0..m).map(|j| if j == i + 1 { 1.0 } else { 0.0 }).collect())
            .collect();
        Ok(Self { entries })
    }

    /// Forward shift with the last family feeding back into the first.
    pub fn cyclic_shift(m: usize) -> Result<Self> {
        let entries = (0..m)
            .map(|i| {
                (0..m)
                    .map(|j| if j == (i + 1) % m { 1.0 } else { 0.0 })
                    .collect()
            })
            .collect();
        Self::new(entries)
    }

    pub fn size(&self) -> usize {
        self.entries.len()
    }

    /// Proportion transferred from family `from` to family `to` (0-based).
    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.entries[from][to]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.entries
    }
}

/// Free-function form of [`TransitionMatrix::new`].
pub fn validate_transition_matrix(entries: Vec<Vec<f64>>) -> Result<TransitionMatrix> {
    TransitionMatrix::new(entries)
}

/// Ordered families, their transition matrix and the global level.
#[derive(Debug, Clone, PartialEq)]
pub struct GatekeepingProblem {
    families: Vec<FamilySpec>,
    transition: TransitionMatrix,
    alpha: f64,
}

impl GatekeepingProblem {
    pub fn new(
        families: Vec<FamilySpec>,
        transition: TransitionMatrix,
        alpha: f64,
    ) -> Result<Self> {
        check_alpha(alpha)?;
        if families.len() < 2 {
            return Err(GatekeepingError::TooFewFamilies {
                min: 2,
                found: families.len(),
            });
        }
        if transition.size() != families.len() {
            return Err(GatekeepingError::DimensionMismatch {
                what: "transition matrix size vs family count",
                expected: families.len(),
                found: transition.size(),
            });
        }
        check_levels(families.iter(), alpha)?;
        Ok(Self {
            families,
            transition,
            alpha,
        })
    }

    pub fn families(&self) -> &[FamilySpec] {
        &self.families
    }

    pub fn family(&self, i: usize) -> &FamilySpec {
        &self.families[i]
    }

    pub fn family_count(&self) -> usize {
        self.families.len()
    }

    pub fn transition(&self) -> &TransitionMatrix {
        &self.transition
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.families.iter().map(FamilySpec::size).collect()
    }

    pub fn initial_levels(&self) -> Vec<f64> {
        self.families
            .iter()
            .map(FamilySpec::initial_level)
            .collect()
    }

    pub fn hypothesis_count(&self) -> usize {
        self.families.iter().map(FamilySpec::size).sum()
    }
}

/// Free-function form of [`GatekeepingProblem::new`].
pub fn validate_problem(
    families: Vec<FamilySpec>,
    transition: TransitionMatrix,
    alpha: f64,
) -> Result<GatekeepingProblem> {
    GatekeepingProblem::new(families, transition, alpha)
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(GatekeepingError::InvalidAlpha(alpha))
    }
}

pub(crate) fn check_levels<'a>(
    families: impl Iterator<Item = &'a FamilySpec>,
    alpha: f64,
) -> Result<()> {
    let mut sum = 0.0;
    for (i, f) in families.enumerate() {
        let level = f.initial_level();
        if level > alpha + SUM_TOLERANCE {
            return Err(GatekeepingError::LevelOutOfRange {
                family: i + 1,
                level,
                alpha,
            });
        }
        sum += level;
    }
    if (sum - alpha).abs() > SUM_TOLERANCE {
        return Err(GatekeepingError::LevelSumMismatch { sum, alpha });
    }
    Ok(())
}

/// Raw p-values grouped by family, in the same order as the problem.
#[derive(Debug, Clone, PartialEq)]
pub struct PValueSet {
    values: Vec<Vec<f64>>,
}

impl PValueSet {
    pub fn new(values: Vec<Vec<f64>>) -> Result<Self> {
        for (i, family) in values.iter().enumerate() {
            for (j, &p) in family.iter().enumerate() {
                if !(0.0..=1.0).contains(&p) {
                    return Err(GatekeepingError::PValueOutOfRange {
                        family: i + 1,
                        hypothesis: j + 1,
                        value: p,
                    });
                }
            }
        }
        Ok(Self { values })
    }

    pub fn family(&self, i: usize) -> &[f64] {
        &self.values[i]
    }

    pub fn families(&self) -> &[Vec<f64>] {
        &self.values
    }

    /// Fails unless there is exactly one value per hypothesis of `sizes`.
    pub fn check_shape(&self, sizes: &[usize]) -> Result<()> {
        if self.values.len() != sizes.len() {
            return Err(GatekeepingError::DimensionMismatch {
                what: "p-value families",
                expected: sizes.len(),
                found: self.values.len(),
            });
        }
        for (family, &n) in self.values.iter().zip(sizes) {
            if family.len() != n {
                return Err(GatekeepingError::DimensionMismatch {
                    what: "p-values in family",
                    expected: n,
                    found: family.len(),
                });
            }
        }
        Ok(())
    }
}
