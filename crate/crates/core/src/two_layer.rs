//! Two layers of families: simultaneous testing inside a layer, sequential
//! between layers, with retesting.
//!
//! Each stage first computes every layer-1 level from the previous stage's
//! layer-2 rejections, tests layer 1, then computes every layer-2 level from
//! the fresh layer-1 results and tests layer 2. Levels inside a layer are
//! all computed from one frozen snapshot, so the processing order within a
//! layer cannot affect the outcome.

use std::collections::BTreeSet;

use crate::bonferroni::bonferroni_reject;
use crate::error::{GatekeepingError, Result};
use crate::problem::{
    check_alpha, check_levels, hypothesis_label, FamilySpec, PValueSet, SUM_TOLERANCE,
};
use crate::sequential::{transfer, EngineOptions};
use crate::trail::{AuditTrail, FamilyKey, FamilyStage, Layer, StageRecord, Termination};

#[derive(Debug, Clone, PartialEq)]
pub struct TwoLayerProblem {
    first: Vec<FamilySpec>,
    second: Vec<FamilySpec>,
    /// `to_second[j][l]`: share of first-layer family `j` sent to second-layer family `l`.
    to_second: Vec<Vec<f64>>,
    /// `to_first[l][j]`: share of second-layer family `l` sent to first-layer family `j`.
    to_first: Vec<Vec<f64>>,
    alpha: f64,
}

fn layer_name(layer: Layer, index: usize) -> String {
    FamilyKey::Layered { layer, index }.to_string()
}

fn check_coefficients(rows: &[Vec<f64>], from: Layer, cols: usize) -> Result<()> {
    let to = match from {
        Layer::First => Layer::Second,
        Layer::Second => Layer::First,
    };
    for (r, row) in rows.iter().enumerate() {
        if row.len() != cols {
            return Err(GatekeepingError::DimensionMismatch {
                what: "transition coefficients per source family",
                expected: cols,
                found: row.len(),
            });
        }
        for (c, &g) in row.iter().enumerate() {
            if !(0.0..=1.0).contains(&g) {
                return Err(GatekeepingError::CoefficientOutOfRange {
                    from: layer_name(from, r),
                    to: layer_name(to, c),
                    value: g,
                });
            }
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(GatekeepingError::CoefficientRowSum {
                family: layer_name(from, r),
                sum,
            });
        }
    }
    Ok(())
}

impl TwoLayerProblem {
    /// Validates the coefficient set: entries in `[0, 1]`, every family's
    /// outgoing coefficients into the other layer summing to one, and the
    /// initial levels summing to `alpha`. Intra-layer coefficients are zero
    /// by construction.
    pub fn new(
        first: Vec<FamilySpec>,
        second: Vec<FamilySpec>,
        to_second: Vec<Vec<f64>>,
        to_first: Vec<Vec<f64>>,
        alpha: f64,
    ) -> Result<Self> {
        check_alpha(alpha)?;
        for layer in [&first, &second] {
            if layer.is_empty() {
                return Err(GatekeepingError::TooFewFamilies { min: 1, found: 0 });
            }
        }
        if to_second.len() != first.len() {
            return Err(GatekeepingError::DimensionMismatch {
                what: "first-layer coefficient rows",
                expected: first.len(),
                found: to_second.len(),
            });
        }
        if to_first.len() != second.len() {
            return Err(GatekeepingError::DimensionMismatch {
                what: "second-layer coefficient rows",
                expected: second.len(),
                found: to_first.len(),
            });
        }
        check_coefficients(&to_second, Layer::First, second.len())?;
        check_coefficients(&to_first, Layer::Second, first.len())?;
        check_levels(first.iter().chain(second.iter()), alpha)?;
        Ok(Self {
            first,
            second,
            to_second,
            to_first,
            alpha,
        })
    }

    pub fn first(&self) -> &[FamilySpec] {
        &self.first
    }

    pub fn second(&self) -> &[FamilySpec] {
        &self.second
    }

    pub fn layer(&self, layer: Layer) -> &[FamilySpec] {
        match layer {
            Layer::First => &self.first,
            Layer::Second => &self.second,
        }
    }

    /// Coefficient from first-layer family `j` to second-layer family `l`.
    pub fn down(&self, j: usize, l: usize) -> f64 {
        self.to_second[j][l]
    }

    /// Coefficient from second-layer family `l` to first-layer family `j`.
    pub fn up(&self, l: usize, j: usize) -> f64 {
        self.to_first[l][j]
    }

    pub fn down_rows(&self) -> &[Vec<f64>] {
        &self.to_second
    }

    pub fn up_rows(&self) -> &[Vec<f64>] {
        &self.to_first
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// All families, first layer then second.
    pub fn families(&self) -> impl Iterator<Item = &FamilySpec> {
        self.first.iter().chain(self.second.iter())
    }

    pub fn keys(&self) -> Vec<FamilyKey> {
        let first = (0..self.first.len()).map(|index| FamilyKey::Layered {
            layer: Layer::First,
            index,
        });
        let second = (0..self.second.len()).map(|index| FamilyKey::Layered {
            layer: Layer::Second,
            index,
        });
        first.chain(second).collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.families().map(FamilySpec::size).collect()
    }

    pub fn hypothesis_count(&self) -> usize {
        self.families().map(FamilySpec::size).sum()
    }
}

/// Family `F<layer><index>` with hypotheses labelled `H<layer><index><s>`.
pub fn layered_family(
    layer: Layer,
    index: usize,
    size: usize,
    initial_level: f64,
) -> Result<FamilySpec> {
    let name = layer_name(layer, index);
    let stem = &name[1..];
    let hypotheses = (1..=size).map(|s| hypothesis_label(stem, s)).collect();
    FamilySpec::new(index + 1, name.clone(), hypotheses, initial_level)
}

/// Level of first-layer family `j` at `stage` (1-based).
///
/// Stage 1 uses the initial level. Later stages add the recycled initial
/// levels of second-layer families, weighted by their cumulative rejection
/// counts from the previous stage.
pub fn layer1_level(
    problem: &TwoLayerProblem,
    j: usize,
    stage: usize,
    previous_second_counts: &[usize],
) -> f64 {
    let mut level = problem.first[j].initial_level();
    if stage <= 1 {
        return level;
    }
    for (l, fam) in problem.second.iter().enumerate() {
        level += transfer(
            previous_second_counts[l],
            fam.size(),
            problem.up(l, j),
            fam.initial_level(),
        );
    }
    level
}

/// Level of second-layer family `l`, from the first layer's levels and
/// cumulative rejection counts at the current stage.
pub fn layer2_level(
    problem: &TwoLayerProblem,
    l: usize,
    first_levels: &[f64],
    first_counts: &[usize],
) -> f64 {
    let mut level = problem.second[l].initial_level();
    for (j, fam) in problem.first.iter().enumerate() {
        level += transfer(
            first_counts[j],
            fam.size(),
            problem.down(j, l),
            first_levels[j],
        );
    }
    level
}

/// Runs the two-layer procedure. `p` lists first-layer families, then
/// second-layer families.
pub fn run_two_layer(
    problem: &TwoLayerProblem,
    p: &PValueSet,
    options: &EngineOptions,
) -> Result<AuditTrail> {
    let sizes = problem.sizes();
    p.check_shape(&sizes)?;
    let m1 = problem.first.len();
    let m2 = problem.second.len();
    let keys = problem.keys();
    let cap = options.resolve_cap(problem.hypothesis_count())?;

    let mut rejected: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); m1 + m2];
    let mut second_counts = vec![0usize; m2];
    let mut stages = Vec::new();
    let mut stage = 0;

    let termination = loop {
        stage += 1;
        let mut record = Vec::with_capacity(m1 + m2);

        let first_levels: Vec<f64> = (0..m1)
            .map(|j| layer1_level(problem, j, stage, &second_counts))
            .collect();
        let first_counts: Vec<usize> = first_levels
            .iter()
            .enumerate()
            .map(|(j, &level)| test_family(j, level, keys[j], p, &mut rejected, &mut record))
            .collect();

        let second_levels: Vec<f64> = (0..m2)
            .map(|l| layer2_level(problem, l, &first_levels, &first_counts))
            .collect();
        second_counts = second_levels
            .iter()
            .enumerate()
            .map(|(l, &level)| {
                test_family(m1 + l, level, keys[m1 + l], p, &mut rejected, &mut record)
            })
            .collect();

        let record = StageRecord {
            stage,
            families: record,
        };
        let added = record.new_rejection_count();
        if !options.record_full_trail {
            stages.clear();
        }
        stages.push(record);

        if added == 0 {
            break if stage == 1 {
                Termination::NoRejectionsAtStage1
            } else {
                Termination::NoNewRejections
            };
        }
        if stage >= cap {
            break Termination::StageCapReached;
        }
    };

    Ok(AuditTrail {
        families: keys,
        sizes,
        stages,
        stages_run: stage,
        rejected,
        termination,
    })
}

fn test_family(
    position: usize,
    level: f64,
    key: FamilyKey,
    p: &PValueSet,
    rejected: &mut [BTreeSet<usize>],
    record: &mut Vec<FamilyStage>,
) -> usize {
    let hits = bonferroni_reject(p.family(position), level);
    let newly: BTreeSet<usize> = hits.difference(&rejected[position]).copied().collect();
    rejected[position].extend(newly.iter().copied());
    record.push(FamilyStage {
        key,
        level,
        rejected: rejected[position].clone(),
        newly_rejected: newly,
    });
    rejected[position].len()
}
