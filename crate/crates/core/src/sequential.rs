//! The m-family procedure with retesting.
//!
//! Families are tested one after another with the Bonferroni test. Within a
//! stage, family `i` receives the level recycled by higher-ranked families
//! at the current stage (weighted by their current levels) and by
//! lower-ranked families at the previous stage (weighted by their initial
//! levels). Stages repeat until a whole stage rejects nothing new.

use std::collections::BTreeSet;

use crate::bonferroni::bonferroni_reject;
use crate::error::{GatekeepingError, Result};
use crate::problem::{FamilySpec, GatekeepingProblem, PValueSet, TransitionMatrix};
use crate::trail::{AuditTrail, FamilyKey, FamilyStage, StageRecord, Termination};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EngineOptions {
    /// Maximum number of stages. `None` means `n + 1`, which no run can
    /// exceed since every continuing stage adds a rejection.
    pub stage_cap: Option<usize>,
    /// Keep every stage in the trail, or only the last one.
    pub record_full_trail: bool,
}

impl Default for EngineOptions {
    fn default() -> Self {
        Self {
            stage_cap: None,
            record_full_trail: true,
        }
    }
}

impl EngineOptions {
    pub fn with_stage_cap(mut self, cap: usize) -> Self {
        self.stage_cap = Some(cap);
        self
    }

    pub fn summary_only(mut self) -> Self {
        self.record_full_trail = false;
        self
    }

    pub(crate) fn resolve_cap(&self, hypotheses: usize) -> Result<usize> {
        match self.stage_cap {
            Some(0) => Err(GatekeepingError::InvalidStageCap),
            Some(cap) => Ok(cap),
            None => Ok(hypotheses + 1),
        }
    }
}

/// Share of `level` recycled from a family with `rejected` of `size`
/// hypotheses rejected, sent along an edge of weight `proportion`.
#[inline]
pub(crate) fn transfer(rejected: usize, size: usize, proportion: f64, level: f64) -> f64 {
    rejected as f64 / size as f64 * proportion * level
}

/// Stage-1 level of family `family` (0-based).
///
/// `levels` and `counts` hold the stage-1 levels and rejection counts of the
/// families ranked above it; only the first `family` entries are read.
pub fn stage1_level(
    problem: &GatekeepingProblem,
    family: usize,
    levels: &[f64],
    counts: &[usize],
) -> f64 {
    let g = problem.transition();
    let mut level = problem.family(family).initial_level();
    for j in 0..family {
        level += transfer(
            counts[j],
            problem.family(j).size(),
            g.get(j, family),
            levels[j],
        );
    }
    level
}

/// Level of family `family` (0-based) at a retesting stage.
///
/// `current_levels`/`current_counts` describe higher-ranked families already
/// retested in this stage (first `family` entries read). `previous_counts`
/// holds cumulative rejection counts from the previous stage for every
/// family; only the lower-ranked entries are read, and those transfers are
/// weighted by the initial levels.
pub fn stagek_level(
    problem: &GatekeepingProblem,
    family: usize,
    current_levels: &[f64],
    current_counts: &[usize],
    previous_counts: &[usize],
) -> f64 {
    let g = problem.transition();
    let mut level = stage1_level(problem, family, current_levels, current_counts);
    for l in family + 1..problem.family_count() {
        let lower = problem.family(l);
        level += transfer(
            previous_counts[l],
            lower.size(),
            g.get(l, family),
            lower.initial_level(),
        );
    }
    level
}

/// Runs the procedure to completion and returns the full audit trail.
pub fn run_procedure(
    problem: &GatekeepingProblem,
    p: &PValueSet,
    options: &EngineOptions,
) -> Result<AuditTrail> {
    let sizes = problem.sizes();
    p.check_shape(&sizes)?;
    let m = problem.family_count();
    let cap = options.resolve_cap(problem.hypothesis_count())?;

    let mut rejected: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); m];
    let mut previous_counts = vec![0usize; m];
    let mut stages = Vec::new();
    let mut stage = 0;

    let termination = loop {
        stage += 1;
        let mut levels = Vec::with_capacity(m);
        let mut counts = Vec::with_capacity(m);
        let mut record = Vec::with_capacity(m);
        for i in 0..m {
            let level = if stage == 1 {
                stage1_level(problem, i, &levels, &counts)
            } else {
                stagek_level(problem, i, &levels, &counts, &previous_counts)
            };
            let hits = bonferroni_reject(p.family(i), level);
            let newly: BTreeSet<usize> = hits.difference(&rejected[i]).copied().collect();
            rejected[i].extend(newly.iter().copied());
            levels.push(level);
            counts.push(rejected[i].len());
            record.push(FamilyStage {
                key: FamilyKey::Ordered(i),
                level,
                rejected: rejected[i].clone(),
                newly_rejected: newly,
            });
        }
        let record = StageRecord {
            stage,
            families: record,
        };
        let added = record.new_rejection_count();
        if options.record_full_trail {
            stages.push(record);
        } else {
            stages.clear();
            stages.push(record);
        }
        previous_counts = counts;

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
        families: (0..m).map(FamilyKey::Ordered).collect(),
        sizes,
        stages,
        stages_run: stage,
        rejected,
        termination,
    })
}

/// Two families with full transfer both ways (`g12 = g21 = 1`).
pub fn two_family_problem(
    n1: usize,
    n2: usize,
    alpha1: f64,
    alpha2: f64,
    alpha: f64,
) -> Result<GatekeepingProblem> {
    let families = vec![
        FamilySpec::numbered(1, n1, alpha1)?,
        FamilySpec::numbered(2, n2, alpha2)?,
    ];
    let g = TransitionMatrix::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]])?;
    GatekeepingProblem::new(families, g, alpha)
}
