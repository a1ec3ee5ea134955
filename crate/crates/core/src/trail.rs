//! Stage-by-stage record of one run of an engine.

use std::collections::BTreeSet;
use std::fmt;

/// Which layer a family belongs to in the two-layer procedure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Layer {
    First,
    Second,
}

impl Layer {
    pub fn number(self) -> usize {
        match self {
            Layer::First => 1,
            Layer::Second => 2,
        }
    }
}

/// Identifies a family inside a trail. Indices are 0-based; `Display`
/// renders the 1-based name (`F2`, `F12`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FamilyKey {
    Ordered(usize),
    Layered { layer: Layer, index: usize },
}

impl fmt::Display for FamilyKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilyKey::Ordered(i) => write!(f, "F{}", i + 1),
            FamilyKey::Layered { layer, index } => {
                if index + 1 < 10 {
                    write!(f, "F{}{}", layer.number(), index + 1)
                } else {
                    write!(f, "F{}.{}", layer.number(), index + 1)
                }
            }
        }
    }
}

/// One family's test at one stage.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyStage {
    pub key: FamilyKey,
    /// Local level the family was tested at.
    pub level: f64,
    /// Cumulative rejections after this test (0-based hypothesis positions).
    pub rejected: BTreeSet<usize>,
    /// Rejections first made by this test.
    pub newly_rejected: BTreeSet<usize>,
}

/// All family tests of one stage, in the order they were carried out.
#[derive(Debug, Clone, PartialEq)]
pub struct StageRecord {
    /// 1-based stage number.
    pub stage: usize,
    pub families: Vec<FamilyStage>,
}

impl StageRecord {
    pub fn new_rejection_count(&self) -> usize {
        self.families.iter().map(|f| f.newly_rejected.len()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Termination {
    /// Stage 1 rejected nothing in any family.
    NoRejectionsAtStage1,
    /// A full retesting stage produced no new rejection.
    NoNewRejections,
    /// The stage cap was hit while rejections were still being added.
    StageCapReached,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::NoRejectionsAtStage1 => "no-rejections-at-stage-1",
            Termination::NoNewRejections => "no-new-rejections",
            Termination::StageCapReached => "stage-cap-reached",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditTrail {
    pub(crate) families: Vec<FamilyKey>,
    pub(crate) sizes: Vec<usize>,
    pub(crate) stages: Vec<StageRecord>,
    pub(crate) stages_run: usize,
    pub(crate) rejected: Vec<BTreeSet<usize>>,
    pub(crate) termination: Termination,
}

impl AuditTrail {
    pub fn families(&self) -> &[FamilyKey] {
        &self.families
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Recorded stages. Holds only the final stage when the engine ran with
    /// `record_full_trail = false`.
    pub fn stages(&self) -> &[StageRecord] {
        &self.stages
    }

    /// Number of stages executed, whether or not they were recorded.
    pub fn stage_count(&self) -> usize {
        self.stages_run
    }

    pub fn termination(&self) -> Termination {
        self.termination
    }

    /// Final rejection set of every family, in trail order.
    pub fn rejected(&self) -> &[BTreeSet<usize>] {
        &self.rejected
    }

    pub fn rejection_count(&self) -> usize {
        self.rejected.iter().map(BTreeSet::len).sum()
    }

    /// Labels of the rejected hypotheses, in family order.
    pub fn rejected_labels<'a>(&self, hypotheses: &[&'a [String]]) -> Vec<&'a str> {
        self.rejected
            .iter()
            .zip(hypotheses)
            .flat_map(|(set, labels)| set.iter().map(move |&j| labels[j].as_str()))
            .collect()
    }

    /// Level family `family` (trail position) was tested at in `stage`.
    pub fn level(&self, stage: usize, family: usize) -> Option<f64> {
        self.stages
            .iter()
            .find(|s| s.stage == stage)
            .and_then(|s| s.families.get(family))
            .map(|f| f.level)
    }

    /// Same levels, rejection sets and termination, ignoring family keys.
    /// Levels are compared bit for bit.
    pub fn same_outcome(&self, other: &AuditTrail) -> bool {
        self.sizes == other.sizes
            && self.stages_run == other.stages_run
            && self.termination == other.termination
            && self.rejected == other.rejected
            && self.stages.len() == other.stages.len()
            && self.stages.iter().zip(&other.stages).all(|(a, b)| {
                a.stage == b.stage
                    && a.families.len() == b.families.len()
                    && a.families.iter().zip(&b.families).all(|(x, y)| {
                        x.level.to_bits() == y.level.to_bits()
                            && x.rejected == y.rejected
                            && x.newly_rejected == y.newly_rejected
                    })
            })
    }

    /// Checks the structural properties every trail must have and returns a
    /// description of each violation found.
    ///
    /// * rejection sets are nested across stages,
    /// * per-family levels never decrease,
    /// * at most `n + 1` stages ran,
    /// * the last stage added nothing, unless the stage cap stopped the run.
    pub fn structural_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let n: usize = self.sizes.iter().sum();
        if self.stages_run > n + 1 {
            out.push(format!(
                "{} stages ran for {} hypotheses",
                self.stages_run, n
            ));
        }
        for pair in self.stages.windows(2) {
            let (prev, next) = (&pair[0], &pair[1]);
            for (a, b) in prev.families.iter().zip(&next.families) {
                if b.level < a.level {
                    out.push(format!(
                        "{} level fell from {} at stage {} to {} at stage {}",
                        a.key, a.level, prev.stage, b.level, next.stage
                    ));
                }
                if !a.rejected.is_subset(&b.rejected) {
                    out.push(format!(
                        "{} rejections at stage {} are not contained in stage {}",
                        a.key, prev.stage, next.stage
                    ));
                }
            }
        }
        for s in &self.stages {
            for f in &s.families {
                if !f.newly_rejected.is_subset(&f.rejected) {
                    out.push(format!(
                        "{} stage {}: new rejections not recorded",
                        f.key, s.stage
                    ));
                }
            }
        }
        if let Some(last) = self.stages.last() {
            for (f, fin) in last.families.iter().zip(&self.rejected) {
                if &f.rejected != fin {
                    out.push(format!("{} final set differs from last stage", f.key));
                }
            }
            let new = last.new_rejection_count();
            match self.termination {
                Termination::StageCapReached => {}
                Termination::NoRejectionsAtStage1 => {
                    if self.stages_run != 1 || self.rejection_count() != 0 {
                        out.push("terminated at stage 1 despite rejections".to_string());
                    }
                }
                Termination::NoNewRejections => {
                    if new != 0 {
                        out.push(format!(
                            "final stage {} added {} rejections",
                            last.stage, new
                        ));
                    }
                }
            }
        }
        out
    }
}
