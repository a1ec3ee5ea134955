//! Worst-case local levels and the FWER bound built from them.
//!
//! Suppose no true null has been rejected through stage `k`. Then family `j`
//! has at most `n_j - |T_j|` rejections, so no local level can exceed the
//! value obtained by plugging that count into the level-update rule. Those
//! worst-case levels do not depend on `k`. Summing `|T_i| / n_i` times the
//! worst-case level over all families bounds the probability of a first
//! false rejection, and that sum never exceeds alpha.

use crate::error::{GatekeepingError, Result};
use crate::problem::GatekeepingProblem;
use crate::trail::AuditTrail;
use crate::two_layer::TwoLayerProblem;

use super::nulls::NullConfiguration;

/// Worst-case level of every family, in problem order (for two-layer
/// problems: first layer, then second).
#[derive(Debug, Clone, PartialEq)]
pub struct WorstCaseLevels(pub Vec<f64>);

impl WorstCaseLevels {
    pub fn get(&self, family: usize) -> f64 {
        self.0[family]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Worst-case levels for the sequential procedure, computed front to back:
/// family `i` collects `(1 - |T_j|/n_j) g_ji` of the worst-case level of each
/// higher-ranked `j` and `(1 - |T_l|/n_l) g_li` of the initial level of each
/// lower-ranked `l`.
pub fn worst_case_levels(
    problem: &GatekeepingProblem,
    nulls: &NullConfiguration,
) -> WorstCaseLevels {
    let m = problem.family_count();
    let g = problem.transition();
    let mut star: Vec<f64> = Vec::with_capacity(m);
    for i in 0..m {
        let mut level = problem.family(i).initial_level();
        for (j, &above) in star.iter().enumerate() {
            level += (1.0 - nulls.fraction(j)) * g.get(j, i) * above;
        }
        for l in i + 1..m {
            level += (1.0 - nulls.fraction(l)) * g.get(l, i) * problem.family(l).initial_level();
        }
        star.push(level);
    }
    WorstCaseLevels(star)
}

/// `Σ_i (|T_i| / n_i) · α*_i`.
pub fn fwer_bound(problem: &GatekeepingProblem, nulls: &NullConfiguration) -> f64 {
    let star = worst_case_levels(problem, nulls);
    (0..problem.family_count())
        .map(|i| nulls.fraction(i) * star.get(i))
        .sum()
}

/// The intermediate quantity of the bound chain for a split after the
/// first `leading` families (1-based, `2 <= leading <= m - 1`):
///
/// leading families contribute `[t_i + (1 - t_i) Σ_{l > leading} g_il] α*_i`,
/// trailing families `[t_l + (1 - t_l) Σ_{i > leading} g_li] α_l`,
/// with `t = |T| / n`. It is non-increasing in `leading`.
pub fn partition_bound(
    problem: &GatekeepingProblem,
    nulls: &NullConfiguration,
    star: &WorstCaseLevels,
    leading: usize,
) -> Result<f64> {
    let m = problem.family_count();
    if m < 3 || leading < 2 || leading > m - 1 {
        return Err(GatekeepingError::IndexOutOfRange {
            index: leading,
            min: 2,
            max: m.saturating_sub(1),
        });
    }
    Ok(partition_bound_unchecked(problem, nulls, star, leading))
}

/// [`partition_bound`] for every split `1..=m-1`, including the end points
/// outside its domain: the first entry equals alpha and the last is at
/// least [`fwer_bound`]. The sequence is non-increasing.
pub fn bound_chain(problem: &GatekeepingProblem, nulls: &NullConfiguration) -> Vec<f64> {
    let star = worst_case_levels(problem, nulls);
    (1..problem.family_count())
        .map(|leading| partition_bound_unchecked(problem, nulls, &star, leading))
        .collect()
}

fn partition_bound_unchecked(
    problem: &GatekeepingProblem,
    nulls: &NullConfiguration,
    star: &WorstCaseLevels,
    leading: usize,
) -> f64 {
    let m = problem.family_count();
    let g = problem.transition();
    let mut total = 0.0;
    for i in 0..leading {
        let t = nulls.fraction(i);
        let out: f64 = (leading..m).map(|l| g.get(i, l)).sum();
        total += (t + (1.0 - t) * out) * star.get(i);
    }
    for l in leading..m {
        let t = nulls.fraction(l);
        let within: f64 = (leading..m).map(|i| g.get(l, i)).sum();
        total += (t + (1.0 - t) * within) * problem.family(l).initial_level();
    }
    total
}

/// Worst-case levels for the two-layer procedure, first layer then second.
pub fn worst_case_levels_two_layer(
    problem: &TwoLayerProblem,
    nulls: &NullConfiguration,
) -> WorstCaseLevels {
    let m1 = problem.first().len();
    let first: Vec<f64> = problem
        .first()
        .iter()
        .enumerate()
        .map(|(j, fam)| {
            let mut level = fam.initial_level();
            for (l, below) in problem.second().iter().enumerate() {
                level += (1.0 - nulls.fraction(m1 + l)) * problem.up(l, j) * below.initial_level();
            }
            level
        })
        .collect();
    let second: Vec<f64> = problem
        .second()
        .iter()
        .enumerate()
        .map(|(l, fam)| {
            let mut level = fam.initial_level();
            for (j, &above) in first.iter().enumerate() {
                level += (1.0 - nulls.fraction(j)) * problem.down(j, l) * above;
            }
            level
        })
        .collect();
    WorstCaseLevels(first.into_iter().chain(second).collect())
}

pub fn fwer_bound_two_layer(problem: &TwoLayerProblem, nulls: &NullConfiguration) -> f64 {
    let star = worst_case_levels_two_layer(problem, nulls);
    star.as_slice()
        .iter()
        .enumerate()
        .map(|(i, &level)| nulls.fraction(i) * level)
        .sum()
}

/// For every recorded stage at whose close no true null has been rejected,
/// checks that every family's level is at most its worst-case level plus
/// `slack`. Returns the offending `(stage, family)` pairs.
pub fn levels_within_worst_case(
    trail: &AuditTrail,
    nulls: &NullConfiguration,
    star: &WorstCaseLevels,
    slack: f64,
) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for stage in trail.stages() {
        let clean = stage
            .families
            .iter()
            .enumerate()
            .all(|(i, f)| f.rejected.is_disjoint(&nulls.sets()[i]));
        if !clean {
            continue;
        }
        for (i, f) in stage.families.iter().enumerate() {
            if f.level > star.get(i) + slack {
                out.push((stage.stage, i));
            }
        }
    }
    out
}
