//! Property sweeps over random problems. Each proptest case draws a seed and
//! builds the instance from it, so shrinking reports a reproducible seed.

use std::collections::BTreeSet;

use gatekeeping::verify::random::{
    random_nulls, random_p_values, random_problem, random_simplex, random_two_layer,
};
use gatekeeping::verify::{
    bound_chain, clopper_pearson_upper, fwer_bound, levels_within_worst_case, monte_carlo_fwer,
    worst_case_levels, DependenceModel, Effect, NullConfiguration, SimTarget,
};
use gatekeeping::{
    run_procedure, run_two_layer, stage1_level, stagek_level, two_family_problem, AuditTrail,
    EngineOptions, FamilySpec, GatekeepingProblem, PValueSet, TransitionMatrix, TwoLayerProblem,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn shrink_p<R: Rng>(rng: &mut R, p: &PValueSet) -> PValueSet {
    let values = p
        .families()
        .iter()
        .map(|f| {
            f.iter()
                .map(|&x| {
                    if rng.random_bool(0.5) {
                        x * rng.random::<f64>()
                    } else {
                        x
                    }
                })
                .collect()
        })
        .collect();
    PValueSet::new(values).unwrap()
}

fn contains_all(big: &[BTreeSet<usize>], small: &[BTreeSet<usize>]) -> bool {
    big.iter().zip(small).all(|(b, s)| b.is_superset(s))
}

/// Shuffles p-values inside each family; returns the new values and, per
/// family, where each original position went.
fn shuffle_within<R: Rng>(rng: &mut R, p: &PValueSet) -> (PValueSet, Vec<Vec<usize>>) {
    let mut maps = Vec::new();
    let mut values = Vec::new();
    for f in p.families() {
        let mut order: Vec<usize> = (0..f.len()).collect();
        order.shuffle(rng);
        let mut moved = vec![0.0; f.len()];
        for (from, &to) in order.iter().enumerate() {
            moved[to] = f[from];
        }
        values.push(moved);
        maps.push(order);
    }
    (PValueSet::new(values).unwrap(), maps)
}

fn same_levels(a: &AuditTrail, b: &AuditTrail) -> bool {
    a.stage_count() == b.stage_count()
        && a.stages().iter().zip(b.stages()).all(|(x, y)| {
            x.families
                .iter()
                .zip(&y.families)
                .all(|(f, g)| f.level == g.level)
        })
}

fn mapped(sets: &[BTreeSet<usize>], maps: &[Vec<usize>]) -> Vec<BTreeSet<usize>> {
    sets.iter()
        .zip(maps)
        .map(|(s, m)| s.iter().map(|&h| m[h]).collect())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn smaller_p_values_never_lose_rejections(seed in any::<u64>()) {
        let mut r = rng(seed);
        let options = EngineOptions::default();
        let problem = random_problem(&mut r, 2..=6);
        let p = random_p_values(&mut r, &problem.sizes());
        let q = shrink_p(&mut r, &p);
        let a = run_procedure(&problem, &p, &options).unwrap();
        let b = run_procedure(&problem, &q, &options).unwrap();
        prop_assert!(contains_all(b.rejected(), a.rejected()));

        let two = random_two_layer(&mut r);
        let p = random_p_values(&mut r, &two.sizes());
        let q = shrink_p(&mut r, &p);
        let a = run_two_layer(&two, &p, &options).unwrap();
        let b = run_two_layer(&two, &q, &options).unwrap();
        prop_assert!(contains_all(b.rejected(), a.rejected()));
    }

    #[test]
    fn trails_are_nested_and_terminate(seed in any::<u64>()) {
        let mut r = rng(seed);
        let options = EngineOptions::default();
        let problem = random_problem(&mut r, 2..=6);
        let p = random_p_values(&mut r, &problem.sizes());
        let trail = run_procedure(&problem, &p, &options).unwrap();
        prop_assert_eq!(trail.structural_violations(), Vec::<String>::new());
        prop_assert!(trail.stage_count() <= problem.hypothesis_count() + 1);

        let two = random_two_layer(&mut r);
        let p = random_p_values(&mut r, &two.sizes());
        let trail = run_two_layer(&two, &p, &options).unwrap();
        prop_assert_eq!(trail.structural_violations(), Vec::<String>::new());
        prop_assert!(trail.stage_count() <= two.hypothesis_count() + 1);
    }

    #[test]
    fn level_helpers_read_only_their_inputs(seed in any::<u64>()) {
        let mut r = rng(seed);
        let problem = random_problem(&mut r, 2..=6);
        let m = problem.family_count();
        let i = r.random_range(0..m);
        let levels: Vec<f64> = (0..m).map(|_| r.random::<f64>() * 0.1).collect();
        let counts: Vec<usize> = problem.sizes().iter().map(|&n| r.random_range(0..=n)).collect();
        let previous: Vec<usize> = problem.sizes().iter().map(|&n| r.random_range(0..=n)).collect();

        let mut junk_levels = levels.clone();
        let mut junk_counts = counts.clone();
        for k in i..m {
            junk_levels[k] = 1e6;
            junk_counts[k] = 7;
        }
        let mut junk_previous = previous.clone();
        for slot in junk_previous.iter_mut().take(i + 1) {
            *slot = 9;
        }
        prop_assert_eq!(
            stage1_level(&problem, i, &levels, &counts),
            stage1_level(&problem, i, &junk_levels, &junk_counts)
        );
        prop_assert_eq!(
            stagek_level(&problem, i, &levels, &counts, &previous),
            stagek_level(&problem, i, &junk_levels, &junk_counts, &junk_previous)
        );
    }

    #[test]
    fn shuffling_within_a_family_only_relabels(seed in any::<u64>()) {
        let mut r = rng(seed);
        let options = EngineOptions::default();
        let problem = random_problem(&mut r, 2..=6);
        let p = random_p_values(&mut r, &problem.sizes());
        let (q, maps) = shuffle_within(&mut r, &p);
        let a = run_procedure(&problem, &p, &options).unwrap();
        let b = run_procedure(&problem, &q, &options).unwrap();
        prop_assert!(same_levels(&a, &b));
        prop_assert_eq!(mapped(a.rejected(), &maps), b.rejected().to_vec());

        let two = random_two_layer(&mut r);
        let p = random_p_values(&mut r, &two.sizes());
        let (q, maps) = shuffle_within(&mut r, &p);
        let a = run_two_layer(&two, &p, &options).unwrap();
        let b = run_two_layer(&two, &q, &options).unwrap();
        prop_assert!(same_levels(&a, &b));
        prop_assert_eq!(mapped(a.rejected(), &maps), b.rejected().to_vec());
    }

    #[test]
    fn all_level_on_the_first_family_gains_nothing_from_retesting(seed in any::<u64>()) {
        let mut r = rng(seed);
        let m = r.random_range(2..=6);
        let alpha = r.random_range(0.01..=0.1);
        let families = (0..m)
            .map(|i| {
                let level = if i == 0 { alpha } else { 0.0 };
                FamilySpec::numbered(i + 1, r.random_range(1..=4), level).unwrap()
            })
            .collect();
        let g = gatekeeping::verify::random::random_transition(&mut r, m);
        let problem = GatekeepingProblem::new(families, g, alpha).unwrap();
        let p = random_p_values(&mut r, &problem.sizes());
        let trail = run_procedure(&problem, &p, &EngineOptions::default()).unwrap();
        let first: Vec<BTreeSet<usize>> = trail.stages()[0].families.iter().map(|f| f.rejected.clone()).collect();
        prop_assert_eq!(trail.rejected().to_vec(), first);
        prop_assert!(trail.stage_count() <= 2);
    }

    #[test]
    fn reordering_layer_one_families_only_relabels(seed in any::<u64>()) {
        let mut r = rng(seed);
        let two = random_two_layer(&mut r);
        let m1 = two.first().len();
        let mut order: Vec<usize> = (0..m1).collect();
        order.shuffle(&mut r);
        let first = order.iter().map(|&j| two.first()[j].clone()).collect();
        let down = order.iter().map(|&j| two.down_rows()[j].clone()).collect();
        let up = two.up_rows().iter().map(|row| order.iter().map(|&j| row[j]).collect()).collect();
        let permuted = TwoLayerProblem::new(first, two.second().to_vec(), down, up, two.alpha()).unwrap();

        let p = random_p_values(&mut r, &two.sizes());
        let mut q = Vec::new();
        for &j in &order {
            q.push(p.family(j).to_vec());
        }
        q.extend(p.families()[m1..].iter().cloned());
        let q = PValueSet::new(q).unwrap();

        let options = EngineOptions::default();
        let a = run_two_layer(&two, &p, &options).unwrap();
        let b = run_two_layer(&permuted, &q, &options).unwrap();
        for (pos, &j) in order.iter().enumerate() {
            prop_assert_eq!(&a.rejected()[j], &b.rejected()[pos]);
        }
        prop_assert_eq!(&a.rejected()[m1..], &b.rejected()[m1..]);
        prop_assert_eq!(a.stage_count(), b.stage_count());
    }

    #[test]
    fn levels_stay_below_worst_case_until_a_null_falls(seed in any::<u64>()) {
        let mut r = rng(seed);
        let problem = random_problem(&mut r, 2..=6);
        let nulls = random_nulls(&mut r, &problem.sizes());
        let star = worst_case_levels(&problem, &nulls);
        let p = random_p_values(&mut r, &problem.sizes());
        let trail = run_procedure(&problem, &p, &EngineOptions::default()).unwrap();
        prop_assert_eq!(levels_within_worst_case(&trail, &nulls, &star, 1e-12), Vec::new());
    }

    #[test]
    fn bound_chain_runs_from_alpha_down_to_the_bound(seed in any::<u64>()) {
        let mut r = rng(seed);
        let problem = random_problem(&mut r, 3..=6);
        let nulls = random_nulls(&mut r, &problem.sizes());
        let chain = bound_chain(&problem, &nulls);
        prop_assert_eq!(chain.len(), problem.family_count() - 1);
        prop_assert!((chain[0] - problem.alpha()).abs() <= 1e-12);
        for pair in chain.windows(2) {
            prop_assert!(pair[1] <= pair[0] + 1e-12);
        }
        prop_assert!(fwer_bound(&problem, &nulls) <= chain[chain.len() - 1] + 1e-12);
    }
}

/// Lower end of the two-sided picture: a 99% lower confidence bound above
/// alpha would be significant evidence of lost control.
fn lower_cb_99(x: u64, n: u64) -> f64 {
    1.0 - clopper_pearson_upper(n - x, n, 0.99)
}

fn dose_response() -> GatekeepingProblem {
    let g = TransitionMatrix::new(vec![
        vec![0.0, 0.5, 0.5],
        vec![0.5, 0.0, 0.5],
        vec![0.5, 0.5, 0.0],
    ])
    .unwrap();
    let families = vec![
        FamilySpec::numbered(1, 2, 0.025 / 2.0).unwrap(),
        FamilySpec::numbered(2, 2, 0.025 / 3.0).unwrap(),
        FamilySpec::numbered(3, 2, 0.025 / 6.0).unwrap(),
    ];
    GatekeepingProblem::new(families, g, 0.025).unwrap()
}

#[test]
fn simulated_fwer_shows_no_excess_across_models() {
    const REPS: u64 = 20_000;
    let two_family = two_family_problem(2, 2, 0.04, 0.01, 0.05).unwrap();
    let three_family = dose_response();
    let mut r = rng(11);
    let mut layered = random_two_layer(&mut r);
    while layered.hypothesis_count() < 4 {
        layered = random_two_layer(&mut r);
    }
    let targets = [
        SimTarget::Sequential(&two_family),
        SimTarget::Sequential(&three_family),
        SimTarget::TwoLayer(&layered),
    ];
    let models = [
        DependenceModel::Independent,
        DependenceModel::Equicorrelated { rho: 0.3 },
        DependenceModel::Equicorrelated { rho: 0.5 },
        DependenceModel::Equicorrelated { rho: 0.8 },
    ];
    for (t, target) in targets.iter().enumerate() {
        let sizes = target.sizes();
        let mixed =
            NullConfiguration::leading(&sizes, &sizes.iter().map(|&n| n / 2).collect::<Vec<_>>())
                .unwrap();
        for nulls in [NullConfiguration::all_null(&sizes), mixed] {
            for (k, &model) in models.iter().enumerate() {
                let seed = 100 + (t * 10 + k) as u64;
                let report =
                    monte_carlo_fwer(*target, &nulls, model, Effect::default(), REPS, seed)
                        .unwrap();
                let lower = lower_cb_99(report.false_rejection_reps, REPS);
                assert!(
                    lower <= target.alpha(),
                    "target {t}, {model}: empirical {} with lower bound {lower} above alpha {}",
                    report.empirical_fwer,
                    target.alpha()
                );
            }
        }
    }
}

#[test]
fn equivalent_two_family_forms_share_outcomes_for_random_splits() {
    let mut r = rng(3);
    for _ in 0..200 {
        let alpha = r.random_range(0.01..=0.1);
        let split = random_simplex(&mut r, 2, 0.2);
        let problem = two_family_problem(3, 2, alpha * split[0], alpha * split[1], alpha).unwrap();
        let p = random_p_values(&mut r, &[3, 2]);
        let a = run_procedure(&problem, &p, &EngineOptions::default()).unwrap();
        let b = run_procedure(&problem, &p, &EngineOptions::default().summary_only()).unwrap();
        assert_eq!(a.rejected(), b.rejected());
        assert_eq!(a.termination(), b.termination());
    }
}
