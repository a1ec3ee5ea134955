//! Random instances for property sweeps.
//!
//! Problems have 2..=6 families of 1..=4 hypotheses. Initial levels and
//! transition rows come from random simplexes in which each coordinate is
//! zeroed with some probability, so sweeps also visit zero-level families,
//! rows with zero off-diagonal entries and singleton families.

use std::collections::BTreeSet;
use std::ops::RangeInclusive;

use rand::Rng;

use crate::problem::{FamilySpec, GatekeepingProblem, PValueSet, TransitionMatrix};
use crate::trail::Layer;
use crate::two_layer::{layered_family, TwoLayerProblem};

use super::nulls::NullConfiguration;

const ZERO_PROBABILITY: f64 = 0.2;

/// Normalised exponential weights over `k` coordinates; each coordinate is
/// zero with probability `zero_probability`, but never all of them.
pub fn random_simplex<R: Rng + ?Sized>(rng: &mut R, k: usize, zero_probability: f64) -> Vec<f64> {
    assert!(k >= 1);
    loop {
        let w: Vec<f64> = (0..k)
            .map(|_| {
                if rng.random::<f64>() < zero_probability {
                    0.0
                } else {
                    -(1.0 - rng.random::<f64>()).ln()
                }
            })
            .collect();
        let total: f64 = w.iter().sum();
        if total > 0.0 {
            return w.into_iter().map(|x| x / total).collect();
        }
    }
}

/// A global level drawn uniformly from `[0.005, 0.2]`.
pub fn random_alpha<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random_range(0.005..=0.2)
}

/// Random row-stochastic matrix with zero diagonal.
pub fn random_transition<R: Rng + ?Sized>(rng: &mut R, m: usize) -> TransitionMatrix {
    let rows = (0..m)
        .map(|i| {
            let off = random_simplex(rng, m - 1, ZERO_PROBABILITY);
            let mut row = Vec::with_capacity(m);
            row.extend_from_slice(&off[..i]);
            row.push(0.0);
            row.extend_from_slice(&off[i..]);
            row
        })
        .collect();
    TransitionMatrix::new(rows).expect("generated matrix is valid")
}

pub fn random_problem<R: Rng + ?Sized>(
    rng: &mut R,
    families: RangeInclusive<usize>,
) -> GatekeepingProblem {
    let m = rng.random_range(families);
    let alpha = random_alpha(rng);
    let shares = random_simplex(rng, m, ZERO_PROBABILITY);
    let fams = shares
        .iter()
        .enumerate()
        .map(|(i, s)| FamilySpec::numbered(i + 1, rng.random_range(1..=4), alpha * s).unwrap())
        .collect();
    GatekeepingProblem::new(fams, random_transition(rng, m), alpha)
        .expect("generated problem is valid")
}

/// Two-layer problem with 1..=3 families per layer.
pub fn random_two_layer<R: Rng + ?Sized>(rng: &mut R) -> TwoLayerProblem {
    let m1 = rng.random_range(1..=3);
    let m2 = rng.random_range(1..=3);
    let alpha = random_alpha(rng);
    let shares = random_simplex(rng, m1 + m2, ZERO_PROBABILITY);
    let first = (0..m1)
        .map(|j| {
            layered_family(Layer::First, j, rng.random_range(1..=4), alpha * shares[j]).unwrap()
        })
        .collect();
    let second = (0..m2)
        .map(|l| {
            layered_family(
                Layer::Second,
                l,
                rng.random_range(1..=4),
                alpha * shares[m1 + l],
            )
            .unwrap()
        })
        .collect();
    let down = (0..m1)
        .map(|_| random_simplex(rng, m2, ZERO_PROBABILITY))
        .collect();
    let up = (0..m2)
        .map(|_| random_simplex(rng, m1, ZERO_PROBABILITY))
        .collect();
    TwoLayerProblem::new(first, second, down, up, alpha).expect("generated problem is valid")
}

/// Each hypothesis is a true null independently with probability 1/2.
pub fn random_nulls<R: Rng + ?Sized>(rng: &mut R, sizes: &[usize]) -> NullConfiguration {
    let sets = sizes
        .iter()
        .map(|&n| {
            (0..n)
                .filter(|_| rng.random_bool(0.5))
                .collect::<BTreeSet<usize>>()
        })
        .collect();
    NullConfiguration::new(sizes, sets).expect("generated nulls are in range")
}

/// P-values mixing tiny, moderate and uniform draws so that runs exercise
/// several retesting stages.
pub fn random_p_values<R: Rng + ?Sized>(rng: &mut R, sizes: &[usize]) -> PValueSet {
    let values = sizes
        .iter()
        .map(|&n| {
            (0..n)
                .map(|_| match rng.random_range(0..3) {
                    0 => rng.random_range(0.0..0.01),
                    1 => rng.random_range(0.0..0.1),
                    _ => rng.random::<f64>(),
                })
                .collect()
        })
        .collect();
    PValueSet::new(values).expect("draws lie in [0, 1]")
}
