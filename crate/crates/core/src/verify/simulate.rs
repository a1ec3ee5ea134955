//! Monte Carlo estimation of the global FWER.
//!
//! Replication `r` draws its p-values from a ChaCha8 generator seeded with
//! the report seed and switched to stream `r`, so every replication is
//! reproducible on its own and the result does not depend on how many
//! worker threads share the work.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use statrs::distribution::{Beta, ContinuousCDF};
use statrs::function::erf::erfc;

use crate::error::{GatekeepingError, Result};
use crate::problem::{GatekeepingProblem, PValueSet};
use crate::sequential::{run_procedure, EngineOptions};
use crate::two_layer::{run_two_layer, TwoLayerProblem};

use super::nulls::NullConfiguration;

/// Generator contract recorded in every report.
pub const GENERATOR: &str = "chacha8(seed_from_u64(seed), stream = replication index)";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DependenceModel {
    /// Independent p-values. True nulls are Uniform(0, 1).
    Independent,
    /// One-factor equicorrelated normal test statistics
    /// `Z = sqrt(rho) W + sqrt(1 - rho) e + shift`, `p = 1 - Phi(Z)`.
    Equicorrelated { rho: f64 },
}

impl DependenceModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DependenceModel::Independent => Ok(()),
            DependenceModel::Equicorrelated { rho } if (0.0..1.0).contains(&rho) => Ok(()),
            DependenceModel::Equicorrelated { rho } => {
                Err(GatekeepingError::InvalidModelParameter(format!(
                    "equicorrelation rho = {rho} must lie in [0, 1)"
                )))
            }
        }
    }
}

impl fmt::Display for DependenceModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DependenceModel::Independent => f.write_str("independent"),
            DependenceModel::Equicorrelated { rho } => write!(f, "equicorr:{rho}"),
        }
    }
}

/// Distribution of false-null p-values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Effect {
    /// One-sided normal p-value with the test statistic shifted by `delta`.
    MeanShift(f64),
    /// Every false null gets this p-value.
    Fixed(f64),
}

impl Default for Effect {
    fn default() -> Self {
        Effect::MeanShift(3.0)
    }
}

impl Effect {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Effect::MeanShift(d) if d.is_finite() => Ok(()),
            Effect::Fixed(p) if (0.0..=1.0).contains(&p) => Ok(()),
            other => Err(GatekeepingError::InvalidModelParameter(format!(
                "bad effect {other}"
            ))),
        }
    }

    fn shift(&self) -> f64 {
        match *self {
            Effect::MeanShift(d) => d,
            Effect::Fixed(_) => 0.0,
        }
    }
}

impl fmt::Display for Effect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Effect::MeanShift(d) => write!(f, "mean-shift:{d}"),
            Effect::Fixed(p) => write!(f, "fixed:{p}"),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum SimTarget<'a> {
    Sequential(&'a GatekeepingProblem),
    TwoLayer(&'a TwoLayerProblem),
}

impl SimTarget<'_> {
    pub fn sizes(&self) -> Vec<usize> {
        match self {
            SimTarget::Sequential(p) => p.sizes(),
            SimTarget::TwoLayer(p) => p.sizes(),
        }
    }

    pub fn alpha(&self) -> f64 {
        match self {
            SimTarget::Sequential(p) => p.alpha(),
            SimTarget::TwoLayer(p) => p.alpha(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    pub reps: u64,
    pub seed: u64,
    pub generator: &'static str,
    pub model: DependenceModel,
    pub effect: Effect,
    /// Replications with at least one true null rejected.
    pub false_rejection_reps: u64,
    pub empirical_fwer: f64,
    /// One-sided exact (Clopper-Pearson) 99% upper confidence bound.
    pub upper_cb_99: f64,
}

impl SimulationReport {
    /// Flat `key=value` lines, in a fixed order.
    pub fn to_record(&self) -> String {
        format!(
            "empirical_fwer={}\nupper_cb_99={}\nfalse_rejection_reps={}\nreps={}\nseed={}\nmodel={}\neffect={}\ngenerator={}\n",
            self.empirical_fwer,
            self.upper_cb_99,
            self.false_rejection_reps,
            self.reps,
            self.seed,
            self.model,
            self.effect,
            self.generator,
        )
    }
}

/// One-sided exact binomial upper confidence bound: the `p` at which
/// observing `successes` or fewer out of `trials` has probability
/// `1 - confidence`.
pub fn clopper_pearson_upper(successes: u64, trials: u64, confidence: f64) -> f64 {
    assert!(trials > 0 && successes <= trials);
    if successes == trials {
        return 1.0;
    }
    let beta = Beta::new(successes as f64 + 1.0, (trials - successes) as f64)
        .expect("shape parameters are positive");
    beta.inverse_cdf(confidence)
}

fn upper_tail(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

fn draw_p_values(
    rng: &mut ChaCha8Rng,
    sizes: &[usize],
    nulls: &NullConfiguration,
    model: DependenceModel,
    effect: Effect,
) -> Vec<Vec<f64>> {
    let (common, load, own) = match model {
        DependenceModel::Independent => (0.0, 0.0, 1.0),
        DependenceModel::Equicorrelated { rho } => {
            let w: f64 = rng.sample(StandardNormal);
            (w, rho.sqrt(), (1.0 - rho).sqrt())
        }
    };
    sizes
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            (0..n)
                .map(|j| {
                    let null = nulls.is_null(i, j);
                    match (model, null, effect) {
                        (DependenceModel::Independent, true, _) => rng.random::<f64>(),
                        (_, false, Effect::Fixed(p)) => p,
                        _ => {
                            let e: f64 = rng.sample(StandardNormal);
                            let shift = if null { 0.0 } else { effect.shift() };
                            upper_tail(load * common + own * e + shift)
                        }
                    }
                })
                .collect()
        })
        .collect()
}

/// Runs the engine `reps` times on fresh p-values and reports how often at
/// least one true null was rejected.
pub fn monte_carlo_fwer(
    target: SimTarget<'_>,
    nulls: &NullConfiguration,
    model: DependenceModel,
    effect: Effect,
    reps: u64,
    seed: u64,
) -> Result<SimulationReport> {
    if reps == 0 {
        return Err(GatekeepingError::InvalidReplications);
    }
    model.validate()?;
    effect.validate()?;
    let sizes = target.sizes();
    if nulls.sizes() != sizes.as_slice() {
        return Err(GatekeepingError::DimensionMismatch {
            what: "null configuration family sizes",
            expected: sizes.len(),
            found: nulls.sizes().len(),
        });
    }
    let options = EngineOptions::default().summary_only();

    let hits = (0..reps)
        .into_par_iter()
        .map(|r| -> Result<u64> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r);
            let p = PValueSet::new(draw_p_values(&mut rng, &sizes, nulls, model, effect))?;
            let trail = match target {
                SimTarget::Sequential(problem) => run_procedure(problem, &p, &options)?,
                SimTarget::TwoLayer(problem) => run_two_layer(problem, &p, &options)?,
            };
            Ok(u64::from(nulls.has_false_rejection(trail.rejected())))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;

    Ok(SimulationReport {
        reps,
        seed,
        generator: GENERATOR,
        model,
        effect,
        false_rejection_reps: hits,
        empirical_fwer: hits as f64 / reps as f64,
        upper_cb_99: clopper_pearson_upper(hits, reps, 0.99),
    })
}
